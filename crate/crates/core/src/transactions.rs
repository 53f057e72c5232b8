//! Market baskets and the basket CSV format
//! (`transaction_id,product_id,quantity`).

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crate::catalog::{csv_err, parse_int, read_table, Catalog};
use crate::error::{Error, Result};
use crate::itemset::ItemId;
use crate::money::Money;

pub const BASKET_HEADER: [&str; 3] = ["transaction_id", "product_id", "quantity"];

/// One market basket: product lines with positive quantities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub id: String,
    lines: BTreeMap<ItemId, u32>,
}

impl Transaction {
    pub fn new(id: impl Into<String>) -> Transaction {
        Transaction {
            id: id.into(),
            lines: BTreeMap::new(),
        }
    }

    /// Builds a transaction from `(item, quantity)` pairs; repeated items
    /// have their quantities summed and zero quantities are dropped.
    pub fn with_lines(
        id: impl Into<String>,
        lines: impl IntoIterator<Item = (ItemId, u32)>,
    ) -> Transaction {
        let mut t = Transaction::new(id);
        for (item, qty) in lines {
            t.add(item, qty);
        }
        t
    }

    pub fn add(&mut self, item: ItemId, quantity: u32) {
        if quantity > 0 {
            *self.lines.entry(item).or_insert(0) += quantity;
        }
    }

    pub fn lines(&self) -> &BTreeMap<ItemId, u32> {
        &self.lines
    }

    pub fn quantity(&self, item: ItemId) -> u32 {
        self.lines.get(&item).copied().unwrap_or(0)
    }

    /// The basket as an ascending set of items (quantities dropped).
    pub fn items(&self) -> Vec<ItemId> {
        self.lines.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Margin of one line: unit margin times quantity.
    pub fn line_margin(&self, item: ItemId, catalog: &Catalog) -> Money {
        catalog.product(item).unit_margin * i64::from(self.quantity(item))
    }

    /// Margin of the given items within this basket, at full line quantity.
    pub fn margin_of(&self, items: &[ItemId], catalog: &Catalog) -> Money {
        items.iter().map(|&i| self.line_margin(i, catalog)).sum()
    }
}

/// Margin of a whole basket: the sum over its lines of unit margin times
/// quantity.
pub fn transaction_margin(t: &Transaction, catalog: &Catalog) -> Money {
    t.lines
        .iter()
        .map(|(&item, &qty)| catalog.product(item).unit_margin * i64::from(qty))
        .sum()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDb {
    transactions: Vec<Transaction>,
}

impl TransactionDb {
    /// Fails when two transactions share an id.
    pub fn new(transactions: Vec<Transaction>) -> Result<TransactionDb> {
        let mut seen = HashMap::with_capacity(transactions.len());
        for t in &transactions {
            if seen.insert(t.id.as_str(), ()).is_some() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("duplicate transaction id {:?}", t.id),
                });
            }
        }
        Ok(TransactionDb { transactions })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn total_margin(&self, catalog: &Catalog) -> Money {
        self.transactions
            .iter()
            .map(|t| transaction_margin(t, catalog))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W, catalog: &Catalog) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BASKET_HEADER).map_err(csv_err)?;
        for t in &self.transactions {
            for (&item, qty) in &t.lines {
                w.write_record([
                    t.id.as_str(),
                    catalog.product(item).id.as_str(),
                    &qty.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a basket CSV, grouping rows by transaction id in order of first
/// appearance.
pub fn load_transactions<R: Read>(source: R, catalog: &Catalog) -> Result<TransactionDb> {
    let Some(rows) = read_table(source, &BASKET_HEADER)? else {
        return Err(Error::EmptyTransactions);
    };
    if rows.is_empty() {
        return Err(Error::EmptyTransactions);
    }
    let mut order: HashMap<String, usize> = HashMap::new();
    let mut transactions: Vec<Transaction> = Vec::new();
    for (line, rec) in rows {
        if rec.len() != BASKET_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 columns, found {}", rec.len()),
            });
        }
        let tid = rec[0].trim();
        if tid.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty transaction_id".into(),
            });
        }
        let pid = rec[1].trim();
        let item = catalog.item_id(pid).ok_or_else(|| Error::UnknownProduct {
            id: pid.to_string(),
            line,
        })?;
        let qty = parse_int(&rec[2], "quantity", line)?;
        if qty <= 0 || qty > i64::from(u32::MAX) {
            return Err(Error::Parse {
                line,
                message: format!("quantity must be a positive integer, got {qty}"),
            });
        }
        let slot = *order.entry(tid.to_string()).or_insert_with(|| {
            transactions.push(Transaction::new(tid));
            transactions.len() - 1
        });
        transactions[slot].add(item, qty as u32);
    }
    Ok(TransactionDb { transactions })
}
