//! Products, categories and the catalog CSV format.
//!
//! The catalog file has the header
//! `product_id,name,category_id,category_name,unit_margin,cost`. Money columns
//! are integers in minor units and lines starting with `#` are skipped.
//! Categories are derived from the `category_id` column, so every product
//! belongs to exactly one category.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::ItemId;
use crate::money::Money;

pub const CATALOG_HEADER: [&str; 6] = [
    "product_id",
    "name",
    "category_id",
    "category_name",
    "unit_margin",
    "cost",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub name: String,
    pub category_id: String,
    /// Margin earned per unit sold.
    pub unit_margin: Money,
    /// Fixed inventory and handling cost of carrying the product in the
    /// selected set.
    pub cost: Money,
}

impl Product {
    pub fn new(
        id: impl Into<String>,
        category_id: impl Into<String>,
        unit_margin: i64,
        cost: i64,
    ) -> Product {
        let id = id.into();
        Product {
            name: id.clone(),
            id,
            category_id: category_id.into(),
            unit_margin: Money(unit_margin),
            cost: Money(cost),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub id: String,
    pub name: String,
    /// Members in ascending product-id order.
    pub members: Vec<ItemId>,
}

/// An immutable product catalog.
///
/// Products are stored sorted by id and addressed by dense [`ItemId`]s, so
/// comparing item ids orders products the same way as comparing their
/// string ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    products: Vec<Product>,
    product_category: Vec<usize>,
    categories: Vec<Category>,
    by_id: HashMap<String, ItemId>,
}

impl Catalog {
    /// Builds a catalog whose category names equal their ids.
    pub fn from_products(products: Vec<Product>) -> Result<Catalog> {
        Catalog::with_category_names(products, &BTreeMap::new())
    }

    pub fn with_category_names(
        products: Vec<Product>,
        names: &BTreeMap<String, String>,
    ) -> Result<Catalog> {
        let lines: Vec<u64> = (1..=products.len() as u64).collect();
        Catalog::build(products, &lines, names)
    }

    fn build(
        mut products: Vec<Product>,
        lines: &[u64],
        names: &BTreeMap<String, String>,
    ) -> Result<Catalog> {
        if products.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let mut seen: HashMap<&str, u64> = HashMap::new();
        for (product, &line) in products.iter().zip(lines) {
            if product.cost < Money::ZERO {
                return Err(Error::Parse {
                    line,
                    message: format!("negative cost for product {:?}", product.id),
                });
            }
            if seen.insert(product.id.as_str(), line).is_some() {
                return Err(Error::DuplicateProduct {
                    id: product.id.clone(),
                    line,
                });
            }
        }
        products.sort_by(|a, b| a.id.cmp(&b.id));

        let mut members: BTreeMap<&str, Vec<ItemId>> = BTreeMap::new();
        for (i, p) in products.iter().enumerate() {
            members
                .entry(p.category_id.as_str())
                .or_default()
                .push(ItemId(i as u32));
        }
        let categories: Vec<Category> = members
            .into_iter()
            .map(|(id, members)| Category {
                id: id.to_string(),
                name: names.get(id).cloned().unwrap_or_else(|| id.to_string()),
                members,
            })
            .collect();
        let cat_index: HashMap<&str, usize> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.as_str(), i))
            .collect();
        let product_category = products
            .iter()
            .map(|p| cat_index[p.category_id.as_str()])
            .collect();
        let by_id = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), ItemId(i as u32)))
            .collect();
        Ok(Catalog {
            products,
            product_category,
            categories,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn product(&self, item: ItemId) -> &Product {
        &self.products[item.index()]
    }

    pub fn item_id(&self, product_id: &str) -> Option<ItemId> {
        self.by_id.get(product_id).copied()
    }

    /// Index into [`Catalog::categories`] of the item's category.
    pub fn category_of(&self, item: ItemId) -> usize {
        self.product_category[item.index()]
    }

    pub fn category_index(&self, category_id: &str) -> Option<usize> {
        self.categories
            .binary_search_by(|c| c.id.as_str().cmp(category_id))
            .ok()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.products.len() as u32).map(ItemId)
    }

    /// Resolves a list of product ids, failing on the first unknown one.
    pub fn resolve<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<ItemId>> {
        ids.iter()
            .map(|id| {
                self.item_id(id.as_ref())
                    .ok_or_else(|| Error::UnknownProduct {
                        id: id.as_ref().to_string(),
                        line: 0,
                    })
            })
            .collect()
    }

    /// Serializes the catalog in the CSV layout accepted by [`load_catalog`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CATALOG_HEADER).map_err(csv_err)?;
        for (i, p) in self.products.iter().enumerate() {
            let cat = &self.categories[self.product_category[i]];
            w.write_record([
                p.id.as_str(),
                p.name.as_str(),
                cat.id.as_str(),
                cat.name.as_str(),
                &p.unit_margin.to_string(),
                &p.cost.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub(crate) fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(source)
}

/// Reads records, checking the header row and the column count of every
/// data row. Yields `(line, record)` pairs.
pub(crate) fn read_table<R: Read>(
    source: R,
    header: &[&str],
) -> Result<Option<Vec<(u64, csv::StringRecord)>>> {
    let mut rdr = reader(source);
    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if !saw_header {
            let got: Vec<&str> = record.iter().map(str::trim).collect();
            if got.len() < header.len() || got[..header.len()] != *header {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{}`", header.join(",")),
                });
            }
            saw_header = true;
            continue;
        }
        rows.push((line, record));
    }
    Ok(saw_header.then_some(rows))
}

pub(crate) fn parse_int(field: &str, column: &str, line: u64) -> Result<i64> {
    field.trim().parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {column} {:?}: expected an integer", field),
    })
}

/// Parses a catalog CSV.
pub fn load_catalog<R: Read>(source: R) -> Result<Catalog> {
    let Some(rows) = read_table(source, &CATALOG_HEADER)? else {
        return Err(Error::EmptyCatalog);
    };
    let mut products = Vec::with_capacity(rows.len());
    let mut lines = Vec::with_capacity(rows.len());
    let mut names = BTreeMap::new();
    for (line, rec) in rows {
        if rec.len() != CATALOG_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    CATALOG_HEADER.len(),
                    rec.len()
                ),
            });
        }
        let id = rec[0].trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty product_id".into(),
            });
        }
        let category_id = rec[2].trim().to_string();
        names
            .entry(category_id.clone())
            .or_insert_with(|| rec[3].trim().to_string());
        products.push(Product {
            id: id.to_string(),
            name: rec[1].trim().to_string(),
            category_id,
            unit_margin: Money(parse_int(&rec[4], "unit_margin", line)?),
            cost: Money(parse_int(&rec[5], "cost", line)?),
        });
        lines.push(line);
    }
    Catalog::build(products, &lines, &names)
}
