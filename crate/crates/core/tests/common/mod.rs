#![allow(dead_code)]

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};
use profset::itemset::sorted_difference;
use profset::optimizer::{ModelItem, ModelSet};
use profset::{Catalog, FrequentSetIndex, ItemId, Money, Product, Transaction, TransactionDb};
use rand::Rng;

/// `n` products `p00..` spread round-robin over `ncat` categories.
pub fn catalog(n: usize, ncat: usize, rng: &mut impl Rng) -> Catalog {
    Catalog::from_products(
        (0..n)
            .map(|i| {
                Product::new(
                    format!("p{i:02}"),
                    format!("c{}", i % ncat),
                    rng.random_range(1..50),
                    rng.random_range(0..20),
                )
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_db(
    catalog: &Catalog,
    baskets: usize,
    max_basket: usize,
    rng: &mut impl Rng,
) -> TransactionDb {
    let n = catalog.len() as u32;
    let txns = (0..baskets)
        .map(|t| {
            let size = rng.random_range(1..=max_basket);
            Transaction::with_lines(
                format!("t{t:05}"),
                (0..size).map(|_| (ItemId(rng.random_range(0..n)), rng.random_range(1..=3))),
            )
        })
        .collect();
    TransactionDb::new(txns).unwrap()
}

/// Support of every non-empty itemset over the catalog, counted directly.
pub fn brute_force_frequent(
    db: &TransactionDb,
    n_items: usize,
    minsup: u64,
) -> BTreeMap<Vec<ItemId>, u64> {
    assert!(n_items <= 16);
    let baskets: Vec<u32> = db
        .transactions()
        .iter()
        .map(|t| t.items().iter().fold(0u32, |m, i| m | 1 << i.0))
        .collect();
    let mut out = BTreeMap::new();
    for mask in 1u32..1 << n_items {
        let support = baskets.iter().filter(|&&b| b & mask == mask).count() as u64;
        if support >= minsup {
            let items = (0..n_items as u32)
                .filter(|i| mask & 1 << i != 0)
                .map(ItemId)
                .collect();
            out.insert(items, support);
        }
    }
    out
}

pub fn index_as_map(index: &FrequentSetIndex) -> BTreeMap<Vec<ItemId>, u64> {
    index.iter().map(|(s, n)| (s.items().to_vec(), n)).collect()
}

/// Expected contributions of one basket, by enumerating every draw sequence
/// of the sampling procedure.
pub fn enumerate_expected(
    t: &Transaction,
    index: &FrequentSetIndex,
    catalog: &Catalog,
) -> (
    BTreeMap<Vec<ItemId>, BigRational>,
    BTreeMap<ItemId, BigRational>,
) {
    fn go(
        remaining: Vec<ItemId>,
        p: BigRational,
        t: &Transaction,
        index: &FrequentSetIndex,
        catalog: &Catalog,
        sets: &mut BTreeMap<Vec<ItemId>, BigRational>,
        residuals: &mut BTreeMap<ItemId, BigRational>,
    ) {
        let money = |m: Money| BigRational::from_integer(BigInt::from(m.0));
        if remaining.is_empty() {
            return;
        }
        if index.contains(&remaining) {
            let m = money(t.margin_of(&remaining, catalog));
            *sets.entry(remaining).or_insert_with(BigRational::zero) += p * m;
            return;
        }
        // cardinality-maximal frequent subsets, found without the index helpers
        let subsets: Vec<(Vec<ItemId>, u64)> = (1u64..1 << remaining.len())
            .map(|mask| {
                remaining
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & 1 << k != 0)
                    .map(|(_, &i)| i)
                    .collect::<Vec<_>>()
            })
            .filter_map(|s| index.support(&s).map(|n| (s, n)))
            .collect();
        let Some(top) = subsets.iter().map(|(s, _)| s.len()).max() else {
            for i in remaining {
                *residuals.entry(i).or_insert_with(BigRational::zero) +=
                    &p * money(t.line_margin(i, catalog));
            }
            return;
        };
        let maximal: Vec<_> = subsets
            .into_iter()
            .filter(|(s, _)| s.len() == top)
            .collect();
        let total: u64 = maximal.iter().map(|(_, n)| n).sum();
        for (s, n) in maximal {
            let q = &p * BigRational::new(BigInt::from(n), BigInt::from(total));
            let m = money(t.margin_of(&s, catalog));
            *sets.entry(s.clone()).or_insert_with(BigRational::zero) += &q * m;
            let rest = sorted_difference(&remaining, &s);
            go(rest, q, t, index, catalog, sets, residuals);
        }
    }
    let mut sets = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    go(
        t.items(),
        BigRational::one(),
        t,
        index,
        catalog,
        &mut sets,
        &mut residuals,
    );
    (sets, residuals)
}

/// Random model items over `ncat` categories with costs in `0..max_cost`.
pub fn model_items(n: usize, ncat: usize, max_cost: i64, rng: &mut impl Rng) -> Vec<ModelItem> {
    (0..n)
        .map(|i| ModelItem {
            product_id: format!("i{i:02}"),
            category_id: format!("k{}", rng.random_range(0..ncat)),
            cost: Money(rng.random_range(0..max_cost.max(1))),
        })
        .collect()
}

/// Random distinct sets of size 1..=max_len with margins in `lo..hi`.
pub fn model_sets(
    n: usize,
    count: usize,
    max_len: usize,
    lo: i64,
    hi: i64,
    rng: &mut impl Rng,
) -> Vec<ModelSet> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..count * 4 {
        if out.len() == count {
            break;
        }
        let len = rng.random_range(1..=max_len.min(n));
        let mut items: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        items.sort_unstable();
        items.dedup();
        if seen.insert(items.clone()) {
            out.push(ModelSet {
                items: items.iter().map(|i| format!("i{i:02}")).collect(),
                margin: Money(rng.random_range(lo..hi)),
            });
        }
    }
    out
}

/// A random model whose constraints admit at least one selection.
pub fn random_model(
    max_items: usize,
    max_sets: usize,
    rng: &mut impl Rng,
) -> profset::ProfsetModel {
    use profset::optimizer::ConstraintConfig;
    loop {
        let n = rng.random_range(1..=max_items);
        let ncat = rng.random_range(1..=n.min(5));
        let items = model_items(n, ncat, 15, rng);
        let sets = model_sets(n, rng.random_range(0..=max_sets), 4, -5, 40, rng);
        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for it in &items {
            *sizes.entry(&it.category_id).or_default() += 1;
        }
        let mut cfg = ConstraintConfig::new(rng.random_range(1..=n));
        for (&c, &size) in &sizes {
            let min = rng.random_range(0..=size.min(2));
            if min > 0 {
                cfg.item_min.insert(c.to_string(), min);
            }
            if rng.random_bool(0.3) {
                cfg.item_cap
                    .insert(c.to_string(), rng.random_range(min.max(1)..=size));
            }
        }
        if let Ok(m) = profset::ProfsetModel::new(items, sets, cfg) {
            return m;
        }
    }
}
