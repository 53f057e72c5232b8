//! Frequent itemset mining and frequent-subset queries.
//!
//! Mining is level-wise Apriori: size-`k` candidates are joined from pairs
//! of frequent `(k-1)`-sets sharing a prefix, pruned when any `(k-1)`-subset
//! is infrequent, and counted by intersecting per-transaction bitsets. Each
//! level is counted in parallel but collected in candidate order, so the
//! result does not depend on the thread count.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::itemset::{ItemId, Itemset};
use crate::transactions::TransactionDb;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MineOptions {
    /// Largest itemset size to mine; `None` mines every size.
    pub max_len: Option<usize>,
}

/// All frequent itemsets of a database with their absolute support counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequentSetIndex {
    /// `levels[k - 1]` holds the frequent `k`-sets in canonical order.
    levels: Vec<Vec<(Itemset, u64)>>,
    lookup: HashMap<Vec<ItemId>, u64>,
    minsup: u64,
    txn_count: u64,
}

impl FrequentSetIndex {
    /// Assembles an index from explicit entries, checking the support
    /// threshold and downward closure.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (Itemset, u64)>,
        minsup: u64,
        txn_count: u64,
    ) -> Result<FrequentSetIndex> {
        if minsup == 0 {
            return Err(Error::ZeroMinsup);
        }
        let mut levels: Vec<Vec<(Itemset, u64)>> = Vec::new();
        let mut lookup = HashMap::new();
        for (set, support) in entries {
            if support < minsup || support > txn_count {
                return Err(Error::Inconsistent(format!(
                    "{set:?} has support {support}, outside [{minsup}, {txn_count}]"
                )));
            }
            if lookup.insert(set.items().to_vec(), support).is_some() {
                return Err(Error::Inconsistent(format!("{set:?} listed twice")));
            }
            if levels.len() < set.len() {
                levels.resize_with(set.len(), Vec::new);
            }
            levels[set.len() - 1].push((set, support));
        }
        for level in &mut levels {
            level.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let index = FrequentSetIndex {
            levels,
            lookup,
            minsup,
            txn_count,
        };
        index.check_closure()?;
        Ok(index)
    }

    fn check_closure(&self) -> Result<()> {
        for (set, support) in self.iter() {
            if set.len() < 2 {
                continue;
            }
            for skip in 0..set.len() {
                let sub: Vec<ItemId> = set
                    .items()
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &x)| (i != skip).then_some(x))
                    .collect();
                match self.lookup.get(&sub) {
                    Some(&s) if s >= support => {}
                    Some(_) => {
                        return Err(Error::Inconsistent(format!(
                            "support of {set:?} exceeds that of a subset"
                        )))
                    }
                    None => {
                        return Err(Error::Inconsistent(format!(
                            "{set:?} is listed but its subset {sub:?} is not"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn minsup(&self) -> u64 {
        self.minsup
    }

    pub fn txn_count(&self) -> u64 {
        self.txn_count
    }

    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.levels.len()
    }

    /// Support of the set given as an ascending slice, if it is frequent.
    pub fn support(&self, items: &[ItemId]) -> Option<u64> {
        self.lookup.get(items).copied()
    }

    pub fn contains(&self, items: &[ItemId]) -> bool {
        self.lookup.contains_key(items)
    }

    /// Frequent sets of exactly `k` items, canonical order.
    pub fn level(&self, k: usize) -> &[(Itemset, u64)] {
        match k.checked_sub(1).and_then(|i| self.levels.get(i)) {
            Some(level) => level,
            None => &[],
        }
    }

    /// All entries in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Itemset, u64)> {
        self.levels.iter().flatten().map(|(s, c)| (s, *c))
    }

    /// Every frequent subset of the ascending basket `t`, canonical order.
    pub fn frequent_subsets_of(&self, t: &[ItemId]) -> Vec<(Itemset, u64)> {
        let t = self.frequent_items_of(t);
        (1..=t.len().min(self.levels.len()))
            .flat_map(|k| self.subsets_of_size(&t, k))
            .collect()
    }

    /// The frequent subsets of `t` of maximum cardinality, canonical order.
    /// Empty when `t` has no frequent subset.
    pub fn maximal_subsets_of(&self, t: &[ItemId]) -> Vec<(Itemset, u64)> {
        let t = self.frequent_items_of(t);
        for k in (1..=t.len().min(self.levels.len())).rev() {
            let found = self.subsets_of_size(&t, k);
            if !found.is_empty() {
                return found;
            }
        }
        Vec::new()
    }

    fn frequent_items_of(&self, t: &[ItemId]) -> Vec<ItemId> {
        t.iter()
            .copied()
            .filter(|&i| self.lookup.contains_key(std::slice::from_ref(&i)))
            .collect()
    }

    /// Frequent `k`-subsets of `t` (already restricted to frequent items).
    /// Enumerates combinations of `t` when that is cheaper than scanning the
    /// level, otherwise scans.
    fn subsets_of_size(&self, t: &[ItemId], k: usize) -> Vec<(Itemset, u64)> {
        let level = self.level(k);
        if level.is_empty() || k > t.len() {
            return Vec::new();
        }
        if binomial_at_most(t.len(), k, level.len() as u64) {
            let mut out = Vec::new();
            for_each_combination(t, k, |combo| {
                if let Some(&s) = self.lookup.get(combo) {
                    out.push((Itemset::from_sorted(combo.to_vec()), s));
                }
            });
            out
        } else {
            level
                .iter()
                .filter(|(s, _)| s.is_subset_of(t))
                .cloned()
                .collect()
        }
    }

    /// Writes the index as JSON lines: one header object, then one
    /// `{"items":[...],"support":n}` object per set in canonical order.
    pub fn write_jsonl<W: Write>(&self, mut out: W, catalog: &Catalog) -> Result<()> {
        let header = DumpHeader {
            minsup: self.minsup,
            txn_count: self.txn_count,
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for (set, support) in self.iter() {
            let line = DumpEntry {
                items: set
                    .items()
                    .iter()
                    .map(|&i| catalog.product(i).id.clone())
                    .collect(),
                support,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(source: R, catalog: &Catalog) -> Result<FrequentSetIndex> {
        let mut lines = source.lines();
        let header: DumpHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Inconsistent("empty itemset dump".into())),
        };
        let mut entries = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: DumpEntry = serde_json::from_str(&line)?;
            let items = catalog.resolve(&e.items)?;
            let set = Itemset::try_new(items)
                .ok_or_else(|| Error::Inconsistent("empty itemset in dump".into()))?;
            entries.push((set, e.support));
        }
        FrequentSetIndex::from_entries(entries, header.minsup, header.txn_count)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpHeader {
    minsup: u64,
    txn_count: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpEntry {
    items: Vec<String>,
    support: u64,
}

fn binomial_at_most(n: usize, k: usize, limit: u64) -> bool {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        c = c * (n - i) as u64 / (i + 1) as u64;
        if c > limit {
            return false;
        }
    }
    true
}

/// Calls `f` on every `k`-combination of `items` in lexicographic order.
pub(crate) fn for_each_combination(items: &[ItemId], k: usize, mut f: impl FnMut(&[ItemId])) {
    let n = items.len();
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf: Vec<ItemId> = idx.iter().map(|&i| items[i]).collect();
    loop {
        f(&buf);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        buf[i] = items[idx[i]];
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
            buf[j] = items[idx[j]];
        }
    }
}

type TidSet = Vec<u64>;

fn intersect_count(a: &[u64], b: &[u64]) -> (TidSet, u64) {
    let mut count = 0u64;
    let out = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let w = x & y;
            count += u64::from(w.count_ones());
            w
        })
        .collect();
    (out, count)
}

/// Mines every itemset contained in at least `minsup` transactions.
/// Baskets are treated as sets; quantities play no part in support.
pub fn mine_frequent(
    db: &TransactionDb,
    minsup: u64,
    options: MineOptions,
) -> Result<FrequentSetIndex> {
    if minsup == 0 {
        return Err(Error::ZeroMinsup);
    }
    if db.is_empty() {
        return Err(Error::EmptyTransactions);
    }
    let n = db.len();
    let words = n.div_ceil(64);
    let max_item = db
        .transactions()
        .iter()
        .flat_map(|t| t.lines().keys())
        .map(|i| i.index())
        .max();
    let mut item_tids: Vec<TidSet> = vec![Vec::new(); max_item.map_or(0, |m| m + 1)];
    for (j, t) in db.transactions().iter().enumerate() {
        for item in t.lines().keys() {
            let tids = &mut item_tids[item.index()];
            if tids.is_empty() {
                tids.resize(words, 0);
            }
            tids[j / 64] |= 1 << (j % 64);
        }
    }

    let max_len = options.max_len.unwrap_or(usize::MAX);
    let mut levels: Vec<Vec<(Itemset, u64)>> = Vec::new();
    let mut lookup: HashMap<Vec<ItemId>, u64> = HashMap::new();

    let mut current: Vec<(Vec<ItemId>, TidSet, u64)> = item_tids
        .iter()
        .enumerate()
        .filter_map(|(i, tids)| {
            let count: u64 = tids.iter().map(|w| u64::from(w.count_ones())).sum();
            (count >= minsup).then(|| (vec![ItemId(i as u32)], tids.clone(), count))
        })
        .collect();
    drop(item_tids);

    let mut k = 1;
    while !current.is_empty() && k <= max_len {
        for (items, _, count) in &current {
            lookup.insert(items.clone(), *count);
        }
        levels.push(
            current
                .iter()
                .map(|(items, _, c)| (Itemset::from_sorted(items.clone()), *c))
                .collect(),
        );
        if k == max_len {
            break;
        }
        let prev = &current;
        let lookup_ref = &lookup;
        // `prev` is lexicographically sorted, so sets sharing a (k-1)-prefix
        // are contiguous.
        let next: Vec<(Vec<ItemId>, TidSet, u64)> = (0..prev.len())
            .into_par_iter()
            .flat_map_iter(|a| {
                let (left, left_tids, _) = &prev[a];
                let prefix = &left[..k - 1];
                prev[a + 1..]
                    .iter()
                    .take_while(move |(right, _, _)| &right[..k - 1] == prefix)
                    .filter_map(move |(right, right_tids, _)| {
                        let mut cand = left.clone();
                        cand.push(right[k - 1]);
                        let closed = (0..k - 1).all(|skip| {
                            let sub: Vec<ItemId> = cand
                                .iter()
                                .enumerate()
                                .filter_map(|(i, &x)| (i != skip).then_some(x))
                                .collect();
                            lookup_ref.contains_key(&sub)
                        });
                        if !closed {
                            return None;
                        }
                        let (tids, count) = intersect_count(left_tids, right_tids);
                        (count >= minsup).then_some((cand, tids, count))
                    })
            })
            .collect();
        current = next;
        k += 1;
    }

    Ok(FrequentSetIndex {
        levels,
        lookup,
        minsup,
        txn_count: n as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transactions::Transaction;

    fn db(baskets: &[&[u32]]) -> TransactionDb {
        TransactionDb::new(
            baskets
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    Transaction::with_lines(format!("t{j}"), b.iter().map(|&i| (ItemId(i), 1)))
                })
                .collect(),
        )
        .unwrap()
    }

    fn set(v: &[u32]) -> Itemset {
        Itemset::new(v.iter().copied().map(ItemId))
    }

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().copied().map(ItemId).collect()
    }

    // a=0, b=1, c=2
    fn five() -> TransactionDb {
        db(&[&[0, 1], &[0, 1], &[0, 2], &[1], &[0, 1, 2]])
    }

    #[test]
    fn five_transaction_example() {
        let index = mine_frequent(&five(), 2, MineOptions::default()).unwrap();
        let got: Vec<(Itemset, u64)> = index.iter().map(|(s, c)| (s.clone(), c)).collect();
        assert_eq!(
            got,
            vec![
                (set(&[0]), 4),
                (set(&[1]), 4),
                (set(&[2]), 2),
                (set(&[0, 1]), 3),
                (set(&[0, 2]), 2),
            ]
        );
    }

    #[test]
    fn threshold_above_db_size() {
        let index = mine_frequent(&five(), 6, MineOptions::default()).unwrap();
        assert!(index.is_empty());
    }

    #[test]
    fn threshold_one_lists_every_occurring_subset() {
        let index = mine_frequent(&five(), 1, MineOptions::default()).unwrap();
        // {a,b,c} and all its subsets occur; nothing else can.
        assert_eq!(index.len(), 7);
        assert_eq!(index.support(&ids(&[0, 1, 2])), Some(1));
        assert_eq!(index.support(&ids(&[1, 2])), Some(1));
    }

    #[test]
    fn max_len_caps_levels() {
        let opts = MineOptions { max_len: Some(1) };
        let index = mine_frequent(&five(), 1, opts).unwrap();
        assert_eq!(index.max_len(), 1);
        assert_eq!(index.len(), 3);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            mine_frequent(&five(), 0, MineOptions::default()),
            Err(Error::ZeroMinsup)
        ));
        assert!(matches!(
            mine_frequent(&TransactionDb::default(), 1, MineOptions::default()),
            Err(Error::EmptyTransactions)
        ));
    }

    #[test]
    fn subset_queries() {
        let index = mine_frequent(&five(), 2, MineOptions::default()).unwrap();
        let subs = index.frequent_subsets_of(&ids(&[0, 1, 2]));
        assert_eq!(subs.len(), 5);
        assert!(index.frequent_subsets_of(&ids(&[7, 9])).is_empty());
        assert!(index.frequent_subsets_of(&[]).is_empty());
        let maxi = index.maximal_subsets_of(&ids(&[0, 1, 2]));
        assert_eq!(maxi, vec![(set(&[0, 1]), 3), (set(&[0, 2]), 2)]);
        assert_eq!(index.maximal_subsets_of(&ids(&[1])), vec![(set(&[1]), 4)]);
        assert!(index.maximal_subsets_of(&ids(&[5])).is_empty());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let items = ids(&[1, 2, 3, 4]);
        let mut seen = Vec::new();
        for_each_combination(&items, 2, |c| {
            seen.push(c.iter().map(|i| i.0).collect::<Vec<_>>())
        });
        assert_eq!(
            seen,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        let mut n = 0;
        for_each_combination(&items, 4, |_| n += 1);
        assert_eq!(n, 1);
        for_each_combination(&items, 5, |_| panic!());
    }

    #[test]
    fn from_entries_checks_closure() {
        assert!(FrequentSetIndex::from_entries([(set(&[0, 1]), 3)], 1, 10).is_err());
        assert!(FrequentSetIndex::from_entries(
            [(set(&[0]), 2), (set(&[1]), 5), (set(&[0, 1]), 3)],
            1,
            10
        )
        .is_err());
        assert!(FrequentSetIndex::from_entries([(set(&[0]), 1)], 2, 10).is_err());
    }
}
