use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense index of a product inside a [`Catalog`](crate::Catalog).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A non-empty set of items kept in ascending order.
///
/// Itemsets order by size first and then lexicographically, which is the
/// canonical order used for every list this crate returns.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    /// Panics when `items` is empty.
    pub fn new(items: impl IntoIterator<Item = ItemId>) -> Itemset {
        Itemset::try_new(items).expect("itemsets are non-empty")
    }

    pub fn try_new(items: impl IntoIterator<Item = ItemId>) -> Option<Itemset> {
        let mut v: Vec<ItemId> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        (!v.is_empty()).then_some(Itemset(v))
    }

    /// Wraps a vector that is already sorted and duplicate-free.
    pub(crate) fn from_sorted(items: Vec<ItemId>) -> Itemset {
        debug_assert!(!items.is_empty());
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// True when every item of `self` occurs in the sorted slice `basket`.
    pub fn is_subset_of(&self, basket: &[ItemId]) -> bool {
        is_sorted_subset(&self.0, basket)
    }
}

/// Merge-walk containment test over two ascending slices.
pub fn is_sorted_subset(small: &[ItemId], big: &[ItemId]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut it = big.iter();
    'outer: for x in small {
        for y in it.by_ref() {
            match y.cmp(x) {
                Ordering::Less => continue,
                Ordering::Equal => continue 'outer,
                Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Items of `basket` not in `remove`; both ascending.
pub fn sorted_difference(basket: &[ItemId], remove: &[ItemId]) -> Vec<ItemId> {
    let mut out = Vec::with_capacity(basket.len().saturating_sub(remove.len()));
    let mut r = remove.iter().peekable();
    for &x in basket {
        while r.peek().is_some_and(|&&y| y < x) {
            r.next();
        }
        if r.peek() != Some(&&x) {
            out.push(x);
        }
    }
    out
}

impl Ord for Itemset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Itemset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter().map(|i| i.0)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().copied().map(ItemId).collect()
    }

    #[test]
    fn canonical_order() {
        let mut sets = [
            Itemset::new(ids(&[2, 1])),
            Itemset::new(ids(&[3])),
            Itemset::new(ids(&[0, 5])),
            Itemset::new(ids(&[1])),
        ];
        sets.sort();
        let got: Vec<Vec<u32>> = sets
            .iter()
            .map(|s| s.items().iter().map(|i| i.0).collect())
            .collect();
        assert_eq!(got, vec![vec![1], vec![3], vec![0, 5], vec![1, 2]]);
    }

    #[test]
    fn dedup_and_empty() {
        assert_eq!(
            Itemset::new(ids(&[4, 4, 1])).items(),
            ids(&[1, 4]).as_slice()
        );
        assert!(Itemset::try_new(Vec::new()).is_none());
    }

    #[test]
    fn subset_and_difference() {
        let basket = ids(&[1, 3, 5, 7]);
        assert!(is_sorted_subset(&ids(&[3, 7]), &basket));
        assert!(!is_sorted_subset(&ids(&[3, 4]), &basket));
        assert!(!is_sorted_subset(&ids(&[8]), &basket));
        assert!(is_sorted_subset(&[], &basket));
        assert_eq!(sorted_difference(&basket, &ids(&[1, 5, 9])), ids(&[3, 7]));
    }
}
