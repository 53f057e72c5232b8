mod common;

use common::{brute_force_frequent, index_as_map};
use profset::{
    mine_frequent, Catalog, ItemId, Itemset, MineOptions, Product, Transaction, TransactionDb,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn baskets() -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0u32..8, 1..6), 1..40)
}

fn db_of(baskets: &[Vec<u32>]) -> TransactionDb {
    TransactionDb::new(
        baskets
            .iter()
            .enumerate()
            .map(|(k, b)| {
                Transaction::with_lines(format!("t{k}"), b.iter().map(|&i| (ItemId(i), 1)))
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn mining_matches_enumeration(baskets in baskets(), minsup in 1u64..6) {
        let db = db_of(&baskets);
        let index = mine_frequent(&db, minsup, MineOptions::default()).unwrap();
        prop_assert_eq!(index_as_map(&index), brute_force_frequent(&db, 8, minsup));
    }

    #[test]
    fn subset_queries_match_enumeration(
        baskets in baskets(),
        minsup in 1u64..4,
        mut t in prop::collection::vec(0u32..8, 1..8),
    ) {
        t.sort_unstable();
        t.dedup();
        let t: Vec<ItemId> = t.into_iter().map(ItemId).collect();
        let db = db_of(&baskets);
        let index = mine_frequent(&db, minsup, MineOptions::default()).unwrap();
        let all = brute_force_frequent(&db, 8, minsup);
        let inside: Vec<(Vec<ItemId>, u64)> = all
            .iter()
            .filter(|(s, _)| s.iter().all(|i| t.contains(i)))
            .map(|(s, &n)| (s.clone(), n))
            .collect();
        let mut got: Vec<(Vec<ItemId>, u64)> = index
            .frequent_subsets_of(&t)
            .into_iter()
            .map(|(s, n)| (s.items().to_vec(), n))
            .collect();
        got.sort();
        prop_assert_eq!(&got, &inside);

        let top = inside.iter().map(|(s, _)| s.len()).max().unwrap_or(0);
        let maximal: Vec<_> = inside.into_iter().filter(|(s, _)| s.len() == top).collect();
        let mut got: Vec<_> = index
            .maximal_subsets_of(&t)
            .into_iter()
            .map(|(s, n)| (s.items().to_vec(), n))
            .collect();
        got.sort();
        prop_assert_eq!(got, maximal);
    }

    #[test]
    fn max_len_truncates(baskets in baskets(), minsup in 1u64..4, max_len in 1usize..4) {
        let db = db_of(&baskets);
        let full = mine_frequent(&db, minsup, MineOptions::default()).unwrap();
        let cut = mine_frequent(&db, minsup, MineOptions { max_len: Some(max_len) }).unwrap();
        let expected: Vec<_> = full
            .iter()
            .filter(|(s, _)| s.len() <= max_len)
            .map(|(s, n)| (s.clone(), n))
            .collect();
        let got: Vec<_> = cut.iter().map(|(s, n)| (s.clone(), n)).collect();
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn larger_random_dbs_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let catalog = common::catalog(12, 3, &mut rng);
        let db = common::random_db(&catalog, 300, 7, &mut rng);
        for minsup in [2, 10, 40] {
            let index = mine_frequent(&db, minsup, MineOptions::default()).unwrap();
            assert_eq!(index_as_map(&index), brute_force_frequent(&db, 12, minsup));
        }
    }
}

#[test]
fn quantities_do_not_change_support() {
    let catalog = Catalog::from_products(vec![
        Product::new("a", "x", 1, 0),
        Product::new("b", "x", 1, 0),
    ])
    .unwrap();
    let db = TransactionDb::new(vec![
        Transaction::with_lines("1", [(ItemId(0), 5), (ItemId(1), 1)]),
        Transaction::with_lines("2", [(ItemId(0), 1)]),
    ])
    .unwrap();
    let index = mine_frequent(&db, 1, MineOptions::default()).unwrap();
    assert_eq!(index.support(&[ItemId(0)]), Some(2));
    assert_eq!(index.support(&[ItemId(0), ItemId(1)]), Some(1));
    assert_eq!(catalog.len(), 2);
    assert_eq!(
        index
            .level(2)
            .iter()
            .map(|(s, _)| s.clone())
            .collect::<Vec<_>>(),
        vec![Itemset::new([ItemId(0), ItemId(1)])]
    );
}
