mod common;

use std::collections::BTreeMap;

use profset::optimizer::{ConstraintConfig, ModelItem, ModelSet, SolveOptions};
use profset::{solve_brute, solve_exact, solve_exact_with, Error, Money, ProfsetModel, Proof};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Optimum of the selection program with one explicit 0-1 variable per set,
/// `P_X <= x_i` for each member, found by enumerating every assignment.
fn explicit_program_optimum(model: &ProfsetModel) -> Option<i64> {
    let items = model.items();
    let sets = model.sets();
    let n = items.len();
    let pos = |id: &str| items.iter().position(|it| it.product_id == id).unwrap();
    let members: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| s.items.iter().map(|id| pos(id)).collect())
        .collect();
    let cfg = model.constraints();
    let mut best = None;
    for x in 0u32..1 << n {
        if x.count_ones() as usize != cfg.item_max {
            continue;
        }
        let mut per_cat: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            if x & 1 << i != 0 {
                *per_cat.entry(&it.category_id).or_default() += 1;
            }
        }
        let ok_min = cfg
            .item_min
            .iter()
            .all(|(c, &m)| per_cat.get(c.as_str()).copied().unwrap_or(0) >= m);
        let ok_cap = cfg
            .item_cap
            .iter()
            .all(|(c, &m)| per_cat.get(c.as_str()).copied().unwrap_or(0) <= m);
        if !ok_min || !ok_cap {
            continue;
        }
        let cost: i64 = (0..n)
            .filter(|i| x & 1 << i != 0)
            .map(|i| items[i].cost.0)
            .sum();
        for p in 0u32..1 << sets.len() {
            let allowed = (0..sets.len())
                .filter(|s| p & 1 << s != 0)
                .all(|s| members[s].iter().all(|&i| x & 1 << i != 0));
            if !allowed {
                continue;
            }
            let value: i64 = (0..sets.len())
                .filter(|s| p & 1 << s != 0)
                .map(|s| sets[s].margin.0)
                .sum::<i64>()
                - cost;
            if best.is_none_or(|b| value > b) {
                best = Some(value);
            }
        }
    }
    best
}

#[test]
fn exact_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..150 {
        let model = common::random_model(14, 24, &mut rng);
        let exact = solve_exact(&model).unwrap();
        let brute = solve_brute(&model).unwrap();
        assert_eq!(exact.objective, brute.objective, "{model:?}");
        assert_eq!(exact.selected, brute.selected, "{model:?}");
        assert_eq!(exact.active_sets, brute.active_sets);
        assert_eq!(exact.proof, Proof::Optimal);
        assert_eq!(
            model.objective_value(&exact.selected).unwrap(),
            exact.objective
        );
        assert!(model.is_feasible(&exact.selected).unwrap());
    }
}

#[test]
fn eliminating_set_variables_keeps_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 120 {
        let n = rng.random_range(1..=6);
        let items = common::model_items(n, rng.random_range(1..=n.min(3)), 10, &mut rng);
        // negative margins included: their set variable must stay at 0
        let sets = common::model_sets(n, rng.random_range(0..=4), 3, -10, 25, &mut rng);
        if n + sets.len() > 10 {
            continue;
        }
        let cfg = ConstraintConfig::new(rng.random_range(1..=n));
        let Ok(model) = ProfsetModel::new(items.clone(), sets.clone(), cfg.clone()) else {
            continue;
        };
        // the oracle sees every set, including the ones the model dropped
        let unpruned = Unpruned { items, sets, cfg };
        let expected = unpruned.optimum().unwrap();
        assert_eq!(solve_exact(&model).unwrap().objective, Money(expected));
        checked += 1;
    }
}

struct Unpruned {
    items: Vec<ModelItem>,
    sets: Vec<ModelSet>,
    cfg: ConstraintConfig,
}

impl Unpruned {
    fn optimum(&self) -> Option<i64> {
        // build a model-shaped view without pruning by going through JSON
        let json = serde_json::json!({
            "items": self.items,
            "sets": self.sets,
            "constraints": self.cfg,
        });
        let view: View = serde_json::from_value(json).unwrap();
        explicit_program_optimum_view(&view)
    }
}

#[derive(serde::Deserialize)]
struct View {
    items: Vec<ModelItem>,
    sets: Vec<ModelSet>,
    constraints: ConstraintConfig,
}

fn explicit_program_optimum_view(v: &View) -> Option<i64> {
    let n = v.items.len();
    let pos = |id: &str| v.items.iter().position(|it| it.product_id == id).unwrap();
    let members: Vec<Vec<usize>> = v
        .sets
        .iter()
        .map(|s| s.items.iter().map(|id| pos(id)).collect())
        .collect();
    let mut best = None;
    for x in 0u32..1 << n {
        if x.count_ones() as usize != v.constraints.item_max {
            continue;
        }
        let cost: i64 = (0..n)
            .filter(|i| x & 1 << i != 0)
            .map(|i| v.items[i].cost.0)
            .sum();
        for p in 0u32..1 << v.sets.len() {
            let allowed = (0..v.sets.len())
                .filter(|s| p & 1 << s != 0)
                .all(|s| members[s].iter().all(|&i| x & 1 << i != 0));
            if allowed {
                let value = (0..v.sets.len())
                    .filter(|s| p & 1 << s != 0)
                    .map(|s| v.sets[s].margin.0)
                    .sum::<i64>()
                    - cost;
                if best.is_none_or(|b| value > b) {
                    best = Some(value);
                }
            }
        }
    }
    best
}

#[test]
fn explicit_program_agrees_on_constrained_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 80 {
        let model = common::random_model(6, 4, &mut rng);
        if model.items().len() + model.sets().len() > 10 {
            continue;
        }
        let expected = explicit_program_optimum(&model).unwrap();
        assert_eq!(solve_exact(&model).unwrap().objective, Money(expected));
        checked += 1;
    }
}

#[test]
fn scaling_margins_and_costs_scales_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let model = common::random_model(12, 20, &mut rng);
        let k = rng.random_range(2..7);
        let items = model
            .items()
            .iter()
            .map(|it| ModelItem {
                cost: it.cost * k,
                ..it.clone()
            })
            .collect();
        let sets = model
            .sets()
            .iter()
            .map(|s| ModelSet {
                margin: s.margin * k,
                ..s.clone()
            })
            .collect();
        let scaled = ProfsetModel::new(items, sets, model.constraints().clone()).unwrap();
        let a = solve_exact(&model).unwrap();
        let b = solve_exact(&scaled).unwrap();
        assert_eq!(b.objective, a.objective * k);
        assert_eq!(b.selected, a.selected);
    }
}

#[test]
fn one_per_category_at_scale() {
    // 12 categories of 8 items with random pairs across categories
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let items: Vec<ModelItem> = (0..96)
        .map(|i| ModelItem {
            product_id: format!("i{i:03}"),
            category_id: format!("k{:02}", i / 8),
            cost: Money(rng.random_range(0..30)),
        })
        .collect();
    let mut sets = Vec::new();
    for i in 0..96usize {
        sets.push(ModelSet {
            items: vec![format!("i{i:03}")],
            margin: Money(rng.random_range(1..40)),
        });
    }
    for _ in 0..400 {
        let a = rng.random_range(0..96usize);
        let b = rng.random_range(0..96usize);
        if a / 8 != b / 8 {
            let (a, b) = (a.min(b), a.max(b));
            sets.push(ModelSet {
                items: vec![format!("i{a:03}"), format!("i{b:03}")],
                margin: Money(rng.random_range(1..60)),
            });
        }
    }
    sets.sort_by(|x, y| x.items.cmp(&y.items));
    sets.dedup_by(|x, y| x.items == y.items);
    let mut cfg = ConstraintConfig::new(12);
    for c in 0..12 {
        cfg.item_min.insert(format!("k{c:02}"), 1);
    }
    let model = ProfsetModel::new(items, sets, cfg).unwrap();
    let s = solve_exact(&model).unwrap();
    assert_eq!(s.selected.len(), 12);
    assert!(model.is_feasible(&s.selected).unwrap());
}

#[test]
fn budget_and_infeasibility_are_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = common::random_model(14, 24, &mut rng);
    let err = solve_exact_with(&model, SolveOptions { node_budget: 1 });
    assert!(matches!(err, Err(Error::NodeBudget(1))) || err.is_ok());

    let items = vec![
        ModelItem {
            product_id: "a".into(),
            category_id: "k".into(),
            cost: Money(0),
        },
        ModelItem {
            product_id: "b".into(),
            category_id: "l".into(),
            cost: Money(0),
        },
    ];
    let mut cfg = ConstraintConfig::new(1);
    cfg.item_min.insert("k".into(), 1);
    cfg.item_min.insert("l".into(), 1);
    let err = ProfsetModel::new(items, vec![], cfg).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)));
    assert!(err.to_string().contains("> item_max (1)"), "{err}");
}
