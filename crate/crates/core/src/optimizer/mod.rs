//! The category-constrained product selection program.
//!
//! Given margins `M(X)` for frequent sets, per-item costs and category
//! bounds, choose exactly `item_max` products maximizing
//!
//! ```text
//! Σ_{X ⊆ selected, M(X) > 0} M(X)  −  Σ_{i ∈ selected} cost_i
//! ```
//!
//! subject to per-category minimum (and optional maximum) counts. The set
//! indicator of the 0-1 formulation is eliminated: with non-negative set
//! margins a maximizer always switches a set on exactly when all its items
//! are selected, so only the item variables are searched.
//!
//! [`solve_exact`] is a branch-and-bound search; [`solve_brute`] enumerates
//! every feasible selection and serves as its oracle on small models. Both
//! break ties towards the lexicographically smallest sorted list of selected
//! product ids.

mod bnb;
mod brute;

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationResult;
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::money::Money;

pub use bnb::{solve_exact, solve_exact_with, SolveOptions, DEFAULT_NODE_BUDGET};
pub use brute::{solve_brute, BRUTE_FORCE_MAX_ITEMS};

/// Selection size and per-category bounds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintConfig {
    /// Exact number of products to select.
    pub item_max: usize,
    /// Minimum selected products per category id; absent means 0.
    #[serde(default)]
    pub item_min: BTreeMap<String, usize>,
    /// Maximum selected products per category id; absent means no cap.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub item_cap: BTreeMap<String, usize>,
}

impl ConstraintConfig {
    pub fn new(item_max: usize) -> ConstraintConfig {
        ConstraintConfig {
            item_max,
            ..Default::default()
        }
    }

    /// `item_max` products with the same minimum in every category.
    pub fn uniform(catalog: &Catalog, item_max: usize, item_min: usize) -> ConstraintConfig {
        ConstraintConfig {
            item_max,
            item_min: catalog
                .categories()
                .iter()
                .map(|c| (c.id.clone(), item_min))
                .collect(),
            item_cap: BTreeMap::new(),
        }
    }

    /// One delegate per category: a minimum of one everywhere and
    /// `item_max` equal to the number of categories, which forces exactly
    /// one product per category.
    pub fn one_per_category(catalog: &Catalog) -> ConstraintConfig {
        ConstraintConfig::uniform(catalog, catalog.categories().len(), 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelItem {
    pub product_id: String,
    pub category_id: String,
    pub cost: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSet {
    pub items: Vec<String>,
    pub margin: Money,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct CategoryBounds {
    pub id: String,
    pub size: usize,
    pub min: usize,
    pub cap: usize,
}

/// A validated, feasible selection model.
///
/// Items are held in ascending product-id order; sets reference items by
/// position. Sets with `M <= 0` are dropped on construction since they can
/// never raise the objective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfsetModel {
    items: Vec<ModelItem>,
    sets: Vec<ModelSet>,
    constraints: ConstraintConfig,
    pub(crate) set_members: Vec<Vec<usize>>,
    pub(crate) item_category: Vec<usize>,
    pub(crate) categories: Vec<CategoryBounds>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    items: Vec<ModelItem>,
    sets: Vec<ModelSet>,
    constraints: ConstraintConfig,
}

impl ProfsetModel {
    pub fn new(
        mut items: Vec<ModelItem>,
        sets: Vec<ModelSet>,
        constraints: ConstraintConfig,
    ) -> Result<ProfsetModel> {
        items.sort_by(|a, b| a.product_id.cmp(&b.product_id));
        if let Some(w) = items
            .windows(2)
            .find(|w| w[0].product_id == w[1].product_id)
        {
            return Err(Error::DuplicateProduct {
                id: w[0].product_id.clone(),
                line: 0,
            });
        }
        if let Some(it) = items.iter().find(|it| it.cost < Money::ZERO) {
            return Err(Error::Inconsistent(format!(
                "negative cost for product {:?}",
                it.product_id
            )));
        }
        let pos: HashMap<&str, usize> = items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.product_id.as_str(), i))
            .collect();

        let mut kept: BTreeMap<Vec<usize>, Money> = BTreeMap::new();
        for set in sets {
            let mut members = Vec::with_capacity(set.items.len());
            for id in &set.items {
                let &p = pos.get(id.as_str()).ok_or_else(|| Error::UnknownProduct {
                    id: id.clone(),
                    line: 0,
                })?;
                members.push(p);
            }
            members.sort_unstable();
            members.dedup();
            if members.is_empty() {
                return Err(Error::Inconsistent("empty set in model".into()));
            }
            if kept.insert(members, set.margin).is_some() {
                return Err(Error::Inconsistent(format!(
                    "set {:?} listed twice",
                    set.items
                )));
            }
        }
        kept.retain(|_, m| *m > Money::ZERO);
        let mut ordered: Vec<(Vec<usize>, Money)> = kept.into_iter().collect();
        ordered.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        let set_members: Vec<Vec<usize>> = ordered.iter().map(|(m, _)| m.clone()).collect();
        let sets: Vec<ModelSet> = ordered
            .into_iter()
            .map(|(members, margin)| ModelSet {
                items: members
                    .iter()
                    .map(|&i| items[i].product_id.clone())
                    .collect(),
                margin,
            })
            .collect();

        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for it in &items {
            *sizes.entry(it.category_id.as_str()).or_default() += 1;
        }
        let cat_pos: HashMap<&str, usize> =
            sizes.keys().enumerate().map(|(i, &c)| (c, i)).collect();
        let item_category = items
            .iter()
            .map(|it| cat_pos[it.category_id.as_str()])
            .collect();
        for id in constraints
            .item_min
            .keys()
            .chain(constraints.item_cap.keys())
        {
            if !sizes.contains_key(id.as_str()) {
                return Err(Error::UnknownCategory(id.clone()));
            }
        }
        let categories: Vec<CategoryBounds> = sizes
            .iter()
            .map(|(&id, &size)| CategoryBounds {
                id: id.to_string(),
                size,
                min: constraints.item_min.get(id).copied().unwrap_or(0),
                cap: constraints
                    .item_cap
                    .get(id)
                    .copied()
                    .unwrap_or(size)
                    .min(size),
            })
            .collect();

        let model = ProfsetModel {
            items,
            sets,
            constraints,
            set_members,
            item_category,
            categories,
        };
        model.check_feasible()?;
        Ok(model)
    }

    fn check_feasible(&self) -> Result<()> {
        let c = &self.constraints;
        if c.item_max == 0 {
            return Err(Error::Infeasible("item_max must be at least 1".into()));
        }
        for cat in &self.categories {
            if cat.min > cat.size {
                return Err(Error::Infeasible(format!(
                    "category {}: item_min {} > {} products in the category",
                    cat.id, cat.min, cat.size
                )));
            }
            if let Some(&cap) = c.item_cap.get(&cat.id) {
                if cap == 0 || cap < cat.min {
                    return Err(Error::Infeasible(format!(
                        "category {}: item_cap {} must be positive and at least item_min {}",
                        cat.id, cap, cat.min
                    )));
                }
            }
        }
        let min_total: usize = self.categories.iter().map(|c| c.min).sum();
        if min_total > c.item_max {
            return Err(Error::Infeasible(format!(
                "sum of item_min over categories ({min_total}) > item_max ({})",
                c.item_max
            )));
        }
        let max_total: usize = self.categories.iter().map(|c| c.cap).sum();
        if c.item_max > max_total {
            return Err(Error::Infeasible(format!(
                "item_max ({}) > sum over categories of min(size, item_cap) ({max_total})",
                c.item_max
            )));
        }
        Ok(())
    }

    pub fn items(&self) -> &[ModelItem] {
        &self.items
    }

    /// Positive-margin sets in canonical order.
    pub fn sets(&self) -> &[ModelSet] {
        &self.sets
    }

    pub fn constraints(&self) -> &ConstraintConfig {
        &self.constraints
    }

    pub(crate) fn item_max(&self) -> usize {
        self.constraints.item_max
    }

    pub(crate) fn cost(&self, i: usize) -> i64 {
        self.items[i].cost.0
    }

    pub(crate) fn margin(&self, s: usize) -> i64 {
        self.sets[s].margin.0
    }

    fn positions(&self, selected: &[impl AsRef<str>]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.items.len()];
        for id in selected {
            let i = self
                .items
                .binary_search_by(|it| it.product_id.as_str().cmp(id.as_ref()))
                .map_err(|_| Error::UnknownProduct {
                    id: id.as_ref().to_string(),
                    line: 0,
                })?;
            mask[i] = true;
        }
        Ok(mask)
    }

    /// Objective of a selection given by product ids.
    pub fn objective_value(&self, selected: &[impl AsRef<str>]) -> Result<Money> {
        Ok(self.objective_of(&self.positions(selected)?))
    }

    /// Whether a selection satisfies the size and category constraints.
    pub fn is_feasible(&self, selected: &[impl AsRef<str>]) -> Result<bool> {
        Ok(self.mask_feasible(&self.positions(selected)?))
    }

    pub(crate) fn mask_feasible(&self, mask: &[bool]) -> bool {
        let mut counts = vec![0usize; self.categories.len()];
        let mut total = 0;
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            counts[self.item_category[i]] += 1;
            total += 1;
        }
        total == self.item_max()
            && self
                .categories
                .iter()
                .zip(&counts)
                .all(|(c, &n)| n >= c.min && n <= c.cap)
    }

    pub(crate) fn objective_of(&self, mask: &[bool]) -> Money {
        let sets: i64 = self
            .set_members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.iter().all(|&i| mask[i]))
            .map(|(s, _)| self.margin(s))
            .sum();
        let costs: i64 = (0..self.items.len())
            .filter(|&i| mask[i])
            .map(|i| self.cost(i))
            .sum();
        Money(sets - costs)
    }

    pub(crate) fn solution(&self, mask: &[bool], proof: Proof, stats: SolveStats) -> Solution {
        let selected = (0..self.items.len())
            .filter(|&i| mask[i])
            .map(|i| self.items[i].product_id.clone())
            .collect();
        let active_sets = self
            .set_members
            .iter()
            .zip(&self.sets)
            .filter(|(m, _)| m.iter().all(|&i| mask[i]))
            .map(|(_, s)| s.items.clone())
            .collect();
        Solution {
            selected,
            active_sets,
            objective: self.objective_of(mask),
            proof,
            stats,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            items: self.items.clone(),
            sets: self.sets.clone(),
            constraints: self.constraints.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<ProfsetModel> {
        let file: ModelFile = serde_json::from_str(s)?;
        ProfsetModel::new(file.items, file.sets, file.constraints)
    }
}

/// Builds the selection model: one decision item per catalog product and one
/// set term per allocated frequent set with positive margin.
pub fn build_model(
    alloc: &AllocationResult,
    catalog: &Catalog,
    cfg: &ConstraintConfig,
) -> Result<ProfsetModel> {
    let items = catalog
        .products()
        .iter()
        .map(|p| ModelItem {
            product_id: p.id.clone(),
            category_id: p.category_id.clone(),
            cost: p.cost,
        })
        .collect();
    let sets = alloc
        .set_margins
        .iter()
        .map(|(set, &margin)| ModelSet {
            items: set
                .items()
                .iter()
                .map(|&i| catalog.product(i).id.clone())
                .collect(),
            margin,
        })
        .collect();
    ProfsetModel::new(items, sets, cfg.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proof {
    Optimal,
    Heuristic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    /// Not serialized, so solution files stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    /// Selected product ids, ascending.
    pub selected: Vec<String>,
    /// Positive-margin sets fully inside the selection, canonical order.
    pub active_sets: Vec<Vec<String>>,
    pub objective: Money,
    pub proof: Proof,
    pub stats: SolveStats,
}
