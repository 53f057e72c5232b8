//! Comparison of an optimized selection against the naive baseline.
//!
//! The naive baseline picks, per category, the product with the highest own
//! profit, where own profit is the margin allocated to the product's
//! singleton set plus its residual margin. Cross-selling profit of a product
//! is the full margin of every selected multi-item set containing it, so
//! adding cross profit over several products counts shared sets more than
//! once.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num::rational::Ratio;
use serde::Serialize;

use crate::allocation::AllocationResult;
use crate::catalog::Catalog;
use crate::error::Result;
use crate::itemset::ItemId;
use crate::money::Money;
use crate::optimizer::Solution;

pub const DOUBLE_COUNT_NOTE: &str = "Cross-selling profit credits each multi-item set in full to \
every selected member, so summing it over products double-counts shared sets.";

/// `M({i}) + residual(i)`.
pub fn own_profit(alloc: &AllocationResult, item: ItemId) -> Money {
    alloc.set_margin(&[item]) + alloc.residual(item)
}

/// Margin of the multi-item sets that contain `item` and lie inside
/// `selection` (ascending).
pub fn cross_profit(alloc: &AllocationResult, item: ItemId, selection: &[ItemId]) -> Money {
    alloc
        .set_margins
        .iter()
        .filter(|(s, _)| s.len() >= 2 && s.contains(item) && s.is_subset_of(selection))
        .map(|(_, &m)| m)
        .sum()
}

/// Objective of an arbitrary selection under the allocation's margins and
/// catalog costs.
pub fn selection_objective(
    alloc: &AllocationResult,
    catalog: &Catalog,
    selection: &[ItemId],
) -> Money {
    let sets: Money = alloc
        .set_margins
        .iter()
        .filter(|(s, &m)| m > Money::ZERO && s.is_subset_of(selection))
        .map(|(_, &m)| m)
        .sum();
    let costs: Money = selection.iter().map(|&i| catalog.product(i).cost).sum();
    sets - costs
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NaivePick {
    pub category_id: String,
    pub product_id: String,
    pub own_profit: Money,
}

/// Highest own profit per category, ties to the smaller product id.
pub fn naive_selection(catalog: &Catalog, alloc: &AllocationResult) -> Vec<NaivePick> {
    catalog
        .categories()
        .iter()
        .map(|cat| {
            // members are ascending, so max_by_key keeps the last maximum;
            // iterate in reverse to keep the smallest id instead
            let best = cat
                .members
                .iter()
                .rev()
                .copied()
                .max_by_key(|&i| own_profit(alloc, i))
                .expect("categories are non-empty");
            NaivePick {
                category_id: cat.id.clone(),
                product_id: catalog.product(best).id.clone(),
                own_profit: own_profit(alloc, best),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfitBreakdown {
    pub product_id: String,
    pub own_profit: Money,
    pub cross_profit: Money,
    pub total: Money,
}

fn breakdown_for(
    alloc: &AllocationResult,
    catalog: &Catalog,
    selection: &[ItemId],
) -> Vec<ProfitBreakdown> {
    selection
        .iter()
        .map(|&i| {
            let own = own_profit(alloc, i);
            let cross = cross_profit(alloc, i, selection);
            ProfitBreakdown {
                product_id: catalog.product(i).id.clone(),
                own_profit: own,
                cross_profit: cross,
                total: own + cross,
            }
        })
        .collect()
}

/// Own, cross-selling and total profit of every selected product.
pub fn product_breakdown(
    solution: &Solution,
    alloc: &AllocationResult,
    catalog: &Catalog,
) -> Result<Vec<ProfitBreakdown>> {
    let selection = resolve_sorted(catalog, &solution.selected)?;
    Ok(breakdown_for(alloc, catalog, &selection))
}

fn resolve_sorted(catalog: &Catalog, ids: &[impl AsRef<str>]) -> Result<Vec<ItemId>> {
    let mut v = catalog.resolve(ids)?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Relative change in cross-selling profit, or not applicable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Improvement {
    /// `(cross_profset - cross_naive) / cross_naive` as an exact fraction.
    Ratio(Ratio<i64>),
    NotApplicable,
}

impl Improvement {
    /// Whole percent, rounded half away from zero.
    pub fn percent(&self) -> Option<i64> {
        match self {
            Improvement::Ratio(r) => Some((*r * 100).round().to_integer()),
            Improvement::NotApplicable => None,
        }
    }
}

impl Serialize for Improvement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Frac {
            num: i64,
            den: i64,
        }
        match self {
            Improvement::Ratio(r) => Frac {
                num: *r.numer(),
                den: *r.denom(),
            }
            .serialize(s),
            Improvement::NotApplicable => s.serialize_none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CategoryImprovement {
    pub category_id: String,
    /// The selected product of the category with the smallest id, if any.
    pub profset_pick: Option<String>,
    pub naive_pick: String,
    pub cross_profset: Money,
    pub cross_naive: Money,
    /// Whether any product of the category occurs in an allocated set.
    pub has_frequent_products: bool,
    pub improvement: Improvement,
}

fn items_in_sets(alloc: &AllocationResult) -> BTreeSet<ItemId> {
    alloc
        .set_margins
        .keys()
        .flat_map(|s| s.items().iter().copied())
        .collect()
}

/// Per-category comparison of the optimized pick with the naive pick, each
/// scored inside its own full selection.
///
/// The improvement is not applicable when the category has no frequent
/// products or the naive pick earns no cross-selling profit. Identical picks
/// report 0%.
pub fn category_improvements(
    solution: &Solution,
    naive: &[NaivePick],
    alloc: &AllocationResult,
    catalog: &Catalog,
) -> Result<Vec<CategoryImprovement>> {
    let selection = resolve_sorted(catalog, &solution.selected)?;
    let naive_ids: Vec<&str> = naive.iter().map(|p| p.product_id.as_str()).collect();
    let naive_selection = resolve_sorted(catalog, &naive_ids)?;
    let frequent = items_in_sets(alloc);

    let mut out = Vec::with_capacity(naive.len());
    for pick in naive {
        let Some(c) = catalog.category_index(&pick.category_id) else {
            return Err(crate::Error::UnknownCategory(pick.category_id.clone()));
        };
        let cat = &catalog.categories()[c];
        let naive_item = catalog.resolve(&[&pick.product_id])?[0];
        let profset_item = selection
            .iter()
            .copied()
            .find(|&i| catalog.category_of(i) == c);
        let has_frequent = cat.members.iter().any(|i| frequent.contains(i));
        let cross_naive = cross_profit(alloc, naive_item, &naive_selection);
        let cross_profset = profset_item
            .map(|i| cross_profit(alloc, i, &selection))
            .unwrap_or(Money::ZERO);
        let improvement = if !has_frequent || cross_naive <= Money::ZERO {
            Improvement::NotApplicable
        } else if profset_item == Some(naive_item) {
            Improvement::Ratio(Ratio::from_integer(0))
        } else {
            Improvement::Ratio(Ratio::new((cross_profset - cross_naive).0, cross_naive.0))
        };
        out.push(CategoryImprovement {
            category_id: cat.id.clone(),
            profset_pick: profset_item.map(|i| catalog.product(i).id.clone()),
            naive_pick: pick.product_id.clone(),
            cross_profset,
            cross_naive,
            has_frequent_products: has_frequent,
            improvement,
        });
    }
    Ok(out)
}

/// Swaps selected products of categories without frequent products for the
/// naive pick when both cost the same. Such products carry no set margin, so
/// the objective and feasibility are unchanged; the swap makes the selection
/// fall back on individual profit where cross-selling has nothing to say.
pub fn prefer_own_profit_where_unsupported(
    solution: &Solution,
    naive: &[NaivePick],
    alloc: &AllocationResult,
    catalog: &Catalog,
) -> Result<Solution> {
    let frequent = items_in_sets(alloc);
    let mut selection: BTreeSet<ItemId> = resolve_sorted(catalog, &solution.selected)?
        .into_iter()
        .collect();
    for pick in naive {
        let naive_item = catalog.resolve(&[&pick.product_id])?[0];
        let c = catalog.category_of(naive_item);
        let cat = &catalog.categories()[c];
        if cat.members.iter().any(|i| frequent.contains(i)) || selection.contains(&naive_item) {
            continue;
        }
        let cost = catalog.product(naive_item).cost;
        let swap = cat
            .members
            .iter()
            .copied()
            .find(|i| selection.contains(i) && catalog.product(*i).cost == cost);
        if let Some(out) = swap {
            selection.remove(&out);
            selection.insert(naive_item);
        }
    }
    let selected: Vec<String> = selection
        .iter()
        .map(|&i| catalog.product(i).id.clone())
        .collect();
    Ok(Solution {
        selected,
        ..solution.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProductRow {
    pub product_id: String,
    pub name: String,
    pub category_id: String,
    pub own_profit: Money,
    pub cross_profit: Money,
    pub total_profit: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CategoryRow {
    pub category_id: String,
    pub category_name: String,
    pub profset_pick: Option<String>,
    pub naive_pick: String,
    pub cross_profset: Money,
    pub cross_naive: Money,
    pub improvement: Improvement,
    pub improvement_percent: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub profset_objective: Money,
    pub naive_objective: Money,
    pub profset_selection: Vec<String>,
    pub naive_selection: Vec<String>,
    pub categories_changed: usize,
    pub categories_total: usize,
    pub categories: Vec<CategoryRow>,
    /// Breakdown of the optimized selection.
    pub products: Vec<ProductRow>,
    /// Breakdown of the naive selection.
    pub naive_products: Vec<ProductRow>,
    pub note: &'static str,
}

/// Builds the full comparison report for a solved selection.
pub fn build_report(
    catalog: &Catalog,
    alloc: &AllocationResult,
    solution: &Solution,
) -> Result<Report> {
    let naive = naive_selection(catalog, alloc);
    let solution = prefer_own_profit_where_unsupported(solution, &naive, alloc, catalog)?;
    let selection = resolve_sorted(catalog, &solution.selected)?;
    let naive_ids: Vec<&str> = naive.iter().map(|p| p.product_id.as_str()).collect();
    let naive_sel = resolve_sorted(catalog, &naive_ids)?;
    let improvements = category_improvements(&solution, &naive, alloc, catalog)?;

    let rows = |sel: &[ItemId]| -> Vec<ProductRow> {
        breakdown_for(alloc, catalog, sel)
            .into_iter()
            .zip(sel)
            .map(|(b, &i)| {
                let p = catalog.product(i);
                ProductRow {
                    product_id: b.product_id,
                    name: p.name.clone(),
                    category_id: p.category_id.clone(),
                    own_profit: b.own_profit,
                    cross_profit: b.cross_profit,
                    total_profit: b.total,
                }
            })
            .collect()
    };

    let categories: Vec<CategoryRow> = improvements
        .into_iter()
        .map(|imp| {
            let name = catalog
                .category_index(&imp.category_id)
                .map(|c| catalog.categories()[c].name.clone())
                .unwrap_or_default();
            CategoryRow {
                category_name: name,
                improvement_percent: imp.improvement.percent(),
                category_id: imp.category_id,
                profset_pick: imp.profset_pick,
                naive_pick: imp.naive_pick,
                cross_profset: imp.cross_profset,
                cross_naive: imp.cross_naive,
                improvement: imp.improvement,
            }
        })
        .collect();
    let changed = categories
        .iter()
        .filter(|c| c.profset_pick.as_deref() != Some(c.naive_pick.as_str()))
        .count();

    Ok(Report {
        profset_objective: selection_objective(alloc, catalog, &selection),
        naive_objective: selection_objective(alloc, catalog, &naive_sel),
        profset_selection: solution.selected.clone(),
        naive_selection: naive_sel
            .iter()
            .map(|&i| catalog.product(i).id.clone())
            .collect(),
        categories_changed: changed,
        categories_total: categories.len(),
        categories,
        products: rows(&selection),
        naive_products: rows(&naive_sel),
        note: DOUBLE_COUNT_NOTE,
    })
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned-text tables: per-category improvements, then per-product
    /// own/cross/total profit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = if self.categories_total == 0 {
            0.0
        } else {
            100.0 * self.categories_changed as f64 / self.categories_total as f64
        };
        let _ = writeln!(
            out,
            "Objective (optimized selection): {}",
            self.profset_objective
        );
        let _ = writeln!(
            out,
            "Objective (naive selection):     {}",
            self.naive_objective
        );
        let _ = writeln!(
            out,
            "Categories with a different pick: {} of {} ({:.1}%)",
            self.categories_changed, self.categories_total, pct
        );
        out.push('\n');

        let cat_rows: Vec<[String; 4]> = self
            .categories
            .iter()
            .map(|c| {
                [
                    c.category_name.clone(),
                    c.profset_pick.clone().unwrap_or_else(|| "-".into()),
                    c.naive_pick.clone(),
                    match c.improvement_percent {
                        Some(p) => format!("{p}%"),
                        None => "N/A".into(),
                    },
                ]
            })
            .collect();
        out.push_str("Cross-selling profit improvements\n");
        table(
            &mut out,
            ["Category", "Optimized pick", "Naive pick", "Improvement"],
            &cat_rows,
        );
        out.push('\n');

        let prod_rows: Vec<[String; 4]> = self
            .products
            .iter()
            .map(|p| {
                [
                    format!("{} ({})", p.name, p.product_id),
                    p.own_profit.to_string(),
                    p.cross_profit.to_string(),
                    p.total_profit.to_string(),
                ]
            })
            .collect();
        out.push_str("Own and cross-selling profit per selected product\n");
        table(
            &mut out,
            [
                "Product",
                "Own profit",
                "Cross-selling profit",
                "Total profit",
            ],
            &prod_rows,
        );
        out.push('\n');
        out.push_str(self.note);
        out.push('\n');
        out
    }
}

fn table(out: &mut String, header: [&str; 4], rows: &[[String; 4]]) {
    let mut width = header.map(str::len);
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: [&str; 4]| {
        let _ = write!(out, "{:<w$}", cells[0], w = width[0]);
        for (k, cell) in cells.iter().enumerate().skip(1) {
            let _ = write!(out, "  {:>w$}", cell, w = width[k]);
        }
        out.push('\n');
    };
    line(out, header);
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    line(out, [&rule[0], &rule[1], &rule[2], &rule[3]]);
    for r in rows {
        line(out, [&r[0], &r[1], &r[2], &r[3]]);
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::allocation::AllocationMode;
    use crate::catalog::Product;
    use crate::itemset::Itemset;
    use crate::optimizer::{Proof, SolveStats};

    fn alloc_of(
        catalog: &Catalog,
        sets: &[(&[&str], i64)],
        residuals: &[(&str, i64)],
    ) -> AllocationResult {
        let set_margins: BTreeMap<Itemset, Money> = sets
            .iter()
            .map(|(ids, m)| (Itemset::new(catalog.resolve(ids).unwrap()), Money(*m)))
            .collect();
        let item_residuals: BTreeMap<ItemId, Money> = residuals
            .iter()
            .map(|(id, m)| (catalog.item_id(id).unwrap(), Money(*m)))
            .collect();
        let total_input =
            set_margins.values().sum::<Money>() + item_residuals.values().sum::<Money>();
        AllocationResult {
            set_margins,
            item_residuals,
            total_input,
            seed: 0,
            mode: AllocationMode::Sampled,
            exact: None,
            audit: Vec::new(),
        }
    }

    fn solution(ids: &[&str]) -> Solution {
        Solution {
            selected: ids.iter().map(|s| s.to_string()).collect(),
            active_sets: Vec::new(),
            objective: Money::ZERO,
            proof: Proof::Optimal,
            stats: SolveStats::default(),
        }
    }

    fn crafted() -> (Catalog, AllocationResult) {
        let catalog = Catalog::from_products(vec![
            Product::new("a", "K", 1, 0),
            Product::new("b", "K", 1, 0),
            Product::new("c", "L", 1, 0),
            Product::new("d", "M", 1, 2),
            Product::new("e", "M", 1, 2),
        ])
        .unwrap();
        let alloc = alloc_of(
            &catalog,
            &[
                (&["a"], 100),
                (&["b"], 10),
                (&["c"], 5),
                (&["a", "c"], 25),
                (&["b", "c"], 172),
            ],
            &[("d", 7), ("e", 3)],
        );
        (catalog, alloc)
    }

    #[test]
    fn own_and_cross_profit_rows_add_up() {
        let catalog = Catalog::from_products(vec![
            Product::new("x", "K", 1, 0),
            Product::new("y", "L", 1, 0),
        ])
        .unwrap();
        let alloc = alloc_of(
            &catalog,
            &[(&["x"], 12_000), (&["x", "y"], 264_228)],
            &[("x", 28)],
        );
        let rows = product_breakdown(&solution(&["x", "y"]), &alloc, &catalog).unwrap();
        assert_eq!(rows[0].own_profit, Money(12_028));
        assert_eq!(rows[0].cross_profit, Money(264_228));
        assert_eq!(rows[0].total, Money(276_256));
        // the shared set is credited to y as well
        assert_eq!(rows[1].cross_profit, Money(264_228));
    }

    #[test]
    fn naive_ties_go_to_smaller_id() {
        let catalog = Catalog::from_products(vec![
            Product::new("q", "K", 1, 0),
            Product::new("p", "K", 1, 0),
            Product::new("r", "K", 1, 0),
        ])
        .unwrap();
        let alloc = alloc_of(&catalog, &[(&["q"], 4), (&["r"], 4)], &[("p", 3)]);
        let naive = naive_selection(&catalog, &alloc);
        assert_eq!(naive[0].product_id, "q");
        assert_eq!(naive[0].own_profit, Money(4));
    }

    #[test]
    fn improvements_on_crafted_instance() {
        let (catalog, alloc) = crafted();
        let naive = naive_selection(&catalog, &alloc);
        let picks: Vec<_> = naive.iter().map(|p| p.product_id.as_str()).collect();
        assert_eq!(picks, ["a", "c", "d"]);

        let imp =
            category_improvements(&solution(&["b", "c", "e"]), &naive, &alloc, &catalog).unwrap();
        assert_eq!(imp[0].cross_naive, Money(25));
        assert_eq!(imp[0].cross_profset, Money(172));
        assert_eq!(imp[0].improvement, Improvement::Ratio(Ratio::new(147, 25)));
        assert_eq!(imp[0].improvement.percent(), Some(588));
        assert_eq!(
            imp[1].improvement,
            Improvement::Ratio(Ratio::from_integer(0))
        );
        assert!(!imp[2].has_frequent_products);
        assert_eq!(imp[2].improvement, Improvement::NotApplicable);
        assert_eq!(imp[2].improvement.percent(), None);
    }

    #[test]
    fn unsupported_category_falls_back_to_own_profit() {
        let (catalog, alloc) = crafted();
        let naive = naive_selection(&catalog, &alloc);
        let s = prefer_own_profit_where_unsupported(
            &solution(&["b", "c", "e"]),
            &naive,
            &alloc,
            &catalog,
        )
        .unwrap();
        assert_eq!(s.selected, ["b", "c", "d"]);
    }

    #[test]
    fn report_tables() {
        let (catalog, alloc) = crafted();
        let r = build_report(&catalog, &alloc, &solution(&["b", "c", "e"])).unwrap();
        assert_eq!(r.profset_selection, ["b", "c", "d"]);
        assert_eq!(r.naive_selection, ["a", "c", "d"]);
        assert_eq!(r.profset_objective, Money(10 + 5 + 172 - 2));
        assert_eq!(r.naive_objective, Money(100 + 5 + 25 - 2));
        assert_eq!(r.categories_changed, 1);
        let text = r.to_text();
        assert!(text.contains("588%"));
        assert!(text.contains("N/A"));
        assert!(text.contains("1 of 3"));
        assert!(text.contains(DOUBLE_COUNT_NOTE));
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["categories"][0]["improvement"]["num"], 147);
        assert!(json["categories"][2]["improvement"].is_null());
    }
}
