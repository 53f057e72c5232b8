//! Allocation of transaction margins to frequent itemsets.
//!
//! A transaction's margin is handed out one purchase intention at a time.
//! If the remaining basket is itself a frequent set it takes the whole
//! remaining margin. Otherwise one of the basket's frequent subsets of
//! maximum *cardinality* is drawn with probability proportional to its
//! support, credited with the margin of its items, and removed from the
//! basket. Whatever is left once no frequent subset remains becomes per-item
//! residual margin.
//!
//! Two modes are offered. [`AllocationMode::Sampled`] runs the randomized
//! procedure with a per-transaction stream derived from the global seed.
//! [`AllocationMode::Expected`] computes the exact expectation of the sampled
//! result by walking the draw tree with memoization on the remaining basket;
//! it is the deterministic oracle for the sampled mode.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::rc::Rc;

use num::rational::{BigRational, Ratio};
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::itemset::{sorted_difference, ItemId, Itemset};
use crate::mining::FrequentSetIndex;
use crate::money::Money;
use crate::rng::{draw_weighted, transaction_stream};
use crate::transactions::{Transaction, TransactionDb};

pub const DEFAULT_STATE_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    #[default]
    Sampled,
    Expected,
}

impl std::str::FromStr for AllocationMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sampled" => Ok(AllocationMode::Sampled),
            "expected" => Ok(AllocationMode::Expected),
            other => Err(format!("unknown allocation mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AllocateOptions {
    pub mode: AllocationMode,
    pub seed: u64,
    /// Maximum distinct draw-tree states per transaction in expected mode.
    pub state_budget: usize,
    /// Record every sampled draw in [`AllocationResult::audit`].
    pub audit: bool,
}

impl Default for AllocateOptions {
    fn default() -> Self {
        AllocateOptions {
            mode: AllocationMode::Sampled,
            seed: 0,
            state_budget: DEFAULT_STATE_BUDGET,
            audit: false,
        }
    }
}

/// The cardinality-maximal frequent subsets of a basket with the weights of
/// the draw among them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationDistribution {
    candidates: Vec<(Itemset, u64)>,
    total_weight: u64,
}

impl AllocationDistribution {
    pub fn candidates(&self) -> &[(Itemset, u64)] {
        &self.candidates
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn probability(&self, i: usize) -> Ratio<u64> {
        Ratio::new(self.candidates[i].1, self.total_weight)
    }

    pub fn probabilities(&self) -> Vec<Ratio<u64>> {
        (0..self.candidates.len())
            .map(|i| self.probability(i))
            .collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &Itemset {
        let weights: Vec<u64> = self.candidates.iter().map(|c| c.1).collect();
        &self.candidates[draw_weighted(rng, &weights)].0
    }
}

/// Builds the draw distribution over maximal subsets: each candidate's weight
/// is its raw support count.
pub fn theta(maximals: Vec<(Itemset, u64)>) -> Result<AllocationDistribution> {
    if maximals.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if maximals.iter().any(|c| c.1 == 0) {
        return Err(Error::Inconsistent(
            "zero support in draw candidates".into(),
        ));
    }
    let total_weight = maximals.iter().map(|c| c.1).sum();
    Ok(AllocationDistribution {
        candidates: maximals,
        total_weight,
    })
}

/// Frequent subsets of `t` whose size is the largest size present.
pub fn maximal_frequent_subsets(t: &[ItemId], index: &FrequentSetIndex) -> Vec<Itemset> {
    index
        .maximal_subsets_of(t)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

/// One run of the randomized procedure on a single basket.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampledAllocation {
    /// Sets credited, in draw order, with the margin each received.
    pub draws: Vec<(Itemset, Money)>,
    pub residuals: Vec<(ItemId, Money)>,
}

pub fn allocate_transaction_sampled<R: Rng + ?Sized>(
    t: &Transaction,
    index: &FrequentSetIndex,
    catalog: &Catalog,
    rng: &mut R,
) -> SampledAllocation {
    let mut remaining = t.items();
    let mut draws = Vec::new();
    while !remaining.is_empty() {
        if index.contains(&remaining) {
            let margin = t.margin_of(&remaining, catalog);
            draws.push((Itemset::from_sorted(std::mem::take(&mut remaining)), margin));
            break;
        }
        let maximals = index.maximal_subsets_of(&remaining);
        if maximals.is_empty() {
            break;
        }
        let dist = theta(maximals).expect("non-empty, supports positive");
        let chosen = dist.draw(rng).clone();
        let margin = t.margin_of(chosen.items(), catalog);
        remaining = sorted_difference(&remaining, chosen.items());
        draws.push((chosen, margin));
    }
    let residuals = remaining
        .into_iter()
        .map(|i| (i, t.line_margin(i, catalog)))
        .collect();
    SampledAllocation { draws, residuals }
}

/// Exact expected contributions of one basket.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpectedAllocation {
    pub sets: BTreeMap<Itemset, BigRational>,
    pub residuals: BTreeMap<ItemId, BigRational>,
}

/// Probability that each set gets drawn, and that each item stays
/// uncovered, starting from a given remaining basket.
#[derive(Debug, Default)]
struct CoverProbabilities {
    sets: BTreeMap<Itemset, BigRational>,
    uncovered: BTreeMap<ItemId, BigRational>,
}

struct DrawTree<'a> {
    index: &'a FrequentSetIndex,
    memo: HashMap<Vec<ItemId>, Rc<CoverProbabilities>>,
    states: usize,
    budget: usize,
}

impl DrawTree<'_> {
    fn walk(&mut self, basket: &[ItemId]) -> Option<Rc<CoverProbabilities>> {
        if let Some(hit) = self.memo.get(basket) {
            return Some(hit.clone());
        }
        self.states += 1;
        if self.states > self.budget {
            return None;
        }
        let mut probs = CoverProbabilities::default();
        if basket.is_empty() {
        } else if self.index.contains(basket) {
            probs
                .sets
                .insert(Itemset::from_sorted(basket.to_vec()), BigRational::one());
        } else {
            let maximals = self.index.maximal_subsets_of(basket);
            if maximals.is_empty() {
                for &i in basket {
                    probs.uncovered.insert(i, BigRational::one());
                }
            } else {
                let total = BigInt::from(maximals.iter().map(|c| c.1).sum::<u64>());
                for (set, weight) in maximals {
                    let p = BigRational::new(BigInt::from(weight), total.clone());
                    let rest = sorted_difference(basket, set.items());
                    let child = self.walk(&rest)?;
                    *probs.sets.entry(set).or_insert_with(BigRational::zero) += &p;
                    for (s, q) in &child.sets {
                        *probs
                            .sets
                            .entry(s.clone())
                            .or_insert_with(BigRational::zero) += &p * q;
                    }
                    for (i, q) in &child.uncovered {
                        *probs.uncovered.entry(*i).or_insert_with(BigRational::zero) += &p * q;
                    }
                }
            }
        }
        let probs = Rc::new(probs);
        self.memo.insert(basket.to_vec(), probs.clone());
        Some(probs)
    }
}

/// Expected-mode allocation of one basket.
///
/// Fails with [`Error::StateBudget`] when the draw tree has more than
/// `state_budget` distinct remaining-basket states.
pub fn allocate_transaction_expected(
    t: &Transaction,
    index: &FrequentSetIndex,
    catalog: &Catalog,
    state_budget: usize,
) -> Result<ExpectedAllocation> {
    let probs =
        cover_probabilities(&t.items(), index, state_budget).ok_or_else(|| Error::StateBudget {
            transaction: t.id.clone(),
            budget: state_budget,
        })?;
    Ok(weight_by_margin(&probs, t, catalog))
}

fn cover_probabilities(
    basket: &[ItemId],
    index: &FrequentSetIndex,
    budget: usize,
) -> Option<Rc<CoverProbabilities>> {
    DrawTree {
        index,
        memo: HashMap::new(),
        states: 0,
        budget,
    }
    .walk(basket)
}

fn weight_by_margin(
    probs: &CoverProbabilities,
    t: &Transaction,
    catalog: &Catalog,
) -> ExpectedAllocation {
    let money = |m: Money| BigRational::from_integer(BigInt::from(m.0));
    ExpectedAllocation {
        sets: probs
            .sets
            .iter()
            .map(|(s, p)| (s.clone(), p * money(t.margin_of(s.items(), catalog))))
            .collect(),
        residuals: probs
            .uncovered
            .iter()
            .map(|(&i, p)| (i, p * money(t.line_margin(i, catalog))))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub transaction_id: String,
    pub itemset: Itemset,
    pub margin: Money,
}

/// Exact expected-mode totals before rounding to minor units.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactMargins {
    pub sets: BTreeMap<Itemset, BigRational>,
    pub residuals: BTreeMap<ItemId, BigRational>,
}

/// Accumulated margins `M(X)` per frequent set plus residual margin per item.
///
/// `Σ set_margins + Σ item_residuals == total_input` holds exactly. Entries
/// with zero margin are omitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationResult {
    pub set_margins: BTreeMap<Itemset, Money>,
    pub item_residuals: BTreeMap<ItemId, Money>,
    pub total_input: Money,
    pub seed: u64,
    pub mode: AllocationMode,
    /// Present for expected-mode results computed in this process.
    pub exact: Option<ExactMargins>,
    pub audit: Vec<AuditEntry>,
}

impl AllocationResult {
    pub fn set_margin(&self, items: &[ItemId]) -> Money {
        Itemset::try_new(items.iter().copied())
            .and_then(|s| self.set_margins.get(&s).copied())
            .unwrap_or(Money::ZERO)
    }

    pub fn residual(&self, item: ItemId) -> Money {
        self.item_residuals
            .get(&item)
            .copied()
            .unwrap_or(Money::ZERO)
    }

    pub fn allocated(&self) -> Money {
        self.set_margins.values().sum()
    }

    pub fn residual_total(&self) -> Money {
        self.item_residuals.values().sum()
    }

    /// Writes the JSON-lines allocation dump: a header object, then
    /// `{"itemset":[...],"margin_minor_units":n}` per set in canonical order,
    /// then `{"residual_item":id,"margin_minor_units":n}` per item.
    pub fn write_jsonl<W: Write>(&self, mut out: W, catalog: &Catalog) -> Result<()> {
        let header = AllocationHeader {
            mode: self.mode,
            seed: self.seed,
            total_input_minor_units: self.total_input.0,
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for (set, m) in &self.set_margins {
            let line = SetLine {
                itemset: set
                    .items()
                    .iter()
                    .map(|&i| catalog.product(i).id.clone())
                    .collect(),
                margin_minor_units: m.0,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        for (&item, m) in &self.item_residuals {
            let line = ResidualLine {
                residual_item: catalog.product(item).id.clone(),
                margin_minor_units: m.0,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(source: R, catalog: &Catalog) -> Result<AllocationResult> {
        let mut lines = source.lines();
        let header: AllocationHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Inconsistent("empty allocation dump".into())),
        };
        let mut set_margins = BTreeMap::new();
        let mut item_residuals = BTreeMap::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<DumpLine>(&line)? {
                DumpLine::Set(s) => {
                    let set = Itemset::try_new(catalog.resolve(&s.itemset)?)
                        .ok_or_else(|| Error::Inconsistent("empty itemset in dump".into()))?;
                    set_margins.insert(set, Money(s.margin_minor_units));
                }
                DumpLine::Residual(r) => {
                    let item = catalog.resolve(&[&r.residual_item])?[0];
                    item_residuals.insert(item, Money(r.margin_minor_units));
                }
            }
        }
        let result = AllocationResult {
            set_margins,
            item_residuals,
            total_input: Money(header.total_input_minor_units),
            seed: header.seed,
            mode: header.mode,
            exact: None,
            audit: Vec::new(),
        };
        if result.allocated() + result.residual_total() != result.total_input {
            return Err(Error::Inconsistent(
                "allocation dump does not conserve its total margin".into(),
            ));
        }
        Ok(result)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationHeader {
    mode: AllocationMode,
    seed: u64,
    total_input_minor_units: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetLine {
    itemset: Vec<String>,
    margin_minor_units: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualLine {
    residual_item: String,
    margin_minor_units: i64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DumpLine {
    Set(SetLine),
    Residual(ResidualLine),
}

/// Allocates every transaction of `db`.
///
/// Transactions are processed in parallel on the current rayon pool and
/// merged in database order; the result depends only on the inputs and
/// `options`.
pub fn allocate_all(
    db: &TransactionDb,
    index: &FrequentSetIndex,
    catalog: &Catalog,
    options: AllocateOptions,
) -> Result<AllocationResult> {
    let total_input = db.total_margin(catalog);
    match options.mode {
        AllocationMode::Sampled => {
            let per_txn: Vec<SampledAllocation> = db
                .transactions()
                .par_iter()
                .map(|t| {
                    let mut rng = transaction_stream(options.seed, &t.id);
                    allocate_transaction_sampled(t, index, catalog, &mut rng)
                })
                .collect();
            let mut set_margins: BTreeMap<Itemset, Money> = BTreeMap::new();
            let mut item_residuals: BTreeMap<ItemId, Money> = BTreeMap::new();
            let mut audit = Vec::new();
            for (t, alloc) in db.transactions().iter().zip(per_txn) {
                for (set, m) in alloc.draws {
                    if options.audit {
                        audit.push(AuditEntry {
                            transaction_id: t.id.clone(),
                            itemset: set.clone(),
                            margin: m,
                        });
                    }
                    *set_margins.entry(set).or_default() += m;
                }
                for (item, m) in alloc.residuals {
                    *item_residuals.entry(item).or_default() += m;
                }
            }
            set_margins.retain(|_, m| *m != Money::ZERO);
            item_residuals.retain(|_, m| *m != Money::ZERO);
            Ok(AllocationResult {
                set_margins,
                item_residuals,
                total_input,
                seed: options.seed,
                mode: options.mode,
                exact: None,
                audit,
            })
        }
        AllocationMode::Expected => {
            // Baskets with equal item sets share draw-tree probabilities.
            let mut distinct: BTreeMap<Vec<ItemId>, (String, Option<Rc<CoverProbabilities>>)> =
                BTreeMap::new();
            for t in db.transactions() {
                distinct.entry(t.items()).or_insert((t.id.clone(), None));
            }
            let keys: Vec<(&Vec<ItemId>, &String)> =
                distinct.iter().map(|(k, (id, _))| (k, id)).collect();
            let computed: Vec<Result<SendableProbs>> = keys
                .par_iter()
                .map(|(basket, id)| {
                    cover_probabilities(basket, index, options.state_budget)
                        .map(|p| SendableProbs::from(&*p))
                        .ok_or_else(|| Error::StateBudget {
                            transaction: (*id).clone(),
                            budget: options.state_budget,
                        })
                })
                .collect();
            let mut probs: HashMap<Vec<ItemId>, CoverProbabilities> = HashMap::new();
            for ((basket, _), p) in keys.iter().zip(computed) {
                probs.insert((*basket).clone(), p?.into());
            }
            drop(distinct);

            let mut exact = ExactMargins::default();
            for t in db.transactions() {
                let e = weight_by_margin(&probs[&t.items()], t, catalog);
                for (s, v) in e.sets {
                    *exact.sets.entry(s).or_insert_with(BigRational::zero) += v;
                }
                for (i, v) in e.residuals {
                    *exact.residuals.entry(i).or_insert_with(BigRational::zero) += v;
                }
            }
            exact.sets.retain(|_, v| !v.is_zero());
            exact.residuals.retain(|_, v| !v.is_zero());
            let (set_margins, item_residuals) = round_conserving(&exact, total_input);
            Ok(AllocationResult {
                set_margins,
                item_residuals,
                total_input,
                seed: options.seed,
                mode: options.mode,
                exact: Some(exact),
                audit: Vec::new(),
            })
        }
    }
}

// `Rc` is not `Send`; the parallel stage hands back plain maps.
struct SendableProbs {
    sets: BTreeMap<Itemset, BigRational>,
    uncovered: BTreeMap<ItemId, BigRational>,
}

impl From<&CoverProbabilities> for SendableProbs {
    fn from(p: &CoverProbabilities) -> Self {
        SendableProbs {
            sets: p.sets.clone(),
            uncovered: p.uncovered.clone(),
        }
    }
}

impl From<SendableProbs> for CoverProbabilities {
    fn from(p: SendableProbs) -> Self {
        CoverProbabilities {
            sets: p.sets,
            uncovered: p.uncovered,
        }
    }
}

/// Rounds exact totals to minor units by largest remainder: every value is
/// floored, then the units still missing from `total` go one each to the
/// entries with the largest fractional parts (ties in key order, sets before
/// residual items). Each rounded value is the floor or ceiling of its exact
/// value and the rounded values sum to `total`.
fn round_conserving(
    exact: &ExactMargins,
    total: Money,
) -> (BTreeMap<Itemset, Money>, BTreeMap<ItemId, Money>) {
    enum Key<'a> {
        Set(&'a Itemset),
        Item(ItemId),
    }
    let mut entries: Vec<(Key, i64, BigRational)> = Vec::new();
    let mut floor_sum: i64 = 0;
    let values = exact
        .sets
        .iter()
        .map(|(s, v)| (Key::Set(s), v))
        .chain(exact.residuals.iter().map(|(&i, v)| (Key::Item(i), v)));
    for (key, v) in values {
        let floor = v.floor();
        let whole = floor.to_integer().to_i64().expect("margins fit in i64");
        floor_sum += whole;
        entries.push((key, whole, v - floor));
    }
    let deficit = total.0 - floor_sum;
    debug_assert!(deficit >= 0 && deficit as usize <= entries.len());
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[b].2.cmp(&entries[a].2).then(a.cmp(&b)));
    for &k in order.iter().take(deficit.max(0) as usize) {
        debug_assert!(entries[k].2.is_positive());
        entries[k].1 += 1;
    }
    let mut sets = BTreeMap::new();
    let mut items = BTreeMap::new();
    for (key, v, _) in entries {
        if v == 0 {
            continue;
        }
        match key {
            Key::Set(s) => {
                sets.insert(s.clone(), Money(v));
            }
            Key::Item(i) => {
                items.insert(i, Money(v));
            }
        }
    }
    (sets, items)
}
