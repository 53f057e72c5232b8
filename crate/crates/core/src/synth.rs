//! Seeded synthetic catalogs and basket databases.
//!
//! Baskets are assembled from two sources: planted itemsets, each injected
//! whole with its own probability, and background items drawn with a
//! Zipf-like popularity. Categories listed in `rare_categories` never receive
//! background draws, so their products only appear through planted sets.
//!
//! The output is a pure function of `(config, seed)`.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Product};
use crate::error::{Error, Result};
use crate::itemset::ItemId;
use crate::money::Money;
use crate::transactions::{Transaction, TransactionDb};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: i64,
    pub max: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSet {
    /// 0-based product indices.
    pub items: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub products: usize,
    pub categories: usize,
    pub baskets: usize,
    /// Poisson mean of the number of background draws per basket.
    pub mean_basket_size: f64,
    #[serde(default = "default_max_quantity")]
    pub max_quantity: u32,
    pub unit_margin: IntRange,
    pub cost: IntRange,
    /// Exponent of the popularity law `1 / rank^skew`.
    #[serde(default = "default_skew")]
    pub popularity_skew: f64,
    #[serde(default)]
    pub planted: Vec<PlantedSet>,
    /// 0-based category indices excluded from background draws.
    #[serde(default)]
    pub rare_categories: Vec<usize>,
}

fn default_max_quantity() -> u32 {
    1
}

fn default_skew() -> f64 {
    1.0
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SynthConfig(m));
        if self.categories == 0 || self.products < self.categories {
            return bad(format!(
                "need at least one product per category ({} products, {} categories)",
                self.products, self.categories
            ));
        }
        if self.baskets == 0 {
            return bad("baskets must be positive".into());
        }
        if !(self.mean_basket_size.is_finite() && self.mean_basket_size > 0.0) {
            return bad("mean_basket_size must be positive".into());
        }
        if self.max_quantity == 0 {
            return bad("max_quantity must be at least 1".into());
        }
        if !self.popularity_skew.is_finite() || self.popularity_skew < 0.0 {
            return bad("popularity_skew must be a non-negative number".into());
        }
        for (name, r) in [("unit_margin", self.unit_margin), ("cost", self.cost)] {
            if r.min > r.max {
                return bad(format!("{name} range has min > max"));
            }
        }
        if self.cost.min < 0 {
            return bad("cost range must be non-negative".into());
        }
        for (k, p) in self.planted.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.probability) {
                return bad(format!(
                    "planted set {k}: probability {} outside [0,1]",
                    p.probability
                ));
            }
            if p.items.is_empty() {
                return bad(format!("planted set {k} is empty"));
            }
            if let Some(&i) = p.items.iter().find(|&&i| i >= self.products) {
                return bad(format!(
                    "planted set {k} references product index {i}, catalog has {}",
                    self.products
                ));
            }
        }
        if let Some(&c) = self.rare_categories.iter().find(|&&c| c >= self.categories) {
            return bad(format!("rare category index {c} out of range"));
        }
        if (0..self.categories).all(|c| self.rare_categories.contains(&c)) {
            return bad("every category is rare; nothing to draw baskets from".into());
        }
        Ok(())
    }

    /// Category index of product `i`; categories are contiguous blocks.
    pub fn category_of(&self, product: usize) -> usize {
        product * self.categories / self.products
    }

    pub fn product_id(&self, product: usize) -> String {
        format!("P{:0w$}", product, w = digits(self.products))
    }

    pub fn category_id(&self, category: usize) -> String {
        format!("C{:0w$}", category, w = digits(self.categories))
    }
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// Generates a catalog and basket database from `config`.
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<(Catalog, TransactionDb)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut products = Vec::with_capacity(config.products);
    let mut names = BTreeMap::new();
    for i in 0..config.products {
        let c = config.category_of(i);
        let cid = config.category_id(c);
        names.entry(cid.clone()).or_insert(format!("Category {c}"));
        products.push(Product {
            id: config.product_id(i),
            name: format!("Product {i}"),
            category_id: cid,
            unit_margin: Money(rng.random_range(config.unit_margin.min..=config.unit_margin.max)),
            cost: Money(rng.random_range(config.cost.min..=config.cost.max)),
        });
    }
    let catalog = Catalog::with_category_names(products, &names)?;
    // Zero-padded ids sort numerically, so product index i is ItemId(i).
    debug_assert!((0..config.products)
        .all(|i| catalog.item_id(&config.product_id(i)) == Some(ItemId(i as u32))));

    let mut ranks: Vec<usize> = (0..config.products).collect();
    ranks.shuffle(&mut rng);
    let weights: Vec<f64> = (0..config.products)
        .map(|i| {
            if config.rare_categories.contains(&config.category_of(i)) {
                0.0
            } else {
                1.0 / ((ranks[i] + 1) as f64).powf(config.popularity_skew)
            }
        })
        .collect();
    let background = WeightedIndex::new(&weights)
        .map_err(|e| Error::SynthConfig(format!("popularity weights: {e}")))?;
    let basket_size = Poisson::new(config.mean_basket_size)
        .map_err(|e| Error::SynthConfig(format!("basket size: {e}")))?;

    let width = digits(config.baskets);
    let mut transactions = Vec::with_capacity(config.baskets);
    for j in 0..config.baskets {
        let mut chosen: Vec<usize> = Vec::new();
        for planted in &config.planted {
            if rng.random_bool(planted.probability) {
                chosen.extend(&planted.items);
            }
        }
        let mut draws = basket_size.sample(&mut rng) as usize;
        if draws == 0 && chosen.is_empty() {
            draws = 1;
        }
        for _ in 0..draws {
            chosen.push(background.sample(&mut rng));
        }
        chosen.sort_unstable();
        chosen.dedup();
        let mut t = Transaction::new(format!("T{:0width$}", j));
        for i in chosen {
            t.add(ItemId(i as u32), rng.random_range(1..=config.max_quantity));
        }
        transactions.push(t);
    }
    Ok((catalog, TransactionDb::new(transactions)?))
}
