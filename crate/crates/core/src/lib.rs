//! Cross-selling product selection from market basket data.
//!
//! The pipeline has four steps:
//!
//! 1. [`mine_frequent`] finds every itemset bought together in at least
//!    `minsup` baskets.
//! 2. [`allocate_all`] hands each basket's margin to the frequent sets it
//!    contains, drawing among the largest ones in proportion to support.
//! 3. [`build_model`] and [`solve_exact`] choose the product set that
//!    maximizes allocated set margin minus handling cost under per-category
//!    bounds.
//! 4. [`build_report`] compares the result with picking each category's
//!    individually most profitable product.
//!
//! ```
//! use profset::*;
//!
//! let catalog = Catalog::from_products(vec![
//!     Product::new("beer", "drinks", 6, 0),
//!     Product::new("cola", "drinks", 4, 0),
//!     Product::new("chips", "snacks", 3, 0),
//!     Product::new("nuts", "snacks", 5, 0),
//! ])?;
//! let id = |s: &str| catalog.item_id(s).unwrap();
//! let db = TransactionDb::new(vec![
//!     Transaction::with_lines("1", [(id("cola"), 1), (id("chips"), 1)]),
//!     Transaction::with_lines("2", [(id("cola"), 1), (id("chips"), 2)]),
//!     Transaction::with_lines("3", [(id("beer"), 1)]),
//!     Transaction::with_lines("4", [(id("nuts"), 1)]),
//! ])?;
//!
//! let index = mine_frequent(&db, 1, MineOptions::default())?;
//! let alloc = allocate_all(&db, &index, &catalog, AllocateOptions::default())?;
//! let model = build_model(&alloc, &catalog, &ConstraintConfig::one_per_category(&catalog))?;
//! let solution = solve_exact(&model)?;
//!
//! // cola+chips earn 4+3 and 4+6 together, more than beer (6) and nuts (5).
//! assert_eq!(solution.selected, vec!["chips", "cola"]);
//! assert_eq!(solution.objective, Money(17));
//! # Ok::<(), profset::Error>(())
//! ```

pub mod allocation;
pub mod catalog;
mod error;
pub mod itemset;
pub mod mining;
mod money;
pub mod optimizer;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod synth;
pub mod transactions;

pub use allocation::{
    allocate_all, allocate_transaction_expected, allocate_transaction_sampled,
    maximal_frequent_subsets, theta, AllocateOptions, AllocationDistribution, AllocationMode,
    AllocationResult, ExpectedAllocation, SampledAllocation,
};
pub use catalog::{load_catalog, Catalog, Category, Product};
pub use error::{Error, ErrorClass, Result};
pub use itemset::{ItemId, Itemset};
pub use mining::{mine_frequent, FrequentSetIndex, MineOptions};
pub use money::Money;
pub use optimizer::{
    build_model, solve_brute, solve_exact, solve_exact_with, ConstraintConfig, ModelItem, ModelSet,
    ProfsetModel, Proof, Solution, SolveOptions,
};
pub use report::{
    build_report, category_improvements, naive_selection, product_breakdown, Improvement, Report,
};
pub use synth::{generate_synthetic, SynthConfig};
pub use transactions::{load_transactions, transaction_margin, Transaction, TransactionDb};
