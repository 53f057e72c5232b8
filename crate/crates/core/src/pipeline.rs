//! File-based stages: mine, allocate, optimize, report.
//!
//! Every stage reads its inputs from disk and writes one artifact, so the
//! stages can be run one at a time or chained by [`run_pipeline`] with
//! identical results.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::allocation::{allocate_all, AllocateOptions, AllocationMode, AllocationResult};
use crate::catalog::{load_catalog, parse_int, read_table, Catalog};
use crate::error::{Error, Result};
use crate::mining::{mine_frequent, FrequentSetIndex, MineOptions};
use crate::optimizer::{
    build_model, solve_exact_with, ConstraintConfig, ProfsetModel, Solution, SolveOptions,
};
use crate::report::{build_report, Report};
use crate::synth::SynthConfig;
use crate::transactions::{load_transactions, TransactionDb};

pub const DEFAULT_MINSUP: u64 = 30;

pub const ITEMSETS_FILE: &str = "itemsets.jsonl";
pub const ALLOCATION_FILE: &str = "allocation.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const SOLUTION_FILE: &str = "solution.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_catalog(path: &Path) -> Result<Catalog> {
    load_catalog(open(path)?).map_err(|e| e.in_file(origin(path)))
}

pub fn read_baskets(path: &Path, catalog: &Catalog) -> Result<TransactionDb> {
    load_transactions(open(path)?, catalog).map_err(|e| e.in_file(origin(path)))
}

pub fn read_itemsets(path: &Path, catalog: &Catalog) -> Result<FrequentSetIndex> {
    FrequentSetIndex::read_jsonl(open(path)?, catalog).map_err(|e| e.in_file(origin(path)))
}

pub fn read_allocation(path: &Path, catalog: &Catalog) -> Result<AllocationResult> {
    AllocationResult::read_jsonl(open(path)?, catalog).map_err(|e| e.in_file(origin(path)))
}

pub fn read_solution(path: &Path) -> Result<Solution> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::from(e).in_file(origin(path)))
}

pub fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::from(e).in_file(origin(path)))
}

pub fn write_with(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-category bounds read from `category_id,item_min[,item_cap]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CategoryOverrides {
    pub item_min: BTreeMap<String, usize>,
    pub item_cap: BTreeMap<String, usize>,
}

pub fn load_category_overrides<R: Read>(source: R) -> Result<CategoryOverrides> {
    let mut out = CategoryOverrides::default();
    let Some(rows) = read_table(source, &["category_id", "item_min"])? else {
        return Ok(out);
    };
    for (line, rec) in rows {
        if rec.len() != 2 && rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 or 3 columns, found {}", rec.len()),
            });
        }
        let count = |field: &str, column: &str| -> Result<usize> {
            let v = parse_int(field, column, line)?;
            usize::try_from(v).map_err(|_| Error::Parse {
                line,
                message: format!("{column} must be non-negative, got {v}"),
            })
        };
        let id = rec[0].trim().to_string();
        out.item_min.insert(id.clone(), count(&rec[1], "item_min")?);
        if rec.len() == 3 && !rec[2].trim().is_empty() {
            out.item_cap.insert(id, count(&rec[2], "item_cap")?);
        }
    }
    Ok(out)
}

pub fn read_category_overrides(path: &Path) -> Result<CategoryOverrides> {
    load_category_overrides(open(path)?).map_err(|e| e.in_file(origin(path)))
}

/// Constraint settings as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintArgs {
    /// Defaults to the number of categories.
    pub item_max: Option<usize>,
    pub item_min_default: usize,
    pub overrides: CategoryOverrides,
}

impl Default for ConstraintArgs {
    fn default() -> Self {
        ConstraintArgs {
            item_max: None,
            item_min_default: 1,
            overrides: CategoryOverrides::default(),
        }
    }
}

impl ConstraintArgs {
    pub fn resolve(&self, catalog: &Catalog) -> Result<ConstraintConfig> {
        let item_max = self.item_max.unwrap_or(catalog.categories().len());
        let mut cfg = ConstraintConfig::uniform(catalog, item_max, self.item_min_default);
        for (id, &min) in &self.overrides.item_min {
            if catalog.category_index(id).is_none() {
                return Err(Error::UnknownCategory(id.clone()));
            }
            cfg.item_min.insert(id.clone(), min);
        }
        for (id, &cap) in &self.overrides.item_cap {
            if catalog.category_index(id).is_none() {
                return Err(Error::UnknownCategory(id.clone()));
            }
            cfg.item_cap.insert(id.clone(), cap);
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub catalog: PathBuf,
    pub baskets: PathBuf,
    pub out_dir: PathBuf,
    pub minsup: u64,
    pub mine: MineOptions,
    pub allocate: AllocateOptions,
    pub constraints: ConstraintArgs,
    pub solve: SolveOptions,
}

impl PipelineConfig {
    pub fn new(
        catalog: impl Into<PathBuf>,
        baskets: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> PipelineConfig {
        PipelineConfig {
            catalog: catalog.into(),
            baskets: baskets.into(),
            out_dir: out_dir.into(),
            minsup: DEFAULT_MINSUP,
            mine: MineOptions::default(),
            allocate: AllocateOptions {
                mode: AllocationMode::Sampled,
                ..AllocateOptions::default()
            },
            constraints: ConstraintArgs::default(),
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub catalog: Catalog,
    pub index: FrequentSetIndex,
    pub allocation: AllocationResult,
    pub model: ProfsetModel,
    pub solution: Solution,
    pub report: Report,
}

/// Mines, allocates, optimizes and reports, writing every artifact into
/// `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    if cfg.minsup == 0 {
        return Err(Error::ZeroMinsup);
    }
    let catalog = read_catalog(&cfg.catalog)?;
    let db = read_baskets(&cfg.baskets, &catalog)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::File {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let out = |name: &str| cfg.out_dir.join(name);

    let index = mine_frequent(&db, cfg.minsup, cfg.mine)?;
    write_with(&out(ITEMSETS_FILE), |w| index.write_jsonl(w, &catalog))?;

    let allocation = allocate_all(&db, &index, &catalog, cfg.allocate)?;
    write_with(&out(ALLOCATION_FILE), |w| {
        allocation.write_jsonl(w, &catalog)
    })?;

    let constraints = cfg.constraints.resolve(&catalog)?;
    let model = build_model(&allocation, &catalog, &constraints)?;
    write_with(&out(MODEL_FILE), |w| {
        writeln!(w, "{}", model.to_json()?)?;
        Ok(())
    })?;
    let solution = solve_exact_with(&model, cfg.solve)?;
    write_with(&out(SOLUTION_FILE), |w| write_solution(w, &solution))?;

    let report = build_report(&catalog, &allocation, &solution)?;
    write_with(&out(REPORT_TEXT_FILE), |w| {
        w.write_all(report.to_text().as_bytes())?;
        Ok(())
    })?;
    write_with(&out(REPORT_JSON_FILE), |w| {
        w.write_all(report.to_json()?.as_bytes())?;
        Ok(())
    })?;

    Ok(PipelineOutcome {
        catalog,
        index,
        allocation,
        model,
        solution,
        report,
    })
}

pub fn write_solution(w: &mut dyn Write, solution: &Solution) -> Result<()> {
    writeln!(w, "{}", serde_json::to_string_pretty(solution)?)?;
    Ok(())
}
