use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use profset::pipeline::{
    self, read_allocation, read_baskets, read_catalog, read_category_overrides, read_itemsets,
    read_solution, read_synth_config, write_with, ConstraintArgs, PipelineConfig, ALLOCATION_FILE,
    DEFAULT_MINSUP, ITEMSETS_FILE, MODEL_FILE, REPORT_JSON_FILE, REPORT_TEXT_FILE, SOLUTION_FILE,
};
use profset::{
    allocate_all, build_model, build_report, generate_synthetic, mine_frequent, solve_exact_with,
    AllocateOptions, AllocationMode, Error, ErrorClass, MineOptions, Report, SolveOptions,
};

const DEFAULT_STATE_BUDGET: usize = profset::allocation::DEFAULT_STATE_BUDGET;
const DEFAULT_NODE_BUDGET: u64 = profset::optimizer::DEFAULT_NODE_BUDGET;

#[derive(Parser, Debug)]
#[command(
    name = "profset",
    version,
    about = "Cross-selling product selection from basket data"
)]
struct Cli {
    /// Worker threads for mining and allocation. Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic catalog.csv and baskets.csv from a JSON config.
    Generate(GenerateArgs),
    /// Mine frequent itemsets into itemsets.jsonl.
    Mine(MineArgs),
    /// Allocate basket margins to frequent itemsets into allocation.jsonl.
    Allocate(AllocateArgs),
    /// Build the selection model and solve it into model.json and solution.json.
    Optimize(OptimizeArgs),
    /// Compare the solution with the naive selection into report.txt and report.json.
    Report(ReportArgs),
    /// Run mine, allocate, optimize and report in sequence.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Product catalog CSV.
    #[arg(long)]
    catalog: PathBuf,
}

#[derive(Args, Debug)]
struct OutDir {
    /// Directory that holds the stage artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Synthetic data configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct MiningFlags {
    /// Minimum absolute support.
    #[arg(long, default_value_t = DEFAULT_MINSUP)]
    minsup: u64,
    /// Largest itemset size to mine.
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Args, Debug)]
struct AllocationFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Sampled)]
    mode: Mode,
    /// Draw-tree states allowed per basket in expected mode.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    state_budget: usize,
}

#[derive(Args, Debug)]
struct ConstraintFlags {
    /// Total number of selected products. Defaults to the number of categories.
    #[arg(long)]
    item_max: Option<usize>,
    /// Minimum products per category.
    #[arg(long, default_value_t = 1)]
    item_min_default: usize,
    /// CSV with `category_id,item_min[,item_cap]` overrides.
    #[arg(long)]
    item_min_file: Option<PathBuf>,
    /// Search nodes allowed before giving up.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    baskets: PathBuf,
    #[command(flatten)]
    mining: MiningFlags,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct AllocateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    baskets: PathBuf,
    /// Itemset dump. Defaults to itemsets.jsonl in the output directory.
    #[arg(long)]
    itemsets: Option<PathBuf>,
    #[command(flatten)]
    allocation: AllocationFlags,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Allocation dump. Defaults to allocation.jsonl in the output directory.
    #[arg(long)]
    allocation: Option<PathBuf>,
    #[command(flatten)]
    constraints: ConstraintFlags,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Allocation dump. Defaults to allocation.jsonl in the output directory.
    #[arg(long)]
    allocation: Option<PathBuf>,
    /// Solution file. Defaults to solution.json in the output directory.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Report format printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    baskets: PathBuf,
    #[command(flatten)]
    mining: MiningFlags,
    #[command(flatten)]
    allocation: AllocationFlags,
    #[command(flatten)]
    constraints: ConstraintFlags,
    /// Report format printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Sampled,
    Expected,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl AllocationFlags {
    fn options(&self) -> AllocateOptions {
        AllocateOptions {
            mode: match self.mode {
                Mode::Sampled => AllocationMode::Sampled,
                Mode::Expected => AllocationMode::Expected,
            },
            seed: self.seed,
            state_budget: self.state_budget,
            audit: false,
        }
    }
}

impl ConstraintFlags {
    fn args(&self) -> profset::Result<ConstraintArgs> {
        let overrides = match &self.item_min_file {
            Some(p) => read_category_overrides(p)?,
            None => Default::default(),
        };
        Ok(ConstraintArgs {
            item_max: self.item_max,
            item_min_default: self.item_min_default,
            overrides,
        })
    }
}

fn create_dir(dir: &Path) -> profset::Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })
}

fn print_report(report: &Report, format: Format) -> profset::Result<()> {
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn write_report(dir: &Path, report: &Report) -> profset::Result<()> {
    write_with(&dir.join(REPORT_TEXT_FILE), |w| {
        w.write_all(report.to_text().as_bytes())?;
        Ok(())
    })?;
    write_with(&dir.join(REPORT_JSON_FILE), |w| {
        w.write_all(report.to_json()?.as_bytes())?;
        Ok(())
    })
}

fn execute(command: Command) -> profset::Result<()> {
    match command {
        Command::Generate(a) => {
            let cfg = read_synth_config(&a.config)?;
            let (catalog, db) = generate_synthetic(&cfg, a.seed)?;
            create_dir(&a.out.out_dir)?;
            write_with(&a.out.out_dir.join("catalog.csv"), |w| catalog.write_csv(w))?;
            write_with(&a.out.out_dir.join("baskets.csv"), |w| {
                db.write_csv(w, &catalog)
            })?;
        }
        Command::Mine(a) => {
            if a.mining.minsup == 0 {
                return Err(Error::ZeroMinsup);
            }
            let catalog = read_catalog(&a.input.catalog)?;
            let db = read_baskets(&a.baskets, &catalog)?;
            let index = mine_frequent(
                &db,
                a.mining.minsup,
                MineOptions {
                    max_len: a.mining.max_len,
                },
            )?;
            create_dir(&a.out.out_dir)?;
            write_with(&a.out.out_dir.join(ITEMSETS_FILE), |w| {
                index.write_jsonl(w, &catalog)
            })?;
        }
        Command::Allocate(a) => {
            let catalog = read_catalog(&a.input.catalog)?;
            let db = read_baskets(&a.baskets, &catalog)?;
            let itemsets = a
                .itemsets
                .unwrap_or_else(|| a.out.out_dir.join(ITEMSETS_FILE));
            let index = read_itemsets(&itemsets, &catalog)?;
            let alloc = allocate_all(&db, &index, &catalog, a.allocation.options())?;
            create_dir(&a.out.out_dir)?;
            write_with(&a.out.out_dir.join(ALLOCATION_FILE), |w| {
                alloc.write_jsonl(w, &catalog)
            })?;
        }
        Command::Optimize(a) => {
            let catalog = read_catalog(&a.input.catalog)?;
            let path = a
                .allocation
                .unwrap_or_else(|| a.out.out_dir.join(ALLOCATION_FILE));
            let alloc = read_allocation(&path, &catalog)?;
            let constraints = a.constraints.args()?.resolve(&catalog)?;
            let model = build_model(&alloc, &catalog, &constraints)?;
            create_dir(&a.out.out_dir)?;
            write_with(&a.out.out_dir.join(MODEL_FILE), |w| {
                writeln!(w, "{}", model.to_json()?)?;
                Ok(())
            })?;
            let solution = solve_exact_with(
                &model,
                SolveOptions {
                    node_budget: a.constraints.node_budget,
                },
            )?;
            write_with(&a.out.out_dir.join(SOLUTION_FILE), |w| {
                pipeline::write_solution(w, &solution)
            })?;
        }
        Command::Report(a) => {
            let catalog = read_catalog(&a.input.catalog)?;
            let alloc_path = a
                .allocation
                .unwrap_or_else(|| a.out.out_dir.join(ALLOCATION_FILE));
            let alloc = read_allocation(&alloc_path, &catalog)?;
            let sol_path = a
                .solution
                .unwrap_or_else(|| a.out.out_dir.join(SOLUTION_FILE));
            let solution = read_solution(&sol_path)?;
            let report = build_report(&catalog, &alloc, &solution)?;
            create_dir(&a.out.out_dir)?;
            write_report(&a.out.out_dir, &report)?;
            print_report(&report, a.format)?;
        }
        Command::Run(a) => {
            let mut cfg = PipelineConfig::new(a.input.catalog, a.baskets, a.out.out_dir);
            cfg.minsup = a.mining.minsup;
            cfg.mine = MineOptions {
                max_len: a.mining.max_len,
            };
            cfg.allocate = a.allocation.options();
            cfg.constraints = a.constraints.args()?;
            cfg.solve = SolveOptions {
                node_budget: a.constraints.node_budget,
            };
            let outcome = pipeline::run_pipeline(&cfg)?;
            print_report(&outcome.report, a.format)?;
        }
    }
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Data => 2,
        ErrorClass::Infeasible => 3,
        ErrorClass::Budget => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version go to stdout and are not errors
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
