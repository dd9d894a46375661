use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use fairkm::{
    build_hst, build_split_tree, generate, run, Algo, BenchRow, ColorDist, Error, FairInstance,
    GenParams, OracleBudget, RunOptions, SpaceKind,
};

#[derive(Parser)]
#[command(name = "fairkm", version, about = "Fair k-median solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Brute,
    Hst,
    Qptas,
    Assign,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::Brute => Algo::Brute,
            AlgoArg::Hst => Algo::Hst,
            AlgoArg::Qptas => Algo::Qptas,
            AlgoArg::Assign => Algo::Assign,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Euclidean2d,
    Matrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorArg {
    Uniform,
    Skewed,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeKind {
    Split,
    Hst,
}

#[derive(clap::Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    trees: usize,
    /// Portal density for the split-tree solver; derived from epsilon if unset.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    max_states: u64,
    /// Above this many clients plus facilities the tree solver first moves
    /// points onto local-search centers.
    #[arg(long, default_value_t = 12)]
    reduce_threshold: usize,
    /// Work cap for the exhaustive solver and the oracle comparison.
    #[arg(long, default_value_t = 10_000_000)]
    oracle_budget: u64,
    /// Skip the comparison against the exhaustive optimum.
    #[arg(long)]
    no_oracle: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write a JSON report.
    Solve {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Report destination; stdout if unset.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Append a bench-format row to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Open facilities for `assign`, as zero-based indices: `0,2`.
        #[arg(long, value_delimiter = ',')]
        open: Vec<usize>,
        /// Loads for `assign`, one per open facility: `1,1;2,0`.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Generate a random instance.
    Gen {
        /// Number of clients.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Number of colors.
        #[arg(long)]
        colors: usize,
        #[arg(long, value_enum, default_value = "euclidean2d")]
        space: SpaceArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        facilities: Option<usize>,
        #[arg(long, value_enum, default_value = "uniform")]
        color_dist: ColorArg,
        #[arg(long, default_value_t = 0.25)]
        slack: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run solvers over every instance file in a directory.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "brute,hst,qptas"
        )]
        algos: Vec<AlgoArg>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print a sampled tree as JSON.
    DumpTree {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "split")]
        kind: TreeKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
    },
}

fn options(s: &SolverArgs) -> RunOptions {
    RunOptions {
        seed: s.seed,
        epsilon: s.epsilon,
        trees: s.trees,
        rho: s.rho,
        max_states: s.max_states,
        reduce_threshold: s.reduce_threshold,
        oracle_budget: OracleBudget {
            max_assignments: s.oracle_budget,
        },
        with_oracle: !s.no_oracle,
        ..RunOptions::default()
    }
}

fn load(path: &Path) -> anyhow::Result<FairInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FairInstance::from_json(&text)?)
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_lambda(text: &str, open: &[usize]) -> anyhow::Result<BTreeMap<usize, Vec<u32>>> {
    let rows: Vec<&str> = text.split(';').collect();
    if rows.len() != open.len() {
        bail!(
            "--lambda has {} rows for {} open facilities",
            rows.len(),
            open.len()
        );
    }
    rows.iter()
        .zip(open)
        .map(|(row, &f)| {
            let v = row
                .split(',')
                .map(|x| x.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("bad load row {row:?}"))?;
            Ok((f, v))
        })
        .collect()
}

fn name_of(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn append_rows(path: &Path, rows: &[BenchRow]) -> anyhow::Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve {
            algo,
            input,
            solver,
            output,
            csv,
            open,
            lambda,
        } => {
            let inst = load(&input)?;
            let mut opts = options(&solver);
            opts.lambda = lambda
                .as_deref()
                .map(|l| parse_lambda(l, &open))
                .transpose()?;
            opts.open = open;
            let report = run(&name_of(&input), &inst, algo.into(), &opts)?;
            emit(&report.to_json(), output.as_deref())?;
            if let Some(path) = csv {
                append_rows(&path, &[BenchRow::from(&report)])?;
            }
        }
        Command::Gen {
            n,
            k,
            colors,
            space,
            seed,
            facilities,
            color_dist,
            slack,
            output,
        } => {
            let params = GenParams {
                n,
                k,
                l: colors,
                space: match space {
                    SpaceArg::Euclidean2d => SpaceKind::Euclidean2d,
                    SpaceArg::Matrix => SpaceKind::Matrix,
                },
                colors: match color_dist {
                    ColorArg::Uniform => ColorDist::Uniform,
                    ColorArg::Skewed => ColorDist::Skewed,
                },
                seed,
                facilities,
                slack,
            };
            emit(&generate(&params)?.to_json(), output.as_deref())?;
        }
        Command::Bench {
            dir,
            output,
            algos,
            solver,
        } => {
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .with_context(|| format!("listing {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            if output.exists() {
                fs::remove_file(&output)?;
            }
            let opts = options(&solver);
            let mut rows = Vec::new();
            for file in &files {
                let inst = load(file)?;
                for &algo in &algos {
                    match run(&name_of(file), &inst, algo.into(), &opts) {
                        Ok(r) => rows.push(BenchRow::from(&r)),
                        Err(e) => {
                            let _ = writeln!(
                                std::io::stderr(),
                                "{}: {}: {e}",
                                name_of(file),
                                Algo::from(algo)
                            );
                        }
                    }
                }
            }
            append_rows(&output, &rows)?;
        }
        Command::DumpTree {
            input,
            kind,
            seed,
            rho,
        } => {
            let inst = load(&input)?;
            let points = inst.used_points();
            let json = match kind {
                TreeKind::Split => build_split_tree(&inst.metric, &points, rho, seed)?.to_json(),
                TreeKind::Hst => build_hst(&inst.metric, &points, seed)?.to_json(),
            };
            emit(&json, None)?;
        }
    }
    Ok(())
}

/// 2 infeasible, 3 budget exceeded, 4 unparsable input, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible) => 2,
        Some(
            Error::StateBudgetExceeded(_)
            | Error::BudgetExceeded(_)
            | Error::AspectRatioTooLarge { .. },
        ) => 3,
        Some(Error::Parse(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
