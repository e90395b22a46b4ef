//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure or a `--strict`
//! verdict failure, 2 on usage errors (clap's default).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heatlab::error::{Error, Result};
use heatlab::generators;
use heatlab::graph::{Vertex, WeightedGraph};
use heatlab::kernel::tilde_kernel;
use heatlab::potential::{
    annulus_resistance, green_function, mean_exit_time, smallest_eigenvalue,
};
use heatlab::report::{
    manifest_path, render_markdown, write_curves_csv, RunManifest, RunReport,
};
use heatlab::scaling::{
    build_scaling_table, fit_exponents, read_table_csv, write_table_csv, ScalingSource,
};
use heatlab::verify::{verify_many, Verdict, VerifierConfig, CONDITION_NAMES};
use heatlab::{fileio, mc};

#[derive(Parser)]
#[command(name = "heatlab", version, about = "potential theory lab for random walks on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph file from a built-in family.
    Generate(GenerateArgs),
    /// Compute one potential-theoretic quantity.
    Compute(ComputeArgs),
    /// Fit scaling exponents from a table or a graph.
    Fit(FitArgs),
    /// Run condition verifiers and write a canonical report.
    Verify(VerifyArgs),
    /// Monte Carlo estimates, deterministic per seed.
    Mc(McArgs),
    /// Render an existing report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lattice,
    Gasket,
    Vicsek,
    Glue,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Lattice dimension (lattice only).
    #[arg(long, default_value_t = 1)]
    dim: u32,
    /// Lattice side length (lattice only).
    #[arg(long, default_value_t = 65)]
    side: u32,
    /// Recursion level (gasket and vicsek).
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Uniform edge weight.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Left graph file (glue only).
    #[arg(long)]
    left: Option<PathBuf>,
    /// Right graph file (glue only).
    #[arg(long)]
    right: Option<PathBuf>,
    /// Glue point on the left graph: vertex id or anchor name.
    #[arg(long, default_value = "center")]
    left_at: String,
    /// Glue point on the right graph: vertex id or anchor name.
    #[arg(long, default_value = "center")]
    right_at: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(subcommand)]
    quantity: Quantity,
}

#[derive(Subcommand)]
enum Quantity {
    /// Mean exit time E(x, R) from the open ball.
    Exittime {
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: u32,
    },
    /// Green function of the killed walk on B(x, R), at the pole.
    Green {
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: u32,
    },
    /// Effective resistance across the annulus r < d < R.
    Resistance {
        #[arg(long)]
        center: String,
        #[arg(long)]
        inner: u32,
        #[arg(long)]
        outer: u32,
    },
    /// Smallest Dirichlet eigenvalue of the ball.
    Lambda {
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: u32,
    },
    /// Parity-smoothed kernel value at a target vertex.
    Kernel {
        #[arg(long)]
        center: String,
        #[arg(long)]
        time: u32,
        /// Defaults to the center (diagonal value).
        #[arg(long)]
        target: Option<String>,
    },
}

#[derive(Args)]
struct FitArgs {
    /// Scaling table CSV, as written by `fit --out` or `write_table_csv`.
    #[arg(long, conflicts_with_all = ["graph", "source"])]
    table: Option<PathBuf>,
    #[arg(long, requires = "source")]
    graph: Option<PathBuf>,
    /// Quantity to tabulate when fitting from a graph.
    #[arg(long, value_parser = ["exittime", "rhov", "volume"])]
    source: Option<String>,
    /// Radii grid, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 4, 8, 16, 32])]
    radii: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    centers: usize,
    /// Write the tabulated grid as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated condition names, or "all".
    #[arg(long, default_value = "all")]
    conditions: String,
    /// Config JSON file; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report output path; console summary only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-condition curve CSVs into this directory.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Exit 1 if any condition fails outright.
    #[arg(long)]
    strict: bool,
    /// Override the measurement radii, comma-separated.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<u32>>,
    /// Override the kernel time grid, comma-separated.
    #[arg(long, value_delimiter = ',')]
    kernel_times: Option<Vec<u64>>,
    /// Override the per-radius center cap.
    #[arg(long)]
    centers: Option<usize>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(subcommand)]
    estimator: Estimator,
}

#[derive(Subcommand)]
enum Estimator {
    /// Mean exit time from B(x, R).
    Exittime {
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exit-site distribution from B(x, R).
    Exitsite {
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Smoothed kernel value at a target.
    Kernel {
        #[arg(long)]
        center: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        time: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON produced by `verify`.
    #[arg(long, visible_alias = "in")]
    input: PathBuf,
    #[arg(long, value_parser = ["md", "json"], default_value = "md")]
    format: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HEATLAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Compute(args) => compute(args),
        Command::Fit(args) => fit(args),
        Command::Verify(args) => verify(args),
        Command::Mc(args) => monte_carlo(args),
        Command::Report(args) => report(args),
    }
}

/// A vertex argument is an id or an anchor name.
fn resolve_vertex(g: &WeightedGraph, spec: &str) -> Result<Vertex> {
    if let Ok(v) = spec.parse::<Vertex>() {
        g.check_vertex(v)?;
        return Ok(v);
    }
    g.anchors().get(spec).copied().ok_or_else(|| Error::Usage {
        what: format!(
            "unknown anchor {spec:?} (known: {})",
            g.anchors().keys().cloned().collect::<Vec<_>>().join(", ")
        ),
    })
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let g = match args.family {
        Family::Lattice => generators::lattice(args.dim, args.side, args.weight)?,
        Family::Gasket => generators::sierpinski_gasket(args.level, args.weight)?,
        Family::Vicsek => generators::vicsek_tree(args.level, args.weight)?,
        Family::Glue => {
            let (left, right) = match (&args.left, &args.right) {
                (Some(l), Some(r)) => (l, r),
                _ => {
                    return Err(Error::ConfigOrderViolation {
                        what: "glue needs --left and --right graph files".into(),
                    })
                }
            };
            let a = fileio::load_graph(left)?;
            let b = fileio::load_graph(right)?;
            let xa = resolve_vertex(&a, &args.left_at)?;
            let xb = resolve_vertex(&b, &args.right_at)?;
            generators::glue(&a, &b, xa, xb)?
        }
    };
    fileio::save_graph(&g, &args.out)?;
    println!(
        "wrote {} ({} vertices, {} edges)",
        args.out.display(),
        g.vertex_count(),
        g.edge_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn compute(args: ComputeArgs) -> Result<ExitCode> {
    let g = fileio::load_graph(&args.graph)?;
    match args.quantity {
        Quantity::Exittime { center, radius } => {
            let x = resolve_vertex(&g, &center)?;
            println!("{:.16e}", mean_exit_time(&g, x, radius)?.at_center());
        }
        Quantity::Green { center, radius } => {
            let x = resolve_vertex(&g, &center)?;
            let ball = g.ball(x, radius)?;
            println!("{:.16e}", green_function(&g, &ball, x)?.value(x));
        }
        Quantity::Resistance { center, inner, outer } => {
            let x = resolve_vertex(&g, &center)?;
            println!("{:.16e}", annulus_resistance(&g, x, inner, outer)?.resistance);
        }
        Quantity::Lambda { center, radius } => {
            let x = resolve_vertex(&g, &center)?;
            let ball = g.ball(x, radius)?;
            println!("{:.16e}", smallest_eigenvalue(&g, &ball)?.lambda);
        }
        Quantity::Kernel { center, time, target } => {
            let x = resolve_vertex(&g, &center)?;
            let y = match target {
                Some(t) => resolve_vertex(&g, &t)?,
                None => x,
            };
            println!("{:.16e}", tilde_kernel(&g, x, time)?.value(y));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn fit(args: FitArgs) -> Result<ExitCode> {
    let (g, table) = match (&args.table, &args.graph) {
        (Some(path), _) => {
            let table = read_table_csv(path)?;
            return fit_from_table_only(&table, args.out.as_deref());
        }
        (None, Some(path)) => {
            let g = fileio::load_graph(path)?;
            let source = match args.source.as_deref() {
                Some("exittime") => ScalingSource::ExitTime,
                Some("rhov") => ScalingSource::RhoV,
                Some("volume") => ScalingSource::Volume,
                _ => unreachable!("clap enforces the value set"),
            };
            let reach = args.radii.iter().copied().max().unwrap_or(2)
                * if source == ScalingSource::RhoV { 2 } else { 1 };
            let centers = heatlab::verify::interior_centers(&g, reach, args.centers);
            if centers.is_empty() {
                return Err(Error::InsufficientGrid {
                    what: format!("no center is {reach} deep for the radii grid"),
                });
            }
            let table = build_scaling_table(&g, source, &centers, &args.radii)?;
            (g, table)
        }
        (None, None) => {
            return Err(Error::Usage {
                what: "fit needs --table or --graph with --source".into(),
            })
        }
    };
    if let Some(out) = &args.out {
        write_table_csv(&table, out)?;
    }
    let fit = fit_exponents(&g, &table)?;
    print_fit(&fit);
    Ok(ExitCode::SUCCESS)
}

fn fit_from_table_only(
    table: &heatlab::scaling::ScalingTable,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let fit = heatlab::scaling::fit_exponents_table_only(table)?;
    if let Some(path) = out {
        write_table_csv(table, path)?;
    }
    println!("beta {:.6}", fit.beta);
    println!("beta_prime {:.6}", fit.beta_prime);
    println!("least_squares {:.6}", fit.least_squares);
    println!("quadratic_floor {:.6}", fit.quadratic_floor);
    println!("pairs {}", fit.pairs);
    Ok(ExitCode::SUCCESS)
}

fn print_fit(fit: &heatlab::scaling::ExponentFit) {
    println!("beta {:.6}", fit.beta);
    println!("beta_prime {:.6}", fit.beta_prime);
    println!("least_squares {:.6}", fit.least_squares);
    println!("c_high {:.6}", fit.c_high);
    println!("c_low {:.6}", fit.c_low);
    println!("quadratic_floor {:.6}", fit.quadratic_floor);
    println!("pairs {}", fit.pairs);
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let g = fileio::load_graph(&args.graph)?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            serde_json::from_str::<VerifierConfig>(&text)
                .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?
        }
        None => VerifierConfig::default(),
    };
    if let Some(radii) = args.radii {
        cfg.radii = radii;
    }
    if let Some(times) = args.kernel_times {
        cfg.kernel_times = times;
    }
    if let Some(centers) = args.centers {
        cfg.centers_per_graph = centers;
    }
    cfg.validate()?;
    let names: Vec<&str> = if args.conditions == "all" {
        CONDITION_NAMES.to_vec()
    } else {
        args.conditions.split(',').map(str::trim).collect()
    };
    let reports = verify_many(&g, &names, &cfg)?;
    for c in &reports {
        let verdict = match c.verdict {
            Verdict::HoldsStably => "holds-stably",
            Verdict::Drifts => "drifts",
            Verdict::Fails => "FAILS",
        };
        println!("{}: constant {:.6} [{verdict}]", c.name, c.constant);
    }
    let report = RunReport::new(&g, &cfg, reports)?;
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_canonical_json()?)
            .map_err(|e| Error::io(format!("writing {}", out.display()), e))?;
        let manifest = RunManifest::capture(
            Some(&args.graph),
            &names.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        );
        let mpath = manifest_path(out);
        let mtext = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::parse("manifest", e.to_string()))?;
        std::fs::write(&mpath, mtext)
            .map_err(|e| Error::io(format!("writing {}", mpath.display()), e))?;
    }
    if let Some(dir) = &args.csv {
        write_curves_csv(&report, dir)?;
    }
    if args.strict && report.worst_verdict() == Verdict::Fails {
        eprintln!("strict mode: at least one condition fails");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn monte_carlo(args: McArgs) -> Result<ExitCode> {
    let g = fileio::load_graph(&args.graph)?;
    match args.estimator {
        Estimator::Exittime { center, radius, trials, seed } => {
            let x = resolve_vertex(&g, &center)?;
            let est = mc::mc_exit_time(&g, x, radius, trials, seed)?;
            println!("mean {:.16e}", est.mean);
            println!("half_width {:.16e}", est.half_width);
            println!("trials {}", est.trials);
        }
        Estimator::Exitsite { center, radius, trials, seed } => {
            let x = resolve_vertex(&g, &center)?;
            let dist = mc::mc_exit_site(&g, x, radius, trials, seed)?;
            for (site, count) in &dist.counts {
                println!("{site} {count}");
            }
        }
        Estimator::Kernel { center, target, time, trials, seed } => {
            let x = resolve_vertex(&g, &center)?;
            let y = resolve_vertex(&g, &target)?;
            let est = mc::mc_kernel(&g, x, y, time, trials, seed)?;
            println!("mean {:.16e}", est.mean);
            println!("half_width {:.16e}", est.half_width);
            println!("trials {}", est.trials);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::io(format!("reading {}", args.input.display()), e))?;
    let report = RunReport::from_json(&text)?;
    let rendered = match args.format.as_str() {
        "md" => render_markdown(&report),
        "json" => report.to_canonical_json()?,
        _ => unreachable!("clap enforces the value set"),
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?,
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}
