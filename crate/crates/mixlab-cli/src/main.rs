//! Command-line driver: build chain families, compute exact distance
//! profiles, and run the named experiments.
//!
//! Exit codes: 0 all assertions pass, 1 assertion failure, 2 usage or
//! config error. MIXLAB_WORKERS controls the worker-thread count (default:
//! available parallelism).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mixlab::chain::build_chain;
use mixlab::constructions::{
    example33, random_regular_expander, theorem1_chain, theorem2a, theorem2b, theorem2c_pair,
    theorem3, torus3d, Theorem1Params, Theorem2aParams, Theorem2bVariant, Theorem3Params,
};
use mixlab::distances::{continuous_profiles, discrete_profiles, StartSet, TargetSet};
use mixlab::error::MixError;
use mixlab::experiments::{run_experiment, Overrides, EXPERIMENT_NAMES};
use mixlab::network::WeightedNetwork;
use mixlab::numeric::fnv1a64;

#[derive(Parser)]
#[command(name = "mixlab", version, about = "finite Markov chain mixing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a chain family and write its network + metadata JSON.
    Build(BuildArgs),
    /// Compute a worst-case distance profile of a network's walk as CSV.
    Profile(ProfileArgs),
    /// Run a named experiment; prints one PASS/FAIL line per assertion.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Family: example33 | theorem1 | theorem2a | theorem2b1 | theorem2b2 |
    /// theorem2c | theorem3 | torus3d | expander
    #[arg(long)]
    family: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Stretch factor (theorem1, theorem3).
    #[arg(long)]
    s: Option<usize>,
    /// Tree depth (theorem2*).
    #[arg(long)]
    depth: Option<usize>,
    /// Level step C (theorem2a / theorem2b1).
    #[arg(long, default_value_t = 1)]
    c: usize,
    /// Block depth ell (theorem2b2) or m (theorem3).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    /// Boundary parameter b (theorem3).
    #[arg(long)]
    b: Option<usize>,
    /// Explicit block count (theorem3).
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long, default_value_t = 2)]
    torus_side: usize,
    #[arg(long, default_value_t = 4)]
    expander_degree: usize,
    #[arg(long, default_value_t = 0.03)]
    gap_threshold: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Side length (torus3d).
    #[arg(long)]
    side: Option<usize>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Network JSON file.
    #[arg(long)]
    network: PathBuf,
    /// tv | separation | l2
    #[arg(long, default_value = "tv")]
    kind: String,
    /// Holding probability of the discrete walk.
    #[arg(long, default_value_t = 0.5)]
    holding: f64,
    /// Discrete horizon (ignored when --grid is given).
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    /// Continuous time grid, comma-separated; switches to heat-kernel mode.
    #[arg(long)]
    grid: Option<String>,
    /// Heat-kernel tolerance in continuous mode.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Comma-separated start vertex ids (default: ALL).
    #[arg(long)]
    starts: Option<String>,
    /// Comma-separated separation target ids (default: ALL).
    #[arg(long)]
    targets: Option<String>,
    /// Optional JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of the registered experiment names.
    name: String,
    /// Output directory for the report and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON file overriding tunable knobs (seed, samples).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override; takes precedence over the config file.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var("MIXLAB_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, MixError> {
    match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn require<T: Copy>(opt: Option<T>, what: &str) -> Result<T, MixError> {
    opt.ok_or_else(|| MixError::BadParams(format!("--{what} is required for this family")))
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode, MixError> {
    std::fs::create_dir_all(&args.out)?;
    let mut outputs: Vec<(String, WeightedNetwork, serde_json::Value)> = Vec::new();
    match args.family.as_str() {
        "example33" => {
            let n = require(args.n, "n")?;
            let net = example33(n)?;
            let meta = json!({ "family": "example33", "n": n, "states": net.n_vertices() });
            outputs.push(("example33".into(), net, meta));
        }
        "theorem1" => {
            let p = Theorem1Params {
                n: require(args.n, "n")?,
                delta: require(args.delta, "delta")?,
                s: require(args.s, "s")?,
            };
            let out = theorem1_chain(p)?;
            outputs.push(("theorem1".into(), out.network, out.metadata));
        }
        "theorem2a" | "theorem2b1" => {
            let p = Theorem2aParams {
                depth: require(args.depth, "depth")?,
                c_step: args.c,
                torus_side: args.torus_side,
                expander_degree: args.expander_degree,
                expander_gap_threshold: args.gap_threshold,
                seed: args.seed,
            };
            let out = if args.family == "theorem2a" {
                theorem2a(&p, None)?
            } else {
                let v = theorem2b(&p, Theorem2bVariant::GrowingC { c: args.c }, None)?;
                mixlab::constructions::Theorem2aOutput {
                    network: v.network,
                    d_vertices: v.d_vertices,
                    metadata: v.metadata,
                }
            };
            outputs.push((args.family.clone(), out.network, out.metadata));
        }
        "theorem2b2" => {
            let p = Theorem2aParams {
                depth: require(args.depth, "depth")?,
                c_step: 1,
                torus_side: args.torus_side,
                expander_degree: args.expander_degree,
                expander_gap_threshold: args.gap_threshold,
                seed: args.seed,
            };
            let variant = Theorem2bVariant::Blockwise {
                ell: require(args.ell, "ell")?,
                m: require(args.m, "m")?,
            };
            let out = theorem2b(&p, variant, None)?;
            outputs.push(("theorem2b2".into(), out.network, out.metadata));
        }
        "theorem2c" => {
            let p = Theorem2aParams {
                depth: require(args.depth, "depth")?,
                c_step: args.c,
                torus_side: args.torus_side,
                expander_degree: args.expander_degree,
                expander_gap_threshold: args.gap_threshold,
                seed: args.seed,
            };
            let out = theorem2c_pair(&p, None)?;
            outputs.push(("theorem2c_stretched".into(), out.stretched, out.metadata.clone()));
            outputs.push(("theorem2c_lumped".into(), out.lumped, out.metadata));
        }
        "theorem3" => {
            let p = Theorem3Params {
                s: require(args.s, "s")?,
                m: require(args.m, "m")?,
                b: require(args.b, "b")?,
                blocks: require(args.blocks, "blocks")?,
            };
            let n = require(args.n, "n")?;
            let exp = random_regular_expander(
                n,
                args.expander_degree,
                args.seed,
                args.gap_threshold,
                50,
            )?;
            let out = theorem3(&exp.network, &p)?;
            let mut meta = out.metadata;
            meta["expander_certificate"] = serde_json::to_value(&exp.certificate)?;
            meta["perturbation_selector"] = json!(out.selector.to_query_string());
            outputs.push(("theorem3".into(), out.network, meta));
        }
        "torus3d" => {
            let side = require(args.side, "side")?;
            let net = torus3d(side)?;
            let meta = json!({ "family": "torus3d", "side": side, "states": net.n_vertices() });
            outputs.push(("torus3d".into(), net, meta));
        }
        "expander" => {
            let n = require(args.n, "n")?;
            let out = random_regular_expander(
                n,
                args.expander_degree,
                args.seed,
                args.gap_threshold,
                50,
            )?;
            let meta = serde_json::to_value(&out.certificate)?;
            outputs.push(("expander".into(), out.network, meta));
        }
        other => {
            return Err(MixError::BadParams(format!(
                "unknown family `{other}` (expected example33, theorem1, theorem2a, theorem2b1, \
                 theorem2b2, theorem2c, theorem3, torus3d, expander)"
            )));
        }
    }
    for (stem, net, mut meta) in outputs {
        let net_path = args.out.join(format!("{stem}.network.json"));
        net.save(&net_path)?;
        let hash = fnv1a64(std::fs::read(&net_path)?.as_slice());
        meta["config_hash"] = json!(format!("{hash:016x}"));
        let meta_path = args.out.join(format!("{stem}.metadata.json"));
        std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
        println!("wrote {} and {}", net_path.display(), meta_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_states(
    chain: &mixlab::chain::Chain,
    spec: &Option<String>,
) -> Result<Option<Vec<usize>>, MixError> {
    match spec {
        None => Ok(None),
        Some(list) => {
            let mut out = Vec::new();
            for id in list.split(',') {
                out.push(chain.index_of(id.trim())?);
            }
            Ok(Some(out))
        }
    }
}

fn cmd_profile(mut args: ProfileArgs) -> Result<ExitCode, MixError> {
    // Config file fields mirror the flags; explicit flags win.
    if let Some(path) = &args.config {
        let cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if args.grid.is_none() {
            if let Some(g) = cfg.get("grid").and_then(|v| v.as_str()) {
                args.grid = Some(g.to_string());
            }
        }
        if args.starts.is_none() {
            if let Some(s) = cfg.get("starts").and_then(|v| v.as_str()) {
                args.starts = Some(s.to_string());
            }
        }
        if args.targets.is_none() {
            if let Some(s) = cfg.get("targets").and_then(|v| v.as_str()) {
                args.targets = Some(s.to_string());
            }
        }
    }
    let net = WeightedNetwork::load(&args.network)?;
    let chain = build_chain(&net, if args.grid.is_some() { 0.0 } else { args.holding })?;
    let starts = match parse_states(&chain, &args.starts)? {
        Some(v) => StartSet::States(v),
        None => StartSet::All,
    };
    let targets = match parse_states(&chain, &args.targets)? {
        Some(v) => TargetSet::States(v),
        None => TargetSet::All,
    };
    let config_desc = json!({
        "network": args.network.display().to_string(),
        "kind": args.kind,
        "holding": args.holding,
        "t_max": args.t_max,
        "grid": args.grid,
        "starts": args.starts,
        "targets": args.targets,
    });
    let hash = format!("{:016x}", fnv1a64(config_desc.to_string().as_bytes()));
    let profile = if let Some(grid_text) = &args.grid {
        let grid: Vec<f64> = grid_text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| MixError::BadParams(format!("bad grid: {e}")))?;
        let (tv, sep) = continuous_profiles(&chain, &grid, args.tol, &starts, &targets)?;
        match args.kind.as_str() {
            "tv" => tv,
            "separation" => sep,
            other => {
                return Err(MixError::BadParams(format!(
                    "kind `{other}` unavailable in continuous mode (tv, separation)"
                )))
            }
        }
    } else {
        let bundle = discrete_profiles(&chain, args.t_max, &starts, &targets)?;
        match args.kind.as_str() {
            "tv" => bundle.tv,
            "separation" => bundle.separation,
            "l2" => bundle.l2,
            other => {
                return Err(MixError::BadParams(format!(
                    "unknown profile kind `{other}` (tv, separation, l2)"
                )))
            }
        }
    };
    let csv = profile.to_csv(Some(&hash));
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, MixError> {
    if !EXPERIMENT_NAMES.contains(&args.name.as_str()) {
        eprintln!(
            "unknown experiment `{}`; registered names:\n  {}",
            args.name,
            EXPERIMENT_NAMES.join("\n  ")
        );
        return Ok(ExitCode::from(2));
    }
    let mut overrides_value = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => serde_json::Value::Null,
    };
    if let Some(seed) = args.seed {
        if overrides_value.is_null() {
            overrides_value = json!({});
        }
        overrides_value["seed"] = json!(seed);
    }
    let overrides = if overrides_value.is_null() {
        Overrides(None)
    } else {
        Overrides(Some(&overrides_value))
    };
    let report = run_experiment(&args.name, overrides)?;
    print!("{}", report.render_lines());
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let report_path = out.join(format!("{}.report.json", args.name));
        std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
        for artifact in &report.artifacts {
            // CSVs carry the hash as a trailing comment; JSON artifacts embed
            // it as a field when the experiment built them.
            let mut contents = artifact.contents.clone();
            if !artifact.name.ends_with(".json") {
                contents.push_str(&format!("# config={}\n", report.config_hash));
            }
            std::fs::write(out.join(&artifact.name), contents)?;
        }
        println!("report written to {}", report_path.display());
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
