use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use contagion::acceptance;
use contagion::dynamics::{run_replicas, Init, SimOptions, Variant};
use contagion::expander::{run_pipeline, Constants, PipelineConfig, VerifyMode, DEFAULT_BUDGET};
use contagion::experiments::{depth_decay, phase_sweep, surviving_gw_tree, write_sweep_csv, fmt_f64, SweepSpec};
use contagion::graphgen::{configuration_model, egw, erdos_renyi, gw_tree, gwc};
use contagion::oracle::{verify_delayed, verify_recursion_tree, verify_stationary_identities, Instance};
use contagion::{derive_stream, DegreeDistribution, Error, HalfEdgeGraph, Result};

/// Seed used when --seed is not given.
const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug, Serialize)]
#[command(name = "contagion", version, about = "Contact process simulation, exact oracles and expander certificates")]
struct Cli {
    /// master seed (default 1, with a warning)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads; CONTAGION_THREADS overrides
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    /// where to write the run manifest (default: next to --out, else stderr)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Serialize)]
enum Cmd {
    /// Sample a graph and write it as an edge list (or binary with a .bin extension)
    Gen(GenArgs),
    /// Run replicas on a graph and write one CSV row per replica
    Simulate(SimArgs),
    /// Survival-time sweep from a JSON grid spec
    Sweep(SweepArgs),
    /// Excursion depth tail on a GW tree conditioned to reach its depth
    DepthTail(DepthArgs),
    /// Build and certify an embedded expander
    Expander(ExpanderArgs),
    /// Check an exact identity, or run the acceptance suite
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    /// config, er, gw, gwc or egw
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: Option<usize>,
    /// degree or offspring law, e.g. poisson:3
    #[arg(long)]
    mu: Option<String>,
    /// mean degree for er
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// cycle length for gwc and egw
    #[arg(long, default_value_t = 3)]
    s: usize,
    /// conditioning depth for egw
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SimArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    lambda: f64,
    /// standard, root-added:SR, root-suppressed:SR,ROOT, both-fixed:A,B, delayed:SR,THETA, ignore-recovery:V
    #[arg(long, default_value = "standard")]
    variant: String,
    /// all, vertex:K or random-one
    #[arg(long, default_value = "all")]
    init: String,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    /// defaults to the spec's output field
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DepthArgs {
    #[arg(long, default_value = "poisson:2")]
    mu: String,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    /// fit only depths reached by at least this many excursions
    #[arg(long, default_value_t = 50)]
    min_hits: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExpanderArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    mu: String,
    #[arg(long, default_value_t = 12)]
    j: usize,
    /// derive R, the intersection cap and M from the degree law
    #[arg(long)]
    auto_params: bool,
    #[arg(long = "R", default_value_t = 1)]
    radius: usize,
    #[arg(long, default_value_t = 1.0)]
    rfrak: f64,
    #[arg(long = "M", default_value_t = 6)]
    m: usize,
    /// core threshold s
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// exhaustive, sampled or sampled:K
    #[arg(long, default_value = "sampled")]
    verify: String,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// certificate path; the full report goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// run every acceptance criterion
    #[arg(long, conflicts_with_all = ["identity", "criterion"])]
    all: bool,
    /// run selected acceptance criteria
    #[arg(long)]
    criterion: Vec<usize>,
    /// recursion, stationary or delayed
    #[arg(long, requires_all = ["instance", "lambda"])]
    identity: Option<String>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    argv: Vec<String>,
    config: &'a Cli,
    seed: u64,
    seed_defaulted: bool,
    threads: usize,
    graph_hashes: Vec<String>,
    outputs: Vec<String>,
}

/// What a subcommand reports back for the manifest.
#[derive(Default)]
struct Run {
    graphs: Vec<String>,
    outputs: Vec<String>,
    ok: bool,
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn outputs(out: &Option<PathBuf>) -> Vec<String> {
    out.iter().map(|p| p.display().to_string()).collect()
}

fn need<T: Clone>(x: &Option<T>, flag: &str, model: &str) -> Result<T> {
    x.clone().ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for model {model}")))
}

fn gen(a: &GenArgs, seed: u64) -> Result<Run> {
    let mut rng = derive_stream(seed, "gen", 0);
    let m = a.model.as_str();
    let law = || DegreeDistribution::from_spec(&need(&a.mu, "mu", m)?);
    let g = match m {
        "config" => configuration_model(need(&a.n, "n", m)?, &law()?, &mut rng)?,
        "er" => erdos_renyi(need(&a.n, "n", m)?, need(&a.d, "d", m)?, &mut rng)?,
        "gw" => {
            let mu = law()?;
            gw_tree(&mu, &mu, a.depth, &mut rng)?.graph
        }
        "gwc" => gwc(&law()?, a.s, a.depth, &mut rng)?,
        "egw" => {
            let mu = law()?;
            egw(&mu, &mu, a.l, a.s, a.depth, &mut rng)?
        }
        other => return Err(Error::InvalidParameter(format!("unknown model {other}"))),
    };
    match &a.out {
        Some(p) => g.save(p)?,
        None => {
            let mut w = writer(&None)?;
            g.write_edge_list(&mut w)?;
            w.flush()?;
        }
    }
    Ok(Run { graphs: vec![g.hash()], outputs: outputs(&a.out), ok: true })
}

fn simulate(a: &SimArgs, seed: u64) -> Result<Run> {
    let g = HalfEdgeGraph::load(&a.graph)?;
    let rules = Variant::parse(&a.variant)?.rules(&g)?;
    let init = Init::parse(&a.init)?;
    let tr = run_replicas(&g, &rules, &init, a.lambda, &SimOptions::horizon(a.horizon), a.reps, seed)?;
    let mut w = csv::Writer::from_writer(writer(&a.out)?);
    w.write_record(["replica", "extinction_time", "censored", "H", "events"])?;
    for (i, t) in tr.iter().enumerate() {
        w.write_record([
            i.to_string(),
            t.extinction_time.map(fmt_f64).unwrap_or_default(),
            t.censored.to_string(),
            t.max_depth.to_string(),
            t.events.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(Run { graphs: vec![g.hash()], outputs: outputs(&a.out), ok: true })
}

fn sweep(a: &SweepArgs, seed: Option<u64>) -> Result<Run> {
    let mut spec = SweepSpec::load(&a.spec)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let out = a.out.clone().or_else(|| spec.output.clone().map(PathBuf::from));
    let res = phase_sweep(&spec)?;
    write_sweep_csv(&res, writer(&out)?)?;
    for f in &res.fits {
        log::info!("lambda {}: {}", f.lambda, f.classification.label());
    }
    Ok(Run { graphs: Vec::new(), outputs: outputs(&out), ok: true })
}

fn depth_tail(a: &DepthArgs, seed: u64) -> Result<Run> {
    let mu = DegreeDistribution::from_spec(&a.mu)?;
    let tree = surviving_gw_tree(&mu, a.depth, seed)?;
    let tail = depth_decay(&tree, a.lambda, a.reps, seed, a.min_hits)?;
    emit_json(&a.out, &json!({ "tree_vertices": tree.n(), "lambda": a.lambda, "tail": tail }))?;
    Ok(Run { graphs: vec![tree.graph.hash()], outputs: outputs(&a.out), ok: true })
}

fn expander(a: &ExpanderArgs, seed: u64) -> Result<Run> {
    let g = HalfEdgeGraph::load(&a.graph)?;
    let mu = DegreeDistribution::from_spec(&a.mu)?;
    let cfg = PipelineConfig {
        j: a.j,
        auto_params: a.auto_params,
        radius: a.radius,
        rfrak: a.rfrak,
        m: a.m,
        core_threshold: a.s,
        alpha: a.alpha,
        constants: Constants::default(),
        u_j: None,
        verify: a.verify.parse::<VerifyMode>()?,
        budget: a.budget,
        seed,
    };
    let rep = run_pipeline(&g, &mu, &cfg)?;
    if a.out.is_some() {
        emit_json(&a.out, &rep.certificate)?;
    }
    emit_json(&None, &rep)?;
    Ok(Run { graphs: vec![g.hash()], outputs: outputs(&a.out), ok: true })
}

fn verify(a: &VerifyArgs) -> Result<Run> {
    if a.all || !a.criterion.is_empty() {
        let ids: Vec<usize> = if a.all { acceptance::CRITERIA.iter().map(|c| c.0).collect() } else { a.criterion.clone() };
        let mut results = Vec::new();
        for id in ids {
            let r = acceptance::run(id)?;
            println!("{}", r.line());
            results.push(r);
        }
        if a.out.is_some() {
            emit_json(&a.out, &results)?;
        }
        let ok = results.iter().all(|r| r.pass);
        return Ok(Run { graphs: Vec::new(), outputs: outputs(&a.out), ok });
    }
    let (Some(identity), Some(path), Some(lambda)) = (&a.identity, &a.instance, a.lambda) else {
        return Err(Error::InvalidParameter("pass --all, --criterion, or --identity with --instance and --lambda".into()));
    };
    let inst = Instance::load(path)?;
    let report = match (identity.as_str(), &inst) {
        ("recursion", Instance::Tree(t)) => verify_recursion_tree(t, lambda)?,
        ("recursion", _) => return Err(Error::InvalidParameter("the recursion identity needs a tree instance".into())),
        ("stationary", _) => verify_stationary_identities(&inst, lambda, a.theta)?,
        ("delayed", _) => verify_delayed(&inst, lambda, a.theta)?,
        (other, _) => return Err(Error::InvalidParameter(format!("unknown identity {other}"))),
    };
    emit_json(&a.out, &report)?;
    Ok(Run { graphs: Vec::new(), outputs: outputs(&a.out), ok: report.pass })
}

fn manifest_path(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.manifest {
        return Some(p.clone());
    }
    let out = match &cli.cmd {
        Cmd::Gen(a) => &a.out,
        Cmd::Simulate(a) => &a.out,
        Cmd::Sweep(a) => &a.out,
        Cmd::DepthTail(a) => &a.out,
        Cmd::Expander(a) => &a.out,
        Cmd::Verify(a) => &a.out,
    };
    out.as_ref().map(|p| {
        let mut s = p.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

fn write_manifest(m: &Manifest, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut f, m)?;
            writeln!(f)?;
        }
        None => eprintln!("{}", serde_json::to_string(m)?),
    }
    Ok(())
}

fn threads(cli: &Cli) -> usize {
    let env = std::env::var("CONTAGION_THREADS").ok().and_then(|v| v.parse().ok());
    let n = env.or(cli.threads).unwrap_or(0);
    if n > 0 {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    let seed = cli.seed.unwrap_or_else(|| {
        log::warn!("no --seed given; using the default seed {DEFAULT_SEED}");
        DEFAULT_SEED
    });
    let threads = threads(&cli);
    let res = match &cli.cmd {
        Cmd::Gen(a) => gen(a, seed),
        Cmd::Simulate(a) => simulate(a, seed),
        Cmd::Sweep(a) => sweep(a, cli.seed),
        Cmd::DepthTail(a) => depth_tail(a, seed),
        Cmd::Expander(a) => expander(a, seed),
        Cmd::Verify(a) => verify(a),
    };
    match res {
        Ok(run) => {
            let m = Manifest {
                tool: "contagion",
                version: env!("CARGO_PKG_VERSION"),
                argv: std::env::args().collect(),
                config: &cli,
                seed,
                seed_defaulted: cli.seed.is_none(),
                threads,
                graph_hashes: run.graphs,
                outputs: run.outputs,
            };
            if let Err(e) = write_manifest(&m, manifest_path(&cli).as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if run.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
