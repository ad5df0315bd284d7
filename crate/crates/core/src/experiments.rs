//! Monte Carlo experiments: survival-time sweeps, depth decay, stars, path
//! relays, expander growth and single-vertex starts.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DegreeDistribution, TailClass};
use crate::dynamics::{linear_fit, run_replicas, ClockStream, DepthTail, Init, Rules, SimOptions, Simulator, SurvivalStats};
use crate::error::{Error, Result};
use crate::graph::{HalfEdgeGraph, RootedTree};
use crate::graphgen::{configuration_model, erdos_renyi, gw_tree, path, star};
use crate::rng::{derive_key, derive_stream};

pub const CSV_VERSION: u32 = 1;
/// share of censored runs at the largest n that counts as exponential-like
pub const CENSORED_THRESHOLD: f64 = 0.95;
/// largest log-log exponent of median T against n that counts as polynomial-like
pub const POLY_EXPONENT: f64 = 1.5;

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphModel {
    /// configuration model with i.i.d. degrees from `mu` (a distribution spec)
    Config { mu: String },
    /// Erdős–Rényi with mean degree `d`
    Er { d: f64 },
}

impl GraphModel {
    pub fn sample(&self, n: usize, seed: u64, index: u64) -> Result<HalfEdgeGraph> {
        let mut rng = derive_stream(seed, "sweep-graph", index);
        match self {
            GraphModel::Config { mu } => configuration_model(n, &DegreeDistribution::from_spec(mu)?, &mut rng),
            GraphModel::Er { d } => erdos_renyi(n, *d, &mut rng),
        }
    }

    pub fn distribution(&self) -> Result<Option<DegreeDistribution>> {
        match self {
            GraphModel::Config { mu } => Ok(Some(DegreeDistribution::from_spec(mu)?)),
            GraphModel::Er { .. } => Ok(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Absolute(f64),
    /// c·n time units
    PerVertex(f64),
}

impl Horizon {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Horizon::Absolute(t) => t,
            Horizon::PerVertex(c) => c * n as f64,
        }
    }
}

fn default_horizon() -> Horizon {
    Horizon::PerVertex(1.0)
}

fn default_init() -> String {
    "all".into()
}

/// Grid for [`phase_sweep`]. Every replica draws a fresh graph; graph draws
/// depend on (n, replica) only, so all λ share the same graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: GraphModel,
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub reps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: Horizon,
    #[serde(default = "default_init")]
    pub init: String,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lambda: f64,
    pub n: usize,
    pub horizon: f64,
    pub stats: SurvivalStats,
    pub mean_events: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    PolynomialLike,
    ExponentialLike,
    /// every run of every cell hit the horizon
    ExponentialLikeCensored,
    Indeterminate,
}

impl Classification {
    pub fn is_exponential(self) -> bool {
        matches!(self, Classification::ExponentialLike | Classification::ExponentialLikeCensored)
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::PolynomialLike => "polynomial-like",
            Classification::ExponentialLike => "exponential-like",
            Classification::ExponentialLikeCensored => "exponential-like (censored)",
            Classification::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda: f64,
    /// slope of log median T against log n
    pub loglog_exponent: Option<f64>,
    pub loglog_rss: Option<f64>,
    /// slope of log median T against n
    pub loglin_rate: Option<f64>,
    pub loglin_rss: Option<f64>,
    pub censored_at_largest_n: f64,
    pub classification: Classification,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<Cell>,
    pub fits: Vec<LambdaFit>,
    /// name, stored support and truncated mass of the degree law
    pub distribution: Option<DistributionInfo>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionInfo {
    pub name: String,
    pub max_k: usize,
    pub truncation_epsilon: f64,
    pub tail_class: TailClass,
    pub mean: f64,
}

impl DistributionInfo {
    pub fn of(mu: &DegreeDistribution) -> Self {
        DistributionInfo {
            name: mu.name().to_string(),
            max_k: mu.max_k(),
            truncation_epsilon: mu.truncation_epsilon(),
            tail_class: mu.tail_class(),
            mean: mu.mean(),
        }
    }
}

fn rss(x: &[f64], y: &[f64], slope: f64, icpt: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (b - slope * a - icpt).powi(2)).sum()
}

/// Classify one λ row of a sweep from its cells (sorted by n).
pub fn classify(lambda: f64, cells: &[&Cell]) -> LambdaFit {
    let last = cells.last().map(|c| c.stats.censored_fraction).unwrap_or(0.0);
    let all_censored = !cells.is_empty() && cells.iter().all(|c| c.stats.censored == c.stats.reps);
    let medians: Option<Vec<f64>> = cells.iter().map(|c| c.stats.median.filter(|&m| m > 0.0)).collect();
    let (mut ll, mut llr, mut lin, mut linr) = (None, None, None, None);
    if let Some(m) = &medians {
        let y: Vec<f64> = m.iter().map(|v| v.ln()).collect();
        let xl: Vec<f64> = cells.iter().map(|c| (c.n as f64).ln()).collect();
        let xn: Vec<f64> = cells.iter().map(|c| c.n as f64).collect();
        if let Some((s, i, _)) = linear_fit(&xl, &y) {
            ll = Some(s);
            llr = Some(rss(&xl, &y, s, i));
        }
        if let Some((s, i, _)) = linear_fit(&xn, &y) {
            lin = Some(s);
            linr = Some(rss(&xn, &y, s, i));
        }
    }
    let classification = if all_censored {
        Classification::ExponentialLikeCensored
    } else if last >= CENSORED_THRESHOLD {
        Classification::ExponentialLike
    } else {
        match (ll, llr, linr) {
            (Some(e), _, _) if e <= POLY_EXPONENT => Classification::PolynomialLike,
            (Some(_), Some(a), Some(b)) if b <= a => Classification::ExponentialLike,
            _ => Classification::Indeterminate,
        }
    };
    LambdaFit {
        lambda,
        loglog_exponent: ll,
        loglog_rss: llr,
        loglin_rate: lin,
        loglin_rss: linr,
        censored_at_largest_n: last,
        classification,
    }
}

/// Survival times from the policy in `spec.init` over the (λ, n) grid.
pub fn phase_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.ns.len() < 3 {
        return Err(Error::InvalidParameter("need at least three values of n".into()));
    }
    if spec.reps == 0 || spec.lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidParameter("reps must be positive and lambdas non-negative".into()));
    }
    let init = Init::parse(&spec.init)?;
    let mut ns = spec.ns.clone();
    ns.sort_unstable();
    let mut cells = Vec::new();
    for (li, &lambda) in spec.lambdas.iter().enumerate() {
        for (ni, &n) in ns.iter().enumerate() {
            let horizon = spec.horizon.at(n);
            let opts = SimOptions::horizon(horizon);
            let runs: Vec<(Option<f64>, u64)> = (0..spec.reps)
                .into_par_iter()
                .map(|r| {
                    let g = spec.model.sample(n, spec.seed, ((ni as u64) << 32) | r as u64)?;
                    let key = derive_key(spec.seed, "sweep-clocks", ((li as u64) << 40) | ((ni as u64) << 32) | r as u64);
                    let start = init.realise(g.n(), spec.seed, ((ni as u64) << 32) | r as u64);
                    let t = Simulator::new(&g, Rules::default())?.run(&start, &opts, &ClockStream::from_key(key, lambda))?;
                    Ok((t.extinction_time, t.events))
                })
                .collect::<Result<_>>()?;
            let times: Vec<Option<f64>> = runs.iter().map(|r| r.0).collect();
            let mean_events = runs.iter().map(|r| r.1 as f64).sum::<f64>() / runs.len() as f64;
            log::info!("sweep cell lambda={lambda} n={n} done");
            cells.push(Cell { lambda, n, horizon, stats: SurvivalStats::from_times(&times, horizon), mean_events });
        }
    }
    let fits = spec
        .lambdas
        .iter()
        .map(|&l| {
            let row: Vec<&Cell> = cells.iter().filter(|c| c.lambda == l).collect();
            classify(l, &row)
        })
        .collect();
    let distribution = spec.model.distribution()?.as_ref().map(DistributionInfo::of);
    Ok(SweepResult { spec: spec.clone(), cells, fits, distribution })
}

/// The same sweep restricted to subexponential degree laws.
pub fn subexp_long_survival(spec: &SweepSpec) -> Result<SweepResult> {
    match spec.model.distribution()? {
        Some(mu) if mu.tail_class() == TailClass::Subexponential => phase_sweep(spec),
        Some(mu) => Err(Error::OutsideHypothesis(format!("{} is not subexponential", mu.name()))),
        None => Err(Error::OutsideHypothesis("model has no degree law".into())),
    }
}

pub const SWEEP_HEADER: [&str; 13] = [
    "version",
    "lambda",
    "n",
    "reps",
    "horizon",
    "median_T",
    "censored_fraction",
    "mean_T_lower_bound",
    "mean_events",
    "loglog_exponent",
    "loglin_rate",
    "classification",
    "distribution",
];

pub fn write_sweep_csv<W: Write>(res: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    let dist = res.distribution.as_ref().map(|d| d.name.clone()).unwrap_or_else(|| "er".into());
    for c in &res.cells {
        let fit = res.fits.iter().find(|f| f.lambda == c.lambda).unwrap();
        out.write_record([
            CSV_VERSION.to_string(),
            fmt_f64(c.lambda),
            c.n.to_string(),
            c.stats.reps.to_string(),
            fmt_f64(c.horizon),
            fmt_opt(c.stats.median),
            fmt_f64(c.stats.censored_fraction),
            fmt_f64(c.stats.mean_lower_bound),
            fmt_f64(c.mean_events),
            fmt_opt(fit.loglog_exponent),
            fmt_opt(fit.loglin_rate),
            fit.classification.label().to_string(),
            dist.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Survival of the all-infected star K_{1,d}.
pub fn star_persistence(d: usize, lambda: f64, reps: usize, horizon: f64, seed: u64) -> Result<SurvivalStats> {
    if d == 0 {
        return Err(Error::InvalidParameter("star degree must be at least 1".into()));
    }
    let g = star(d);
    let tr = run_replicas(&g, &Rules::default(), &Init::All, lambda, &SimOptions::horizon(horizon), reps, seed)?;
    let t: Vec<Option<f64>> = tr.iter().map(|x| x.extinction_time).collect();
    Ok(SurvivalStats::from_times(&t, horizon))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StarSweep {
    pub lambda: f64,
    pub rows: Vec<(usize, SurvivalStats)>,
    /// slope of log median against d
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
}

pub fn star_sweep(ds: &[usize], lambda: f64, reps: usize, horizon: f64, seed: u64) -> Result<StarSweep> {
    let rows: Vec<(usize, SurvivalStats)> = ds
        .iter()
        .enumerate()
        .map(|(i, &d)| Ok((d, star_persistence(d, lambda, reps, horizon, derive_key(seed, "star", i as u64))?)))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|(d, s)| s.median.map(|m| (*d as f64, m.ln()))).collect();
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = linear_fit(&x, &y);
    Ok(StarSweep { lambda, rows, slope: fit.map(|f| f.0), slope_se: fit.map(|f| f.2) })
}

/// Estimate P(far endpoint infected at time C | only the near endpoint
/// infected at time 0) on a path with `len` edges. Trial `i` uses the arrow
/// field of rate `base` thinned to `lambda`, so runs at different λ with the
/// same `base` and seed are coupled.
pub fn path_relay_coupled(len: usize, lambda: f64, base: f64, c: f64, reps: usize, seed: u64) -> Result<Vec<bool>> {
    if len == 0 {
        return Err(Error::InvalidParameter("path length must be at least 1".into()));
    }
    let g = path(len);
    let opts = SimOptions { horizon: c, stop_when_empty: true, record_history: false, max_events: None };
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let clocks = ClockStream::thinned(derive_key(seed, "relay", i as u64), lambda, base)?;
            let t = Simulator::new(&g, Rules::default())?.run(&[0], &opts, &clocks)?;
            Ok(t.extinction_time.is_none() && t.final_state.binary_search(&len).is_ok())
        })
        .collect()
}

pub fn path_relay(len: usize, lambda: f64, c: f64, reps: usize, seed: u64) -> Result<f64> {
    let hits = path_relay_coupled(len, lambda, lambda.max(f64::MIN_POSITIVE), c, reps, seed)?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / reps as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelayPoint {
    pub len: usize,
    /// smallest grid λ (and then C) reaching probability ≥ 3/4
    pub found: Option<(f64, f64, f64)>,
}

/// Grid search over λ ∈ {1, …, 100} and C ∈ {1, 2, 5, 10} for each path
/// length up to `max_len`.
pub fn path_relay_grid(max_len: usize, reps: usize, seed: u64) -> Result<Vec<RelayPoint>> {
    let cs = [1.0, 2.0, 5.0, 10.0];
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut found = None;
        'search: for l in 1..=100 {
            for &c in &cs {
                let p = path_relay(len, l as f64, c, reps, derive_key(seed, "relay-grid", len as u64))?;
                if p >= 0.75 {
                    found = Some((l as f64, c, p));
                    break 'search;
                }
            }
        }
        out.push(RelayPoint { len, found });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthRow {
    pub a: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_frequency: f64,
    /// a exceeds α|W₀|
    pub skipped: bool,
}

/// Infect `a` uniformly chosen vertices of W₀, run for time `c`, and call a
/// trial a failure when fewer than 5a/4 vertices of W₀ are infected then.
pub fn expander_growth(
    g: &HalfEdgeGraph,
    w0: &[usize],
    alpha: f64,
    lambda: f64,
    c: f64,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<GrowthRow>> {
    let mut in_w0 = vec![false; g.n()];
    for &w in w0 {
        in_w0[w] = true;
    }
    let cap = (alpha * w0.len() as f64 + 1e-9).floor() as usize;
    let opts = SimOptions { horizon: c, stop_when_empty: true, record_history: false, max_events: None };
    sizes
        .iter()
        .map(|&a| {
            if a == 0 || a > cap {
                return Ok(GrowthRow { a, trials: 0, failures: 0, failure_frequency: f64::NAN, skipped: true });
            }
            let fails: Vec<bool> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let idx = ((a as u64) << 32) | i as u64;
                    let mut rng = derive_stream(seed, "growth-seed", idx);
                    let mut pool = w0.to_vec();
                    for k in 0..a {
                        let r = k + rng.below(pool.len() - k);
                        pool.swap(k, r);
                    }
                    let clocks = ClockStream::from_key(derive_key(seed, "growth-clocks", idx), lambda);
                    let t = Simulator::new(g, Rules::default())?.run(&pool[..a], &opts, &clocks)?;
                    let hit = if t.extinction_time.is_some() { 0 } else { t.final_state.iter().filter(|&&v| in_w0[v]).count() };
                    Ok(4 * hit < 5 * a)
                })
                .collect::<Result<_>>()?;
            let failures = fails.iter().filter(|&&f| f).count();
            Ok(GrowthRow { a, trials, failures, failure_frequency: failures as f64 / trials as f64, skipped: false })
        })
        .collect()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Stratum {
    pub starts: usize,
    pub survived: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleStart {
    pub lambda: f64,
    pub horizon: f64,
    pub overall: Stratum,
    pub in_w0: Stratum,
    pub outside_w0: Stratum,
    pub isolated: Stratum,
}

/// Start from one uniformly chosen vertex per replica and record survival
/// to the horizon, split by whether the start lies in W₀.
pub fn single_vertex_start(g: &HalfEdgeGraph, w0: &[usize], lambda: f64, horizon: f64, reps: usize, seed: u64) -> Result<SingleStart> {
    let mut in_w0 = vec![false; g.n()];
    for &w in w0 {
        in_w0[w] = true;
    }
    let tr = run_replicas(g, &Rules::default(), &Init::RandomOne, lambda, &SimOptions::horizon(horizon), reps, seed)?;
    let mut s = [Stratum::default(), Stratum::default(), Stratum::default(), Stratum::default()];
    for t in &tr {
        let v = t.initial[0];
        let alive = t.extinction_time.is_none();
        let mut bump = |k: usize| {
            s[k].starts += 1;
            s[k].survived += alive as usize;
        };
        bump(0);
        bump(if in_w0[v] { 1 } else { 2 });
        if g.degree(v) == 0 {
            bump(3);
        }
    }
    for x in &mut s {
        x.fraction = if x.starts == 0 { 0.0 } else { x.survived as f64 / x.starts as f64 };
    }
    let [overall, in_w0, outside_w0, isolated] = s;
    Ok(SingleStart { lambda, horizon, overall, in_w0, outside_w0, isolated })
}

/// Coupled survival times at λ₁ < λ₂ (λ₁ arrows thinned from the λ₂ field);
/// returns the number of trials with T(λ₁) > T(λ₂).
pub fn lambda_monotonicity(g: &HalfEdgeGraph, l1: f64, l2: f64, init: &[usize], horizon: f64, trials: usize, seed: u64) -> Result<usize> {
    if !(l1 <= l2) {
        return Err(Error::InvalidParameter("need lambda1 <= lambda2".into()));
    }
    let opts = SimOptions::horizon(horizon);
    let bad: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let key = derive_key(seed, "monotone", i as u64);
            let mut sim = Simulator::new(g, Rules::default())?;
            let a = sim.run(init, &opts, &ClockStream::thinned(key, l1, l2)?)?;
            let b = sim.run(init, &opts, &ClockStream::thinned(key, l2, l2)?)?;
            let ta = a.extinction_time.unwrap_or(f64::INFINITY);
            let tb = b.extinction_time.unwrap_or(f64::INFINITY);
            Ok(ta > tb)
        })
        .collect::<Result<_>>()?;
    Ok(bad.iter().filter(|&&b| b).count())
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub trials: usize,
    /// T from all infected differs from the max of single-vertex T
    pub additivity: usize,
    /// ignoring recoveries at one vertex failed to dominate
    pub ignore_recovery: usize,
    /// A ⊆ B failed to give X^A ⊆ X^B
    pub attractiveness: usize,
}

impl CouplingSummary {
    pub fn violations(&self) -> usize {
        self.additivity + self.ignore_recovery + self.attractiveness
    }
}

/// Shared-clock checks on random G(n, d/n) graphs with 2 <= n <= `max_n`.
pub fn coupling_laws(trials: usize, max_n: usize, horizon: f64, seed: u64) -> Result<CouplingSummary> {
    if max_n < 2 {
        return Err(Error::InvalidParameter("max_n must be at least 2".into()));
    }
    let per: Vec<[bool; 3]> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(seed, "coupling", i as u64);
            let n = 2 + rng.below(max_n - 1);
            let d = 0.5 + 2.5 * rng.uniform();
            let lambda = 0.1 + 1.4 * rng.uniform();
            let g = erdos_renyi(n, d, &mut rng)?;
            let clocks = ClockStream::from_key(derive_key(seed, "coupling-clocks", i as u64), lambda);
            let opts = SimOptions::horizon(horizon);
            let mut sim = Simulator::new(&g, Rules::default())?;
            let t = |x: Option<f64>| x.unwrap_or(f64::INFINITY);
            let all: Vec<usize> = (0..n).collect();
            let whole = t(sim.run(&all, &opts, &clocks)?.extinction_time);
            let mut max = 0.0f64;
            for v in 0..n {
                max = max.max(t(sim.run(&[v], &opts, &clocks)?.extinction_time));
            }

            let hopts = opts.clone().with_history();
            let b: Vec<usize> = (0..n).filter(|_| rng.uniform() < 0.5).collect();
            let b = if b.is_empty() { vec![rng.below(n)] } else { b };
            let a: Vec<usize> = b.iter().copied().filter(|_| rng.uniform() < 0.5).collect();
            let v = rng.below(n);
            let xa = sim.run(&a, &hopts, &clocks)?.history.unwrap();
            let xb = sim.run(&b, &hopts, &clocks)?.history.unwrap();
            let mut ign = Simulator::new(&g, Rules { ignore_recovery: Some(v), ..Rules::default() })?;
            let yb = ign.run(&b, &hopts, &clocks)?.history.unwrap();
            Ok([
                whole != max,
                crate::dynamics::first_domination_violation(n, &xb, &yb).is_some(),
                crate::dynamics::first_domination_violation(n, &xa, &xb).is_some(),
            ])
        })
        .collect::<Result<_>>()?;
    let count = |k: usize| per.iter().filter(|p| p[k]).count();
    Ok(CouplingSummary { trials, additivity: count(0), ignore_recovery: count(1), attractiveness: count(2) })
}

/// A GW tree with offspring `mu` drawn until it reaches `depth`, with a
/// super-root attached.
pub fn surviving_gw_tree(mu: &DegreeDistribution, depth: usize, seed: u64) -> Result<RootedTree> {
    for attempt in 0..10_000u64 {
        let t = gw_tree(mu, mu, depth, &mut derive_stream(seed, "depth-tree", attempt))?;
        if t.height() == depth {
            return Ok(t.with_super_root(1));
        }
    }
    Err(Error::SurvivalInfeasible)
}

/// Excursion depth tail of the root-added process on one quenched tree.
pub fn depth_decay(tree: &RootedTree, lambda: f64, reps: usize, seed: u64, min_hits: usize) -> Result<DepthTail> {
    crate::dynamics::depth_excursion(tree, lambda, reps, seed, min_hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_without_infection() {
        // d = 1, λ = 0: max of two unit exponentials, mean 1.5
        let s = star_persistence(1, 0.0, 40_000, 1e9, 3).unwrap();
        let m = s.mean.unwrap();
        assert!((m - 1.5).abs() < 4.0 * s.std_error.unwrap(), "{m}");
    }

    #[test]
    fn relay_needs_infection() {
        assert_eq!(path_relay(2, 0.0, 5.0, 200, 1).unwrap(), 0.0);
        assert!(path_relay(1, 50.0, 1.0, 2000, 1).unwrap() >= 0.75);
    }

    #[test]
    fn relay_monotone_in_lambda_per_trial() {
        let lo = path_relay_coupled(3, 2.0, 6.0, 2.0, 500, 9).unwrap();
        let hi = path_relay_coupled(3, 6.0, 6.0, 2.0, 500, 9).unwrap();
        assert!(lo.iter().zip(&hi).all(|(a, b)| !a || *b));
    }

    #[test]
    fn sweep_needs_three_sizes() {
        let spec = SweepSpec {
            model: GraphModel::Config { mu: "poisson:3".into() },
            lambdas: vec![0.0],
            ns: vec![10, 20],
            reps: 2,
            horizon: Horizon::PerVertex(1.0),
            init: "all".into(),
            seed: 1,
            output: None,
        };
        assert!(phase_sweep(&spec).is_err());
    }

    #[test]
    fn pure_recovery_sweep_is_flat() {
        let spec = SweepSpec {
            model: GraphModel::Config { mu: "poisson:3".into() },
            lambdas: vec![0.0],
            ns: vec![100, 200, 400],
            reps: 200,
            horizon: Horizon::Absolute(1e6),
            init: "all".into(),
            seed: 4,
            output: None,
        };
        let r = phase_sweep(&spec).unwrap();
        let e = r.fits[0].loglog_exponent.unwrap();
        // median of the max of n unit exponentials grows like log n
        assert!(e.abs() < 0.3, "{e}");
        assert_eq!(r.fits[0].classification, Classification::PolynomialLike);
        let mut a = Vec::new();
        write_sweep_csv(&r, &mut a).unwrap();
        let mut b = Vec::new();
        write_sweep_csv(&phase_sweep(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coupling_holds() {
        let s = coupling_laws(300, 20, 3.0, 5).unwrap();
        assert_eq!(s.violations(), 0, "{s:?}");
    }

    #[test]
    fn growth_skips_outside_hypothesis() {
        let g = crate::graphgen::complete(10);
        let w0: Vec<usize> = (0..10).collect();
        let rows = expander_growth(&g, &w0, 1.0, 0.0, 1.0, &[10, 11, 2], 50, 1).unwrap();
        assert!(rows[1].skipped);
        assert_eq!(rows[2].failure_frequency, 1.0);
    }
}
