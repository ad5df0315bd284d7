//! Contact-process engine on the graphical representation.
//!
//! Every recovery mark and infection arrow is addressed by `(entity, index)` in
//! a counter-based stream, so any number of runs on one graph see the same
//! Poisson field. The scheduler is next-reaction with lazy invalidation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HalfEdgeGraph, RootedTree};
use crate::rng::{derive_key, derive_stream, open01, philox2x64};

const KIND_RECOVERY: u64 = 0;
const KIND_INFECTION: u64 = 1;

/// Event times of the graphical representation.
///
/// Infection arrows along half-edge `h` come at rate `base`; each one is kept
/// with probability `lambda / base` using the second word of the same block.
/// With `base == lambda` every arrow is kept.
#[derive(Clone, Copy, Debug)]
pub struct ClockStream {
    key: u64,
    lambda: f64,
    base: f64,
}

impl ClockStream {
    pub fn new(master_seed: u64, lambda: f64) -> Self {
        Self::from_key(derive_key(master_seed, "clocks", 0), lambda)
    }

    pub fn from_key(key: u64, lambda: f64) -> Self {
        ClockStream { key, lambda, base: lambda }
    }

    /// Clocks for replica `index` of a run seeded by `master_seed`.
    pub fn replica(master_seed: u64, index: u64, lambda: f64) -> Self {
        Self::from_key(derive_key(master_seed, "clocks", index), lambda)
    }

    /// Rate-`lambda` arrows obtained by thinning a rate-`base` field.
    pub fn thinned(key: u64, lambda: f64, base: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda <= base) {
            return Err(Error::InvalidParameter(format!("thinning needs 0 <= {lambda} <= {base}")));
        }
        Ok(ClockStream { key, lambda, base })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    fn block(&self, kind: u64, id: usize, k: u64) -> [u64; 2] {
        philox2x64(self.key, [k, (kind << 62) | id as u64])
    }

    /// Gap before recovery mark `k` of vertex `v` (rate 1).
    #[inline]
    pub fn recovery_gap(&self, v: usize, k: u64) -> f64 {
        -open01(self.block(KIND_RECOVERY, v, k)[0]).ln()
    }

    /// Gap before arrow `k` on half-edge `h` at the base rate, and whether it is kept.
    #[inline]
    pub fn infection_event(&self, h: usize, k: u64) -> (f64, bool) {
        let b = self.block(KIND_INFECTION, h, k);
        let gap = -open01(b[0]).ln() / self.base;
        let keep = self.base == self.lambda || open01(b[1]) * self.base < self.lambda;
        (gap, keep)
    }
}

/// Modification rules layered on the standard process.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rules {
    /// vertices that stay infected and never carry recovery marks
    pub permanent: Vec<usize>,
    /// recovery at this vertex counts only when it is the only free infected vertex
    pub suppressed: Option<usize>,
    /// recovery marks at this vertex are ignored
    pub ignore_recovery: Option<usize>,
    /// all rates at state x scaled by theta^{r(x)}
    pub theta: Option<f64>,
    /// vertex from which depths r(x) are measured
    pub depth_source: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Variant {
    Standard,
    RootAdded { super_root: usize },
    RootSuppressed { super_root: usize, root: usize },
    BothFixed { a: usize, b: usize },
    Delayed { super_root: usize, theta: f64 },
    IgnoreRecovery { vertex: usize },
}

impl Variant {
    /// `standard`, `root-added:SR`, `root-suppressed:SR,ROOT`, `both-fixed:A,B`,
    /// `delayed:SR,THETA`, `ignore-recovery:V`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("variant {s}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let parts: Vec<&str> = if args.is_empty() { Vec::new() } else { args.split(',').map(str::trim).collect() };
        let int = |i: usize| parts.get(i).and_then(|a| a.parse::<usize>().ok()).ok_or_else(bad);
        let v = match (name.trim(), parts.len()) {
            ("standard", 0) => Variant::Standard,
            ("root-added", 1) => Variant::RootAdded { super_root: int(0)? },
            ("root-suppressed", 2) => Variant::RootSuppressed { super_root: int(0)?, root: int(1)? },
            ("both-fixed", 2) => Variant::BothFixed { a: int(0)?, b: int(1)? },
            ("delayed", 2) => Variant::Delayed { super_root: int(0)?, theta: parts[1].parse().map_err(|_| bad())? },
            ("ignore-recovery", 1) => Variant::IgnoreRecovery { vertex: int(0)? },
            _ => return Err(bad()),
        };
        Ok(v)
    }

    pub fn rules(&self, g: &HalfEdgeGraph) -> Result<Rules> {
        let mut r = Rules { depth_source: g.root(), ..Rules::default() };
        match *self {
            Variant::Standard => {}
            Variant::RootAdded { super_root } => {
                r.permanent = vec![super_root];
                r.depth_source = Some(super_root);
            }
            Variant::RootSuppressed { super_root, root } => {
                r.permanent = vec![super_root];
                r.suppressed = Some(root);
                r.depth_source = Some(super_root);
            }
            Variant::BothFixed { a, b } => {
                r.permanent = vec![a, b];
                r.depth_source = Some(a);
            }
            Variant::Delayed { super_root, theta } => {
                r.permanent = vec![super_root];
                r.depth_source = Some(super_root);
                r.theta = Some(theta);
            }
            Variant::IgnoreRecovery { vertex } => r.ignore_recovery = Some(vertex),
        }
        r.validate(g)?;
        Ok(r)
    }
}

impl Rules {
    pub fn validate(&self, g: &HalfEdgeGraph) -> Result<()> {
        let n = g.n();
        let ok = |v: &usize| *v < n;
        if !self.permanent.iter().all(ok)
            || !self.suppressed.iter().all(ok)
            || !self.ignore_recovery.iter().all(ok)
            || !self.depth_source.iter().all(ok)
        {
            return Err(Error::InvalidParameter("rule vertex out of range".into()));
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParameter(format!("theta {t} outside (0, 1]")));
            }
            if self.depth_source.is_none() {
                return Err(Error::InvalidParameter("delayed process needs a rooted graph".into()));
            }
        }
        Ok(())
    }

    /// Distances from the depth source, if any.
    pub fn depths(&self, g: &HalfEdgeGraph) -> Option<Vec<usize>> {
        self.depth_source.map(|s| match (g.root(), g.depth()) {
            (Some(r), Some(d)) if r == s => d.to_vec(),
            _ => g.bfs(s),
        })
    }
}

/// Infected set with the depth statistic r(x).
#[derive(Clone, Debug)]
pub struct InfectionState {
    infected: Vec<bool>,
    members: Vec<usize>,
    pos: Vec<usize>,
    depth_count: Vec<usize>,
    r: usize,
}

impl InfectionState {
    pub fn new(n: usize, max_depth: usize) -> Self {
        InfectionState {
            infected: vec![false; n],
            members: Vec::new(),
            pos: vec![usize::MAX; n],
            depth_count: vec![0; max_depth + 1],
            r: 0,
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.infected[v]
    }
    pub fn count(&self) -> usize {
        self.members.len()
    }
    pub fn members(&self) -> &[usize] {
        &self.members
    }
    /// Largest depth among infected vertices, 0 for the empty state.
    pub fn r(&self) -> usize {
        self.r
    }

    fn insert(&mut self, v: usize, depth: usize) {
        self.infected[v] = true;
        self.pos[v] = self.members.len();
        self.members.push(v);
        self.depth_count[depth] += 1;
        if depth > self.r {
            self.r = depth;
        }
    }

    fn remove(&mut self, v: usize, depth: usize) {
        self.infected[v] = false;
        let i = self.pos[v];
        let last = self.members.pop().unwrap();
        if last != v {
            self.members[i] = last;
            self.pos[last] = i;
        }
        self.pos[v] = usize::MAX;
        self.depth_count[depth] -= 1;
        while self.r > 0 && self.depth_count[self.r] == 0 {
            self.r -= 1;
        }
    }

    fn clear(&mut self, depth_of: impl Fn(usize) -> usize) {
        while let Some(&v) = self.members.last() {
            self.remove(v, depth_of(v));
        }
    }

    /// Recompute r from scratch.
    pub fn recompute_r(&self, depth_of: impl Fn(usize) -> usize) -> usize {
        self.members.iter().map(|&v| depth_of(v)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimOptions {
    pub horizon: f64,
    /// stop as soon as no non-permanent vertex is infected
    pub stop_when_empty: bool,
    pub record_history: bool,
    pub max_events: Option<u64>,
}

impl SimOptions {
    pub fn horizon(h: f64) -> Self {
        SimOptions { horizon: h, stop_when_empty: true, record_history: false, max_events: None }
    }
    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }
}

/// A state change: `vertex` became infected (`true`) or healthy at `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub time: f64,
    pub vertex: usize,
    pub infected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// time the free infected set first became empty; `None` when censored
    pub extinction_time: Option<f64>,
    pub censored: bool,
    /// time at which the run stopped
    pub end_time: f64,
    /// max of r(X_t) over the run
    pub max_depth: usize,
    pub events: u64,
    pub initial: Vec<usize>,
    pub history: Option<Vec<Change>>,
    /// infected set when the run stopped
    pub final_state: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Ev {
    time: f64,
    kind: u8,
    id: usize,
    ver: u32,
}

impl PartialEq for Ev {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Ev {}
impl PartialOrd for Ev {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Ev {
    // reversed so that BinaryHeap pops the earliest event
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then(o.kind.cmp(&self.kind)).then(o.id.cmp(&self.id))
    }
}

#[derive(Clone, Copy, Default)]
struct Cursor {
    stamp: u32,
    index: u64,
    time: f64,
}

/// Reusable simulator for one graph and rule set.
pub struct Simulator<'g> {
    g: &'g HalfEdgeGraph,
    rules: Rules,
    depth: Vec<usize>,
    rooted: bool,
    permanent: Vec<bool>,
    state: InfectionState,
    version: Vec<u32>,
    rec: Vec<Cursor>,
    inf: Vec<Cursor>,
    epoch: u32,
    heap: BinaryHeap<Ev>,
    free_count: usize,
}

impl<'g> Simulator<'g> {
    pub fn new(g: &'g HalfEdgeGraph, rules: Rules) -> Result<Self> {
        rules.validate(g)?;
        let (depth, rooted) = match rules.depths(g) {
            Some(d) => (d, true),
            None => (vec![0; g.n()], false),
        };
        let maxd = depth.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
        // unreachable vertices are given depth maxd + 1
        let depth: Vec<usize> = depth.into_iter().map(|d| if d == usize::MAX { maxd + 1 } else { d }).collect();
        let mut permanent = vec![false; g.n()];
        for &p in &rules.permanent {
            permanent[p] = true;
        }
        Ok(Simulator {
            g,
            state: InfectionState::new(g.n(), maxd + 1),
            depth,
            rooted,
            permanent,
            rules,
            version: vec![0; g.n()],
            rec: vec![Cursor::default(); g.n()],
            inf: vec![Cursor::default(); g.half_edge_count()],
            epoch: 0,
            heap: BinaryHeap::new(),
            free_count: 0,
        })
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    /// Next recovery mark of `v` strictly after `t`.
    fn next_recovery(&mut self, clocks: &ClockStream, v: usize, t: f64) -> f64 {
        let c = &mut self.rec[v];
        if c.stamp != self.epoch {
            c.stamp = self.epoch;
            c.index = 0;
            c.time = clocks.recovery_gap(v, 0);
        }
        while c.time <= t {
            c.index += 1;
            c.time += clocks.recovery_gap(v, c.index);
        }
        c.time
    }

    /// Next kept arrow on `h` strictly after `t`.
    fn next_arrow(&mut self, clocks: &ClockStream, h: usize, t: f64) -> f64 {
        let c = &mut self.inf[h];
        let mut keep;
        if c.stamp != self.epoch {
            c.stamp = self.epoch;
            c.index = 0;
            let (gap, k) = clocks.infection_event(h, 0);
            c.time = gap;
            keep = k;
        } else {
            keep = clocks.infection_event(h, c.index).1;
        }
        while c.time <= t || !keep {
            c.index += 1;
            let (gap, k) = clocks.infection_event(h, c.index);
            c.time += gap;
            keep = k;
        }
        c.time
    }

    fn infect(&mut self, clocks: &ClockStream, v: usize, t: f64) {
        self.version[v] = self.version[v].wrapping_add(1);
        let ver = self.version[v];
        self.state.insert(v, self.depth[v]);
        if !self.permanent[v] {
            self.free_count += 1;
            let tr = self.next_recovery(clocks, v, t);
            self.heap.push(Ev { time: tr, kind: 0, id: v, ver });
        }
        if clocks.lambda > 0.0 {
            for h in self.g.half_edges(v) {
                if self.g.target(h) == v {
                    continue;
                }
                let ta = self.next_arrow(clocks, h, t);
                self.heap.push(Ev { time: ta, kind: 1, id: h, ver });
            }
        }
    }

    fn recover(&mut self, v: usize) {
        self.version[v] = self.version[v].wrapping_add(1);
        self.state.remove(v, self.depth[v]);
        self.free_count -= 1;
    }

    fn reset(&mut self) {
        let depth = &self.depth;
        self.state.clear(|v| depth[v]);
        self.heap.clear();
        self.free_count = 0;
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            // stamps wrapped; invalidate everything explicitly
            self.rec.iter_mut().for_each(|c| c.stamp = u32::MAX);
            self.inf.iter_mut().for_each(|c| c.stamp = u32::MAX);
        }
    }

    /// Run from the infected set `init` (permanent vertices are added).
    pub fn run(&mut self, init: &[usize], opts: &SimOptions, clocks: &ClockStream) -> Result<Trajectory> {
        if !(opts.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {} <= 0", opts.horizon)));
        }
        self.reset();
        let n = self.g.n();
        let mut start: Vec<usize> = init.to_vec();
        start.extend(self.rules.permanent.iter().copied());
        start.sort_unstable();
        start.dedup();
        if let Some(&bad) = start.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidParameter(format!("initial vertex {bad} out of range")));
        }
        let mut history = if opts.record_history { Some(Vec::new()) } else { None };
        for &v in &start {
            self.infect(clocks, v, 0.0);
            if let Some(h) = history.as_mut() {
                h.push(Change { time: 0.0, vertex: v, infected: true });
            }
        }
        let theta = self.rules.theta;
        let mut tau = 0.0f64;
        let mut real = 0.0f64;
        let mut max_depth = self.state.r();
        let mut events = 0u64;
        let mut extinct = None;
        if self.free_count == 0 {
            extinct = Some(0.0);
        }
        let stop = |e: &Option<f64>| opts.stop_when_empty && e.is_some();
        let mut censored = false;
        while !stop(&extinct) {
            let ev = match self.heap.pop() {
                Some(ev) => ev,
                None => {
                    real = opts.horizon;
                    censored = extinct.is_none();
                    break;
                }
            };
            let owner = if ev.kind == 0 { ev.id } else { self.g.owner(ev.id) };
            if ev.ver != self.version[owner] {
                continue;
            }
            // undelayed runs keep the clock time itself so coupled runs agree bit for bit
            let next_real = match theta {
                Some(th) => real + (ev.time - tau) * th.powi(-(self.state.r() as i32)),
                None => ev.time,
            };
            if next_real > opts.horizon {
                real = opts.horizon;
                censored = extinct.is_none();
                break;
            }
            if let Some(m) = opts.max_events {
                if events >= m {
                    censored = extinct.is_none();
                    break;
                }
            }
            tau = ev.time;
            real = next_real;
            events += 1;
            if ev.kind == 0 {
                let v = ev.id;
                let blocked = self.rules.ignore_recovery == Some(v)
                    || (self.rules.suppressed == Some(v) && self.free_count != 1);
                if blocked {
                    let tr = self.next_recovery(clocks, v, tau);
                    self.heap.push(Ev { time: tr, kind: 0, id: v, ver: ev.ver });
                } else {
                    self.recover(v);
                    if let Some(h) = history.as_mut() {
                        h.push(Change { time: real, vertex: v, infected: false });
                    }
                    if self.free_count == 0 && extinct.is_none() {
                        extinct = Some(real);
                    }
                }
            } else {
                let h = ev.id;
                let w = self.g.target(h);
                if !self.state.contains(w) {
                    self.infect(clocks, w, tau);
                    if let Some(hist) = history.as_mut() {
                        hist.push(Change { time: real, vertex: w, infected: true });
                    }
                    if self.state.r() > max_depth {
                        max_depth = self.state.r();
                    }
                }
                let ta = self.next_arrow(clocks, h, tau);
                self.heap.push(Ev { time: ta, kind: 1, id: h, ver: ev.ver });
            }
            if events.is_multiple_of(1000) {
                let depth = &self.depth;
                assert_eq!(self.state.recompute_r(|v| depth[v]), self.state.r(), "depth statistic drifted");
            }
        }
        if !self.rooted {
            max_depth = 0;
        }
        let mut final_state = self.state.members().to_vec();
        final_state.sort_unstable();
        Ok(Trajectory {
            extinction_time: extinct,
            censored,
            end_time: extinct.filter(|_| opts.stop_when_empty).unwrap_or(real),
            max_depth,
            events,
            initial: start,
            history,
            final_state,
        })
    }
}

/// One run.
pub fn simulate(g: &HalfEdgeGraph, variant: &Variant, init: &[usize], opts: &SimOptions, clocks: &ClockStream) -> Result<Trajectory> {
    Simulator::new(g, variant.rules(g)?)?.run(init, opts, clocks)
}

/// Several runs on one graph sharing one clock realisation.
pub fn simulate_coupled(
    g: &HalfEdgeGraph,
    rules: &[Rules],
    inits: &[Vec<usize>],
    opts: &SimOptions,
    clocks: &ClockStream,
) -> Result<Vec<Trajectory>> {
    if rules.len() != inits.len() {
        return Err(Error::InvalidParameter("one rule set per initial state".into()));
    }
    rules.iter().zip(inits).map(|(r, i)| Simulator::new(g, r.clone())?.run(i, opts, clocks)).collect()
}

/// Replay a history to the state just after time `t`.
pub fn state_at(history: &[Change], t: f64) -> Vec<usize> {
    let mut set = std::collections::BTreeSet::new();
    for c in history.iter().take_while(|c| c.time <= t) {
        if c.infected {
            set.insert(c.vertex);
        } else {
            set.remove(&c.vertex);
        }
    }
    set.into_iter().collect()
}

/// Check X_t ⊆ Y_t at every change time of either history; returns the first
/// violation time.
pub fn first_domination_violation(n: usize, x: &[Change], y: &[Change]) -> Option<f64> {
    let mut inx = vec![false; n];
    let mut iny = vec![false; n];
    let mut bad = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let t = match (x.get(i), y.get(j)) {
            (Some(a), Some(b)) => a.time.min(b.time),
            (Some(a), None) => a.time,
            (None, Some(b)) => b.time,
            _ => unreachable!(),
        };
        while i < x.len() && x[i].time == t {
            let c = x[i];
            let before = inx[c.vertex] && !iny[c.vertex];
            inx[c.vertex] = c.infected;
            let after = inx[c.vertex] && !iny[c.vertex];
            bad = bad + after as usize - before as usize;
            i += 1;
        }
        while j < y.len() && y[j].time == t {
            let c = y[j];
            let before = inx[c.vertex] && !iny[c.vertex];
            iny[c.vertex] = c.infected;
            let after = inx[c.vertex] && !iny[c.vertex];
            bad = bad + after as usize - before as usize;
            j += 1;
        }
        if bad > 0 {
            return Some(t);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    All,
    Vertex(usize),
    RandomOne,
    Set(Vec<usize>),
}

impl Init {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Init::All),
            "random-one" => Ok(Init::RandomOne),
            _ => s
                .strip_prefix("vertex:")
                .and_then(|k| k.parse().ok())
                .map(Init::Vertex)
                .ok_or_else(|| Error::Parse(format!("init {s}"))),
        }
    }

    /// Initial set for replica `index`.
    pub fn realise(&self, n: usize, seed: u64, index: u64) -> Vec<usize> {
        match self {
            Init::All => (0..n).collect(),
            Init::Vertex(k) => vec![*k],
            Init::RandomOne => vec![derive_stream(seed, "init", index).below(n)],
            Init::Set(s) => s.clone(),
        }
    }
}

/// Run `reps` replicas in parallel; replica `i` uses clocks `(seed, i)`.
pub fn run_replicas(
    g: &HalfEdgeGraph,
    rules: &Rules,
    init: &Init,
    lambda: f64,
    opts: &SimOptions,
    reps: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    rules.validate(g)?;
    (0..reps)
        .into_par_iter()
        .map_init(
            || Simulator::new(g, rules.clone()).expect("validated"),
            |sim, i| {
                let clocks = ClockStream::replica(seed, i as u64, lambda);
                sim.run(&init.realise(g.n(), seed, i as u64), opts, &clocks)
            },
        )
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalStats {
    pub reps: usize,
    pub censored: usize,
    pub censored_fraction: f64,
    /// mean over replicas; `None` if any replica was censored
    pub mean: Option<f64>,
    /// mean of min(T, horizon), a lower bound under censoring
    pub mean_lower_bound: f64,
    pub std_error: Option<f64>,
    pub median: Option<f64>,
    /// (q, value) with the value absent where the quantile falls in the censored part
    pub quantiles: Vec<(f64, Option<f64>)>,
}

impl SurvivalStats {
    pub fn from_times(times: &[Option<f64>], horizon: f64) -> Self {
        let reps = times.len();
        let censored = times.iter().filter(|t| t.is_none()).count();
        let mut sorted: Vec<f64> = times.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| -> Option<f64> {
            if reps == 0 {
                return None;
            }
            let i = ((p * reps as f64).ceil() as usize).clamp(1, reps) - 1;
            let x = sorted[i];
            x.is_finite().then_some(x)
        };
        let lb: f64 = times.iter().map(|t| t.unwrap_or(horizon)).sum::<f64>() / reps.max(1) as f64;
        let (mean, se) = if censored == 0 && reps > 0 {
            let var = if reps > 1 {
                times.iter().map(|t| (t.unwrap() - lb).powi(2)).sum::<f64>() / (reps - 1) as f64
            } else {
                0.0
            };
            (Some(lb), Some((var / reps as f64).sqrt()))
        } else {
            (None, None)
        };
        SurvivalStats {
            reps,
            censored,
            censored_fraction: censored as f64 / reps.max(1) as f64,
            mean,
            mean_lower_bound: lb,
            std_error: se,
            median: q(0.5),
            quantiles: [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|&p| (p, q(p))).collect(),
        }
    }
}

/// Survival time of the standard process over `reps` replicas.
pub fn survival_time(g: &HalfEdgeGraph, lambda: f64, init: &Init, horizon: f64, reps: usize, seed: u64) -> Result<SurvivalStats> {
    let tr = run_replicas(g, &Rules::default(), init, lambda, &SimOptions::horizon(horizon), reps, seed)?;
    let times: Vec<Option<f64>> = tr.iter().map(|t| t.extinction_time).collect();
    Ok(SurvivalStats::from_times(&times, horizon))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthTail {
    pub reps: usize,
    /// (h, number of excursions with H >= h, P(H >= h))
    pub tail: Vec<(usize, usize, f64)>,
    /// range of h used for the fit (hits >= min_hits)
    pub fit_range: Option<(usize, usize)>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// exp(slope): the fitted ratio P(H >= h+1) / P(H >= h)
    pub ratio: Option<f64>,
    pub ratio_band: Option<(f64, f64)>,
}

/// Least-squares fit of y on x: (slope, intercept, slope standard error).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let se = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, icpt, se))
}

impl DepthTail {
    pub fn from_depths(hs: &[usize], min_hits: usize) -> Self {
        let reps = hs.len();
        let top = hs.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0usize; top + 2];
        for &h in hs {
            counts[h] += 1;
        }
        let mut tail = Vec::new();
        let mut above = 0;
        for h in (1..=top).rev() {
            above += counts[h];
            tail.push((h, above, above as f64 / reps.max(1) as f64));
        }
        tail.reverse();
        let good: Vec<&(usize, usize, f64)> = tail.iter().filter(|t| t.1 >= min_hits).collect();
        let x: Vec<f64> = good.iter().map(|t| t.0 as f64).collect();
        let y: Vec<f64> = good.iter().map(|t| t.2.ln()).collect();
        let fit = linear_fit(&x, &y);
        DepthTail {
            reps,
            fit_range: fit.map(|_| (good[0].0, good[good.len() - 1].0)),
            slope: fit.map(|f| f.0),
            slope_se: fit.map(|f| f.2),
            ratio: fit.map(|f| f.0.exp()),
            ratio_band: fit.map(|f| ((f.0 - 2.0 * f.2).exp(), (f.0 + 2.0 * f.2).exp())),
            tail,
        }
    }

    pub fn prob_at_least(&self, h: usize) -> f64 {
        self.tail.iter().find(|t| t.0 == h).map(|t| t.2).unwrap_or(if h == 0 { 1.0 } else { 0.0 })
    }
}

/// Max depth H over excursions of the root-added process from the root to the
/// empty state. The tree must carry a super-root.
pub fn depth_excursion(tree: &RootedTree, lambda: f64, reps: usize, seed: u64, min_hits: usize) -> Result<DepthTail> {
    let sr = tree.super_root.ok_or_else(|| Error::InvalidParameter("tree has no super-root".into()))?;
    let rules = Variant::RootAdded { super_root: sr }.rules(&tree.graph)?;
    let opts = SimOptions::horizon(f64::INFINITY);
    let tr = run_replicas(&tree.graph, &rules, &Init::Vertex(tree.root), lambda, &opts, reps, seed)?;
    let hs: Vec<usize> = tr.iter().map(|t| t.max_depth).collect();
    Ok(DepthTail::from_depths(&hs, min_hits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::path;

    #[test]
    fn lone_vertex_recovers_at_first_mark() {
        let g = HalfEdgeGraph::from_edges(1, &[]).unwrap();
        let c = ClockStream::new(3, 1.0);
        let t = simulate(&g, &Variant::Standard, &[0], &SimOptions::horizon(1e9), &c).unwrap();
        assert_eq!(t.extinction_time, Some(c.recovery_gap(0, 0)));
        assert_eq!(t.events, 1);
    }

    #[test]
    fn empty_init_is_extinct_at_zero() {
        let g = path(3);
        let t = simulate(&g, &Variant::Standard, &[], &SimOptions::horizon(5.0), &ClockStream::new(1, 1.0)).unwrap();
        assert_eq!(t.extinction_time, Some(0.0));
    }

    #[test]
    fn deterministic_rerun() {
        let g = path(6);
        let c = ClockStream::new(99, 1.3);
        let o = SimOptions::horizon(50.0).with_history();
        let a = simulate(&g, &Variant::Standard, &[2], &o, &c).unwrap();
        let b = simulate(&g, &Variant::Standard, &[2], &o, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn variant_strings() {
        assert_eq!(Variant::parse("standard").unwrap(), Variant::Standard);
        assert_eq!(Variant::parse("delayed:4,0.5").unwrap(), Variant::Delayed { super_root: 4, theta: 0.5 });
        assert_eq!(Variant::parse("both-fixed:0,3").unwrap(), Variant::BothFixed { a: 0, b: 3 });
        assert!(Variant::parse("root-added").is_err());
        assert!(Variant::parse("delayed:1,x").is_err());
    }

    #[test]
    fn bad_inputs() {
        let g = path(2);
        let c = ClockStream::new(1, 1.0);
        assert!(simulate(&g, &Variant::Standard, &[0], &SimOptions::horizon(0.0), &c).is_err());
        let r = Rules { theta: Some(0.5), ..Rules::default() };
        assert!(Simulator::new(&g, r).is_err());
    }

    #[test]
    fn censoring_at_horizon() {
        let g = path(1);
        let r = Variant::RootAdded { super_root: 0 }.rules(&g).unwrap();
        let mut s = Simulator::new(&g, r).unwrap();
        let t = s.run(&[1], &SimOptions::horizon(3.0), &ClockStream::new(5, 100.0)).unwrap();
        // with lambda = 100 the single free vertex is almost surely infected at the horizon
        assert!(t.censored || t.extinction_time.is_some());
    }

    #[test]
    fn quantiles_respect_censoring() {
        let s = SurvivalStats::from_times(&[Some(1.0), Some(2.0), None, None], 10.0);
        assert_eq!(s.median, Some(2.0));
        assert_eq!(s.mean, None);
        assert_eq!(s.quantiles[3].1, None);
        assert_eq!(s.mean_lower_bound, 5.75);
    }

    #[test]
    fn domination_scan() {
        let x = vec![Change { time: 0.0, vertex: 0, infected: true }, Change { time: 1.0, vertex: 0, infected: false }];
        let y = vec![Change { time: 0.0, vertex: 0, infected: true }];
        assert_eq!(first_domination_violation(1, &x, &y), None);
        assert_eq!(first_domination_violation(1, &y, &x), Some(1.0));
    }
}
