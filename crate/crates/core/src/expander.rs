//! Embedded expanders inside configuration-model graphs.
//!
//! Pipeline: drop high-degree vertices, grow balls around the medium-degree
//! vertices, contract each ball to a supervertex, peel a core out of the
//! marked ("blue") half-edges, then certify the ball centres.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DegreeDistribution, TailClass};
use crate::error::{Error, Result};
use crate::graph::HalfEdgeGraph;
use crate::graphgen::CutoffLine;
use crate::rng::{derive_stream, shuffle, Stream};

pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Σ d(d−1) / Σ d over a degree sequence.
pub fn branching_rate(degrees: &[usize]) -> f64 {
    let s: f64 = degrees.iter().map(|&d| d as f64).sum();
    if s == 0.0 {
        return 0.0;
    }
    degrees.iter().map(|&d| (d * d.saturating_sub(1)) as f64).sum::<f64>() / s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationReport {
    pub j: usize,
    pub n: usize,
    pub n_bar: usize,
    pub total_degree: usize,
    pub b_bar: f64,
    /// vertices of Ḡ with degree in [⌈j/2⌉, 2j]
    pub mid_count: usize,
}

#[derive(Clone, Debug)]
pub struct Truncation {
    pub graph: HalfEdgeGraph,
    /// original id of each vertex of Ḡ
    pub old_ids: Vec<usize>,
    pub report: TruncationReport,
}

/// Delete every vertex of degree ≥ 2j+1 together with the edges at it.
pub fn truncate_degrees(g: &HalfEdgeGraph, j: usize) -> Result<Truncation> {
    if j == 0 {
        return Err(Error::InvalidParameter("j must be at least 1".into()));
    }
    let keep: Vec<bool> = (0..g.n()).map(|v| g.degree(v) <= 2 * j).collect();
    let (graph, old_ids) = g.induced(&keep);
    if graph.n() == 0 {
        return Err(Error::EmptyTruncation);
    }
    let degs = graph.degrees();
    let lo = j.div_ceil(2);
    let report = TruncationReport {
        j,
        n: g.n(),
        n_bar: graph.n(),
        total_degree: degs.iter().sum(),
        b_bar: branching_rate(&degs),
        mid_count: degs.iter().filter(|&&d| d >= lo && d <= 2 * j).count(),
    };
    Ok(Truncation { graph, old_ids, report })
}

/// Balls grown around the vertices of W.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub centers: Vec<usize>,
    pub radii: Vec<usize>,
    pub max_radius: usize,
    pub r_cap: usize,
    /// balls claiming each vertex, in claim order
    pub claims: Vec<Vec<u32>>,
    /// vertices whose half-edges were all explored
    pub expanded: Vec<bool>,
    /// other balls met by each ball, sorted
    pub intersections: Vec<Vec<u32>>,
    /// vertices of each ball, centre first
    pub members: Vec<Vec<usize>>,
}

impl Exploration {
    pub fn fraction_full(&self) -> f64 {
        if self.centers.is_empty() {
            return 0.0;
        }
        self.radii.iter().filter(|&&r| r >= self.max_radius).count() as f64 / self.centers.len() as f64
    }
}

fn note_meeting(inter: &mut [Vec<u32>], a: u32, b: u32) {
    for (x, y) in [(a, b), (b, a)] {
        let l = &mut inter[x as usize];
        if let Err(p) = l.binary_search(&y) {
            l.insert(p, y);
        }
    }
}

/// Grow B(v, r_v) for all v in `w` in lock step. A ball gains a layer while
/// it meets at most `r_cap` other balls and is below radius `radius`. A
/// vertex reached by two balls is not explored further.
pub fn explore_balls(g: &HalfEdgeGraph, w: &[usize], radius: usize, r_cap: usize) -> Exploration {
    let n = g.n();
    let k = w.len();
    let mut claims: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut expanded = vec![false; n];
    let mut inter: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut members: Vec<Vec<usize>> = w.iter().map(|&c| vec![c]).collect();
    for (i, &c) in w.iter().enumerate() {
        if let Some(&o) = claims[c].first() {
            note_meeting(&mut inter, o, i as u32);
        }
        claims[c].push(i as u32);
    }
    let mut frontier: Vec<Vec<usize>> = w.iter().map(|&c| vec![c]).collect();
    let mut reached = vec![0usize; k];
    let mut radii = vec![radius.min(1); k];
    loop {
        // bring every ball up to its current radius, one layer per round
        while (0..k).any(|i| reached[i] < radii[i]) {
            for i in 0..k {
                if reached[i] >= radii[i] {
                    continue;
                }
                let me = i as u32;
                let mut next = Vec::new();
                for &u in &std::mem::take(&mut frontier[i]) {
                    let own = reached[i] == 0 || claims[u].as_slice() == [me];
                    if !own || expanded[u] {
                        continue;
                    }
                    expanded[u] = true;
                    for x in g.neighbors(u) {
                        if x == u || claims[x].contains(&me) {
                            continue;
                        }
                        for &o in &claims[x] {
                            note_meeting(&mut inter, o, me);
                        }
                        claims[x].push(me);
                        members[i].push(x);
                        if claims[x].len() == 1 {
                            next.push(x);
                        }
                    }
                }
                frontier[i] = next;
                reached[i] += 1;
            }
        }
        let mut grew = false;
        for i in 0..k {
            if radii[i] < radius && inter[i].len() <= r_cap {
                radii[i] += 1;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Exploration { centers: w.to_vec(), radii, max_radius: radius, r_cap, claims, expanded, intersections: inter, members }
}

/// Graph with one supervertex per ball followed by the untouched vertices.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub graph: HalfEdgeGraph,
    pub balls: usize,
    /// ball centre for nodes below `balls`, the vertex itself above
    pub vertex_of_node: Vec<usize>,
    /// half-edge of the source graph behind each quotient half-edge
    pub origin: Vec<usize>,
}

/// Contract each explored ball; its half-edges are the unexplored half-edges
/// at its vertices. A half-edge at a vertex shared by several balls goes to
/// one of them uniformly at random.
pub fn build_quotient(g: &HalfEdgeGraph, ex: &Exploration, rng: &mut Stream) -> Result<Quotient> {
    let balls = ex.centers.len();
    let mut vertex_of_node: Vec<usize> = ex.centers.clone();
    let mut untouched = vec![usize::MAX; g.n()];
    for v in 0..g.n() {
        if ex.claims[v].is_empty() {
            untouched[v] = vertex_of_node.len();
            vertex_of_node.push(v);
        }
    }
    let nodes = vertex_of_node.len();
    let h_total = g.half_edge_count();
    let mut node_of = vec![usize::MAX; h_total];
    for h in 0..h_total {
        let u = g.owner(h);
        if ex.expanded[u] || ex.expanded[g.target(h)] {
            continue;
        }
        let c = &ex.claims[u];
        node_of[h] = match c.len() {
            0 => untouched[u],
            1 => c[0] as usize,
            l => c[rng.below(l)] as usize,
        };
    }
    let mut deg = vec![0usize; nodes];
    for &x in &node_of {
        if x != usize::MAX {
            deg[x] += 1;
        }
    }
    let mut next = Vec::with_capacity(nodes);
    let mut acc = 0;
    for &d in &deg {
        next.push(acc);
        acc += d;
    }
    let mut new_id = vec![usize::MAX; h_total];
    let mut origin = vec![0; acc];
    for h in 0..h_total {
        let x = node_of[h];
        if x != usize::MAX {
            new_id[h] = next[x];
            origin[next[x]] = h;
            next[x] += 1;
        }
    }
    let mate: Vec<usize> = origin.iter().map(|&h| new_id[g.mate(h)]).collect();
    let graph = HalfEdgeGraph::from_matching(&deg, mate)?;
    Ok(Quotient { graph, balls, vertex_of_node, origin })
}

/// Survivors of peeling to the s-core, removing low-degree vertices in the
/// given order of first inspection. Loops are ignored; parallel edges count.
pub fn peel_core_with_order(n: usize, edges: &[(usize, usize)], s: usize, order: &[usize]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = order.iter().rev().copied().filter(|&v| deg[v] < s).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &x in &adj[v] {
            if alive[x] {
                deg[x] -= 1;
                if deg[x] + 1 == s {
                    stack.push(x);
                }
            }
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

/// s-core peeled in a random order.
pub fn peel_core(n: usize, edges: &[(usize, usize)], s: usize, rng: &mut Stream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, rng);
    peel_core_with_order(n, edges, s, &order)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffPeel {
    pub survivors: Vec<usize>,
    pub removed: usize,
    pub final_line: f64,
}

/// Peeling with a matching generated on the fly: internal half-edges get
/// uniform heights, and while some vertex has fewer than `s` unmatched
/// half-edges its half-edges are matched to the highest unmatched ones and
/// the vertex is removed.
pub fn peel_core_cutoff(degrees: &[usize], s: usize, rng: &mut Stream) -> Result<CutoffPeel> {
    let total: usize = degrees.iter().sum();
    let mut owner = Vec::with_capacity(total);
    let mut first = Vec::with_capacity(degrees.len());
    for (v, &d) in degrees.iter().enumerate() {
        first.push(owner.len());
        owner.extend(std::iter::repeat_n(v, d));
    }
    let mut cl = CutoffLine::new(total, rng);
    let mut free = degrees.to_vec();
    let mut alive = vec![true; degrees.len()];
    let mut stack: Vec<usize> = (0..degrees.len()).rev().filter(|&v| free[v] < s).collect();
    let mut removed = 0;
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        removed += 1;
        for h in first[v]..first[v] + degrees[v] {
            if !cl.is_unmatched(h) {
                continue;
            }
            if cl.remaining() < 2 {
                break;
            }
            let step = cl.match_selected(h)?;
            free[v] -= 1;
            let w = owner[step.matched_to];
            free[w] -= 1;
            if alive[w] && w != v && free[w] + 1 == s {
                stack.push(w);
            }
        }
    }
    Ok(CutoffPeel { survivors: (0..degrees.len()).filter(|&v| alive[v]).collect(), removed, final_line: cl.line() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoreReport {
    pub m: usize,
    /// quotient nodes of degree ≥ M among the supervertices
    pub candidates: Vec<usize>,
    /// blue-blue edges (𝔎)
    pub blue_edges: usize,
    /// 2𝔎 / (M |W′₁|)
    pub theta: f64,
    pub s: usize,
    /// surviving quotient nodes
    pub core: Vec<usize>,
    /// largest quotient degree among survivors
    pub max_core_degree: usize,
}

/// Mark exactly `m` half-edges of every supervertex of degree ≥ m, then
/// peel the internal blue multigraph to its s-core. Without an explicit
/// `s` the threshold is max(1, ⌈θM/20⌉).
pub fn blue_core(q: &Quotient, m: usize, s: Option<usize>, rng: &mut Stream) -> Result<CoreReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be at least 1".into()));
    }
    let g = &q.graph;
    let candidates: Vec<usize> = (0..q.balls).filter(|&x| g.degree(x) >= m).collect();
    let mut local = vec![usize::MAX; g.n()];
    for (i, &c) in candidates.iter().enumerate() {
        local[c] = i;
    }
    let mut blue = vec![false; g.half_edge_count()];
    for &c in &candidates {
        let mut hs: Vec<usize> = g.half_edges(c).collect();
        shuffle(&mut hs, rng);
        for &h in &hs[..m] {
            blue[h] = true;
        }
    }
    let mut k = 0;
    let mut edges = Vec::new();
    for h in 0..blue.len() {
        let t = g.mate(h);
        if h < t && blue[h] && blue[t] {
            k += 1;
            edges.push((local[g.owner(h)], local[g.owner(t)]));
        }
    }
    let theta = if candidates.is_empty() { 0.0 } else { 2.0 * k as f64 / (m * candidates.len()) as f64 };
    let s = s.unwrap_or_else(|| ((theta * m as f64 / 20.0).ceil() as usize).max(1));
    let kept = peel_core(candidates.len(), &edges, s, rng);
    let core: Vec<usize> = kept.iter().map(|&i| candidates[i]).collect();
    let max_core_degree = core.iter().map(|&c| g.degree(c)).max().unwrap_or(0);
    Ok(CoreReport { m, candidates, blue_edges: k, theta, s, core, max_core_degree })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled(usize),
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyMode::Exhaustive => write!(f, "exhaustive"),
            VerifyMode::Sampled(k) => write!(f, "sampled:{k}"),
        }
    }
}

impl FromStr for VerifyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exhaustive" {
            return Ok(VerifyMode::Exhaustive);
        }
        if s == "sampled" {
            return Ok(VerifyMode::Sampled(DEFAULT_SAMPLES));
        }
        match s.strip_prefix("sampled:").map(str::parse) {
            Some(Ok(k)) => Ok(VerifyMode::Sampled(k)),
            _ => Err(Error::Parse(format!("verify mode {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Verified,
    Refuted,
    Inconclusive,
    RefutedEmpty,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PipelineParams {
    pub j: usize,
    #[serde(rename = "R")]
    pub radius: usize,
    pub rfrak: f64,
    pub r_cap: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub theta_core: f64,
    pub s: usize,
    pub u_j: f64,
    pub thinned: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    pub w0: Vec<usize>,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: usize,
    pub mode: String,
    /// true only for an exhaustive check
    pub proof: bool,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    pub checked: u64,
    pub violations: u64,
    #[serde(default)]
    pub params: Option<PipelineParams>,
    pub graph_hash: String,
}

impl ExpanderCertificate {
    /// Largest subset size covered by the definition.
    pub fn max_size(&self) -> usize {
        max_subset(self.alpha, self.w0.len())
    }

    /// Recompute the witness from scratch. True when the certificate is not
    /// a refutation or its witness still violates the expansion bound.
    pub fn recheck(&self, g: &HalfEdgeGraph) -> bool {
        match (&self.outcome, &self.witness) {
            (Outcome::Refuted, Some(a)) => {
                !a.is_empty()
                    && a.len() <= self.max_size()
                    && a.iter().all(|v| self.w0.contains(v))
                    && reach_count(g, &self.w0, a, self.radius) < 2 * a.len()
            }
            (Outcome::Refuted, None) => false,
            _ => true,
        }
    }
}

fn max_subset(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64) + 1e-9).floor() as usize
}

/// |N(A, R) ∩ W₀| by a multi-source BFS.
pub fn reach_count(g: &HalfEdgeGraph, w0: &[usize], a: &[usize], radius: usize) -> usize {
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = std::collections::VecDeque::new();
    for &v in a {
        if dist[v] == usize::MAX {
            dist[v] = 0;
            q.push_back(v);
        }
    }
    while let Some(u) = q.pop_front() {
        if dist[u] == radius {
            continue;
        }
        for x in g.neighbors(u) {
            if dist[x] == usize::MAX {
                dist[x] = dist[u] + 1;
                q.push_back(x);
            }
        }
    }
    w0.iter().filter(|&&w| dist[w] != usize::MAX).count()
}

type Bits = Vec<u64>;

fn reach_bits(g: &HalfEdgeGraph, w0: &[usize], radius: usize) -> Vec<Bits> {
    let words = w0.len().div_ceil(64);
    let mut idx = vec![usize::MAX; g.n()];
    for (i, &w) in w0.iter().enumerate() {
        idx[w] = i;
    }
    w0.par_iter()
        .map(|&w| {
            let mut b = vec![0u64; words];
            let mut seen = std::collections::HashMap::new();
            seen.insert(w, 0usize);
            let mut q = std::collections::VecDeque::from([w]);
            while let Some(u) = q.pop_front() {
                if idx[u] != usize::MAX {
                    b[idx[u] / 64] |= 1 << (idx[u] % 64);
                }
                let d = seen[&u];
                if d == radius {
                    continue;
                }
                for x in g.neighbors(u) {
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(x) {
                        e.insert(d + 1);
                        q.push_back(x);
                    }
                }
            }
            b
        })
        .collect()
}

fn popcount(b: &[u64]) -> usize {
    b.iter().map(|x| x.count_ones() as usize).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Default)]
struct Tally {
    checked: u64,
    violations: u64,
    witness: Option<Vec<usize>>,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.checked += o.checked;
        self.violations += o.violations;
        if self.witness.is_none() {
            self.witness = o.witness;
        }
        self
    }
}

/// All m-subsets whose smallest index is `a`, in lexicographic order.
fn enumerate_from(bits: &[Bits], a: usize, m: usize) -> Tally {
    let n = bits.len();
    let mut t = Tally::default();
    let mut chosen = vec![a];
    let mut unions = vec![bits[a].clone()];
    fn rec(bits: &[Bits], n: usize, m: usize, chosen: &mut Vec<usize>, unions: &mut Vec<Bits>, t: &mut Tally) {
        if chosen.len() == m {
            t.checked += 1;
            if popcount(unions.last().unwrap()) < 2 * m {
                t.violations += 1;
                if t.witness.is_none() {
                    t.witness = Some(chosen.clone());
                }
            }
            return;
        }
        let start = chosen.last().unwrap() + 1;
        let need = m - chosen.len();
        for b in start..=n - need {
            let u: Bits = unions.last().unwrap().iter().zip(&bits[b]).map(|(x, y)| x | y).collect();
            chosen.push(b);
            unions.push(u);
            rec(bits, n, m, chosen, unions, t);
            chosen.pop();
            unions.pop();
        }
    }
    rec(bits, n, m, &mut chosen, &mut unions, &mut t);
    t
}

/// Check |N(A, R) ∩ W₀| ≥ 2|A| for subsets A of W₀ with |A| ≤ α|W₀|.
/// Exhaustive mode falls back to sampling when the number of subsets
/// exceeds `budget`.
pub fn verify_expander(
    g: &HalfEdgeGraph,
    w0: &[usize],
    alpha: f64,
    radius: usize,
    mode: VerifyMode,
    budget: u64,
    seed: u64,
) -> Result<ExpanderCertificate> {
    if w0.is_empty() {
        return Err(Error::InvalidParameter("W0 is empty".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha}")));
    }
    let mut w0 = w0.to_vec();
    w0.sort_unstable();
    w0.dedup();
    if w0.iter().any(|&v| v >= g.n()) {
        return Err(Error::InvalidParameter("W0 vertex out of range".into()));
    }
    let n = w0.len();
    let mmax = max_subset(alpha, n);
    let total: f64 = (1..=mmax).map(|m| binomial(n, m)).sum();
    let mode = match mode {
        VerifyMode::Exhaustive if total > budget as f64 => VerifyMode::Sampled(DEFAULT_SAMPLES),
        m => m,
    };
    let bits = reach_bits(g, &w0, radius);
    let tally = match mode {
        VerifyMode::Exhaustive => (1..=mmax)
            .map(|m| {
                (0..=n - m)
                    .into_par_iter()
                    .map(|a| enumerate_from(&bits, a, m))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold(Tally::default(), Tally::merge)
            })
            .fold(Tally::default(), Tally::merge),
        VerifyMode::Sampled(k) => (1..=mmax)
            .into_par_iter()
            .map(|m| {
                let mut rng = derive_stream(seed, "expander-sample", m as u64);
                let mut t = Tally::default();
                let mut pool: Vec<usize> = (0..n).collect();
                for _ in 0..k {
                    for i in 0..m {
                        let r = i + rng.below(n - i);
                        pool.swap(i, r);
                    }
                    let mut u = vec![0u64; bits[0].len()];
                    for &a in &pool[..m] {
                        u.iter_mut().zip(&bits[a]).for_each(|(x, y)| *x |= y);
                    }
                    t.checked += 1;
                    if popcount(&u) < 2 * m {
                        t.violations += 1;
                        if t.witness.is_none() {
                            let mut a = pool[..m].to_vec();
                            a.sort_unstable();
                            t.witness = Some(a);
                        }
                    }
                }
                t
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge),
    };
    let outcome = if tally.violations > 0 {
        Outcome::Refuted
    } else if tally.checked == 0 && mmax > 0 {
        Outcome::Inconclusive
    } else {
        Outcome::Verified
    };
    let witness = tally.witness.map(|a| a.into_iter().map(|i| w0[i]).collect());
    Ok(ExpanderCertificate {
        w0,
        alpha,
        radius,
        mode: mode.to_string(),
        proof: mode == VerifyMode::Exhaustive,
        outcome,
        witness,
        checked: tally.checked,
        violations: tally.violations,
        params: None,
        graph_hash: g.hash(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuStats {
    pub b_bar: f64,
    pub d: f64,
    pub u_j: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Constants {
    pub eps: f64,
    /// ε′
    pub eps1: f64,
    /// ε″; by default (1 − 1/b̄)/2, which keeps b̄(1−ε″) > 1
    pub eps2: Option<f64>,
    pub r0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { eps: 0.5, eps1: 0.1, eps2: None, r0: 2.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solved {
    pub r1_exact: f64,
    pub rfrak: f64,
    pub radius_exact: f64,
    pub r1: usize,
    pub radius: usize,
    pub m: f64,
    pub theta_core: f64,
    /// b̄^{2R₁−1} j² 𝔲_j / d at the rounded R₁, divided by 10⁻⁴
    pub slack_r1: f64,
    /// b̄^{2R−1} j² 𝔲_j / d at the rounded R, divided by 𝔯/10
    pub slack_radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterChoice {
    pub j: usize,
    pub eps2: f64,
    pub feasible: bool,
    pub reasons: Vec<String>,
    pub solved: Option<Solved>,
}

/// Solve for R₁, 𝔯 and R from their defining equalities, round the radii
/// up, and derive M and the core density bound.
pub fn choose_parameters(stats: &MuStats, j: usize, c: &Constants) -> Result<ParameterChoice> {
    let b = stats.b_bar;
    if !(b > 1.0) {
        return Err(Error::Subcritical(b));
    }
    let eps2 = c.eps2.unwrap_or((1.0 - 1.0 / b) / 2.0);
    let mut reasons = Vec::new();
    if b * (1.0 - eps2) <= 1.0 {
        reasons.push(format!("b(1-eps'') = {} <= 1", b * (1.0 - eps2)));
    }
    if !(stats.u_j > 0.0) || j == 0 {
        reasons.push("u_j = 0".into());
        return Ok(ParameterChoice { j, eps2, feasible: false, reasons, solved: None });
    }
    let jf = j as f64;
    let base = jf * jf * stats.u_j / stats.d;
    let lb = b.ln();
    let r1_exact = ((1e-4 / base).ln() / lb + 1.0) / 2.0;
    let growth = b * (1.0 - eps2);
    let rfrak = c.eps1 * c.eps1 * growth.powf(r1_exact - 1.0) * jf / 800.0;
    let radius_exact = ((rfrak / 10.0 / base).ln() / lb + 1.0) / 2.0;
    let r1 = r1_exact.ceil().max(0.0) as usize;
    let radius = radius_exact.ceil().max(0.0) as usize;
    let m = c.eps1.powi(3) * growth.powi(radius as i32 - 1) * jf / 8.0;
    let theta_core = c.eps1 * stats.u_j * m / (60.0 * stats.d);
    let slack_r1 = b.powi(2 * r1 as i32 - 1) * base / 1e-4;
    let slack_radius = b.powi(2 * radius as i32 - 1) * base / (rfrak / 10.0);
    if c.r0 > r1_exact.min(radius_exact - r1_exact) {
        reasons.push(format!("R0 = {} > min(R1, R - R1) = {}", c.r0, r1_exact.min(radius_exact - r1_exact)));
    }
    if theta_core * m < 100.0 {
        reasons.push(format!("theta M = {} < 100", theta_core * m));
    }
    Ok(ParameterChoice {
        j,
        eps2,
        feasible: reasons.is_empty(),
        reasons,
        solved: Some(Solved { r1_exact, rfrak, radius_exact, r1, radius, m, theta_core, slack_r1, slack_radius }),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub j: usize,
    pub auto_params: bool,
    #[serde(rename = "R")]
    pub radius: usize,
    pub rfrak: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// core threshold s; default max(1, ⌈θM/20⌉)
    pub core_threshold: Option<usize>,
    pub alpha: f64,
    pub constants: Constants,
    /// thinning level for finite-support laws; default μ(j)/10
    pub u_j: Option<f64>,
    #[serde(skip, default = "default_mode")]
    pub verify: VerifyMode,
    pub budget: u64,
    pub seed: u64,
}

fn default_mode() -> VerifyMode {
    VerifyMode::Sampled(DEFAULT_SAMPLES)
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            j: 8,
            auto_params: false,
            radius: 1,
            rfrak: 1.0,
            m: 4,
            core_threshold: None,
            alpha: 0.05,
            constants: Constants::default(),
            u_j: None,
            verify: default_mode(),
            budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplorationSummary {
    pub balls: usize,
    pub fraction_full: f64,
    pub mean_intersections: f64,
    pub covered: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub certificate: ExpanderCertificate,
    pub truncation: TruncationReport,
    pub w_size: usize,
    pub exploration: ExplorationSummary,
    pub quotient_nodes: usize,
    pub core: CoreReport,
    pub choice: Option<ParameterChoice>,
    /// (2j)^R
    pub degree_bound: f64,
}

/// μ[j, 2j]
pub fn u_j(mu: &DegreeDistribution, j: usize) -> f64 {
    (j..=2 * j).map(|k| mu.p(k)).sum()
}

/// Truncate, select W, explore, contract, peel, and certify the centres of
/// the core at radius 2R+1 on the original graph.
pub fn run_pipeline(g: &HalfEdgeGraph, mu: &DegreeDistribution, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let finite = mu.tail_class() == TailClass::FiniteSupport;
    let (j, trunc, w, uj) = if finite {
        let j = mu.max_k();
        let uj = cfg.u_j.unwrap_or(mu.p(j) / 10.0).min(mu.p(j));
        let trunc = truncate_degrees(g, j)?;
        let mut rng = derive_stream(cfg.seed, "expander-thin", 0);
        let q = if mu.p(j) > 0.0 { uj / mu.p(j) } else { 0.0 };
        let w: Vec<usize> = (0..trunc.graph.n()).filter(|&v| trunc.graph.degree(v) == j && rng.uniform() < q).collect();
        (j, trunc, w, uj)
    } else {
        let j = cfg.j;
        let trunc = truncate_degrees(g, j)?;
        let lo = j.div_ceil(2);
        let w: Vec<usize> = (0..trunc.graph.n()).filter(|&v| (lo..=2 * j).contains(&trunc.graph.degree(v))).collect();
        (j, trunc, w, u_j(mu, j))
    };
    let (radius, rfrak, m, choice) = if cfg.auto_params {
        let stats = MuStats { b_bar: trunc.report.b_bar, d: mu.mean(), u_j: uj };
        let c = choose_parameters(&stats, j, &cfg.constants)?;
        if !c.feasible {
            return Err(Error::InvalidParameter(format!("infeasible parameters: {}", c.reasons.join("; "))));
        }
        let s = c.solved.clone().unwrap();
        (s.radius, s.rfrak, (s.m.ceil() as usize).max(1), Some(c))
    } else {
        (cfg.radius, cfg.rfrak, cfg.m, None)
    };
    let r_cap = (100.0 * rfrak).floor() as usize;
    let ex = explore_balls(&trunc.graph, &w, radius, r_cap);
    let q = build_quotient(&trunc.graph, &ex, &mut derive_stream(cfg.seed, "expander-quotient", 0))?;
    let core = blue_core(&q, m, cfg.core_threshold, &mut derive_stream(cfg.seed, "expander-core", 0))?;
    let mut w0: Vec<usize> = core.core.iter().map(|&x| trunc.old_ids[q.vertex_of_node[x]]).collect();
    w0.sort_unstable();
    let params = PipelineParams { j, radius, rfrak, r_cap, m, theta_core: core.theta, s: core.s, u_j: uj, thinned: finite };
    let ball_radius = 2 * radius + 1;
    let mut certificate = if w0.is_empty() {
        ExpanderCertificate {
            w0: Vec::new(),
            alpha: cfg.alpha,
            radius: ball_radius,
            mode: cfg.verify.to_string(),
            proof: false,
            outcome: Outcome::RefutedEmpty,
            witness: None,
            checked: 0,
            violations: 0,
            params: None,
            graph_hash: g.hash(),
        }
    } else {
        verify_expander(g, &w0, cfg.alpha, ball_radius, cfg.verify, cfg.budget, cfg.seed)?
    };
    certificate.params = Some(params);
    let covered = ex.claims.iter().filter(|c| !c.is_empty()).count();
    let k = ex.centers.len();
    Ok(PipelineReport {
        certificate,
        truncation: trunc.report,
        w_size: k,
        exploration: ExplorationSummary {
            balls: k,
            fraction_full: ex.fraction_full(),
            mean_intersections: if k == 0 { 0.0 } else { ex.intersections.iter().map(|x| x.len()).sum::<usize>() as f64 / k as f64 },
            covered,
        },
        quotient_nodes: q.graph.n(),
        core,
        choice,
        degree_bound: (2.0 * j as f64).powi(radius as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{complete, configuration_model, star};

    #[test]
    fn truncation_examples() {
        let t = truncate_degrees(&star(5), 2).unwrap();
        assert_eq!(t.graph.n(), 5);
        assert_eq!(t.graph.edge_count(), 0);
        let k = complete(4);
        let t = truncate_degrees(&k, 2).unwrap();
        assert_eq!(t.graph, k);
        assert_eq!(t.report.b_bar, branching_rate(&k.degrees()));
        assert!(matches!(truncate_degrees(&star(5), 0), Err(Error::InvalidParameter(_))));
        let single = HalfEdgeGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(matches!(truncate_degrees(&single, 1), Err(Error::EmptyTruncation)));
    }

    #[test]
    fn single_and_adjacent_balls_reach_radius() {
        let g = crate::graphgen::path(10);
        let ex = explore_balls(&g, &[5], 3, 100);
        assert_eq!(ex.radii, vec![3]);
        assert_eq!(ex.members[0].len(), 7);
        let ex = explore_balls(&g, &[4, 5], 3, 100);
        assert_eq!(ex.radii, vec![3, 3]);
        assert_eq!(ex.intersections[0], vec![1]);
    }

    #[test]
    fn quotient_trivial_cases() {
        let g = complete(5);
        let ex = explore_balls(&g, &[], 2, 100);
        let q = build_quotient(&g, &ex, &mut derive_stream(1, "q", 0)).unwrap();
        assert_eq!(q.graph, g);
        let ex = explore_balls(&g, &[0], 2, 100);
        let q = build_quotient(&g, &ex, &mut derive_stream(1, "q", 0)).unwrap();
        // radius one already covers K5; the remaining edges become loops
        assert_eq!(q.graph.n(), 1);
        let ex = explore_balls(&g, &[0], 3, 100);
        assert!(ex.expanded.iter().all(|&e| e));
        let q = build_quotient(&g, &ex, &mut derive_stream(1, "q", 0)).unwrap();
        assert_eq!((q.graph.n(), q.graph.degree(0)), (1, 0));
    }

    #[test]
    fn core_trivial_cases() {
        let edges = complete(6).edges();
        assert_eq!(peel_core(6, &edges, 5, &mut derive_stream(2, "p", 0)).len(), 6);
        assert!(peel_core(6, &edges, 6, &mut derive_stream(2, "p", 0)).is_empty());
    }

    #[test]
    fn certificate_examples() {
        let k6 = complete(6);
        let all: Vec<usize> = (0..6).collect();
        let c = verify_expander(&k6, &all, 1.0 / 3.0, 1, VerifyMode::Exhaustive, DEFAULT_BUDGET, 0).unwrap();
        assert_eq!(c.outcome, Outcome::Verified);
        assert_eq!(c.checked, 6 + 15);
        let g = configuration_model(30, &DegreeDistribution::poisson(3.0).unwrap(), &mut derive_stream(3, "g", 0)).unwrap();
        let c = verify_expander(&g, &[7], 1.0, 2, VerifyMode::Exhaustive, DEFAULT_BUDGET, 0).unwrap();
        assert_eq!(c.outcome, Outcome::Refuted);
        assert_eq!(c.witness, Some(vec![7]));
        assert!(c.recheck(&g));
    }

    #[test]
    fn parameter_examples() {
        let c = Constants::default();
        let p = choose_parameters(&MuStats { b_bar: 2.0, d: 3.0, u_j: 0.0 }, 16, &c).unwrap();
        assert!(!p.feasible && p.solved.is_none());
        assert!(matches!(choose_parameters(&MuStats { b_bar: 1.0, d: 3.0, u_j: 0.1 }, 16, &c), Err(Error::Subcritical(_))));
        let a = choose_parameters(&MuStats { b_bar: 2.0, d: 3.0, u_j: 1e-3 }, 16, &c).unwrap().solved.unwrap();
        let b = choose_parameters(&MuStats { b_bar: 2.0, d: 3.0, u_j: 1e-5 }, 16, &c).unwrap().solved.unwrap();
        assert!(b.r1_exact > a.r1_exact);
        // the defining equality holds before rounding
        let lhs = 2f64.powf(2.0 * a.r1_exact - 1.0) * 256.0 * 1e-3 / 3.0;
        assert!((lhs / 1e-4 - 1.0).abs() < 1e-12);
    }
}
