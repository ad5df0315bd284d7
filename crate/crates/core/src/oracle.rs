//! Exact computations for small contact-process chains.
//!
//! States are bitmasks over the non-permanent vertices. Generators are built
//! on the class reachable from the requested start states.

use std::collections::VecDeque;

use rustc_hash::FxHashMap as HashMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Rules, Variant};
use crate::error::{Error, Result};
use crate::graph::{HalfEdgeGraph, RootedTree};
use crate::linalg::{solve, Csr};

pub const MAX_FREE: usize = 24;
pub const STATIONARY_TOL: f64 = 1e-10;
pub const RECURSION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ChainSpec {
    graph: HalfEdgeGraph,
    rules: Rules,
    lambda: f64,
    free: Vec<usize>,
    bit_of: Vec<Option<usize>>,
    depth: Vec<usize>,
    perm_depth: usize,
    /// infecting neighbours of each free vertex: (free bit, multiplicity)
    nbr: Vec<Vec<(usize, f64)>>,
    /// half-edges from permanent vertices into each free vertex
    perm_in: Vec<f64>,
    suppressed_bit: Option<usize>,
    ignored_bit: Option<usize>,
}

/// Generator on an explored class.
#[derive(Clone, Debug)]
pub struct Space {
    pub states: Vec<u32>,
    pub index: HashMap<u32, usize>,
    /// off-diagonal rates per row
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Space {
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    /// Largest |row sum| of the full generator (off-diagonals plus diagonal).
    pub fn max_row_sum(&self) -> f64 {
        (0..self.states.len())
            .map(|i| {
                let q = self.exit_rate(i);
                let s: f64 = self.rows[i].iter().map(|e| e.1).sum::<f64>() - q;
                s.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States of this class from which some state in `target` is reachable.
    fn can_reach(&self, target: &[bool]) -> Vec<bool> {
        let n = self.states.len();
        let mut rev = vec![Vec::new(); n];
        for i in 0..n {
            for &(j, _) in &self.rows[i] {
                rev[j].push(i);
            }
        }
        let mut ok = target.to_vec();
        let mut q: VecDeque<usize> = (0..n).filter(|&i| target[i]).collect();
        while let Some(j) = q.pop_front() {
            for &i in &rev[j] {
                if !ok[i] {
                    ok[i] = true;
                    q.push_back(i);
                }
            }
        }
        ok
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stationary {
    pub states: Vec<u32>,
    pub pi: Vec<f64>,
    pub residual: f64,
    #[serde(skip)]
    index: HashMap<u32, usize>,
}

impl Stationary {
    pub fn prob(&self, x: u32) -> f64 {
        self.index.get(&x).map(|&i| self.pi[i]).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Hitting {
    pub space: Space,
    pub h: Vec<f64>,
    pub residual: f64,
}

impl Hitting {
    pub fn at(&self, x: u32) -> Option<f64> {
        self.space.index.get(&x).map(|&i| self.h[i])
    }
}

impl ChainSpec {
    pub fn new(g: &HalfEdgeGraph, rules: Rules, lambda: f64) -> Result<Self> {
        rules.validate(g)?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda {lambda}")));
        }
        let n = g.n();
        let mut is_perm = vec![false; n];
        for &p in &rules.permanent {
            is_perm[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&v| !is_perm[v]).collect();
        if free.len() > MAX_FREE {
            return Err(Error::StateCap(free.len()));
        }
        let mut bit_of = vec![None; n];
        for (i, &v) in free.iter().enumerate() {
            bit_of[v] = Some(i);
        }
        let depth = match rules.depths(g) {
            Some(d) => d.into_iter().map(|x| if x == usize::MAX { n } else { x }).collect(),
            None => vec![0; n],
        };
        let perm_depth = rules.permanent.iter().map(|&p| depth[p]).max().unwrap_or(0);
        let mut nbr = vec![Vec::new(); free.len()];
        let mut perm_in = vec![0.0; free.len()];
        for (i, &u) in free.iter().enumerate() {
            let mut m: Vec<(usize, f64)> = Vec::new();
            for w in g.neighbors(u) {
                if w == u {
                    continue;
                }
                match bit_of[w] {
                    Some(j) => match m.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += 1.0,
                        None => m.push((j, 1.0)),
                    },
                    None => perm_in[i] += 1.0,
                }
            }
            nbr[i] = m;
        }
        let suppressed_bit = rules.suppressed.and_then(|v| bit_of[v]);
        let ignored_bit = rules.ignore_recovery.and_then(|v| bit_of[v]);
        Ok(ChainSpec { graph: g.clone(), rules, lambda, free, bit_of, depth, perm_depth, nbr, perm_in, suppressed_bit, ignored_bit })
    }

    pub fn from_variant(g: &HalfEdgeGraph, variant: &Variant, lambda: f64) -> Result<Self> {
        Self::new(g, variant.rules(g)?, lambda)
    }

    pub fn graph(&self) -> &HalfEdgeGraph {
        &self.graph
    }
    pub fn rules(&self) -> &Rules {
        &self.rules
    }
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Bitmask of the free vertices in `vs` (permanent ones are ignored).
    pub fn state_of(&self, vs: &[usize]) -> u32 {
        vs.iter().filter_map(|&v| self.bit_of.get(v).copied().flatten()).fold(0u32, |x, b| x | (1 << b))
    }

    pub fn vertices_of(&self, x: u32) -> Vec<usize> {
        (0..self.free.len()).filter(|&b| x >> b & 1 == 1).map(|b| self.free[b]).collect()
    }

    /// r(x): largest depth over the infected set including permanent vertices.
    pub fn r(&self, x: u32) -> usize {
        let mut r = self.perm_depth;
        for b in 0..self.free.len() {
            if x >> b & 1 == 1 {
                r = r.max(self.depth[self.free[b]]);
            }
        }
        r
    }

    /// Off-diagonal transitions out of `x`.
    pub fn transitions(&self, x: u32) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        let scale = match self.rules.theta {
            Some(t) => t.powi(self.r(x) as i32),
            None => 1.0,
        };
        for b in 0..self.free.len() {
            let bit = 1u32 << b;
            if x & bit != 0 {
                let blocked = self.ignored_bit == Some(b) || (self.suppressed_bit == Some(b) && x != bit);
                if !blocked {
                    out.push((x & !bit, scale));
                }
            } else {
                let mut k = self.perm_in[b];
                for &(j, m) in &self.nbr[b] {
                    if x >> j & 1 == 1 {
                        k += m;
                    }
                }
                if k > 0.0 && self.lambda > 0.0 {
                    out.push((x | bit, self.lambda * k * scale));
                }
            }
        }
        out
    }

    /// Explore the class reachable from `starts`.
    pub fn explore(&self, starts: &[u32]) -> Space {
        let mut index = HashMap::default();
        let mut states = Vec::new();
        let mut q = VecDeque::new();
        for &s in starts {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(s) {
                e.insert(states.len());
                states.push(s);
                q.push_back(s);
            }
        }
        let mut raw = Vec::new();
        while let Some(x) = q.pop_front() {
            let tr = self.transitions(x);
            for &(y, _) in &tr {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(y) {
                    e.insert(states.len());
                    states.push(y);
                    q.push_back(y);
                }
            }
            raw.push(tr);
        }
        let rows = raw.into_iter().map(|tr| tr.into_iter().map(|(y, r)| (index[&y], r)).collect()).collect();
        Space { states, index, rows }
    }

    /// Expected hitting times of `target` from every state reachable from `starts`.
    pub fn hitting_times(&self, starts: &[u32], target: &[u32]) -> Result<Hitting> {
        let space = self.explore(starts);
        let n = space.len();
        let is_t: Vec<bool> = space.states.iter().map(|s| target.contains(s)).collect();
        let reach = space.can_reach(&is_t);
        if reach.iter().any(|&r| !r) {
            return Err(Error::Unreachable);
        }
        let mut local = vec![usize::MAX; n];
        let mut m = 0;
        for i in 0..n {
            if !is_t[i] {
                local[i] = m;
                m += 1;
            }
        }
        let mut rows = vec![Vec::new(); m];
        for i in 0..n {
            if is_t[i] {
                continue;
            }
            let li = local[i];
            rows[li].push((li, space.exit_rate(i)));
            for &(j, r) in &space.rows[i] {
                if !is_t[j] {
                    rows[li].push((local[j], -r));
                }
            }
        }
        let a = Csr::from_rows(rows);
        let (x, res) = solve(&a, &vec![1.0; m])?;
        if res > STATIONARY_TOL {
            return Err(Error::Solver(format!("hitting-time residual {res:e}")));
        }
        let h = (0..n).map(|i| if is_t[i] { 0.0 } else { x[local[i]] }).collect();
        Ok(Hitting { space, h, residual: res })
    }

    pub fn hitting_time(&self, start: u32, target: &[u32]) -> Result<f64> {
        let h = self.hitting_times(&[start], target)?;
        Ok(h.at(start).unwrap())
    }

    /// Stationary law on the class of the empty state.
    pub fn stationary(&self) -> Result<Stationary> {
        let space = self.explore(&[0]);
        let n = space.len();
        if space.exit_rate(0) == 0.0 {
            return Err(Error::Absorbing);
        }
        let mut is_z = vec![false; n];
        is_z[0] = true;
        if space.can_reach(&is_z).iter().any(|&r| !r) {
            return Err(Error::Solver("class of the empty state is not closed".into()));
        }
        // w = pi / pi(0) solves (-Q restricted)^T w = Q(0, .)
        let mut rows = vec![Vec::new(); n - 1];
        let mut rhs = vec![0.0; n - 1];
        for i in 1..n {
            rows[i - 1].push((i - 1, space.exit_rate(i)));
        }
        for i in 0..n {
            for &(j, r) in &space.rows[i] {
                if j == 0 {
                    continue;
                }
                if i == 0 {
                    rhs[j - 1] += r;
                } else {
                    rows[j - 1].push((i - 1, -r));
                }
            }
        }
        let (w, _) = solve(&Csr::from_rows(rows), &rhs)?;
        let p0 = 1.0 / (1.0 + w.iter().sum::<f64>());
        let mut pi = vec![p0];
        pi.extend(w.iter().map(|x| x * p0));
        // residual of pi Q = 0
        let mut flow = vec![0.0; n];
        for i in 0..n {
            let q = space.exit_rate(i);
            flow[i] -= pi[i] * q;
            for &(j, r) in &space.rows[i] {
                flow[j] += pi[i] * r;
            }
        }
        let residual = flow.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if residual > STATIONARY_TOL {
            return Err(Error::Solver(format!("stationary residual {residual:e}")));
        }
        Ok(Stationary { states: space.states, pi, residual, index: space.index })
    }

    /// Exit rate from the empty state and sum_y Q(0,y) h(y) with h the
    /// expected time to return to the empty state.
    pub fn renewal_terms(&self) -> Result<(f64, f64)> {
        let space = self.explore(&[0]);
        let q0 = space.exit_rate(0);
        let outs: Vec<u32> = space.rows[0].iter().map(|&(j, _)| space.states[j]).collect();
        let h = self.hitting_times(&outs, &[0])?;
        let s: f64 = space.rows[0].iter().map(|&(j, r)| r * h.at(space.states[j]).unwrap()).sum();
        Ok((q0, s))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub pass: bool,
}

impl Check {
    pub fn equal(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let e = (lhs - rhs).abs();
        Check { name: name.into(), lhs, rhs, abs_error: e, pass: e <= tol }
    }

    /// lhs <= rhs
    pub fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        let e = (lhs - rhs).max(0.0);
        Check { name: name.into(), lhs, rhs, abs_error: e, pass: lhs <= rhs + 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub identity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    fn from_checks(identity: &str, checks: Vec<Check>) -> Self {
        let first = checks.first().cloned().unwrap_or(Check::equal("empty", 0.0, 0.0, 0.0));
        Report {
            identity: identity.into(),
            lhs: first.lhs,
            rhs: first.rhs,
            abs_error: checks.iter().map(|c| c.abs_error).fold(0.0, f64::max),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

fn root_added(tree: &RootedTree) -> Rules {
    Rules { permanent: vec![tree.super_root.unwrap()], depth_source: tree.super_root, ..Rules::default() }
}

fn delayed(mut r: Rules, theta: f64) -> Rules {
    r.theta = Some(theta);
    r
}

/// The recursion: hitting time of the modified (root-suppressed) chain equals
/// 1 + λ Σ_i E[product-chain return from 1_{v_i}] equals Π_i (1 + λ E S_{L-1}(T_{v_i})).
pub fn verify_recursion_tree(tree: &RootedTree, lambda: f64) -> Result<Report> {
    if tree.super_root.is_some() {
        return Err(Error::InvalidParameter("pass the tree without its super-root".into()));
    }
    let kids = tree.children(tree.root);
    if kids.is_empty() {
        return Err(Error::InvalidParameter("tree depth must be at least 1".into()));
    }
    if tree.n() > MAX_FREE {
        return Err(Error::StateCap(tree.n()));
    }
    let plus = tree.with_super_root(1);
    let sr = plus.super_root.unwrap();
    let modified = ChainSpec::new(
        &plus.graph,
        Rules { permanent: vec![sr], suppressed: Some(tree.root), depth_source: Some(sr), ..Rules::default() },
        lambda,
    )?;
    let lhs = modified.hitting_time(modified.state_of(&[tree.root]), &[0])?;

    let product = ChainSpec::new(&tree.graph, Rules { permanent: vec![tree.root], ..Rules::default() }, lambda)?;
    let starts: Vec<u32> = kids.iter().map(|&v| product.state_of(&[v])).collect();
    let h = product.hitting_times(&starts, &[0])?;
    let mid = 1.0 + lambda * starts.iter().map(|&s| h.at(s).unwrap()).sum::<f64>();

    let mut rhs = 1.0;
    for &v in &kids {
        let (sub, _) = tree.subtree(v);
        let sub = sub.with_super_root(1);
        let c = ChainSpec::new(&sub.graph, root_added(&sub), lambda)?;
        rhs *= 1.0 + lambda * c.hitting_time(c.state_of(&[sub.root]), &[0])?;
    }
    Ok(Report::from_checks(
        "recursion",
        vec![
            Check::equal("modified hitting time = subtree product", lhs, rhs, RECURSION_TOL),
            Check::equal("modified hitting time = 1 + lambda D E[product return]", lhs, mid, RECURSION_TOL),
        ],
    ))
}

/// Instances accepted by [`verify_stationary_identities`].
#[derive(Clone, Debug)]
pub enum Instance {
    /// a tree; a super-root is added above its root
    Tree(RootedTree),
    /// a cycle of length `s` through `root` with trees hanging off it
    Gwc { graph: HalfEdgeGraph, s: usize },
    /// a tree-like graph with cycles; a super-root is added above its root
    Egw { graph: HalfEdgeGraph },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub kind: String,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
    #[serde(default)]
    pub s: Option<usize>,
}

impl Instance {
    pub fn from_file(f: &InstanceFile) -> Result<Self> {
        let g = HalfEdgeGraph::from_edges(f.n, &f.edges)?.with_root(f.root);
        match f.kind.as_str() {
            "tree" => {
                if f.edges.len() + 1 != f.n || g.depth().unwrap().contains(&usize::MAX) {
                    return Err(Error::InvalidGraph("tree instance is not a tree".into()));
                }
                let d = g.depth().unwrap();
                let parents: Vec<Option<usize>> = (0..f.n)
                    .map(|v| if v == f.root { None } else { g.neighbors(v).find(|&w| d[w] + 1 == d[v]) })
                    .collect();
                Ok(Instance::Tree(RootedTree::from_parents(&parents)?))
            }
            "gwc" => Ok(Instance::Gwc { graph: g, s: f.s.ok_or_else(|| Error::Parse("gwc instance needs s".into()))? }),
            "egw" => Ok(Instance::Egw { graph: g }),
            k => Err(Error::Parse(format!("unknown instance kind {k}"))),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&f)
    }
}

fn renewal_check(name: &str, spec: &ChainSpec, pi0: f64) -> Result<Check> {
    let (_, s) = spec.renewal_terms()?;
    Ok(Check::equal(name, pi0, 1.0 / (1.0 + s), STATIONARY_TOL))
}

/// max_x |ν(x) − θ^{−r(x)}π(x) / Σ_y θ^{−r(y)}π(y)|
pub fn reweighting_error(undelayed: &ChainSpec, pi: &Stationary, nu: &Stationary, theta: f64) -> f64 {
    let w: Vec<f64> = pi.states.iter().zip(&pi.pi).map(|(&x, &p)| theta.powi(-(undelayed.r(x) as i32)) * p).collect();
    let z: f64 = w.iter().sum();
    let mut err = 0.0f64;
    for (i, &x) in pi.states.iter().enumerate() {
        err = err.max((w[i] / z - nu.prob(x)).abs());
    }
    for &x in &nu.states {
        if !pi.index.contains_key(&x) {
            err = err.max(nu.prob(x));
        }
    }
    err
}

fn delayed_checks(checks: &mut Vec<Check>, label: &str, spec: &ChainSpec, pi: &Stationary, theta: f64) -> Result<Stationary> {
    let d = ChainSpec::new(spec.graph(), delayed(spec.rules().clone(), theta), spec.lambda)?;
    let nu = d.stationary()?;
    checks.push(Check::equal(&format!("{label}: delayed reweighting"), reweighting_error(spec, pi, &nu, theta), 0.0, STATIONARY_TOL));
    checks.push(renewal_check(&format!("{label}: delayed renewal"), &d, nu.prob(0))?);
    Ok(nu)
}

/// Cycle vertices of a unicyclic graph (its 2-core).
fn two_core(g: &HalfEdgeGraph) -> Vec<bool> {
    let mut deg = g.degrees();
    let mut alive = vec![true; g.n()];
    let mut q: Vec<usize> = (0..g.n()).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = q.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for w in g.neighbors(v) {
            if alive[w] {
                deg[w] -= 1;
                if deg[w] == 1 {
                    q.push(w);
                }
            }
        }
    }
    alive
}

/// Renewal, exit-rate, product and delayed identities for one instance.
pub fn verify_stationary_identities(inst: &Instance, lambda: f64, theta: f64) -> Result<Report> {
    let mut checks = Vec::new();
    match inst {
        Instance::Tree(t) => {
            let plus = t.with_super_root(1);
            let ra = ChainSpec::new(&plus.graph, root_added(&plus), lambda)?;
            let pi = ra.stationary()?;
            let (q0, _) = ra.renewal_terms()?;
            checks.push(renewal_check("root-added renewal", &ra, pi.prob(0))?);
            checks.push(Check::equal("root-added exit rate = lambda", q0, lambda, 1e-12));
            delayed_checks(&mut checks, "root-added", &ra, &pi, theta)?;

            let kids = t.children(t.root);
            if !kids.is_empty() {
                let prod = ChainSpec::new(&t.graph, Rules { permanent: vec![t.root], depth_source: Some(t.root), ..Rules::default() }, lambda)?;
                let pd = prod.stationary()?;
                let (q0, _) = prod.renewal_terms()?;
                checks.push(renewal_check("product renewal", &prod, pd.prob(0))?);
                checks.push(Check::equal("product exit rate = lambda D", q0, lambda * kids.len() as f64, 1e-12));
                // factorisation over the subtrees
                let mut subs = Vec::new();
                for &v in &kids {
                    let (sub, old) = t.subtree(v);
                    let sub = sub.with_super_root(1);
                    let spec = ChainSpec::new(&sub.graph, root_added(&sub), lambda)?;
                    let st = spec.stationary()?;
                    subs.push((sub, old, spec, st));
                }
                let mut err = 0.0f64;
                for (k, &x) in pd.states.iter().enumerate() {
                    let inf = prod.vertices_of(x);
                    let mut p = 1.0;
                    for (_, old, spec, st) in &subs {
                        let local: Vec<usize> = inf.iter().filter_map(|v| old.iter().position(|o| o == v)).collect();
                        p *= st.prob(spec.state_of(&local));
                    }
                    err = err.max((p - pd.pi[k]).abs());
                }
                checks.push(Check::equal("product factorisation", err, 0.0, STATIONARY_TOL));
                // product of delayed subtree chains against the joint delayed chain
                let joint = ChainSpec::new(&t.graph, delayed(prod.rules().clone(), theta), lambda)?.stationary()?;
                let mut nu_prod = 1.0;
                for (_, _, spec, _) in &subs {
                    nu_prod *= ChainSpec::new(spec.graph(), delayed(spec.rules().clone(), theta), lambda)?.stationary()?.prob(0);
                }
                checks.push(Check::at_most("delayed product <= joint at empty state", nu_prod, joint.prob(0)));
            }
        }
        Instance::Gwc { graph, s } => {
            let rho = graph.root().ok_or_else(|| Error::InvalidGraph("gwc instance needs a root".into()))?;
            let base = Rules { permanent: vec![rho], depth_source: Some(rho), ..Rules::default() };
            let spec = ChainSpec::new(graph, base, lambda)?;
            let pi = spec.stationary()?;
            let (q0, _) = spec.renewal_terms()?;
            checks.push(renewal_check("cycle renewal", &spec, pi.prob(0))?);
            checks.push(Check::equal("cycle exit rate = 2 lambda", q0, 2.0 * lambda, 1e-12));
            delayed_checks(&mut checks, "cycle", &spec, &pi, theta)?;
            if *s >= 3 {
                let core = two_core(graph);
                let v = graph.neighbors(rho).filter(|&w| core[w]).min().ok_or_else(|| Error::InvalidGraph("root not on a cycle".into()))?;
                let d = graph.degree(v) - 2;
                let both = Rules { permanent: vec![rho, v], depth_source: Some(rho), ..Rules::default() };
                let bspec = ChainSpec::new(graph, both.clone(), lambda)?;
                let bpi = bspec.stationary()?;
                let (q0, _) = bspec.renewal_terms()?;
                checks.push(renewal_check("both-fixed renewal", &bspec, bpi.prob(0))?);
                checks.push(Check::equal("both-fixed exit rate = (D+2) lambda", q0, (d + 2) as f64 * lambda, 1e-12));
                let bd = ChainSpec::new(graph, delayed(both.clone(), theta), lambda)?;
                let (q0d, _) = bd.renewal_terms()?;
                checks.push(Check::equal("delayed both-fixed exit rate = (D+2) lambda theta", q0d, (d + 2) as f64 * lambda * theta, 1e-12));
                delayed_checks(&mut checks, "both-fixed", &bspec, &bpi, theta)?;
                // S': drop the trees hanging off v
                let mut keep = vec![true; graph.n()];
                for w in graph.neighbors(v) {
                    if !core[w] {
                        let mut stack = vec![w];
                        keep[w] = false;
                        while let Some(u) = stack.pop() {
                            for x in graph.neighbors(u) {
                                if keep[x] && x != v {
                                    keep[x] = false;
                                    stack.push(x);
                                }
                            }
                        }
                    }
                }
                let (sp, old) = graph.induced(&keep);
                let nr = old.iter().position(|&o| o == rho).unwrap();
                let nv = old.iter().position(|&o| o == v).unwrap();
                let sp = sp.with_root(nr);
                let sspec = ChainSpec::new(&sp, Rules { permanent: vec![nr, nv], depth_source: Some(nr), ..Rules::default() }, lambda)?;
                let spi = sspec.stationary()?;
                let (q0, _) = sspec.renewal_terms()?;
                checks.push(renewal_check("reduced cycle renewal", &sspec, spi.prob(0))?);
                checks.push(Check::equal("reduced cycle exit rate = 2 lambda", q0, 2.0 * lambda, 1e-12));
            }
        }
        Instance::Egw { graph } => {
            let rho = graph.root().ok_or_else(|| Error::InvalidGraph("egw instance needs a root".into()))?;
            let n = graph.n();
            let mut e = graph.edges();
            e.push((n, rho));
            let plus = HalfEdgeGraph::from_edges(n + 1, &e)?.with_root(n);
            let spec = ChainSpec::new(&plus, Rules { permanent: vec![n], depth_source: Some(n), ..Rules::default() }, lambda)?;
            let pi = spec.stationary()?;
            let (q0, _) = spec.renewal_terms()?;
            checks.push(renewal_check("root-added renewal", &spec, pi.prob(0))?);
            checks.push(Check::equal("root-added exit rate = lambda", q0, lambda, 1e-12));
            delayed_checks(&mut checks, "root-added", &spec, &pi, theta)?;
        }
    }
    Ok(Report::from_checks("stationary", checks))
}

/// Delayed-process checks only: reweighting and renewal on the root-added
/// chain of a tree or EGW instance, or the cycle chain of a GWC instance.
pub fn verify_delayed(inst: &Instance, lambda: f64, theta: f64) -> Result<Report> {
    let full = verify_stationary_identities(inst, lambda, theta)?;
    let checks = full.checks.into_iter().filter(|c| c.name.contains("delayed")).collect();
    Ok(Report::from_checks("delayed", checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unary(depth: usize) -> RootedTree {
        let parents: Vec<Option<usize>> = (0..=depth).map(|i| if i == 0 { None } else { Some(i - 1) }).collect();
        RootedTree::from_parents(&parents).unwrap()
    }

    #[test]
    fn lone_vertex_hitting() {
        let g = HalfEdgeGraph::from_edges(1, &[]).unwrap();
        let c = ChainSpec::new(&g, Rules::default(), 1.0).unwrap();
        assert!((c.hitting_time(1, &[0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(c.stationary(), Err(Error::Absorbing)));
    }

    #[test]
    fn depth_zero_root_added() {
        let t = unary(0).with_super_root(1);
        for &l in &[0.1, 0.7, 2.0] {
            let c = ChainSpec::new(&t.graph, root_added(&t), l).unwrap();
            let p = c.stationary().unwrap();
            assert!((p.prob(0) - 1.0 / (1.0 + l)).abs() < 1e-15);
            assert!((c.hitting_time(1, &[0]).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unreachable_target() {
        let g = HalfEdgeGraph::from_edges(2, &[(0, 1)]).unwrap();
        let c = ChainSpec::new(&g, Rules { permanent: vec![0], ..Rules::default() }, 0.0).unwrap();
        assert!(matches!(c.hitting_time(0, &[1]), Err(Error::Unreachable)));
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let t = unary(3).with_super_root(1);
        let c = ChainSpec::new(&t.graph, delayed(root_added(&t), 0.3), 0.4).unwrap();
        let s = c.explore(&[0]);
        assert!(s.max_row_sum() <= 1e-12);
        // delayed rates are theta^{r(x)} times the plain rates
        let plain = ChainSpec::new(&t.graph, root_added(&t), 0.4).unwrap();
        for &x in &s.states {
            let a = c.transitions(x);
            let b = plain.transitions(x);
            for (p, q) in a.iter().zip(&b) {
                assert_eq!(p.0, q.0);
                assert!((p.1 - 0.3f64.powi(c.r(x) as i32) * q.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unary_recursion_is_one_plus_lambda() {
        for &l in &[0.05, 0.3, 1.0] {
            let r = verify_recursion_tree(&unary(1), l).unwrap();
            assert!(r.pass);
            assert!((r.lhs - (1.0 + l)).abs() < 1e-12);
        }
    }

    #[test]
    fn double_edge_exit_rate() {
        let g = HalfEdgeGraph::from_edges(2, &[(0, 1), (0, 1)]).unwrap().with_root(0);
        let r = verify_stationary_identities(&Instance::Gwc { graph: g, s: 2 }, 0.4, 0.5).unwrap();
        assert!(r.pass, "{r:?}");
        let q = r.checks.iter().find(|c| c.name.contains("exit rate")).unwrap();
        assert!((q.lhs - 0.8).abs() < 1e-15);
    }
}

#[cfg(test)]
mod sweep_tests {
    use super::*;
    use crate::distributions::DegreeDistribution;
    use crate::graphgen::{all_rooted_trees, gwc};
    use crate::rng::derive_stream;

    #[test]
    fn recursion_on_small_trees() {
        for n in 2..=7 {
            for p in all_rooted_trees(n) {
                let t = RootedTree::from_parents(&p).unwrap();
                let r = verify_recursion_tree(&t, 0.35).unwrap();
                assert!(r.pass, "{p:?} {r:?}");
                let s = verify_stationary_identities(&Instance::Tree(t), 0.35, 0.4).unwrap();
                assert!(s.pass, "{p:?} {s:?}");
            }
        }
    }

    #[test]
    fn cycle_instances() {
        let mu = DegreeDistribution::poisson(0.6).unwrap();
        for s in 2..=5 {
            for i in 0..4 {
                let g = gwc(&mu, s, 2, &mut derive_stream(5, "gwc", (s * 10 + i) as u64)).unwrap();
                if g.n() > 14 {
                    continue;
                }
                let r = verify_stationary_identities(&Instance::Gwc { graph: g, s }, 0.5, 0.3).unwrap();
                assert!(r.pass, "{r:#?}");
            }
        }
    }
}
