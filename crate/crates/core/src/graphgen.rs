//! Graph generators: configuration model, cut-off line matching, GW trees,
//! GWC and EGW graphs, Erdős–Rényi, plus small deterministic shapes.

use std::collections::VecDeque;

use serde::Serialize;

use crate::distributions::DegreeDistribution;
use crate::error::{Error, Result};
use crate::graph::{HalfEdgeGraph, RootedTree};
use crate::rng::{shuffle, Stream};

pub const DEFAULT_NODE_CAP: usize = 10_000_000;
const MAX_REJECTIONS: usize = 1_000_000;

/// Degrees i.i.d. from `mu` conditioned on an even sum, then a uniform matching.
pub fn configuration_model(n: usize, mu: &DegreeDistribution, rng: &mut Stream) -> Result<HalfEdgeGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("configuration model needs n >= 2".into()));
    }
    let mut degrees = Vec::new();
    let mut ok = false;
    for _ in 0..MAX_REJECTIONS {
        degrees = mu.sample(n, rng);
        if degrees.iter().sum::<usize>() % 2 == 0 {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::EvenSumInfeasible);
    }
    shuffle_pairing(&degrees, rng)
}

/// Uniform perfect matching of the half-edges of `degrees` by shuffling.
pub fn shuffle_pairing(degrees: &[usize], rng: &mut Stream) -> Result<HalfEdgeGraph> {
    let h: usize = degrees.iter().sum();
    if !h.is_multiple_of(2) {
        return Err(Error::InvalidParameter("odd total degree".into()));
    }
    let mut perm: Vec<usize> = (0..h).collect();
    shuffle(&mut perm, rng);
    let mut mate = vec![0; h];
    for pair in perm.chunks_exact(2) {
        mate[pair[0]] = pair[1];
        mate[pair[1]] = pair[0];
    }
    HalfEdgeGraph::from_matching(degrees, mate)
}

/// What a selection rule may look at: which half-edges are still unmatched.
/// Heights are deliberately not exposed.
pub struct Unmatched<'a> {
    matched: &'a [bool],
    remaining: usize,
}

impl Unmatched<'_> {
    pub fn is_unmatched(&self, h: usize) -> bool {
        !self.matched[h]
    }
    pub fn remaining(&self) -> usize {
        self.remaining
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.matched.len()).filter(|&h| !self.matched[h])
    }
    pub fn lowest(&self) -> Option<usize> {
        self.iter().next()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffStep {
    pub selected: usize,
    pub matched_to: usize,
    pub line: f64,
}

#[derive(Clone, Debug)]
pub struct CutoffResult {
    pub graph: HalfEdgeGraph,
    pub heights: Vec<f64>,
    pub final_line: f64,
    pub trace: Vec<CutoffStep>,
}

/// Incremental matcher behind [`cutoff_line_match`]: every half-edge holds a
/// uniform height; matching a selected half-edge pairs it with the highest
/// unmatched one and lowers the line to that height.
pub struct CutoffLine {
    heights: Vec<f64>,
    order: Vec<usize>,
    top: usize,
    matched: Vec<bool>,
    mate: Vec<usize>,
    remaining: usize,
    line: f64,
}

impl CutoffLine {
    pub fn new(h: usize, rng: &mut Stream) -> Self {
        let heights: Vec<f64> = (0..h).map(|_| rng.uniform()).collect();
        let mut order: Vec<usize> = (0..h).collect();
        order.sort_by(|&a, &b| heights[b].partial_cmp(&heights[a]).unwrap());
        CutoffLine { heights, order, top: 0, matched: vec![false; h], mate: vec![usize::MAX; h], remaining: h, line: 1.0 }
    }

    pub fn view(&self) -> Unmatched<'_> {
        Unmatched { matched: &self.matched, remaining: self.remaining }
    }

    pub fn is_unmatched(&self, h: usize) -> bool {
        !self.matched[h]
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn line(&self) -> f64 {
        self.line
    }

    /// Match `h` with the highest other unmatched half-edge.
    pub fn match_selected(&mut self, h: usize) -> Result<CutoffStep> {
        if h >= self.matched.len() || self.matched[h] {
            return Err(Error::AlreadyMatched(h));
        }
        if self.remaining < 2 {
            return Err(Error::InvalidParameter("no partner left".into()));
        }
        while self.matched[self.order[self.top]] {
            self.top += 1;
        }
        let mut i = self.top;
        while self.matched[self.order[i]] || self.order[i] == h {
            i += 1;
        }
        let partner = self.order[i];
        self.matched[h] = true;
        self.matched[partner] = true;
        self.mate[h] = partner;
        self.mate[partner] = h;
        self.remaining -= 2;
        self.line = self.heights[partner];
        Ok(CutoffStep { selected: h, matched_to: partner, line: self.line })
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f64>, f64) {
        (self.mate, self.heights, self.line)
    }
}

/// Uniform matching through the cut-off line procedure, with `select` choosing
/// which unmatched half-edge goes next.
pub fn cutoff_line_match<F>(degrees: &[usize], mut select: F, rng: &mut Stream) -> Result<CutoffResult>
where
    F: FnMut(&Unmatched<'_>) -> usize,
{
    let h: usize = degrees.iter().sum();
    if !h.is_multiple_of(2) {
        return Err(Error::InvalidParameter("odd total degree".into()));
    }
    let mut cl = CutoffLine::new(h, rng);
    let mut trace = Vec::with_capacity(h / 2);
    while cl.remaining() > 0 {
        let s = select(&cl.view());
        trace.push(cl.match_selected(s)?);
    }
    let (mate, heights, line) = cl.into_parts();
    let graph = HalfEdgeGraph::from_matching(degrees, mate)?;
    Ok(CutoffResult { graph, heights, final_line: line, trace })
}

/// Generate a GW tree as a parent array, breadth first.
fn gw_parents(
    offspring: &DegreeDistribution,
    root_law: &DegreeDistribution,
    depth: usize,
    cap: usize,
    rng: &mut Stream,
) -> Result<(Vec<Option<usize>>, Vec<usize>)> {
    let mut parents = vec![None];
    let mut level = vec![0usize];
    let mut frontier = VecDeque::from([0usize]);
    while let Some(v) = frontier.pop_front() {
        if level[v] >= depth {
            continue;
        }
        let k = if v == 0 { root_law.draw(rng) } else { offspring.draw(rng) };
        if parents.len() + k > cap {
            return Err(Error::NodeCap(cap));
        }
        for _ in 0..k {
            let c = parents.len();
            parents.push(Some(v));
            level.push(level[v] + 1);
            frontier.push_back(c);
        }
    }
    Ok((parents, level))
}

/// GW(root_law, offspring) truncated at depth `depth`.
pub fn gw_tree(offspring: &DegreeDistribution, root_law: &DegreeDistribution, depth: usize, rng: &mut Stream) -> Result<RootedTree> {
    gw_tree_capped(offspring, root_law, depth, DEFAULT_NODE_CAP, rng)
}

pub fn gw_tree_capped(
    offspring: &DegreeDistribution,
    root_law: &DegreeDistribution,
    depth: usize,
    cap: usize,
    rng: &mut Stream,
) -> Result<RootedTree> {
    let (parents, _) = gw_parents(offspring, root_law, depth, cap, rng)?;
    let mut t = RootedTree::from_parents(&parents)?;
    t.depth_cap = depth;
    Ok(t)
}

/// Append a GW(offspring) tree of depth `depth` hanging from existing vertex `at`.
fn hang_tree(
    edges: &mut Vec<(usize, usize)>,
    n: &mut usize,
    at: usize,
    offspring: &DegreeDistribution,
    depth: usize,
    rng: &mut Stream,
) -> Result<()> {
    let (parents, _) = gw_parents(offspring, offspring, depth, DEFAULT_NODE_CAP.saturating_sub(*n), rng)?;
    let base = *n;
    // vertex 0 of the tree is `at`
    let id = |v: usize| if v == 0 { at } else { base + v - 1 };
    for (v, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            edges.push((id(*p), id(v)));
        }
    }
    *n += parents.len() - 1;
    Ok(())
}

/// Attach a cycle of length `s` through `at` with GW trees on the new cycle vertices.
fn attach_gwc(
    edges: &mut Vec<(usize, usize)>,
    n: &mut usize,
    at: usize,
    offspring: &DegreeDistribution,
    s: usize,
    depth: usize,
    rng: &mut Stream,
) -> Result<()> {
    let first = *n;
    *n += s - 1;
    let cyc: Vec<usize> = std::iter::once(at).chain(first..first + s - 1).collect();
    if s == 2 {
        edges.push((at, first));
        edges.push((at, first));
    } else {
        for i in 0..s {
            edges.push((cyc[i], cyc[(i + 1) % s]));
        }
    }
    for &c in &cyc[1..] {
        hang_tree(edges, n, c, offspring, depth, rng)?;
    }
    Ok(())
}

/// A cycle of length `s` through the root (vertex 0), each other cycle vertex
/// carrying an independent GW(offspring) tree of depth `depth`. For `s = 2` the
/// cycle is a double edge.
pub fn gwc(offspring: &DegreeDistribution, s: usize, depth: usize, rng: &mut Stream) -> Result<HalfEdgeGraph> {
    if s < 2 {
        return Err(Error::InvalidParameter(format!("cycle length {s} < 2")));
    }
    let mut edges = Vec::new();
    let mut n = 1;
    attach_gwc(&mut edges, &mut n, 0, offspring, s, depth, rng)?;
    Ok(HalfEdgeGraph::from_edges(n, &edges)?.with_root(0))
}

/// GW(root_law, offspring) of depth `depth` conditioned to reach depth `l`, with
/// a GWC(offspring; s) of depth `depth - l` attached at every depth-`l` vertex.
pub fn egw(
    root_law: &DegreeDistribution,
    offspring: &DegreeDistribution,
    l: usize,
    s: usize,
    depth: usize,
    rng: &mut Stream,
) -> Result<HalfEdgeGraph> {
    if l > depth {
        return Err(Error::InvalidParameter(format!("l = {l} exceeds depth {depth}")));
    }
    if s < 2 {
        return Err(Error::InvalidParameter(format!("cycle length {s} < 2")));
    }
    for _ in 0..MAX_REJECTIONS {
        let (parents, level) = gw_parents(offspring, root_law, depth, DEFAULT_NODE_CAP, rng)?;
        let hits: Vec<usize> = (0..parents.len()).filter(|&v| level[v] == l).collect();
        if hits.is_empty() {
            continue;
        }
        let mut edges: Vec<(usize, usize)> =
            parents.iter().enumerate().filter_map(|(v, p)| p.map(|p| (p, v))).collect();
        let mut n = parents.len();
        for v in hits {
            attach_gwc(&mut edges, &mut n, v, offspring, s, depth - l, rng)?;
        }
        return Ok(HalfEdgeGraph::from_edges(n, &edges)?.with_root(0));
    }
    Err(Error::SurvivalInfeasible)
}

/// G(n, p) with p = min(d/n, 1), by geometric skipping over the pair sequence.
pub fn erdos_renyi(n: usize, d: f64, rng: &mut Stream) -> Result<HalfEdgeGraph> {
    if n < 2 || !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("erdos_renyi n={n} d={d}")));
    }
    let p = (d / n as f64).min(1.0);
    let mut edges = Vec::new();
    if p >= 1.0 {
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
    } else if p > 0.0 {
        let lq = (1.0 - p).ln();
        let (mut v, mut w): (i64, i64) = (1, -1);
        let n = n as i64;
        while v < n {
            let skip = (rng.uniform().ln() / lq).floor() as i64;
            w += 1 + skip;
            while w >= v && v < n {
                w -= v;
                v += 1;
            }
            if v < n {
                edges.push((w as usize, v as usize));
            }
        }
    }
    HalfEdgeGraph::from_edges(n, &edges)
}

pub fn path(len: usize) -> HalfEdgeGraph {
    let e: Vec<(usize, usize)> = (0..len).map(|i| (i, i + 1)).collect();
    HalfEdgeGraph::from_edges(len + 1, &e).unwrap()
}

/// K_{1,d} with centre 0.
pub fn star(d: usize) -> HalfEdgeGraph {
    let e: Vec<(usize, usize)> = (1..=d).map(|i| (0, i)).collect();
    HalfEdgeGraph::from_edges(d + 1, &e).unwrap()
}

pub fn complete(n: usize) -> HalfEdgeGraph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            e.push((u, v));
        }
    }
    HalfEdgeGraph::from_edges(n, &e).unwrap()
}

#[derive(Clone, Debug, Serialize)]
pub struct Neighborhood {
    pub center: usize,
    pub radius: usize,
    /// ball vertices in BFS order
    pub vertices: Vec<usize>,
    pub dist: Vec<usize>,
    pub edge_count: usize,
    /// half-edges of ball vertices whose mate lies outside the ball
    pub boundary: Vec<usize>,
    /// edges - vertices + components (the ball is connected)
    pub tree_excess: i64,
}

/// The ball N(v, r) as an induced subgraph.
pub fn neighborhood(g: &HalfEdgeGraph, v: usize, r: usize) -> Neighborhood {
    let mut dist_map = std::collections::HashMap::new();
    dist_map.insert(v, 0usize);
    let mut order = vec![v];
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        let du = dist_map[&u];
        i += 1;
        if du == r {
            continue;
        }
        for w in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist_map.entry(w) {
                e.insert(du + 1);
                order.push(w);
            }
        }
    }
    let mut inner_half = 0;
    let mut boundary = Vec::new();
    for &u in &order {
        for h in g.half_edges(u) {
            if dist_map.contains_key(&g.target(h)) {
                inner_half += 1;
            } else {
                boundary.push(h);
            }
        }
    }
    let edge_count = inner_half / 2;
    let dist = order.iter().map(|u| dist_map[u]).collect();
    Neighborhood {
        center: v,
        radius: r,
        tree_excess: edge_count as i64 - order.len() as i64 + 1,
        vertices: order,
        dist,
        edge_count,
        boundary,
    }
}

/// All unlabelled rooted trees on exactly `n` vertices, as parent arrays with
/// the root at index 0.
pub fn all_rooted_trees(n: usize) -> Vec<Vec<Option<usize>>> {
    // trees[k] lists canonical child-lists: each tree is a nonincreasing
    // sequence of (size, index) pairs for its root's subtrees
    let mut trees: Vec<Vec<Vec<(usize, usize)>>> = vec![Vec::new(); n + 1];
    if n == 0 {
        return Vec::new();
    }
    trees[1].push(Vec::new());
    for size in 2..=n {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        forests(size - 1, (size - 1, usize::MAX), &trees, &mut cur, &mut out);
        trees[size] = out;
    }
    trees[n].iter().map(|kids| to_parents(kids, &trees)).collect()
}

fn forests(
    remaining: usize,
    bound: (usize, usize),
    trees: &[Vec<Vec<(usize, usize)>>],
    cur: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if remaining == 0 {
        out.push(cur.clone());
        return;
    }
    for size in (1..=remaining.min(bound.0)).rev() {
        let top = if size == bound.0 { bound.1.min(trees[size].len().saturating_sub(1)) } else { trees[size].len() - 1 };
        if trees[size].is_empty() {
            continue;
        }
        for idx in (0..=top).rev() {
            cur.push((size, idx));
            forests(remaining - size, (size, idx), trees, cur, out);
            cur.pop();
        }
    }
}

fn to_parents(kids: &[(usize, usize)], trees: &[Vec<Vec<(usize, usize)>>]) -> Vec<Option<usize>> {
    let mut parents = vec![None];
    let mut stack: Vec<(usize, (usize, usize))> = kids.iter().map(|&k| (0, k)).collect();
    while let Some((p, (size, idx))) = stack.pop() {
        let v = parents.len();
        parents.push(Some(p));
        for &k in &trees[size][idx] {
            stack.push((v, k));
        }
    }
    parents
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn forced_single_edge() {
        let g = configuration_model(2, &DegreeDistribution::point(1), &mut derive_stream(7, "g", 0)).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn odd_point_mass_is_infeasible() {
        let r = configuration_model(3, &DegreeDistribution::point(1), &mut derive_stream(7, "g", 0));
        assert!(matches!(r, Err(Error::EvenSumInfeasible)));
    }

    #[test]
    fn cycle_of_degree_two() {
        for i in 0..20 {
            let g = configuration_model(3, &DegreeDistribution::point(2), &mut derive_stream(7, "g", i)).unwrap();
            assert_eq!(g.edge_count(), 3);
        }
    }

    #[test]
    fn rooted_tree_counts() {
        let want = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719];
        for (i, &w) in want.iter().enumerate() {
            let ts = all_rooted_trees(i + 1);
            assert_eq!(ts.len(), w, "n={}", i + 1);
            for t in &ts {
                RootedTree::from_parents(t).unwrap();
            }
        }
    }

    #[test]
    fn gw_shapes() {
        let mut rng = derive_stream(1, "t", 0);
        let two = DegreeDistribution::point(2);
        assert_eq!(gw_tree(&two, &two, 0, &mut rng).unwrap().n(), 1);
        assert_eq!(gw_tree(&two, &two, 3, &mut rng).unwrap().n(), 15);
        let one = DegreeDistribution::point(1);
        assert_eq!(gwc(&one, 4, 2, &mut rng).unwrap().n(), 10);
        let zero = DegreeDistribution::point(0);
        let tri = gwc(&zero, 3, 5, &mut rng).unwrap();
        assert_eq!((tri.n(), tri.edge_count()), (3, 3));
        let dbl = gwc(&zero, 2, 5, &mut rng).unwrap();
        assert_eq!(dbl.edges(), vec![(0, 1), (0, 1)]);
        assert!(gwc(&zero, 1, 5, &mut rng).is_err());
    }

    #[test]
    fn egw_deterministic_shape() {
        let one = DegreeDistribution::point(1);
        let g = egw(&one, &one, 2, 3, 4, &mut derive_stream(3, "e", 0)).unwrap();
        assert_eq!(g.n(), 11);
        assert_eq!(g.edge_count(), 11);
        let nb = neighborhood(&g, 0, 10);
        assert_eq!(nb.tree_excess, 1);
        // the depth-2 vertex carries the cycle
        let d = g.depth().unwrap();
        let v2 = (0..g.n()).find(|&v| d[v] == 2 && g.degree(v) == 4).unwrap();
        assert_eq!(g.neighbors(v2).filter(|&w| d[w] == 3).count(), 3);
    }

    #[test]
    fn er_extremes() {
        let mut rng = derive_stream(1, "er", 0);
        assert_eq!(erdos_renyi(10, 0.0, &mut rng).unwrap().edge_count(), 0);
        assert_eq!(erdos_renyi(6, 6.0, &mut rng).unwrap().edge_count(), 15);
    }

    #[test]
    fn triangle_ball() {
        let g = HalfEdgeGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let nb = neighborhood(&g, 0, 1);
        assert_eq!(nb.vertices.len(), 3);
        assert_eq!(nb.tree_excess, 1);
        assert_eq!(neighborhood(&g, 0, 0).vertices, vec![0]);
    }

    #[test]
    fn cutoff_two_half_edges() {
        let r = cutoff_line_match(&[1, 1], |u| u.lowest().unwrap(), &mut derive_stream(1, "c", 0)).unwrap();
        assert_eq!(r.graph.edges(), vec![(0, 1)]);
        assert_eq!(r.final_line, r.heights[1]);
    }

    #[test]
    fn cutoff_rejects_matched_selection() {
        let r = cutoff_line_match(&[2, 2], |_| 0, &mut derive_stream(1, "c", 0));
        assert!(matches!(r, Err(Error::AlreadyMatched(0))));
    }
}
