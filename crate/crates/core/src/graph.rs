//! Half-edge multigraphs.
//!
//! Half-edges are numbered contiguously per vertex; `mate` is a fixed-point-free
//! involution. Loops and parallel edges are allowed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

const MAGIC: u64 = u64::from_le_bytes(*b"CONTAGN1");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfEdgeGraph {
    offsets: Vec<usize>,
    mate: Vec<usize>,
    owner: Vec<usize>,
    root: Option<usize>,
    depth: Option<Vec<usize>>,
}

impl HalfEdgeGraph {
    /// Build from per-vertex degrees and a matching on `0..sum(degrees)`.
    pub fn from_matching(degrees: &[usize], mate: Vec<usize>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        offsets.push(0);
        for &d in degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let h = *offsets.last().unwrap();
        if mate.len() != h {
            return Err(Error::InvalidGraph(format!("matching has {} entries for {h} half-edges", mate.len())));
        }
        let mut owner = vec![0; h];
        for v in 0..degrees.len() {
            for x in offsets[v]..offsets[v + 1] {
                owner[x] = v;
            }
        }
        let g = HalfEdgeGraph { offsets, mate, owner, root: None, depth: None };
        g.check()?;
        Ok(g)
    }

    /// Build from an undirected edge list; each edge takes the next free
    /// half-edge at both endpoints (a loop takes two at the same vertex).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={n}")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut next = Vec::with_capacity(n);
        let mut acc = 0;
        for &d in &deg {
            next.push(acc);
            acc += d;
        }
        let mut mate = vec![0; acc];
        for &(u, v) in edges {
            let a = next[u];
            next[u] += 1;
            let b = next[v];
            next[v] += 1;
            mate[a] = b;
            mate[b] = a;
        }
        Self::from_matching(&deg, mate)
    }

    /// Structural invariants: involution without fixed points, even total.
    pub fn check(&self) -> Result<()> {
        let h = self.mate.len();
        if !h.is_multiple_of(2) {
            return Err(Error::InvalidGraph("odd number of half-edges".into()));
        }
        for (x, &y) in self.mate.iter().enumerate() {
            if y >= h || y == x || self.mate[y] != x {
                return Err(Error::InvalidGraph(format!("matching is not an involution at {x}")));
            }
        }
        if let (Some(r), Some(d)) = (self.root, &self.depth) {
            if *d != self.bfs(r) {
                return Err(Error::InvalidGraph("stale depth array".into()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }
    pub fn half_edge_count(&self) -> usize {
        self.mate.len()
    }
    pub fn edge_count(&self) -> usize {
        self.mate.len() / 2
    }
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }
    pub fn half_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }
    pub fn mate(&self, h: usize) -> usize {
        self.mate[h]
    }
    pub fn matching(&self) -> &[usize] {
        &self.mate
    }
    pub fn owner(&self, h: usize) -> usize {
        self.owner[h]
    }
    /// Vertex at the other end of half-edge `h`.
    #[inline]
    pub fn target(&self, h: usize) -> usize {
        self.owner[self.mate[h]]
    }
    /// Neighbour multiset of `v` (a loop lists `v` twice).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.half_edges(v).map(move |h| self.target(h))
    }
    /// Each matched pair once, as `(owner(h), owner(mate h))` with `h < mate h`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.mate.len()).filter(|&h| h < self.mate[h]).map(|h| (self.owner[h], self.target(h))).collect()
    }
    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }
    pub fn root(&self) -> Option<usize> {
        self.root
    }
    pub fn depth(&self) -> Option<&[usize]> {
        self.depth.as_deref()
    }

    /// Set the root and compute BFS depths (unreachable vertices get `usize::MAX`).
    pub fn set_root(&mut self, r: usize) {
        self.depth = Some(self.bfs(r));
        self.root = Some(r);
    }

    pub fn with_root(mut self, r: usize) -> Self {
        self.set_root(r);
        self
    }

    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for w in self.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n()];
        let mut c = 0;
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            c += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for w in self.neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        c
    }

    /// Vertex subgraph keeping only edges with both ends in `keep`.
    /// Returns the graph and the old id of each new vertex.
    pub fn induced(&self, keep: &[bool]) -> (HalfEdgeGraph, Vec<usize>) {
        let mut new_id = vec![usize::MAX; self.n()];
        let mut old = Vec::new();
        for v in 0..self.n() {
            if keep[v] {
                new_id[v] = old.len();
                old.push(v);
            }
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .filter(|&(u, v)| keep[u] && keep[v])
            .map(|(u, v)| (new_id[u], new_id[v]))
            .collect();
        (HalfEdgeGraph::from_edges(old.len(), &edges).expect("induced subgraph"), old)
    }

    /// Disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &HalfEdgeGraph) -> HalfEdgeGraph {
        let n = self.n();
        let mut e = self.edges();
        e.extend(other.edges().into_iter().map(|(u, v)| (u + n, v + n)));
        HalfEdgeGraph::from_edges(n + other.n(), &e).expect("union")
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n={}", self.n())?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n=") {
                    n = Some(v.trim().parse().map_err(|_| Error::Parse(format!("header {t}")))?);
                }
                continue;
            }
            let mut it = t.split_whitespace();
            let mut num = || -> Result<usize> {
                it.next().and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse(format!("edge line {t}")))
            };
            edges.push((num()?, num()?));
        }
        let n = n.ok_or_else(|| Error::Parse("missing '# n=' header".into()))?;
        Self::from_edges(n, &edges)
    }

    /// Binary form: magic, n, degrees, matching; all u64 little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (2 + self.n() + self.mate.len()));
        out.extend_from_slice(&MAGIC.to_le_bytes());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for v in 0..self.n() {
            out.extend_from_slice(&(self.degree(v) as u64).to_le_bytes());
        }
        for &m in &self.mate {
            out.extend_from_slice(&(m as u64).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut words = bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap()));
        if !bytes.len().is_multiple_of(8) || words.next() != Some(MAGIC) {
            return Err(Error::Parse("not a binary graph file".into()));
        }
        let n = words.next().ok_or_else(|| Error::Parse("truncated header".into()))? as usize;
        let deg: Vec<usize> = words.by_ref().take(n).map(|x| x as usize).collect();
        if deg.len() != n {
            return Err(Error::Parse("truncated degree array".into()));
        }
        let mate: Vec<usize> = words.map(|x| x as usize).collect();
        Self::from_matching(&deg, mate)
    }

    /// Load either format, sniffing the magic number.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() >= 8 && bytes[..8] == MAGIC.to_le_bytes() {
            Self::from_bytes(&bytes)
        } else {
            Self::read_edge_list(std::io::Cursor::new(bytes))
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        if path.extension().map(|e| e == "bin").unwrap_or(false) {
            std::fs::write(path, self.to_bytes())?;
        } else {
            let f = std::io::BufWriter::new(std::fs::File::create(path)?);
            self.write_edge_list(f)?;
        }
        Ok(())
    }

    /// SHA-256 of the binary encoding, hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

/// A tree with root `root` and, optionally, a super-root attached above it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootedTree {
    pub graph: HalfEdgeGraph,
    pub root: usize,
    pub super_root: Option<usize>,
    pub depth_cap: usize,
}

impl RootedTree {
    /// Tree from a parent array (`parent[root] == None`).
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let root = parents.iter().position(|p| p.is_none()).ok_or_else(|| Error::InvalidGraph("no root".into()))?;
        let edges: Vec<(usize, usize)> = parents.iter().enumerate().filter_map(|(v, p)| p.map(|p| (p, v))).collect();
        if edges.len() + 1 != parents.len() {
            return Err(Error::InvalidGraph("more than one root".into()));
        }
        let g = HalfEdgeGraph::from_edges(parents.len(), &edges)?.with_root(root);
        if g.depth().unwrap().contains(&usize::MAX) {
            return Err(Error::InvalidGraph("parent array is not a tree".into()));
        }
        let cap = *g.depth().unwrap().iter().max().unwrap();
        Ok(RootedTree { graph: g, root, super_root: None, depth_cap: cap })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Children of `v` (neighbours one level deeper).
    pub fn children(&self, v: usize) -> Vec<usize> {
        let d = self.graph.depth().expect("rooted");
        self.graph.neighbors(v).filter(|&w| d[w] == d[v] + 1).collect()
    }

    pub fn height(&self) -> usize {
        self.graph.depth().unwrap().iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }

    /// Add a super-root joined to the root by `multiplicity` parallel edges;
    /// depths are then measured from the super-root.
    pub fn with_super_root(&self, multiplicity: usize) -> RootedTree {
        assert!(self.super_root.is_none(), "super-root already present");
        let n = self.n();
        let mut e = self.graph.edges();
        for _ in 0..multiplicity {
            e.push((n, self.root));
        }
        let g = HalfEdgeGraph::from_edges(n + 1, &e).unwrap().with_root(n);
        RootedTree { graph: g, root: self.root, super_root: Some(n), depth_cap: self.depth_cap + 1 }
    }

    /// The subtree below `v`, with `v` mapped to vertex 0.
    pub fn subtree(&self, v: usize) -> (RootedTree, Vec<usize>) {
        let mut keep = vec![false; self.n()];
        let mut stack = vec![v];
        keep[v] = true;
        while let Some(u) = stack.pop() {
            for c in self.children(u) {
                keep[c] = true;
                stack.push(c);
            }
        }
        let (g, old) = self.graph.induced(&keep);
        let r = old.iter().position(|&x| x == v).unwrap();
        let g = g.with_root(r);
        let cap = self.depth_cap.saturating_sub(self.graph.depth().unwrap()[v]);
        (RootedTree { graph: g, root: r, super_root: None, depth_cap: cap }, old)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_roundtrip_keeps_loops() {
        let g = HalfEdgeGraph::from_edges(3, &[(0, 1), (1, 1), (1, 2), (1, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 5, 2]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let h = HalfEdgeGraph::read_edge_list(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(g, h);
        let b = HalfEdgeGraph::from_bytes(&g.to_bytes()).unwrap();
        assert_eq!(g, b);
        assert_eq!(g.hash(), b.hash());
    }

    #[test]
    fn bad_matching_rejected() {
        assert!(HalfEdgeGraph::from_matching(&[1, 1], vec![0, 1]).is_err());
        assert!(HalfEdgeGraph::from_matching(&[1, 1], vec![1, 0]).is_ok());
    }

    #[test]
    fn super_root_depths() {
        let t = RootedTree::from_parents(&[None, Some(0), Some(1)]).unwrap();
        let s = t.with_super_root(1);
        assert_eq!(s.graph.depth().unwrap(), &[1, 2, 3, 0]);
        assert_eq!(s.graph.degree(3), 1);
        let (sub, old) = t.subtree(1);
        assert_eq!(sub.n(), 2);
        assert_eq!(old[sub.root], 1);
    }
}
