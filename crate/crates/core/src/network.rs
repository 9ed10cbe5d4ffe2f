//! Network block variables and the confidence structures that generate them.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{param, Error, Result};

/// Structural flags a [`NetworkMatrix`] is validated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NetworkFlags {
    pub symmetric: bool,
    pub binary: bool,
    pub self_loops: bool,
}

impl NetworkFlags {
    pub const fn new(symmetric: bool, binary: bool, self_loops: bool) -> Self {
        Self {
            symmetric,
            binary,
            self_loops,
        }
    }
}

/// An `n x n` weight matrix with entries in `[0, 1]`.
///
/// `entries[(i, j)] > 0` means agent `i` listens to agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMatrix {
    entries: DMatrix<f64>,
    flags: NetworkFlags,
}

impl NetworkMatrix {
    pub fn new(entries: DMatrix<f64>, flags: NetworkFlags) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", n, entries.ncols()),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidNetwork(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
                if flags.binary && v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidNetwork(format!("entry ({i}, {j}) = {v} is not binary")));
                }
                if flags.symmetric && v != entries[(j, i)] {
                    return Err(Error::InvalidNetwork(format!("entry ({i}, {j}) differs from ({j}, {i})")));
                }
            }
            if !flags.self_loops && entries[(i, i)] != 0.0 {
                return Err(Error::InvalidNetwork(format!("self-loop at {i} but self_loops is off")));
            }
        }
        Ok(Self { entries, flags })
    }

    pub fn from_fn(n: usize, flags: NetworkFlags, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f), flags)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
            flags: NetworkFlags::new(true, true, false),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            flags: NetworkFlags::new(true, true, true),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn flags(&self) -> NetworkFlags {
        self.flags
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n()).map(move |j| self.entries[(i, j)])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries.row(i).sum()
    }

    /// Off-diagonal pairs `i < j` with a nonzero entry in either direction.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.entries[(i, j)] != 0.0 || self.entries[(j, i)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Weak connectivity of the off-diagonal support.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n <= 1 {
            return true;
        }
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(n);
        for (i, j) in self.undirected_edges() {
            uf.union(i, j);
        }
        let root = uf.find(0);
        (1..n).all(|i| uf.find(i) == root)
    }
}

/// Undirected graph restricting which pairs may ever communicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl RestrictionGraph {
    /// Edges are unordered; `(i, j)` and `(j, i)` name the same edge and
    /// listing both is rejected as a duplicate.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(param("restriction", format!("edge ({a}, {b}) references a node >= {n}")));
            }
            if a == b {
                return Err(param("restriction", format!("self edge ({a}, {a})")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(param("restriction", format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self { n, edges: set })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Confidence-bound structure of a bounded-confidence model.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceSpec {
    /// One bound `eps > 0` for every pair.
    Homogeneous(f64),
    /// Per-pair bounds; the matrix is symmetric with positive off-diagonal
    /// entries (the diagonal is ignored).
    EdgeHeterogeneous(DMatrix<f64>),
    /// 0-1 model rescaled to bound 1: agents in `stubborn` have bound 0 and
    /// never move, everyone else moves with bound 1.
    NodeBinary(ZeroOneSets),
}

/// Partition `[n] = S0 ∪ S1` for the 0-1 model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroOneSets {
    stubborn: Vec<usize>,
    moving: Vec<usize>,
}

impl ZeroOneSets {
    pub fn new(n: usize, stubborn: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut flag = vec![false; n];
        for i in stubborn {
            if i >= n {
                return Err(param("stubborn", format!("agent {i} out of range for n = {n}")));
            }
            if std::mem::replace(&mut flag[i], true) {
                return Err(param("stubborn", format!("agent {i} listed twice")));
            }
        }
        let stubborn = (0..n).filter(|&i| flag[i]).collect();
        let moving = (0..n).filter(|&i| !flag[i]).collect();
        Ok(Self { stubborn, moving })
    }

    pub fn n(&self) -> usize {
        self.stubborn.len() + self.moving.len()
    }

    /// `S0`, sorted.
    pub fn stubborn(&self) -> &[usize] {
        &self.stubborn
    }

    /// `S1`, sorted.
    pub fn moving(&self) -> &[usize] {
        &self.moving
    }

    pub fn is_stubborn(&self, i: usize) -> bool {
        self.stubborn.binary_search(&i).is_ok()
    }
}

impl ConfidenceSpec {
    pub fn edge_heterogeneous(bounds: DMatrix<f64>) -> Result<Self> {
        let n = bounds.nrows();
        if bounds.ncols() != n {
            return Err(param("eps_pairs", "bound matrix must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let e = bounds[(i, j)];
                if !(e > 0.0) || !e.is_finite() {
                    return Err(param("eps_pairs", format!("bound for pair ({i}, {j}) must be positive, got {e}")));
                }
                if e != bounds[(j, i)] {
                    return Err(param("eps_pairs", format!("bound for ({i}, {j}) differs from ({j}, {i})")));
                }
            }
        }
        Ok(Self::EdgeHeterogeneous(bounds))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Homogeneous(e) if !(*e > 0.0) || !e.is_finite() => {
                Err(param("eps", format!("confidence bound must be positive, got {e}")))
            }
            Self::Homogeneous(_) => Ok(()),
            Self::EdgeHeterogeneous(m) if m.nrows() != n => Err(param(
                "eps_pairs",
                format!("bound matrix is {}x{}, expected {n}x{n}", m.nrows(), m.ncols()),
            )),
            Self::EdgeHeterogeneous(m) => Self::edge_heterogeneous(m.clone()).map(|_| ()),
            Self::NodeBinary(s) if s.n() != n => {
                Err(param("stubborn", format!("partition covers {} agents, expected {n}", s.n())))
            }
            Self::NodeBinary(_) => Ok(()),
        }
    }

    /// Bound used for the pair `(i, j)` when building the symmetric network.
    pub fn bound(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Homogeneous(e) => *e,
            Self::EdgeHeterogeneous(m) => m[(i, j)],
            Self::NodeBinary(_) => 1.0,
        }
    }

    /// The common bound when every pair shares one.
    pub fn uniform_bound(&self) -> Option<f64> {
        match self {
            Self::Homogeneous(e) => Some(*e),
            Self::EdgeHeterogeneous(m) => {
                let n = m.nrows();
                let mut first = None;
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        match first {
                            None => first = Some(m[(i, j)]),
                            Some(f) if f != m[(i, j)] => return None,
                            _ => {}
                        }
                    }
                }
                first
            }
            Self::NodeBinary(_) => Some(1.0),
        }
    }
}
