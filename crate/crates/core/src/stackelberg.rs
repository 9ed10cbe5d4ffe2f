//! Leader-follower best-response dynamics.
//!
//! A leader picks a network `λ ∈ Λ`; each follower `i` then pays
//! `c_i = Σ_j λ_ij φ(x_i, x_j)` with the quadratic coupling
//! `φ(a, b) = ‖a − b‖² − ε²` (`ε = 0` when the game has no offset). Play
//! alternates: followers best-respond to `λ_t` against `x(t)`, then the leader
//! minimises the social cost `c(x, λ) = Σ_i c_i` at the new profile.
//!
//! The follower step minimises `ρ(x, y, λ) = Σ_{i,j} λ_ij φ(y_i, x_j)` over
//! `y`, and `ρ(x, x, λ) = c(x, λ)`.

use std::fmt;

use nalgebra::DMatrix;
use petgraph::algo::{ford_fulkerson, min_spanning_tree};
use petgraph::data::Element;
use petgraph::graph::{DiGraph, NodeIndex, UnGraph};
use rand::Rng;

use crate::error::{param, Error, Result};
use crate::linalg::weighted_average;
use crate::network::{NetworkFlags, NetworkMatrix};
use crate::profile::OpinionProfile;
use crate::rng::RngStream;
use crate::trajectory::{RunStatus, TrajectoryRecord};

/// Feasible leader actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeaderSet {
    /// Symmetric matrices in `[0,1]^{n×n}` with unit diagonal.
    BoxSymmetricSelfLoops { eps: f64 },
    /// Symmetric matrices in `[0,1]^{n×n}` whose every cut carries weight at
    /// least 1. The diagonal is unconstrained.
    ConnectivityPolytope,
    /// Row-stochastic matrices with zero diagonal. Descriptor only: no
    /// leader strategy is provided for it.
    RowStochasticNoSelf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    /// `ε` in `φ(a, b) = ‖a − b‖² − ε²`.
    pub offset_eps: f64,
    pub leader_set: LeaderSet,
    /// Common per-coordinate follower box `[low, high]`. `None` leaves the
    /// box implicit and inactive: averaging never leaves the convex hull.
    pub follower_box: Option<(f64, f64)>,
}

impl GameSpec {
    /// Threshold game: the leader's best response is the bounded-confidence
    /// neighbour graph.
    pub fn example1(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(param("eps", format!("must be positive, got {eps}")));
        }
        Ok(Self {
            n,
            offset_eps: eps,
            leader_set: LeaderSet::BoxSymmetricSelfLoops { eps },
            follower_box: None,
        })
    }

    /// Connectivity game: the leader must keep the followers connected.
    pub fn example2(n: usize) -> Self {
        Self {
            n,
            offset_eps: 0.0,
            leader_set: LeaderSet::ConnectivityPolytope,
            follower_box: None,
        }
    }

    pub fn with_box(mut self, low: f64, high: f64) -> Result<Self> {
        if !(low <= high) {
            return Err(param("follower_box", format!("need low <= high, got [{low}, {high}]")));
        }
        self.follower_box = Some((low, high));
        Ok(self)
    }

    /// `φ(a, b)` for row `i` of `a` and row `j` of `b`.
    fn coupling(&self, a: &OpinionProfile, i: usize, b: &OpinionProfile, j: usize) -> f64 {
        a.dist2_to(i, b, j) - self.offset_eps * self.offset_eps
    }

    /// Membership in Λ.
    pub fn check_leader(&self, net: &NetworkMatrix) -> Result<()> {
        if net.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} network", self.n),
                found: format!("{0}x{0}", net.n()),
            });
        }
        let n = self.n;
        let symmetric = || {
            for i in 0..n {
                for j in (i + 1)..n {
                    if net.get(i, j) != net.get(j, i) {
                        return Err(Error::ConstraintViolation(format!("λ[{i}][{j}] != λ[{j}][{i}]")));
                    }
                }
            }
            Ok(())
        };
        match self.leader_set {
            LeaderSet::BoxSymmetricSelfLoops { .. } => {
                symmetric()?;
                if let Some(i) = (0..n).find(|&i| net.get(i, i) != 1.0) {
                    return Err(Error::ConstraintViolation(format!("λ[{i}][{i}] must be 1")));
                }
                Ok(())
            }
            LeaderSet::ConnectivityPolytope => {
                symmetric()?;
                let cut = min_cut_weight(net);
                if cut < 1.0 - 1e-12 {
                    return Err(Error::ConstraintViolation(format!("a cut carries weight {cut} < 1")));
                }
                Ok(())
            }
            LeaderSet::RowStochasticNoSelf => {
                for i in 0..n {
                    if net.get(i, i) != 0.0 {
                        return Err(Error::ConstraintViolation(format!("self-loop at {i}")));
                    }
                    if (net.row_sum(i) - 1.0).abs() > 1e-12 {
                        return Err(Error::ConstraintViolation(format!("row {i} does not sum to 1")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Smallest total off-diagonal weight across a cut `(S, [n] \ S)`.
///
/// Binary networks reduce to a connectivity test; fractional ones take the
/// minimum of the max flows from agent 0 to every other agent.
pub fn min_cut_weight(net: &NetworkMatrix) -> f64 {
    let n = net.n();
    if n <= 1 {
        return f64::INFINITY;
    }
    let binary = net.entries().iter().all(|&v| v == 0.0 || v == 1.0);
    if binary && !net.is_connected() {
        return 0.0;
    }
    let mut g = DiGraph::<(), f64>::new();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && net.get(i, j) > 0.0 {
                g.add_edge(nodes[i], nodes[j], net.get(i, j));
            }
        }
    }
    (1..n).map(|t| ford_fulkerson(&g, nodes[0], nodes[t]).0).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderStrategy {
    /// `λ_ij = 1` iff `‖x_i − x_j‖² ≤ ε²`, unit diagonal.
    EdgeThreshold,
    /// Minimum spanning tree under weights `‖x_i − x_j‖²` plus self-loops.
    MstIntegral,
}

impl LeaderStrategy {
    pub fn default_for(g: &GameSpec) -> Option<Self> {
        match g.leader_set {
            LeaderSet::BoxSymmetricSelfLoops { .. } => Some(Self::EdgeThreshold),
            LeaderSet::ConnectivityPolytope => Some(Self::MstIntegral),
            LeaderSet::RowStochasticNoSelf => None,
        }
    }
}

impl fmt::Display for LeaderStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EdgeThreshold => "edge_threshold",
            Self::MstIntegral => "mst_integral",
        })
    }
}

fn check_profile(x: &OpinionProfile, g: &GameSpec) -> Result<()> {
    if x.n() != g.n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} followers", g.n),
            found: format!("{}", x.n()),
        });
    }
    Ok(())
}

/// `c(x, λ) = Σ_{i,j} λ_ij φ(x_i, x_j)` over ordered pairs.
pub fn social_cost(x: &OpinionProfile, net: &NetworkMatrix, g: &GameSpec) -> Result<f64> {
    check_profile(x, g)?;
    g.check_leader(net)?;
    Ok(rho(x, x, net, g))
}

/// `ρ(x, y, λ) = Σ_{i,j} λ_ij φ(y_i, x_j)`.
pub fn rho(x: &OpinionProfile, y: &OpinionProfile, net: &NetworkMatrix, g: &GameSpec) -> f64 {
    let n = x.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = net.get(i, j);
            if w != 0.0 {
                total += w * g.coupling(y, i, x, j);
            }
        }
    }
    total
}

/// `Z(x)`: `x'_i = Σ_j λ_ij x_j / Σ_j λ_ij`, clipped to the follower box.
/// Rows with no weight keep their position.
pub fn follower_best_response(x: &OpinionProfile, net: &NetworkMatrix, g: &GameSpec) -> Result<OpinionProfile> {
    check_profile(x, g)?;
    if net.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} network", x.n()),
            found: format!("{0}x{0}", net.n()),
        });
    }
    let y = weighted_average(x, net.entries());
    match g.follower_box {
        None => Ok(y),
        Some((lo, hi)) => OpinionProfile::new(y.into_matrix().map(|v| v.clamp(lo, hi))),
    }
}

/// The leader's minimiser of `c(x, ·)` over Λ.
pub fn leader_best_response(x: &OpinionProfile, g: &GameSpec, s: LeaderStrategy) -> Result<NetworkMatrix> {
    check_profile(x, g)?;
    let n = x.n();
    let flags = NetworkFlags::new(true, true, true);
    match (s, g.leader_set) {
        (LeaderStrategy::EdgeThreshold, LeaderSet::BoxSymmetricSelfLoops { eps }) => {
            NetworkMatrix::from_fn(n, flags, |i, j| if i == j || x.dist2(i, j) <= eps * eps { 1.0 } else { 0.0 })
        }
        (LeaderStrategy::MstIntegral, LeaderSet::ConnectivityPolytope) => {
            let mut m = DMatrix::identity(n, n);
            for (i, j) in mst_edges(x) {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
            NetworkMatrix::new(m, flags)
        }
        (s, set) => Err(Error::Precondition(format!("strategy {s} does not apply to leader set {set:?}"))),
    }
}

/// Minimum spanning tree of the complete graph under `‖x_i − x_j‖²`, as
/// sorted `(i, j)` with `i < j`. Equal weights are ordered by `(i, j)`.
pub fn mst_edges(x: &OpinionProfile) -> Vec<(usize, usize)> {
    let n = x.n();
    let mut g = UnGraph::<(), (f64, usize, usize)>::with_capacity(n, n * n.saturating_sub(1) / 2);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_edge(nodes[i], nodes[j], (x.dist2(i, j), i, j));
        }
    }
    let mut edges: Vec<(usize, usize)> = min_spanning_tree(&g)
        .filter_map(|e| match e {
            Element::Edge { source, target, .. } => Some((source.min(target), source.max(target))),
            Element::Node { .. } => None,
        })
        .collect();
    edges.sort_unstable();
    edges
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinSymmetricReport {
    pub ok: bool,
    pub trials: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// Largest `ρ(Z, Z) − ρ(x, Z)` seen.
    pub max_excess: f64,
}

/// Samples `x ∈ [−1, 1]^{n×d}` and checks `ρ(Z(x), Z(x), λ) ≤ ρ(x, Z(x), λ) + 1e−9`.
pub fn min_symmetric_check(
    g: &GameSpec,
    net: &NetworkMatrix,
    d: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<MinSymmetricReport> {
    let mut report = MinSymmetricReport {
        ok: true,
        trials,
        violations: 0,
        first_violation: None,
        max_excess: f64::NEG_INFINITY,
    };
    for k in 0..trials {
        let x = OpinionProfile::new(DMatrix::from_fn(g.n, d, |_, _| rng.gen_range(-1.0..=1.0)))?;
        let z = follower_best_response(&x, net, g)?;
        let excess = rho(&z, &z, net, g) - rho(&x, &z, net, g);
        report.max_excess = report.max_excess.max(excess);
        if excess > 1e-9 {
            report.ok = false;
            report.violations += 1;
            report.first_violation.get_or_insert(k);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergStep {
    pub t: usize,
    pub state: OpinionProfile,
    pub leader: NetworkMatrix,
    /// `c(x(t), λ_t)`.
    pub cost: f64,
}

/// The three terms of `c(x(t+1), λ_t) ≤ ρ(x(t), x(t+1), λ_t) ≤ c(x(t), λ_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostChain {
    pub next_cost_same_leader: f64,
    pub rho: f64,
    pub cost: f64,
}

impl CostChain {
    pub fn holds(&self, tol: f64) -> bool {
        self.next_cost_same_leader <= self.rho + tol && self.rho <= self.cost + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergTrace {
    pub steps: Vec<StackelbergStep>,
    /// One entry per transition.
    pub chain: Vec<CostChain>,
    pub status: RunStatus,
    /// Distinct leader actions, in order of first use.
    pub visited: Vec<NetworkMatrix>,
}

impl StackelbergTrace {
    pub fn cost_nonincreasing(&self, tol: f64) -> bool {
        self.steps.windows(2).all(|w| w[1].cost <= w[0].cost + tol)
    }

    pub fn chain_holds(&self, tol: f64) -> bool {
        self.chain.iter().all(|c| c.holds(tol))
    }

    pub fn final_state(&self) -> &OpinionProfile {
        &self.steps.last().expect("trace is nonempty").state
    }

    /// The trace as a trajectory with the social cost as its value.
    pub fn to_trajectory(&self) -> Result<TrajectoryRecord> {
        let mut rec = TrajectoryRecord::new(None);
        for s in &self.steps {
            rec.push(s.state.clone(), s.leader.clone(), Some(crate::lex::OrderedValue::Scalar(s.cost)))?;
        }
        rec.status = self.status;
        Ok(rec)
    }
}

/// Alternates follower and leader best responses from `λ_0 = leader(x0)`.
/// Stops once the leader repeats its action and the followers moved less
/// than `tol`.
pub fn run_stackelberg(
    x0: &OpinionProfile,
    g: &GameSpec,
    s: LeaderStrategy,
    max_iters: usize,
    tol: f64,
) -> Result<StackelbergTrace> {
    if max_iters == 0 {
        return Err(param("max_iters", "must be at least 1"));
    }
    let lam0 = leader_best_response(x0, g, s)?;
    let cost0 = social_cost(x0, &lam0, g)?;
    let mut trace = StackelbergTrace {
        steps: vec![StackelbergStep {
            t: 0,
            state: x0.clone(),
            leader: lam0.clone(),
            cost: cost0,
        }],
        chain: Vec::new(),
        status: RunStatus::MaxIters,
        visited: vec![lam0],
    };
    for t in 1..=max_iters {
        let prev = trace.steps.last().expect("nonempty");
        let x = follower_best_response(&prev.state, &prev.leader, g)?;
        let lam = leader_best_response(&x, g, s)?;
        let cost = social_cost(&x, &lam, g)?;
        trace.chain.push(CostChain {
            next_cost_same_leader: rho(&x, &x, &prev.leader, g),
            rho: rho(&prev.state, &x, &prev.leader, g),
            cost: prev.cost,
        });
        let settled = lam == prev.leader && prev.state.movement(&x)? < tol;
        if !trace.visited.contains(&lam) {
            trace.visited.push(lam.clone());
        }
        trace.steps.push(StackelbergStep {
            t,
            state: x,
            leader: lam,
            cost,
        });
        if settled {
            trace.status = RunStatus::Converged;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hk::{hk_lambda_minimizer, hk_lyapunov, hk_step, HkModelSpec};

    fn scalars(v: &[f64]) -> OpinionProfile {
        OpinionProfile::from_scalars(v).unwrap()
    }

    fn path_no_loops() -> NetworkMatrix {
        NetworkMatrix::from_fn(3, NetworkFlags::new(true, true, false), |i, j| {
            if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn social_cost_examples() {
        let g1 = GameSpec::example1(3, 1.0).unwrap();
        let x = scalars(&[0.0, 0.5, 2.0]);
        let lam = leader_best_response(&x, &g1, LeaderStrategy::EdgeThreshold).unwrap();
        assert_eq!(social_cost(&x, &lam, &g1).unwrap(), -4.5);
        assert_eq!(social_cost(&x, &lam, &g1).unwrap(), hk_lyapunov(&x, &HkModelSpec::homogeneous(1.0)));

        let g2 = GameSpec::example2(3);
        let y = scalars(&[0.0, 1.0, 3.0]);
        let tree = leader_best_response(&y, &g2, LeaderStrategy::MstIntegral).unwrap();
        assert_eq!(social_cost(&y, &tree, &g2).unwrap(), 10.0);
        assert_eq!(social_cost(&y, &path_no_loops(), &g2).unwrap(), 10.0);

        let c = scalars(&[2.0, 2.0, 2.0]);
        assert_eq!(social_cost(&c, &tree, &g2).unwrap(), 0.0);

        assert!(social_cost(&y, &NetworkMatrix::identity(3), &g2).is_err());
        assert!(social_cost(&y, &path_no_loops(), &g1).is_err());
    }

    #[test]
    fn follower_examples() {
        let g1 = GameSpec::example1(3, 1.0).unwrap();
        let x = scalars(&[0.0, 0.5, 2.0]);
        let lam = leader_best_response(&x, &g1, LeaderStrategy::EdgeThreshold).unwrap();
        let z = follower_best_response(&x, &lam, &g1).unwrap();
        assert_eq!(z, scalars(&[0.25, 0.25, 2.0]));
        assert_eq!(z, hk_step(&x, &lam, &HkModelSpec::homogeneous(1.0)).unwrap());
        assert_eq!(follower_best_response(&x, &NetworkMatrix::identity(3), &g1).unwrap(), x);

        let g2 = GameSpec::example2(3);
        let y = scalars(&[0.0, 1.0, 3.0]);
        assert_eq!(follower_best_response(&y, &path_no_loops(), &g2).unwrap(), scalars(&[1.0, 1.5, 1.0]));

        let boxed = GameSpec::example2(3).with_box(0.0, 1.2).unwrap();
        assert_eq!(follower_best_response(&y, &path_no_loops(), &boxed).unwrap(), scalars(&[1.0, 1.2, 1.0]));
    }

    #[test]
    fn leader_examples() {
        let g1 = GameSpec::example1(3, 1.0).unwrap();
        let x = scalars(&[0.0, 0.5, 2.0]);
        let spec = HkModelSpec::homogeneous(1.0);
        assert_eq!(
            leader_best_response(&x, &g1, LeaderStrategy::EdgeThreshold).unwrap(),
            hk_lambda_minimizer(&x, &spec).unwrap()
        );
        let y = scalars(&[0.0, 1.0, 3.0]);
        assert_eq!(mst_edges(&y), vec![(0, 1), (1, 2)]);
        let tree = leader_best_response(&y, &GameSpec::example2(3), LeaderStrategy::MstIntegral).unwrap();
        assert_eq!(tree.undirected_edges(), vec![(0, 1), (1, 2)]);
        assert!(leader_best_response(&y, &g1, LeaderStrategy::MstIntegral).is_err());
    }

    #[test]
    fn mst_ties_follow_edge_order() {
        // all pairwise distances equal: Kruskal in (i, j) order picks a star at 0
        let x = OpinionProfile::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let c = scalars(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(mst_edges(&c), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(mst_edges(&x).len(), 2);
    }

    #[test]
    fn fractional_cut_check() {
        let g2 = GameSpec::example2(3);
        let half = NetworkMatrix::from_fn(3, NetworkFlags::new(true, false, false), |i, j| if i == j { 0.0 } else { 0.5 }).unwrap();
        // each single-node cut carries 0.5 + 0.5
        assert!(g2.check_leader(&half).is_ok());
        assert_eq!(min_cut_weight(&half), 1.0);
        let thin = NetworkMatrix::from_fn(3, NetworkFlags::new(true, false, false), |i, j| if i == j { 0.0 } else { 0.4 }).unwrap();
        assert!(g2.check_leader(&thin).is_err());
    }

    #[test]
    fn min_symmetric_controls() {
        let mut rng = RngStream::new(5);
        let g1 = GameSpec::example1(3, 1.0).unwrap();
        let lam = leader_best_response(&scalars(&[0.0, 0.5, 2.0]), &g1, LeaderStrategy::EdgeThreshold).unwrap();
        assert!(min_symmetric_check(&g1, &lam, 1, 100, &mut rng).unwrap().ok);

        let cycle = NetworkMatrix::from_fn(3, NetworkFlags::new(false, true, false), |i, j| {
            if j == (i + 1) % 3 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let r = min_symmetric_check(&GameSpec::example2(3), &cycle, 1, 20, &mut rng).unwrap();
        assert!(!r.ok && r.violations == 20);
    }

    #[test]
    fn runs_reach_equilibrium() {
        let c = scalars(&[0.3, 0.3]);
        let tr = run_stackelberg(&c, &GameSpec::example2(2), LeaderStrategy::MstIntegral, 10, 1e-12).unwrap();
        assert_eq!(tr.status, RunStatus::Converged);
        assert_eq!(tr.steps.len(), 2);

        let x = scalars(&[0.0, 1.0, 3.0, 3.5, 8.0]);
        let tr = run_stackelberg(&x, &GameSpec::example2(5), LeaderStrategy::MstIntegral, 10_000, 1e-12).unwrap();
        assert_eq!(tr.status, RunStatus::Converged);
        assert!(tr.final_state().diameter() < 1e-6);
        assert!(tr.cost_nonincreasing(1e-9) && tr.chain_holds(1e-9));
        assert!(tr.steps.iter().all(|s| s.leader.is_connected()));
    }
}
