//! Hegselmann-Krause bounded-confidence dynamics.
//!
//! Three variants share one objective
//!
//! ```text
//! f(y, λ) = Σ λ_ij w_ij (‖y_i − y_j‖² − ε_ij²)
//! ```
//!
//! minimised alternately over the network `λ` (giving the neighbour graph)
//! and over the state (giving the averaging update):
//!
//! * homogeneous: one bound `ε`, sum over ordered pairs including `i = j`;
//! * restricted edge-heterogeneous: per-pair bounds `ε_ij` and an optional
//!   restriction graph `E`, sum over unordered pairs of `E`;
//! * 0-1: agents in `S0` are stubborn, agents in `S1` move with bound 1
//!   (see [`zero_one`]).
//!
//! Membership in the neighbour graph is inclusive: at `‖y_i − y_j‖ = ε_ij`
//! the edge exists. It is evaluated on squared distances so that the
//! neighbour graph always agrees with the sign of the objective coefficient.

mod freeze;
pub mod zero_one;

pub use freeze::{detect_network_freeze, geometric_tail_ratio, FreezeReport};
pub use zero_one::{zero_one_drift_identity, zero_one_step, ZeroOneBlocks, ZeroOneModel, ZeroOnePartition};

use nalgebra::DMatrix;
use rand::Rng;

use crate::bcd::CoupledModel;
use crate::error::{param, Error, Result};
use crate::lex::{OrderedValue, ValueKind};
use crate::linalg::weighted_average;
use crate::network::{ConfidenceSpec, NetworkFlags, NetworkMatrix, RestrictionGraph, ZeroOneSets};
use crate::profile::OpinionProfile;
use crate::rng::RngStream;

/// Flags of every network produced by [`neighbor_network`].
pub const NEIGHBOR_FLAGS: NetworkFlags = NetworkFlags::new(true, true, true);

/// How the objective sums over pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumConvention {
    /// All ordered `(i, j)` including `i = j`.
    OrderedWithSelf,
    /// Unordered `{i, j}` of the (possibly complete) restriction graph.
    UnorderedEdges,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HkModelSpec {
    pub confidence: ConfidenceSpec,
    pub restriction: Option<RestrictionGraph>,
    /// Symmetric positive update weights `w_ij`; all ones when absent.
    pub weights: Option<DMatrix<f64>>,
}

impl HkModelSpec {
    pub fn homogeneous(eps: f64) -> Self {
        Self {
            confidence: ConfidenceSpec::Homogeneous(eps),
            restriction: None,
            weights: None,
        }
    }

    pub fn edge_heterogeneous(bounds: DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            confidence: ConfidenceSpec::edge_heterogeneous(bounds)?,
            restriction: None,
            weights: None,
        })
    }

    pub fn zero_one(sets: ZeroOneSets) -> Self {
        Self {
            confidence: ConfidenceSpec::NodeBinary(sets),
            restriction: None,
            weights: None,
        }
    }

    pub fn restricted_to(mut self, graph: RestrictionGraph) -> Self {
        self.restriction = Some(graph);
        self
    }

    pub fn with_weights(mut self, weights: DMatrix<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.confidence.validate(n)?;
        if let Some(g) = &self.restriction {
            if g.n() != n {
                return Err(param("restriction", format!("graph has {} nodes, expected {n}", g.n())));
            }
        }
        if let Some(w) = &self.weights {
            if matches!(self.confidence, ConfidenceSpec::NodeBinary(_)) {
                return Err(param("weights", "update weights are not supported for the 0-1 model"));
            }
            if w.nrows() != n || w.ncols() != n {
                return Err(param("weights", format!("expected {n}x{n}, got {}x{}", w.nrows(), w.ncols())));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = w[(i, j)];
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(param("weights", format!("w[{i}][{j}] = {v} must be positive")));
                    }
                    if v != w[(j, i)] {
                        return Err(param("weights", format!("w[{i}][{j}] differs from w[{j}][{i}]")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn convention(&self) -> SumConvention {
        if self.restriction.is_some() || matches!(self.confidence, ConfidenceSpec::EdgeHeterogeneous(_)) {
            SumConvention::UnorderedEdges
        } else {
            SumConvention::OrderedWithSelf
        }
    }

    /// Whether `{i, j}` (`i ≠ j`) may ever be an edge.
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.restriction.as_ref().is_none_or(|g| g.contains(i, j))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[(i, j)])
    }

    /// `w_ij (‖y_i − y_j‖² − ε_ij²)`.
    pub fn coefficient(&self, x: &OpinionProfile, i: usize, j: usize) -> f64 {
        let e = self.confidence.bound(i, j);
        self.weight(i, j) * (x.dist2(i, j) - e * e)
    }

    /// Pairs `(i, j)` the objective sums over, each listed once.
    fn objective_pairs(&self, n: usize) -> Vec<(usize, usize)> {
        match self.convention() {
            SumConvention::OrderedWithSelf => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
            SumConvention::UnorderedEdges => (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter(|&(i, j)| self.allowed(i, j))
                .collect(),
        }
    }
}

/// Symmetric neighbour graph: `λ_ij = 1` iff `‖x_i − x_j‖ ≤ ε_ij` and the pair
/// is allowed by the restriction graph; `λ_ii = 1` always.
pub fn neighbor_network(x: &OpinionProfile, spec: &HkModelSpec) -> Result<NetworkMatrix> {
    spec.validate(x.n())?;
    NetworkMatrix::from_fn(x.n(), NEIGHBOR_FLAGS, |i, j| {
        if i == j {
            return 1.0;
        }
        let e = spec.confidence.bound(i, j);
        if spec.allowed(i, j) && x.dist2(i, j) <= e * e {
            1.0
        } else {
            0.0
        }
    })
}

/// Minimiser of `f(x, ·)` over the box: a linear objective is minimised at
/// the vertex that switches on exactly the nonpositive coefficients.
pub fn hk_lambda_minimizer(x: &OpinionProfile, spec: &HkModelSpec) -> Result<NetworkMatrix> {
    spec.validate(x.n())?;
    let n = x.n();
    let mut lam = DMatrix::zeros(n, n);
    for i in 0..n {
        // self-loops are either free (restricted sum) or have coefficient −ε²
        lam[(i, i)] = 1.0;
        for j in (i + 1)..n {
            if spec.allowed(i, j) && spec.coefficient(x, i, j) <= 0.0 {
                lam[(i, j)] = 1.0;
                lam[(j, i)] = 1.0;
            }
        }
    }
    NetworkMatrix::new(lam, NEIGHBOR_FLAGS)
}

/// `f(x, λ)` under the spec's summation convention.
pub fn hk_objective(x: &OpinionProfile, net: &NetworkMatrix, spec: &HkModelSpec) -> f64 {
    spec.objective_pairs(x.n())
        .into_iter()
        .map(|(i, j)| net.get(i, j) * spec.coefficient(x, i, j))
        .sum()
}

/// `Φ(x, λ) = Σ λ_ij w_ij ‖x_i − x_j‖²` (same pairs as the objective).
pub fn hk_potential(x: &OpinionProfile, net: &NetworkMatrix, spec: &HkModelSpec) -> f64 {
    spec.objective_pairs(x.n())
        .into_iter()
        .map(|(i, j)| net.get(i, j) * spec.weight(i, j) * x.dist2(i, j))
        .sum()
}

/// `f1(λ) = −Σ λ_ij w_ij ε_ij²`.
pub fn hk_network_cost(net: &NetworkMatrix, spec: &HkModelSpec) -> f64 {
    -spec
        .objective_pairs(net.n())
        .into_iter()
        .map(|(i, j)| {
            let e = spec.confidence.bound(i, j);
            net.get(i, j) * spec.weight(i, j) * e * e
        })
        .sum::<f64>()
}

/// `V(x) = min_λ f(x, λ) = Σ (w_ij (‖x_i − x_j‖² − ε_ij²))⁻`.
pub fn hk_lyapunov(x: &OpinionProfile, spec: &HkModelSpec) -> f64 {
    spec.objective_pairs(x.n())
        .into_iter()
        .map(|(i, j)| spec.coefficient(x, i, j).min(0.0))
        .sum()
}

/// Averaging update `x'_i = Σ_j w_ij λ_ij x_j / Σ_j w_ij λ_ij`.
///
/// For the 0-1 model the stubborn rows are left in place.
pub fn hk_step(x: &OpinionProfile, net: &NetworkMatrix, spec: &HkModelSpec) -> Result<OpinionProfile> {
    check_averaging_network(x, net)?;
    if let ConfidenceSpec::NodeBinary(sets) = &spec.confidence {
        return zero_one::step_on_network(x, net, sets);
    }
    let n = x.n();
    let w = DMatrix::from_fn(n, n, |i, j| net.get(i, j) * spec.weight(i, j));
    Ok(weighted_average(x, &w))
}

fn check_averaging_network(x: &OpinionProfile, net: &NetworkMatrix) -> Result<()> {
    if net.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} network", x.n()),
            found: format!("{0}x{0}", net.n()),
        });
    }
    for i in 0..net.n() {
        if net.get(i, i) != 1.0 {
            return Err(Error::Precondition(format!("averaging needs a self-loop at agent {i}")));
        }
        if net.row(i).any(|v| v != 0.0 && v != 1.0) {
            return Err(Error::Precondition(format!("averaging needs a binary row at agent {i}")));
        }
    }
    Ok(())
}

/// The two sides of a drift inequality or identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftPair {
    pub lhs: f64,
    pub rhs: f64,
}

impl DriftPair {
    /// `lhs ≥ rhs − tol`.
    pub fn inequality_holds(&self, tol: f64) -> bool {
        self.lhs >= self.rhs - tol
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn identity_holds(&self, tol: f64) -> bool {
        (self.lhs - self.rhs).abs() <= tol
    }
}

/// `V(x(t)) − V(x(t+1))` against `‖x(t) − x(t+1)‖²` for one HK step.
///
/// Requires one common confidence bound, unit weights and a symmetric
/// (non 0-1) model.
pub fn drift_certificate_restricted(x: &OpinionProfile, spec: &HkModelSpec) -> Result<DriftPair> {
    if matches!(spec.confidence, ConfidenceSpec::NodeBinary(_)) {
        return Err(Error::Precondition("drift certificate applies to symmetric models, not 0-1".into()));
    }
    if spec.confidence.uniform_bound().is_none() {
        return Err(Error::Precondition("drift certificate needs identical confidence bounds".into()));
    }
    if spec.weights.is_some() {
        return Err(Error::Precondition("drift certificate assumes unit weights".into()));
    }
    let net = neighbor_network(x, spec)?;
    let next = hk_step(x, &net, spec)?;
    Ok(DriftPair {
        lhs: hk_lyapunov(x, spec) - hk_lyapunov(&next, spec),
        rhs: x.movement2(&next)?,
    })
}

/// HK dynamics as a coupled model with scalar objective `f`.
#[derive(Debug, Clone)]
pub struct HkModel {
    spec: HkModelSpec,
}

impl HkModel {
    pub fn new(spec: HkModelSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &HkModelSpec {
        &self.spec
    }
}

impl CoupledModel for HkModel {
    fn kind(&self) -> ValueKind {
        ValueKind::Scalar
    }

    fn state_update(&mut self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OpinionProfile> {
        hk_step(x, net, &self.spec)
    }

    fn network_update(&self, x: &OpinionProfile) -> Result<NetworkMatrix> {
        neighbor_network(x, &self.spec)
    }

    fn potential(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        Ok(OrderedValue::Scalar(hk_potential(x, net, &self.spec)))
    }

    fn network_cost(&self, net: &NetworkMatrix) -> Result<OrderedValue> {
        Ok(OrderedValue::Scalar(hk_network_cost(net, &self.spec)))
    }

    fn objective(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        Ok(OrderedValue::Scalar(hk_objective(x, net, &self.spec)))
    }

    /// Λ is the box `[0,1]^{n×n}`; with a restriction graph (or per-pair
    /// bounds) it is the symmetric part supported on `E` plus the diagonal.
    fn check_network(&self, net: &NetworkMatrix) -> Result<()> {
        let n = net.n();
        if self.spec.convention() == SumConvention::OrderedWithSelf {
            return Ok(());
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if net.get(i, j) != net.get(j, i) {
                    return Err(Error::ConstraintViolation(format!("λ[{i}][{j}] != λ[{j}][{i}]")));
                }
                if net.get(i, j) != 0.0 && !self.spec.allowed(i, j) {
                    return Err(Error::ConstraintViolation(format!("edge {{{i}, {j}}} is not in the restriction graph")));
                }
            }
        }
        Ok(())
    }

    fn sample_network(&self, n: usize, rng: &mut RngStream) -> NetworkMatrix {
        let mut m = DMatrix::zeros(n, n);
        let ordered = self.spec.convention() == SumConvention::OrderedWithSelf;
        for i in 0..n {
            for j in 0..n {
                if ordered {
                    m[(i, j)] = sample_entry(rng);
                } else if i == j {
                    m[(i, i)] = sample_entry(rng);
                } else if i < j && self.spec.allowed(i, j) {
                    let v = sample_entry(rng);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        NetworkMatrix::new(m, NetworkFlags::new(!ordered, false, true)).expect("sampled entries lie in [0, 1]")
    }
}

/// Half the draws land on a vertex of the box, half in its interior.
fn sample_entry(rng: &mut RngStream) -> f64 {
    if rng.gen_bool(0.5) {
        if rng.gen_bool(0.5) {
            1.0
        } else {
            0.0
        }
    } else {
        rng.gen_range(0.0..=1.0)
    }
}

#[cfg(test)]
mod tests;
