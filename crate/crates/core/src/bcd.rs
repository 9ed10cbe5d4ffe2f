//! Coupled state/network iteration as block coordinate descent.
//!
//! A [`CoupledModel`] supplies the two block updates
//!
//! ```text
//! x(t+1) = g1(x(t), λ(t))
//! λ(t+1) = g2(x(t+1))
//! ```
//!
//! together with a potential `Φ(x, λ)` that `g1` does not increase for a
//! fixed network, and a network cost `f1(λ)` such that `g2(x)` minimises
//! `f = Φ + f1` over the model's feasible set. When both hold, `f` is
//! nonincreasing along every trajectory; [`certify_monotone`] checks that
//! conclusion on recorded runs and [`certify_minimizer`] checks the `g2`
//! hypothesis by sampling the feasible set.

use crate::error::{param, Error, Result};
use crate::lex::{OrderedValue, ValueKind};
use crate::network::NetworkMatrix;
use crate::profile::OpinionProfile;
use crate::rng::RngStream;
use crate::trajectory::{RunStatus, TrajectoryRecord};

pub trait CoupledModel {
    /// Ordered set the objective takes values in.
    fn kind(&self) -> ValueKind;

    /// `g1`. Takes `&mut self` so stochastic models can advance their
    /// random stream or selection cursor.
    fn state_update(&mut self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OpinionProfile>;

    /// `g2`.
    fn network_update(&self, x: &OpinionProfile) -> Result<NetworkMatrix>;

    /// `Φ(x, λ)`.
    fn potential(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue>;

    /// `f1(λ)`.
    fn network_cost(&self, net: &NetworkMatrix) -> Result<OrderedValue>;

    /// `f = Φ + f1`.
    fn objective(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        self.potential(x, net)?.combine(&self.network_cost(net)?)
    }

    /// Membership test for the feasible network set Λ.
    fn check_network(&self, net: &NetworkMatrix) -> Result<()>;

    /// A random member of Λ for `n` agents.
    fn sample_network(&self, n: usize, rng: &mut RngStream) -> NetworkMatrix;

    /// Seed of the model's internal stream, for stochastic models.
    fn seed(&self) -> Option<u64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub max_iters: usize,
    /// Stop once `‖x(t+1) − x(t)‖ < tol`.
    pub tol: f64,
    pub record_lyapunov: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-12,
            record_lyapunov: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(param("max_iters", "must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(param("tol", format!("must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// One coupled update: `(g1(x, λ), g2(g1(x, λ)))`.
pub fn step<M: CoupledModel + ?Sized>(
    model: &mut M,
    x: &OpinionProfile,
    net: &NetworkMatrix,
) -> Result<(OpinionProfile, NetworkMatrix)> {
    model.check_network(net)?;
    let next = model.state_update(x, net)?;
    let next_net = model.network_update(&next)?;
    model
        .check_network(&next_net)
        .map_err(|e| Error::ConstraintViolation(format!("network update left the feasible set: {e}")))?;
    Ok((next, next_net))
}

/// Iterates from `λ(0) = g2(x0)` until the movement drops below `cfg.tol`
/// or `cfg.max_iters` transitions have been taken.
pub fn run<M: CoupledModel + ?Sized>(model: &mut M, x0: &OpinionProfile, cfg: &RunConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let mut rec = TrajectoryRecord::new(model.seed());
    let net0 = model.network_update(x0)?;
    model.check_network(&net0)?;
    let value = lyapunov_entry(model, x0, &net0, cfg)?;
    rec.push(x0.clone(), net0, value)?;

    for _ in 0..cfg.max_iters {
        let last = rec.last().expect("record is nonempty");
        let (x, net) = step(model, &last.state, &last.network)?;
        let value = lyapunov_entry(model, &x, &net, cfg)?;
        rec.push(x, net, value)?;
        if rec.last().expect("just pushed").movement < cfg.tol {
            rec.status = RunStatus::Converged;
            break;
        }
    }
    Ok(rec)
}

fn lyapunov_entry<M: CoupledModel + ?Sized>(
    model: &M,
    x: &OpinionProfile,
    net: &NetworkMatrix,
    cfg: &RunConfig,
) -> Result<Option<OrderedValue>> {
    if cfg.record_lyapunov {
        model.objective(x, net).map(Some)
    } else {
        Ok(None)
    }
}

/// Outcome of a monotonicity check; violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub ok: bool,
    /// Index `t + 1` of the first step with `f(t+1) > f(t) + tol`.
    pub first_violation: Option<usize>,
    pub steps_checked: usize,
    /// Largest scalar increase seen (negative when strictly decreasing);
    /// `None` for lexicographic objectives.
    pub max_increase: Option<f64>,
}

/// Checks `f(x(t+1), λ(t+1)) ≤ f(x(t), λ(t)) + tol` on every recorded step.
///
/// The objective is recomputed from the recorded states and networks, so
/// hand-built trajectories are checked the same way as simulated ones.
pub fn certify_monotone<M: CoupledModel + ?Sized>(traj: &TrajectoryRecord, model: &M, tol: f64) -> Result<MonotoneReport> {
    let values = traj
        .steps()
        .iter()
        .map(|s| model.objective(&s.state, &s.network))
        .collect::<Result<Vec<_>>>()?;
    certify_values(&values, tol)
}

/// Monotonicity check over a precomputed sequence of ordered values.
pub fn certify_values(values: &[OrderedValue], tol: f64) -> Result<MonotoneReport> {
    let mut report = MonotoneReport {
        ok: true,
        first_violation: None,
        steps_checked: values.len().saturating_sub(1),
        max_increase: None,
    };
    for (k, w) in values.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (w[0].as_scalar(), w[1].as_scalar()) {
            let inc = b - a;
            report.max_increase = Some(report.max_increase.map_or(inc, |m: f64| m.max(inc)));
        }
        if !w[1].le_tol(&w[0], tol)? && report.first_violation.is_none() {
            report.ok = false;
            report.first_violation = Some(k + 1);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport {
    pub ok: bool,
    pub samples: usize,
    /// Index of the first sampled network that beat `g2(x)` by more than `tol`.
    pub first_violation: Option<usize>,
}

/// Samples Λ and checks `f(x, g2(x)) ≤ f(x, λ) + tol` for each sample.
pub fn certify_minimizer<M: CoupledModel + ?Sized>(
    model: &M,
    x: &OpinionProfile,
    samples: usize,
    rng: &mut RngStream,
    tol: f64,
) -> Result<MinimizerReport> {
    let best_net = model.network_update(x)?;
    let best = model.objective(x, &best_net)?;
    let mut first_violation = None;
    for k in 0..samples {
        let net = model.sample_network(x.n(), rng);
        model.check_network(&net)?;
        let v = model.objective(x, &net)?;
        if !best.le_tol(&v, tol)? {
            first_violation.get_or_insert(k);
        }
    }
    Ok(MinimizerReport {
        ok: first_violation.is_none(),
        samples,
        first_violation,
    })
}
