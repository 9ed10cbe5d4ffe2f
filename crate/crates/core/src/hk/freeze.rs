//! Empirical network-freeze detection on recorded runs.
//!
//! Once the remaining squared movement of a uniform-bound run (bound
//! rescaled to 1) drops below `δ² < 1/n⁴`, no pair can cross the threshold
//! again and the network stays fixed. The infinite tail is estimated by the
//! recorded finite tail, so the result is only as good as the recording.

use crate::error::{param, Result};
use crate::trajectory::{RunStatus, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeReport {
    pub delta: f64,
    /// First `t` with `Σ_{τ≥t} ‖x(τ+1) − x(τ)‖² < δ²`.
    pub freeze_index: Option<usize>,
    /// First `t > freeze_index` with `λ(t) ≠ λ(t−1)`.
    pub change_after: Option<usize>,
    /// Whether the recorded tail stands in for the infinite one: the run
    /// stopped on the movement tolerance or its last step did not move.
    pub tail_certified: bool,
}

impl FreezeReport {
    /// A freeze was found and the network never changed after it.
    pub fn holds(&self) -> bool {
        self.freeze_index.is_some() && self.change_after.is_none()
    }
}

pub fn detect_network_freeze(traj: &TrajectoryRecord, delta: f64) -> Result<FreezeReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(param("delta", format!("must be positive, got {delta}")));
    }
    let moves = traj.movements();
    let tail_certified = traj.len() >= 2
        && (traj.status == RunStatus::Converged || moves.last().is_some_and(|&m| m == 0.0));

    let mut report = FreezeReport {
        delta,
        freeze_index: None,
        change_after: None,
        tail_certified,
    };
    if traj.is_empty() {
        return Ok(report);
    }

    // tail[t] = Σ_{τ ≥ t} moves[τ]², with tail[len - 1] = 0
    let mut tail = vec![0.0; moves.len() + 1];
    for t in (0..moves.len()).rev() {
        tail[t] = tail[t + 1] + moves[t] * moves[t];
    }
    let t_delta = tail.iter().position(|&s| s < delta * delta);
    report.freeze_index = t_delta;
    if let Some(t0) = t_delta {
        report.change_after = traj.network_changes().into_iter().find(|&t| t > t0);
    }
    Ok(report)
}

/// Per-step contraction of `‖x(t) − x(last)‖` over `t ≥ from`, as the
/// geometric mean of successive ratios. Points closer than `1e-10` to the
/// limit are dropped; with fewer than two points left the ratio is 0.
pub fn geometric_tail_ratio(traj: &TrajectoryRecord, from: usize) -> Result<f64> {
    let Some(last) = traj.last() else {
        return Ok(0.0);
    };
    let mut pts = Vec::new();
    for s in traj.steps().iter().skip(from) {
        let e = s.state.movement(&last.state)?;
        if e > 1e-10 {
            pts.push((s.t, e));
        }
    }
    match (pts.first(), pts.last()) {
        (Some(&(t0, e0)), Some(&(t1, e1))) if t1 > t0 => Ok((e1 / e0).powf(1.0 / (t1 - t0) as f64)),
        _ => Ok(0.0),
    }
}
