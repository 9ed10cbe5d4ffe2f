//! Recorded runs.

use crate::error::{Error, Result};
use crate::lex::OrderedValue;
use crate::network::NetworkMatrix;
use crate::profile::OpinionProfile;

/// One recorded time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub t: usize,
    pub state: OpinionProfile,
    pub network: NetworkMatrix,
    /// `f(x(t), λ(t))`, when recorded.
    pub lyapunov: Option<OrderedValue>,
    /// `‖x(t) − x(t−1)‖`, zero at `t = 0`.
    pub movement: f64,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Per-step movement fell below the stop tolerance.
    Converged,
    MaxIters,
}

/// Ordered list of steps with consecutive time indices starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    steps: Vec<TrajectoryStep>,
    pub status: RunStatus,
    /// Seed of the random stream driving the run, if any.
    pub seed: Option<u64>,
}

impl TrajectoryRecord {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            steps: Vec::new(),
            status: RunStatus::MaxIters,
            seed,
        }
    }

    /// Builds a record from states and networks; movements are derived and
    /// no Lyapunov values are attached.
    pub fn from_states(states: Vec<(OpinionProfile, NetworkMatrix)>) -> Result<Self> {
        let mut rec = Self::new(None);
        for (state, network) in states {
            rec.push(state, network, None)?;
        }
        Ok(rec)
    }

    /// Appends the next step; `t` and `movement` are filled in here.
    pub fn push(&mut self, state: OpinionProfile, network: NetworkMatrix, lyapunov: Option<OrderedValue>) -> Result<()> {
        let movement = match self.steps.last() {
            Some(prev) => prev.state.movement(&state)?,
            None => 0.0,
        };
        if network.n() != state.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} network", state.n()),
                found: format!("{0}x{0}", network.n()),
            });
        }
        self.steps.push(TrajectoryStep {
            t: self.steps.len(),
            state,
            network,
            lyapunov,
            movement,
        });
        Ok(())
    }

    pub fn steps(&self) -> &[TrajectoryStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryStep> {
        self.steps.last()
    }

    /// Number of transitions taken.
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// `‖x(t+1) − x(t)‖` for `t` in `0..iterations()`.
    pub fn movements(&self) -> Vec<f64> {
        self.steps.iter().skip(1).map(|s| s.movement).collect()
    }

    /// Times `t ≥ 1` at which `λ(t)` differs from `λ(t−1)`.
    pub fn network_changes(&self) -> Vec<usize> {
        self.steps
            .windows(2)
            .filter(|w| w[0].network != w[1].network)
            .map(|w| w[1].t)
            .collect()
    }
}
