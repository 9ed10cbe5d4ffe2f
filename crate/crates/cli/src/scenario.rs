//! Scenario files: a TOML description of one model, its initial profile and
//! run controls. See `docs/formats.md` for the schema.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use switchnet::hk::{HkModelSpec, ZeroOnePartition};
use switchnet::nearest_neighbor::{NNModelSpec, Selection, UpdateMode};
use switchnet::stackelberg::GameSpec;
use switchnet::{OpinionProfile, RestrictionGraph, RngStream};

use crate::error::{invalid, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "hk")]
    Hk,
    #[serde(rename = "hk-restricted")]
    HkRestricted,
    #[serde(rename = "hk-01")]
    Hk01,
    #[serde(rename = "nn-async")]
    NnAsync,
    #[serde(rename = "nn-sync")]
    NnSync,
    #[serde(rename = "stackelberg-ex1")]
    StackelbergEx1,
    #[serde(rename = "stackelberg-ex2")]
    StackelbergEx2,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hk => "hk",
            Self::HkRestricted => "hk-restricted",
            Self::Hk01 => "hk-01",
            Self::NnAsync => "nn-async",
            Self::NnSync => "nn-sync",
            Self::StackelbergEx1 => "stackelberg-ex1",
            Self::StackelbergEx2 => "stackelberg-ex2",
        }
    }

    pub fn is_hk(self) -> bool {
        matches!(self, Self::Hk | Self::HkRestricted | Self::Hk01)
    }

    pub fn is_nn(self) -> bool {
        matches!(self, Self::NnAsync | Self::NnSync)
    }

    /// Parameter keys the model reads; anything else under `[params]` is
    /// rejected.
    fn param_keys(self) -> &'static [&'static str] {
        match self {
            Self::Hk => &["eps"],
            Self::HkRestricted => &["eps", "eps_pairs", "edges"],
            Self::Hk01 => &["stubborn"],
            Self::NnAsync => &["mu", "selection"],
            Self::NnSync => &["mu"],
            Self::StackelbergEx1 => &["eps", "box"],
            Self::StackelbergEx2 => &["box"],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Initial {
    /// One row of `d` coordinates per agent.
    Explicit { values: Vec<Vec<f64>> },
    /// Each coordinate uniform in `[low, high)`, drawn from the run seed.
    UniformRandom { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionKind {
    RoundRobin,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairBound {
    pub i: usize,
    pub j: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stubborn: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionKind>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub follower_box: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_pairs: Option<Vec<PairBound>>,
}

impl Params {
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut note = |set: bool, key| {
            if set {
                keys.push(key);
            }
        };
        note(self.eps.is_some(), "eps");
        note(self.edges.is_some(), "edges");
        note(self.stubborn.is_some(), "stubborn");
        note(self.mu.is_some(), "mu");
        note(self.selection.is_some(), "selection");
        note(self.follower_box.is_some(), "box");
        note(self.eps_pairs.is_some(), "eps_pairs");
        keys
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunControls {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Distance for the ε-equilibrium of nearest-neighbour runs; defaults
    /// to `0.05 · D0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_eps: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_iters() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-12
}

fn default_trials() -> usize {
    1
}

impl Default for RunControls {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            tol: default_tol(),
            eq_eps: None,
            trials: default_trials(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelId,
    pub n: usize,
    pub d: usize,
    pub initial: Initial,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub run: RunControls,
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml(&text, &path.display().to_string())
}

impl Scenario {
    /// Parses and validates; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Syntax {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Emit(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        let min_n = if self.model.is_nn() { 2 } else { 1 };
        if n < min_n {
            return Err(invalid("n", format!("model {} needs at least {min_n} agents, got {n}", self.model)));
        }
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        self.validate_initial()?;
        self.validate_run()?;

        let allowed = self.model.param_keys();
        if let Some(key) = self.params.present().into_iter().find(|k| !allowed.contains(k)) {
            return Err(invalid(format!("params.{key}"), format!("not used by model {}", self.model)));
        }
        let p = &self.params;
        match self.model {
            ModelId::Hk => {
                positive("params.eps", require("params.eps", p.eps)?)?;
            }
            ModelId::HkRestricted => self.validate_restricted()?,
            ModelId::Hk01 => {
                let stubborn = require("params.stubborn", p.stubborn.as_ref())?;
                let mut seen = BTreeSet::new();
                for (k, &i) in stubborn.iter().enumerate() {
                    let field = format!("params.stubborn[{k}]");
                    agent(&field, i, n)?;
                    if !seen.insert(i) {
                        return Err(invalid(field, format!("agent {i} listed twice")));
                    }
                }
            }
            ModelId::NnAsync | ModelId::NnSync => {
                let mu = require("params.mu", p.mu.as_ref())?;
                if mu.len() != n {
                    return Err(invalid("params.mu", format!("expected {n} entries, got {}", mu.len())));
                }
                for (i, &m) in mu.iter().enumerate() {
                    if !(m > 0.0 && m < 1.0) {
                        return Err(invalid(format!("params.mu[{i}]"), format!("μ must lie in (0,1), got {m}")));
                    }
                }
                if self.model == ModelId::NnSync && mu.iter().any(|&m| m != mu[0]) {
                    return Err(invalid("params.mu", "synchronous updates need one common μ"));
                }
            }
            ModelId::StackelbergEx1 | ModelId::StackelbergEx2 => {
                if self.model == ModelId::StackelbergEx1 {
                    positive("params.eps", require("params.eps", p.eps)?)?;
                }
                if let Some([lo, hi]) = p.follower_box {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(invalid("params.box", format!("need finite low < high, got [{lo}, {hi}]")));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_initial(&self) -> Result<()> {
        match &self.initial {
            Initial::Explicit { values } => {
                if values.len() != self.n {
                    return Err(invalid(
                        "initial.values",
                        format!("expected {} rows, got {}", self.n, values.len()),
                    ));
                }
                for (i, row) in values.iter().enumerate() {
                    if row.len() != self.d {
                        return Err(invalid(
                            format!("initial.values[{i}]"),
                            format!("expected {} coordinates, got {}", self.d, row.len()),
                        ));
                    }
                    if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                        return Err(invalid(format!("initial.values[{i}][{k}]"), "must be finite"));
                    }
                }
            }
            Initial::UniformRandom { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(invalid("initial", format!("need finite low < high, got [{low}, {high})")));
                }
            }
        }
        Ok(())
    }

    fn validate_run(&self) -> Result<()> {
        let r = &self.run;
        if r.max_iters == 0 {
            return Err(invalid("run.max_iters", "must be at least 1"));
        }
        if !r.tol.is_finite() || r.tol < 0.0 {
            return Err(invalid("run.tol", format!("must be finite and nonnegative, got {}", r.tol)));
        }
        if let Some(e) = r.eq_eps {
            positive("run.eq_eps", e)?;
        }
        if r.trials == 0 {
            return Err(invalid("run.trials", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_restricted(&self) -> Result<()> {
        let p = &self.params;
        let edges = self.restriction_edges()?;
        match (p.eps, &p.eps_pairs) {
            (Some(_), Some(_)) => Err(invalid("params.eps_pairs", "give either eps or eps_pairs, not both")),
            (None, None) => Err(invalid("params.eps", "required: a common bound eps or per-edge eps_pairs")),
            (Some(e), None) => positive("params.eps", e),
            (None, Some(pairs)) => {
                let mut covered = BTreeSet::new();
                for (k, b) in pairs.iter().enumerate() {
                    let field = format!("params.eps_pairs[{k}]");
                    let key = (b.i.min(b.j), b.i.max(b.j));
                    if !edges.contains(&key) {
                        return Err(invalid(field, format!("({}, {}) is not a restriction edge", b.i, b.j)));
                    }
                    positive(&field, b.eps)?;
                    if !covered.insert(key) {
                        return Err(invalid(field, format!("edge ({}, {}) given twice", key.0, key.1)));
                    }
                }
                match edges.iter().find(|e| !covered.contains(e)) {
                    Some((i, j)) => Err(invalid("params.eps_pairs", format!("missing bound for edge ({i}, {j})"))),
                    None => Ok(()),
                }
            }
        }
    }

    /// Restriction edges as sorted pairs `(i, j)`, `i < j`.
    fn restriction_edges(&self) -> Result<BTreeSet<(usize, usize)>> {
        let edges = require("params.edges", self.params.edges.as_ref())?;
        let mut set = BTreeSet::new();
        for (k, &[i, j]) in edges.iter().enumerate() {
            let field = format!("params.edges[{k}]");
            agent(&field, i, self.n)?;
            agent(&field, j, self.n)?;
            if i == j {
                return Err(invalid(field, format!("self-loop ({i}, {i}) is implicit")));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(invalid(field, format!("edge ({i}, {j}) listed twice")));
            }
        }
        Ok(set)
    }

    /// Whether any part of a run draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        matches!(self.initial, Initial::UniformRandom { .. })
            || (self.model == ModelId::NnAsync && self.params.selection != Some(SelectionKind::RoundRobin))
    }

    /// Initial profile for trial `trial`.
    pub fn profile(&self, trial: usize) -> Result<OpinionProfile> {
        match &self.initial {
            Initial::Explicit { values } => Ok(OpinionProfile::from_rows(values)?),
            Initial::UniformRandom { low, high } => {
                let mut rng = RngStream::derive(self.run.seed, 2 * trial as u64);
                Ok(OpinionProfile::uniform(self.n, self.d, *low, *high, &mut rng)?)
            }
        }
    }

    /// Seed of the agent-selection stream for trial `trial`.
    pub fn selection_seed(&self, trial: usize) -> u64 {
        rand::RngCore::next_u64(&mut RngStream::derive(self.run.seed, 2 * trial as u64 + 1))
    }

    /// The HK specification and, for `hk-01`, the stubborn/moving split.
    pub fn hk_spec(&self) -> Result<(HkModelSpec, Option<ZeroOnePartition>)> {
        let p = &self.params;
        match self.model {
            ModelId::Hk => Ok((HkModelSpec::homogeneous(p.eps.unwrap_or_default()), None)),
            ModelId::HkRestricted => {
                let edges = self.restriction_edges()?;
                let graph = RestrictionGraph::new(self.n, edges.iter().copied())?;
                let spec = match (&p.eps_pairs, p.eps) {
                    (Some(pairs), _) => {
                        // off-graph entries are never read; any positive value will do
                        let mut bounds = DMatrix::from_element(self.n, self.n, 1.0);
                        for b in pairs {
                            bounds[(b.i, b.j)] = b.eps;
                            bounds[(b.j, b.i)] = b.eps;
                        }
                        HkModelSpec::edge_heterogeneous(bounds)?
                    }
                    (None, eps) => HkModelSpec::homogeneous(eps.unwrap_or_default()),
                };
                Ok((spec.restricted_to(graph), None))
            }
            ModelId::Hk01 => {
                let part = ZeroOnePartition::new(self.n, p.stubborn.clone().unwrap_or_default())?;
                Ok((part.spec(), Some(part)))
            }
            other => Err(invalid("model", format!("{other} is not an HK model"))),
        }
    }

    pub fn nn_spec(&self, trial: usize) -> Result<NNModelSpec> {
        let mu = self.params.mu.clone().unwrap_or_default();
        let (mode, selection) = match self.model {
            ModelId::NnAsync => match self.params.selection.unwrap_or(SelectionKind::UniformRandom) {
                SelectionKind::RoundRobin => (UpdateMode::Async, Selection::RoundRobin),
                SelectionKind::UniformRandom => (
                    UpdateMode::Async,
                    Selection::UniformRandom {
                        seed: self.selection_seed(trial),
                    },
                ),
            },
            ModelId::NnSync => (UpdateMode::Sync, Selection::RoundRobin),
            other => return Err(invalid("model", format!("{other} is not a nearest-neighbour model"))),
        };
        Ok(NNModelSpec::new(mu, mode, selection)?)
    }

    pub fn game(&self) -> Result<GameSpec> {
        let g = match self.model {
            ModelId::StackelbergEx1 => GameSpec::example1(self.n, self.params.eps.unwrap_or_default())?,
            ModelId::StackelbergEx2 => GameSpec::example2(self.n),
            other => return Err(invalid("model", format!("{other} is not a leader-follower game"))),
        };
        match self.params.follower_box {
            Some([lo, hi]) => Ok(g.with_box(lo, hi)?),
            None => Ok(g),
        }
    }
}

fn require<T>(field: &str, value: Option<T>) -> Result<T> {
    value.ok_or_else(|| invalid(field, "required"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn agent(field: &str, i: usize, n: usize) -> Result<()> {
    if i < n {
        Ok(())
    } else {
        Err(invalid(field, format!("agent index {i} out of range for n = {n}")))
    }
}
