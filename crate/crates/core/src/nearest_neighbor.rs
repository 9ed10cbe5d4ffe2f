//! Nearest-neighbour opinion dynamics.
//!
//! Agent `i` moves toward its closest peer `r(i)`:
//! `x_i ← μ_i x_i + (1 − μ_i) x_{r(i)}`. In asynchronous mode one agent
//! updates per step; in synchronous mode all agents update at once against
//! the same profile. The Lyapunov value is the sorted vector of
//! nearest-neighbour distances under the lexicographic order.

use rand::Rng;

use crate::bcd::CoupledModel;
use crate::error::{param, Error, Result};
use crate::hk::DriftPair;
use crate::lex::{LexValue, OrderedValue, ValueKind};
use crate::network::{NetworkFlags, NetworkMatrix};
use crate::profile::OpinionProfile;
use crate::rng::RngStream;

/// Largest `n` for which the weights `2^{n−i}` of [`vhat`] are used.
pub const VHAT_MAX_N: usize = 50;

/// Flags of the selection networks produced by [`nn_network`].
pub const NN_FLAGS: NetworkFlags = NetworkFlags::new(false, true, false);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    Async,
    Sync,
}

/// How the asynchronous mode picks the updating agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Uniform over agents, drawn from a stream seeded with `seed`.
    UniformRandom { seed: u64 },
    /// Agents `0, 1, …, n−1, 0, …`.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NNModelSpec {
    pub mu: Vec<f64>,
    pub mode: UpdateMode,
    pub selection: Selection,
}

impl NNModelSpec {
    pub fn new(mu: Vec<f64>, mode: UpdateMode, selection: Selection) -> Result<Self> {
        let spec = Self { mu, mode, selection };
        spec.validate(spec.mu.len())?;
        Ok(spec)
    }

    pub fn uniform(n: usize, mu: f64, mode: UpdateMode, selection: Selection) -> Result<Self> {
        Self::new(vec![mu; n], mode, selection)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(param("n", format!("nearest-neighbour dynamics need n >= 2, got {n}")));
        }
        if self.mu.len() != n {
            return Err(param("mu", format!("expected {n} entries, got {}", self.mu.len())));
        }
        if let Some((i, m)) = self.mu.iter().enumerate().find(|(_, m)| !(**m > 0.0 && **m < 1.0)) {
            return Err(param("mu", format!("μ must lie in (0,1); agent {i} has {m}")));
        }
        Ok(())
    }

    /// The common `μ`, if every agent shares one.
    pub fn uniform_mu(&self) -> Option<f64> {
        let first = *self.mu.first()?;
        self.mu.iter().all(|&m| m == first).then_some(first)
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_n(x: &OpinionProfile) -> Result<()> {
    if x.n() < 2 {
        return Err(Error::Precondition(format!("nearest neighbour needs n >= 2, got {}", x.n())));
    }
    Ok(())
}

fn check_agent(x: &OpinionProfile, i: usize) -> Result<()> {
    if i >= x.n() {
        return Err(param("agent", format!("{i} out of range for n = {}", x.n())));
    }
    Ok(())
}

fn nearest_unchecked(x: &OpinionProfile, i: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for j in (0..x.n()).filter(|&j| j != i) {
        let d = x.dist2(i, j);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// `r(i)`: the closest other agent, lowest index on ties.
pub fn nearest(x: &OpinionProfile, i: usize) -> Result<usize> {
    check_n(x)?;
    check_agent(x, i)?;
    Ok(nearest_unchecked(x, i))
}

/// `r(i)` for every agent.
pub fn nearest_all(x: &OpinionProfile) -> Result<Vec<usize>> {
    check_n(x)?;
    Ok((0..x.n()).map(|i| nearest_unchecked(x, i)).collect())
}

/// `‖x_i − x_{r(i)}‖` for every agent, in agent order.
pub fn nn_distances(x: &OpinionProfile) -> Result<Vec<f64>> {
    let r = nearest_all(x)?;
    Ok(r.iter().enumerate().map(|(i, &j)| x.dist(i, j)).collect())
}

/// Row `i` selects `r(i)`.
pub fn nn_network(x: &OpinionProfile) -> Result<NetworkMatrix> {
    let r = nearest_all(x)?;
    NetworkMatrix::from_fn(x.n(), NN_FLAGS, |i, j| if r[i] == j { 1.0 } else { 0.0 })
}

/// Sorted nearest-neighbour distances.
pub fn lex_lyapunov(x: &OpinionProfile) -> Result<LexValue> {
    LexValue::from_unsorted(nn_distances(x)?)
}

/// `Σ_i v_(i) 2^{n−i}` over the sorted nearest-neighbour distances `v`.
pub fn vhat(x: &OpinionProfile) -> Result<f64> {
    let n = x.n();
    if n > VHAT_MAX_N {
        return Err(Error::Precondition(format!("vhat weights are exact only for n <= {VHAT_MAX_N}, got {n}")));
    }
    let v = lex_lyapunov(x)?;
    Ok(v.entries().iter().enumerate().map(|(i, d)| d * 2f64.powi((n - 1 - i) as i32)).sum())
}

/// `Σ_i ‖x_i − x_{r(i)}‖`.
pub fn vhat1(x: &OpinionProfile) -> Result<f64> {
    Ok(nn_distances(x)?.iter().sum())
}

fn mix(x: &OpinionProfile, i: usize, j: usize, mu: f64) -> Vec<f64> {
    (0..x.d()).map(|k| mu * x.get(i, k) + (1.0 - mu) * x.get(j, k)).collect()
}

/// Moves agent `l` toward `r(l)`; every other row is unchanged.
pub fn async_step(x: &OpinionProfile, l: usize, spec: &NNModelSpec) -> Result<OpinionProfile> {
    spec.validate(x.n())?;
    check_agent(x, l)?;
    let r = nearest_unchecked(x, l);
    let mut m = x.matrix().clone();
    for (k, v) in mix(x, l, r, spec.mu[l]).into_iter().enumerate() {
        m[(l, k)] = v;
    }
    Ok(OpinionProfile::from_matrix_unchecked(m))
}

/// Every agent moves toward its `r(i)` computed on the same profile.
pub fn sync_step(x: &OpinionProfile, spec: &NNModelSpec) -> Result<OpinionProfile> {
    spec.validate(x.n())?;
    let r = nearest_all(x)?;
    let mut m = x.matrix().clone();
    for (i, &j) in r.iter().enumerate() {
        for (k, v) in mix(x, i, j, spec.mu[i]).into_iter().enumerate() {
            m[(i, k)] = v;
        }
    }
    Ok(OpinionProfile::from_matrix_unchecked(m))
}

/// `V̂(x) − V̂(x')` against `(1 − μ_l) ‖x_l − x_{r'(l)}‖`, with `r'` the
/// nearest neighbour of `l` after the step and both positions taken before.
pub fn async_drift_check(x: &OpinionProfile, l: usize, spec: &NNModelSpec) -> Result<DriftPair> {
    let next = async_step(x, l, spec)?;
    let r_after = nearest_unchecked(&next, l);
    Ok(DriftPair {
        lhs: vhat(x)? - vhat(&next)?,
        rhs: (1.0 - spec.mu[l]) * x.dist(l, r_after),
    })
}

/// `V̂1(x) − V̂1(x')` against `(1 − μ)(D − d)`: `D` is the longest
/// nearest-neighbour edge (lowest agent index on ties) and `d` the shortest
/// one inside the weakly connected component of the selection graph that
/// contains it.
pub fn sync_drift_check(x: &OpinionProfile, spec: &NNModelSpec) -> Result<DriftPair> {
    let mu = spec
        .uniform_mu()
        .ok_or_else(|| Error::Precondition("synchronous drift check needs a uniform μ".into()))?;
    let next = sync_step(x, spec)?;
    let r = nearest_all(x)?;
    let dist: Vec<f64> = r.iter().enumerate().map(|(i, &j)| x.dist(i, j)).collect();

    let n = x.n();
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(n);
    for (i, &j) in r.iter().enumerate() {
        uf.union(i, j);
    }
    let mut longest = 0;
    for i in 1..n {
        if dist[i] > dist[longest] {
            longest = i;
        }
    }
    let root = uf.find(longest);
    let shortest = (0..n)
        .filter(|&i| uf.find(i) == root)
        .map(|i| dist[i])
        .fold(f64::INFINITY, f64::min);

    Ok(DriftPair {
        lhs: dist.iter().sum::<f64>() - vhat1(&next)?,
        rhs: (1.0 - mu) * (dist[longest] - shortest),
    })
}

/// `n 2ⁿ D0 / ((1 − μ_max) ε)`.
pub fn async_time_bound(n: usize, d0: f64, mu_max: f64, eps: f64) -> f64 {
    n as f64 * 2f64.powi(n as i32) * d0 / ((1.0 - mu_max) * eps)
}

/// `n (2 D0 / ε + log_{|1−2μ|}(ε / (2 D0)))`; the log term is 0 at `μ = 1/2`.
pub fn sync_time_bound(n: usize, d0: f64, mu: f64, eps: f64) -> f64 {
    let base = (1.0 - 2.0 * mu).abs();
    let log_term = if base == 0.0 || d0 == 0.0 {
        0.0
    } else {
        (eps / (2.0 * d0)).ln() / base.ln()
    };
    n as f64 * (2.0 * d0 / eps + log_term)
}

/// Drives [`NNModelSpec`] one step at a time, owning the selection state.
#[derive(Debug, Clone)]
pub struct NnDynamics {
    spec: NNModelSpec,
    rng: Option<RngStream>,
    cursor: usize,
}

impl NnDynamics {
    pub fn new(spec: NNModelSpec) -> Self {
        let rng = match spec.selection {
            Selection::UniformRandom { seed } => Some(RngStream::new(seed)),
            Selection::RoundRobin => None,
        };
        Self { spec, rng, cursor: 0 }
    }

    pub fn spec(&self) -> &NNModelSpec {
        &self.spec
    }

    /// Next updating agent in asynchronous mode.
    pub fn select(&mut self, n: usize) -> usize {
        match &mut self.rng {
            Some(rng) => rng.gen_range(0..n),
            None => {
                let l = self.cursor % n;
                self.cursor += 1;
                l
            }
        }
    }

    /// One step; returns the new profile and, in asynchronous mode, the
    /// agent that updated.
    pub fn advance(&mut self, x: &OpinionProfile) -> Result<(OpinionProfile, Option<usize>)> {
        match self.spec.mode {
            UpdateMode::Async => {
                let l = self.select(x.n());
                Ok((async_step(x, l, &self.spec)?, Some(l)))
            }
            UpdateMode::Sync => Ok((sync_step(x, &self.spec)?, None)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsEquilibriumReport {
    pub eps: f64,
    /// First `t` with `max_i ‖x_i − x_{r(i)}‖ ≤ ε`.
    pub t_eps: Option<usize>,
    /// `max_i ‖x_i − x_{r(i)}‖` at every recorded `t`.
    pub max_distance: Vec<f64>,
    pub d0: f64,
    /// Agent updated at each step (asynchronous mode only).
    pub selected: Vec<usize>,
    pub final_state: OpinionProfile,
}

impl EpsEquilibriumReport {
    pub fn reached(&self) -> bool {
        self.t_eps.is_some()
    }
}

pub fn run_to_eps_equilibrium(
    x0: &OpinionProfile,
    eps: f64,
    spec: &NNModelSpec,
    max_iters: usize,
) -> Result<EpsEquilibriumReport> {
    run_to_eps_equilibrium_with(x0, eps, spec, max_iters, |_, _, _| Ok(()))
}

/// As [`run_to_eps_equilibrium`], calling `observe(x(t), x(t+1), agent)`
/// after every step.
pub fn run_to_eps_equilibrium_with<F>(
    x0: &OpinionProfile,
    eps: f64,
    spec: &NNModelSpec,
    max_iters: usize,
    mut observe: F,
) -> Result<EpsEquilibriumReport>
where
    F: FnMut(&OpinionProfile, &OpinionProfile, Option<usize>) -> Result<()>,
{
    if !(eps > 0.0) {
        return Err(param("eps", format!("must be positive, got {eps}")));
    }
    spec.validate(x0.n())?;
    let max_nn = |x: &OpinionProfile| -> Result<f64> { Ok(nn_distances(x)?.into_iter().fold(0.0, f64::max)) };

    let mut dynamics = NnDynamics::new(spec.clone());
    let mut x = x0.clone();
    let mut report = EpsEquilibriumReport {
        eps,
        t_eps: None,
        max_distance: vec![max_nn(&x)?],
        d0: x0.diameter(),
        selected: Vec::new(),
        final_state: x0.clone(),
    };
    for t in 0..=max_iters {
        if report.max_distance[t] <= eps {
            report.t_eps = Some(t);
            break;
        }
        if t == max_iters {
            break;
        }
        let (next, agent) = dynamics.advance(&x)?;
        observe(&x, &next, agent)?;
        report.selected.extend(agent);
        report.max_distance.push(max_nn(&next)?);
        x = next;
    }
    report.final_state = x;
    Ok(report)
}

/// Nearest-neighbour dynamics as a coupled model with lexicographic
/// objective `sort(Σ_j λ_ij ‖x_i − x_j‖)` over row-stochastic, zero-diagonal
/// networks.
#[derive(Debug, Clone)]
pub struct NnModel {
    dynamics: NnDynamics,
}

impl NnModel {
    pub fn new(spec: NNModelSpec) -> Self {
        Self {
            dynamics: NnDynamics::new(spec),
        }
    }

    pub fn spec(&self) -> &NNModelSpec {
        self.dynamics.spec()
    }
}

impl CoupledModel for NnModel {
    fn kind(&self) -> ValueKind {
        ValueKind::Lexicographic
    }

    fn state_update(&mut self, x: &OpinionProfile, _net: &NetworkMatrix) -> Result<OpinionProfile> {
        // the selection network is recomputed from x, which it equals on the trajectory
        self.dynamics.advance(x).map(|(next, _)| next)
    }

    fn network_update(&self, x: &OpinionProfile) -> Result<NetworkMatrix> {
        nn_network(x)
    }

    fn potential(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        let n = x.n();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| net.get(i, j) * x.dist(i, j)).sum())
            .collect();
        LexValue::from_unsorted(rows).map(OrderedValue::Lex)
    }

    fn network_cost(&self, net: &NetworkMatrix) -> Result<OrderedValue> {
        Ok(OrderedValue::Lex(LexValue::zeros(net.n())))
    }

    fn check_network(&self, net: &NetworkMatrix) -> Result<()> {
        for i in 0..net.n() {
            if net.get(i, i) != 0.0 {
                return Err(Error::ConstraintViolation(format!("self-selection at agent {i}")));
            }
            let s = net.row_sum(i);
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::ConstraintViolation(format!("row {i} sums to {s}, expected 1")));
            }
        }
        Ok(())
    }

    fn sample_network(&self, n: usize, rng: &mut RngStream) -> NetworkMatrix {
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            if rng.gen_bool(0.5) {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                m[(i, j)] = 1.0;
            } else {
                let w: Vec<f64> = (0..n).map(|j| if j == i { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
                let s: f64 = w.iter().sum();
                for j in 0..n {
                    m[(i, j)] = w[j] / s;
                }
            }
        }
        NetworkMatrix::new(m, NetworkFlags::new(false, false, false)).expect("rows are convex weights")
    }

    fn seed(&self) -> Option<u64> {
        match self.spec().selection {
            Selection::UniformRandom { seed } if self.spec().mode == UpdateMode::Async => Some(seed),
            _ => None,
        }
    }
}
