//! Exhaustive reference solvers for small instances.
//!
//! Each oracle enumerates a finite family of binary networks and evaluates
//! its objective directly from the opinion coordinates, without going
//! through the model code it is used to check.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;

use crate::error::{param, Error, Result};
use crate::hk::{HkModelSpec, SumConvention};
use crate::lex::{lex_compare_slices, LexValue};
use crate::network::{NetworkFlags, NetworkMatrix};
use crate::profile::OpinionProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_n: usize,
    /// Largest number of candidates an oracle may enumerate.
    pub max_candidates: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_n: 5,
            max_candidates: 1 << 20,
        }
    }
}

impl OracleBudget {
    fn admit(&self, n: usize, candidates: u128) -> Result<()> {
        if n > self.max_n {
            return Err(param("n", format!("oracle limited to n <= {}, got {n}", self.max_n)));
        }
        if candidates > self.max_candidates {
            return Err(Error::BudgetExceeded {
                needed: candidates,
                limit: self.max_candidates,
            });
        }
        Ok(())
    }
}

fn squared_distance(x: &OpinionProfile, i: usize, j: usize) -> f64 {
    (0..x.d()).map(|k| (x.get(i, k) - x.get(j, k)).powi(2)).sum()
}

/// Minimum of the bounded-confidence objective over symmetric binary
/// networks. With ordered summation the diagonal entries are free choices;
/// with edge summation only restriction-graph edges vary and the diagonal
/// is fixed to 1.
pub fn brute_hk_lambda(x: &OpinionProfile, spec: &HkModelSpec, budget: &OracleBudget) -> Result<(f64, NetworkMatrix)> {
    spec.validate(x.n())?;
    let n = x.n();
    let ordered = spec.convention() == SumConvention::OrderedWithSelf;
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        if ordered {
            slots.push((i, i));
        }
        for j in (i + 1)..n {
            if spec.allowed(i, j) {
                slots.push((i, j));
            }
        }
    }
    budget.admit(n, 1u128 << slots.len())?;

    // contribution of switching a slot on
    let gain: Vec<f64> = slots
        .iter()
        .map(|&(i, j)| {
            let e = spec.confidence.bound(i, j);
            let c = spec.weight(i, j) * (squared_distance(x, i, j) - e * e);
            if ordered && i != j {
                2.0 * c
            } else if ordered || i != j {
                c
            } else {
                0.0
            }
        })
        .collect();

    let mut best = (f64::INFINITY, 0u64);
    for mask in 0..(1u64 << slots.len()) {
        let v: f64 = (0..slots.len()).filter(|&s| mask >> s & 1 == 1).map(|s| gain[s]).sum();
        if v < best.0 {
            best = (v, mask);
        }
    }
    let mut m = if ordered { DMatrix::zeros(n, n) } else { DMatrix::identity(n, n) };
    for (s, &(i, j)) in slots.iter().enumerate() {
        if best.1 >> s & 1 == 1 {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
    }
    Ok((best.0, NetworkMatrix::new(m, NetworkFlags::new(true, true, true))?))
}

/// Lexicographic minimum of `sort(Σ_j λ_ij ‖x_i − x_j‖)` over networks that
/// select exactly one other agent per row.
pub fn brute_lex_network(x: &OpinionProfile, budget: &OracleBudget) -> Result<(LexValue, NetworkMatrix)> {
    let n = x.n();
    if n < 2 {
        return Err(Error::Precondition("selection networks need n >= 2".into()));
    }
    budget.admit(n, ((n - 1) as u128).pow(n as u32))?;

    let dist = |i: usize, j: usize| squared_distance(x, i, j).sqrt();
    let mut choice = vec![0usize; n];
    let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
    loop {
        let sel: Vec<usize> = choice.iter().enumerate().map(|(i, &c)| if c >= i { c + 1 } else { c }).collect();
        let mut value: Vec<f64> = sel.iter().enumerate().map(|(i, &j)| dist(i, j)).collect();
        value.sort_by(f64::total_cmp);
        let better = match &best {
            None => true,
            Some((b, _)) => lex_compare_slices(&value, b, 0.0)? == Ordering::Less,
        };
        if better {
            best = Some((value, sel));
        }
        // odometer over (n − 1)^n choices
        let mut k = 0;
        while k < n {
            choice[k] += 1;
            if choice[k] < n - 1 {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    let (value, sel) = best.expect("at least one candidate");
    let net = NetworkMatrix::from_fn(n, NetworkFlags::new(false, true, false), |i, j| if sel[i] == j { 1.0 } else { 0.0 })?;
    Ok((LexValue::from_sorted(value)?, net))
}

/// Cheapest connected spanning edge set under symmetric nonnegative
/// weights, each unordered edge counted once. Returns the cost and the
/// sorted edges `(i, j)`, `i < j`.
pub fn brute_connected_subgraph(weights: &DMatrix<f64>, budget: &OracleBudget) -> Result<(f64, Vec<(usize, usize)>)> {
    let n = weights.nrows();
    if weights.ncols() != n {
        return Err(param("weights", "must be square"));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = weights[(i, j)];
            if !(w >= 0.0) || w != weights[(j, i)] {
                return Err(param("weights", format!("entry ({i}, {j}) must be symmetric and nonnegative")));
            }
            pairs.push((i, j));
        }
    }
    budget.admit(n, 1u128 << pairs.len())?;

    let mut best: Option<(f64, u64)> = None;
    for mask in 0..(1u64 << pairs.len()) {
        let on = || (0..pairs.len()).filter(move |&s| mask >> s & 1 == 1);
        if on().count() + 1 < n {
            continue;
        }
        let mut uf = UnionFind::<usize>::new(n);
        let mut components = n;
        for s in on() {
            if uf.union(pairs[s].0, pairs[s].1) {
                components -= 1;
            }
        }
        if components > 1 {
            continue;
        }
        let cost: f64 = on().map(|s| weights[pairs[s]]).sum();
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, mask));
        }
    }
    let (cost, mask) = best.ok_or_else(|| Error::Precondition("no agents".into()))?;
    let edges = (0..pairs.len()).filter(|&s| mask >> s & 1 == 1).map(|s| pairs[s]).collect();
    Ok((cost, edges))
}
