//! Batch comparison of the network minimisers against the brute-force
//! oracles.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use switchnet::hk::{hk_lambda_minimizer, hk_objective, HkModelSpec};
use switchnet::lex::{lex_compare, LexValue};
use switchnet::nearest_neighbor::nn_network;
use switchnet::oracles::{brute_connected_subgraph, brute_hk_lambda, brute_lex_network, OracleBudget};
use switchnet::rng::par_trials;
use switchnet::stackelberg::mst_edges;
use switchnet::{OpinionProfile, RngStream};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    pub hk_mismatches: usize,
    pub nn_mismatches: usize,
    pub mst_mismatches: usize,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.hk_mismatches + self.nn_mismatches + self.mst_mismatches == 0
    }
}

/// Opinions on the grid `k / 16` in `[0, 1]`, so objective values are exact.
fn grid_profile(rng: &mut RngStream, n: usize, d: usize) -> OpinionProfile {
    OpinionProfile::new(DMatrix::from_fn(n, d, |_, _| rng.gen_range(0..=16) as f64 / 16.0))
        .expect("grid values are finite")
}

/// Compares `hk_lambda_minimizer`, `nn_network` and the minimum spanning
/// tree against exhaustive enumeration on `instances` random profiles with
/// `n` agents.
pub fn oracle_check(n: usize, instances: usize, seed: u64) -> Result<OracleReport> {
    let budget = OracleBudget::default();
    if n < 2 || n > budget.max_n {
        return Err(invalid("--n", format!("must lie in [2, {}], got {n}", budget.max_n)));
    }
    let outcomes = par_trials(seed, instances, |_, mut rng| -> Result<[bool; 3]> {
        let d = rng.gen_range(1..=2);
        let x = grid_profile(&mut rng, n, d);

        let spec = HkModelSpec::homogeneous([0.25, 0.5, 0.75, 1.0][rng.gen_range(0..4)]);
        let net = hk_lambda_minimizer(&x, &spec)?;
        let (best, _) = brute_hk_lambda(&x, &spec, &budget)?;
        let hk = (hk_objective(&x, &net, &spec) - best).abs() <= 1e-12;

        let sel = nn_network(&x)?;
        let induced: Vec<f64> = (0..n).map(|i| (0..n).map(|j| sel.get(i, j) * x.dist(i, j)).sum()).collect();
        let (best_lex, _) = brute_lex_network(&x, &budget)?;
        let nn = lex_compare(&LexValue::from_unsorted(induced)?, &best_lex)? == Ordering::Equal;

        let w = DMatrix::from_fn(n, n, |i, j| x.dist2(i, j));
        let (best_tree, _) = brute_connected_subgraph(&w, &budget)?;
        let tree: f64 = mst_edges(&x).iter().map(|&(i, j)| w[(i, j)]).sum();
        let mst = (tree - best_tree).abs() <= 1e-12;
        Ok([hk, nn, mst])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let misses = |k: usize| outcomes.iter().filter(|o| !o[k]).count();
    Ok(OracleReport {
        n,
        instances,
        seed,
        hk_mismatches: misses(0),
        nn_mismatches: misses(1),
        mst_mismatches: misses(2),
    })
}
