//! Runs a scenario, certifies it and writes the output files.

use std::path::Path;
use std::time::Instant;

use switchnet::bcd::{certify_monotone, run, RunConfig};
use switchnet::hk::{
    detect_network_freeze, drift_certificate_restricted, geometric_tail_ratio, zero_one_drift_identity, HkModel,
    HkModelSpec,
};
use switchnet::lex::lex_le_tol;
use switchnet::nearest_neighbor::{
    async_drift_check, async_time_bound, lex_lyapunov, run_to_eps_equilibrium_with, sync_drift_check, sync_time_bound,
};
use switchnet::rng::par_trials;
use switchnet::stackelberg::{run_stackelberg, LeaderStrategy};
use switchnet::{NetworkMatrix, OpinionProfile, OrderedValue, RunStatus, TrajectoryRecord};

use crate::error::{invalid, CliError, Result};
use crate::output::{format_value, lyapunov_csv, trajectory_csv, write_file};
use crate::report::{BoundReport, Check, RunSummary, Status};
use crate::scenario::{ModelId, Scenario};

/// Tolerance of every certificate.
pub const CERT_TOL: f64 = 1e-9;

/// Consensus threshold on the follower diameter.
const CONSENSUS_DIAMETER: f64 = 1e-6;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const LYAPUNOV_FILE: &str = "lyapunov.csv";
pub const CERTIFICATE_FILE: &str = "certificate.json";

/// Everything a run produces; the recorded path is that of trial 0.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub states: Vec<OpinionProfile>,
    pub values: Vec<OrderedValue>,
    pub summary: RunSummary,
}

struct Trial {
    states: Vec<OpinionProfile>,
    values: Vec<OrderedValue>,
    converged: bool,
    iterations: usize,
}

struct Outcome {
    trial0: Trial,
    all_converged: bool,
    checks: Vec<Check>,
}

pub fn simulate(s: &Scenario) -> Result<Simulation> {
    s.validate()?;
    let started = Instant::now();
    let outcome = match s.model {
        m if m.is_hk() => simulate_hk(s)?,
        m if m.is_nn() => simulate_nn(s)?,
        _ => simulate_game(s)?,
    };
    let Outcome {
        trial0,
        all_converged,
        checks,
    } = outcome;
    let summary = RunSummary {
        model: s.model.to_string(),
        seed: s.run.seed,
        stochastic: s.is_stochastic(),
        trials: s.run.trials,
        status: if all_converged { Status::Converged } else { Status::MaxIters },
        iterations: trial0.iterations,
        final_lyapunov: trial0.values.last().map(format_value).unwrap_or_default(),
        checks,
        elapsed: started.elapsed(),
    };
    Ok(Simulation {
        states: trial0.states,
        values: trial0.values,
        summary,
    })
}

/// Simulates `s` and writes `trajectory.csv`, `lyapunov.csv` and
/// `certificate.json` into `out_dir`, creating it if needed.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<RunSummary> {
    let sim = simulate(s)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(&out_dir.join(TRAJECTORY_FILE), &trajectory_csv(&sim.states))?;
    write_file(&out_dir.join(LYAPUNOV_FILE), &lyapunov_csv(&sim.values))?;
    let mut json = serde_json::to_string_pretty(&sim.summary).map_err(|e| CliError::Emit(e.to_string()))?;
    json.push('\n');
    write_file(&out_dir.join(CERTIFICATE_FILE), &json)?;
    Ok(sim.summary)
}

/// The bound checks of a simulation: time bounds for nearest-neighbour
/// models, freeze and post-switch contraction for HK models. Games have none.
pub fn verify_bounds(s: &Scenario) -> Result<BoundReport> {
    let sim = simulate(s)?;
    Ok(BoundReport {
        model: sim.summary.model,
        seed: sim.summary.seed,
        trials: sim.summary.trials,
        bounds: sim.summary.checks.into_iter().filter(Check::is_bound).collect(),
    })
}

fn trials<T: Send>(s: &Scenario, trial: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    par_trials(s.run.seed, s.run.trials, |k, _| trial(k)).into_iter().collect()
}

/// Check that passes when every trial's `value` is at most `limit`; reports
/// the worst value.
fn worst_case(name: &str, values: impl IntoIterator<Item = f64>, limit: f64) -> Check {
    let worst = values.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Check::new(name, worst <= limit).measured(worst).limit(limit)
}

fn all_trials(name: &str, oks: impl IntoIterator<Item = bool>) -> Check {
    let failed: Vec<usize> = oks.into_iter().enumerate().filter(|(_, ok)| !ok).map(|(k, _)| k).collect();
    match failed.first() {
        None => Check::new(name, true),
        Some(k) => Check::new(name, false).note(format!("{} trial(s) failed, first is trial {k}", failed.len())),
    }
}

struct HkTrial {
    trial: Trial,
    monotone_increase: f64,
    drift_gap: Option<f64>,
    freeze: Option<(bool, bool)>,
    rate: f64,
}

fn simulate_hk(s: &Scenario) -> Result<Outcome> {
    let (spec, part) = s.hk_spec()?;
    let uniform_symmetric = part.is_none() && spec.confidence.uniform_bound().is_some();
    let cfg = RunConfig {
        max_iters: s.run.max_iters,
        tol: s.run.tol,
        record_lyapunov: true,
    };

    let results = trials(s, |k| {
        let x0 = s.profile(k)?;
        let (traj, report) = match &part {
            Some(p) => {
                let mut model = switchnet::hk::ZeroOneModel::new(p.clone())?;
                let traj = run(&mut model, &x0, &cfg)?;
                let report = certify_monotone(&traj, &model, CERT_TOL)?;
                (traj, report)
            }
            None => {
                let mut model = HkModel::new(spec.clone(), s.n)?;
                let traj = run(&mut model, &x0, &cfg)?;
                let report = certify_monotone(&traj, &model, CERT_TOL)?;
                (traj, report)
            }
        };
        let body = &traj.steps()[..traj.len() - 1];

        let drift_gap = if let Some(p) = &part {
            let mut gap: f64 = 0.0;
            for st in body {
                let pair = zero_one_drift_identity(&st.state, p)?;
                gap = gap.max((pair.lhs - pair.rhs).abs());
            }
            Some(gap)
        } else if uniform_symmetric {
            let mut shortfall = f64::NEG_INFINITY;
            for st in body {
                let pair = drift_certificate_restricted(&st.state, &spec)?;
                shortfall = shortfall.max(pair.rhs - pair.lhs);
            }
            Some(shortfall.max(0.0))
        } else {
            None
        };

        let freeze = match spec.confidence.uniform_bound() {
            Some(eps) if uniform_symmetric => {
                // the freeze threshold is stated for a unit bound
                let delta = eps / (2.0 * (s.n * s.n) as f64);
                let r = detect_network_freeze(&traj, delta)?;
                Some((r.holds(), r.tail_certified))
            }
            _ => None,
        };
        let from = traj.network_changes().last().copied().unwrap_or(0);
        let rate = geometric_tail_ratio(&traj, from)?;

        Ok(HkTrial {
            trial: hk_trial(&traj, k == 0),
            monotone_increase: report.max_increase.unwrap_or(0.0),
            drift_gap,
            freeze,
            rate,
        })
    })?;

    let mut checks = vec![worst_case("monotone", results.iter().map(|r| r.monotone_increase), CERT_TOL)];
    if results[0].drift_gap.is_some() {
        let name = if part.is_some() { "drift_identity" } else { "drift" };
        checks.push(worst_case(name, results.iter().filter_map(|r| r.drift_gap), CERT_TOL));
    }
    if results[0].freeze.is_some() {
        let mut c = all_trials("freeze", results.iter().filter_map(|r| r.freeze).map(|f| f.0));
        if results.iter().filter_map(|r| r.freeze).any(|f| !f.1) {
            c = c.note("some recorded tails stop before the movement tolerance");
        }
        checks.push(c);
    }
    let rate = results.iter().map(|r| r.rate).fold(0.0, f64::max);
    checks.push(Check::new("geometric_rate", rate < 1.0).measured(rate).limit(1.0));

    Ok(finish(results.into_iter().map(|r| r.trial).collect(), checks))
}

fn hk_trial(traj: &TrajectoryRecord, keep: bool) -> Trial {
    let (states, values) = if keep {
        let steps = traj.steps();
        (
            steps.iter().map(|st| st.state.clone()).collect(),
            steps.iter().filter_map(|st| st.lyapunov.clone()).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Trial {
        states,
        values,
        converged: traj.status == RunStatus::Converged,
        iterations: traj.iterations(),
    }
}

fn finish(mut trials: Vec<Trial>, checks: Vec<Check>) -> Outcome {
    let all_converged = trials.iter().all(|t| t.converged);
    Outcome {
        trial0: trials.swap_remove(0),
        all_converged,
        checks,
    }
}

struct NnTrial {
    trial: Trial,
    lex_ok: bool,
    drift_shortfall: f64,
    t_eps: Option<usize>,
    bound: f64,
}

fn simulate_nn(s: &Scenario) -> Result<Outcome> {
    let results = trials(s, |k| {
        let spec = s.nn_spec(k)?;
        let x0 = s.profile(k)?;
        let d0 = x0.diameter();
        let eps = s.run.eq_eps.unwrap_or(0.05 * d0).max(f64::MIN_POSITIVE);
        let bound = match spec.uniform_mu() {
            Some(mu) if s.model == ModelId::NnSync => sync_time_bound(s.n, d0, mu, eps),
            _ => async_time_bound(s.n, d0, spec.mu_max(), eps),
        };

        let mut states = vec![x0.clone()];
        let mut lex_ok = true;
        let mut drift_shortfall = f64::NEG_INFINITY;
        let report = run_to_eps_equilibrium_with(&x0, eps, &spec, s.run.max_iters, |cur, next, agent| {
            if k == 0 {
                states.push(next.clone());
            }
            let (before, after) = (lex_lyapunov(cur)?, lex_lyapunov(next)?);
            lex_ok &= lex_le_tol(after.entries(), before.entries(), CERT_TOL)?;
            let pair = match agent {
                Some(l) => async_drift_check(cur, l, &spec)?,
                None => sync_drift_check(cur, &spec)?,
            };
            drift_shortfall = drift_shortfall.max(pair.rhs - pair.lhs);
            Ok(())
        })?;

        let values = if k == 0 {
            states
                .iter()
                .map(|x| lex_lyapunov(x).map(OrderedValue::Lex))
                .collect::<switchnet::Result<_>>()?
        } else {
            states.clear();
            Vec::new()
        };
        Ok(NnTrial {
            trial: Trial {
                states,
                values,
                converged: report.reached(),
                iterations: report.max_distance.len() - 1,
            },
            lex_ok,
            drift_shortfall: drift_shortfall.max(0.0),
            t_eps: report.t_eps,
            bound,
        })
    })?;

    let mut checks = vec![
        all_trials("lex_monotone", results.iter().map(|r| r.lex_ok)),
        worst_case("drift", results.iter().map(|r| r.drift_shortfall), CERT_TOL),
    ];
    checks.push(time_bound_check(&results, s.run.max_iters));
    Ok(finish(results.into_iter().map(|r| r.trial).collect(), checks))
}

/// Mean `t_ε` against the mean bound. A trial that stopped on the iteration
/// cap only counts against the bound if the cap was at least its bound.
fn time_bound_check(results: &[NnTrial], max_iters: usize) -> Check {
    let count = results.len() as f64;
    let mean_bound = results.iter().map(|r| r.bound).sum::<f64>() / count;
    let proven_late = results
        .iter()
        .filter(|r| r.t_eps.is_none() && max_iters as f64 >= r.bound)
        .count();
    if results.iter().all(|r| r.t_eps.is_some()) {
        let mean_t = results.iter().filter_map(|r| r.t_eps).sum::<usize>() as f64 / count;
        Check::new("time_bound", mean_t <= mean_bound).measured(mean_t).limit(mean_bound)
    } else if proven_late > 0 {
        Check::new("time_bound", false)
            .limit(mean_bound)
            .note(format!("{proven_late} trial(s) ran past their bound without reaching equilibrium"))
    } else {
        Check::new("time_bound", true)
            .limit(mean_bound)
            .note("inconclusive: some trials hit max_iters before their bound")
    }
}

struct GameTrial {
    trial: Trial,
    cost_increase: f64,
    chain_ok: bool,
    hk_equal: Option<bool>,
    trees: Option<bool>,
    diameter: f64,
}

fn simulate_game(s: &Scenario) -> Result<Outcome> {
    let g = s.game()?;
    let strategy = LeaderStrategy::default_for(&g).ok_or_else(|| invalid("model", "no leader strategy for this game"))?;
    let results = trials(s, |k| {
        let x0 = s.profile(k)?;
        let trace = run_stackelberg(&x0, &g, strategy, s.run.max_iters, s.run.tol)?;
        let cost_increase = trace
            .steps
            .windows(2)
            .map(|w| w[1].cost - w[0].cost)
            .fold(0.0, f64::max);

        // with a follower box the response is clamped, so HK is no reference
        let hk_equal = match (s.model, s.params.eps) {
            (ModelId::StackelbergEx1, Some(eps)) if s.params.follower_box.is_none() => {
                let mut model = HkModel::new(HkModelSpec::homogeneous(eps), s.n)?;
                let cfg = RunConfig {
                    max_iters: s.run.max_iters,
                    tol: s.run.tol,
                    record_lyapunov: false,
                };
                let traj = run(&mut model, &x0, &cfg)?;
                Some(
                    traj.len() == trace.steps.len()
                        && traj
                            .steps()
                            .iter()
                            .zip(&trace.steps)
                            .all(|(a, b)| a.state == b.state && a.network == b.leader),
                )
            }
            _ => None,
        };
        let trees = (s.model == ModelId::StackelbergEx2).then(|| {
            trace.steps.iter().all(|st| st.leader.is_connected()) && trace.visited.iter().all(is_spanning_tree)
        });

        let keep = k == 0;
        Ok(GameTrial {
            trial: Trial {
                states: if keep { trace.steps.iter().map(|st| st.state.clone()).collect() } else { Vec::new() },
                values: if keep { trace.steps.iter().map(|st| OrderedValue::Scalar(st.cost)).collect() } else { Vec::new() },
                converged: trace.status == RunStatus::Converged,
                iterations: trace.steps.len() - 1,
            },
            cost_increase,
            chain_ok: trace.chain_holds(CERT_TOL),
            hk_equal,
            trees,
            diameter: if trace.status == RunStatus::Converged { trace.final_state().diameter() } else { 0.0 },
        })
    })?;

    let mut checks = vec![
        worst_case("cost_monotone", results.iter().map(|r| r.cost_increase), CERT_TOL),
        all_trials("cost_chain", results.iter().map(|r| r.chain_ok)),
    ];
    if results[0].hk_equal.is_some() {
        checks.push(all_trials("hk_equivalence", results.iter().filter_map(|r| r.hk_equal)));
    }
    if results[0].trees.is_some() {
        checks.push(all_trials("spanning_tree_leaders", results.iter().filter_map(|r| r.trees)));
        checks.push(worst_case("consensus", results.iter().map(|r| r.diameter), CONSENSUS_DIAMETER));
    }
    Ok(finish(results.into_iter().map(|r| r.trial).collect(), checks))
}

fn is_spanning_tree(net: &NetworkMatrix) -> bool {
    let off_diagonal = net.undirected_edges().iter().filter(|(i, j)| i != j).count();
    net.is_connected() && off_diagonal + 1 == net.n()
}
