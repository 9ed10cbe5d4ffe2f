use super::*;
use crate::bcd::{certify_monotone, run, RunConfig};
use crate::trajectory::TrajectoryRecord;

fn scalars(v: &[f64]) -> OpinionProfile {
    OpinionProfile::from_scalars(v).unwrap()
}

fn edges(net: &NetworkMatrix) -> Vec<(usize, usize)> {
    net.undirected_edges()
}

#[test]
fn neighbor_network_examples() {
    let spec = HkModelSpec::homogeneous(1.0);
    let net = neighbor_network(&scalars(&[0.0, 0.5, 2.0]), &spec).unwrap();
    assert_eq!(edges(&net), vec![(0, 1)]);
    assert!((0..3).all(|i| net.get(i, i) == 1.0));

    let same = neighbor_network(&scalars(&[1.0, 1.0, 1.0]), &spec).unwrap();
    assert_eq!(edges(&same).len(), 3);

    let tiny = neighbor_network(&scalars(&[0.0, 0.5, 2.0]), &HkModelSpec::homogeneous(1e-300)).unwrap();
    assert_eq!(tiny, NetworkMatrix::identity(3));

    // boundary distance counts as a neighbour
    let edge = neighbor_network(&scalars(&[0.0, 1.0]), &spec).unwrap();
    assert_eq!(edges(&edge), vec![(0, 1)]);
}

#[test]
fn minimizer_matches_neighbor_network() {
    let spec = HkModelSpec::homogeneous(1.0);
    for x in [[0.0, 0.5, 2.0], [1.0, 1.0, 1.0], [0.0, 1.0, 2.0]] {
        let x = scalars(&x);
        assert_eq!(hk_lambda_minimizer(&x, &spec).unwrap(), neighbor_network(&x, &spec).unwrap());
    }
}

#[test]
fn edge_heterogeneous_example() {
    let mut b = DMatrix::from_element(3, 3, 0.1);
    b[(0, 1)] = 3.0;
    b[(1, 0)] = 3.0;
    let spec = HkModelSpec::edge_heterogeneous(b).unwrap();
    let x = scalars(&[0.0, 1.0, 2.0]);
    assert_eq!(edges(&hk_lambda_minimizer(&x, &spec).unwrap()), vec![(0, 1)]);
    assert_eq!(edges(&neighbor_network(&x, &spec).unwrap()), vec![(0, 1)]);
}

#[test]
fn step_examples() {
    let spec = HkModelSpec::homogeneous(1.0);
    let x = scalars(&[0.0, 0.5, 2.0]);
    let net = neighbor_network(&x, &spec).unwrap();
    assert_eq!(hk_step(&x, &net, &spec).unwrap(), scalars(&[0.25, 0.25, 2.0]));
    assert_eq!(hk_step(&x, &NetworkMatrix::identity(3), &spec).unwrap(), x);

    let y = scalars(&[0.0, 1.0, 2.0]);
    let net = neighbor_network(&y, &spec).unwrap();
    assert_eq!(hk_step(&y, &net, &spec).unwrap(), scalars(&[0.5, 1.0, 1.5]));

    assert!(hk_step(&x, &NetworkMatrix::zeros(3), &spec).is_err());
}

#[test]
fn lyapunov_examples() {
    let spec = HkModelSpec::homogeneous(1.0);
    assert_eq!(hk_lyapunov(&scalars(&[0.0, 0.5, 2.0]), &spec), -4.5);
    assert_eq!(hk_lyapunov(&scalars(&[0.25, 0.25, 2.0]), &spec), -5.0);

    let far = HkModelSpec::homogeneous(0.5).restricted_to(RestrictionGraph::new(3, [(0, 2), (1, 2)]).unwrap());
    assert_eq!(hk_lyapunov(&scalars(&[0.0, 5.0, 10.0]), &far), 0.0);
}

#[test]
fn lyapunov_equals_objective_at_minimizer() {
    let spec = HkModelSpec::homogeneous(1.0);
    let x = scalars(&[0.0, 0.3, 0.9, 2.5]);
    let net = hk_lambda_minimizer(&x, &spec).unwrap();
    assert!((hk_objective(&x, &net, &spec) - hk_lyapunov(&x, &spec)).abs() < 1e-12);
    let split = hk_potential(&x, &net, &spec) + hk_network_cost(&net, &spec);
    assert!((split - hk_objective(&x, &net, &spec)).abs() < 1e-12);
}

#[test]
fn drift_certificate_examples() {
    let spec = HkModelSpec::homogeneous(1.0);
    let d = drift_certificate_restricted(&scalars(&[0.0, 0.5, 2.0]), &spec).unwrap();
    assert_eq!(d, DriftPair { lhs: 0.5, rhs: 0.125 });
    assert!(d.inequality_holds(1e-9));

    let fixed = drift_certificate_restricted(&scalars(&[3.0, 3.0]), &spec).unwrap();
    assert_eq!(fixed, DriftPair { lhs: 0.0, rhs: 0.0 });

    let zo = HkModelSpec::zero_one(ZeroOneSets::new(2, [0]).unwrap());
    assert!(drift_certificate_restricted(&scalars(&[0.0, 1.0]), &zo).is_err());
}

#[test]
fn run_example_freezes_cluster() {
    let mut model = HkModel::new(HkModelSpec::homogeneous(1.0), 3).unwrap();
    let traj = run(&mut model, &scalars(&[0.0, 0.5, 2.0]), &RunConfig::default()).unwrap();
    assert_eq!(traj.status, crate::trajectory::RunStatus::Converged);
    for s in &traj.steps()[1..] {
        assert_eq!(s.state, scalars(&[0.25, 0.25, 2.0]));
    }
    assert!(certify_monotone(&traj, &model, 1e-9).unwrap().ok);
}

fn closing_example() -> (OpinionProfile, ZeroOnePartition) {
    (scalars(&[-15.0 / 16.0, 0.0, 1.0]), ZeroOnePartition::new(3, [0, 1]).unwrap())
}

#[test]
fn zero_one_closing_example() {
    let (x, part) = closing_example();
    assert_eq!(zero_one_step(&x, &part).unwrap(), scalars(&[-15.0 / 16.0, 0.0, 0.5]));

    let mut model = ZeroOneModel::new(part).unwrap();
    let traj = run(&mut model, &x, &RunConfig { max_iters: 12, ..Default::default() }).unwrap();
    // λ(4) first reaches agent 1, so the halving pattern holds up to t = 4
    for s in &traj.steps()[..=4] {
        assert_eq!(s.state.get(2, 0), 0.5f64.powi(s.t as i32));
    }
    assert_eq!(traj.network_changes().first(), Some(&4));
    assert!(certify_monotone(&traj, &model, 1e-9).unwrap().ok);
}

#[test]
fn zero_one_lyapunov_drift_shrinks_geometrically() {
    let (x, part) = closing_example();
    let mut model = ZeroOneModel::new(part).unwrap();
    let traj = run(&mut model, &x, &RunConfig { max_iters: 4, ..Default::default() }).unwrap();
    let spec = model.partition().spec();
    let v: Vec<f64> = traj.steps().iter().map(|s| hk_lyapunov(&s.state, &spec)).collect();
    let drops: Vec<f64> = v.windows(2).map(|w| w[0] - w[1]).collect();
    for w in drops.windows(2) {
        assert!(w[1] > 0.0);
        assert!((w[1] / w[0] - 0.25).abs() < 1e-12);
    }
}

#[test]
fn zero_one_without_movers_is_identity() {
    let x = scalars(&[0.0, 0.4, 3.0]);
    let part = ZeroOnePartition::new(3, [0, 1, 2]).unwrap();
    assert_eq!(zero_one_step(&x, &part).unwrap(), x);
    let d = zero_one_drift_identity(&x, &part).unwrap();
    assert_eq!((d.lhs, d.rhs), (0.0, 0.0));
}

#[test]
fn zero_one_identity_on_closing_example() {
    let (x, part) = closing_example();
    let d = zero_one_drift_identity(&x, &part).unwrap();
    // L has the single edge {1, 2}; x1 goes 1 → 1/2, so both sides are 3/4
    assert!(d.identity_holds(1e-12));
    assert!((d.lhs - 0.75).abs() < 1e-12);
    let blocks = part.blocks(&x).unwrap();
    assert!(blocks.q_is_positive_definite());
    assert_eq!(blocks.d1[(0, 0)], 2.0);
    assert_eq!(blocks.m.ncols(), 2);
}

#[test]
fn freeze_on_constant_trajectory() {
    let x = scalars(&[0.0, 0.5]);
    let net = neighbor_network(&x, &HkModelSpec::homogeneous(1.0)).unwrap();
    let traj = TrajectoryRecord::from_states(vec![(x.clone(), net.clone()); 3]).unwrap();
    let r = detect_network_freeze(&traj, 0.01).unwrap();
    assert_eq!(r.freeze_index, Some(0));
    assert_eq!(r.change_after, None);
    assert!(r.tail_certified && r.holds());
}

#[test]
fn freeze_flags_injected_late_switch() {
    let x = scalars(&[0.0, 0.5]);
    let a = NetworkMatrix::identity(2);
    let b = neighbor_network(&x, &HkModelSpec::homogeneous(1.0)).unwrap();
    let traj = TrajectoryRecord::from_states(vec![(x.clone(), a.clone()), (x.clone(), a), (x.clone(), b)]).unwrap();
    let r = detect_network_freeze(&traj, 0.01).unwrap();
    assert_eq!(r.freeze_index, Some(0));
    assert_eq!(r.change_after, Some(2));
    assert!(!r.holds());
    assert!(detect_network_freeze(&traj, 0.0).is_err());
}

#[test]
fn geometric_ratio_of_halving_sequence() {
    let net = NetworkMatrix::identity(1);
    let states = (0..8).map(|t| (scalars(&[0.5f64.powi(t)]), net.clone())).collect();
    let traj = TrajectoryRecord::from_states(states).unwrap();
    // distances to the last point: 2^-t − 2^-7
    let r = geometric_tail_ratio(&traj, 0).unwrap();
    assert!(r > 0.0 && r < 1.0);
    let still = TrajectoryRecord::from_states(vec![(scalars(&[1.0]), net.clone()); 4]).unwrap();
    assert_eq!(geometric_tail_ratio(&still, 0).unwrap(), 0.0);
}

#[test]
fn restricted_model_rejects_off_graph_edges() {
    let g = RestrictionGraph::new(3, [(0, 1)]).unwrap();
    let model = HkModel::new(HkModelSpec::homogeneous(1.0).restricted_to(g), 3).unwrap();
    let x = scalars(&[0.0, 0.1, 0.2]);
    let net = model.network_update(&x).unwrap();
    assert_eq!(edges(&net), vec![(0, 1)]);
    let full = neighbor_network(&x, &HkModelSpec::homogeneous(1.0)).unwrap();
    assert!(model.check_network(&full).is_err());
}
