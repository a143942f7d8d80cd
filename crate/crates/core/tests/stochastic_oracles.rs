mod common;

use acr_core::qsd::{expected_absorption_time_sis, total_variation, BirthDeathChain};
use acr_core::stochastic::{
    build_generator, enumerate_state_space, estimate_absorption_time, estimate_qsd_yaglom, estimate_time_marginal,
    evolve, ssa_trajectory, InitialDistribution, Limits, MassAction, SsaOptions, StochError,
};
use nalgebra::{DMatrix, DVector};

fn sis_prop(alpha: f64, beta: f64) -> (acr_core::ReactionNetwork, MassAction) {
    let net = common::sis(alpha, beta);
    let p = MassAction::with_scale(&net, &net.rates(), 1.0);
    (net, p)
}

#[test]
fn sis_state_space_is_a_line() {
    let (net, p) = sis_prop(1.0, 25.0);
    let m = 12;
    let s = enumerate_state_space(&net, &p, &[0, m], &Limits::default()).unwrap();
    assert_eq!(s.len(), m as usize + 1);
    let abs = s.absorbing_states();
    assert_eq!(abs.len(), 1);
    assert_eq!(s.state(abs[0]), &[m, 0]);
}

#[test]
fn envz_smallest_space_has_a_single_sink() {
    let net = common::load("envz_ompr.crn");
    let p = MassAction::new(&net);
    let x0 = acr_core::presets::envz_one_away(&net, 1, 2).unwrap();
    let s = enumerate_state_space(&net, &p, &x0, &Limits::default()).unwrap();
    let abs = s.absorbing_states();
    assert_eq!(abs.len(), 1);
    let mut sink = vec![0u32; net.m()];
    sink[net.species_index("X_p").unwrap()] = 1;
    sink[net.species_index("Y_p").unwrap()] = 2;
    assert_eq!(s.state(abs[0]), &sink[..]);
}

#[test]
fn noncons_needs_a_cap() {
    let net = common::load("noncons.crn");
    let p = MassAction::new(&net);
    assert_eq!(
        enumerate_state_space(&net, &p, &[0, 1], &Limits::default()).unwrap_err(),
        StochError::PossiblyInfinite
    );
    let capped = Limits {
        cap: Some(vec![10, 11]),
        ..Limits::default()
    };
    assert_eq!(enumerate_state_space(&net, &p, &[0, 1], &capped).unwrap().len(), 11);
}

#[test]
fn sis_generator_m2_by_hand() {
    let (alpha, beta) = (1.3, 0.7);
    let (net, p) = sis_prop(alpha, beta);
    let s = enumerate_state_space(&net, &p, &[0, 2], &Limits::default()).unwrap();
    let g = build_generator(&s, &p);
    let a = g.full.to_dense();
    // X_B = i; lambda(i) = alpha i (2 - i), mu(i) = beta i
    let mut want = DMatrix::zeros(3, 3);
    want[(2, 1)] = 2.0 * beta;
    want[(2, 2)] = -2.0 * beta;
    want[(1, 2)] = alpha;
    want[(1, 0)] = beta;
    want[(1, 1)] = -(alpha + beta);
    for i in 0..3 {
        for j in 0..3 {
            let (ki, kj) = (
                s.index_of(&[2 - i as u32, i as u32]).unwrap(),
                s.index_of(&[2 - j as u32, j as u32]).unwrap(),
            );
            assert!((a[(ki, kj)] - want[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn time_marginal_matches_matrix_exponential() {
    let (net, p) = sis_prop(1.0, 2.0);
    let m = 5u32;
    let x0 = [m - 2, 2];
    let s = enumerate_state_space(&net, &p, &x0, &Limits::default()).unwrap();
    let g = build_generator(&s, &p);
    let t = 10.0;
    let a = g.full.to_dense();
    let mut p0 = DVector::zeros(s.len());
    p0[s.index_of(&x0).unwrap()] = 1.0;
    let pt = (a.transpose() * t).exp() * p0;
    let emp = estimate_time_marginal(&p, &x0.to_vec().into(), t, 100_000, 42, &SsaOptions::default()).unwrap();
    let emp_vec: Vec<f64> = (0..s.len()).map(|k| emp.probability(s.state(k))).collect();
    let tv = total_variation(pt.as_slice(), &emp_vec);
    assert!(tv < 0.02, "TV {}", tv);
    // uniformization agrees with expm to high accuracy
    let uni = evolve(
        &g.full,
        &{
            let mut v = vec![0.0; s.len()];
            v[s.index_of(&x0).unwrap()] = 1.0;
            v
        },
        t,
    );
    assert!(total_variation(pt.as_slice(), &uni) < 1e-10);
}

#[test]
fn time_zero_marginal_is_the_start() {
    let (_, p) = sis_prop(1.0, 25.0);
    let m = estimate_time_marginal(&p, &vec![3, 4].into(), 0.0, 100, 1, &SsaOptions::default()).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!(m.probability(&[3, 4]), 1.0);
}

#[test]
fn trajectories_follow_reaction_vectors_and_absorb() {
    let (net, p) = sis_prop(1.0, 3.0);
    for seed in 0..50 {
        let tr = ssa_trajectory(&p, &[4, 2], &SsaOptions::default(), seed, 0);
        assert_eq!(tr.states.last().unwrap(), &vec![6, 0]);
        assert!(tr.absorbed_at.is_some());
        for w in tr.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        for (k, &i) in tr.reactions.iter().enumerate() {
            let step: Vec<i64> = tr.states[k + 1]
                .iter()
                .zip(&tr.states[k])
                .map(|(&a, &b)| a as i64 - b as i64)
                .collect();
            assert_eq!(step, net.reaction_vector(i));
        }
    }
}

#[test]
fn seed_replay_is_identical() {
    let net = common::load("envz_ompr.crn");
    let p = MassAction::new(&net);
    let x0 = acr_core::presets::envz_one_away(&net, 1, 10).unwrap();
    let a = ssa_trajectory(&p, &x0, &SsaOptions::default(), 99, 3);
    let b = ssa_trajectory(&p, &x0, &SsaOptions::default(), 99, 3);
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
}

#[test]
fn sis_monte_carlo_matches_closed_form() {
    let (_, p) = sis_prop(1.0, 25.0);
    for m in [10u32, 25, 35] {
        let est = estimate_absorption_time(&p, &vec![m - 1, 1].into(), 4000, 8, &SsaOptions::default()).unwrap();
        let exact = expected_absorption_time_sis(m as usize, 1.0, 25.0, 1).unwrap();
        assert!(
            (est.mean - exact).abs() < 3.5 * est.std_err,
            "M={} {} vs {}",
            m,
            est.mean,
            exact
        );
        assert!((est.std_err - est.std_dev / (est.n as f64).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn yaglom_from_the_qsd_is_unchanged() {
    let (m, alpha, beta) = (30usize, 1.0, 10.0);
    let (_, p) = sis_prop(alpha, beta);
    let q = BirthDeathChain::sis(m, alpha, beta).qsd(1e-10).unwrap();
    let init = InitialDistribution::Weighted(
        q.distribution
            .iter()
            .enumerate()
            .map(|(k, &w)| (vec![(m - k - 1) as u32, (k + 1) as u32], w))
            .collect(),
    );
    let mut exact = vec![0.0];
    exact.extend(&q.distribution);
    for t in [0.05, 0.5] {
        let y = estimate_qsd_yaglom(&p, &init, t, 40_000, 17, &SsaOptions::default()).unwrap();
        let tv = total_variation(&y.marginal.species(1), &exact);
        assert!(tv < 0.03, "t={} TV {}", t, tv);
        // survival from the QSD is exp(theta t)
        let surv = y.survivors as f64 / y.n as f64;
        let want = (q.theta * t).exp();
        assert!((surv - want).abs() < 4.0 * (want * (1.0 - want) / y.n as f64).sqrt() + 1e-12);
    }
}

#[test]
fn yaglom_reports_all_absorbed() {
    let (_, p) = sis_prop(1.0, 50.0);
    let r = estimate_qsd_yaglom(&p, &vec![2, 1].into(), 1e3, 20, 1, &SsaOptions::default());
    assert_eq!(r.unwrap_err(), StochError::AllAbsorbed);
}
