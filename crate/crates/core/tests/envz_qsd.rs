mod common;

use acr_core::presets::envz_one_away;
use acr_core::qsd::{mean_absorption_times, qsd_exact, total_variation, tv_to_poisson, QsdError};
use acr_core::stochastic::{
    build_generator, enumerate_state_space, estimate_absorption_time, estimate_qsd_yaglom, evolve_conditioned,
    InitialDistribution, Limits, MassAction, SsaOptions, StateSpace, TransientBlock,
};
use acr_core::ReactionNetwork;

fn block(net: &ReactionNetwork, x0: &[u32]) -> (StateSpace, TransientBlock) {
    let p = MassAction::new(net);
    let s = enumerate_state_space(net, &p, x0, &Limits::default()).unwrap();
    let b = build_generator(&s, &p).transient_block();
    (s, b)
}

/// Marginal of species `j` of a distribution over the transient states.
fn marginal(s: &StateSpace, b: &TransientBlock, p: &[f64], j: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (&k, &w) in b.states.iter().zip(p) {
        let c = s.state(k)[j] as usize;
        if out.len() <= c {
            out.resize(c + 1, 0.0);
        }
        out[c] += w;
    }
    out
}

#[test]
fn qsd_mean_approaches_the_acr_value() {
    let net = common::load("envz_ompr.crn");
    let yp = net.species_index("Y_p").unwrap();
    let mut rows = Vec::new();
    for (x, y) in [(1, 35), (2, 70), (4, 140)] {
        let (s, b) = block(&net, &envz_one_away(&net, x, y).unwrap());
        let mut r = qsd_exact(&b, 1e-9).unwrap();
        r.attach_states(&s, &b);
        assert!(r.theta < 0.0);
        assert!(r.distribution.iter().all(|&p| p > 0.0));
        assert!((r.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        rows.push((r.mean(yp), tv_to_poisson(&r.marginals[yp], 25.0)));
    }
    assert!((rows[2].0 - 25.0).abs() < (rows[0].0 - 25.0).abs());
    assert!((rows[2].0 - 25.0).abs() < 0.15 * 25.0);
    assert!(rows[0].1 > rows[1].1 && rows[1].1 > rows[2].1, "{:?}", rows);
}

#[test]
fn absorption_from_the_qsd_is_exponential() {
    let net = common::load("envz_ompr.crn");
    let (_, b) = block(&net, &envz_one_away(&net, 1, 35).unwrap());
    let q = qsd_exact(&b, 1e-9).unwrap();
    let tau = mean_absorption_times(&b).unwrap();
    let mean: f64 = q.distribution.iter().zip(&tau).map(|(p, t)| p * t).sum();
    assert!((mean * -q.theta - 1.0).abs() < 1e-8, "{} vs {}", mean, -1.0 / q.theta);
}

#[test]
fn exact_times_match_monte_carlo() {
    let net = common::load("envz_ompr.crn");
    let p = MassAction::new(&net);
    let x0 = envz_one_away(&net, 1, 10).unwrap();
    let (s, b) = block(&net, &x0);
    let tau = mean_absorption_times(&b).unwrap();
    let k = b.states.iter().position(|&k| k == s.index_of(&x0).unwrap()).unwrap();
    let est = estimate_absorption_time(&p, &x0.into(), 3000, 5, &SsaOptions::default()).unwrap();
    assert!(
        (est.mean - tau[k]).abs() < 3.5 * est.std_err,
        "{} vs {}",
        est.mean,
        tau[k]
    );
}

#[test]
fn yaglom_matches_conditioned_master_equation() {
    let net = common::load("envz_ompr.crn");
    let yp = net.species_index("Y_p").unwrap();
    let p = MassAction::new(&net);
    let x0 = envz_one_away(&net, 1, 20).unwrap();
    let (s, b) = block(&net, &x0);
    let t = 50.0;
    let mut p0 = vec![0.0; b.states.len()];
    p0[b.states.iter().position(|&k| k == s.index_of(&x0).unwrap()).unwrap()] = 1.0;
    let (pt, survival) = evolve_conditioned(&b, &p0, t);
    let y = estimate_qsd_yaglom(&p, &InitialDistribution::from(x0), t, 20_000, 3, &SsaOptions::default()).unwrap();
    let tv = total_variation(&y.marginal.species(yp), &marginal(&s, &b, &pt, yp));
    assert!(tv < 0.03, "TV {}", tv);
    let frac = y.survivors as f64 / y.n as f64;
    assert!((frac - survival).abs() < 4.0 * (survival * (1.0 - survival) / y.n as f64).sqrt() + 1e-3);
}

#[test]
fn reducible_block_is_reported() {
    // two independent chains draining into Z: once one has drained, the
    // other keeps its own transient class
    let net = acr_core::parse_network("A <-> B ; 1, 1\nB -> Z ; 1\nC <-> D ; 1, 1\nD -> Z ; 1").unwrap();
    let p = MassAction::new(&net);
    let space = enumerate_state_space(&net, &p, &[1, 0, 0, 1, 0], &Limits::default()).unwrap();
    let b = build_generator(&space, &p).transient_block();
    match qsd_exact(&b, 1e-9) {
        Err(QsdError::Reducible { classes }) => assert!(classes.len() > 1),
        other => panic!("expected a reducible block, got {:?}", other.map(|r| r.theta)),
    }
}
