//! Randomized property checks shared by the property suite and the
//! acceptance run. Each returns the number of cases checked.

use acr_core::deterministic::MassActionSystem;
use acr_core::qsd::{qsd_exact, total_variation, BirthDeathChain};
use acr_core::stochastic::{
    build_generator, enumerate_state_space, evolve_conditioned, ssa_trajectory, Absorbing, CustomPropensity, Limits,
    MassAction, Propensity, SsaOptions,
};
use acr_core::structure::conservation_certificate;
use acr_core::ReactionNetwork;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

fn complex(m: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..3, m)
}

/// Small random networks with strictly positive rates.
pub fn network() -> impl Strategy<Value = ReactionNetwork> {
    (1usize..=4)
        .prop_flat_map(|m| {
            let rxn = (complex(m), complex(m), -2.0f64..2.0).prop_map(|(s, p, e)| (s, p, 10f64.powf(e)));
            (Just(m), prop::collection::vec(rxn, 1..=6))
        })
        .prop_filter_map("invalid network", |(m, rs)| {
            ReactionNetwork::from_reactions(&NAMES[..m], &rs).ok()
        })
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>, cases: u32) -> Result<u32, String> {
    r.map(|_| cases).map_err(|e| e.to_string())
}

/// λ_i(x) > 0 exactly when x covers the source complex, for mass action and
/// for a custom rate law.
pub fn admissibility(cases: u32) -> Result<u32, String> {
    let strat = network().prop_flat_map(|net| {
        let m = net.m();
        (Just(net), prop::collection::vec(0u32..4, m))
    });
    finish(
        runner(cases).run(&strat, |(net, x)| {
            let ma = MassAction::new(&net);
            let custom = CustomPropensity::new(&net, |x, i| 1.0 + (x.iter().sum::<u32>() + i as u32) as f64);
            for i in 0..net.r() {
                let covered = net.source(i).coeffs.iter().zip(&x).all(|(y, xj)| xj >= y);
                prop_assert_eq!(ma.propensity(&x, i) > 0.0, covered);
                prop_assert_eq!(custom.propensity(&x, i) > 0.0, covered);
            }
            Ok(())
        }),
        cases,
    )
}

/// w·X is the same at every jump of an SSA path for every integer
/// conservation vector.
pub fn conservation_along_paths(cases: u32) -> Result<u32, String> {
    let strat = network().prop_flat_map(|net| {
        let m = net.m();
        (Just(net), prop::collection::vec(0u32..6, m), any::<u64>())
    });
    finish(
        runner(cases).run(&strat, |(net, x0, seed)| {
            let cert = conservation_certificate(&net);
            let basis = match cert.basis_i64() {
                Some(b) => b,
                None => return Err(TestCaseError::reject("basis too large for i64")),
            };
            let p = MassAction::new(&net);
            let opts = SsaOptions {
                t_max: 50.0,
                budget: 300,
                absorbing: Absorbing::ZeroPropensity,
                cap: Some(vec![60; net.m()]),
                ..Default::default()
            };
            let tr = ssa_trajectory(&p, &x0, &opts, seed, 0);
            for w in &basis {
                let dot = |x: &[u32]| -> i128 { w.iter().zip(x).map(|(&a, &b)| a as i128 * b as i128).sum() };
                let w0 = dot(&x0);
                for x in &tr.states {
                    prop_assert_eq!(dot(x), w0);
                }
            }
            Ok(())
        }),
        cases,
    )
}

/// Every generator row sums to exactly zero.
pub fn generator_row_sums(cases: u32) -> Result<u32, String> {
    let strat = network().prop_flat_map(|net| {
        let m = net.m();
        (Just(net), prop::collection::vec(0u32..4, m))
    });
    finish(
        runner(cases).run(&strat, |(net, x0)| {
            let p = MassAction::new(&net);
            let limits = Limits {
                max_states: 5000,
                cap: Some(vec![6; net.m()]),
            };
            let s = match enumerate_state_space(&net, &p, &x0, &limits) {
                Ok(s) => s,
                Err(_) => return Err(TestCaseError::reject("state space too large")),
            };
            let g = build_generator(&s, &p);
            for k in 0..g.full.n {
                let (_, v) = g.full.row(k);
                let total = v.iter().fold(0.0, |a, b| a + b) + g.full.diag[k];
                prop_assert_eq!(total, 0.0);
                prop_assert!(v.iter().all(|&a| a > 0.0));
            }
            Ok(())
        }),
        cases,
    )
}

/// Evolving the conditioned master equation from the QSD leaves it fixed.
pub fn qsd_fixed_point(cases: u32) -> Result<u32, String> {
    let strat = (1usize..=60, -1.0f64..1.0, -1.0f64..1.5, -2.0f64..1.0);
    finish(
        runner(cases).run(&strat, |(m, la, lb, lt)| {
            let (alpha, beta) = (10f64.powf(la), 10f64.powf(lb));
            let chain = BirthDeathChain::sis(m, alpha, beta);
            let block = chain.transient_block();
            let q = qsd_exact(&block, 1e-9).map_err(|e| TestCaseError::fail(e.to_string()))?;
            // keep the uniformization series short
            let t = 10f64.powf(lt).min(5e3 / block.a.max_exit_rate());
            let (p, survival) = evolve_conditioned(&block, &q.distribution, t);
            prop_assert!(total_variation(&p, &q.distribution) < 1e-8);
            prop_assert!((survival - (q.theta * t).exp()).abs() < 1e-8);
            Ok(())
        }),
        cases,
    )
}

/// Analytic Jacobian agrees with central differences.
pub fn jacobian_vs_differences(cases: u32) -> Result<u32, String> {
    let strat = network().prop_flat_map(|net| {
        let m = net.m();
        (Just(net), prop::collection::vec(0.1f64..3.0, m))
    });
    finish(
        runner(cases).run(&strat, |(net, c)| {
            let sys = MassActionSystem::from_network(&net);
            let jac = sys.jacobian(&c);
            let m = net.m();
            for l in 0..m {
                let h = 1e-6 * c[l].max(1.0);
                let mut up = c.clone();
                let mut dn = c.clone();
                up[l] += h;
                dn[l] -= h;
                let (fu, fd) = (sys.rhs(&up), sys.rhs(&dn));
                for j in 0..m {
                    let fd_est = (fu[j] - fd[j]) / (2.0 * h);
                    // truncation plus cancellation error of the difference quotient
                    let tol = 1e-6 * (1.0 + jac[(j, l)].abs()) + 1e-13 * (fu[j].abs() + fd[j].abs()) / h;
                    prop_assert!(
                        (fd_est - jac[(j, l)]).abs() < tol,
                        "entry ({}, {}): {} vs {}",
                        j,
                        l,
                        fd_est,
                        jac[(j, l)]
                    );
                }
            }
            Ok(())
        }),
        cases,
    )
}
