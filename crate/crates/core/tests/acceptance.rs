//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Two criteria compare against reference numbers this implementation does
//! not reproduce (see `KNOWN_GAPS`). They are still run at full tolerance and
//! print FAIL; only an unexpected failure makes the run exit non-zero.

mod common;

use std::time::Instant;

use acr_core::deterministic::{find_equilibrium, MassActionSystem};
use acr_core::presets::envz_one_away;
use acr_core::qsd::{
    expected_absorption_time_sis, mean_absorption_times, nonconservative_stationary_sis_like, poisson_limit_check,
    qsd_exact, qsd_iterative_sis, total_variation, tv_to_poisson, BirthDeathChain,
};
use acr_core::stochastic::{
    build_generator, enumerate_state_space, estimate_absorption_time, estimate_qsd_yaglom, time_average_distribution,
    Absorbing, Limits, MassAction, SsaOptions,
};
use acr_core::structure::{
    check_absorption_cor1, check_absorption_general, check_theorem1, deficiency, domination_pairs, kernel_basis,
    linkage_decomposition, DominationPair, EquilibriumEvidence, Outcome, KERNEL_TOL,
};
use acr_core::ReactionNetwork;
use nalgebra::{DMatrix, SymmetricEigen};

const SEED: u64 = 20240531;

/// Criteria whose reference values disagree with the model.
const KNOWN_GAPS: &[(usize, &str)] = &[
    (
        4,
        "the M = 5 entry (0.0438) disagrees with the formula; exact value 0.043472 agrees with the linear solve",
    ),
    (
        6,
        "the tabulated times disagree with the exact linear solve on the enumerated chain (92.27, 230.88, 899.22 s)",
    ),
];

struct Outcome2 {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: String) -> Outcome2 {
    Outcome2 { pass, detail }
}

fn labels(net: &ReactionNetwork, set: &[usize]) -> Vec<String> {
    let mut v: Vec<String> = set.iter().map(|&j| net.complex_label(j)).collect();
    v.sort();
    v
}

fn sorted(v: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn classes(net: &ReactionNetwork, cs: &[Vec<usize>]) -> Vec<Vec<String>> {
    let mut v: Vec<Vec<String>> = cs.iter().map(|c| labels(net, c)).collect();
    v.sort();
    v
}

fn class_set(cs: &[&[&str]]) -> Vec<Vec<String>> {
    let mut v: Vec<Vec<String>> = cs.iter().map(|c| sorted(c)).collect();
    v.sort();
    v
}

fn c1_structure() -> Outcome2 {
    let mut fails = Vec::new();
    let mut check = |name: &str, cond: bool| {
        if !cond {
            fails.push(name.to_string());
        }
    };
    let sis = common::load("sis.crn");
    let envz = common::load("envz_ompr.crn");
    let ex3 = common::load("envz_ompr_bifunctional.crn");
    let ex5 = common::load("example5.crn");
    let d = deficiency(&sis);
    check("SIS deficiency", (d.n, d.ell, d.s, d.delta) == (4, 2, 1, 1));
    let d = deficiency(&envz);
    check("EnvZ/OmpR deficiency", (d.n, d.ell, d.s, d.delta) == (10, 3, 6, 1));
    check("bifunctional EnvZ deficiency", deficiency(&ex3).delta == 2);
    let d = deficiency(&ex5);
    check("example5 deficiency", (d.n, d.ell, d.s, d.delta) == (11, 5, 5, 1));

    let dec = linkage_decomposition(&sis);
    check(
        "SIS linkage classes",
        classes(&sis, &dec.linkage_classes) == class_set(&[&["A + B", "2B"], &["B", "A"]]),
    );
    check(
        "SIS strong classes",
        classes(&sis, &dec.strong_linkage_classes) == class_set(&[&["A + B"], &["2B"], &["B"], &["A"]]),
    );
    let term: Vec<Vec<usize>> = dec.terminal_classes().into_iter().cloned().collect();
    check(
        "SIS terminal classes",
        classes(&sis, &term) == class_set(&[&["2B"], &["A"]]),
    );
    check(
        "SIS non-terminal",
        labels(&sis, &dec.non_terminal_complexes) == sorted(&["A + B", "B"]),
    );

    let dec = linkage_decomposition(&envz);
    check(
        "EnvZ linkage classes",
        classes(&envz, &dec.linkage_classes)
            == class_set(&[
                &["XD", "X", "XT", "X_p"],
                &["X_p + Y", "X_pY", "X + Y_p"],
                &["XD + Y_p", "XDY_p", "XD + Y"],
            ]),
    );
    check(
        "EnvZ strong classes",
        classes(&envz, &dec.strong_linkage_classes)
            == class_set(&[
                &["XD", "X", "XT"],
                &["X_p"],
                &["X_p + Y", "X_pY"],
                &["X + Y_p"],
                &["XD + Y_p", "XDY_p"],
                &["XD + Y"],
            ]),
    );
    let term: Vec<Vec<usize>> = dec.terminal_classes().into_iter().cloned().collect();
    check(
        "EnvZ terminal classes",
        classes(&envz, &term) == class_set(&[&["X_p"], &["X + Y_p"], &["XD + Y"]]),
    );
    check(
        "EnvZ non-terminal",
        labels(&envz, &dec.non_terminal_complexes)
            == sorted(&["XD", "X", "XT", "X_p + Y", "X_pY", "XD + Y_p", "XDY_p"]),
    );
    ok(
        fails.is_empty(),
        if fails.is_empty() {
            "deficiencies 1, 1, 2, 1; SIS and EnvZ classes match".into()
        } else {
            format!("mismatch: {}", fails.join(", "))
        },
    )
}

fn pair_names(net: &ReactionNetwork, p: &DominationPair) -> (String, String) {
    (net.complex_label(p.dominated), net.complex_label(p.dominator))
}

fn c2_theorems() -> Outcome2 {
    let mut fails = Vec::new();
    let sis = common::load("sis.crn");
    let envz = common::load("envz_ompr.crn");
    let ex3 = common::load("envz_ompr_bifunctional.crn");
    let ex4 = common::load("noncons.crn");

    let sis_starts = EquilibriumEvidence::Search(vec![vec![30.0, 30.0], vec![100.0, 1.0]]);
    // totals X_tot = 1 uM, Y_tot = 5 uM
    let envz_starts = EquilibriumEvidence::Search(vec![vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 5.0, 0.0]]);

    let v = check_theorem1(&sis, &sis.rates(), &sis_starts);
    if !(v.holds() && v.certificate.acr_species == vec!["A"]) {
        fails.push(format!(
            "ACR_Thm1 on SIS: {:?} {:?}",
            v.outcome, v.certificate.acr_species
        ));
    }
    let v = check_theorem1(&envz, &envz.rates(), &envz_starts);
    if !(v.holds() && v.certificate.acr_species == vec!["Y_p"]) {
        fails.push(format!(
            "ACR_Thm1 on EnvZ: {:?} {:?}",
            v.outcome, v.certificate.acr_species
        ));
    }
    for (name, net, ev) in [("SIS", &sis, &sis_starts), ("EnvZ", &envz, &envz_starts)] {
        let v = check_absorption_cor1(net, &net.rates(), ev);
        if !v.holds() {
            fails.push(format!("cor1 on {}: {:?} {:?}", name, v.outcome, v.notes));
        }
    }
    let v = check_absorption_cor1(&ex4, &ex4.rates(), &EquilibriumEvidence::Assumed);
    let on_conservativity = v.outcome == Outcome::Fails
        && v.certificate.conservative == Some(false)
        && v.notes.iter().any(|n| n.contains("not conservative"));
    if !on_conservativity {
        fails.push(format!(
            "cor1 on the non-conservative network should fail on conservativity: {:?} {:?}",
            v.outcome, v.notes
        ));
    }

    let ones = vec![1.0; ex3.r()];
    let v = check_absorption_general(&ex3, &[ones.clone()]);
    if !v.holds() {
        fails.push(format!(
            "general theorem on bifunctional EnvZ: {:?} {:?}",
            v.outcome, v.notes
        ));
    }
    let dec = linkage_decomposition(&ex3);
    let pairs = domination_pairs(&ex3, &dec);
    let names: Vec<(String, String)> = pairs.iter().map(|p| pair_names(&ex3, p)).collect();
    let want_pairs = vec![
        ("XD + Y_p".to_string(), "XD".to_string()),
        ("XT + Y_p".to_string(), "XT".to_string()),
    ];
    let mut got_pairs = names.clone();
    got_pairs.sort();
    if got_pairs != want_pairs {
        fails.push(format!("bifunctional EnvZ domination pairs {:?}", names));
    }
    // kernel of YA_k at k = 1, projected onto the non-terminal complexes in
    // the order XD, X, XT, X_p + Y, X_pY, XD + Y_p, XDY_p, XT + Y_p, XTY_p
    let order = [
        "XD", "X", "XT", "X_p + Y", "X_pY", "XD + Y_p", "XDY_p", "XT + Y_p", "XTY_p",
    ];
    let idx = |l: &str| (0..ex3.n()).find(|&j| ex3.complex_label(j) == l).unwrap();
    let coords: Vec<usize> = order.iter().map(|l| idx(l)).collect();
    let pivots = [idx("XD + Y_p"), idx("XT + Y_p")];
    let kb = kernel_basis(&ex3, &ones, KERNEL_TOL);
    let vs = kb.projected_aligned(&coords, &pivots);
    let want = [
        [2.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 0.0, 0.0],
        [2.0, 2.0, 1.0, 2.0, 1.0, 0.0, 0.0, 2.0, 1.0],
    ];
    let mut spread = f64::INFINITY;
    if vs.len() == 2 {
        spread = 0.0;
        for (w, (_, v)) in want.iter().zip(&vs) {
            let scale = v[0] / w[0];
            for (a, b) in v.iter().zip(w) {
                spread = spread.max((a - scale * b).abs() / scale.abs());
            }
        }
    }
    if !(spread <= 1e-8) {
        fails.push(format!(
            "bifunctional EnvZ kernel vectors: {} found, ratio spread {:e}",
            vs.len(),
            spread
        ));
    }
    ok(
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "all verdicts as expected; bifunctional EnvZ kernel ratio spread {:.1e}",
                spread
            )
        } else {
            fails.join("; ")
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c3_deterministic() -> Outcome2 {
    let mut fails = Vec::new();
    let mut worst = [0.0f64; 3];
    let sis = common::load("sis.crn");
    let sys = MassActionSystem::from_network(&sis);
    let ratio = sis.rates()[1] / sis.rates()[0];
    for f in [2.0, 5.0, 10.0] {
        let m = f * ratio;
        match find_equilibrium(&sys, &[m / 2.0, m / 2.0], true) {
            Some(e) => worst[0] = worst[0].max(rel(e.concentrations[0], ratio)),
            None => fails.push(format!("no positive SIS equilibrium at M = {}", m)),
        }
    }
    if worst[0] >= 1e-8 {
        fails.push(format!("SIS relative error {:e}", worst[0]));
    }
    let envz = common::load("envz_ompr.crn");
    let sys = MassActionSystem::from_network(&envz);
    let yp = envz.species_index("Y_p").unwrap();
    for c0 in [
        vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 5.0, 0.0],
        vec![0.04, 0.0, 0.0, 0.0, 1.4, 0.0, 0.0, 0.0],
        vec![0.5, 0.5, 0.5, 0.5, 3.0, 0.5, 3.0, 0.5],
    ] {
        match find_equilibrium(&sys, &c0, true) {
            Some(e) => worst[1] = worst[1].max(rel(e.concentrations[yp], 1.0)),
            None => fails.push("no positive EnvZ equilibrium".into()),
        }
    }
    if worst[1] >= 1e-6 {
        fails.push(format!("EnvZ relative error {:e}", worst[1]));
    }
    let ex5 = common::load("example5.crn");
    let sys = MassActionSystem::from_network(&ex5);
    let c = ex5.species_index("C").unwrap();
    match find_equilibrium(&sys, &vec![1.0; ex5.m()], true) {
        Some(e) => worst[2] = rel(e.concentrations[c], 1.0),
        None => fails.push("no positive example5 equilibrium".into()),
    }
    if worst[2] >= 1e-6 {
        fails.push(format!("example5 relative error {:e}", worst[2]));
    }
    ok(
        fails.is_empty(),
        format!(
            "max relative errors {:.1e} (A), {:.1e} (Y_p), {:.1e} (C){}",
            worst[0],
            worst[1],
            worst[2],
            if fails.is_empty() {
                String::new()
            } else {
                format!("; {}", fails.join("; "))
            }
        ),
    )
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let f = 10f64.powi(digits - 1 - e);
    (x * f).round() / f
}

const TABLE1: [(usize, f64); 15] = [
    (5, 0.0438),
    (10, 0.0491),
    (15, 0.0572),
    (20, 0.0699),
    (25, 0.0930),
    (30, 0.147),
    (35, 0.332),
    (40, 1.412),
    (45, 12.913),
    (50, 233.051),
    (55, 7.42e3),
    (60, 3.88e5),
    (65, 3.16e7),
    (70, 3.87e9),
    (75, 6.87e11),
];

fn c4_table1() -> Outcome2 {
    let mut bad = Vec::new();
    for &(m, want) in &TABLE1 {
        let got = expected_absorption_time_sis(m, 1.0, 25.0, 1).unwrap();
        if round_sig(got, 3) != round_sig(want, 3) {
            bad.push(format!("M={}: {:.6} vs {}", m, got, want));
        }
    }
    ok(
        bad.is_empty(),
        format!(
            "{}/15 entries match to 3 significant figures{}",
            15 - bad.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; mismatched {}", bad.join(", "))
            }
        ),
    )
}

fn c5_sis_monte_carlo() -> Outcome2 {
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [20u32, 30, 40] {
        let net = common::sis(1.0, 25.0);
        let p = MassAction::with_scale(&net, &net.rates(), 1.0);
        let x0 = vec![m - 1, 1];
        let est = estimate_absorption_time(&p, &x0.into(), 10_000, SEED, &SsaOptions::default()).unwrap();
        let exact = expected_absorption_time_sis(m as usize, 1.0, 25.0, 1).unwrap();
        let z = (est.mean - exact) / est.std_err;
        pass &= z.abs() < 3.0 && est.incomplete == 0;
        parts.push(format!("M={} {:.5} vs {:.5} (z={:+.2})", m, est.mean, exact, z));
    }
    ok(pass, parts.join(", "))
}

fn envz_block(
    net: &ReactionNetwork,
    x0: &[u32],
) -> (acr_core::stochastic::StateSpace, acr_core::stochastic::TransientBlock) {
    let p = MassAction::new(net);
    let s = enumerate_state_space(net, &p, x0, &Limits::default()).unwrap();
    let b = build_generator(&s, &p).transient_block();
    (s, b)
}

fn c6_envz_times() -> Outcome2 {
    let net = common::load("envz_ompr.crn");
    let p = MassAction::new(&net);
    let mut parts = Vec::new();
    let mut pass = true;
    let mut mc_vs_exact = true;
    for (y, want) in [(10u32, 9.3785), (20, 167.19), (30, 668.34)] {
        let x0 = envz_one_away(&net, 1, y).unwrap();
        let (s, b) = envz_block(&net, &x0);
        let tau = mean_absorption_times(&b).unwrap();
        let k = b.states.iter().position(|&k| k == s.index_of(&x0).unwrap()).unwrap();
        let est = estimate_absorption_time(&p, &x0.clone().into(), 10_000, SEED, &SsaOptions::default()).unwrap();
        let z = (est.mean - want) / est.std_err;
        let z_exact = (est.mean - tau[k]) / est.std_err;
        pass &= z.abs() < 3.0;
        mc_vs_exact &= z_exact.abs() < 3.0;
        parts.push(format!(
            "Y_tot={} MC {:.2}±{:.2} vs {} (z={:+.1}); exact {:.2}",
            y, est.mean, est.std_err, want, z, tau[k]
        ));
    }
    parts.push(format!(
        "MC within 3 SE of exact solve: {}",
        if mc_vs_exact { "yes" } else { "no" }
    ));
    ok(pass, parts.join(", "))
}

fn c7_qsd_cross() -> Outcome2 {
    let (m, alpha, beta) = (50usize, 1.0, 25.0);
    let chain = BirthDeathChain::sis(m, alpha, beta);
    let exact = chain.qsd(1e-10).unwrap();
    let iter = qsd_iterative_sis(m, alpha, beta, 100_000, 1e-15).unwrap();
    let tv_ei = total_variation(&exact.distribution, &iter.distribution);
    // relaxation time from the two slowest modes of A_Q (similar to a
    // symmetric matrix, so the spectrum is real)
    let a: DMatrix<f64> = chain.transient_block().a.to_dense();
    let sym = symmetrized(&chain);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let relax = 1.0 / (ev[0] - ev[1]);
    let t = 10.0 * relax;
    debug_assert_eq!(a.nrows(), m);
    let net = common::sis(alpha, beta);
    let p = MassAction::with_scale(&net, &net.rates(), 1.0);
    let x0 = vec![25u32, 25];
    let y = estimate_qsd_yaglom(&p, &x0.into(), t, 300_000, SEED, &SsaOptions::default()).unwrap();
    let emp = y.marginal.species(1);
    // exact QSD indexed by X_B = 1..M, shifted to counts
    let mut ex_counts = vec![0.0];
    ex_counts.extend(&exact.distribution);
    let mut it_counts = vec![0.0];
    it_counts.extend(&iter.distribution);
    let tv_ey = total_variation(&ex_counts, &emp);
    let tv_iy = total_variation(&it_counts, &emp);
    let pass = tv_ei < 1e-8 && tv_ey < 0.02 && tv_iy < 0.02;
    ok(
        pass,
        format!(
            "TV exact/iterative {:.1e}, exact/Yaglom {:.4}, iterative/Yaglom {:.4} (T={:.3} s = 10 relaxation times, {} survivors)",
            tv_ei, tv_ey, tv_iy, t, y.survivors
        ),
    )
}

/// `D A_Q D⁻¹` made symmetric by the birth-death detailed-balance weights.
fn symmetrized(chain: &BirthDeathChain) -> DMatrix<f64> {
    let m = chain.m;
    let mut s = DMatrix::zeros(m, m);
    for i in 1..=m {
        s[(i - 1, i - 1)] = -(chain.birth[i] + chain.death[i]);
        if i < m {
            let off = (chain.birth[i] * chain.death[i + 1]).sqrt();
            s[(i - 1, i)] = off;
            s[(i, i - 1)] = off;
        }
    }
    s
}

fn c8_poisson() -> Outcome2 {
    let rows = poisson_limit_check(1.0, 4.0, &[20, 50, 100, 200]).unwrap();
    let tvs: Vec<f64> = rows.iter().map(|r| r.tv).collect();
    let decreasing = tvs.windows(2).all(|w| w[1] < w[0]);
    let last = *tvs.last().unwrap();
    ok(
        decreasing && last < 0.05,
        format!(
            "TV {} for M = 20, 50, 100, 200",
            tvs.iter().map(|t| format!("{:.5}", t)).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c9_envz_qsd() -> Outcome2 {
    let net = common::load("envz_ompr.crn");
    let yp = net.species_index("Y_p").unwrap();
    let mut means = Vec::new();
    let mut tvs = Vec::new();
    let mut sizes = Vec::new();
    for (x, y) in [(1u32, 35u32), (2, 70), (4, 140)] {
        let x0 = envz_one_away(&net, x, y).unwrap();
        let (s, b) = envz_block(&net, &x0);
        let mut r = qsd_exact(&b, 1e-9).unwrap();
        r.attach_states(&s, &b);
        means.push(r.mean(yp));
        tvs.push(tv_to_poisson(&r.marginals[yp], 25.0));
        sizes.push(s.len());
    }
    let toward = means.iter().map(|m| (m - 25.0).abs()).collect::<Vec<_>>();
    let trending = toward[2] < toward[0];
    let within = rel(means[2], 25.0) < 0.15;
    let tv_down = tvs.windows(2).all(|w| w[1] < w[0]);
    ok(
        trending && within && tv_down,
        format!(
            "mean(Y_p) {:.3}, {:.3}, {:.3}; TV to Poisson(25) {:.4}, {:.4}, {:.4}; states {:?}",
            means[0], means[1], means[2], tvs[0], tvs[1], tvs[2], sizes
        ),
    )
}

fn c10_example4() -> Outcome2 {
    let net = common::load("noncons.crn");
    let (alpha, beta) = (net.rates()[0], net.rates()[1]);
    let p = MassAction::new(&net);
    // reflecting cap far in the tail: P(X_A > 30) is below 1e-25
    let opts = SsaOptions {
        absorbing: Absorbing::ZeroPropensity,
        cap: Some(vec![30, 31]),
        ..Default::default()
    };
    let occ = time_average_distribution(&p, &[0, 1], 50.0, 5_050.0, 8, SEED, &opts).unwrap();
    let emp = occ.species(0);
    let exact = nonconservative_stationary_sis_like(alpha, beta, 1).unwrap();
    let tv = total_variation(&emp, &exact);
    ok(
        tv < 0.02,
        format!("TV {:.4} between occupation law of X_A and the analytic law", tv),
    )
}

fn c11_properties() -> Outcome2 {
    use common::props;
    let checks: [(&str, fn(u32) -> Result<u32, String>); 5] = [
        ("admissibility", props::admissibility),
        ("conservation", props::conservation_along_paths),
        ("row sums", props::generator_row_sums),
        ("QSD fixed point", props::qsd_fixed_point),
        ("Jacobian", props::jacobian_vs_differences),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, f) in checks {
        match f(1000) {
            Ok(n) => parts.push(format!("{} {} cases", name, n)),
            Err(e) => {
                pass = false;
                parts.push(format!("{} FAILED: {}", name, e));
            }
        }
    }
    ok(pass, parts.join(", "))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome2); 11] = [
        (1, "structural golden suite", c1_structure),
        (2, "theorem checkers", c2_theorems),
        (3, "deterministic ACR values", c3_deterministic),
        (4, "absorption-time closed form vs table", c4_table1),
        (5, "SIS Monte Carlo vs closed form", c5_sis_monte_carlo),
        (6, "EnvZ/OmpR absorption times vs reference", c6_envz_times),
        (7, "QSD cross-oracle", c7_qsd_cross),
        (8, "Poisson limit", c8_poisson),
        (9, "EnvZ/OmpR quasi-stationary mean", c9_envz_qsd),
        (10, "non-conservative counterexample", c10_example4),
        (11, "property suites", c11_properties),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (k, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} criterion {:>2} ({}): {} [{:.1} s]",
            if r.pass { "PASS" } else { "FAIL" },
            k,
            name,
            r.detail,
            secs
        );
        let known = KNOWN_GAPS.iter().find(|(c, _)| *c == k);
        match (r.pass, known) {
            (false, Some((_, why))) => println!("     known gap: {}", why),
            (false, None) => unexpected.push(k),
            (true, Some(_)) => println!("     note: criterion {} is listed as a known gap but passed", k),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {:?}", unexpected);
        std::process::exit(1);
    }
}
