//! The acceptance suite: one check per headline guarantee, each returning a
//! structured pass/fail with measured residuals. `run_acceptance` bundles
//! them into a serializable report that is a pure function of the seed; no
//! timing or host information enters the output.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::sl2::{exp_reference, exp_sl2, AlgebraElement, GroupElement};
use crate::{coherent, ergodic, flows, fuchsian, par, spectrum, variational};

use num::complex::Complex64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

fn check(name: &str, passed: bool, details: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        details,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Ladder identities, level spacing, and multiplicity agreement across
/// k <= 200 and the three half-integer field strengths.
pub fn criterion_spectral(_seed: u64) -> Result<CheckResult> {
    let mut max_ladder = 0.0f64;
    let mut max_spacing = 0.0f64;
    let mut ladders = 0usize;
    let mut mult_ok = true;
    for &field in &[0.5, 1.0, 1.5] {
        let maps = spectrum::QuantizationMaps::new(field)?;
        for k in 1..=200u64 {
            let kf = k as f64;
            let levels = spectrum::landau_levels(k, field, 2)?;
            for l in &levels {
                let m = l.m as f64;
                let r1 = (maps.f_k(k, l.scaled)? - m / kf).abs();
                let s = m / kf;
                let r2 = (l.scaled - (field * (s + 0.5 / kf) - 0.5 * s * (s + 1.0 / kf))).abs();
                max_ladder = max_ladder.max(r1).max(r2);
            }
            for w in levels.windows(2) {
                let spacing = (w[1].value - w[0].value) / kf;
                let inv_period = (field * field - 2.0 * maps.beta(w[0].m as f64 / kf)?).sqrt();
                max_spacing = max_spacing.max((inv_period - spacing - 1.0 / kf).abs());
            }
            if levels.len() >= 2 {
                let ladder =
                    spectrum::riemann_roch_ladder(kf * field, 2, levels.len() as u64 - 2)?;
                ladders += 1;
                for l in &levels {
                    if let Some(mult) = l.multiplicity {
                        if mult != ladder[l.m as usize] {
                            mult_ok = false;
                        }
                    }
                }
            }
        }
    }
    let passed = max_ladder <= 1e-11 && max_spacing <= 1e-10 && mult_ok;
    Ok(check(
        "spectral exactness",
        passed,
        format!(
            "max ladder-identity residual {max_ladder:.3e}, max spacing residual \
             {max_spacing:.3e}, multiplicities exact on {ladders} ladders: {mult_ok}"
        ),
    ))
}

/// Orbit closure at one cyclotron period for random subcritical energies,
/// and closed-form exponentials against scaling-and-squaring.
pub fn criterion_period(seed: u64) -> Result<CheckResult> {
    let mut rng = par::task_rng(seed, par::DOMAIN_GENERIC, 11);
    let mut max_period = 0.0f64;
    for _ in 0..50 {
        let field = 0.5 + 1.3 * rng.gen::<f64>();
        let energy = 0.999 * 0.5 * field * field * rng.gen::<f64>();
        max_period = max_period.max(flows::period_residual(energy, field)?);
    }

    let mut max_exp = 0.0f64;
    for _ in 0..40 {
        let m = AlgebraElement::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        );
        let norm = m.frobenius().max(1e-9);
        let t = (rng.gen::<f64>() * 2.0 - 1.0) * 50.0 / norm;
        let a = exp_sl2(&m, t);
        let b = exp_reference(&m, t);
        let scale = a.frobenius().max(1.0);
        max_exp = max_exp.max(a.entrywise_distance(&b) / scale);
    }
    let passed = max_period <= 1e-10 && max_exp <= 1e-10;
    Ok(check(
        "period law",
        passed,
        format!(
            "max period residual {max_period:.3e} over 50 subcritical draws, \
             max relative exponential defect {max_exp:.3e} at |t||M| <= 50"
        ),
    ))
}

/// Closed-form coefficient flow against the Runge-Kutta oracle, Lyapunov
/// rates, and the exact parabolic profile.
pub fn criterion_variational(seed: u64) -> Result<CheckResult> {
    let mut rng = par::task_rng(seed, par::DOMAIN_GENERIC, 12);
    let mut max_rel = 0.0f64;
    for _ in 0..100 {
        let speed = 0.3 + 1.7 * rng.gen::<f64>();
        let field = 0.3 + 1.7 * rng.gen::<f64>();
        let t = 0.5 + 9.5 * rng.gen::<f64>();
        let init = variational::CoefficientState::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        let exact = variational::closed_form(&init, speed, field, t);
        let rk = variational::ode_oracle(&init, speed, field, t, 1e-3)?;
        let scale = exact.norm().max(1.0);
        let diff = variational::CoefficientState::new(
            exact.a - rk.a,
            exact.b - rk.b,
            exact.c - rk.c,
            exact.d - rk.d,
        )
        .norm();
        max_rel = max_rel.max(diff / scale);
    }

    let mut max_lyap = 0.0f64;
    for &(speed, field) in &[
        (1.5f64, 1.0f64),
        (2.0, 1.0),
        (1.2, 0.7),
        (3.0, 2.0),
        (1.01, 0.55),
    ] {
        let target = (speed * speed - field * field).sqrt();
        let est = variational::lyapunov_estimate(speed, field, 40.0)?;
        max_lyap = max_lyap.max((est - target).abs() / target);
    }

    // parabolic profile: with a = 1, c = -B, d = 1 the transverse
    // coefficient is exactly B t^2 / 2
    let mut max_par = 0.0f64;
    for &field in &[0.8, 1.0, 1.4] {
        let init = variational::CoefficientState::new(1.0, 0.0, -field, 1.0);
        for &t in &[1.0, 2.5, 7.0] {
            let b = variational::closed_form(&init, field, field, t).b;
            let target = 0.5 * field * t * t;
            max_par = max_par.max((b - target).abs() / target);
        }
    }
    let passed = max_rel <= 1e-6 && max_lyap <= 0.02 && max_par < 1e-8;
    Ok(check(
        "variational oracle",
        passed,
        format!(
            "max closed-form vs RK4 relative error {max_rel:.3e} over 100 draws, \
             max Lyapunov relative error {max_lyap:.3e} over 5 hyperbolic sets, \
             max parabolic profile residual {max_par:.3e}"
        ),
    ))
}

/// Equidistribution at critical energy for the standard suite: small
/// discrepancies at T = 2000, a decay exponent in the expected window, and
/// vanishing fiber harmonics.
pub fn criterion_equidistribution(seed: u64) -> Result<CheckResult> {
    let group = fuchsian::FuchsianGroup::bolza();
    let suite = ergodic::standard_suite(&group)?;
    let starts = ergodic::scattered_starts(&group, 8, seed)?;
    let t_grid = [
        50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 2000.0, 3200.0, 5000.0,
    ];
    let report = ergodic::decay_curve(
        &group, &suite, &starts, 1.0, &t_grid, 0.02, 200_000, seed, 3.8388,
    )?;
    let at_2000 = 6usize;
    debug_assert_eq!(t_grid[at_2000], 2000.0);
    let mut max_bump = 0.0f64;
    let mut max_harmonic = 0.0f64;
    for (i, obs) in report.observables.iter().enumerate() {
        if i < 2 {
            max_bump = max_bump.max(obs.discrepancy[at_2000]);
        } else {
            max_harmonic = max_harmonic.max(obs.discrepancy[at_2000]);
        }
    }
    let theta = report.theta_hat.unwrap_or(f64::NAN);
    let passed = max_bump <= 0.05 && max_harmonic <= 0.02 && (0.25..=1.1).contains(&theta);
    Ok(check(
        "critical equidistribution",
        passed,
        format!(
            "bump discrepancy at T=2000: {max_bump:.4}, harmonic discrepancy: \
             {max_harmonic:.4}, fitted decay exponent {theta:.3} (target {:.3})",
            report.theta_target
        ),
    ))
}

/// Regime separation: below critical energy the Birkhoff average is the
/// orbit average and visibly not Liouville; above it a 50-start ensemble
/// concentrates.
pub fn criterion_regimes(seed: u64) -> Result<CheckResult> {
    let group = fuchsian::FuchsianGroup::bolza();
    let field = 1.0;

    // below: one start, bump centered on it, whole-period horizon
    let energy = 0.25;
    let start = ergodic::scattered_starts(&group, 1, seed ^ 0x5eed)?[0];
    let obs = ergodic::Observable::bump(&group, &start.rep, 0.5, 4)?;
    let params = flows::classify(energy, field)?;
    let period = params.flow_period().expect("subcritical flow is periodic");
    let dt = period / 444.0;
    let t_final = 225.0 * period;
    let birk = ergodic::birkhoff(&group, &obs, &start, energy, field, t_final, dt)?;
    let orbit = ergodic::orbit_average(&group, &obs, &start, energy, field)?;
    let orbit_fine = ergodic::orbit_average_n(&group, &obs, &start, energy, field, 640)?;
    let liou = ergodic::liouville_average(&group, &obs, 200_000, seed)?;
    let dirac_defect = (birk - orbit).norm();
    let combined = liou.stderr + dirac_defect + (orbit - orbit_fine).norm();
    let separation = (birk - liou.mean).norm();
    let below_ok = dirac_defect <= 1e-6 && separation > 5.0 * combined;

    // above: scattered ensemble against a fixed bump
    let high = ergodic::Observable::bump(&group, &GroupElement::identity(), 0.6, 4)?;
    let values = ergodic::birkhoff_ensemble(&group, &high, 1.0, field, 50, 2000.0, 0.02, seed)?;
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let var = values
        .iter()
        .map(|v| (v - mean).norm_sqr())
        .sum::<f64>()
        / values.len() as f64;
    let std = var.sqrt();
    let above_ok = std <= 0.1;

    let passed = below_ok && above_ok;
    Ok(check(
        "regime separation",
        passed,
        format!(
            "below critical: |birkhoff - orbit| = {dirac_defect:.2e}, \
             |birkhoff - liouville| = {separation:.4} vs 5x combined error {:.4}; \
             above critical: ensemble std {std:.4} over 50 starts",
            5.0 * combined
        ),
    ))
}

/// Hyperbolic area by rejection Monte Carlo and the degree integrality map.
pub fn criterion_geometry(seed: u64) -> Result<CheckResult> {
    let group = fuchsian::FuchsianGroup::bolza();
    let area = group.area_mc(1_000_000, seed);
    let target = group.gauss_bonnet_area();
    let area_ok = (area.estimate - target).abs() <= 3.0 * area.stderr;
    let degree = fuchsian::degree(0.5, 2)?;
    let passed = area_ok && degree == 1;
    Ok(check(
        "hyperbolic area and degree",
        passed,
        format!(
            "area estimate {:.5} vs 4pi = {target:.5} (stderr {:.5}), degree(1/2, 2) = {degree}",
            area.estimate, area.stderr
        ),
    ))
}

/// Laguerre identities and profile masses under both conventions.
pub fn criterion_coherent(_seed: u64) -> Result<CheckResult> {
    let mut symbolic_ok = true;
    for m in 0..=8 {
        if coherent::laguerre_q(m)? != coherent::laguerre_q_symbolic(m)? {
            symbolic_ok = false;
        }
    }
    let mut max_unit = 0.0f64;
    for &k in &[16u64, 64] {
        for m in 0..=5 {
            let d = coherent::norm_diagnostic(k, m)?;
            max_unit = max_unit.max((d.unit_mass - d.reference).abs());
        }
    }
    let d16 = coherent::norm_diagnostic(16, 1)?;
    let bare_defect = (d16.bare_mass - 5.0 * d16.reference).abs();
    let passed = symbolic_ok && max_unit <= 1e-8 && bare_defect <= 1e-6 && d16.flagged;
    Ok(check(
        "coherent profiles",
        passed,
        format!(
            "recurrence matches symbolic expansion to degree 8: {symbolic_ok}; \
             max unit-norm mass defect {max_unit:.2e}; bare m=1 mass defect from \
             5k/2pi: {bare_defect:.2e}, flagged: {}",
            d16.flagged
        ),
    ))
}

/// Bit-identical reruns of every stochastic kernel, including the parallel
/// against the sequential path.
pub fn criterion_determinism(seed: u64) -> Result<CheckResult> {
    let group = fuchsian::FuchsianGroup::bolza();
    let a1 = group.area_mc(100_000, seed);
    let a2 = group.area_mc(100_000, seed);
    let a3 = group.area_mc_sequential(100_000, seed);
    let area_ok =
        a1.estimate.to_bits() == a2.estimate.to_bits() && a1.estimate.to_bits() == a3.estimate.to_bits();

    let obs = ergodic::Observable::bump(&group, &GroupElement::identity(), 0.6, 3)?;
    let l1 = ergodic::liouville_average(&group, &obs, 20_000, seed)?;
    let l2 = ergodic::liouville_average(&group, &obs, 20_000, seed)?;
    let liou_ok = l1.mean.re.to_bits() == l2.mean.re.to_bits()
        && l1.stderr.to_bits() == l2.stderr.to_bits();

    let e1 = ergodic::birkhoff_ensemble(&group, &obs, 1.0, 1.0, 4, 50.0, 0.02, seed)?;
    let e2 = ergodic::birkhoff_ensemble_sequential(&group, &obs, 1.0, 1.0, 4, 50.0, 0.02, seed)?;
    let ensemble_ok = e1
        .iter()
        .zip(&e2)
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());

    let s1 = ergodic::scattered_starts(&group, 6, seed)?;
    let s2 = ergodic::scattered_starts(&group, 6, seed)?;
    let starts_ok = s1
        .iter()
        .zip(&s2)
        .all(|(x, y)| x.rep.entrywise_distance(&y.rep) == 0.0);

    let passed = area_ok && liou_ok && ensemble_ok && starts_ok;
    Ok(check(
        "determinism",
        passed,
        format!(
            "area rerun and sequential twin bit-identical: {area_ok}; Liouville rerun \
             bit-identical: {liou_ok}; parallel vs sequential ensemble bit-identical: \
             {ensemble_ok}; start generation stable: {starts_ok}"
        ),
    ))
}

/// Run the whole acceptance suite. The output depends only on the seed.
pub fn run_acceptance(seed: u64) -> Result<AcceptanceReport> {
    let checks = vec![
        criterion_spectral(seed)?,
        criterion_period(seed)?,
        criterion_variational(seed)?,
        criterion_equidistribution(seed)?,
        criterion_regimes(seed)?,
        criterion_geometry(seed)?,
        criterion_coherent(seed)?,
        criterion_determinism(seed)?,
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(AcceptanceReport {
        seed,
        checks,
        all_passed,
    })
}
