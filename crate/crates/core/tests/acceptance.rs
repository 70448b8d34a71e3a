//! End-to-end acceptance checks. Each test prints a single `A<n> PASS|FAIL` line
//! with the measured quantity next to its bound, then asserts.

use std::f64::consts::PI;
use std::time::Instant;

use udw::quadrature::Tolerance;
use udw::response::{vacuum, DEFAULT_FIT_THRESHOLD};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udw::*;

fn report(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id}: {detail}");
}

fn rel(x: f64, y: f64) -> f64 {
    (x / y - 1.0).abs()
}

#[test]
fn a01_planck_spectrum() {
    let start = Instant::now();
    let w = Worldline::uniform(4, 6.0).unwrap();
    let k = vacuum(4).unwrap();
    let mut worst: f64 = 0.0;
    for omega in [1.15, 2.3, 4.6] {
        let r = transition_rate_limit(4, &w, omega, 0.0, &k, Tolerance::new(1e-9, 1e-14)).unwrap();
        let planck = omega / (2.0 * PI) / (2.0 * PI * omega / 6.0).exp_m1();
        worst = worst.max(rel(r.value, planck));
    }
    let secs = start.elapsed().as_secs_f64();
    report("A1", worst < 1e-4 && secs < 10.0, format!("max rel err {worst:.2e} (< 1e-4), {secs:.2} s (< 10 s)"));
}

#[test]
fn a02_inertial_limits() {
    let tol = Tolerance::new(1e-10, 1e-13);
    let mut lines = Vec::new();
    let mut pass = true;
    for (d, up, down) in [(4usize, 0.0, None), (3, 0.0, Some(0.5))] {
        let w = Worldline::inertial_rest(d).unwrap();
        let k = vacuum(d).unwrap();
        for omega in [0.7, 2.3] {
            let excite = transition_rate_limit(d, &w, omega, 0.0, &k, tol).unwrap().value;
            let relax = transition_rate_limit(d, &w, -omega, 0.0, &k, tol).unwrap().value;
            let expected_relax = down.unwrap_or(omega / (2.0 * PI));
            let ok_up = (excite - up).abs() < 1e-6;
            let ok_down = rel(relax, expected_relax) < 1e-6;
            pass &= ok_up && ok_down;
            lines.push(format!("d{d} ω={omega}: {excite:.1e} / {:.1e}", rel(relax, expected_relax)));
        }
    }
    report("A2", pass, format!("[rate(+ω) abs / rate(−ω) rel err] {}", lines.join("; ")));
}

#[test]
fn a03_detailed_balance() {
    let start = Instant::now();
    let k = vacuum(4).unwrap();
    let tol = Tolerance::new(1e-10, 1e-15);
    let mut worst: f64 = 0.0;
    for (omega, a) in [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, 3.0), (2.3, 6.0), (4.0, 2.5)] {
        let w = Worldline::uniform(4, a).unwrap();
        let up = transition_rate_limit(4, &w, omega, 0.0, &k, tol).unwrap().value;
        let down = transition_rate_limit(4, &w, -omega, 0.0, &k, tol).unwrap().value;
        worst = worst.max(rel(up / down, (-2.0 * PI * omega / a).exp()));
    }
    let secs = start.elapsed().as_secs_f64();
    report("A3", worst < 1e-3 && secs < 30.0, format!("max rel err {worst:.2e} (< 1e-3), {secs:.2} s (< 30 s)"));
}

#[test]
fn a04_switching_divergence() {
    let deltas: Vec<f64> = (0..8).map(|i| 0.002 * 2f64.powi(i)).collect();
    let tol = Tolerance::new(1e-8, 1e-11);
    let probe = |d: usize, w: Worldline| {
        let k = vacuum(d).unwrap();
        divergence_probe(d, &w, 1.0, 0.0, 4.0, &deltas, &k, tol, DEFAULT_FIT_THRESHOLD).unwrap()
    };
    let inertial = probe(4, Worldline::inertial_rest(4).unwrap());
    let ramped = probe(4, Worldline::asymptotic_uniform(4, 1.5, 1.0).unwrap());
    let spread = rel(ramped.coefficient, inertial.coefficient);
    // Fit noise: three standard errors, floored at 1e-4 of the d = 4 coefficient.
    let floor = 1e-4 * inertial.coefficient;
    let low: Vec<_> = [(2, Worldline::uniform(2, 1.0).unwrap()), (3, Worldline::uniform(3, 1.0).unwrap()), (3, Worldline::asymptotic_uniform(3, 1.5, 1.0).unwrap())]
        .into_iter()
        .map(|(d, w)| (d, probe(d, w)))
        .collect();
    let low_ok = low.iter().all(|(_, f)| f.coefficient.abs() <= (3.0 * f.coefficient_error).max(floor));
    let low_desc: Vec<_> = low.iter().map(|(d, f)| format!("d{d} {:.1e}±{:.1e}", f.coefficient, f.coefficient_error)).collect();
    report(
        "A4",
        spread < 0.02 && low_ok,
        format!(
            "d4 coefficients {:.8} / {:.8} (spread {spread:.1e} < 2e-2); {}",
            inertial.coefficient,
            ramped.coefficient,
            low_desc.join(", ")
        ),
    );
}

#[test]
fn a05_six_dimensional_gate() {
    let k = vacuum(6).unwrap();
    let tol = Tolerance::new(1e-9, 1e-13);
    let ok = transition_rate(6, &Worldline::uniform(6, 2.0).unwrap(), 1.0, 5.0, 3.0, &k, tol);
    let rejected = transition_rate(6, &Worldline::asymptotic_uniform(6, 2.0, 1.0).unwrap(), 1.0, 5.0, 3.0, &k, tol);
    let pass = ok.as_ref().is_ok_and(|r| r.value.is_finite()) && matches!(rejected, Err(Error::NonConstantAcceleration(_)));
    report("A5", pass, format!("uniform: {:?}; asymptotic: {:?}", ok.map(|r| r.value), rejected.map(|r| r.value)));
}

/// Rescaled ultraweak settings: γ = 1e-3, a = 6, Ω = 2.3, Λ₀ = Λ₁ = 20, m₀ = 1.
fn ultraweak_detector() -> DetectorParams {
    DetectorParams::from_frequency(1.0, 2.3, 1e-3, 20.0, 20.0).unwrap()
}

/// ρ₁₁ averaged over one oscillation period starting at `eta`; removes the
/// ripple at 2Ω riding on the secular growth.
fn period_average(p: &DetectorParams, a: f64, eta: f64, tol: Tolerance) -> f64 {
    const N: usize = 16;
    let period = 2.0 * PI / p.omega();
    let grid: Vec<f64> = (0..N).map(|k| eta + period * k as f64 / N as f64).collect();
    rho11_history(p, a, &grid, tol).unwrap().iter().map(|x| x.1).sum::<f64>() / N as f64
}

#[test]
fn a06_detector_population_history() {
    let start = Instant::now();
    let p = ultraweak_detector();
    let a = 6.0;
    let tol = Tolerance::new(1e-9, 1e-13);
    let pert = perturbative_rho11(&p, a, 0.0);

    // (i) a⁻¹ ≪ η ≪ 1e-2/γ.
    let (e1, e2) = (1.0, 10.0);
    let early = (period_average(&p, a, e2, tol) - period_average(&p, a, e1, tol)) / (e2 - e1);
    let early_err = rel(early, pert.slope);

    // (ii) Saturation: ten-period secant slope centred on η = 5/γ.
    let late_eta = 5.0 / p.gamma;
    let span = 10.0 * 2.0 * PI / p.omega();
    let late = (period_average(&p, a, late_eta + 0.5 * span, tol) - period_average(&p, a, late_eta - 0.5 * span, tol)) / span;
    let late_ratio = (late / pert.slope).abs();

    // (iii) Every sample of an N = 2000 history is a physical state.
    let grid: Vec<f64> = (1..=2000).map(|k| late_eta * 1.2 * k as f64 / 2000.0).collect();
    let track = detector_dynamics::single_track(a).unwrap();
    let ground = GaussianState::vacuum(&["detector"], p.scale(), 1.0).unwrap();
    let series = evolve_correlators(&p, std::slice::from_ref(&track), &ground, &grid, tol).unwrap();
    let worst_margin = series
        .samples
        .iter()
        .map(|s| {
            let (q2, p2, pq) = s.local("detector").unwrap();
            (q2 * p2 - pq * pq).sqrt() - 0.5 * s.hbar
        })
        .fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    report(
        "A6",
        early_err < 0.1 && late_ratio < 0.05 && worst_margin >= -1e-12 && secs < 300.0,
        format!(
            "early slope rel err {early_err:.3} (< 0.1); late |slope| ratio {late_ratio:.2e} (< 0.05); min ν − ħ/2 over {} samples {worst_margin:.2e} (≥ 0); {secs:.1} s (< 300 s)",
            grid.len()
        ),
    );
}

#[test]
fn a07_unruh_temperature() {
    let p = ultraweak_detector();
    let a = 6.0;
    let track = detector_dynamics::single_track(a).unwrap();
    let ground = GaussianState::vacuum(&["detector"], p.scale(), 1.0).unwrap();
    let s = correlators_at(&p, &[track], &ground, &[5.0 / p.gamma], Tolerance::new(1e-9, 1e-13)).unwrap();
    let (q2, p2, pq) = s.local("detector").unwrap();
    let t_eff = effective_temperature(q2, p2, pq, &p, 1.0).unwrap();
    let unruh = a / (2.0 * PI);
    let err = rel(t_eff, unruh);
    report("A7", err < 0.05, format!("T_eff {t_eff:.5} vs a/2π {unruh:.5}, rel err {err:.3} (< 0.05)"));
}

fn decoupled(omega: f64) -> DetectorParams {
    DetectorParams::from_frequency(1.0, omega, 0.0, 20.0, 20.0).unwrap()
}

/// Minkowski moment where the decoupled pair has rotated by 2πn in total:
/// Ω(t₁ + asinh(a t₁)/a) = 2πn, by bisection.
fn aligned_moment(a: f64, omega: f64, n: f64) -> f64 {
    let phase = |t: f64| omega * (t + (a * t).asinh() / a) - 2.0 * PI * n;
    let (mut lo, mut hi) = (0.0, 2.0 * PI * n / omega);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if phase(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn a08_classical_bound() {
    let moments: Vec<f64> = (0..25).map(|k| 0.4 * k as f64).collect();
    let s = TeleportScenario::new(0.5, 1.0, 0.0, 8.0, Complex64::new(0.7, -0.4), decoupled(2.3)).with_moments(moments);
    let worst = run_pseudo(&s).unwrap().points.iter().map(|p| (p.f_av - 0.5).abs()).fold(0.0f64, f64::max);

    // Coupled, entangled pair: closed form against the sampled outcome average.
    let coupled = DetectorParams::from_frequency(1.0, 2.3, 0.05, 20.0, 20.0).unwrap();
    let s = TeleportScenario::new(2.0, 4.0, 1.0, 3.0, Complex64::new(0.5, 0.2), coupled).with_tolerance(Tolerance::new(1e-7, 1e-11));
    let ab = slice_state(&s, 3.1).unwrap();
    let closed = averaged_fidelity(&ab, &s).unwrap();
    let (mc, stderr) = monte_carlo_fidelity(&ab, &s, 1_000_000, 2024).unwrap();
    let sigmas = (closed - mc).abs() / stderr;
    report(
        "A8",
        worst < 1e-6 && sigmas < 3.0,
        format!("max |F − 1/2| {worst:.1e} (< 1e-6); closed {closed:.6} vs MC {mc:.6} ± {stderr:.1e} ({sigmas:.2}σ < 3σ)"),
    );
}

#[test]
fn a09_ideal_fidelity_formula() {
    let (a, omega) = (0.5, 2.3);
    let mut worst: f64 = 0.0;
    for n in [1.0, 2.0, 3.0] {
        let t1 = aligned_moment(a, omega, n);
        for r1 in [0.5, 1.0, 2.0] {
            let s = TeleportScenario::new(a, 1.0, r1, 8.0, Complex64::new(-0.4, 0.2), decoupled(omega)).with_moments(vec![t1]);
            let f = run_pseudo(&s).unwrap().points[0].f_av;
            worst = worst.max((f - 1.0 / (1.0 + (-2.0 * r1).exp())).abs());
        }
    }
    report("A9", worst < 1e-3, format!("max |F − 1/(1+e^(−2r₁))| {worst:.1e} (< 1e-3)"));
}

/// Weakly coupled pair used for the dynamical markers: γ = 0.05, Ω = 2.3.
fn marker_scenario(r1: f64) -> TeleportScenario {
    let p = DetectorParams::from_frequency(1.0, 2.3, 0.05, 20.0, 20.0).unwrap();
    TeleportScenario::new(2.0, 4.0, r1, 8.0, Complex64::new(0.5, 0.0), p).with_tolerance(Tolerance::new(1e-5, 1e-9))
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

#[test]
fn a10_markers_and_frequency() {
    let start = Instant::now();
    let period = 2.0 * PI / 2.3;
    let mut pass = true;
    let mut notes = Vec::new();
    for r1 in [1.0, 1.5] {
        let series = run_pseudo(&marker_scenario(r1).with_moments(grid(0.0, 40.0, 0.12))).unwrap();
        let m = extract_markers(&series).unwrap();
        let (th, tde) = (m.t_half.unwrap_or(f64::NAN), m.t_de.unwrap_or(f64::INFINITY));
        let ordered = th <= tde;
        // Late-time spacing: mean of the last three peak gaps.
        let peaks: Vec<f64> = m.peaks.iter().map(|p| p.0).collect();
        let tail = &peaks[peaks.len().saturating_sub(4)..];
        let spacing = (tail[tail.len() - 1] - tail[0]) / (tail.len() - 1) as f64;
        let spacing_err = rel(spacing, period);
        // Teleportation advantage needs entanglement on the same slice.
        let necessity = series.points.iter().all(|p| p.f_av <= 0.5 + 1e-3 || p.entanglement_margin > 0.0);
        pass &= ordered && spacing_err < 0.02 && necessity;
        notes.push(format!(
            "r₁={r1}: t½ {th:.3} ≤ t_dE {tde:.3}, spacing {spacing:.4} vs {period:.4} ({spacing_err:.3} < 0.02), necessity {necessity}"
        ));
    }
    // Matched window, physical against pseudo.
    let window = grid(0.0, 3.0, 0.03);
    let pseudo = extract_markers(&run_pseudo(&marker_scenario(1.0).with_moments(window.clone())).unwrap()).unwrap();
    let physical = extract_markers(&run_physical(&marker_scenario(1.0).physical(0.5).with_moments(window)).unwrap()).unwrap();
    let (np, nq) = (physical.peaks.len(), pseudo.peaks.len());
    pass &= np > nq;
    notes.push(format!("peaks on [0, 3]: physical {np} > pseudo {nq}"));
    let secs = start.elapsed().as_secs_f64();
    report("A10", pass, format!("{}; {secs:.0} s", notes.join("; ")));
}

#[test]
fn a11_foliation_agreement_on_lightcone() {
    let s = marker_scenario(1.0).with_tolerance(Tolerance::new(1e-7, 1e-11));
    let mut worst: f64 = 0.0;
    for t1 in [0.05, 0.15, 0.22] {
        let mk = lightcone_conditioned(&s, Foliation::Minkowski, t1).unwrap();
        let qr = lightcone_conditioned(&s, Foliation::QuasiRindler, t1).unwrap();
        for (x, y) in [(&mk.covariance, &qr.covariance), (&mk.gain, &qr.gain)] {
            worst = worst.max((x - y).amax() / x.amax());
        }
        let offset_scale = mk.offset.amax().max(mk.covariance.amax().sqrt());
        worst = worst.max((&mk.offset - &qr.offset).amax() / offset_scale);
    }
    report("A11", worst < 1e-4, format!("max relative difference of conditioned correlators {worst:.1e} (< 1e-4)"));
}

/// Random symplectic map on `n` modes: a product of local squeezers,
/// rotations and beam splitters, in `(Q…, P…)` ordering.
fn random_symplectic(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..3 * n {
        let mut g = DMatrix::identity(2 * n, 2 * n);
        let i = rng.random_range(0..n);
        match rng.random_range(0..3) {
            0 => {
                let r: f64 = rng.random_range(-1.0..1.0);
                g[(i, i)] = (-r).exp();
                g[(n + i, n + i)] = r.exp();
            }
            1 => {
                let (sn, cs) = rng.random_range(0.0..2.0 * PI).sin_cos();
                g[(i, i)] = cs;
                g[(i, n + i)] = sn;
                g[(n + i, i)] = -sn;
                g[(n + i, n + i)] = cs;
            }
            _ => {
                let j = (i + 1 + rng.random_range(0..n.max(2) - 1)) % n;
                if j == i {
                    continue;
                }
                let (sn, cs) = rng.random_range(0.0..PI).sin_cos();
                for off in [0, n] {
                    g[(off + i, off + i)] = cs;
                    g[(off + i, off + j)] = sn;
                    g[(off + j, off + i)] = -sn;
                    g[(off + j, off + j)] = cs;
                }
            }
        }
        s = g * s;
    }
    s
}

const LABELS: [&str; 4] = ["m0", "m1", "m2", "m3"];

/// Thermal product state pushed through a random symplectic map and displaced.
fn random_state(n: usize, rng: &mut impl Rng) -> GaussianState {
    let scale = OscillatorScale::new(rng.random_range(0.5..2.0), rng.random_range(0.5..3.0)).unwrap();
    let hbar = 1.0;
    let mut st = GaussianState::thermal(&LABELS[..1], rng.random_range(0.0..2.0), scale, hbar).unwrap();
    for k in 1..n {
        st = st.tensor(&GaussianState::thermal(&LABELS[k..k + 1], rng.random_range(0.0..2.0), scale, hbar).unwrap()).unwrap();
    }
    let st = st.transform(&random_symplectic(n, rng)).unwrap();
    st.displace(LABELS[0], rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)).unwrap()
}

/// Smallest symplectic eigenvalue minus ħ/2, relative to ħ/2.
fn uncertainty_margin(st: &GaussianState) -> f64 {
    st.symplectic_eigenvalues().unwrap()[0] / (0.5 * st.hbar()) - 1.0
}

#[test]
fn a12_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    for case in 0..1000 {
        // Three or four modes, so conditioning on a Bell pair leaves modes behind.
        let n = 3 + case % 2;
        let st = random_state(n, &mut rng);
        let mut outputs = vec![
            st.reduce(&LABELS[..n - 1]),
            st.displace(LABELS[1], rng.random_range(-1.0..1.0), 0.3),
            st.transform(&random_symplectic(n, &mut rng)),
            st.tensor(&GaussianState::vacuum(&["extra"], OscillatorScale::unit(), 1.0).unwrap()),
        ];
        let bell = GaussianMeasurement::bell(LABELS[0], LABELS[1], rng.random_range(0.0..3.0), OscillatorScale::unit(), 1.0).unwrap();
        outputs.push(st.condition_on_measurement(&bell, &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]));
        for out in outputs {
            match out {
                Ok(o) => worst = worst.min(uncertainty_margin(&o)),
                Err(_) => failures += 1,
            }
        }
    }
    let valid = failures == 0 && worst >= -1e-9;

    let mut en_err: f64 = 0.0;
    // Up to r = 2.5: beyond, rounding of the e^{2r} entries alone exceeds the bound.
    for k in 0..=25 {
        let r = 0.1 * k as f64;
        let tms = GaussianState::two_mode_squeezed("a", "b", r, OscillatorScale::unit(), 1.0).unwrap();
        en_err = en_err.max((tms.log_negativity(&["a"], &["b"]).unwrap() - 2.0 * r / std::f64::consts::LN_2).abs());
    }

    let mut rho_ok = true;
    for _ in 0..1000 {
        let st = random_state(1, &mut rng);
        let (q2, p2, pq) = st.local_correlators(LABELS[0]).unwrap();
        let (m0, om) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let rho = excited_population(q2, p2, pq, m0, om, 1.0).unwrap();
        rho_ok &= (0.0..=1.0).contains(&rho);
    }
    report(
        "A12",
        valid && en_err < 1e-10 && rho_ok,
        format!("5000 operation outputs: {failures} rejected, min (ν₋ − ħ/2)/(ħ/2) {worst:.1e}; TMS E_N max err {en_err:.1e} (< 1e-10); ρ₁₁ ∈ [0, 1]: {rho_ok}"),
    );
}
