//! Harmonic-oscillator detectors driven by the massless vacuum in 3+1
//! dimensions.
//!
//! Each detector obeys the damped Langevin equation
//!
//! ```text
//! Q̈ + 2γ Q̇ + Ω_r² Q = (λ/m₀) φ(z(τ)),    λ² = 8π γ m₀,
//! ```
//!
//! whose homogeneous solutions are `K(t) = e^{−γt}[cos Ωt + (γ/Ω) sin Ωt]` and
//! `G(t) = e^{−γt} sin(Ωt)/Ω`, with `Ω = √(Ω_r² − γ²)`. Correlators split into
//! the a-part (initial detector state propagated by K, G) and the v-part (the
//! vacuum noise convolved twice with G).
//!
//! The self v-part uses the Hadamard split `Re W₀ = −∂ₛ∂ₛ′ ln|s − s′| / 4π² + R`
//! with smooth remainder R. Integrating the singular piece by parts leaves
//! logarithmic corner terms; the switch-on corner is cut at `−Λ₀` and the
//! measurement corner at `−Λ₁`, both in units of `ln(Ω_r |Δs|)`. Neither
//! constant is subtracted. Cross v-parts between different worldlines are
//! principal-value integrals across the mutual lightcones.

use std::cell::Cell;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gaussian_state::{excited_population, GaussianState, OscillatorScale};
use crate::quadrature::{exp_integral_segment, integrate_pv, integrate_vec, Tolerance};
use crate::worldline::{interval_sq, Worldline, WorldlineKind};

/// Oscillator and coupling constants shared by all detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub m0: f64,
    /// Renormalised frequency; the oscillation frequency is `√(Ω_r² − γ²)`.
    pub omega_r: f64,
    /// Damping `λ²/(8π m₀)`.
    pub gamma: f64,
    /// Switch-on cutoff constant.
    pub lambda0: f64,
    /// Time-independent cutoff constant.
    pub lambda1: f64,
}

impl DetectorParams {
    pub fn new(m0: f64, omega_r: f64, gamma: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(m0 > 0.0 && m0.is_finite()) {
            return Err(invalid("m0", format!("must be positive, got {m0}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be nonnegative, got {gamma}")));
        }
        if !(omega_r > gamma && omega_r.is_finite()) {
            return Err(invalid("omega_r", format!("need Ω_r > γ (underdamped), got Ω_r = {omega_r}, γ = {gamma}")));
        }
        if !(lambda0.is_finite() && lambda1.is_finite()) {
            return Err(invalid("lambda", "cutoff constants must be finite"));
        }
        Ok(Self {
            m0,
            omega_r,
            gamma,
            lambda0,
            lambda1,
        })
    }

    /// Parameters from the oscillation frequency `Ω` instead of `Ω_r`.
    pub fn from_frequency(m0: f64, omega: f64, gamma: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(invalid("omega", format!("must be positive, got {omega}")));
        }
        Self::new(m0, omega.hypot(gamma), gamma, lambda0, lambda1)
    }

    pub fn omega(&self) -> f64 {
        ((self.omega_r - self.gamma) * (self.omega_r + self.gamma)).sqrt()
    }

    /// `λ² = 8π γ m₀`.
    pub fn coupling_sq(&self) -> f64 {
        8.0 * PI * self.gamma * self.m0
    }

    pub fn scale(&self) -> OscillatorScale {
        OscillatorScale {
            mass: self.m0,
            frequency: self.omega_r,
        }
    }

    fn z(&self) -> Complex64 {
        Complex64::new(-self.gamma, self.omega())
    }
}

/// `t ↦ Re(c e^{z t})` with the detector's complex frequency `z = −γ + iΩ`.
#[derive(Debug, Clone, Copy)]
struct Damped {
    c: Complex64,
}

impl Damped {
    fn eval(self, z: Complex64, t: f64) -> f64 {
        (self.c * (z * t).exp()).re
    }

    fn derivative(self, z: Complex64) -> Self {
        Self { c: self.c * z }
    }
}

#[derive(Debug, Clone, Copy)]
struct Kernels {
    z: Complex64,
    k: Damped,
    g: Damped,
    g_dot: Damped,
    g_ddot: Damped,
}

impl Kernels {
    fn new(p: &DetectorParams) -> Self {
        let z = p.z();
        let w = p.omega();
        let g = Damped {
            c: Complex64::new(0.0, -1.0 / w),
        };
        // Ġ = e^{−γt}[cos Ωt − (γ/Ω) sin Ωt], coefficient set exactly so Ġ(0) = 1.
        let g_dot = Damped {
            c: Complex64::new(1.0, p.gamma / w),
        };
        Self {
            z,
            k: Damped {
                c: Complex64::new(1.0, -p.gamma / w),
            },
            g,
            g_dot,
            g_ddot: g_dot.derivative(z),
        }
    }

    /// Propagator `(Q, P)(τ) = M (Q, P)(0)` of the homogeneous equation.
    fn propagator(&self, p: &DetectorParams, t: f64) -> [[f64; 2]; 2] {
        let g = self.g.eval(self.z, t);
        [
            [self.k.eval(self.z, t), g / p.m0],
            [-p.m0 * p.omega_r * p.omega_r * g, self.g_dot.eval(self.z, t)],
        ]
    }
}

/// `∫ A(u) B(u − Δ) du` over `u ∈ [0, τa]`, `u − Δ ∈ [0, τb]`.
fn lagged_overlap(z: Complex64, a: Damped, b: Damped, tau_a: f64, tau_b: f64, delta: f64) -> f64 {
    let lo = delta.max(0.0);
    let hi = tau_a.min(tau_b + delta);
    if hi <= lo {
        return 0.0;
    }
    let len = hi - lo;
    // A·B = ½Re(ab e^{zu + zv}) + ½Re(a b̄ e^{zu + z̄v}), v = u − Δ.
    let w1 = 2.0 * z;
    let t1 = a.c * b.c * (w1 * lo - z * delta).exp() * exp_integral_segment(w1, len);
    let w2 = Complex64::new(2.0 * z.re, 0.0);
    let t2 = a.c * b.c.conj() * (w2 * lo - z.conj() * delta).exp() * exp_integral_segment(w2, len);
    0.5 * (t1.re + t2.re)
}

/// Breakpoints every `period` inside `(0, len)` so oscillatory integrands
/// start from resolved panels.
fn period_knots(len: f64, period: f64) -> Vec<f64> {
    let n = (len / period).floor() as usize;
    (1..=n.min(50_000)).map(|k| k as f64 * period).filter(|&x| x < len).collect()
}

/// `Re W₀ + 1/(4π²Δ²)`, smooth through coincidence.
fn hadamard_remainder(w: &Worldline, s1: f64, s2: f64) -> f64 {
    let d = s1 - s2;
    match w.kind() {
        WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => 0.0,
        WorldlineKind::UniformAcceleration { a, .. } => {
            let x = 0.5 * a * d;
            let bracket = if x.abs() < 0.05 {
                let x2 = x * x;
                1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0 - x2 * x2 * x2 / 675.0
            } else {
                1.0 / (x * x) - 1.0 / x.sinh().powi(2)
            };
            a * a * bracket / (16.0 * PI * PI)
        }
        _ => {
            let (a1, a2) = (w.proper_accel_scalar(s1), w.proper_accel_scalar(s2));
            let amax = a1.max(a2);
            if d == 0.0 || (d * amax).abs() < 1e-3 {
                // Leading Hadamard coefficient a²/(48π²).
                return 0.5 * (a1 * a1 + a2 * a2) / (48.0 * PI * PI);
            }
            let sigma = w.self_interval_sq(s1, s2);
            (1.0 / sigma + 1.0 / (d * d)) / (4.0 * PI * PI)
        }
    }
}

/// Kinks of the worldline's acceleration profile.
fn worldline_knots(w: &Worldline) -> Vec<f64> {
    match w.kind() {
        WorldlineKind::TruncatedUniform { tau2, .. } => vec![*tau2],
        _ => vec![],
    }
}

/// Absolute floor matched to the size of the v-part integrals: the late-time
/// `⟨Q²⟩` needs `X_GG ≈ 1/(16πγΩ)`.
fn scaled_tol(p: &DetectorParams, tol: Tolerance) -> Tolerance {
    let w = p.omega();
    let scale = w.min(1.0 / w) / (16.0 * PI * p.gamma * w);
    Tolerance {
        abs: tol.abs.max(0.1 * tol.rel * scale),
        ..tol
    }
}

fn collect_failure<T>(slot: &Cell<Option<Error>>, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            let first = slot.take();
            slot.set(first.or(Some(e)));
            None
        }
    }
}

/// Self v-part integrals `X_FH` for `(F, H) ∈ {(G, G), (Ġ, G), (Ġ, Ġ)}`, so
/// that `⟨Q²⟩ᵥ = λ² X_GG / m₀²`, `⟨P, Q⟩ᵥ = λ² X_ĠG / m₀`, `⟨P²⟩ᵥ = λ² X_ĠĠ`.
fn self_integrals(p: &DetectorParams, kern: &Kernels, w: &Worldline, tau: f64, tol: Tolerance) -> Result<([f64; 3], f64)> {
    if tau == 0.0 {
        return Ok(([0.0; 3], 0.0));
    }
    let tol = scaled_tol(p, tol);
    let z = kern.z;
    let wr = p.omega_r;
    let log = |x: f64| (wr * x.abs()).ln();
    let period = 2.0 * PI / p.omega();
    let knots = period_knots(tau, period);

    // Single integrals S1[X] = ∫ X(v) L(τ − v), S0[X] = ∫ X(v) L(v) for X ∈ {Ġ, G̈}.
    let singles = integrate_vec(
        |v| {
            let (gd, gdd) = (kern.g_dot.eval(z, v), kern.g_ddot.eval(z, v));
            let (l1, l0) = (log(tau - v), log(v));
            [gd * l1, gdd * l1, gd * l0, gdd * l0]
        },
        0.0,
        tau,
        &knots,
        tol,
    )?;
    let [s1_gd, s1_gdd, s0_gd, s0_gdd] = singles.value;

    // Lag integrals over Δ ∈ [0, τ] of the even kernels against C_FH(Δ) + C_HF(Δ).
    let stationary = w.is_stationary();
    let lagged = integrate_vec(
        |d| {
            let c = |a: Damped, b: Damped| lagged_overlap(z, a, b, tau, tau, d) + lagged_overlap(z, b, a, tau, tau, d);
            let l = log(d);
            let mut out = [
                l * c(kern.g_dot, kern.g_dot),
                l * c(kern.g_ddot, kern.g_dot),
                l * c(kern.g_ddot, kern.g_ddot),
                0.0,
                0.0,
                0.0,
            ];
            if stationary {
                let r = hadamard_remainder(w, d, 0.0);
                if r != 0.0 {
                    out[3] = r * c(kern.g, kern.g);
                    out[4] = r * c(kern.g_dot, kern.g);
                    out[5] = r * c(kern.g_dot, kern.g_dot);
                }
            }
            out
        },
        0.0,
        tau,
        &knots,
        tol,
    )?;
    let mut err = singles.error_estimate.iter().sum::<f64>() + lagged.error_estimate.iter().sum::<f64>();

    let regular = if stationary {
        [lagged.value[3], lagged.value[4], lagged.value[5]]
    } else {
        let (r, e) = nonstationary_remainder(kern, w, tau, tol)?;
        err += e;
        r
    };

    let lt = log(tau);
    let at = |f: Damped, t: f64| f.eval(z, t);
    // (F, H, S1[F'], S0[F'], S1[H'], S0[H'], D)
    let pairs = [
        (kern.g, kern.g, s1_gd, s0_gd, s1_gd, s0_gd, lagged.value[0]),
        (kern.g_dot, kern.g, s1_gdd, s0_gdd, s1_gd, s0_gd, lagged.value[1]),
        (kern.g_dot, kern.g_dot, s1_gdd, s0_gdd, s1_gdd, s0_gdd, lagged.value[2]),
    ];
    let mut out = [0.0; 3];
    for (k, &(f, h, s1f, s0f, s1h, s0h, dd)) in pairs.iter().enumerate() {
        let (f0, ft, h0, ht) = (at(f, 0.0), at(f, tau), at(h, 0.0), at(h, tau));
        let by_parts = -p.lambda0 * ft * ht - p.lambda1 * f0 * h0 - lt * (ft * h0 + f0 * ht) - ft * s1h + f0 * s0h - ht * s1f
            + h0 * s0f
            + dd;
        out[k] = -by_parts / (4.0 * PI * PI) + regular[k];
    }
    Ok((out, err / (4.0 * PI * PI)))
}

/// `∫∫ F(τ − s) H(τ − s′) R(s, s′)` on `[0, τ]²` for worldlines without a
/// lag-only remainder.
fn nonstationary_remainder(kern: &Kernels, w: &Worldline, tau: f64, tol: Tolerance) -> Result<([f64; 3], f64)> {
    let z = kern.z;
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 0.1,
        ..tol
    };
    let knots: Vec<f64> = worldline_knots(w).into_iter().filter(|&k| k > 0.0 && k < tau).collect();
    let failure = Cell::new(None);
    let outer = integrate_vec(
        |s| {
            let mut bps = knots.clone();
            bps.push(s);
            let inner = integrate_vec(
                |s2| {
                    let r = hadamard_remainder(w, s, s2);
                    [r * kern.g.eval(z, tau - s2), r * kern.g_dot.eval(z, tau - s2)]
                },
                0.0,
                tau,
                &bps,
                inner_tol,
            );
            match collect_failure(&failure, inner) {
                Some(v) => {
                    let (g, gd) = (kern.g.eval(z, tau - s), kern.g_dot.eval(z, tau - s));
                    let [ig, igd] = v.value;
                    // (G,G), (Ġ,G) symmetrised, (Ġ,Ġ).
                    [g * ig, 0.5 * (gd * ig + g * igd), gd * igd]
                }
                None => [f64::NAN; 3],
            }
        },
        0.0,
        tau,
        &knots,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    Ok((outer.value, outer.error_estimate.iter().sum()))
}

/// A detector label and the worldline it follows.
#[derive(Debug, Clone)]
pub struct DetectorTrack {
    pub label: String,
    pub worldline: Worldline,
}

impl DetectorTrack {
    pub fn new(label: &str, worldline: Worldline) -> Result<Self> {
        if worldline.dimension() != 4 {
            return Err(Error::UnsupportedDimension(worldline.dimension(), "4 (detector dynamics)"));
        }
        Ok(Self {
            label: label.to_string(),
            worldline,
        })
    }
}

/// Correlators of all detectors at one set of proper times, in the
/// `(Q…, P…)` ordering of the tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSample {
    pub times: Vec<f64>,
    pub modes: Vec<String>,
    pub hbar: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Propagated initial covariance.
    pub a_part: DMatrix<f64>,
    /// Vacuum-driven covariance.
    pub v_part: DMatrix<f64>,
    /// Accumulated quadrature error estimate on the v-part entries.
    pub error_estimate: f64,
    /// Smallest symplectic eigenvalue of the covariance.
    pub min_symplectic: f64,
}

impl CorrelatorSample {
    fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn q_block(&self) -> DMatrix<f64> {
        let n = self.n();
        self.covariance.view((0, 0), (n, n)).into_owned()
    }

    pub fn p_block(&self) -> DMatrix<f64> {
        let n = self.n();
        self.covariance.view((n, n), (n, n)).into_owned()
    }

    /// `ℛ_{μν} = ⟨δP_μ, δQ_ν⟩`.
    pub fn r_block(&self) -> DMatrix<f64> {
        let n = self.n();
        self.covariance.view((n, 0), (n, n)).into_owned()
    }

    /// `(⟨Q²⟩, ⟨P²⟩, ⟨P, Q⟩)` of one detector.
    pub fn local(&self, mode: &str) -> Result<(f64, f64, f64)> {
        let i = self
            .modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))?;
        let n = self.n();
        Ok((self.covariance[(i, i)], self.covariance[(n + i, n + i)], self.covariance[(n + i, i)]))
    }

    /// The sample as a Gaussian state; rounding at the quadrature error level
    /// is tolerated in the uncertainty check.
    pub fn state(&self) -> Result<GaussianState> {
        GaussianState::from_covariance_with_slack(self.modes.clone(), &self.mean, &self.covariance, self.hbar, self.slack())
    }

    fn slack(&self) -> f64 {
        (1e-9_f64).max(10.0 * self.error_estimate / (0.5 * self.hbar))
    }
}

/// Samples on a common proper-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSeries {
    pub grid: Vec<f64>,
    pub samples: Vec<CorrelatorSample>,
}

/// Correlators with detector `k` evaluated at its own proper time `times[k]`;
/// all couplings switch on at proper time zero.
pub fn correlators_at(
    params: &DetectorParams,
    tracks: &[DetectorTrack],
    initial: &GaussianState,
    times: &[f64],
    tol: Tolerance,
) -> Result<CorrelatorSample> {
    correlators_with_split(params, tracks, initial, times, &[], tol)
}

/// As [`correlators_at`], but the cross v-part integration over each
/// detector's proper time is split at `splits[k]` when given; used to
/// express a collapse moment on a chosen time slice.
pub(crate) fn correlators_with_split(
    params: &DetectorParams,
    tracks: &[DetectorTrack],
    initial: &GaussianState,
    times: &[f64],
    splits: &[Option<f64>],
    tol: Tolerance,
) -> Result<CorrelatorSample> {
    let n = tracks.len();
    if n == 0 || times.len() != n {
        return Err(Error::DimensionMismatch(times.len(), n));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("times", "proper times must be finite and nonnegative"));
    }
    for (i, t) in tracks.iter().enumerate() {
        if tracks[..i].iter().any(|o| o.worldline == t.worldline) {
            return Err(invalid("tracks", "two detectors on one worldline are not supported"));
        }
    }
    let labels: Vec<&str> = tracks.iter().map(|t| t.label.as_str()).collect();
    let init = initial.reduce(&labels)?;
    if init.n_modes() != initial.n_modes() {
        return Err(Error::InvalidState("initial state has modes without a worldline".into()));
    }
    let hbar = init.hbar();
    let kern = Kernels::new(params);

    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for (k, &t) in times.iter().enumerate() {
        let m = kern.propagator(params, t);
        s[(k, k)] = m[0][0];
        s[(k, n + k)] = m[0][1];
        s[(n + k, k)] = m[1][0];
        s[(n + k, n + k)] = m[1][1];
    }
    let a_part = &s * init.covariance() * s.transpose();
    let mean = &s * init.mean();

    let mut v_part = DMatrix::zeros(2 * n, 2 * n);
    let mut error = 0.0;
    if params.gamma > 0.0 {
        let l2 = params.coupling_sq() * hbar;
        let m0 = params.m0;
        for i in 0..n {
            let (x, e) = self_integrals(params, &kern, &tracks[i].worldline, times[i], tol)?;
            v_part[(i, i)] = l2 * x[0] / (m0 * m0);
            v_part[(n + i, i)] = l2 * x[1] / m0;
            v_part[(i, n + i)] = v_part[(n + i, i)];
            v_part[(n + i, n + i)] = l2 * x[2];
            error += l2 * e * (1.0 + 1.0 / (m0 * m0));
            for j in (i + 1)..n {
                let split = |k: usize| splits.get(k).copied().flatten();
                let (x, e) = cross_split(
                    &kern,
                    &tracks[i].worldline,
                    times[i],
                    split(i),
                    &tracks[j].worldline,
                    times[j],
                    split(j),
                    scaled_tol(params, tol),
                )?;
                let qq = l2 * x[0] / (m0 * m0);
                v_part[(i, j)] = qq;
                v_part[(j, i)] = qq;
                // ⟨P_i, Q_j⟩ and ⟨P_j, Q_i⟩.
                v_part[(n + i, j)] = l2 * x[1] / m0;
                v_part[(j, n + i)] = v_part[(n + i, j)];
                v_part[(n + j, i)] = l2 * x[2] / m0;
                v_part[(i, n + j)] = v_part[(n + j, i)];
                v_part[(n + i, n + j)] = l2 * x[3];
                v_part[(n + j, n + i)] = v_part[(n + i, n + j)];
                error += l2 * e * (1.0 + 1.0 / (m0 * m0));
            }
        }
    }

    let covariance = &a_part + &v_part;
    let min_symplectic = crate::gaussian_state::symplectic_spectrum(&covariance)
        .map_err(|_| Error::UncertaintyViolation {
            value: f64::NAN,
            bound: 0.5 * hbar,
        })?[0];
    let sample = CorrelatorSample {
        times: times.to_vec(),
        modes: init.modes().to_vec(),
        hbar,
        mean,
        covariance,
        a_part,
        v_part,
        error_estimate: error,
        min_symplectic,
    };
    if min_symplectic < 0.5 * hbar * (1.0 - sample.slack()) {
        return Err(Error::UncertaintyViolation {
            value: min_symplectic,
            bound: 0.5 * hbar,
        });
    }
    Ok(sample)
}

#[allow(clippy::too_many_arguments)]
fn cross_split(
    kern: &Kernels,
    wi: &Worldline,
    tau_i: f64,
    split_i: Option<f64>,
    wj: &Worldline,
    tau_j: f64,
    split_j: Option<f64>,
    tol: Tolerance,
) -> Result<([f64; 4], f64)> {
    // The integrand over each detector's history is additive in the window;
    // a split evaluates the pieces before and after the collapse moment
    // separately through the shifted-kernel identity.
    match (split_i.filter(|&c| c > 0.0 && c < tau_i), split_j.filter(|&c| c > 0.0 && c < tau_j)) {
        (None, None) => window_cross(kern, wi, tau_i, wj, tau_j, 0.0, tau_j, tol),
        (_, Some(c)) => {
            let (a, ea) = window_cross(kern, wi, tau_i, wj, tau_j, 0.0, c, tol)?;
            let (b, eb) = window_cross(kern, wi, tau_i, wj, tau_j, c, tau_j, tol)?;
            Ok((std::array::from_fn(|k| a[k] + b[k]), ea + eb))
        }
        (Some(_), None) => {
            let (x, e) = cross_split(kern, wj, tau_j, None, wi, tau_i, split_i, tol)?;
            Ok(([x[0], x[2], x[1], x[3]], e))
        }
    }
}

/// Cross v-part integrals `[X_GG, X_ĠG, X_GĠ, X_ĠĠ]` between detectors on
/// different worldlines, first factor on `wi` at `τi`, with the second
/// detector's source window restricted to `[lo, hi] ⊆ [0, τj]`.
#[allow(clippy::too_many_arguments)]
fn window_cross(
    kern: &Kernels,
    wi: &Worldline,
    tau_i: f64,
    wj: &Worldline,
    tau_j: f64,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<([f64; 4], f64)> {
    if tau_i == 0.0 || hi <= lo {
        return Ok(([0.0; 4], 0.0));
    }
    let z = kern.z;
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 0.1,
        ..tol
    };
    // Outer kinks: where an end of the source window crosses wi's lightcones.
    let mut outer_knots = worldline_knots(wi);
    // Interior crossings every half period as well: near a horizon the pole
    // sweeps the source window at a geometrically growing rate in `s`.
    let half_period = PI / kern.z.im.abs().max(f64::MIN_POSITIVE);
    let steps = ((hi - lo) / half_period).ceil().min(4096.0) as usize;
    for k in 0..=steps {
        let ev = wj.position(if k == steps { hi } else { lo + k as f64 * half_period });
        outer_knots.extend(wi.retarded_time(&ev).ok());
        outer_knots.extend(wi.advanced_time(&ev).ok());
    }
    let inner_knots = worldline_knots(wj);
    let failure = Cell::new(None);
    let outer = integrate_vec(
        |s| {
            let ev = wi.position(s);
            let poles: Vec<f64> = [wj.retarded_time(&ev).ok(), wj.advanced_time(&ev).ok()].into_iter().flatten().collect();
            let inner = integrate_pv(
                |s2| {
                    let sigma = match interval_sq(wi, s, wj, s2) {
                        Ok(v) if v != 0.0 => v,
                        _ => return [0.0; 2],
                    };
                    let k = 1.0 / (4.0 * PI * PI * sigma);
                    [k * kern.g.eval(z, tau_j - s2), k * kern.g_dot.eval(z, tau_j - s2)]
                },
                lo,
                hi,
                &poles,
                &inner_knots,
                inner_tol,
            );
            match collect_failure(&failure, inner) {
                Some(v) => {
                    let (g, gd) = (kern.g.eval(z, tau_i - s), kern.g_dot.eval(z, tau_i - s));
                    let [ig, igd] = v.value;
                    [g * ig, gd * ig, g * igd, gd * igd]
                }
                None => [f64::NAN; 4],
            }
        },
        0.0,
        tau_i,
        &outer_knots,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    Ok((outer.value, outer.error_estimate.iter().sum()))
}

/// Correlators of all detectors at common proper time η for every grid point.
pub fn evolve_correlators(
    params: &DetectorParams,
    tracks: &[DetectorTrack],
    initial: &GaussianState,
    grid: &[f64],
    tol: Tolerance,
) -> Result<CorrelatorSeries> {
    if grid.first().is_some_and(|&g| g < 0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("grid", "must be strictly ascending from a nonnegative start"));
    }
    let samples = grid
        .par_iter()
        .map(|&eta| correlators_at(params, tracks, initial, &vec![eta; tracks.len()], tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorSeries {
        grid: grid.to_vec(),
        samples,
    })
}

/// The detector worldline used for single-detector histories: uniform
/// acceleration `a`, or inertial rest for `a = 0`.
pub fn single_track(a: f64) -> Result<DetectorTrack> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid("a", format!("acceleration must be nonnegative, got {a}")));
    }
    let w = if a == 0.0 { Worldline::inertial_rest(4)? } else { Worldline::uniform(4, a)? };
    DetectorTrack::new("detector", w)
}

/// Excited-state population of a detector that starts in its ground state
/// with the field in vacuum, along `grid`.
pub fn rho11_history(params: &DetectorParams, a: f64, grid: &[f64], tol: Tolerance) -> Result<Vec<(f64, f64)>> {
    let track = single_track(a)?;
    let ground = GaussianState::vacuum(&["detector"], params.scale(), 1.0)?;
    let series = evolve_correlators(params, std::slice::from_ref(&track), &ground, grid, tol)?;
    series
        .samples
        .iter()
        .map(|s| {
            let (q2, p2, pq) = s.local("detector")?;
            Ok((s.times[0], excited_population(q2, p2, pq, params.m0, params.omega_r, s.hbar)?))
        })
        .collect()
}

/// Leading-order population `(λ²/4πm₀)[η n(a) + (Λ₁ + Λ₀ − 2 ln(a/Ω_r))/(2πΩ_r)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeRho11 {
    pub value: f64,
    pub slope: f64,
    pub offset: f64,
    /// Set when `a ≤ 0`: the Planck term is replaced by its `a → 0` limit 0
    /// and the logarithm by `ln 1`.
    pub planck_term_dropped: bool,
}

pub fn perturbative_rho11(params: &DetectorParams, a: f64, eta: f64) -> PerturbativeRho11 {
    let pref = params.coupling_sq() / (4.0 * PI * params.m0);
    let w = params.omega_r;
    let (planck, log_term, dropped) = if a > 0.0 {
        (1.0 / (2.0 * PI * w / a).exp_m1(), 2.0 * (a / w).ln(), false)
    } else {
        (0.0, 0.0, true)
    };
    let slope = pref * planck;
    let offset = pref * (params.lambda1 + params.lambda0 - log_term) / (2.0 * PI * w);
    PerturbativeRho11 {
        value: slope * eta + offset,
        slope,
        offset,
        planck_term_dropped: dropped,
    }
}

/// Temperature of the thermal state with the same single-mode symplectic
/// eigenvalue ν: `Ω_r / ln((ν + ħ/2)/(ν − ħ/2))`, zero for pure states.
pub fn effective_temperature(q2: f64, p2: f64, pq: f64, params: &DetectorParams, hbar: f64) -> Result<f64> {
    let det = q2 * p2 - pq * pq;
    if !(det.is_finite() && q2 > 0.0 && p2 > 0.0) {
        return Err(Error::InvalidState(format!("correlators ({q2}, {p2}, {pq}) are not a covariance")));
    }
    let nu = det.sqrt();
    let half = 0.5 * hbar;
    if nu < half * (1.0 - 1e-9) {
        return Err(Error::InvalidState(format!("ν = {nu:e} below ħ/2")));
    }
    if nu <= half {
        return Ok(0.0);
    }
    Ok(params.omega_r / ((nu + half) / (nu - half)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::new(1e-9, 1e-13)
    }

    /// Stationary inertial `⟨Q²⟩` from the spectral integral
    /// `(γ/π)∫₀^∞ dx / ((x − Ω_r²)² + 4γ²x)`, done in closed form.
    #[test]
    fn inertial_steady_state_matches_spectral_oracle() {
        for &g in &[0.05, 0.02, 0.01] {
            let p = DetectorParams::from_frequency(1.0, 2.3, g, 20.0, 20.0).unwrap();
            let k = Kernels::new(&p);
            let w = Worldline::inertial_rest(4).unwrap();
            let (x, _) = self_integrals(&p, &k, &w, 20.0 / g, tol()).unwrap();
            let q2 = p.coupling_sq() * x[0];
            let om = p.omega();
            let a = p.omega_r.powi(2) - 2.0 * g * g;
            let oracle = (PI - (2.0 * g * om / a).atan()) / (2.0 * PI * om);
            assert!((q2 / oracle - 1.0).abs() < 1e-9, "γ = {g}: {q2} vs {oracle}");
        }
    }

    /// Accelerated steady state against the thermal spectral integral with
    /// symmetrised density `(ω/4π) coth(πω/a)`.
    #[test]
    fn accelerated_steady_state_matches_rindler_spectrum() {
        let (g, a) = (0.02, 2.0);
        let p = DetectorParams::from_frequency(1.0, 2.3, g, 20.0, 20.0).unwrap();
        let k = Kernels::new(&p);
        let w = Worldline::uniform(4, a).unwrap();
        let (x, _) = self_integrals(&p, &k, &w, 25.0 / g, tol()).unwrap();
        let q2 = p.coupling_sq() * x[0];
        let wr2 = p.omega_r * p.omega_r;
        // ω = t/(1 − t) maps [0, 1) onto [0, ∞).
        let t_peak = p.omega() / (1.0 + p.omega());
        let oracle = integrate_vec(
            |t| {
                if t >= 1.0 {
                    return [0.0];
                }
                let om = t / (1.0 - t);
                let jac = 1.0 / ((1.0 - t) * (1.0 - t));
                let coth = if om == 0.0 { 0.0 } else { 1.0 / (PI * om / a).tanh() };
                let dens = 2.0 * om * coth / ((om * om - wr2).powi(2) + 4.0 * g * g * om * om);
                [g / PI * dens * jac]
            },
            0.0,
            1.0,
            &[t_peak],
            Tolerance::new(1e-12, 1e-15),
        )
        .unwrap()
        .value[0];
        assert!((q2 / oracle - 1.0).abs() < 1e-7, "{q2} vs {oracle}");
    }

    /// Two static detectors a distance L apart: the steady cross correlator
    /// from the symmetrised spectral density `sin(|ω|L)/(4πL)`.
    #[test]
    fn static_pair_cross_correlator_matches_spectrum() {
        let (g, l) = (0.2, 1.5);
        let p = DetectorParams::from_frequency(1.0, 2.3, g, 20.0, 20.0).unwrap();
        let tracks = [
            DetectorTrack::new("A", Worldline::static_at(4, 0.0).unwrap()).unwrap(),
            DetectorTrack::new("B", Worldline::static_at(4, l).unwrap()).unwrap(),
        ];
        let init = GaussianState::vacuum(&["A", "B"], p.scale(), 1.0).unwrap();
        let tau = 60.0;
        let s = correlators_at(&p, &tracks, &init, &[tau, tau], Tolerance::new(1e-8, 1e-12)).unwrap();
        let wr2 = p.omega_r * p.omega_r;
        let spectral = integrate_vec(
            |om| [(om * l).sin() / ((om * om - wr2).powi(2) + 4.0 * g * g * om * om)],
            0.0,
            2000.0,
            &[p.omega()],
            Tolerance::new(1e-12, 1e-16).with_max_subdivisions(200_000),
        )
        .unwrap()
        .value[0];
        let oracle = 2.0 * g / (PI * l) * spectral;
        let qq = s.covariance[(0, 1)];
        assert!((qq - oracle).abs() < 1e-6 * oracle.abs().max(1e-3), "{qq} vs {oracle}");
        // Mirror symmetry of the pair: ⟨P_A, Q_B⟩ = ⟨P_B, Q_A⟩.
        assert!((s.covariance[(2, 1)] - s.covariance[(3, 0)]).abs() < 1e-7);
    }

    #[test]
    fn nonstationary_path_reproduces_uniform() {
        let p = DetectorParams::from_frequency(1.0, 2.3, 0.1, 20.0, 20.0).unwrap();
        let k = Kernels::new(&p);
        let tau = 6.0;
        let (u, _) = self_integrals(&p, &k, &Worldline::uniform(4, 1.5).unwrap(), tau, tol()).unwrap();
        let (t, _) = self_integrals(&p, &k, &Worldline::truncated_uniform(4, 1.5, 50.0).unwrap(), tau, tol()).unwrap();
        for i in 0..3 {
            assert!((u[i] - t[i]).abs() < 1e-7 * u[i].abs(), "{i}: {} vs {}", u[i], t[i]);
        }
    }

    #[test]
    fn kernels_match_closed_forms() {
        let p = DetectorParams::new(1.3, 2.0, 0.3, 20.0, 20.0).unwrap();
        let k = Kernels::new(&p);
        let w = p.omega();
        for &t in &[0.0f64, 0.4, 3.3] {
            let e = (-0.3 * t).exp();
            assert!((k.k.eval(k.z, t) - e * ((w * t).cos() + 0.3 / w * (w * t).sin())).abs() < 1e-14);
            assert!((k.g.eval(k.z, t) - e * (w * t).sin() / w).abs() < 1e-14);
            let gd = e * ((w * t).cos() - 0.3 * (w * t).sin() / w);
            assert!((k.g_dot.eval(k.z, t) - gd).abs() < 1e-14);
        }
    }

    #[test]
    fn lagged_overlap_against_quadrature() {
        let p = DetectorParams::new(1.0, 2.3, 0.2, 0.0, 0.0).unwrap();
        let k = Kernels::new(&p);
        for &(ta, tb, d) in &[(3.0, 3.0, 0.7), (3.0, 2.0, -0.5), (1.0, 4.0, -2.5), (2.0, 2.0, 2.5)] {
            let lo: f64 = f64::max(0.0, d);
            let hi: f64 = f64::min(ta, tb + d);
            let direct = if hi > lo {
                integrate_vec(|u| [k.g_dot.eval(k.z, u) * k.g.eval(k.z, u - d)], lo, hi, &[], tol())
                    .unwrap()
                    .value[0]
            } else {
                0.0
            };
            let closed = lagged_overlap(k.z, k.g_dot, k.g, ta, tb, d);
            assert!((closed - direct).abs() < 1e-12, "{closed} vs {direct}");
        }
    }

    #[test]
    fn decoupled_rotation() {
        let p = DetectorParams::new(1.0, 2.3, 0.0, 20.0, 20.0).unwrap();
        let init = GaussianState::thermal(&["detector"], 0.7, p.scale(), 1.0)
            .unwrap()
            .displace("detector", 0.4, 0.0)
            .unwrap();
        let track = single_track(1.0).unwrap();
        let period = 2.0 * PI / 2.3;
        let s = correlators_at(&p, std::slice::from_ref(&track), &init, &[period], tol()).unwrap();
        assert!((s.covariance.clone() - init.covariance()).amax() < 1e-12);
        assert!((s.mean.clone() - init.mean()).amax() < 1e-12);
        assert_eq!(s.v_part.amax(), 0.0);
    }

    #[test]
    fn initial_sample_is_exact() {
        let p = DetectorParams::new(1.0, 2.3, 0.05, 20.0, 20.0).unwrap();
        let init = GaussianState::vacuum(&["detector"], p.scale(), 1.0).unwrap();
        let s = correlators_at(&p, &[single_track(6.0).unwrap()], &init, &[0.0], tol()).unwrap();
        assert_eq!(s.covariance, init.covariance());
    }

    #[test]
    fn perturbative_examples() {
        let gamma: f64 = 1e-6;
        let wr = (2.3f64 * 2.3 + gamma * gamma).sqrt();
        let p = DetectorParams::new(1.0, wr, gamma, 20.0, 20.0).unwrap();
        let r = perturbative_rho11(&p, 6.0, 10.0);
        let slope = 2.0 * gamma / ((2.0 * PI * wr / 6.0).exp() - 1.0);
        assert!((r.slope - slope).abs() < 1e-12 * slope);
        let offset = 2.0 * gamma * (40.0 - 2.0 * (6.0 / wr).ln()) / (2.0 * PI * wr);
        assert!((r.offset - offset).abs() < 1e-12 * offset);
        // λ → 2λ multiplies γ by 4.
        let p4 = DetectorParams::new(1.0, wr, 4.0 * gamma, 20.0, 20.0).unwrap();
        let r4 = perturbative_rho11(&p4, 6.0, 10.0);
        assert!((r4.value - 4.0 * r.value).abs() < 1e-12 * r.value);
        assert!(perturbative_rho11(&p, 0.0, 1.0).planck_term_dropped);
    }

    #[test]
    fn temperature_round_trip() {
        let p = DetectorParams::new(1.7, 2.0, 0.0, 0.0, 0.0).unwrap();
        for &t in &[0.3, 0.9549, 4.0] {
            let c = 1.0 / (p.omega_r / (2.0 * t)).tanh();
            let q2 = c / (2.0 * p.m0 * p.omega_r);
            let p2 = c * p.m0 * p.omega_r / 2.0;
            let te = effective_temperature(q2, p2, 0.0, &p, 1.0).unwrap();
            assert!((te - t).abs() < 1e-10 * t, "{te} vs {t}");
        }
        let (q2, p2) = p.scale().vacuum_variances(1.0);
        assert_eq!(effective_temperature(q2, p2, 0.0, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn inertial_late_time_is_dressed_vacuum() {
        let p = DetectorParams::from_frequency(1.0, 2.3, 0.005, 20.0, 20.0).unwrap();
        let init = GaussianState::vacuum(&["detector"], p.scale(), 1.0).unwrap();
        let s = correlators_at(&p, &[single_track(0.0).unwrap()], &init, &[2000.0], tol()).unwrap();
        assert!(s.v_part.amax() > 0.1);
        let (q2, _, _) = s.local("detector").unwrap();
        let (vq, _) = p.scale().vacuum_variances(1.0);
        assert!((q2 / vq - 1.0).abs() < 0.01, "{}", q2 / vq);
        let rho = rho11_history(&p, 0.0, &[2000.0, 2000.0 + PI / p.omega(), 2400.0], tol()).unwrap();
        assert!(rho[0].1 > 0.0 && rho[0].1 < 0.02, "{rho:?}");
        assert!((rho[2].1 - rho[0].1).abs() < 1e-3 * rho[0].1, "{rho:?}");
    }
}
