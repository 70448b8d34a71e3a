//! Transition probabilities with smooth switching and sharp-switching
//! transition rates for detectors in dimensions 2 to 6.
//!
//! The probabilities and rates are written in terms of the pointwise
//! limit W₀ plus explicit switching-dependent terms, so every integrand
//! handed to the quadrature is a genuine function. The λ²|⟨0|Q|ω⟩|²
//! prefactor is never included.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::field_kernel::{Kernel, WightmanKernel};
use crate::quadrature::{integrate_oscillatory_tail, integrate_with_breakpoints, IntegralResult, Tolerance};
use crate::switching::SwitchingFunction;
use crate::worldline::{Worldline, WorldlineKind};

/// One named switching-dependent or local contribution to a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTerm {
    pub name: &'static str,
    pub value: f64,
}

/// Transition rate with its breakdown: `value = integral + Σ boundary_terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub value: f64,
    pub integral: f64,
    pub boundary_terms: Vec<BoundaryTerm>,
    pub error_estimate: f64,
}

impl RateResult {
    fn assemble(integral: IntegralResult, boundary_terms: Vec<BoundaryTerm>) -> Self {
        let value = boundary_terms.iter().fold(integral.value, |acc, t| acc + t.value);
        Self {
            value,
            integral: integral.value,
            boundary_terms,
            error_estimate: integral.error_estimate,
        }
    }

    pub fn boundary(&self, name: &str) -> Option<f64> {
        self.boundary_terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// Constant proper acceleration of a stationary worldline (0 when inertial).
fn stationary_acceleration(w: &Worldline) -> Option<f64> {
    match w.kind() {
        WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => Some(0.0),
        WorldlineKind::UniformAcceleration { a, .. } => Some(*a),
        _ => None,
    }
}

// Short-gap expansions of the counterterm-subtracted integrands on a
// hyperbola of acceleration a (a = 0 is the inertial line), through s⁶.
fn series_d4(w: f64, a: f64, s: f64) -> f64 {
    let (w2, a2, s2) = (w * w, a * a, s * s);
    let (w4, a4, s4) = (w2 * w2, a2 * a2, s2 * s2);
    let (w6, a6, s6) = (w4 * w2, a4 * a2, s4 * s2);
    w2 / 2.0 + a2 / 12.0 - (w4 / 24.0 + a2 * w2 / 24.0 + a4 / 240.0) * s2
        + (w6 / 720.0 + a2 * w4 / 288.0 + a4 * w2 / 480.0 + a6 / 6048.0) * s4
        - (w6 * w2 / 40320.0 + a2 * w6 / 8640.0 + a4 * w4 / 5760.0 + a6 * w2 / 12096.0 + a4 * a4 / 172800.0) * s6
}

fn series_d5(w: f64, a: f64, s: f64) -> f64 {
    let (w2, a2, s2) = (w * w, a * a, s * s);
    let (w4, a4, s4) = (w2 * w2, a2 * a2, s2 * s2);
    let (w6, a6, s6) = (w4 * w2, a4 * a2, s4 * s2);
    w * (-w2 / 6.0 - a2 / 8.0
        + (w4 / 120.0 + a2 * w2 / 48.0 + 17.0 * a4 / 1920.0) * s2
        - (w6 / 5040.0 + a2 * w4 / 960.0 + 17.0 * a4 * w2 / 11520.0 + 457.0 * a6 / 967680.0) * s4
        + (w6 * w2 / 362880.0
            + a2 * w6 / 40320.0
            + 17.0 * a4 * w4 / 230400.0
            + 457.0 * a6 * w2 / 5806080.0
            + 3287.0 * a4 * a4 / 154828800.0)
            * s6)
}

fn series_d6(w: f64, a: f64, s: f64) -> f64 {
    let (w2, a2, s2) = (w * w, a * a, s * s);
    let (w4, a4, s4) = (w2 * w2, a2 * a2, s2 * s2);
    let (w6, a6, s6) = (w4 * w2, a4 * a2, s4 * s2);
    let (w8, a8) = (w4 * w4, a4 * a4);
    w4 / 24.0 + a2 * w2 / 12.0 + 11.0 * a4 / 720.0
        - (w6 / 720.0 + a2 * w4 / 144.0 + 11.0 * a4 * w2 / 1440.0 + 31.0 * a6 / 30240.0) * s2
        + (w8 / 40320.0 + a2 * w6 / 4320.0 + 11.0 * a4 * w4 / 17280.0 + 31.0 * a6 * w2 / 60480.0 + 41.0 * a8 / 725760.0) * s4
        - (w8 * w2 / 3628800.0
            + a2 * w8 / 241920.0
            + 11.0 * a4 * w6 / 518400.0
            + 31.0 * a6 * w4 / 725760.0
            + 41.0 * a8 * w2 / 1451520.0
            + 31.0 * a8 * a2 / 11404800.0)
            * s6
}

const SERIES_RADIUS: f64 = 0.05;

/// `−(Δz)²` between `τ` and `τ − s`.
fn timelike_gap(w: &Worldline, tau: f64, s: f64) -> Result<f64> {
    let x = -w.gap_interval_sq(tau, s);
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NullSeparation(s))
    }
}

/// Rate integrand for one dimension, split into the full (counterterm
/// subtracted) piece and the pure-W₀ piece used beyond the switch-on point.
struct RateIntegrand<'a> {
    d: usize,
    omega: f64,
    w: &'a Worldline,
    kernel: &'a dyn Kernel,
    accel: Option<f64>,
    local_accel_sq: f64,
}

impl<'a> RateIntegrand<'a> {
    fn new(d: usize, omega: f64, w: &'a Worldline, kernel: &'a dyn Kernel, tau: f64) -> Result<Self> {
        if !(2..=6).contains(&d) {
            return Err(Error::UnsupportedDimension(d, "2-6"));
        }
        if kernel.dimension() != d {
            return Err(Error::DimensionMismatch(kernel.dimension(), d));
        }
        if w.dimension() != d {
            return Err(Error::DimensionMismatch(w.dimension(), d));
        }
        if d >= 5 && kernel.as_vacuum().is_none() {
            return Err(invalid("kernel", "d = 5, 6 rates are defined for the Minkowski vacuum only"));
        }
        if !omega.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
        let accel = if kernel.as_vacuum().is_some() { stationary_acceleration(w) } else { None };
        let a_tau = w.proper_accel_scalar(tau);
        Ok(Self {
            d,
            omega,
            w,
            kernel,
            accel,
            local_accel_sq: a_tau * a_tau,
        })
    }

    fn re_exp_w0(&self, tau: f64, s: f64) -> Result<f64> {
        let w0: Complex64 = self.kernel.w0_self(self.w, tau, s)?;
        let (sn, cs) = (self.omega * s).sin_cos();
        Ok(cs * w0.re + sn * w0.im)
    }

    /// Counterterm-subtracted integrand at gap `s`.
    fn full(&self, tau: f64, s: f64) -> Result<f64> {
        let om = self.omega;
        if let Some(a) = self.accel {
            let scale = a.max(om.abs());
            if scale * s < SERIES_RADIUS && self.d >= 4 {
                return Ok(match self.d {
                    4 => series_d4(om, a, s) / (2.0 * PI * PI),
                    5 => series_d5(om, a, s) / (4.0 * PI * PI),
                    _ => series_d6(om, a, s) / (2.0 * PI * PI * PI),
                });
            }
        }
        match self.d {
            2 | 3 => Ok(2.0 * self.re_exp_w0(tau, s)?),
            4 => {
                if self.kernel.as_vacuum().is_some() {
                    // 1/s² − cos(ωs)/X with the 1 − cos part kept exact.
                    let excess = self.w.gap_interval_excess(tau, s);
                    let x = s * s + excess;
                    if !(x > 0.0) {
                        return Err(Error::NullSeparation(s));
                    }
                    let (sn, cs) = (0.5 * om * s).sin_cos();
                    let one_minus_cos = 2.0 * sn * sn;
                    let cos = cs * cs - sn * sn;
                    let g = one_minus_cos / (s * s) + cos * excess / (s * s * x);
                    Ok(g / (2.0 * PI * PI))
                } else {
                    Ok(2.0 * self.re_exp_w0(tau, s)? + 1.0 / (2.0 * PI * PI * s * s))
                }
            }
            5 => {
                let x = timelike_gap(self.w, tau, s)?;
                Ok(((om * s).sin() / (x * x.sqrt()) - om / (s * s)) / (4.0 * PI * PI))
            }
            _ => {
                let x = timelike_gap(self.w, tau, s)?;
                let s2 = s * s;
                let c = (3.0 * om * om + self.local_accel_sq) / 6.0;
                Ok(((om * s).cos() / (x * x) - 1.0 / (s2 * s2) + c / s2) / (2.0 * PI * PI * PI))
            }
        }
    }

    /// W₀-only integrand; equals `full` minus the counterterms.
    fn bare(&self, tau: f64, s: f64) -> Result<f64> {
        let om = self.omega;
        match self.d {
            2..=4 => Ok(2.0 * self.re_exp_w0(tau, s)?),
            5 => {
                let x = timelike_gap(self.w, tau, s)?;
                Ok((om * s).sin() / (x * x.sqrt()) / (4.0 * PI * PI))
            }
            _ => {
                let x = timelike_gap(self.w, tau, s)?;
                Ok((om * s).cos() / (x * x) / (2.0 * PI * PI * PI))
            }
        }
    }

    fn local_terms(&self) -> Vec<BoundaryTerm> {
        let om = self.omega;
        let a2 = self.local_accel_sq;
        match self.d {
            2 => vec![],
            3 => vec![BoundaryTerm {
                name: "constant",
                value: 0.25,
            }],
            4 => vec![BoundaryTerm {
                name: "local",
                value: -om / (4.0 * PI),
            }],
            5 => vec![BoundaryTerm {
                name: "local",
                value: (4.0 * om * om + a2) / (64.0 * PI),
            }],
            _ => vec![BoundaryTerm {
                name: "local",
                value: -om * (om * om + a2) / (24.0 * PI * PI),
            }],
        }
    }

    fn switch_on_terms(&self, dtau: f64) -> Vec<BoundaryTerm> {
        let om = self.omega;
        match self.d {
            4 => vec![BoundaryTerm {
                name: "switch_on",
                value: 1.0 / (2.0 * PI * PI * dtau),
            }],
            5 => vec![BoundaryTerm {
                name: "switch_on",
                value: -om / (4.0 * PI * PI * dtau),
            }],
            6 => vec![
                BoundaryTerm {
                    name: "switch_on",
                    value: (3.0 * om * om + self.local_accel_sq) / (12.0 * PI * PI * PI * dtau),
                },
                BoundaryTerm {
                    name: "switch_on_cubic",
                    value: -1.0 / (6.0 * PI * PI * PI * dtau.powi(3)),
                },
            ],
            _ => vec![],
        }
    }

    fn integrate(&self, tau: f64, dtau: f64, tol: Tolerance) -> Result<IntegralResult> {
        let failure = std::cell::Cell::new(None);
        let r = integrate_with_breakpoints(
            |s| {
                if s == 0.0 {
                    return self.full(tau, f64::MIN_POSITIVE.sqrt()).unwrap_or(f64::NAN);
                }
                match self.full(tau, s) {
                    Ok(v) => v,
                    Err(e) => {
                        let first = failure.take();
                        failure.set(first.or(Some(e)));
                        f64::NAN
                    }
                }
            },
            0.0,
            dtau,
            &[],
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        r
    }
}

fn check_d6_acceleration(w: &Worldline, tau: f64, dtau: f64) -> Result<()> {
    const SAMPLES: usize = 400;
    let reference = w.proper_accel_scalar(tau);
    let mut worst: f64 = 0.0;
    for k in 0..=SAMPLES {
        let t = tau - dtau * k as f64 / SAMPLES as f64;
        worst = worst.max((w.proper_accel_scalar(t) - reference).abs());
    }
    if worst > 1e-10 * reference.max(1.0) {
        Err(Error::NonConstantAcceleration(worst))
    } else {
        Ok(())
    }
}

/// Sharp-switching transition rate at switch-off time `tau`, switched on at
/// `tau − dtau`.
pub fn transition_rate(
    d: usize,
    w: &Worldline,
    omega: f64,
    tau: f64,
    dtau: f64,
    kernel: &dyn Kernel,
    tol: Tolerance,
) -> Result<RateResult> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(invalid("dtau", format!("must be positive and finite, got {dtau}")));
    }
    let integrand = RateIntegrand::new(d, omega, w, kernel, tau)?;
    if d == 6 {
        check_d6_acceleration(w, tau, dtau)?;
    }
    let integral = integrand.integrate(tau, dtau, tol)?;
    let mut terms = integrand.local_terms();
    terms.extend(integrand.switch_on_terms(dtau));
    Ok(RateResult::assemble(integral, terms))
}

/// Gap at which the finite part is split from the oscillatory tail.
fn default_split(omega: f64) -> f64 {
    if omega == 0.0 {
        10.0
    } else {
        (8.0 * PI / omega.abs()).max(1.0)
    }
}

/// Rate in the limit of switch-on in the infinite past.
///
/// The finite-`Δτ` display is evaluated at a split point `T` and continued
/// exactly: the counterterms integrate in closed form beyond `T`, and the
/// oscillatory W₀ tail is summed half-cycle by half-cycle with epsilon
/// extrapolation.
pub fn transition_rate_limit(d: usize, w: &Worldline, omega: f64, tau: f64, kernel: &dyn Kernel, tol: Tolerance) -> Result<RateResult> {
    let integrand = RateIntegrand::new(d, omega, w, kernel, tau)?;
    if d == 6
        && stationary_acceleration(w).is_none() {
            // Constancy over the whole past cannot be sampled; require it by kind.
            check_d6_acceleration(w, tau, 1e3)?;
        }
    let split = default_split(omega);
    let head = integrand.integrate(tau, split, tol)?;
    let half_period = if omega == 0.0 { split } else { PI / omega.abs() };
    let failure = std::cell::Cell::new(None);
    let tail = integrate_oscillatory_tail(
        |s| match integrand.bare(tau, s) {
            Ok(v) => v,
            Err(e) => {
                let first = failure.take();
                failure.set(first.or(Some(e)));
                f64::NAN
            }
        },
        split,
        half_period,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let tail = tail?;
    let integral = IntegralResult {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
        evaluations: head.evaluations + tail.evaluations,
    };
    let mut terms = integrand.local_terms();
    // Beyond T the counterterms integrate to exactly the switch-on terms at Δτ = T.
    terms.extend(integrand.switch_on_terms(split).into_iter().map(|t| BoundaryTerm {
        name: match t.name {
            "switch_on" => "counterterm_tail",
            _ => "counterterm_tail_cubic",
        },
        value: t.value,
    }));
    Ok(RateResult::assemble(integral, terms))
}

/// `h(s) = ½ ∫ [χ(u) − χ(u − s)]² du = ∫ χ(u)[χ(u) − χ(u − s)] du`.
fn switch_defect(chi: &SwitchingFunction, s: f64, tol: Tolerance) -> Result<f64> {
    let (lo, hi) = chi.support();
    if s >= hi - lo {
        return Ok(chi.square_integral());
    }
    let knots = chi.knots();
    let bps: Vec<f64> = knots.iter().flat_map(|k| [*k, k + s]).collect();
    integrate_with_breakpoints(|u| (chi.value(u) - chi.value(u - s)).powi(2), lo, hi + s, &bps, tol).map(|r| 0.5 * r.value)
}

/// Gaps at which `h(s)` or the overlap `∫χ(u)χ(u−s)du` change shape.
fn gap_breakpoints(chi: &SwitchingFunction) -> Vec<f64> {
    let k = chi.knots();
    let mut out: Vec<f64> = k.iter().flat_map(|a| k.iter().map(move |b| a - b)).filter(|d| *d > 0.0).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Response function 𝓕(ω) for `d ∈ {2, 3, 4}` with smooth switching `chi`.
pub fn response_function(
    d: usize,
    chi: &SwitchingFunction,
    w: &Worldline,
    omega: f64,
    kernel: &dyn Kernel,
    tol: Tolerance,
) -> Result<IntegralResult> {
    if !(2..=4).contains(&d) {
        return Err(Error::UnsupportedDimension(d, "2-4 for smooth switching"));
    }
    let integrand = RateIntegrand::new(d, omega, w, kernel, chi.tau)?;
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 0.1,
        ..tol
    };
    let sq = chi.square_integral();
    let (lo, hi) = chi.support();
    let length = hi - lo;
    let gaps = gap_breakpoints(chi);

    let failure = std::cell::Cell::new(None);
    let record = |e: Error| {
        let first = failure.take();
        failure.set(first.or(Some(e)));
        f64::NAN
    };

    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;

    match d {
        3 => value += 0.25 * sq,
        4 => value += -omega / (4.0 * PI) * sq,
        _ => {}
    }

    if d == 4 {
        // Switching term: ∫₀^L h/s² plus the exact tail ∫χ²/L.
        let r = integrate_with_breakpoints(
            |s| {
                if s == 0.0 {
                    return 0.0;
                }
                match switch_defect(chi, s, inner_tol) {
                    Ok(h) => h / (s * s),
                    Err(e) => record(e),
                }
            },
            0.0,
            length,
            &gaps,
            tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let r = r?;
        value += (r.value + sq / length) / (2.0 * PI * PI);
        error += r.error_estimate / (2.0 * PI * PI);
        evaluations += r.evaluations;
    }

    let bulk = if integrand.accel.is_some() {
        // Stationary: the double integral collapses onto the overlap ∫χ(u)χ(u−s)du.
        integrate_with_breakpoints(
            |s| {
                let overlap = match switch_defect(chi, s, inner_tol) {
                    Ok(h) => sq - h,
                    Err(e) => return record(e),
                };
                let s_eval = if s == 0.0 { f64::MIN_POSITIVE.sqrt() } else { s };
                match integrand.full(0.0, s_eval) {
                    Ok(g) => g * overlap,
                    Err(e) => record(e),
                }
            },
            0.0,
            length,
            &gaps,
            tol,
        )
    } else {
        crate::quadrature::integrate_2d_switch(
            |u, s| {
                let s_eval = if s == 0.0 { f64::MIN_POSITIVE.sqrt() } else { s };
                integrand.full(u, s_eval).unwrap_or_else(&record)
            },
            chi,
            tol,
        )
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let bulk = bulk?;
    value += bulk.value;
    error += bulk.error_estimate;
    evaluations += bulk.evaluations;
    Ok(IntegralResult {
        value,
        error_estimate: error,
        evaluations,
    })
}

/// Least-squares fit `𝓕(δ) ≈ C ln(1/δ) + R + E₁ δ + E₂ δ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceFit {
    pub coefficient: f64,
    /// Standard error of `coefficient` from the fit residuals.
    pub coefficient_error: f64,
    pub remainder: f64,
    pub linear: f64,
    pub quadratic: f64,
    /// RMS fit residual relative to the largest |𝓕| on the grid.
    pub residual: f64,
}

/// Default relative residual above which [`divergence_probe`] reports a poor fit.
pub const DEFAULT_FIT_THRESHOLD: f64 = 1e-5;

/// Fits the switching-duration dependence of 𝓕 over a δ-grid.
#[allow(clippy::too_many_arguments)]
pub fn divergence_probe(
    d: usize,
    w: &Worldline,
    omega: f64,
    tau0: f64,
    tau: f64,
    deltas: &[f64],
    kernel: &dyn Kernel,
    tol: Tolerance,
    threshold: f64,
) -> Result<DivergenceFit> {
    const BASIS: usize = 4;
    if deltas.len() <= BASIS {
        return Err(invalid("deltas", "need at least five switching durations"));
    }
    let (dmin, dmax) = deltas.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(dmin > 0.0) || dmax / dmin < 10.0 {
        return Err(invalid("deltas", "grid must be positive and span at least a decade"));
    }
    let mut values = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let chi = SwitchingFunction::new(tau0, tau, delta)?;
        values.push(response_function(d, &chi, w, omega, kernel, tol)?.value);
    }
    let n = deltas.len();
    let design = DMatrix::from_fn(n, BASIS, |i, j| match j {
        0 => (1.0 / deltas[i]).ln(),
        1 => 1.0,
        2 => deltas[i],
        _ => deltas[i] * deltas[i],
    });
    let rhs = DVector::from_vec(values.clone());
    let normal = design.transpose() * &design;
    let inverse = normal
        .try_inverse()
        .ok_or_else(|| invalid("deltas", "degenerate fit design"))?;
    let coef = &inverse * design.transpose() * &rhs;
    let resid = &design * &coef - &rhs;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let rss = resid.norm_squared();
    let residual = (rss / n as f64).sqrt() / scale;
    if residual > threshold {
        return Err(Error::PoorFit { residual, threshold });
    }
    let dof = (n - BASIS).max(1) as f64;
    Ok(DivergenceFit {
        coefficient: coef[0],
        coefficient_error: (rss / dof * inverse[(0, 0)]).sqrt(),
        remainder: coef[1],
        linear: coef[2],
        quadratic: coef[3],
        residual,
    })
}

/// Convenience: vacuum kernel for dimension `d` (μ = 1 when d = 2).
pub fn vacuum(d: usize) -> Result<WightmanKernel> {
    WightmanKernel::new(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::new(1e-10, 1e-13)
    }

    fn planck4(w: f64, a: f64) -> f64 {
        w / (2.0 * PI) / ((2.0 * PI * w / a).exp() - 1.0)
    }

    #[test]
    fn series_match_direct_formulas() {
        let (w, a): (f64, f64) = (1.3, 2.1);
        let s: f64 = 0.3;
        let x = (4.0 / (a * a)) * (0.5 * a * s).sinh().powi(2);
        let g4 = 1.0 / (s * s) - (w * s).cos() / x;
        let g5 = (w * s).sin() / x.powf(1.5) - w / (s * s);
        let g6 = (w * s).cos() / (x * x) - 1.0 / s.powi(4) + (3.0 * w * w + a * a) / (6.0 * s * s);
        assert!((series_d4(w, a, s) - g4).abs() < 1e-6);
        assert!((series_d5(w, a, s) - g5).abs() < 1e-6);
        assert!((series_d6(w, a, s) - g6).abs() < 1e-5);
    }

    #[test]
    fn d4_inertial_limits() {
        let w = Worldline::inertial_rest(4).unwrap();
        let k = vacuum(4).unwrap();
        let up = transition_rate_limit(4, &w, 1.7, 0.0, &k, tol()).unwrap();
        assert!(up.value.abs() < 1e-8, "{}", up.value);
        let down = transition_rate_limit(4, &w, -1.7, 0.0, &k, tol()).unwrap();
        assert!((down.value - 1.7 / (2.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn d4_planck() {
        let w = Worldline::uniform(4, 6.0).unwrap();
        let k = vacuum(4).unwrap();
        for &om in &[-2.3, 0.5, 1.15, 2.3] {
            let r = transition_rate_limit(4, &w, om, 0.0, &k, tol()).unwrap();
            let expected = planck4(om, 6.0);
            assert!((r.value - expected).abs() < 1e-6 * expected.abs(), "{om}: {} vs {expected}", r.value);
        }
    }

    #[test]
    fn finite_window_breakdown() {
        let w = Worldline::uniform(4, 2.0).unwrap();
        let k = vacuum(4).unwrap();
        let r = transition_rate(4, &w, 0.9, 1.0, 5.0, &k, tol()).unwrap();
        let sum: f64 = r.integral + r.boundary_terms.iter().map(|t| t.value).sum::<f64>();
        assert!((sum - r.value).abs() <= 1e-12 * r.value.abs().max(1.0));
        assert!((r.boundary("switch_on").unwrap() - 1.0 / (10.0 * PI * PI)).abs() < 1e-15);
        // Finite window approaches the limit as Δτ grows.
        let lim = transition_rate_limit(4, &w, 0.9, 1.0, &k, tol()).unwrap();
        let far = transition_rate(4, &w, 0.9, 1.0, 200.0, &k, tol()).unwrap();
        assert!((far.value - lim.value).abs() < 1e-4);
    }

    #[test]
    fn d3_limits() {
        let k = vacuum(3).unwrap();
        let w = Worldline::inertial_rest(3).unwrap();
        assert!(transition_rate_limit(3, &w, 1.0, 0.0, &k, tol()).unwrap().value.abs() < 1e-8);
        assert!((transition_rate_limit(3, &w, -1.0, 0.0, &k, tol()).unwrap().value - 0.5).abs() < 1e-8);
        let acc = Worldline::uniform(3, 2.0).unwrap();
        let r = transition_rate_limit(3, &acc, 1.0, 0.0, &k, tol()).unwrap();
        let expected = 0.5 / ((PI).exp() + 1.0);
        assert!((r.value - expected).abs() < 1e-7 * expected, "{} vs {expected}", r.value);
    }

    #[test]
    fn d2_limits() {
        let k = vacuum(2).unwrap();
        let acc = Worldline::uniform(2, 1.5).unwrap();
        let om = 0.8;
        let r = transition_rate_limit(2, &acc, om, 0.0, &k, tol()).unwrap();
        let expected = 1.0 / (om * ((2.0 * PI * om / 1.5).exp() - 1.0));
        assert!((r.value - expected).abs() < 1e-6 * expected, "{} vs {expected}", r.value);
        let rest = Worldline::inertial_rest(2).unwrap();
        let r = transition_rate_limit(2, &rest, -om, 0.0, &k, tol()).unwrap();
        assert!((r.value - 1.0 / om).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn d5_d6_uniform() {
        let (a, om) = (2.0, 1.1);
        let w5 = Worldline::uniform(5, a).unwrap();
        let r = transition_rate_limit(5, &w5, om, 0.0, &vacuum(5).unwrap(), tol()).unwrap();
        let expected = (om * om + a * a / 4.0) / (8.0 * PI * ((2.0 * PI * om / a).exp() + 1.0));
        assert!((r.value - expected).abs() < 1e-7 * expected, "{} vs {expected}", r.value);
        let w6 = Worldline::uniform(6, a).unwrap();
        let r = transition_rate_limit(6, &w6, om, 0.0, &vacuum(6).unwrap(), tol()).unwrap();
        let expected = om * (om * om + a * a) / (12.0 * PI * PI * ((2.0 * PI * om / a).exp() - 1.0));
        assert!((r.value - expected).abs() < 1e-7 * expected, "{} vs {expected}", r.value);
        let r = transition_rate(6, &w6, om, 0.0, 30.0, &vacuum(6).unwrap(), tol()).unwrap();
        assert!((r.value - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn d6_rejects_varying_acceleration() {
        let w = Worldline::asymptotic_uniform(6, 2.0, 1.0).unwrap();
        let r = transition_rate(6, &w, 1.0, 0.0, 3.0, &vacuum(6).unwrap(), tol());
        assert!(matches!(r, Err(Error::NonConstantAcceleration(_))));
    }

    #[test]
    fn d3_probability_at_large_gap() {
        // The 1/s edge of W₀ leaves ∓(1/4)∫χ² as |ω| → ∞, on top of the constant (1/4)∫χ².
        let chi = SwitchingFunction::new(0.0, 3.0, 0.5).unwrap();
        let w = Worldline::uniform(3, 1.0).unwrap();
        let k = vacuum(3).unwrap();
        let sq = chi.square_integral();
        let t = Tolerance::new(1e-8, 1e-11);
        let hi = response_function(3, &chi, &w, 80.0, &k, t).unwrap();
        let lo = response_function(3, &chi, &w, -80.0, &k, t).unwrap();
        assert!(hi.value.abs() < 2e-2 * sq, "{}", hi.value);
        assert!((lo.value - 0.5 * sq).abs() < 2e-2 * sq, "{} vs {}", lo.value, 0.5 * sq);
    }
}
