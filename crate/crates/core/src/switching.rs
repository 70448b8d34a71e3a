//! Smooth compactly supported switching functions.
//!
//! The ramps are the normalised primitive of the bump `exp(-1/(x(1-x)))` on
//! `[0, 1]`, so χ is C∞, equals one on the plateau `[τ₀, τ]` and vanishes
//! outside `[τ₀ - δ, τ + δ]`.

use std::sync::OnceLock;

use crate::error::{invalid, Result};

/// Name recorded in run metadata for the ramp family.
pub const RAMP_FAMILY: &str = "bump-primitive exp(-1/(x(1-x)))";

const GL_ORDER: usize = 48;

struct RampRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    norm: f64,
}

fn bump(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        (-1.0 / (y * (1.0 - y))).exp()
    }
}

// Gauss–Legendre nodes on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static RampRule {
    static RULE: OnceLock<RampRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        // Normalisation from the half integral on [0, 1/2] by symmetry.
        let half: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| 0.25 * w * bump(0.25 * (x + 1.0)))
            .sum();
        RampRule {
            nodes,
            weights,
            norm: 2.0 * half,
        }
    })
}

/// Smooth step from 0 at `x = 0` to 1 at `x = 1`.
pub fn ramp(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > 0.5 {
        return 1.0 - ramp(1.0 - x);
    }
    let r = rule();
    let half = 0.5 * x;
    let s: f64 = r
        .nodes
        .iter()
        .zip(&r.weights)
        .map(|(t, w)| w * bump(half * (t + 1.0)))
        .sum();
    half * s / r.norm
}

/// χ(u): plateau `[tau0, tau]`, ramps of duration `delta` on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingFunction {
    pub tau0: f64,
    pub tau: f64,
    pub delta: f64,
}

impl SwitchingFunction {
    pub fn new(tau0: f64, tau: f64, delta: f64) -> Result<Self> {
        if !(tau0 < tau) || !tau0.is_finite() || !tau.is_finite() {
            return Err(invalid("tau0", format!("need finite tau0 < tau, got {tau0}, {tau}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid("delta", format!("ramp duration must be positive, got {delta}")));
        }
        Ok(Self { tau0, tau, delta })
    }

    pub fn value(&self, u: f64) -> f64 {
        if u <= self.tau0 - self.delta || u >= self.tau + self.delta {
            0.0
        } else if u < self.tau0 {
            ramp((u - self.tau0 + self.delta) / self.delta)
        } else if u <= self.tau {
            1.0
        } else {
            ramp((self.tau + self.delta - u) / self.delta)
        }
    }

    /// Closed support `[tau0 - delta, tau + delta]`.
    pub fn support(&self) -> (f64, f64) {
        (self.tau0 - self.delta, self.tau + self.delta)
    }

    pub fn plateau(&self) -> f64 {
        self.tau - self.tau0
    }

    /// Points where the ramp pieces join.
    pub fn knots(&self) -> [f64; 4] {
        [
            self.tau0 - self.delta,
            self.tau0,
            self.tau,
            self.tau + self.delta,
        ]
    }

    /// `∫ χ(u)² du`.
    pub fn square_integral(&self) -> f64 {
        // Each ramp contributes δ ∫_0^1 ψ², evaluated once.
        static RAMP_SQ: OnceLock<f64> = OnceLock::new();
        let ramp_sq = *RAMP_SQ.get_or_init(|| {
            crate::quadrature::integrate_with_breakpoints(
                |x| ramp(x).powi(2),
                0.0,
                1.0,
                &[0.5],
                crate::quadrature::Tolerance::new(1e-13, 1e-16),
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
        });
        self.plateau() + 2.0 * self.delta * ramp_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_with_breakpoints, Tolerance};

    #[test]
    fn ramp_matches_adaptive_primitive() {
        let tol = Tolerance::new(1e-13, 1e-18);
        let norm = integrate_with_breakpoints(bump, 0.0, 1.0, &[0.5], tol).unwrap().value;
        for &x in &[0.01, 0.1, 0.25, 0.4, 0.5, 0.6, 0.9, 0.99] {
            let direct = integrate_with_breakpoints(bump, 0.0, x, &[], tol).unwrap().value / norm;
            assert!((ramp(x) - direct).abs() < 1e-12, "x = {x}: {} vs {direct}", ramp(x));
        }
    }

    #[test]
    fn plateau_and_support() {
        let chi = SwitchingFunction::new(1.0, 4.0, 0.5).unwrap();
        for k in 0..=30 {
            let u = 1.0 + 3.0 * k as f64 / 30.0;
            assert_eq!(chi.value(u), 1.0);
        }
        assert_eq!(chi.value(0.5), 0.0);
        assert_eq!(chi.value(4.5), 0.0);
        assert_eq!(chi.value(-3.0), 0.0);
        for k in 0..=200 {
            let u = -1.0 + 7.0 * k as f64 / 200.0;
            let v = chi.value(u);
            assert!((0.0..=1.0).contains(&v));
        }
        assert!((chi.value(0.75) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn square_integral_against_quadrature() {
        let chi = SwitchingFunction::new(0.0, 2.0, 0.3).unwrap();
        let direct = integrate_with_breakpoints(|u| chi.value(u).powi(2), -0.3, 2.3, &chi.knots(), Tolerance::new(1e-12, 1e-14))
            .unwrap()
            .value;
        assert!((chi.square_integral() - direct).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SwitchingFunction::new(1.0, 1.0, 0.1).is_err());
        assert!(SwitchingFunction::new(0.0, 1.0, 0.0).is_err());
    }
}
