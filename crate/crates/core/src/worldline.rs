//! Prescribed timelike worldlines in d-dimensional Minkowski space.
//!
//! Signature is (−, +, …, +) and units are ħ = c = 1. Every worldline is
//! parameterised by proper time. Apart from the general inertial kind, all
//! worldlines move along the x¹ axis; for those the null coordinates
//! `u = t − x¹`, `v = t + x¹` are evaluated directly so that intervals between
//! nearby points and lightcone conditions at large rapidity keep full
//! relative precision.

use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_subtracted, kronrod_fixed, Tolerance};

/// A point `(t, x¹, …, x^{d−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub coords: Vec<f64>,
}

impl SpacetimePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn t(&self) -> f64 {
        self.coords[0]
    }

    /// Lorentzian squared interval to `other`: `−Δt² + Σ Δxⁱ²`.
    pub fn interval_sq(&self, other: &SpacetimePoint) -> Result<f64> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch(self.dimension(), other.dimension()));
        }
        let dt = self.coords[0] - other.coords[0];
        let dx2: f64 = self.coords[1..]
            .iter()
            .zip(&other.coords[1..])
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        Ok(dx2 - dt * dt)
    }
}

/// Trajectory family.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldlineKind {
    /// `z(τ) = offset + τ γ (1, v)`; `velocity` has d − 1 components, `offset` d.
    Inertial { velocity: Vec<f64>, offset: Vec<f64> },
    /// `(a⁻¹ sinh aτ, a⁻¹ cosh aτ, 0, …) + (0, offset)`.
    UniformAcceleration { a: f64, offset: Vec<f64> },
    /// Proper acceleration `a(τ) = a (1 + tanh(τ / width)) / 2`: inertial in the
    /// far past, uniformly accelerated in the far future. Passes `(0, 1/a, …)`
    /// at τ = 0 with zero velocity.
    AsymptoticUniform { a: f64, width: f64 },
    /// Uniform acceleration up to `tau2`, inertial with the velocity at `tau2`
    /// afterwards (C¹ at the junction).
    TruncatedUniform { a: f64, tau2: f64 },
    /// At rest at `x¹ = x`.
    StaticAt { x: f64 },
}

/// A worldline of a given kind in spacetime dimension `d ∈ [2, 6]`.
#[derive(Debug, Clone)]
pub struct Worldline {
    kind: WorldlineKind,
    dimension: usize,
    // Cached u(+∞) for the asymptotic profile.
    future_u: OnceLock<Option<f64>>,
}

impl PartialEq for Worldline {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dimension == other.dimension
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (2..=6).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d, "2-6"))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// `∫_lo^hi e^{k t} dt` without cancellation for short segments.
fn exp_segment(k: f64, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        return 0.0;
    }
    if k == 0.0 {
        return hi - lo;
    }
    (k * lo).exp() * (k * (hi - lo)).exp_m1() / k
}

/// `(sinh y / y)² − 1`, by series where the subtraction would cancel.
fn sinhc_sq_excess(y: f64) -> f64 {
    if y.abs() > 0.5 {
        let r = y.sinh() / y;
        return r * r - 1.0;
    }
    // (cosh 2y − 1) / 2y² = Σ_{k≥1} 2^{2k−1} y^{2k−2} / (2k)!
    let y2 = y * y;
    let mut term = 8.0 / 24.0 * y2;
    let mut sum = 0.0;
    let mut k = 2.0;
    while term > 1e-18 * sum || sum == 0.0 {
        sum += term;
        term *= 4.0 * y2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        k += 1.0;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

const PROFILE_TOL: Tolerance = Tolerance {
    rel: 1e-13,
    abs: 1e-300,
    max_subdivisions: 2000,
};

impl Worldline {
    pub fn new(kind: WorldlineKind, dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        match &kind {
            WorldlineKind::Inertial { velocity, offset } => {
                if velocity.len() != dimension - 1 {
                    return Err(Error::DimensionMismatch(velocity.len(), dimension - 1));
                }
                if offset.len() != dimension {
                    return Err(Error::DimensionMismatch(offset.len(), dimension));
                }
                let v2: f64 = velocity.iter().map(|v| v * v).sum();
                if !(v2 < 1.0) {
                    return Err(invalid("velocity", "speed must be below 1"));
                }
            }
            WorldlineKind::UniformAcceleration { a, offset } => {
                positive("a", *a)?;
                if offset.len() != dimension - 1 {
                    return Err(Error::DimensionMismatch(offset.len(), dimension - 1));
                }
            }
            WorldlineKind::AsymptoticUniform { a, width } => {
                positive("a", *a)?;
                positive("width", *width)?;
            }
            WorldlineKind::TruncatedUniform { a, tau2 } => {
                positive("a", *a)?;
                if !tau2.is_finite() {
                    return Err(invalid("tau2", "must be finite; use UniformAcceleration for eternal acceleration"));
                }
            }
            WorldlineKind::StaticAt { x } => {
                if !x.is_finite() {
                    return Err(invalid("x", "must be finite"));
                }
            }
        }
        Ok(Self {
            kind,
            dimension,
            future_u: OnceLock::new(),
        })
    }

    /// At rest at the spatial origin.
    pub fn inertial_rest(dimension: usize) -> Result<Self> {
        Self::new(
            WorldlineKind::Inertial {
                velocity: vec![0.0; dimension.saturating_sub(1)],
                offset: vec![0.0; dimension],
            },
            dimension,
        )
    }

    pub fn uniform(dimension: usize, a: f64) -> Result<Self> {
        Self::new(
            WorldlineKind::UniformAcceleration {
                a,
                offset: vec![0.0; dimension.saturating_sub(1)],
            },
            dimension,
        )
    }

    pub fn asymptotic_uniform(dimension: usize, a: f64, width: f64) -> Result<Self> {
        Self::new(WorldlineKind::AsymptoticUniform { a, width }, dimension)
    }

    pub fn truncated_uniform(dimension: usize, a: f64, tau2: f64) -> Result<Self> {
        Self::new(WorldlineKind::TruncatedUniform { a, tau2 }, dimension)
    }

    pub fn static_at(dimension: usize, x: f64) -> Result<Self> {
        Self::new(WorldlineKind::StaticAt { x }, dimension)
    }

    pub fn kind(&self) -> &WorldlineKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Whether the pulled-back vacuum correlator depends only on the proper-time gap.
    pub fn is_stationary(&self) -> bool {
        matches!(
            self.kind,
            WorldlineKind::Inertial { .. } | WorldlineKind::UniformAcceleration { .. } | WorldlineKind::StaticAt { .. }
        )
    }

    /// Rapidity along x¹ for the linearly moving kinds.
    fn rapidity(&self, tau: f64) -> f64 {
        match &self.kind {
            WorldlineKind::UniformAcceleration { a, .. } => a * tau,
            WorldlineKind::TruncatedUniform { a, tau2 } => a * tau.min(*tau2),
            WorldlineKind::AsymptoticUniform { a, width } => 0.5 * a * (tau + width * ln_cosh(tau / width)),
            WorldlineKind::StaticAt { .. } | WorldlineKind::Inertial { .. } => 0.0,
        }
    }

    fn profile_integral(&self, sign: f64, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return 0.0;
        }
        integrate_subtracted(|t| (sign * self.rapidity(t)).exp(), lo, hi, PROFILE_TOL)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    }

    /// `(u(τ₁) − u(τ₂), v(τ₁) − v(τ₂))` for linearly moving kinds.
    fn null_displacement(&self, tau1: f64, tau2_: f64) -> Option<(f64, f64)> {
        let (lo, hi, sign) = if tau1 >= tau2_ { (tau2_, tau1, 1.0) } else { (tau1, tau2_, -1.0) };
        let (du, dv) = match &self.kind {
            WorldlineKind::StaticAt { .. } => (hi - lo, hi - lo),
            WorldlineKind::UniformAcceleration { a, .. } => (exp_segment(-a, lo, hi), exp_segment(*a, lo, hi)),
            WorldlineKind::TruncatedUniform { a, tau2 } => {
                let mid_lo = lo.min(*tau2);
                let mid_hi = hi.min(*tau2);
                let mut du = exp_segment(-a, mid_lo, mid_hi);
                let mut dv = exp_segment(*a, mid_lo, mid_hi);
                let lin_lo = lo.max(*tau2);
                if hi > lin_lo {
                    du += (-a * tau2).exp() * (hi - lin_lo);
                    dv += (a * tau2).exp() * (hi - lin_lo);
                }
                (du, dv)
            }
            WorldlineKind::AsymptoticUniform { .. } => (self.profile_integral(-1.0, lo, hi), self.profile_integral(1.0, lo, hi)),
            WorldlineKind::Inertial { .. } => return None,
        };
        Some((sign * du, sign * dv))
    }

    /// `(u, v)` and transverse offset for linearly moving kinds.
    fn null_coords(&self, tau: f64) -> Option<(f64, f64, &[f64])> {
        match &self.kind {
            WorldlineKind::StaticAt { x } => Some((tau - x, tau + x, &[])),
            WorldlineKind::UniformAcceleration { a, offset } => {
                Some((-(-a * tau).exp() / a - offset[0], (a * tau).exp() / a + offset[0], &offset[1..]))
            }
            WorldlineKind::TruncatedUniform { a, tau2 } => {
                let t = tau.min(*tau2);
                let mut u = -(-a * t).exp() / a;
                let mut v = (a * t).exp() / a;
                if tau > *tau2 {
                    u += (-a * tau2).exp() * (tau - tau2);
                    v += (a * tau2).exp() * (tau - tau2);
                }
                Some((u, v, &[]))
            }
            WorldlineKind::AsymptoticUniform { a, .. } => {
                let (du, dv) = self.null_displacement(tau, 0.0)?;
                Some((-1.0 / a + du, 1.0 / a + dv, &[]))
            }
            WorldlineKind::Inertial { .. } => None,
        }
    }

    /// Point on the worldline at proper time `tau`.
    pub fn position(&self, tau: f64) -> SpacetimePoint {
        let d = self.dimension;
        let mut c = vec![0.0; d];
        match &self.kind {
            WorldlineKind::Inertial { velocity, offset } => {
                let gamma = 1.0 / (1.0 - velocity.iter().map(|v| v * v).sum::<f64>()).sqrt();
                c[0] = offset[0] + gamma * tau;
                for i in 1..d {
                    c[i] = offset[i] + gamma * velocity[i - 1] * tau;
                }
            }
            WorldlineKind::UniformAcceleration { a, offset } => {
                c[0] = (a * tau).sinh() / a;
                c[1] = (a * tau).cosh() / a;
                for i in 1..d {
                    c[i] += offset[i - 1];
                }
            }
            WorldlineKind::StaticAt { x } => {
                c[0] = tau;
                c[1] = *x;
            }
            WorldlineKind::TruncatedUniform { a, tau2 } if tau <= *tau2 => {
                c[0] = (a * tau).sinh() / a;
                c[1] = (a * tau).cosh() / a;
            }
            _ => {
                let (u, v, _) = self.null_coords(tau).expect("linear kind");
                c[0] = 0.5 * (u + v);
                c[1] = 0.5 * (v - u);
            }
        }
        SpacetimePoint::new(c)
    }

    /// Four-velocity `dz/dτ`.
    pub fn velocity(&self, tau: f64) -> Vec<f64> {
        let d = self.dimension;
        let mut c = vec![0.0; d];
        if let WorldlineKind::Inertial { velocity, .. } = &self.kind {
            let gamma = 1.0 / (1.0 - velocity.iter().map(|v| v * v).sum::<f64>()).sqrt();
            c[0] = gamma;
            for i in 1..d {
                c[i] = gamma * velocity[i - 1];
            }
        } else {
            let th = self.rapidity(tau);
            c[0] = th.cosh();
            c[1] = th.sinh();
        }
        c
    }

    /// Scalar proper acceleration `√(z̈²)` (left limit at kinks).
    pub fn proper_accel_scalar(&self, tau: f64) -> f64 {
        match &self.kind {
            WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => 0.0,
            WorldlineKind::UniformAcceleration { a, .. } => *a,
            WorldlineKind::TruncatedUniform { a, tau2 } => {
                if tau <= *tau2 {
                    *a
                } else {
                    0.0
                }
            }
            WorldlineKind::AsymptoticUniform { a, width } => 0.5 * a * (1.0 + (tau / width).tanh()),
        }
    }

    /// `−(Δz)² − s²` between `τ` and `τ − s`, free of the cancellation in the
    /// difference. Zero for inertial kinds and positive once the path bends.
    pub fn gap_interval_excess(&self, tau: f64, s: f64) -> f64 {
        let s = s.abs();
        let a = match &self.kind {
            WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => return 0.0,
            WorldlineKind::UniformAcceleration { a, .. } => return s * s * sinhc_sq_excess(0.5 * a * s),
            WorldlineKind::AsymptoticUniform { a, .. } | WorldlineKind::TruncatedUniform { a, .. } => *a,
        };
        if s * a >= 0.1 {
            return -self.self_interval_sq(tau, tau - s) - s * s;
        }
        let mid = tau - 0.5 * s;
        if s * a.max(1.0) < 1e-5 {
            let am = self.proper_accel_scalar(mid);
            return am * am * s.powi(4) / 12.0;
        }
        // x = s² M₊ M₋ with M± the mean of exp(±δ), δ the rapidity about its mean.
        let (lo, hi) = (tau - s, tau);
        let kinks: Vec<f64> = match &self.kind {
            WorldlineKind::TruncatedUniform { tau2, .. } if *tau2 > lo && *tau2 < hi => vec![*tau2],
            _ => Vec::new(),
        };
        // The segment is far shorter than the profile's scales, so one fixed rule per smooth piece is exact to rounding.
        let mean = |f: &dyn Fn(f64) -> f64| {
            let mut edges = vec![lo];
            edges.extend(kinks.iter().copied());
            edges.push(hi);
            edges.windows(2).map(|e| kronrod_fixed(f, e[0], e[1])).sum::<f64>() / s
        };
        let eta_mid = self.rapidity(mid);
        let eta_bar = eta_mid + mean(&|t| self.rapidity(t) - eta_mid);
        let delta = |t: f64| self.rapidity(t) - eta_bar;
        let sum = mean(&|t| {
            let h = (0.5 * delta(t)).sinh();
            4.0 * h * h
        });
        let e_plus = mean(&|t| delta(t).exp_m1());
        let e_minus = mean(&|t| (-delta(t)).exp_m1());
        s * s * (sum + e_plus * e_minus)
    }

    /// Squared interval between `τ` and `τ − s`, keeping `s` exact when it is
    /// below the spacing of floats near `τ`.
    pub fn gap_interval_sq(&self, tau: f64, s: f64) -> f64 {
        match &self.kind {
            WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => -s * s,
            WorldlineKind::UniformAcceleration { a, .. } => {
                let h = (0.5 * a * s).sinh();
                -4.0 * h * h / (a * a)
            }
            WorldlineKind::AsymptoticUniform { a, .. } | WorldlineKind::TruncatedUniform { a, .. } if (s * a).abs() < 0.1 => {
                -(s * s + self.gap_interval_excess(tau, s))
            }
            _ => self.self_interval_sq(tau, tau - s),
        }
    }

    /// Squared interval between two points of this worldline, computed without
    /// cancellation for nearby points.
    pub fn self_interval_sq(&self, tau1: f64, tau2: f64) -> f64 {
        let s = tau1 - tau2;
        match &self.kind {
            WorldlineKind::Inertial { .. } | WorldlineKind::StaticAt { .. } => -s * s,
            WorldlineKind::UniformAcceleration { a, .. } => {
                let h = (0.5 * a * s).sinh();
                -4.0 * h * h / (a * a)
            }
            _ => {
                let (du, dv) = self.null_displacement(tau1, tau2).expect("linear kind");
                -du * dv
            }
        }
    }

    /// `u(+∞)` when the worldline approaches a future null asymptote `t − x¹ = const`.
    fn future_u_limit(&self) -> Option<f64> {
        *self.future_u.get_or_init(|| match &self.kind {
            WorldlineKind::UniformAcceleration { offset, .. } => Some(-offset[0]),
            WorldlineKind::AsymptoticUniform { a, .. } => {
                let rest = crate::quadrature::integrate_oscillatory_tail(
                    |t| (-self.rapidity(t)).exp(),
                    0.0,
                    4.0 / a,
                    Tolerance::new(1e-13, 1e-300),
                )
                .ok()?;
                Some(-1.0 / a + rest.value)
            }
            _ => None,
        })
    }

    /// `v(−∞)` when the worldline approaches a past null asymptote `t + x¹ = const`.
    fn past_v_limit(&self) -> Option<f64> {
        match &self.kind {
            WorldlineKind::UniformAcceleration { offset, .. } => Some(offset[0]),
            WorldlineKind::TruncatedUniform { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Signed lightcone margin `(t − t_e) − |x − x_e|` (future orientation) or
    /// `(t_e − t) − |x − x_e|` (past orientation).
    fn cone_margin(&self, event: &SpacetimePoint, tau: f64, future: bool) -> f64 {
        let sign = if future { 1.0 } else { -1.0 };
        if let Some((u, v, transverse)) = self.null_coords(tau) {
            let ue = event.coords[0] - event.coords[1];
            let ve = event.coords[0] + event.coords[1];
            let rho2: f64 = event.coords[2..]
                .iter()
                .enumerate()
                .map(|(i, e)| (transverse.get(i).copied().unwrap_or(0.0) - e).powi(2))
                .sum();
            let du = sign * (u - ue);
            let dv = sign * (v - ve);
            // In the oriented frame: Δt − Δx = du, Δt + Δx = dv.
            let dx = 0.5 * (dv - du);
            let dist = (dx * dx + rho2).sqrt();
            if dx >= 0.0 {
                du - rho2 / (dist + dx).max(f64::MIN_POSITIVE)
            } else {
                dv - rho2 / (dist - dx).max(f64::MIN_POSITIVE)
            }
        } else {
            let p = self.position(tau);
            let dt = sign * (p.coords[0] - event.coords[0]);
            let dist: f64 = p.coords[1..]
                .iter()
                .zip(&event.coords[1..])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            dt - dist
        }
    }

    fn check_event(&self, event: &SpacetimePoint) -> Result<()> {
        if event.dimension() != self.dimension {
            return Err(Error::DimensionMismatch(event.dimension(), self.dimension));
        }
        Ok(())
    }

    fn transverse_sq(&self, event: &SpacetimePoint) -> f64 {
        let off: &[f64] = match &self.kind {
            WorldlineKind::UniformAcceleration { offset, .. } => &offset[1..],
            _ => &[],
        };
        event.coords[2..]
            .iter()
            .enumerate()
            .map(|(i, e)| (off.get(i).copied().unwrap_or(0.0) - e).powi(2))
            .sum()
    }

    /// Smallest proper time at which the worldline lies in the closed future
    /// lightcone of `event`.
    pub fn advanced_time(&self, event: &SpacetimePoint) -> Result<f64> {
        self.check_event(event)?;
        if let WorldlineKind::StaticAt { x } = self.kind {
            let dist = ((x - event.coords[1]).powi(2) + self.transverse_sq(event)).sqrt();
            return Ok(event.coords[0] + dist);
        }
        if let Some(u_inf) = self.future_u_limit() {
            let ue = event.coords[0] - event.coords[1];
            if u_inf - ue <= 0.0 {
                return Err(Error::NoIntersection);
            }
        }
        let g = |tau: f64| self.cone_margin(event, tau, true);
        first_crossing(g, event.coords[0], true)
    }

    /// Largest proper time at which the worldline lies in the closed past
    /// lightcone of `event`.
    pub fn retarded_time(&self, event: &SpacetimePoint) -> Result<f64> {
        self.check_event(event)?;
        if let WorldlineKind::StaticAt { x } = self.kind {
            let dist = ((x - event.coords[1]).powi(2) + self.transverse_sq(event)).sqrt();
            return Ok(event.coords[0] - dist);
        }
        if let Some(v_minus) = self.past_v_limit() {
            let ve = event.coords[0] + event.coords[1];
            if ve - v_minus <= 0.0 {
                return Err(Error::NoIntersection);
            }
        }
        let g = |tau: f64| self.cone_margin(event, tau, false);
        first_crossing(g, event.coords[0], false)
    }
}

/// Boundary of `{τ : g(τ) ≥ 0}` for monotone `g` (nondecreasing when
/// `increasing`, nonincreasing otherwise), to 1e−11 absolute in τ.
fn first_crossing<G: Fn(f64) -> f64>(g: G, guess: f64, increasing: bool) -> Result<f64> {
    // Orient so that we always look for the first τ with h(τ) ≥ 0, h nondecreasing.
    let h = |t: f64| if increasing { g(t) } else { g(-t) };
    let start = if increasing { guess } else { -guess };
    let mut lo = start - 1.0;
    let mut step = 1.0;
    let mut iters = 0;
    while h(lo) >= 0.0 {
        step *= 2.0;
        lo -= step;
        iters += 1;
        if iters > 200 || !lo.is_finite() {
            return Err(Error::NoIntersection);
        }
    }
    let mut hi = lo.max(start) + 1.0;
    step = 1.0;
    iters = 0;
    loop {
        let v = h(hi);
        if v.is_nan() {
            return Err(Error::NoIntersection);
        }
        if v >= 0.0 {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi += step;
        iters += 1;
        if iters > 400 || !hi.is_finite() {
            return Err(Error::NoIntersection);
        }
    }
    // Run to adjacent floats: principal-value folding needs exact poles.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if increasing { hi } else { -hi })
}

/// `(Δz)²` between `w1(τ′)` and `w2(τ″)`.
pub fn interval_sq(w1: &Worldline, tau1: f64, w2: &Worldline, tau2: f64) -> Result<f64> {
    if w1.dimension() != w2.dimension() {
        return Err(Error::DimensionMismatch(w1.dimension(), w2.dimension()));
    }
    if w1 == w2 {
        return Ok(w1.self_interval_sq(tau1, tau2));
    }
    // Null coordinates keep t − x exact where t and x are both large.
    if let (Some((u1, v1, x1)), Some((u2, v2, x2))) = (w1.null_coords(tau1), w2.null_coords(tau2)) {
        let transverse: f64 = (0..w1.dimension() - 2)
            .map(|k| x1.get(k).copied().unwrap_or(0.0) - x2.get(k).copied().unwrap_or(0.0))
            .map(|d| d * d)
            .sum();
        return Ok(transverse - (u1 - u2) * (v1 - v2));
    }
    w1.position(tau1).interval_sq(&w2.position(tau2))
}
