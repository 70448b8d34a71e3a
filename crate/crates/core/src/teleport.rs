//! Continuous-variable teleportation from a static sender (detectors A and C)
//! to a uniformly accelerated receiver (detector B).
//!
//! A and B start in a two-mode squeezed state and couple to the field; C holds
//! the coherent input and is frozen. A joint Gaussian measurement on (C, A)
//! is followed by a unit-gain displacement of B. The averaged fidelity is the
//! Gaussian β-integral of the per-outcome fidelity, done in closed form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::detector_dynamics::{correlators_with_split, CorrelatorSample, DetectorParams, DetectorTrack};
use crate::error::{invalid, Error, Result};
use crate::gaussian_state::{gaussian_overlap, ConditionalMap, GaussianMeasurement, GaussianState};
use crate::quadrature::Tolerance;
use crate::worldline::Worldline;

const SENDER: &str = "A";
const RECEIVER: &str = "B";
const INPUT: &str = "C";

/// How a measurement moment on the sender's worldline is paired with a
/// proper time of the receiver in pseudo mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Foliation {
    /// Constant Minkowski time `t₁`: `τ_B = asinh(a t₁)/a`.
    Minkowski,
    /// Rindler-wedge slice `t/x = tanh(aτ₁)` through the receiver's `τ₁`:
    /// `τ_A = tanh(aτ₁)/b`.
    QuasiRindler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Displacement applied on the chosen slice, as if the outcome arrived
    /// instantaneously.
    Pseudo,
    /// Displacement applied once the outcome reaches the receiver at light
    /// speed.
    Physical,
}

/// Sender static at `x = 1/b`, receiver on `x² − t² = 1/a²` (cut off at
/// `τ₂` in physical mode), both switched on at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportScenario {
    pub a: f64,
    pub b: f64,
    pub r1: f64,
    pub r2: f64,
    pub alpha: Complex64,
    pub params: DetectorParams,
    pub foliation: Foliation,
    pub mode: Mode,
    /// Acceleration cutoff; required in physical mode.
    pub tau2: Option<f64>,
    /// Measurement moments: `t₁` (Minkowski, physical) or `τ₁` (quasi-Rindler).
    pub moments: Vec<f64>,
    pub hbar: f64,
    pub tol: Tolerance,
}

impl TeleportScenario {
    /// Pseudo-mode scenario on the Minkowski foliation with ħ = 1.
    pub fn new(a: f64, b: f64, r1: f64, r2: f64, alpha: Complex64, params: DetectorParams) -> Self {
        Self {
            a,
            b,
            r1,
            r2,
            alpha,
            params,
            foliation: Foliation::Minkowski,
            mode: Mode::Pseudo,
            tau2: None,
            moments: Vec::new(),
            hbar: 1.0,
            tol: Tolerance::new(1e-7, 1e-11),
        }
    }

    pub fn with_moments(mut self, moments: Vec<f64>) -> Self {
        self.moments = moments;
        self
    }

    pub fn with_foliation(mut self, foliation: Foliation) -> Self {
        self.foliation = foliation;
        self
    }

    pub fn physical(mut self, tau2: f64) -> Self {
        self.mode = Mode::Physical;
        self.tau2 = Some(tau2);
        self
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.a > 0.0 && self.a < self.b && self.b.is_finite()) {
            return bad(format!("need 0 < a < b, got a = {}, b = {}", self.a, self.b));
        }
        if !(self.r1 >= 0.0 && self.r1.is_finite()) {
            return bad(format!("r1 must be finite and nonnegative, got {}", self.r1));
        }
        if !(self.r2 >= 0.0 && self.r2.is_finite()) {
            return bad(format!("r2 must be finite and nonnegative, got {}", self.r2));
        }
        if !(self.hbar > 0.0) {
            return bad(format!("hbar must be positive, got {}", self.hbar));
        }
        if self.mode == Mode::Physical && !self.tau2.is_some_and(|t| t > 0.0 && t.is_finite()) {
            return bad("physical mode needs a finite positive tau2".into());
        }
        if self.moments.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return bad("measurement moments must be finite and nonnegative".into());
        }
        Ok(())
    }

    pub fn sender(&self) -> Result<Worldline> {
        Worldline::static_at(4, 1.0 / self.b)
    }

    pub fn receiver(&self) -> Result<Worldline> {
        match (self.mode, self.tau2) {
            (Mode::Physical, Some(t2)) => Worldline::truncated_uniform(4, self.a, t2),
            _ => Worldline::uniform(4, self.a),
        }
    }

    /// `(τ_A, τ_B)` of the slice labelled `moment` in pseudo mode.
    pub fn slice_times(&self, moment: f64) -> (f64, f64) {
        match self.foliation {
            Foliation::Minkowski => (moment, (self.a * moment).asinh() / self.a),
            Foliation::QuasiRindler => ((self.a * moment).tanh() / self.b, moment),
        }
    }

    /// Offset past the lightcone used for "right after" the outcome arrives.
    pub fn lightcone_offset(&self) -> f64 {
        1e-6 / self.params.omega()
    }

    fn tracks(&self) -> Result<[DetectorTrack; 2]> {
        Ok([DetectorTrack::new(SENDER, self.sender()?)?, DetectorTrack::new(RECEIVER, self.receiver()?)?])
    }

    fn initial(&self) -> Result<GaussianState> {
        GaussianState::two_mode_squeezed(SENDER, RECEIVER, self.r1, self.params.scale(), self.hbar)
    }

    fn measurement(&self) -> Result<GaussianMeasurement> {
        GaussianMeasurement::bell(INPUT, SENDER, self.r2, self.params.scale(), self.hbar)
    }

    fn input(&self) -> Result<GaussianState> {
        GaussianState::coherent(INPUT, self.alpha, self.params.scale(), self.hbar)
    }
}

/// One measurement moment of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityPoint {
    /// Slice label: `t₁`, or `τ₁` on the quasi-Rindler foliation.
    pub moment: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub f_av: f64,
    /// E_N of (A, B) on the same slice, or on the lightcone in physical mode.
    pub log_negativity: f64,
    /// `−log₂(2ν̃₋/ħ)` before clamping; its sign change locates disentanglement.
    pub entanglement_margin: f64,
    /// Receiver's proper time when the outcome arrives (physical mode).
    pub tau_adv: Option<f64>,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySeries {
    pub mode: Mode,
    pub foliation: Foliation,
    pub omega: f64,
    pub points: Vec<FidelityPoint>,
}

impl FidelitySeries {
    pub fn moments(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.moment).collect()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f_av).collect()
    }
}

/// Averaged fidelity after conditioning on the (C, A) measurement and
/// displacing B by the outcome at unit gain.
///
/// With B's post-measurement mean `m₀ + Kβ`, outcome density `N(μ_β, C_β)`
/// and displacement `β`, the per-outcome fidelity is a Gaussian in β and the
/// average is `ħ exp(−½ δᵀ S⁻¹ δ) / √det S` with `S = Σ_B + σ_α + A C_β Aᵀ`,
/// `A = K + 1`, `δ = m₀ + A μ_β − m_α`.
pub fn averaged_fidelity(ab: &GaussianState, scenario: &TeleportScenario) -> Result<f64> {
    let joint = ab.reduce(&[SENDER, RECEIVER])?.tensor(&scenario.input()?)?;
    let meas = scenario.measurement()?;
    let outcome = joint.outcome_distribution(&meas)?;
    let map = joint.conditional_map(&meas)?;
    let gain = &map.gain + DMatrix::<f64>::identity(2, 2);
    let target = scenario.input()?;
    let delta = &map.offset + &gain * &outcome.mean - target.mean();
    let spread = &map.covariance + target.covariance() + &gain * &outcome.covariance * gain.transpose();
    let f = gaussian_overlap(&delta, &spread, scenario.hbar)?;
    Ok(f.clamp(0.0, 1.0))
}

/// Monte-Carlo estimate of the averaged fidelity: samples outcomes from their
/// density and evaluates each conditioned, displaced state directly. Returns
/// `(mean, standard error)`; deterministic for a given seed.
pub fn monte_carlo_fidelity(ab: &GaussianState, scenario: &TeleportScenario, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let joint = ab.reduce(&[SENDER, RECEIVER])?.tensor(&scenario.input()?)?;
    let meas = scenario.measurement()?;
    let outcome = joint.outcome_distribution(&meas)?;
    let chol = outcome.covariance.clone().cholesky().ok_or(Error::DegenerateMeasurement)?;
    let l = chol.l();
    let scale = scenario.params.scale();
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let xi = DVector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
                let beta = &outcome.mean + &l * xi;
                let b = joint.condition_on_measurement(&meas, beta.as_slice())?;
                let f = b.displace(RECEIVER, beta[0], beta[1])?.fidelity_vs_coherent(scenario.alpha, scale)?;
                s += f;
                s2 += f * f;
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

fn sample_at(s: &TeleportScenario, tau_a: f64, tau_b: f64, split_b: Option<f64>) -> Result<CorrelatorSample> {
    let tracks = s.tracks()?;
    let splits = [None, split_b];
    correlators_with_split(&s.params, &tracks, &s.initial()?, &[tau_a, tau_b], &splits, s.tol)
}

/// The sender–receiver state on the pseudo-mode slice labelled `moment`.
pub fn slice_state(s: &TeleportScenario, moment: f64) -> Result<GaussianState> {
    s.validate()?;
    let (tau_a, tau_b) = s.slice_times(moment);
    sample_at(s, tau_a, tau_b, None)?.state()
}

fn margin(state: &GaussianState) -> Result<f64> {
    let nu = state.partial_transpose_spectrum(&[SENDER], &[RECEIVER])?;
    Ok(-(nu[0] / (0.5 * state.hbar())).log2())
}

fn point(s: &TeleportScenario, moment: f64) -> Result<FidelityPoint> {
    match s.mode {
        Mode::Pseudo => {
            let (tau_a, tau_b) = s.slice_times(moment);
            let sample = sample_at(s, tau_a, tau_b, None)?;
            let state = sample.state()?;
            let m = margin(&state)?;
            Ok(FidelityPoint {
                moment,
                tau_a,
                tau_b,
                f_av: averaged_fidelity(&state, s)?,
                log_negativity: m.max(0.0),
                entanglement_margin: m,
                tau_adv: None,
                error_estimate: sample.error_estimate,
            })
        }
        Mode::Physical => {
            let tau_adv = s.receiver()?.advanced_time(&s.sender()?.position(moment))?;
            let eps = s.lightcone_offset();
            let operated = sample_at(s, moment, tau_adv + eps, None)?;
            let cone = sample_at(s, moment, (tau_adv - eps).max(0.0), None)?;
            let cone_state = cone.state()?;
            let m = margin(&cone_state)?;
            Ok(FidelityPoint {
                moment,
                tau_a: moment,
                tau_b: tau_adv + eps,
                f_av: averaged_fidelity(&operated.state()?, s)?,
                log_negativity: m.max(0.0),
                entanglement_margin: m,
                tau_adv: Some(tau_adv),
                error_estimate: operated.error_estimate.max(cone.error_estimate),
            })
        }
    }
}

fn run(s: &TeleportScenario, mode: Mode) -> Result<FidelitySeries> {
    s.validate()?;
    if s.mode != mode {
        return Err(Error::InvalidScenario(format!("scenario is in {:?} mode", s.mode)));
    }
    let points = s.moments.par_iter().map(|&m| point(s, m)).collect::<Result<Vec<_>>>()?;
    Ok(FidelitySeries {
        mode,
        foliation: s.foliation,
        omega: s.params.omega(),
        points,
    })
}

/// Pseudo-fidelity series: outcome applied on the chosen time slice.
pub fn run_pseudo(s: &TeleportScenario) -> Result<FidelitySeries> {
    run(s, Mode::Pseudo)
}

/// Physical-fidelity series: outcome applied when it reaches the receiver.
/// Evolution of B between the slice and the operation is carried by the
/// joint correlators at `(t₁, τ^adv + ε)`; mutual influences are dropped.
pub fn run_physical(s: &TeleportScenario) -> Result<FidelitySeries> {
    run(s, Mode::Physical)
}

/// Receiver's proper time on the slice through the sender's event at `t₁`.
pub fn collapse_time(s: &TeleportScenario, foliation: Foliation, t1: f64) -> Result<f64> {
    let rob = s.receiver()?;
    let target: Box<dyn Fn(f64) -> f64> = match foliation {
        Foliation::Minkowski => Box::new(|tau| rob.position(tau).t() - t1),
        Foliation::QuasiRindler => {
            let slope = s.b * t1;
            if slope >= 1.0 {
                return Err(Error::NoIntersection);
            }
            Box::new(move |tau| {
                let p = rob.position(tau);
                p.t() - slope * p.coords[1]
            })
        }
    };
    // Both slice functions increase along the receiver's worldline.
    let (mut lo, mut hi) = (0.0, 1.0);
    while target(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoIntersection);
        }
    }
    if target(lo) >= 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if target(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// B's conditioned state just before the outcome arrives: offset, gain and
/// covariance of the post-measurement map, with the receiver's history split
/// at the collapse moment of `foliation`.
pub fn lightcone_conditioned(s: &TeleportScenario, foliation: Foliation, t1: f64) -> Result<ConditionalMap> {
    s.validate()?;
    let tau_adv = s.receiver()?.advanced_time(&s.sender()?.position(t1))?;
    let tau_b = (tau_adv - s.lightcone_offset()).max(0.0);
    let split = collapse_time(s, foliation, t1)?;
    let sample = sample_at(s, t1, tau_b, Some(split))?;
    let joint = sample.state()?.tensor(&s.input()?)?;
    joint.conditional_map(&s.measurement()?)
}

/// Features of a fidelity series.
#[derive(Debug, Clone, PartialEq)]
pub struct Markers {
    /// Local maxima of F_av, refined by parabolic interpolation.
    pub peaks: Vec<(f64, f64)>,
    /// First moment at which the peak envelope falls to 1/2.
    pub t_half: Option<f64>,
    /// First zero of E_N, bracketed on the unclamped margin.
    pub t_de: Option<f64>,
}

/// Peaks, half-fidelity moment and disentanglement moment. The moment grid
/// must resolve the oscillation with at least 20 samples per `2π/Ω`.
pub fn extract_markers(series: &FidelitySeries) -> Result<Markers> {
    let pts = &series.points;
    if pts.len() < 3 {
        return Err(Error::UnderSampled(0.0));
    }
    let period = 2.0 * PI / series.omega;
    let widest = pts.windows(2).map(|w| w[1].moment - w[0].moment).fold(0.0, f64::max);
    let per_period = period / widest;
    if !(per_period >= 20.0) {
        return Err(Error::UnderSampled(per_period));
    }

    let mut peaks = Vec::new();
    for w in pts.windows(3) {
        let (l, c, r) = (w[0].f_av, w[1].f_av, w[2].f_av);
        if c > l && c >= r {
            let h = w[1].moment - w[0].moment;
            let h2 = w[2].moment - w[1].moment;
            let peak = parabola_vertex([w[0].moment, w[1].moment, w[2].moment], [l, c, r]).unwrap_or((w[1].moment, c));
            // Keep the vertex inside the bracketing samples.
            if peak.0 > w[1].moment - h && peak.0 < w[1].moment + h2 {
                peaks.push(peak);
            } else {
                peaks.push((w[1].moment, c));
            }
        }
    }

    // The envelope starts at the first sample if the series opens on a descent.
    let mut envelope = Vec::with_capacity(peaks.len() + 1);
    if pts[0].f_av >= pts[1].f_av {
        envelope.push((pts[0].moment, pts[0].f_av));
    }
    envelope.extend(peaks.iter().copied());
    let t_half = match envelope.first() {
        Some(&(t0, f0)) if f0 <= 0.5 => Some(t0),
        _ => envelope.windows(2).find(|w| w[1].1 <= 0.5).map(|w| crossing(w[0], w[1], 0.5)),
    };

    let t_de = if pts[0].entanglement_margin <= 0.0 {
        Some(pts[0].moment)
    } else {
        pts.windows(2)
            .find(|w| w[1].entanglement_margin <= 0.0)
            .map(|w| crossing((w[0].moment, w[0].entanglement_margin), (w[1].moment, w[1].entanglement_margin), 0.0))
    };
    Ok(Markers { peaks, t_half, t_de })
}

fn crossing((x0, y0): (f64, f64), (x1, y1): (f64, f64), level: f64) -> f64 {
    if y0 == y1 {
        return x1;
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv < 0.0) {
        return None;
    }
    // y = y₁ + d (x − x₁) + curv (x − x₁)², with d the slope at x₁.
    let d = d1 + curv * (x[1] - x[0]);
    let dx = -d / (2.0 * curv);
    Some((x[1] + dx, y[1] + d * dx + curv * dx * dx))
}
