//! Gaussian states stored as mean vectors and symmetrised correlator blocks.
//!
//! For modes μ, ν the blocks are `𝒬_{μν} = ⟨δQ_μ, δQ_ν⟩`, `𝒫_{μν} = ⟨δP_μ, δP_ν⟩`
//! and `ℛ_{μν} = ⟨δP_μ, δQ_ν⟩`, where `⟨A, B⟩ = ⟨AB + BA⟩/2`. `ℛ` is not
//! symmetric in general. Internally the covariance matrix is assembled in the
//! ordering `(Q₁, …, Q_n, P₁, …, P_n)`:
//!
//! ```text
//! σ = | 𝒬   ℛᵀ |
//!     | ℛ   𝒫  |
//! ```
//!
//! Every constructor enforces the uncertainty relation `σ + iħJ/2 ≥ 0`
//! through the symplectic spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const UNCERTAINTY_SLACK: f64 = 1e-10;

/// Mean and covariance of a multimode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: Vec<String>,
    mean_q: DVector<f64>,
    mean_p: DVector<f64>,
    q: DMatrix<f64>,
    p: DMatrix<f64>,
    r: DMatrix<f64>,
    hbar: f64,
}

/// `(Q, P)` scale used to convert complex amplitudes to phase-space shifts:
/// `Q = √(2ħ/mΩ) Re α`, `P = √(2ħmΩ) Im α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorScale {
    pub mass: f64,
    pub frequency: f64,
}

impl OscillatorScale {
    pub fn new(mass: f64, frequency: f64) -> Result<Self> {
        if !(mass > 0.0 && frequency > 0.0) {
            return Err(Error::InvalidState(format!(
                "oscillator scale needs positive mass and frequency, got m = {mass}, Ω = {frequency}"
            )));
        }
        Ok(Self { mass, frequency })
    }

    pub fn unit() -> Self {
        Self {
            mass: 1.0,
            frequency: 1.0,
        }
    }

    /// Ground-state variances `(⟨Q²⟩, ⟨P²⟩)`.
    pub fn vacuum_variances(&self, hbar: f64) -> (f64, f64) {
        (hbar / (2.0 * self.mass * self.frequency), 0.5 * hbar * self.mass * self.frequency)
    }

    pub fn amplitude_to_shift(&self, alpha: Complex64, hbar: f64) -> (f64, f64) {
        (
            (2.0 * hbar / (self.mass * self.frequency)).sqrt() * alpha.re,
            (2.0 * hbar * self.mass * self.frequency).sqrt() * alpha.im,
        )
    }
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidState(format!("{name} block is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Symplectic form for the `(Q…, P…)` ordering.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    j
}

/// Symplectic eigenvalues of a positive-definite covariance, ascending.
pub fn symplectic_spectrum(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = sigma.nrows();
    if !dim.is_multiple_of(2) || sigma.ncols() != dim {
        return Err(Error::InvalidState("covariance must be 2n × 2n".into()));
    }
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidState("covariance has non-finite entries".into()));
    }
    let n = dim / 2;
    let sym = 0.5 * (sigma + sigma.transpose());
    // σ = L Lᵀ; the antisymmetric Lᵀ J L has singular values ν₁, ν₁, ν₂, ν₂, …
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::InvalidState("covariance is not positive definite".into()))?;
    let l = chol.l();
    let k = l.transpose() * symplectic_form(n) * &l;
    let mut ev: Vec<f64> = k.singular_values().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok((0..n).map(|k| 0.5 * (ev[2 * k] + ev[2 * k + 1])).collect())
}

impl GaussianState {
    /// Validated construction from the correlator blocks.
    pub fn new(
        modes: Vec<String>,
        mean_q: Vec<f64>,
        mean_p: Vec<f64>,
        q: DMatrix<f64>,
        p: DMatrix<f64>,
        r: DMatrix<f64>,
        hbar: f64,
    ) -> Result<Self> {
        let state = Self::unchecked(modes, mean_q, mean_p, q, p, r, hbar)?;
        state.validate(state.covariance().amax())?;
        Ok(state)
    }

    /// Shape and symmetry checks only.
    fn unchecked(
        modes: Vec<String>,
        mean_q: Vec<f64>,
        mean_p: Vec<f64>,
        q: DMatrix<f64>,
        p: DMatrix<f64>,
        r: DMatrix<f64>,
        hbar: f64,
    ) -> Result<Self> {
        let n = modes.len();
        if n == 0 {
            return Err(Error::InvalidState("a state needs at least one mode".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::InvalidState(format!("duplicate mode label `{m}`")));
            }
        }
        if mean_q.len() != n || mean_p.len() != n {
            return Err(Error::DimensionMismatch(mean_q.len().max(mean_p.len()), n));
        }
        for b in [&q, &p, &r] {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch(b.nrows(), n));
            }
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidState(format!("ħ must be positive, got {hbar}")));
        }
        if mean_q.iter().chain(&mean_p).any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite mean".into()));
        }
        check_symmetric(&q, "Q")?;
        check_symmetric(&p, "P")?;
        Ok(Self {
            modes,
            mean_q: DVector::from_vec(mean_q),
            mean_p: DVector::from_vec(mean_p),
            q,
            p,
            r,
            hbar,
        })
    }

    /// Validated construction from a `(Q…, P…)` covariance and mean.
    pub fn from_covariance(modes: Vec<String>, mean: &DVector<f64>, sigma: &DMatrix<f64>, hbar: f64) -> Result<Self> {
        Self::from_covariance_scaled(modes, mean, sigma, hbar, sigma.amax())
    }

    /// As [`Self::from_covariance`] for numerically computed covariances:
    /// `ν_min` may undershoot `ħ/2` by the relative amount `rel_slack`.
    pub fn from_covariance_with_slack(
        modes: Vec<String>,
        mean: &DVector<f64>,
        sigma: &DMatrix<f64>,
        hbar: f64,
        rel_slack: f64,
    ) -> Result<Self> {
        let n = modes.len();
        if sigma.nrows() != 2 * n || sigma.ncols() != 2 * n || mean.len() != 2 * n {
            return Err(Error::DimensionMismatch(sigma.nrows(), 2 * n));
        }
        let sym = 0.5 * (sigma + sigma.transpose());
        let state = Self::unchecked(
            modes,
            mean.rows(0, n).iter().copied().collect(),
            mean.rows(n, n).iter().copied().collect(),
            sym.view((0, 0), (n, n)).into_owned(),
            sym.view((n, n), (n, n)).into_owned(),
            sym.view((n, 0), (n, n)).into_owned(),
            hbar,
        )?;
        let nu = symplectic_spectrum(&state.covariance())?;
        if nu[0] < 0.5 * hbar * (1.0 - rel_slack.max(UNCERTAINTY_SLACK)) {
            return Err(Error::InvalidState(format!("smallest symplectic eigenvalue {:e} below ħ/2", nu[0])));
        }
        Ok(state)
    }

    fn from_covariance_scaled(
        modes: Vec<String>,
        mean: &DVector<f64>,
        sigma: &DMatrix<f64>,
        hbar: f64,
        scale: f64,
    ) -> Result<Self> {
        let n = modes.len();
        if sigma.nrows() != 2 * n || sigma.ncols() != 2 * n || mean.len() != 2 * n {
            return Err(Error::DimensionMismatch(sigma.nrows(), 2 * n));
        }
        let sym = 0.5 * (sigma + sigma.transpose());
        check_symmetric(sigma, "covariance")?;
        let state = Self::unchecked(
            modes,
            mean.rows(0, n).iter().copied().collect(),
            mean.rows(n, n).iter().copied().collect(),
            sym.view((0, 0), (n, n)).into_owned(),
            sym.view((n, n), (n, n)).into_owned(),
            sym.view((n, 0), (n, n)).into_owned(),
            hbar,
        )?;
        state.validate(scale.max(sigma.amax()))?;
        Ok(state)
    }

    /// Accepts `ν_min ≥ ħ/2` up to rounding. Entries of size `scale` pin ν²
    /// only to `ε·scale²`, so strongly squeezed states get a wider margin.
    fn validate(&self, scale: f64) -> Result<()> {
        let nu = symplectic_spectrum(&self.covariance())?;
        let bound = 0.5 * self.hbar;
        let rel = UNCERTAINTY_SLACK.max(16.0 * f64::EPSILON * (scale / bound).powi(2));
        if nu[0] < bound * (1.0 - rel) {
            return Err(Error::InvalidState(format!(
                "smallest symplectic eigenvalue {:e} below ħ/2 = {bound:e}",
                nu[0]
            )));
        }
        Ok(())
    }

    fn labels(modes: &[&str]) -> Vec<String> {
        modes.iter().map(|s| s.to_string()).collect()
    }

    /// Product of ground states of oscillators with the given scale.
    pub fn vacuum(modes: &[&str], scale: OscillatorScale, hbar: f64) -> Result<Self> {
        Self::thermal(modes, 0.0, scale, hbar)
    }

    /// Product of thermal states with mean occupation `nbar`.
    pub fn thermal(modes: &[&str], nbar: f64, scale: OscillatorScale, hbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::InvalidState(format!("occupation must be nonnegative, got {nbar}")));
        }
        let n = modes.len();
        let (vq, vp) = scale.vacuum_variances(hbar);
        let f = 2.0 * nbar + 1.0;
        Self::new(
            Self::labels(modes),
            vec![0.0; n],
            vec![0.0; n],
            DMatrix::from_diagonal_element(n, n, vq * f),
            DMatrix::from_diagonal_element(n, n, vp * f),
            DMatrix::zeros(n, n),
            hbar,
        )
    }

    /// Two-mode squeezed vacuum, squeezed in `Q_a − Q_b` and `P_a + P_b`.
    pub fn two_mode_squeezed(a: &str, b: &str, r: f64, scale: OscillatorScale, hbar: f64) -> Result<Self> {
        let (vq, vp) = scale.vacuum_variances(hbar);
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        Self::new(
            Self::labels(&[a, b]),
            vec![0.0; 2],
            vec![0.0; 2],
            DMatrix::from_row_slice(2, 2, &[vq * c, vq * s, vq * s, vq * c]),
            DMatrix::from_row_slice(2, 2, &[vp * c, -vp * s, -vp * s, vp * c]),
            DMatrix::zeros(2, 2),
            hbar,
        )
    }

    /// Coherent state `|α⟩` of one oscillator.
    pub fn coherent(mode: &str, alpha: Complex64, scale: OscillatorScale, hbar: f64) -> Result<Self> {
        let (dq, dp) = scale.amplitude_to_shift(alpha, hbar);
        Self::vacuum(&[mode], scale, hbar)?.displace(mode, dq, dp)
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mean_q(&self) -> &DVector<f64> {
        &self.mean_q
    }

    pub fn mean_p(&self) -> &DVector<f64> {
        &self.mean_p
    }

    pub fn q_block(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn p_block(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn r_block(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn mode_index(&self, mode: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }

    /// `(⟨δQ²⟩, ⟨δP²⟩, ⟨δP, δQ⟩)` of one mode.
    pub fn local_correlators(&self, mode: &str) -> Result<(f64, f64, f64)> {
        let i = self.mode_index(mode)?;
        Ok((self.q[(i, i)], self.p[(i, i)], self.r[(i, i)]))
    }

    /// Covariance in `(Q…, P…)` ordering.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&self.q);
        s.view_mut((n, n), (n, n)).copy_from(&self.p);
        s.view_mut((n, 0), (n, n)).copy_from(&self.r);
        s.view_mut((0, n), (n, n)).copy_from(&self.r.transpose());
        s
    }

    /// Mean in `(Q…, P…)` ordering.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.n_modes();
        let mut m = DVector::zeros(2 * n);
        m.rows_mut(0, n).copy_from(&self.mean_q);
        m.rows_mut(n, n).copy_from(&self.mean_p);
        m
    }

    fn indices(&self, modes: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(modes.len());
        for m in modes {
            let i = self.mode_index(m)?;
            if out.contains(&i) {
                return Err(Error::InvalidState(format!("mode `{m}` listed twice")));
            }
            out.push(i);
        }
        Ok(out)
    }

    /// Phase-space indices `(Q_i…, P_i…)` of the given mode indices.
    fn phase_indices(&self, idx: &[usize]) -> Vec<usize> {
        let n = self.n_modes();
        idx.iter().copied().chain(idx.iter().map(|i| i + n)).collect()
    }

    /// Marginal on the kept modes, in the order given.
    pub fn reduce(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidState("cannot reduce to an empty set of modes".into()));
        }
        let idx = self.indices(keep)?;
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
        Ok(Self {
            modes: idx.iter().map(|&i| self.modes[i].clone()).collect(),
            mean_q: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean_q[i])),
            mean_p: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean_p[i])),
            q: pick(&self.q),
            p: pick(&self.p),
            r: pick(&self.r),
            hbar: self.hbar,
        })
    }

    /// Tensor product with a state on disjoint modes.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if (self.hbar - other.hbar).abs() > 1e-15 * self.hbar {
            return Err(Error::InvalidState("tensor product of states with different ħ".into()));
        }
        if let Some(m) = other.modes.iter().find(|m| self.modes.contains(m)) {
            return Err(Error::InvalidState(format!("mode `{m}` present in both factors")));
        }
        let (n1, n2) = (self.n_modes(), other.n_modes());
        let n = n1 + n2;
        let block = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((0, 0), (n1, n1)).copy_from(a);
            m.view_mut((n1, n1), (n2, n2)).copy_from(b);
            m
        };
        Ok(Self {
            modes: self.modes.iter().chain(&other.modes).cloned().collect(),
            mean_q: DVector::from_iterator(n, self.mean_q.iter().chain(other.mean_q.iter()).copied()),
            mean_p: DVector::from_iterator(n, self.mean_p.iter().chain(other.mean_p.iter()).copied()),
            q: block(&self.q, &other.q),
            p: block(&self.p, &other.p),
            r: block(&self.r, &other.r),
            hbar: self.hbar,
        })
    }

    /// Symplectic eigenvalues, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_spectrum(&self.covariance())
    }

    /// Logarithmic negativity (base 2) between two disjoint groups of modes.
    pub fn log_negativity(&self, part_a: &[&str], part_b: &[&str]) -> Result<f64> {
        let nu = self.partial_transpose_spectrum(part_a, part_b)?;
        let half = 0.5 * self.hbar;
        Ok(nu.iter().map(|v| (-(v / half).log2()).max(0.0)).sum())
    }

    /// Ascending symplectic spectrum of the covariance with `P → −P` on
    /// `part_b`; a value below ħ/2 signals entanglement.
    pub fn partial_transpose_spectrum(&self, part_a: &[&str], part_b: &[&str]) -> Result<Vec<f64>> {
        if part_a.is_empty() || part_b.is_empty() {
            return Err(Error::InvalidState("both parts of the bipartition must be nonempty".into()));
        }
        if part_a.iter().any(|m| part_b.contains(m)) {
            return Err(Error::InvalidState("bipartition parts overlap".into()));
        }
        let keep: Vec<&str> = part_a.iter().chain(part_b).copied().collect();
        let joint = self.reduce(&keep)?;
        let n = joint.n_modes();
        let mut sigma = joint.covariance();
        // Partial transpose: P → −P on the second part.
        for k in part_a.len()..n {
            let row = n + k;
            for c in 0..2 * n {
                sigma[(row, c)] = -sigma[(row, c)];
            }
            for r in 0..2 * n {
                sigma[(r, row)] = -sigma[(r, row)];
            }
        }
        symplectic_spectrum(&sigma)
    }

    /// Shifts the mean of one mode.
    pub fn displace(&self, mode: &str, dq: f64, dp: f64) -> Result<Self> {
        let i = self.mode_index(mode)?;
        let mut out = self.clone();
        out.mean_q[i] += dq;
        out.mean_p[i] += dp;
        Ok(out)
    }

    /// Displacement by a complex amplitude in the given oscillator scale.
    pub fn displace_amplitude(&self, mode: &str, beta: Complex64, scale: OscillatorScale) -> Result<Self> {
        let (dq, dp) = scale.amplitude_to_shift(beta, self.hbar);
        self.displace(mode, dq, dp)
    }

    /// Applies a linear symplectic map `x → S x` (in `(Q…, P…)` ordering).
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        let n = self.n_modes();
        if s.nrows() != 2 * n || s.ncols() != 2 * n {
            return Err(Error::DimensionMismatch(s.nrows(), 2 * n));
        }
        let sigma = s * self.covariance() * s.transpose();
        let mean = s * self.mean();
        let scale = s.amax().powi(2) * self.covariance().amax();
        Self::from_covariance_scaled(self.modes.clone(), &mean, &(0.5 * (&sigma + sigma.transpose())), self.hbar, scale)
    }

    /// `Tr(ρ₁ρ₂)` for two states on the same number of modes.
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::DimensionMismatch(self.n_modes(), other.n_modes()));
        }
        gaussian_overlap(&(other.mean() - self.mean()), &(self.covariance() + other.covariance()), self.hbar)
    }

    /// `⟨α|ρ|α⟩` for a single-mode state.
    pub fn fidelity_vs_coherent(&self, alpha: Complex64, scale: OscillatorScale) -> Result<f64> {
        if self.n_modes() != 1 {
            return Err(Error::InvalidState(format!(
                "coherent-state fidelity needs a single mode, got {}",
                self.n_modes()
            )));
        }
        let target = Self::coherent(&self.modes[0], alpha, scale, self.hbar)?;
        self.overlap(&target)
    }

    /// Conditions the unmeasured modes on a Gaussian measurement outcome.
    pub fn condition_on_measurement(&self, meas: &GaussianMeasurement, outcome: &[f64]) -> Result<Self> {
        let split = self.measurement_split(meas)?;
        if outcome.len() != meas.outcome_map.ncols() {
            return Err(Error::DimensionMismatch(outcome.len(), meas.outcome_map.ncols()));
        }
        let beta = DVector::from_row_slice(outcome);
        let innovation = &meas.outcome_map * beta - &split.mean_m;
        let gain = &split.sigma_km * &split.s_inv;
        let mean = &split.mean_k + &gain * innovation;
        let correction = &gain * split.sigma_km.transpose();
        let sigma = &split.sigma_kk - &correction;
        // Rounding follows the cancelling terms, and the ε·|σ_seed| error of
        // S = σ_MM + σ_seed carried through the gain (strongly squeezed seeds).
        let half = 0.5 * self.hbar;
        let amplified = gain.amax() * (meas.covariance.amax() * half).sqrt() + split.sigma_km.amax() * (split.s_inv.amax() * half).sqrt();
        let scale = split.sigma_kk.amax().max(correction.amax()).max(amplified);
        Self::from_covariance_scaled(split.kept, &mean, &(0.5 * (&sigma + sigma.transpose())), self.hbar, scale)
    }

    /// Conditioning as an affine map of the outcome: the kept modes have mean
    /// `offset + gain·β` and an outcome-independent covariance.
    pub fn conditional_map(&self, meas: &GaussianMeasurement) -> Result<ConditionalMap> {
        let split = self.measurement_split(meas)?;
        let k = &split.sigma_km * &split.s_inv;
        let correction = &k * split.sigma_km.transpose();
        let sigma = &split.sigma_kk - &correction;
        Ok(ConditionalMap {
            offset: &split.mean_k - &k * &split.mean_m,
            gain: &k * &meas.outcome_map,
            covariance: 0.5 * (&sigma + sigma.transpose()),
            kept: split.kept,
        })
    }

    /// Distribution of the measurement outcome, as mean and covariance of a
    /// normalised Gaussian over outcome space.
    pub fn outcome_distribution(&self, meas: &GaussianMeasurement) -> Result<OutcomeDistribution> {
        let split = self.measurement_split(meas)?;
        let l = &meas.outcome_map;
        let precision = l.transpose() * &split.s_inv * l;
        let covariance = precision.clone().try_inverse().ok_or(Error::DegenerateMeasurement)?;
        let mean = &covariance * l.transpose() * &split.s_inv * &split.mean_m;
        Ok(OutcomeDistribution { mean, covariance })
    }

    fn measurement_split(&self, meas: &GaussianMeasurement) -> Result<MeasurementSplit> {
        let measured: Vec<&str> = meas.modes.iter().map(String::as_str).collect();
        let m_idx = self.indices(&measured)?;
        let k_idx: Vec<usize> = (0..self.n_modes()).filter(|i| !m_idx.contains(i)).collect();
        if k_idx.is_empty() {
            return Err(Error::InvalidState("measurement leaves no modes to condition".into()));
        }
        let sigma = self.covariance();
        let mean = self.mean();
        let pm = self.phase_indices(&m_idx);
        let pk = self.phase_indices(&k_idx);
        let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| sigma[(rows[a], cols[b])]);
        let s = sub(&pm, &pm) + &meas.covariance;
        let s_inv = s.cholesky().ok_or(Error::DegenerateMeasurement)?.inverse();
        Ok(MeasurementSplit {
            kept: k_idx.iter().map(|&i| self.modes[i].clone()).collect(),
            mean_m: DVector::from_iterator(pm.len(), pm.iter().map(|&i| mean[i])),
            mean_k: DVector::from_iterator(pk.len(), pk.iter().map(|&i| mean[i])),
            sigma_kk: sub(&pk, &pk),
            sigma_km: sub(&pk, &pm),
            s_inv,
        })
    }
}

struct MeasurementSplit {
    kept: Vec<String>,
    mean_m: DVector<f64>,
    mean_k: DVector<f64>,
    sigma_kk: DMatrix<f64>,
    sigma_km: DMatrix<f64>,
    s_inv: DMatrix<f64>,
}

/// Kept modes after a Gaussian measurement, `(Q…, P…)` ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMap {
    pub kept: Vec<String>,
    pub offset: DVector<f64>,
    pub gain: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
}

/// `Tr(ρ₁ρ₂) = ħⁿ exp(−½ Δᵀ Σ⁻¹ Δ) / √det Σ` with `Σ = σ₁ + σ₂`.
pub fn gaussian_overlap(delta: &DVector<f64>, sum_cov: &DMatrix<f64>, hbar: f64) -> Result<f64> {
    let n = sum_cov.nrows() / 2;
    let chol = sum_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidState("overlap covariance is not positive definite".into()))?;
    let det = chol.determinant();
    let quad = delta.dot(&chol.solve(delta));
    Ok(hbar.powi(n as i32) * (-0.5 * quad).exp() / det.sqrt())
}

/// Normalised Gaussian density of measurement outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Gaussian measurement whose POVM elements are displaced copies of a fixed
/// Gaussian state on the measured modes; the displacement is `L β` for the
/// real outcome vector β.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasurement {
    pub modes: Vec<String>,
    /// Covariance of the POVM seed state, `(Q…, P…)` ordering over `modes`.
    pub covariance: DMatrix<f64>,
    /// `L`: outcome vector → phase-space displacement of the seed.
    pub outcome_map: DMatrix<f64>,
}

impl GaussianMeasurement {
    pub fn new(modes: Vec<String>, covariance: DMatrix<f64>, outcome_map: DMatrix<f64>) -> Result<Self> {
        let k = modes.len();
        if covariance.nrows() != 2 * k || covariance.ncols() != 2 * k || outcome_map.nrows() != 2 * k {
            return Err(Error::DimensionMismatch(covariance.nrows(), 2 * k));
        }
        check_symmetric(&covariance, "measurement covariance")?;
        Ok(Self {
            modes,
            covariance,
            outcome_map,
        })
    }

    /// Joint measurement of `(Q_c − Q_a, P_c + P_a)` with a two-mode squeezed
    /// seed of squeezing `r2`; ideal for `r2 → ∞`. Outcomes are `(x₋, p₊)`.
    pub fn bell(mode_c: &str, mode_a: &str, r2: f64, scale: OscillatorScale, hbar: f64) -> Result<Self> {
        let seed = GaussianState::two_mode_squeezed(mode_c, mode_a, r2, scale, hbar)?;
        let l = DMatrix::from_row_slice(4, 2, &[0.5, 0.0, -0.5, 0.0, 0.0, 0.5, 0.0, 0.5]);
        Self::new(vec![mode_c.to_string(), mode_a.to_string()], seed.covariance(), l)
    }
}

/// Excited-state population ρ₁₁ of an oscillator with renormalised
/// frequency `omega_r`, computed from its zero-mean correlators.
pub fn excited_population(q2: f64, p2: f64, pq: f64, m0: f64, omega_r: f64, hbar: f64) -> Result<f64> {
    let det = p2 * q2 - pq * pq;
    let bound = 0.25 * hbar * hbar;
    if !(det >= bound - 1e-12 * bound.max(det.abs())) || !det.is_finite() {
        return Err(Error::UncertaintyViolation { value: det, bound });
    }
    let num = hbar * (det - bound).max(0.0);
    let den = (p2 + 0.5 * hbar * m0 * omega_r) * (q2 + hbar / (2.0 * m0 * omega_r)) - pq * pq;
    Ok(num / den.powf(1.5))
}
