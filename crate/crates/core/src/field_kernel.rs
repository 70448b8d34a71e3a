//! Pointwise limit W₀ of the massless Minkowski-vacuum Wightman function
//! pulled back to worldlines.
//!
//! The iε prescription is already taken: for timelike separation with the
//! first argument later, `Δt → Δt − iε` fixes the branch of every
//! non-integer power and of the logarithm.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::worldline::{interval_sq, Worldline};

/// Vacuum W₀ for a massless scalar in dimension `d ∈ [2, 6]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WightmanKernel {
    dimension: usize,
    ir_mass: Option<f64>,
}

impl WightmanKernel {
    /// Kernel for `d ≠ 2`, or `d = 2` with the default infrared mass μ = 1.
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 2 {
            return Self::with_ir_mass(2, 1.0);
        }
        if !(3..=6).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension, "2-6"));
        }
        Ok(Self {
            dimension,
            ir_mass: None,
        })
    }

    /// The infrared scale μ enters only for `d = 2`.
    pub fn with_ir_mass(dimension: usize, mu: f64) -> Result<Self> {
        if dimension != 2 {
            return Err(invalid("ir_mass", format!("only meaningful for d = 2, got d = {dimension}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid("ir_mass", format!("must be positive, got {mu}")));
        }
        Ok(Self {
            dimension,
            ir_mass: Some(mu),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn ir_mass(&self) -> Option<f64> {
        self.ir_mass
    }

    /// W₀ as a function of the squared interval for a future-directed
    /// separation (first point later).
    ///
    /// For `d = 5, 6` the interval powers `[−(Δz)²]^{−3/2}` and `[(Δz)²]^{−2}`
    /// are returned as real numbers; their normalisation lives in the rate
    /// formulas that consume them.
    pub fn from_interval(&self, dz2: f64) -> Result<Complex64> {
        if dz2 == 0.0 {
            return Err(Error::NullSeparation(0.0));
        }
        // Inverse interval powers vanish once the interval overflows (deep
        // in a Rindler tail); the d = 2 logarithm has no such limit.
        if dz2.is_infinite() && self.dimension > 2 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if !dz2.is_finite() {
            return Err(invalid("interval", format!("non-finite squared interval {dz2}")));
        }
        let timelike = dz2 < 0.0;
        let v = match self.dimension {
            2 => {
                let mu = self.ir_mass.unwrap_or(1.0);
                let re = -(mu * mu * dz2.abs()).ln() / (4.0 * PI);
                Complex64::new(re, if timelike { -0.25 } else { 0.0 })
            }
            3 => {
                let r = 1.0 / (4.0 * PI * dz2.abs().sqrt());
                if timelike {
                    Complex64::new(0.0, -r)
                } else {
                    Complex64::new(r, 0.0)
                }
            }
            4 => Complex64::new(1.0 / (4.0 * PI * PI * dz2), 0.0),
            5 => {
                if !timelike {
                    return Err(invalid("interval", "d = 5 interval power is defined for timelike separation only"));
                }
                Complex64::new((-dz2).powf(-1.5), 0.0)
            }
            6 => Complex64::new(1.0 / (dz2 * dz2), 0.0),
            d => return Err(Error::UnsupportedDimension(d, "2-6")),
        };
        Ok(v)
    }

    /// W₀(u, u − s) on a single worldline, `s > 0`.
    pub fn w0_self(&self, w: &Worldline, u: f64, s: f64) -> Result<Complex64> {
        if w.dimension() != self.dimension {
            return Err(Error::DimensionMismatch(w.dimension(), self.dimension));
        }
        if !(s > 0.0) {
            return Err(invalid("s", format!("gap must be positive, got {s}")));
        }
        let dz2 = w.gap_interval_sq(u, s);
        self.from_interval(dz2).map_err(|e| match e {
            Error::NullSeparation(_) => Error::NullSeparation(s),
            other => other,
        })
    }
}

/// Symmetrised (real) part of W₀ between points on two worldlines, `d = 4`.
pub fn w0_cross(k: &WightmanKernel, wa: &Worldline, tau_a: f64, wb: &Worldline, tau_b: f64) -> Result<f64> {
    if k.dimension() != 4 {
        return Err(Error::UnsupportedDimension(k.dimension(), "4 (cross correlator)"));
    }
    let dz2 = interval_sq(wa, tau_a, wb, tau_b)?;
    if dz2 == 0.0 {
        return Err(Error::NullSeparation(tau_a - tau_b));
    }
    Ok(1.0 / (4.0 * PI * PI * dz2))
}

/// Anything that can supply W₀ along a single worldline.
///
/// The vacuum kernel implements this for every dimension; user-supplied
/// kernels are restricted to `d ∈ {2, 4}`, where the regulator-free formulas
/// only need W₀ and a universal Hadamard counterterm.
pub trait Kernel: Sync {
    fn dimension(&self) -> usize;
    fn w0_self(&self, w: &Worldline, u: f64, s: f64) -> Result<Complex64>;
    /// The Minkowski vacuum kernel, when this is one; enables closed-form
    /// short-gap expansions.
    fn as_vacuum(&self) -> Option<&WightmanKernel> {
        None
    }
}

impl Kernel for WightmanKernel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn w0_self(&self, w: &Worldline, u: f64, s: f64) -> Result<Complex64> {
        WightmanKernel::w0_self(self, w, u, s)
    }

    fn as_vacuum(&self) -> Option<&WightmanKernel> {
        Some(self)
    }
}

/// User-supplied W₀(w, u, s) for `d ∈ {2, 4}`.
pub struct CustomKernel<F> {
    dimension: usize,
    f: F,
}

impl<F> CustomKernel<F>
where
    F: Fn(&Worldline, f64, f64) -> Complex64 + Sync,
{
    pub fn new(dimension: usize, f: F) -> Result<Self> {
        if dimension != 2 && dimension != 4 {
            return Err(Error::UnsupportedDimension(dimension, "2 or 4 for plug-in kernels"));
        }
        Ok(Self { dimension, f })
    }
}

impl<F> Kernel for CustomKernel<F>
where
    F: Fn(&Worldline, f64, f64) -> Complex64 + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn w0_self(&self, w: &Worldline, u: f64, s: f64) -> Result<Complex64> {
        let v = (self.f)(w, u, s);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularInterior(s))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertial_and_accelerated_d4() {
        let k = WightmanKernel::new(4).unwrap();
        let rest = Worldline::inertial_rest(4).unwrap();
        let s = 0.7;
        let v = k.w0_self(&rest, 2.0, s).unwrap();
        assert!((v.re + 1.0 / (4.0 * PI * PI * s * s)).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
        let a = 1.9;
        let acc = Worldline::uniform(4, a).unwrap();
        let v = k.w0_self(&acc, -3.0, s).unwrap();
        let expected = -a * a / (16.0 * PI * PI * (0.5 * a * s).sinh().powi(2));
        assert!((v.re - expected).abs() < 1e-13 * expected.abs());
    }

    #[test]
    fn d3_branch() {
        let k = WightmanKernel::new(3).unwrap();
        let rest = Worldline::inertial_rest(3).unwrap();
        let v = k.w0_self(&rest, 0.0, 2.0).unwrap();
        assert_eq!(v.re, 0.0);
        assert!((v.im + 1.0 / (8.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn d2_mass_shift_is_constant() {
        let k1 = WightmanKernel::new(2).unwrap();
        let k2 = WightmanKernel::with_ir_mass(2, 3.0).unwrap();
        let acc = Worldline::uniform(2, 0.8).unwrap();
        for &s in &[0.1, 1.0, 5.0] {
            let d = k2.w0_self(&acc, 0.0, s).unwrap() - k1.w0_self(&acc, 0.0, s).unwrap();
            assert!((d.re + 9f64.ln() / (4.0 * PI)).abs() < 1e-14);
            assert_eq!(d.im, 0.0);
        }
        assert!(WightmanKernel::with_ir_mass(4, 1.0).is_err());
        assert!(WightmanKernel::with_ir_mass(2, 0.0).is_err());
    }

    #[test]
    fn cross_kernel_examples() {
        let k = WightmanKernel::new(4).unwrap();
        let l = 1.3;
        let wa = Worldline::static_at(4, 0.0).unwrap();
        let wb = Worldline::static_at(4, l).unwrap();
        let v = w0_cross(&k, &wa, 0.4, &wb, 0.4).unwrap();
        assert!((v - 1.0 / (4.0 * PI * PI * l * l)).abs() < 1e-15);
        assert_eq!(v, w0_cross(&k, &wb, 0.4, &wa, 0.4).unwrap());
        assert!(matches!(w0_cross(&k, &wa, 0.0, &wb, l), Err(Error::NullSeparation(_))));
        let acc = Worldline::uniform(4, 2.0).unwrap();
        let cross = w0_cross(&k, &acc, 1.0, &acc, 0.25).unwrap();
        assert!((cross - k.w0_self(&acc, 1.0, 0.75).unwrap().re).abs() < 1e-14 * cross.abs());
    }

    #[test]
    fn hadamard_short_distance() {
        let k = WightmanKernel::new(4).unwrap();
        let s = 1e-4;
        for w in [
            Worldline::uniform(4, 3.0).unwrap(),
            Worldline::asymptotic_uniform(4, 2.0, 1.0).unwrap(),
            Worldline::truncated_uniform(4, 1.5, 0.5).unwrap(),
        ] {
            for &u in &[-1.0, 0.3, 2.0] {
                let v = k.w0_self(&w, u, s).unwrap().re * s * s;
                assert!((v + 1.0 / (4.0 * PI * PI)).abs() < 1e-6, "{v}");
            }
        }
    }

    #[test]
    fn plug_in_kernels_restricted() {
        assert!(CustomKernel::new(3, |_: &Worldline, _, _| Complex64::new(0.0, 0.0)).is_err());
        let k = CustomKernel::new(4, |_: &Worldline, _, s: f64| Complex64::new(-1.0 / (4.0 * PI * PI * s * s), 0.0)).unwrap();
        let rest = Worldline::inertial_rest(4).unwrap();
        let vac = WightmanKernel::new(4).unwrap();
        let a = Kernel::w0_self(&k, &rest, 0.0, 0.5).unwrap();
        let b = Kernel::w0_self(&vac, &rest, 0.0, 0.5).unwrap();
        assert!((a - b).norm() < 1e-15);
    }
}
