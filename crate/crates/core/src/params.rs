//! Global parameters and the closed-form constants derived from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::VortexConfig;

/// Singularity strength `alpha` and, optionally, the coupling `lambda`.
///
/// `beta` is never stored: it is always `alpha + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskParams {
    alpha: f64,
    lambda: Option<f64>,
}

impl DiskParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha, lambda: None })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(Self { lambda: Some(lambda), ..self })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.alpha + 1.0
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// The coupling, or a domain error naming the operation that needed it.
    pub fn require_lambda(&self, what: &str) -> Result<f64> {
        self.lambda
            .ok_or_else(|| Error::Domain(format!("{what} needs lambda")))
    }

    pub fn is_integer_alpha(&self) -> bool {
        self.alpha.fract() == 0.0
    }
}

/// Number of peaks, at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeakCount(usize);

impl PeakCount {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("m must be at least 1".into()));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

pub fn ceil_alpha(p: &DiskParams) -> i64 {
    p.alpha.ceil() as i64
}

/// Number of solution classes for small lambda: two radial ones plus one
/// m-peak family for each m up to ceil(alpha).
pub fn solution_count(p: &DiskParams) -> i64 {
    ceil_alpha(p) + 2
}

fn check_m_below_beta(p: &DiskParams, m: PeakCount) -> Result<()> {
    if m.get() as f64 >= p.beta() {
        return Err(Error::Domain(format!(
            "m = {} is not below alpha + 1 = {}",
            m.get(),
            p.beta()
        )));
    }
    Ok(())
}

/// `rho = r^2` at the polygon, i.e. `((beta - m)/(beta + m))^(1/m)`.
pub fn polygon_rho(p: &DiskParams, m: PeakCount) -> Result<f64> {
    check_m_below_beta(p, m)?;
    let b = p.beta();
    let mf = m.get() as f64;
    Ok(((b - mf) / (b + mf)).powf(1.0 / mf))
}

pub fn polygon_radius(p: &DiskParams, m: PeakCount) -> Result<f64> {
    check_m_below_beta(p, m)?;
    let b = p.beta();
    let mf = m.get() as f64;
    Ok(((b - mf) / (b + mf)).powf(0.5 / mf))
}

pub fn polygon_config(p: &DiskParams, m: PeakCount, theta0: f64) -> Result<VortexConfig> {
    let r = polygon_radius(p, m)?;
    let mf = m.get() as f64;
    let pts = (0..m.get())
        .map(|j| Complex64::from_polar(r, theta0 + std::f64::consts::TAU * j as f64 / mf))
        .collect();
    VortexConfig::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(a: f64) -> DiskParams {
        DiskParams::new(a).unwrap()
    }

    #[test]
    fn ceiling_and_count() {
        assert_eq!(ceil_alpha(&dp(2.5)), 3);
        assert_eq!(ceil_alpha(&dp(3.0)), 3);
        assert_eq!(ceil_alpha(&dp(0.1)), 1);
        assert_eq!(solution_count(&dp(2.5)), 5);
        assert_eq!(solution_count(&dp(1.0)), 3);
        assert_eq!(solution_count(&dp(4.0)), 6);
    }

    #[test]
    fn radius_examples() {
        let m1 = PeakCount::new(1).unwrap();
        let m3 = PeakCount::new(3).unwrap();
        assert!((polygon_radius(&dp(1.0), m1).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((polygon_radius(&dp(2.5), m3).unwrap() - 0.6521429).abs() < 1e-7);
        assert!(matches!(
            polygon_radius(&dp(1.0), PeakCount::new(2).unwrap()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn config_examples() {
        let c = polygon_config(&dp(2.0), PeakCount::new(1).unwrap(), 0.0).unwrap();
        let z = c.points()[0];
        assert!((z.re - 0.5f64.sqrt()).abs() < 1e-7 && z.im.abs() < 1e-15);
        let c = polygon_config(&dp(2.5), PeakCount::new(3).unwrap(), std::f64::consts::FRAC_PI_6)
            .unwrap();
        for (j, z) in c.points().iter().enumerate() {
            let want = std::f64::consts::FRAC_PI_6 + std::f64::consts::TAU * j as f64 / 3.0;
            assert!((z.arg() - crate::wrap_angle(want)).abs() < 1e-12);
            assert!((z.norm() - 0.6521429).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DiskParams::new(0.0).is_err());
        assert!(DiskParams::new(f64::NAN).is_err());
        assert!(dp(1.0).with_lambda(-1.0).is_err());
        assert!(PeakCount::new(0).is_err());
    }
}
