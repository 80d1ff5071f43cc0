//! Numerical toolkit for the singular Liouville equation
//! `Δu + λ|x|^{2α} e^u = 0` on the unit disk with Dirichlet data.
//!
//! The crate covers the finite-dimensional reduction (the vortex Hamiltonian
//! `Phi_m`, its critical points and their Hessian spectra), the polynomial
//! identities satisfied by those critical points, the explicit radial
//! branches with their degeneracy loci, and a polar-grid Newton solver for
//! the full two-dimensional problem.
//!
//! ```
//! use liouville_core::params::{polygon_radius, DiskParams, PeakCount};
//!
//! let p = DiskParams::new(2.5)?;
//! let r = polygon_radius(&p, PeakCount::new(3)?)?;
//! assert!((r - 0.6521429).abs() < 1e-7);
//! # Ok::<(), liouville_core::Error>(())
//! ```

pub mod banded;
pub mod critical;
pub mod error;
pub mod hamiltonian;
pub mod params;
pub mod pde2d;
pub mod poly;
pub mod quad;
pub mod radial;
pub mod spectral;

pub use error::{Error, Result};

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/radial.md")]
    mod radial {}
    #[doc = include_str!("../../../book/src/pde.md")]
    mod pde {}
}
