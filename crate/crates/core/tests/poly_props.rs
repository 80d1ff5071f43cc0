use liouville_core::critical::{newton_refine, DEFAULT_MAX_ITER, DEFAULT_TOL};
use liouville_core::hamiltonian::VortexConfig;
use liouville_core::params::{polygon_config, DiskParams, PeakCount};
use liouville_core::poly::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn complex() -> impl Strategy<Value = C> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| C::new(a, b))
}

fn monic(max_deg: usize) -> impl Strategy<Value = ComplexPoly> {
    prop::collection::vec(complex(), 1..=max_deg).prop_map(|mut c| {
        c.push(C::new(1.0, 0.0));
        ComplexPoly::new(c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reflection_is_an_involution(p in monic(8)) {
        prop_assert_eq!(p.reflect().reflect(), p);
    }

    #[test]
    fn reflection_matches_reflected_roots(roots in prop::collection::vec(complex(), 1..7)) {
        let p = ComplexPoly::from_roots(&roots);
        let mirrored: Vec<C> = roots.iter().map(|w| -w.conj()).collect();
        let q = ComplexPoly::from_roots(&mirrored);
        let r = p.reflect();
        let scale = p.max_coeff();
        for (a, b) in q.coeffs().iter().zip(r.coeffs()) {
            prop_assert!((a - b).norm() < 1e-12 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn limit_residual_drops_two_degrees(p in monic(8)) {
        let deg = p.degree();
        let res = limit_identity_residual(&p).unwrap();
        for k in [2 * deg - 1, 2 * deg] {
            let v = res.coeffs.get(k).copied().unwrap_or_default();
            prop_assert!(v.norm() < 1e-12 * res.normalization, "degree {}: {}", k, v);
        }
    }

    #[test]
    fn pq_identity_at_critical_points(alpha in 0.3f64..7.0, m in 1usize..8, theta0 in 0.0f64..TAU, kick in -1e-3f64..1e-3) {
        prop_assume!((m as f64) < alpha + 1.0);
        let p = DiskParams::new(alpha).unwrap();
        let poly = polygon_config(&p, PeakCount::new(m).unwrap(), theta0).unwrap();
        let start: Vec<C> = poly.points().iter().enumerate().map(|(j, z)| z * (1.0 + kick * (j as f64 + 1.0) / m as f64)).collect();
        let rep = newton_refine(&VortexConfig::new(start).unwrap(), &p, DEFAULT_TOL, DEFAULT_MAX_ITER);
        prop_assume!(rep.is_converged());
        let (pp, qq) = build_pq(&rep.config);
        let r = pq_identity_residual(&pp, &qq, &p).unwrap().relative();
        prop_assert!(r < 1e-10, "{}", r);
    }
}
