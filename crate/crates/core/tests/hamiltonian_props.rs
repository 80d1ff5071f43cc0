use liouville_core::hamiltonian::*;
use liouville_core::params::{ceil_alpha, polygon_config, polygon_radius, solution_count, DiskParams, PeakCount};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn min_separation(pts: &[Complex64]) -> f64 {
    let mut d = f64::INFINITY;
    for (j, z) in pts.iter().enumerate() {
        d = d.min(1.0 - z.norm()).min(z.norm());
        for w in &pts[j + 1..] {
            d = d.min((z - w).norm());
        }
    }
    d
}

fn config(m: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.1f64..0.9, 0.0f64..TAU), m)
        .prop_map(|v| v.into_iter().map(|(r, t)| Complex64::from_polar(r, t)).collect())
        .prop_filter("separated", |pts: &Vec<Complex64>| min_separation(pts) > 0.05)
}

fn sized_config() -> impl Strategy<Value = Vec<Complex64>> {
    (1usize..=5).prop_flat_map(config)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn phi_is_rotation_invariant(pts in sized_config(), phi in 0.0f64..TAU, alpha in 0.2f64..6.0) {
        let p = DiskParams::new(alpha).unwrap();
        let c = VortexConfig::new(pts).unwrap();
        let (a, b) = (phi_m(&c, &p), phi_m(&c.rotate(phi), &p));
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{a} {b}");
    }

    #[test]
    fn polar_gradient_matches_differences(pts in sized_config(), alpha in 0.2f64..6.0) {
        let p = DiskParams::new(alpha).unwrap();
        let c = VortexConfig::new(pts).unwrap();
        let g = grad_phi_m(&c, &p, GradMode::Polar).entries;
        let x = c.polar_flat();
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let at = |v: &[f64]| {
                let r: Vec<f64> = v.iter().step_by(2).copied().collect();
                let t: Vec<f64> = v.iter().skip(1).step_by(2).copied().collect();
                phi_m(&VortexConfig::from_polar(&r, &t).unwrap(), &p)
            };
            let fd = (at(&xp) - at(&xm)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()), "entry {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn cartesian_and_polar_gradients_agree(pts in sized_config(), alpha in 0.2f64..6.0) {
        let p = DiskParams::new(alpha).unwrap();
        let c = VortexConfig::new(pts).unwrap();
        let gp = grad_phi_m(&c, &p, GradMode::Polar).entries;
        let gc = grad_phi_m(&c, &p, GradMode::Cartesian).entries;
        for (j, z) in c.points().iter().enumerate() {
            let (r, t) = (z.norm(), z.arg());
            let (gx, gy) = (gc[2 * j], gc[2 * j + 1]);
            let dr = gx * t.cos() + gy * t.sin();
            let dt = r * (-gx * t.sin() + gy * t.cos());
            let scale = 1.0 + gp[2 * j].abs() + gp[2 * j + 1].abs();
            prop_assert!((dr - gp[2 * j]).abs() < 1e-9 * scale);
            prop_assert!((dt - gp[2 * j + 1]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn polygon_angular_gradient_vanishes(alpha in 0.2f64..8.0, m in 1usize..8, theta0 in 0.0f64..TAU) {
        prop_assume!((m as f64) < alpha + 1.0);
        let p = DiskParams::new(alpha).unwrap();
        let c = polygon_config(&p, PeakCount::new(m).unwrap(), theta0).unwrap();
        let g = grad_phi_m(&c, &p, GradMode::Polar).entries;
        for j in 0..m {
            prop_assert!(g[2 * j + 1].abs() < 1e-13 * (1.0 + m as f64), "{}", g[2 * j + 1]);
        }
        let full = GradientVector { entries: g, mode: GradMode::Polar }.max_abs();
        prop_assert!(full < 1e-10, "{full}");
    }

    #[test]
    fn e0_multistart_lands_on_equiangular(m in 3usize..7, raw in prop::collection::vec(0.05f64..1.0, 7)) {
        // ordered angles from cumulative positive gaps
        let gaps = &raw[..m];
        let total: f64 = gaps.iter().sum();
        let mut acc = 0.0;
        let start: Vec<f64> = gaps
            .iter()
            .map(|g| {
                acc += g / total * TAU * 0.999;
                acc
            })
            .collect();
        let out = e0_newton(&AngleConfig::new(start).unwrap(), 1e-12, 200).unwrap();
        let eq = AngleConfig::equiangular(m);
        // the chart has a cyclic relabelling freedom; compare gaps
        let x = out.angles();
        for j in 0..m - 1 {
            prop_assert!((x[j + 1] - x[j] - TAU / m as f64).abs() < 1e-9);
        }
        prop_assert!((e0_value(&out) - e0_value(&eq)).abs() < 1e-9);
    }

    #[test]
    fn polygon_radius_monotone(alpha in 0.1f64..8.0, da in 0.01f64..2.0, m in 1usize..8) {
        prop_assume!(((m + 1) as f64) < alpha + 1.0);
        let p = DiskParams::new(alpha).unwrap();
        let q = DiskParams::new(alpha + da).unwrap();
        let r_m = polygon_radius(&p, PeakCount::new(m).unwrap()).unwrap();
        let r_m1 = polygon_radius(&p, PeakCount::new(m + 1).unwrap()).unwrap();
        prop_assert!(r_m1 < r_m);
        prop_assert!(polygon_radius(&q, PeakCount::new(m).unwrap()).unwrap() > r_m);
        let b = alpha + 1.0;
        let mf = m as f64;
        let lhs = r_m.powi(2 * m as i32);
        let rhs = (b - mf) / (b + mf);
        prop_assert!((lhs - rhs).abs() < 1e-14 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn count_depends_on_ceiling_only(a in 0.01f64..9.0, b in 0.01f64..9.0) {
        let (p, q) = (DiskParams::new(a).unwrap(), DiskParams::new(b).unwrap());
        if ceil_alpha(&p) == ceil_alpha(&q) {
            prop_assert_eq!(solution_count(&p), solution_count(&q));
        }
    }
}

#[test]
fn e0_convexity_bound() {
    for m in 3..=6 {
        let ev = e0_restricted_min_eigenvalue(&AngleConfig::equiangular(m));
        assert!(ev >= m as f64 / 2.0 - 1e-8, "m = {m}: {ev}");
    }
}
