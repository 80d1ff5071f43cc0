use liouville_core::params::{DiskParams, PeakCount};
use liouville_core::spectral::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn grid() -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    for i in 0..=10 {
        let alpha = 1.0 + 0.5 * i as f64;
        for m in 1..=(alpha.ceil() as usize) {
            if (m as f64) < alpha + 1.0 {
                out.push((alpha, m));
            }
        }
    }
    out
}

#[test]
fn determinant_law_on_grid() {
    for (alpha, m) in grid() {
        let p = DiskParams::new(alpha).unwrap();
        let pm = PeakCount::new(m).unwrap();
        let rho = assemble_blocks(&p, pm).unwrap().rho;
        for pmode in 1..m {
            let det = mode_block(&p, pm, pmode).unwrap().det();
            let (pf, mf) = (pmode as f64, m as f64);
            let want = -4.0 * pf * pf * (mf - pf).powi(2) / rho;
            assert!((det - want).abs() < 1e-12 * want.abs(), "alpha {alpha} m {m} p {pmode}: {det} vs {want}");
        }
    }
}

#[test]
fn polar_kernel_is_rotation() {
    for (alpha, m) in grid() {
        let p = DiskParams::new(alpha).unwrap();
        let h = assemble_blocks(&p, PeakCount::new(m).unwrap()).unwrap().dense();
        let v = DMatrix::from_fn(2 * m, 1, |i, _| if i % 2 == 1 { 1.0 } else { 0.0 });
        let hv = &h * &v;
        assert!(hv.amax() < 1e-10 * h.amax(), "alpha {alpha} m {m}: {}", hv.amax());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn kernel_simplicity_survives_congruence(idx in 0usize..40, d in prop::collection::vec(0.2f64..5.0, 7)) {
        let cases = grid();
        let (alpha, m) = cases[idx % cases.len()];
        let p = DiskParams::new(alpha).unwrap();
        let h = assemble_blocks(&p, PeakCount::new(m).unwrap()).unwrap().dense();
        let dd = DMatrix::from_fn(2 * m, 2 * m, |i, j| if i == j { d[i / 2] } else { 0.0 });
        let g = &dd * h * &dd;
        let ev = g.symmetric_eigenvalues();
        let zeros = ev.iter().filter(|v| v.abs() < 1e-10 * ev.amax()).count();
        prop_assert_eq!(zeros, 1, "alpha {} m {}: {:?}", alpha, m, ev);
    }

    #[test]
    fn closed_form_spectrum_matches_dense(idx in 0usize..40) {
        let cases = grid();
        let (alpha, m) = cases[idx % cases.len()];
        let p = DiskParams::new(alpha).unwrap();
        let pm = PeakCount::new(m).unwrap();
        let mut dense: Vec<f64> = assemble_blocks(&p, pm).unwrap().dense().symmetric_eigenvalues().iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let spec = full_spectrum(&p, pm).unwrap();
        let scale = spec.spectral_radius();
        for (a, b) in dense.iter().zip(&spec.eigenvalues) {
            prop_assert!((a - b).abs() < 1e-9 * scale, "{} vs {}", a, b);
        }
        prop_assert_eq!(spec.zero_count(), 1);
    }
}
