use dpc_core::linalg::BandedSystem;
use dpc_core::metrics::{lagged_regression, mse_of};
use dpc_core::robust::{m_scale, MScaleSpec};
use dpc_core::SeriesPanel;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn panel_strategy() -> impl Strategy<Value = SeriesPanel> {
    (12usize..40, 1usize..5).prop_flat_map(|(t, m)| {
        prop::collection::vec(-5.0f64..5.0, t * m)
            .prop_map(move |v| SeriesPanel::unlabeled(DMatrix::from_vec(t, m, v)).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn m_scale_is_scale_equivariant(
        x in prop::collection::vec(-10.0f64..10.0, 20..200),
        lambda in prop_oneof![1e-3f64..1e3, -1e3f64..-1e-3],
    ) {
        let spec = MScaleSpec::default();
        let s = m_scale(&x, &spec).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let t = m_scale(&scaled, &spec).unwrap();
        prop_assert!((t - lambda.abs() * s).abs() <= 1e-10 * lambda.abs() * s.max(1e-300));
    }

    #[test]
    fn affine_factor_change_is_absorbed_by_loadings(
        panel in panel_strategy(),
        k in 0usize..3,
        gamma in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
        delta in -5.0f64..5.0,
        seed in any::<u64>(),
    ) {
        let (t, m) = (panel.n_periods(), panel.n_series());
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let f: Vec<f64> = (0..t + k).map(|_| next()).collect();
        let beta = DMatrix::from_fn(m, k + 1, |_, _| next());
        let alpha: Vec<f64> = (0..m).map(|_| next()).collect();
        let g: Vec<f64> = f.iter().map(|v| gamma * v + delta).collect();
        let beta_g = &beta / gamma;
        let alpha_g: Vec<f64> = (0..m).map(|j| alpha[j] - delta * beta.row(j).sum() / gamma).collect();
        let a = mse_of(&panel, &f, &beta, &alpha).unwrap();
        let b = mse_of(&panel, &g, &beta_g, &alpha_g).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));

        // The least-squares optimum over loadings does not see the change either.
        let fa = lagged_regression(&panel, &f, k).unwrap();
        let fb = lagged_regression(&panel, &g, k).unwrap();
        prop_assert!((fa.mse - fb.mse).abs() <= 1e-8 * fa.mse.max(1.0));
    }

    #[test]
    fn banded_solve_matches_dense(n in 2usize..40, bw in 0usize..4, seed in any::<u64>()) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut a = BandedSystem::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 2.0 * (bw as f64 + 1.0));
            for j in i + 1..(i + bw + 1).min(n) {
                a.add(i, j, next());
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
        let (x, jittered) = a.solve(&rhs).unwrap();
        prop_assert!(!jittered);
        let dense = a.to_dense().lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - dense[i]).abs() < 1e-10);
        }
    }
}
