use porestokes::calibrate::{fit_half_throats, gi_star, perron_init, CalibrationTarget, FitOptions};
use porestokes::sparse::DenseMatrix;
use proptest::prelude::*;

/// `Off(x xᵀ)` built entry by entry.
fn off_outer(x: &[f64]) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(x.len(), x.len(), |i, j| if i == j { 0.0 } else { x[i] * x[j] })
}

fn off_rel_error(x: &[f64], target: &DenseMatrix<f64>) -> f64 {
    let m = x.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                num += (x[i] * x[j] - target[(i, j)]).powi(2);
                den += target[(i, j)].powi(2);
            }
        }
    }
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_one_targets_round_trip(x in prop::collection::vec(0.05f64..3.0, 3..=5)) {
        let t = off_outer(&x);
        // A DtN-like matrix: off-diagonal T, rows summing to zero.
        let g = DenseMatrix::from_fn(x.len(), x.len(), |i, j| {
            if i == j { -(0..x.len()).map(|k| t[(i, k)]).sum::<f64>() } else { t[(i, j)] }
        });
        let target = CalibrationTarget::from_matrix(0, &g);
        let fit = fit_half_throats(&target, &FitOptions::default()).unwrap();
        prop_assert!(off_rel_error(&fit.x, &t) <= 1e-6, "x = {:?}, fit = {:?}", x, fit.x);
        for w in fit.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn history_never_increases(vals in prop::collection::vec(0.0f64..2.0, 6)) {
        // Arbitrary nonnegative symmetric 4x4 target, usually not rank one.
        let idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut g = DenseMatrix::zeros(4, 4);
        for (&(i, j), &v) in idx.iter().zip(&vals) {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        let target = CalibrationTarget::from_matrix(0, &g);
        let fit = fit_half_throats(&target, &FitOptions { max_iters: 500, ..FitOptions::default() }).unwrap();
        for w in fit.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(fit.x.iter().all(|&v| v >= 0.0));
        prop_assert!(fit.objective() <= fit.history[0]);
    }

    #[test]
    fn gi_star_is_a_conservative_network(g in prop::collection::vec(0.01f64..5.0, 2..=6)) {
        let m = gi_star(&g).unwrap();
        let total: f64 = g.iter().sum();
        for i in 0..g.len() {
            let row: f64 = (0..g.len()).map(|j| m[(i, j)]).sum();
            prop_assert!(row.abs() <= 1e-12 * total);
            for j in 0..g.len() {
                let expect = if i == j { g[i] - g[i] * g[i] / total } else { -g[i] * g[j] / total };
                prop_assert!((m[(i, j)] - expect).abs() <= 1e-12 * total);
            }
        }
    }
}

#[test]
fn perron_start_follows_the_scaled_eigenvector() {
    let x = [0.7f64, 0.7, 0.7];
    let target = CalibrationTarget::from_matrix(0, &DenseMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { x[i] * x[j] }));
    let x0 = perron_init(&target).unwrap();
    // v = 1/√3, M0 = vvᵀ/(1ᵀv), α = T_rs / M0_rs, x0 = √α v.
    let v = 1.0 / 3f64.sqrt();
    let m0 = v * v / (3.0 * v);
    let expect = (0.49 / m0).sqrt() * v;
    for xi in &x0 {
        assert!((xi - expect).abs() < 1e-12, "{x0:?} vs {expect}");
    }
}
