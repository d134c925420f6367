//! Test-set evaluation: RMSE/MAE/NLL, σ̂ calibration bins, QQ pairs,
//! over/under-booking curves and feature-group ablation.

mod ablation;
mod booking;
mod calibration;
mod metrics;
mod report;

pub use ablation::{ablation, write_ablation_csv, AblationReport, AblationRow};
pub use booking::{booking_curve, BookingCurve, BookingInput, BookingPoint, BookingStrategy};
pub use calibration::{
    calibration, calibration_correlation, pearson, qq_data, CalibrationBin, QqPoint,
    CALIBRATION_BIN_WIDTH_HOURS,
};
pub use metrics::{metrics, nll_delta, point_prediction, Metrics};
pub use report::{evaluate, evaluate_model, EvalOptions, EvalReport, EvalSummary, BASELINE_MODEL};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Family, PredictiveDistribution as D};
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn point_prediction_examples() {
        assert_eq!(
            point_prediction(&D::gaussian(2.0, 0.7).unwrap()).unwrap(),
            (2.0, 2.0)
        );
        let (m, med) = point_prediction(&D::gamma(1.0, 2.0).unwrap()).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        assert!((med - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let (m, med) = point_prediction(&D::gamma(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(m, 2.0);
        assert!((med - 1.678_346_990_016_661_6).abs() < 1e-8, "{med}");
    }

    #[test]
    fn metric_examples() {
        let perfect: Vec<D> = [1.0, 2.0].iter().map(|&m| D::gaussian(m, 1.0).unwrap()).collect();
        let m = metrics(&perfect, &[1.0, 2.0]).unwrap();
        assert_eq!((m.rmse_minutes, m.mae_minutes), (0.0, 0.0));

        let preds = vec![D::gaussian(1.0, 1.0).unwrap(); 2];
        let m = metrics(&preds, &[1.5, 0.5]).unwrap();
        assert!((m.rmse_minutes - 30.0).abs() < 1e-12);
        assert!((m.mae_minutes - 30.0).abs() < 1e-12);
        assert!(matches!(metrics(&preds, &[1.0]), Err(Error::Shape { .. })));
    }

    proptest! {
        #[test]
        fn nll_deltas_are_transitive(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            let lhs = nll_delta(a, c);
            let rhs = nll_delta(a, b) + nll_delta(b, c);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn metrics_are_permutation_invariant(
            cases in prop::collection::vec((0.1..5.0f64, 0.05..2.0f64, 0.1..5.0f64), 2..40),
            rot in 0usize..40,
        ) {
            let dists: Vec<D> = cases.iter().map(|c| D::laplace(c.0, c.1).unwrap()).collect();
            let y: Vec<f64> = cases.iter().map(|c| c.2).collect();
            let k = rot % cases.len();
            let mut d2 = dists.clone();
            let mut y2 = y.clone();
            d2.rotate_left(k);
            y2.rotate_left(k);
            let a = metrics(&dists, &y).unwrap();
            let b = metrics(&d2, &y2).unwrap();
            prop_assert!((a.rmse_minutes - b.rmse_minutes).abs() < 1e-9);
            prop_assert!((a.mae_minutes - b.mae_minutes).abs() < 1e-9);
            prop_assert!((a.nll_nats - b.nll_nats).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_examples() {
        let bins = calibration(&[0.1; 5], &[0.1; 5]).unwrap();
        assert_eq!(bins.len(), 1);
        assert!((bins[0].mean_abs_error - 0.1).abs() < 1e-15);
        assert_eq!(bins[0].count, 5);
        assert!((bins[0].bin_center - 0.125).abs() < 1e-15);

        let bins = calibration(&[0.21, 0.22, 0.71, 0.72], &[0.1, 0.3, 1.0, 2.0]).unwrap();
        assert_eq!(bins.len(), 2);
        assert!((bins[0].mean_abs_error - 0.2).abs() < 1e-15);
        assert!((bins[1].mean_abs_error - 1.5).abs() < 1e-15);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 4);
    }

    #[test]
    fn well_specified_gaussian_bins_match_expected_abs_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let n = 100_000;
        let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let err: Vec<f64> = sigma
            .iter()
            .map(|s| (s * std_normal.sample(&mut rng)).abs())
            .collect();
        let bins = calibration(&sigma, &err).unwrap();
        let factor = (2.0 / std::f64::consts::PI).sqrt();
        for b in bins.iter().filter(|b| b.count >= 500) {
            let expected = b.bin_center * factor;
            assert!(
                (b.mean_abs_error - expected).abs() < 0.15 * expected,
                "{b:?} expected {expected}"
            );
        }
        assert!(calibration_correlation(&bins, 1).unwrap() > 0.99);
    }

    #[test]
    fn qq_examples() {
        let n = 99;
        let exact: Vec<f64> = (0..n)
            .map(|i| crate::distributions::special::probit((i as f64 + 0.5) / n as f64).unwrap())
            .rev()
            .collect();
        for p in qq_data(&exact, Family::Gaussian).unwrap() {
            assert!((p.theoretical - p.observed).abs() < 1e-9);
        }
        assert_eq!(
            qq_data(&[0.0], Family::Gaussian).unwrap(),
            vec![QqPoint {
                theoretical: 0.0,
                observed: 0.0
            }]
        );
        assert_eq!(qq_data(&[0.0], Family::Laplace).unwrap()[0].theoretical, 0.0);

        // unit-variance Laplace draws have heavier tails than the normal reference
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = 1.0 / 2f64.sqrt();
        let lap: Vec<f64> = (0..20_000)
            .map(|_| {
                let u: f64 = rng.random_range(-0.5..0.5);
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect();
        let qq = qq_data(&lap, Family::Gaussian).unwrap();
        let lo = &qq[10];
        let hi = &qq[qq.len() - 11];
        assert!(lo.observed < lo.theoretical);
        assert!(hi.observed > hi.theoretical);
        let mid = &qq[qq.len() / 2 + 2000];
        assert!(mid.observed < mid.theoretical);
    }

    #[test]
    fn booking_examples() {
        let labels = [1.5, 1.5];
        let c = booking_curve(
            BookingInput::Points(&[1.0, 2.0]),
            &labels,
            BookingStrategy::Multiplicative,
            &[1.0],
        )
        .unwrap();
        let p = c.points[0];
        assert!((p.overbooked_minutes - 30.0).abs() < 1e-12);
        assert!((p.underbooked_minutes - 30.0).abs() < 1e-12);

        let err = booking_curve(
            BookingInput::Points(&[1.0, 2.0]),
            &labels,
            BookingStrategy::Percentile,
            &[0.5],
        );
        assert!(matches!(err, Err(Error::Config { .. })));

        let d = [D::gaussian(1.0, 0.2).unwrap(), D::gaussian(2.0, 0.4).unwrap()];
        let c = booking_curve(
            BookingInput::Distributions(&d),
            &labels,
            BookingStrategy::Percentile,
            &[0.5, 0.9, 0.999_999],
        )
        .unwrap();
        assert_eq!(c.points[2].underbooked_minutes, 0.0);
        assert!(c.points[2].overbooked_minutes > c.points[1].overbooked_minutes);
    }

    #[test]
    fn default_grids() {
        let p = BookingStrategy::Percentile.default_grid();
        assert_eq!((p.len(), p[0], p[9], p[18]), (19, 0.05, 0.5, 0.95));
        let m = BookingStrategy::Multiplicative.default_grid();
        assert_eq!((m.len(), m[0], m[8], m[24]), (25, 0.6, 1.0, 1.8));
        let a = BookingStrategy::Additive.default_grid();
        assert_eq!((a.len(), a[0], a[6], a[24]), (25, -30.0, 0.0, 90.0));
    }

    #[test]
    fn percentile_curves_are_monotone_and_optimum_tracks_cost_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut dists = Vec::new();
        let mut y = Vec::new();
        for _ in 0..20_000 {
            let mu: f64 = rng.random_range(0.5..4.0);
            let b: f64 = rng.random_range(0.05..0.8);
            let u: f64 = rng.random_range(-0.5..0.5);
            y.push(mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln());
            dists.push(D::laplace(mu, b).unwrap());
        }
        let grid = BookingStrategy::Percentile.default_grid();
        let c = booking_curve(
            BookingInput::Distributions(&dists),
            &y,
            BookingStrategy::Percentile,
            &grid,
        )
        .unwrap();
        for w in c.points.windows(2) {
            assert!(w[1].overbooked_minutes >= w[0].overbooked_minutes);
            assert!(w[1].underbooked_minutes <= w[0].underbooked_minutes);
        }
        assert_eq!(c.optimal_knob(1.0, 1.0), Some(0.5));
        assert_eq!(c.optimal_knob(1.0, 3.0), Some(0.75));
    }
}
