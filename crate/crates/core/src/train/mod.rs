//! Model fitting: the current-method and procedure-means baselines, linear
//! regression and MLPs trained by minibatch SGD with a step-halving learning
//! rate, validation-fitted constant scales, and hidden-layer grid search.

mod bundle;
mod config;
mod dataset;
mod grid;
mod model;
mod trainer;

pub use bundle::{ModelBundle, BUNDLE_FORMAT, BUNDLE_FORMAT_VERSION};
pub use config::{SgdConfig, TrainConfig, MAX_HIDDEN_LAYERS, WIDTH_GRID};
pub use dataset::Dataset;
pub use grid::{grid_search, standard_grid, GridResult, GridSearch};
pub use model::{
    fit_constant_scale, mean_nll, EpochLog, ModelParams, ProcedureMeans, TrainedModel, TrainingLog,
};
pub use trainer::{current_method, train_linear, train_mlp, train_procedure_means};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, GeneratorConfig, Split};
    use crate::distributions::Family;
    use crate::features::{fit_schema, SchemaConfig};
    use crate::numcore::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn splits(n: usize, seed: u64) -> (Dataset, Dataset, Dataset) {
        let cfg = GeneratorConfig {
            n_records: n,
            n_procedures: 20,
            n_surgeons: 10,
            seed,
            ..GeneratorConfig::default()
        };
        let (mut corpus, _) = generate(&cfg).unwrap().filtered();
        corpus.assign_splits(seed).unwrap();
        let train = corpus.view(Split::Train).unwrap();
        let schema = fit_schema(&train, &SchemaConfig::default()).unwrap();
        (
            Dataset::encode(&schema, train),
            Dataset::encode(&schema, corpus.view(Split::Valid).unwrap()),
            Dataset::encode(&schema, corpus.view(Split::Test).unwrap()),
        )
    }

    fn quick(family: Family, hetero: bool, epochs: usize) -> TrainConfig {
        let mut c = TrainConfig::standard(family, hetero);
        c.hidden_width = 16;
        c.allow_any_width = true;
        c.sgd.epochs = epochs;
        c.sgd.lr_halving_period_epochs = 2;
        c
    }

    #[test]
    fn constant_scale_examples() {
        assert_eq!(fit_constant_scale(Family::Gaussian, &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(fit_constant_scale(Family::Laplace, &[1.0, -1.0]).unwrap(), 1.0);
        let s = fit_constant_scale(Family::Gaussian, &[0.0, 0.0, 3.0]).unwrap();
        assert!((s - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(fit_constant_scale(Family::Gaussian, &[0.0, 0.0]).unwrap(), 1e-6);
        assert!(fit_constant_scale(Family::Gaussian, &[]).is_err());
        assert!(fit_constant_scale(Family::Gamma, &[1.0]).is_err());
    }

    #[test]
    fn procedure_means_and_fallback() {
        let (train, valid, _) = splits(400, 1);
        let mut recs = train.records[..2].to_vec();
        recs[0].procedure_id = "PX".into();
        recs[1].procedure_id = "PX".into();
        recs[0].duration_minutes = 60.0;
        recs[1].duration_minutes = 180.0;
        let table = ProcedureMeans::fit(&recs).unwrap();
        assert_eq!(table.predict(&recs[0]), 2.0);
        let mut other = recs[0].clone();
        other.procedure_id = "never-seen".into();
        assert_eq!(table.predict(&other), table.global_mean);

        let model = train_procedure_means(&train, &valid).unwrap();
        assert!(!model.is_heteroscedastic());
        assert!(model.constant_scale.unwrap() > 0.0);
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting.
    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    fn linear_data(n: usize, seed: u64, noise: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = [1.2, -0.7, 0.3];
        let mut x = Vec::with_capacity(n * 3);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e: f64 = rng.random_range(-1.0..1.0);
            y.push(0.5 + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + noise * e);
            x.extend(row);
        }
        Dataset {
            records: vec![],
            x: DenseMatrix::from_vec(n, 3, x).unwrap(),
            y,
        }
    }

    #[test]
    fn linear_matches_normal_equations() {
        let train = linear_data(2000, 3, 0.1);
        let valid = linear_data(200, 4, 0.1);
        // oracle: [1, x] least squares
        let mut ata = vec![vec![0.0; 4]; 4];
        let mut atb = vec![0.0; 4];
        for i in 0..train.len() {
            let mut row = vec![1.0];
            row.extend_from_slice(train.x.row(i));
            for a in 0..4 {
                atb[a] += row[a] * train.y[i];
                for b in 0..4 {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        let oracle = solve(ata, atb);
        let sgd = SgdConfig {
            epochs: 400,
            seed: 5,
            ..SgdConfig::default()
        };
        let model = train_linear(&sgd, &train, &valid).unwrap();
        let net = model.network().unwrap();
        assert!((net.layers[0].bias[0] - oracle[0]).abs() < 1e-3);
        for j in 0..3 {
            let w = net.layers[0].weight.get(j, 0);
            assert!(
                (w - oracle[j + 1]).abs() < 1e-3,
                "coef {j}: {w} vs {}",
                oracle[j + 1]
            );
        }
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let coefs = model.linear_coefficients(&names).unwrap();
        assert_eq!(coefs[0].0, "a");
        assert_eq!(coefs[2].0, "c");
    }

    #[test]
    fn constant_labels_give_bias_only_linear_model() {
        let mut train = linear_data(500, 6, 0.0);
        train.y.iter_mut().for_each(|v| *v = 1.75);
        let mut valid = linear_data(50, 7, 0.0);
        valid.y.iter_mut().for_each(|v| *v = 1.75);
        let model = train_linear(
            &SgdConfig {
                epochs: 20,
                ..Default::default()
            },
            &train,
            &valid,
        )
        .unwrap();
        let net = model.network().unwrap();
        assert!((net.layers[0].bias[0] - 1.75).abs() < 1e-9);
        assert!(net.layers[0].weight.data().iter().all(|w| w.abs() < 1e-9));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (train, valid, _) = splits(300, 2);
        let model = train_mlp(&quick(Family::Gamma, true, 0), &train, &valid).unwrap();
        assert!(model.log.epochs.is_empty());
        assert_eq!(model.log.best_epoch, None);
        assert!(model.log.initial_valid_nll.is_finite());
        assert_eq!(model.log.initial_valid_nll, model.mean_nll(&valid).unwrap());
    }

    #[test]
    fn log_follows_schedule_and_snapshot_is_best() {
        let (train, valid, _) = splits(600, 3);
        let cfg = quick(Family::Gaussian, true, 6);
        let model = train_mlp(&cfg, &train, &valid).unwrap();
        let log = &model.log;
        assert_eq!(log.epochs.len(), 6);
        for (i, e) in log.epochs.iter().enumerate() {
            assert_eq!(e.epoch, i);
            assert_eq!(e.learning_rate, cfg.sgd.lr_at(i));
        }
        assert!(log.best_valid_nll <= log.epochs.last().unwrap().valid_nll);
        assert!(log.best_valid_nll <= log.initial_valid_nll);
        let reported = model.mean_nll(&valid).unwrap();
        assert!((reported - log.best_valid_nll).abs() < 1e-12);
    }

    #[test]
    fn homoscedastic_run_has_one_output_and_fitted_scale() {
        let (train, valid, _) = splits(400, 4);
        for family in [Family::Gaussian, Family::Laplace] {
            let model = train_mlp(&quick(family, false, 2), &train, &valid).unwrap();
            assert_eq!(model.network().unwrap().output_dim(), 1);
            let scale = model.constant_scale.unwrap();
            let resid: Vec<f64> = model
                .point_predictions(&valid)
                .unwrap()
                .iter()
                .zip(&valid.y)
                .map(|(p, y)| y - p)
                .collect();
            assert_eq!(scale, fit_constant_scale(family, &resid).unwrap());
        }
        assert!(train_mlp(&quick(Family::Gamma, false, 1), &train, &valid).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let (train, valid, test) = splits(400, 5);
        let cfg = quick(Family::Laplace, true, 2);
        let a = train_mlp(&cfg, &train, &valid).unwrap();
        let b = train_mlp(&cfg, &train, &valid).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict(&test).unwrap(), b.predict(&test).unwrap());
    }

    #[test]
    fn grid_search_picks_lowest_validation_nll() {
        let (train, valid, _) = splits(400, 6);
        let base = quick(Family::Gaussian, true, 2);
        let one = grid_search(&base, &[(1, 8)], &train, &valid).unwrap();
        assert_eq!(one.best_index, 0);
        assert_eq!(one.best_config.hidden_width, 8);

        let grid = [(1, 4), (2, 8), (1, 12)];
        let g = grid_search(&base, &grid, &train, &valid).unwrap();
        assert_eq!(g.results.len(), 3);
        let argmin = (0..3)
            .min_by(|&i, &j| g.results[i].valid_nll.total_cmp(&g.results[j].valid_nll))
            .unwrap();
        assert_eq!(g.best_index, argmin);
        assert_eq!(
            (g.best_config.hidden_layers, g.best_config.hidden_width),
            grid[argmin]
        );
        assert!(grid_search(&base, &[], &train, &valid).is_err());
        assert_eq!(standard_grid().len(), 12);
        assert!(standard_grid().contains(&(1, 128)) && standard_grid().contains(&(1, 256)));
    }

    #[test]
    fn bundle_round_trip_is_bit_exact() {
        let (train, valid, test) = splits(400, 7);
        let schema = fit_schema(&train.records, &SchemaConfig::default()).unwrap();
        let models = vec![
            train_mlp(&quick(Family::Gamma, true, 1), &train, &valid).unwrap(),
            train_procedure_means(&train, &valid).unwrap(),
            current_method(&valid).unwrap(),
            train_linear(
                &SgdConfig {
                    epochs: 1,
                    ..Default::default()
                },
                &train,
                &valid,
            )
            .unwrap(),
        ];
        let bundle = ModelBundle::new(schema, 7, models);
        let back = ModelBundle::from_json(&bundle.to_json().unwrap()).unwrap();
        assert_eq!(back, bundle);
        for (a, b) in bundle.models.iter().zip(&back.models) {
            assert_eq!(a.predict(&test).unwrap(), b.predict(&test).unwrap());
        }
        let mut tampered = bundle.clone();
        tampered.schema_hash = "0".repeat(64);
        assert!(ModelBundle::from_json(&tampered.to_json().unwrap()).is_err());
    }
}
