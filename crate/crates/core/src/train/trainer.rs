use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{SgdConfig, TrainConfig};
use super::dataset::Dataset;
use super::model::{
    fit_constant_scale, mean_nll, EpochLog, ModelParams, ProcedureMeans, TrainedModel, TrainingLog,
};
use crate::distributions::{linked_params, Family, Objective, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::numcore::{softplus_inv, DenseMatrix, HeadSpec, MlpModel};

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn homoscedastic_model(
    name: &str,
    family: Family,
    params: ModelParams,
    valid: &Dataset,
    log: Option<TrainingLog>,
    config: Option<TrainConfig>,
) -> Result<TrainedModel> {
    let mut model = TrainedModel {
        name: name.to_string(),
        family,
        params,
        constant_scale: Some(1.0),
        log: TrainingLog::untrained(f64::NAN),
        config,
    };
    let scale = fit_scale_on(&model, family, valid)?;
    model.constant_scale = Some(scale);
    let nll = model.mean_nll(valid)?;
    model.log = log.unwrap_or_else(|| TrainingLog::untrained(nll));
    Ok(model)
}

fn fit_scale_on(model: &TrainedModel, family: Family, valid: &Dataset) -> Result<f64> {
    let pred = model.point_predictions(valid)?;
    let resid: Vec<f64> = pred.iter().zip(&valid.y).map(|(p, y)| y - p).collect();
    fit_constant_scale(family, &resid)
}

/// The booked durations already in the data, with a Gaussian scale fitted
/// on validation.
pub fn current_method(valid: &Dataset) -> Result<TrainedModel> {
    homoscedastic_model(
        "current-method",
        Family::Gaussian,
        ModelParams::CurrentMethod,
        valid,
        None,
        None,
    )
}

/// Mean training duration of each procedure; unseen procedures get the
/// global training mean.
pub fn train_procedure_means(train: &Dataset, valid: &Dataset) -> Result<TrainedModel> {
    let table = ProcedureMeans::fit(&train.records)?;
    homoscedastic_model(
        "procedure-means",
        Family::Gaussian,
        ModelParams::ProcedureMeans(table),
        valid,
        None,
        None,
    )
}

/// Least-squares linear regression fitted by minibatch SGD.
pub fn train_linear(sgd: &SgdConfig, train: &Dataset, valid: &Dataset) -> Result<TrainedModel> {
    sgd.validate()?;
    check_data(train, valid)?;
    let mut net = MlpModel::new(train.x.cols(), &[], HeadSpec::homoscedastic(), 0.0, sgd.seed)?;
    net.layers[0].weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
    let log = fit_network(
        &mut net,
        Objective::SquaredError,
        Family::Gaussian,
        sgd,
        train,
        valid,
        false,
    )
    .map_err(|e| match e {
        Error::Training { epoch, batch, msg } => Error::Training {
            epoch,
            batch,
            msg: format!("{msg}; try a lower initial_lr"),
        },
        other => other,
    })?;
    homoscedastic_model(
        "linear",
        Family::Gaussian,
        ModelParams::Linear { network: net },
        valid,
        Some(log),
        None,
    )
}

/// Train an MLP and return the snapshot with the best validation NLL.
pub fn train_mlp(config: &TrainConfig, train: &Dataset, valid: &Dataset) -> Result<TrainedModel> {
    config.validate()?;
    check_data(train, valid)?;
    let mut net = MlpModel::new(
        train.x.cols(),
        &config.hidden(),
        config.head(),
        config.dropout_rate,
        config.sgd.seed,
    )?;
    let log = fit_network(
        &mut net,
        config.objective(),
        config.family,
        &config.sgd,
        train,
        valid,
        true,
    )?;
    let params = ModelParams::Mlp { network: net };
    if config.heteroscedastic {
        Ok(TrainedModel {
            name: config.model_name(),
            family: config.family,
            params,
            constant_scale: None,
            log,
            config: Some(config.clone()),
        })
    } else {
        homoscedastic_model(
            &config.model_name(),
            config.family,
            params,
            valid,
            Some(log),
            Some(config.clone()),
        )
    }
}

fn check_data(train: &Dataset, valid: &Dataset) -> Result<()> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Data(
            "training and validation splits must be nonempty".into(),
        ));
    }
    if train.x.cols() != valid.x.cols() {
        return Err(Error::Shape {
            op: "train",
            expected: format!("{} validation columns", train.x.cols()),
            got: format!("{}", valid.x.cols()),
        });
    }
    Ok(())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Output-layer bias matching the label distribution, so training starts
/// from the best constant predictor.
fn warm_start_bias(objective: Objective, y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let pos = |v: f64| softplus_inv(v.max(1e-3));
    match objective {
        Objective::SquaredError => vec![mean],
        Objective::AbsoluteError => vec![median(y)],
        Objective::Nll(Family::Gaussian) => vec![mean, pos(var.sqrt())],
        Objective::Nll(Family::Laplace) => {
            let m = median(y);
            let mad = y.iter().map(|v| (v - m).abs()).sum::<f64>() / n;
            vec![m, pos(mad)]
        }
        Objective::Nll(Family::Gamma) => {
            let var = var.max(1e-6);
            vec![pos(mean * mean / var), pos(var / mean)]
        }
    }
}

/// Validation NLL of a network. Homoscedastic networks are scored with the
/// constant scale that is optimal for the current residuals.
fn network_valid_nll(net: &MlpModel, objective: Objective, family: Family, valid: &Dataset) -> Result<f64> {
    let raw = net.predict_raw(&valid.x)?;
    let y = &valid.y;
    let dists: Vec<PredictiveDistribution> = match objective {
        Objective::Nll(f) => (0..raw.rows())
            .map(|i| {
                let (a, b) = linked_params(f, raw.row(i));
                match f {
                    Family::Gamma => PredictiveDistribution::gamma(a, b),
                    _ => PredictiveDistribution::with_constant_scale(f, a, b),
                }
            })
            .collect::<Result<_>>()?,
        Objective::SquaredError | Objective::AbsoluteError => {
            let p = raw.data();
            let resid: Vec<f64> = p.iter().zip(y).map(|(p, y)| y - p).collect();
            let scale = fit_constant_scale(family, &resid)?;
            p.iter()
                .map(|&m| PredictiveDistribution::with_constant_scale(family, m, scale))
                .collect::<Result<_>>()?
        }
    };
    mean_nll(&dists, y)
}

/// Minibatch SGD on `objective`. With `keep_best` the parameters with the
/// lowest validation NLL are restored at the end, otherwise the last iterate
/// is kept.
fn fit_network(
    net: &mut MlpModel,
    objective: Objective,
    family: Family,
    sgd: &SgdConfig,
    train: &Dataset,
    valid: &Dataset,
    keep_best: bool,
) -> Result<TrainingLog> {
    let last = net.layers.len() - 1;
    net.layers[last].bias = warm_start_bias(objective, &train.y);

    let initial = network_valid_nll(net, objective, family, valid)?;
    let mut log = TrainingLog::untrained(initial);
    let mut best_params = net.params();
    let k = objective.outputs();
    let n = train.len();

    for epoch in 0..sgd.epochs {
        let lr = sgd.lr_at(epoch);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(
            sgd.seed,
            1,
            epoch as u64,
        )));
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(sgd.batch_size).enumerate() {
            let fail = |msg: String| Error::Training { epoch, batch: b, msg };
            let xb = train.x.select_rows(idx);
            let (_, mut tape) = net
                .forward_with_seed(&xb, true, mix_seed(sgd.seed, 2 + epoch as u64, b as u64))
                .map_err(|e| fail(e.to_string()))?;
            let m = idx.len() as f64;
            let raw = tape.raw_outputs();
            let mut d = DenseMatrix::zeros(idx.len(), k);
            for (r, &i) in idx.iter().enumerate() {
                let g = objective
                    .loss_grad(train.y[i], raw.row(r))
                    .map_err(|e| fail(e.to_string()))?;
                loss_sum += g.value;
                for (c, v) in d.row_mut(r).iter_mut().enumerate() {
                    *v = g.d_raw[c] / m;
                }
            }
            if !loss_sum.is_finite() {
                return Err(fail("non-finite training loss".into()));
            }
            let mut grads = tape.backward_raw(&d)?;
            if let Some(c) = sgd.max_grad_norm {
                grads.clip_norm(c);
            }
            net.sgd_step(&grads, lr).map_err(|e| fail(e.to_string()))?;
        }
        let valid_nll = network_valid_nll(net, objective, family, valid).map_err(|e| Error::Training {
            epoch,
            batch: n.div_ceil(sgd.batch_size),
            msg: format!("validation failed: {e}"),
        })?;
        if !valid_nll.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: n.div_ceil(sgd.batch_size),
                msg: "non-finite validation NLL".into(),
            });
        }
        log.epochs.push(EpochLog {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / n as f64,
            valid_nll,
        });
        if valid_nll < log.best_valid_nll {
            log.best_valid_nll = valid_nll;
            log.best_epoch = Some(epoch);
            best_params = net.params();
        }
    }
    if keep_best {
        net.set_params(&best_params)?;
    } else if let Some(last) = log.epochs.last() {
        log.best_epoch = Some(last.epoch);
        log.best_valid_nll = last.valid_nll;
    }
    Ok(log)
}
