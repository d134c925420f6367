#![allow(dead_code)]

use std::collections::HashMap;

use hetreg::data::{generate, GeneratorConfig, Split, TruthRow};
use hetreg::features::{fit_schema, FeatureSchema, SchemaConfig};
use hetreg::train::Dataset;

/// A generated, filtered and split corpus with encoded splits and the
/// ground truth of the test cases.
pub struct Prepared {
    pub schema: FeatureSchema,
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
    pub test_truth: Vec<TruthRow>,
}

pub fn prepare(cfg: &GeneratorConfig, split_seed: u64) -> Prepared {
    let (mut corpus, _) = generate(cfg).unwrap().filtered();
    corpus.assign_splits(split_seed).unwrap();
    let schema = fit_schema(&corpus.view(Split::Train).unwrap(), &SchemaConfig::default()).unwrap();
    let enc = |s| Dataset::encode(&schema, corpus.view(s).unwrap());
    let (train, valid, test) = (enc(Split::Train), enc(Split::Valid), enc(Split::Test));
    let by_id: HashMap<u64, &TruthRow> = corpus.truth.as_ref().unwrap().iter().map(|t| (t.id, t)).collect();
    let test_truth = test.records.iter().map(|r| by_id[&r.id].clone()).collect();
    Prepared {
        schema,
        train,
        valid,
        test,
        test_truth,
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ranks(a).into_iter().zip(ranks(b)).collect();
    hetreg::eval::pearson(&pts).unwrap()
}

pub fn rmse_minutes(pred: &[f64], y: &[f64]) -> f64 {
    let mse = pred.iter().zip(y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / y.len() as f64;
    mse.sqrt() * 60.0
}
