use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{softplus, softplus_grad};
use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Output link applied to one raw head output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Softplus,
}

impl Link {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Link::Identity => z,
            Link::Softplus => softplus(z),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Softplus => softplus_grad(z),
        }
    }
}

/// Number of outputs and the link on each of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub links: Vec<Link>,
}

impl HeadSpec {
    /// One identity output: a point prediction.
    pub fn homoscedastic() -> Self {
        Self {
            links: vec![Link::Identity],
        }
    }

    /// Location (identity) plus scale (softplus).
    pub fn location_scale() -> Self {
        Self {
            links: vec![Link::Identity, Link::Softplus],
        }
    }

    /// Shape and scale, both softplus.
    pub fn shape_scale() -> Self {
        Self {
            links: vec![Link::Softplus, Link::Softplus],
        }
    }

    pub fn outputs(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in × fan_out`, so a batch is multiplied on the left.
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

/// Feed-forward network: ReLU hidden layers, a linear last layer and a
/// per-output link. Dropout (inverted) is applied to hidden activations only.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub head: HeadSpec,
    pub dropout_rate: f64,
    pub rng_seed: u64,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases. `hidden` may be empty (linear model).
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        head: HeadSpec,
        dropout_rate: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::config(
                "dropout_rate",
                format!("must lie in [0, 1), got {dropout_rate}"),
            ));
        }
        if input_dim == 0 || hidden.contains(&0) {
            return Err(Error::config("layer_dims", "all layer widths must be positive"));
        }
        if !(1..=2).contains(&head.outputs()) {
            return Err(Error::config("head", "head must have one or two outputs"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(head.outputs());
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Layer {
                    weight: DenseMatrix::from_vec(fan_in, fan_out, data).expect("dimensions are consistent"),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            layers,
            head,
            dropout_rate,
            rng_seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.head.outputs()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Layer::fan_out));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Flat view of all parameters: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape {
                op: "set_params",
                expected: format!("{} parameters", self.param_count()),
                got: format!("{}", flat.len()),
            });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let n = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
            let m = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + m]);
            off += m;
        }
        Ok(())
    }

    /// Forward pass with dropout masks drawn from the model's own seed.
    pub fn forward(&self, batch: &DenseMatrix, training: bool) -> Result<(DenseMatrix, GradientTape)> {
        self.forward_with_seed(batch, training, self.rng_seed)
    }

    /// Forward pass with an explicit dropout-mask seed. Returns linked outputs
    /// and the tape needed by [`GradientTape::backward`].
    pub fn forward_with_seed(
        &self,
        batch: &DenseMatrix,
        training: bool,
        mask_seed: u64,
    ) -> Result<(DenseMatrix, GradientTape)> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "forward",
                expected: format!("{} input columns", self.input_dim()),
                got: format!("{} columns", batch.cols()),
            });
        }
        let use_dropout = training && self.dropout_rate > 0.0;
        let keep = 1.0 - self.dropout_rate;
        let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);

        let n_hidden = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(n_hidden);
        let mut masks = Vec::with_capacity(n_hidden);
        let mut current = batch.clone();

        for layer in &self.layers[..n_hidden] {
            let z = current.matmul_bias(&layer.weight, &layer.bias)?;
            let mut a = z.clone();
            let mask = if use_dropout {
                let m: Vec<f64> = (0..a.data().len())
                    .map(|_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                for ((v, &zv), &s) in a.data_mut().iter_mut().zip(z.data()).zip(&m) {
                    *v = zv.max(0.0) * s;
                }
                Some(m)
            } else {
                for v in a.data_mut() {
                    *v = v.max(0.0);
                }
                None
            };
            inputs.push(current);
            pre.push(z);
            masks.push(mask);
            current = a;
        }

        let last = &self.layers[n_hidden];
        let raw = current.matmul_bias(&last.weight, &last.bias)?;
        inputs.push(current);

        let mut out = raw.clone();
        let k = self.output_dim();
        for r in 0..out.rows() {
            for (v, link) in out.row_mut(r).iter_mut().zip(&self.head.links) {
                *v = link.apply(*v);
            }
        }
        debug_assert_eq!(out.cols(), k);
        if !out.is_finite() {
            return Err(Error::domain("forward", "non-finite network output"));
        }

        let tape = GradientTape {
            weights: self.layers.iter().map(|l| l.weight.clone()).collect(),
            links: self.head.links.clone(),
            inputs,
            pre_activations: pre,
            masks,
            raw_outputs: raw,
            consumed: false,
        };
        Ok((out, tape))
    }

    /// Inference-mode forward returning only the linked outputs.
    pub fn predict(&self, batch: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = self.predict_raw(batch)?;
        for r in 0..out.rows() {
            for (v, link) in out.row_mut(r).iter_mut().zip(&self.head.links) {
                *v = link.apply(*v);
            }
        }
        Ok(out)
    }

    /// Raw (pre-link) outputs in inference mode, without building a tape.
    pub fn predict_raw(&self, batch: &DenseMatrix) -> Result<DenseMatrix> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "predict",
                expected: format!("{} input columns", self.input_dim()),
                got: format!("{} columns", batch.cols()),
            });
        }
        let n_hidden = self.layers.len() - 1;
        let mut current = batch.matmul_bias(&self.layers[0].weight, &self.layers[0].bias)?;
        for layer in &self.layers[1..=n_hidden] {
            current.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            current = current.matmul_bias(&layer.weight, &layer.bias)?;
        }
        if !current.is_finite() {
            return Err(Error::domain("predict", "non-finite network output"));
        }
        Ok(current)
    }

    /// `θ ← θ − lr·∇θ`. Nothing is updated if any gradient is non-finite.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::config(
                "learning_rate",
                format!("must be positive and finite, got {learning_rate}"),
            ));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape {
                op: "sgd_step",
                expected: format!("{} layers of gradients", self.layers.len()),
                got: format!("{}", grads.layers.len()),
            });
        }
        if let Some(index) = grads.first_non_finite() {
            return Err(Error::NonFiniteGradient { index });
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            if g.weight.shape() != layer.weight.shape() || g.bias.len() != layer.bias.len() {
                return Err(Error::Shape {
                    op: "sgd_step",
                    expected: format!("{:?}", layer.weight.shape()),
                    got: format!("{:?}", g.weight.shape()),
                });
            }
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in layer.weight.data_mut().iter_mut().zip(g.weight.data()) {
                *w -= learning_rate * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
        Ok(())
    }
}

/// Everything cached by a forward pass that backpropagation needs.
#[derive(Debug, Clone)]
pub struct GradientTape {
    weights: Vec<DenseMatrix>,
    links: Vec<Link>,
    /// Input to each layer (post-dropout activations for hidden layers).
    inputs: Vec<DenseMatrix>,
    pre_activations: Vec<DenseMatrix>,
    masks: Vec<Option<Vec<f64>>>,
    raw_outputs: DenseMatrix,
    consumed: bool,
}

impl GradientTape {
    /// Head outputs before the link was applied.
    pub fn raw_outputs(&self) -> &DenseMatrix {
        &self.raw_outputs
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Backpropagate gradients taken with respect to the linked outputs.
    pub fn backward(&mut self, output_grads: &DenseMatrix) -> Result<Gradients> {
        self.check_grad_shape(output_grads)?;
        let mut raw = output_grads.clone();
        for r in 0..raw.rows() {
            let z = self.raw_outputs.row(r).to_vec();
            for ((g, link), zv) in raw.row_mut(r).iter_mut().zip(&self.links).zip(z) {
                *g *= link.derivative(zv);
            }
        }
        self.backward_raw(&raw)
    }

    /// Backpropagate gradients taken with respect to the raw (pre-link) outputs.
    pub fn backward_raw(&mut self, raw_grads: &DenseMatrix) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        self.check_grad_shape(raw_grads)?;
        self.consumed = true;

        let n_layers = self.weights.len();
        let mut layers: Vec<LayerGrad> = self
            .weights
            .iter()
            .map(|w| LayerGrad {
                weight: DenseMatrix::zeros(w.rows(), w.cols()),
                bias: vec![0.0; w.cols()],
            })
            .collect();

        let mut delta = raw_grads.clone();
        for l in (0..n_layers).rev() {
            let g = &mut layers[l];
            self.inputs[l].add_transpose_matmul(&delta, &mut g.weight);
            for r in 0..delta.rows() {
                for (b, d) in g.bias.iter_mut().zip(delta.row(r)) {
                    *b += d;
                }
            }
            if l == 0 {
                break;
            }
            // gradient w.r.t. the previous layer's post-dropout activation
            let mut d_prev = delta.matmul_transpose(&self.weights[l]);
            let z = &self.pre_activations[l - 1];
            match &self.masks[l - 1] {
                Some(mask) => {
                    for ((d, &zv), &s) in d_prev.data_mut().iter_mut().zip(z.data()).zip(mask) {
                        *d = if zv > 0.0 { *d * s } else { 0.0 };
                    }
                }
                None => {
                    for (d, &zv) in d_prev.data_mut().iter_mut().zip(z.data()) {
                        if zv <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
            }
            delta = d_prev;
        }
        Ok(Gradients { layers })
    }

    fn check_grad_shape(&self, g: &DenseMatrix) -> Result<()> {
        if g.shape() != self.raw_outputs.shape() {
            return Err(Error::Shape {
                op: "backward",
                expected: format!("{:?}", self.raw_outputs.shape()),
                got: format!("{:?}", g.shape()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients, mirroring [`MlpModel::layers`] shape for shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: DenseMatrix::zeros(l.fan_in(), l.fan_out()),
                    bias: vec![0.0; l.fan_out()],
                })
                .collect(),
        }
    }

    /// Flat gradient in the same order as [`MlpModel::params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.data().iter().chain(&l.bias).copied())
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values().position(|v| !v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight.data_mut().iter_mut().for_each(|v| *v *= factor);
            l.bias.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Rescale so the global L2 norm is at most `max_norm`; returns the pre-clip norm.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.norm();
        if n > max_norm && n.is_finite() {
            self.scale(max_norm / n);
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn zero_weights_output_link_of_bias() {
        for head in [HeadSpec::location_scale(), HeadSpec::shape_scale()] {
            let mut m = MlpModel::new(3, &[4], head.clone(), 0.0, 1).unwrap();
            for l in &mut m.layers {
                l.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
            }
            m.layers[1].bias = vec![-0.7, 1.3];
            let out = m
                .predict(&batch(&[vec![1.0, 2.0, 3.0], vec![-5.0, 0.0, 9.0]]))
                .unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    let want = head.links[c].apply(m.layers[1].bias[c]);
                    assert_eq!(out.get(r, c), want);
                }
            }
        }
    }

    #[test]
    fn identity_single_layer_is_link_of_input() {
        let mut m = MlpModel::new(2, &[], HeadSpec::location_scale(), 0.0, 3).unwrap();
        m.layers[0].weight = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = batch(&[vec![0.25, -2.0], vec![3.0, 4.0]]);
        let out = m.predict(&x).unwrap();
        for r in 0..2 {
            assert_eq!(out.get(r, 0), x.get(r, 0));
            assert_eq!(out.get(r, 1), softplus(x.get(r, 1)));
            assert!(out.get(r, 1) > 0.0);
        }
    }

    #[test]
    fn seeded_dropout_is_deterministic() {
        let m = MlpModel::new(3, &[16, 16], HeadSpec::location_scale(), 0.5, 42).unwrap();
        let x = batch(&[vec![0.3, -1.0, 2.0], vec![1.0, 1.0, 1.0]]);
        let (a, _) = m.forward(&x, true).unwrap();
        let (b, _) = m.forward(&x, true).unwrap();
        assert_eq!(a, b);
        let (c, _) = m.forward_with_seed(&x, true, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn inference_ignores_dropout() {
        let m = MlpModel::new(3, &[8], HeadSpec::homoscedastic(), 0.5, 9).unwrap();
        let x = batch(&[vec![0.3, -1.0, 2.0]]);
        let a = m.forward_with_seed(&x, false, 1).unwrap().0;
        let b = m.forward_with_seed(&x, false, 2).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn inverted_dropout_preserves_expected_activation() {
        let m = MlpModel::new(4, &[6], HeadSpec::homoscedastic(), 0.3, 5).unwrap();
        let x = batch(&[vec![0.5, -0.2, 1.0, 0.8]]);
        let (_, eval) = m.forward(&x, false).unwrap();
        let reference = eval.inputs[1].clone();
        let trials = 10_000;
        let mut acc = vec![0.0; reference.cols()];
        for s in 0..trials {
            let (_, t) = m.forward_with_seed(&x, true, s).unwrap();
            for (a, v) in acc.iter_mut().zip(t.inputs[1].data()) {
                *a += v;
            }
        }
        for (a, r) in acc.iter().zip(reference.data()) {
            let mean = a / trials as f64;
            if *r == 0.0 {
                assert_eq!(mean, 0.0);
            } else {
                assert!(((mean - r) / r).abs() < 0.02, "mean {mean} vs {r}");
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m = MlpModel::new(3, &[4], HeadSpec::homoscedastic(), 0.0, 1).unwrap();
        assert!(matches!(
            m.forward(&DenseMatrix::zeros(2, 4), false),
            Err(Error::Shape { .. })
        ));
        let (_, mut tape) = m.forward(&DenseMatrix::zeros(2, 3), false).unwrap();
        assert!(matches!(
            tape.backward(&DenseMatrix::zeros(3, 1)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn zero_output_grads_give_zero_gradients() {
        let m = MlpModel::new(3, &[5, 4], HeadSpec::location_scale(), 0.2, 8).unwrap();
        let x = batch(&[vec![1.0, 2.0, -1.0], vec![0.0, 0.5, 0.5]]);
        let (_, mut tape) = m.forward(&x, true).unwrap();
        let g = tape.backward(&DenseMatrix::zeros(2, 2)).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tape_can_only_be_consumed_once() {
        let m = MlpModel::new(2, &[3], HeadSpec::homoscedastic(), 0.0, 1).unwrap();
        let (_, mut tape) = m.forward(&batch(&[vec![1.0, 1.0]]), false).unwrap();
        tape.backward(&DenseMatrix::zeros(1, 1)).unwrap();
        assert!(matches!(
            tape.backward(&DenseMatrix::zeros(1, 1)),
            Err(Error::TapeConsumed)
        ));
    }

    #[test]
    fn linear_squared_loss_gradient_closed_form() {
        // ŷ = x·w + b, L = mean (ŷ - y)^2  =>  dL/dw = 2(ŷ - y)ᵀ x / n
        let mut m = MlpModel::new(2, &[], HeadSpec::homoscedastic(), 0.0, 11).unwrap();
        m.layers[0].weight = DenseMatrix::from_rows(&[vec![0.5], vec![-1.5]]).unwrap();
        m.layers[0].bias = vec![0.25];
        let x = batch(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 1.0]]);
        let y = [1.0, 0.0, -2.0];
        let n = y.len() as f64;
        let (out, mut tape) = m.forward(&x, true).unwrap();
        let resid: Vec<f64> = (0..3).map(|i| out.get(i, 0) - y[i]).collect();
        let dy = DenseMatrix::from_vec(3, 1, resid.iter().map(|r| 2.0 * r / n).collect()).unwrap();
        let g = tape.backward(&dy).unwrap();
        for j in 0..2 {
            let want: f64 = (0..3).map(|i| 2.0 * resid[i] * x.get(i, j)).sum::<f64>() / n;
            assert!((g.layers[0].weight.get(j, 0) - want).abs() < 1e-14);
        }
        let want_b: f64 = resid.iter().map(|r| 2.0 * r).sum::<f64>() / n;
        assert!((g.layers[0].bias[0] - want_b).abs() < 1e-14);
    }

    #[test]
    fn sgd_step_updates_and_validates() {
        let mut m = MlpModel::new(3, &[4], HeadSpec::location_scale(), 0.0, 2).unwrap();
        let before = m.clone();
        let zero = Gradients::zeros_like(&m);
        m.sgd_step(&zero, 0.1).unwrap();
        assert_eq!(m, before);

        let mut g = Gradients::zeros_like(&m);
        for (lg, l) in g.layers.iter_mut().zip(&m.layers) {
            lg.weight = l.weight.clone();
            lg.bias = l.bias.clone();
        }
        m.sgd_step(&g, 1.0).unwrap();
        assert!(m.params().iter().all(|&p| p == 0.0));

        assert!(matches!(m.sgd_step(&zero, 0.0), Err(Error::Config { .. })));
        let mut bad = Gradients::zeros_like(&m);
        bad.layers[1].bias[1] = f64::NAN;
        let idx = 3 * 4 + 4 + 4 * 2 + 1;
        match m.sgd_step(&bad, 0.1) {
            Err(Error::NonFiniteGradient { index }) => assert_eq!(index, idx),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sgd_on_scalar_quadratic_matches_recurrence() {
        // f(θ) = (θ - 3)^2 through a 1x1 linear layer with zero input weight
        // acting on the bias only: θ_{t+1} = θ_t - 0.1 * 2(θ_t - 3) = 0.8 θ_t + 0.6
        let mut m = MlpModel::new(1, &[], HeadSpec::homoscedastic(), 0.0, 0).unwrap();
        m.layers[0].weight = DenseMatrix::from_vec(1, 1, vec![0.0]).unwrap();
        m.layers[0].bias = vec![0.0];
        let expected = [0.6, 1.08, 1.464, 1.7712, 2.01696];
        let x = DenseMatrix::from_vec(1, 1, vec![0.0]).unwrap();
        for want in expected {
            let (out, mut tape) = m.forward(&x, true).unwrap();
            let g = DenseMatrix::from_vec(1, 1, vec![2.0 * (out.get(0, 0) - 3.0)]).unwrap();
            let grads = tape.backward(&g).unwrap();
            m.sgd_step(&grads, 0.1).unwrap();
            assert!((m.layers[0].bias[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_norm_bounds_gradient() {
        let m = MlpModel::new(2, &[], HeadSpec::homoscedastic(), 0.0, 0).unwrap();
        let mut g = Gradients::zeros_like(&m);
        g.layers[0].weight = DenseMatrix::from_vec(2, 1, vec![3.0, 4.0]).unwrap();
        let before = g.clip_norm(1.0);
        assert_eq!(before, 5.0);
        assert!((g.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_construction_rejected() {
        assert!(MlpModel::new(3, &[4], HeadSpec::homoscedastic(), 1.0, 0).is_err());
        assert!(MlpModel::new(0, &[4], HeadSpec::homoscedastic(), 0.0, 0).is_err());
        assert!(MlpModel::new(3, &[0], HeadSpec::homoscedastic(), 0.0, 0).is_err());
    }
}
