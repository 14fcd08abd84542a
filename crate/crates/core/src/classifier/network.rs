//! Two-branch feed-forward classifier.
//!
//! ```text
//! x1 (names)  ──► branch 1 (ReLU layers) ─┐
//!                                         ├─ concat ─► merge (ReLU, dropout) ─► softmax(L)
//! x2 (text)   ──► branch 2 (ReLU layers) ─┘
//! ```
//!
//! All tensors are row-major `f64`; a batch of `B` rows is one flat slice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Output logits; softmax is applied by the model.
    Linear,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Activation::Relu),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer with its Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim × in_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub dropout: f64,
    pub m_w: Vec<f64>,
    pub v_w: Vec<f64>,
    pub m_b: Vec<f64>,
    pub v_b: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation, dropout: f64) -> Self {
        let n = in_dim * out_dim;
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; n],
            bias: vec![0.0; out_dim],
            activation,
            dropout,
            m_w: vec![0.0; n],
            v_w: vec![0.0; n],
            m_b: vec![0.0; out_dim],
            v_b: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights, zero biases.
    fn glorot<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, dropout: f64, rng: &mut R) -> Self {
        let mut d = Self::zeros(in_dim, out_dim, activation, dropout);
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        d.weights.iter_mut().for_each(|w| *w = rng.gen_range(-limit..limit));
        d
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Hidden widths of each part of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSpec {
    pub branch1: Vec<usize>,
    pub branch2: Vec<usize>,
    pub merge: Vec<usize>,
    /// Dropout rate applied to the last hidden layer.
    pub final_dropout: f64,
}

impl Default for HiddenSpec {
    fn default() -> Self {
        Self {
            branch1: vec![256, 128],
            branch2: vec![512, 256],
            merge: vec![256, 128],
            final_dropout: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointMeta {
    /// Atomic name variate of the block the model serves.
    pub anv: String,
    /// Epoch (1-based) of the stored state; 0 before training.
    pub epoch: u32,
    pub val_accuracy: f64,
}

/// Parameters, optimizer state and class list of one per-block classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub x1_dim: usize,
    pub x2_dim: usize,
    pub branch1: Vec<Dense>,
    pub branch2: Vec<Dense>,
    pub merge: Vec<Dense>,
    pub output: Dense,
    /// Author keys in class order.
    pub classes: Vec<String>,
    pub adam_step: u64,
    pub meta: CheckpointMeta,
}

/// Gradients in layer order (branch 1, branch 2, merge, output).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseGrad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|g| g.weights.iter().chain(&g.bias).copied())
    }
}

fn chain(input: usize, widths: &[usize], dropout_last: f64, rng: &mut ChaCha8Rng) -> Vec<Dense> {
    let mut layers = Vec::with_capacity(widths.len());
    let mut prev = input;
    for (i, &w) in widths.iter().enumerate() {
        let p = if i + 1 == widths.len() { dropout_last } else { 0.0 };
        layers.push(Dense::glorot(prev, w, Activation::Relu, p, rng));
        prev = w;
    }
    layers
}

pub fn init_model(
    x1_dim: usize,
    x2_dim: usize,
    classes: Vec<String>,
    hidden: &HiddenSpec,
    seed: u64,
) -> Result<ModelParams, ModelError> {
    if classes.len() < 2 {
        return Err(ModelError::TooFewClasses(classes.len()));
    }
    if !(0.0..1.0).contains(&hidden.final_dropout) {
        return Err(ModelError::Config(format!("dropout {} not in [0,1)", hidden.final_dropout)));
    }
    if hidden.branch1.iter().chain(&hidden.branch2).chain(&hidden.merge).any(|w| *w == 0) {
        return Err(ModelError::Config("hidden widths must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The final hidden layer is the last merge layer, or the branch tops when
    // there is no merge stack.
    let branch_dropout = if hidden.merge.is_empty() { hidden.final_dropout } else { 0.0 };
    let branch1 = chain(x1_dim, &hidden.branch1, branch_dropout, &mut rng);
    let branch2 = chain(x2_dim, &hidden.branch2, branch_dropout, &mut rng);
    let h1 = hidden.branch1.last().copied().unwrap_or(x1_dim);
    let h2 = hidden.branch2.last().copied().unwrap_or(x2_dim);
    let merge = chain(h1 + h2, &hidden.merge, hidden.final_dropout, &mut rng);
    let top = hidden.merge.last().copied().unwrap_or(h1 + h2);
    let output = Dense::glorot(top, classes.len(), Activation::Linear, 0.0, &mut rng);
    Ok(ModelParams {
        x1_dim,
        x2_dim,
        branch1,
        branch2,
        merge,
        output,
        classes,
        adam_step: 0,
        meta: CheckpointMeta::default(),
    })
}

/// `out[r, o] = Σ_i x[r, i] · w[o, i] + b[o]`
fn affine(x: &[f64], rows: usize, layer: &Dense) -> Vec<f64> {
    let (n_in, n_out) = (layer.in_dim, layer.out_dim);
    let mut out = vec![0.0; rows * n_out];
    for r in 0..rows {
        let xr = &x[r * n_in..(r + 1) * n_in];
        let orow = &mut out[r * n_out..(r + 1) * n_out];
        for (o, slot) in orow.iter_mut().enumerate() {
            *slot = dot(xr, &layer.weights[o * n_in..(o + 1) * n_in]) + layer.bias[o];
        }
    }
    out
}

/// Fixed-order four-lane dot product.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activations of one layer kept for the backward pass.
struct LayerCache {
    input: Vec<f64>,
    /// Post-activation, post-dropout output.
    output: Vec<f64>,
    /// Inverted-dropout scale per output element (0 for dropped units).
    mask: Option<Vec<f64>>,
}

pub(crate) struct ForwardCache {
    rows: usize,
    branch1: Vec<LayerCache>,
    branch2: Vec<LayerCache>,
    merge: Vec<LayerCache>,
    output_input: Vec<f64>,
    h1_dim: usize,
    pub(crate) probs: Vec<f64>,
}

fn run_stack<R: Rng + ?Sized>(
    layers: &[Dense],
    mut x: Vec<f64>,
    rows: usize,
    mode: Mode,
    rng: &mut R,
    caches: &mut Vec<LayerCache>,
) -> Vec<f64> {
    for layer in layers {
        let mut out = affine(&x, rows, layer);
        if layer.activation == Activation::Relu {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let mask = if mode == Mode::Train && layer.dropout > 0.0 {
            let keep = 1.0 - layer.dropout;
            let scale = 1.0 / keep;
            let m: Vec<f64> = (0..out.len())
                .map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
                .collect();
            out.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
            Some(m)
        } else {
            None
        };
        caches.push(LayerCache { input: std::mem::take(&mut x), output: out.clone(), mask });
        x = out;
    }
    x
}

fn softmax_rows(logits: &mut [f64], cols: usize) {
    for row in logits.chunks_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// Loss offset inside the logarithm.
pub const LOSS_EPSILON: f64 = 1e-12;

/// Class-weighted cross-entropy of one prediction.
pub fn loss(probs: &[f64], true_class: usize, class_weight: &[f64]) -> f64 {
    -class_weight[true_class] * (probs[true_class] + LOSS_EPSILON).ln()
}

impl ModelParams {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.branch1
            .iter()
            .chain(&self.branch2)
            .chain(&self.merge)
            .chain(std::iter::once(&self.output))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.branch1
            .iter_mut()
            .chain(self.branch2.iter_mut())
            .chain(self.merge.iter_mut())
            .chain(std::iter::once(&mut self.output))
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Dense::param_count).sum()
    }

    pub(crate) fn check_dims(&self, x1: &[f64], x2: &[f64], rows: usize) -> Result<(), ModelError> {
        if x1.len() != rows * self.x1_dim {
            return Err(ModelError::DimMismatch { what: "x1", expected: rows * self.x1_dim, got: x1.len() });
        }
        if x2.len() != rows * self.x2_dim {
            return Err(ModelError::DimMismatch { what: "x2", expected: rows * self.x2_dim, got: x2.len() });
        }
        Ok(())
    }

    pub(crate) fn forward_cached<R: Rng + ?Sized>(
        &self,
        x1: &[f64],
        x2: &[f64],
        rows: usize,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardCache, ModelError> {
        self.check_dims(x1, x2, rows)?;
        let mut c1 = Vec::new();
        let mut c2 = Vec::new();
        let mut cm = Vec::new();
        let h1 = run_stack(&self.branch1, x1.to_vec(), rows, mode, rng, &mut c1);
        let h2 = run_stack(&self.branch2, x2.to_vec(), rows, mode, rng, &mut c2);
        let (d1, d2) = (h1.len() / rows.max(1), h2.len() / rows.max(1));
        let mut joined = Vec::with_capacity(rows * (d1 + d2));
        for r in 0..rows {
            joined.extend_from_slice(&h1[r * d1..(r + 1) * d1]);
            joined.extend_from_slice(&h2[r * d2..(r + 1) * d2]);
        }
        let top = run_stack(&self.merge, joined, rows, mode, rng, &mut cm);
        let mut probs = affine(&top, rows, &self.output);
        softmax_rows(&mut probs, self.output.out_dim);
        Ok(ForwardCache {
            rows,
            branch1: c1,
            branch2: c2,
            merge: cm,
            output_input: top,
            h1_dim: d1,
            probs,
        })
    }

    /// Class probabilities for a batch of `rows` samples.
    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        x1: &[f64],
        x2: &[f64],
        rows: usize,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward_cached(x1, x2, rows, mode, rng)?.probs)
    }

    /// Dropout-free probabilities for a batch.
    pub fn predict_batch(&self, x1: &[f64], x2: &[f64], rows: usize) -> Result<Vec<f64>, ModelError> {
        let mut unused = rand::rngs::mock::StepRng::new(0, 0);
        self.forward_batch(x1, x2, rows, Mode::Eval, &mut unused)
    }

    /// Class-weighted mean loss of a batch and its gradients.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        x1: &[f64],
        x2: &[f64],
        labels: &[usize],
        class_weights: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Gradients), ModelError> {
        let rows = labels.len();
        let cache = self.forward_cached(x1, x2, rows, mode, rng)?;
        Ok(self.backward(&cache, labels, class_weights))
    }

    pub(crate) fn backward(&self, cache: &ForwardCache, labels: &[usize], class_weights: &[f64]) -> (f64, Gradients) {
        let rows = cache.rows;
        let l = self.output.out_dim;
        let mut total = 0.0;
        let mut d_logits = vec![0.0; rows * l];
        for (r, &y) in labels.iter().enumerate() {
            let p = &cache.probs[r * l..(r + 1) * l];
            total += loss(p, y, class_weights);
            // d/dz of −w·ln(p_y + ε) = w · p_y/(p_y+ε) · (p − e_y)
            let coef = class_weights[y] * p[y] / (p[y] + LOSS_EPSILON) / rows as f64;
            let d = &mut d_logits[r * l..(r + 1) * l];
            for (k, dk) in d.iter_mut().enumerate() {
                *dk = coef * (p[k] - if k == y { 1.0 } else { 0.0 });
            }
        }
        let mean_loss = if rows == 0 { 0.0 } else { total / rows as f64 };

        let mut grads_out = Vec::new();
        let (g_out, mut d_top) = dense_backward(&self.output, &cache.output_input, &d_logits, rows);

        let mut merge_grads = Vec::with_capacity(self.merge.len());
        for (layer, c) in self.merge.iter().zip(&cache.merge).rev() {
            let (g, dx) = hidden_backward(layer, c, d_top, rows);
            merge_grads.push(g);
            d_top = dx;
        }
        merge_grads.reverse();

        let d1 = cache.h1_dim;
        let d2 = d_top.len() / rows.max(1) - d1;
        let mut dh1 = Vec::with_capacity(rows * d1);
        let mut dh2 = Vec::with_capacity(rows * d2);
        for r in 0..rows {
            let row = &d_top[r * (d1 + d2)..(r + 1) * (d1 + d2)];
            dh1.extend_from_slice(&row[..d1]);
            dh2.extend_from_slice(&row[d1..]);
        }
        let stack = |layers: &[Dense], caches: &[LayerCache], mut d: Vec<f64>| {
            let mut gs = Vec::with_capacity(layers.len());
            for (layer, c) in layers.iter().zip(caches).rev() {
                let (g, dx) = hidden_backward(layer, c, d, rows);
                gs.push(g);
                d = dx;
            }
            gs.reverse();
            gs
        };
        grads_out.extend(stack(&self.branch1, &cache.branch1, dh1));
        grads_out.extend(stack(&self.branch2, &cache.branch2, dh2));
        grads_out.extend(merge_grads);
        grads_out.push(g_out);
        (mean_loss, Gradients { layers: grads_out })
    }
}

fn hidden_backward(layer: &Dense, cache: &LayerCache, mut d_out: Vec<f64>, rows: usize) -> (DenseGrad, Vec<f64>) {
    for (i, d) in d_out.iter_mut().enumerate() {
        let active = layer.activation == Activation::Linear || cache.output[i] > 0.0;
        let scale = cache.mask.as_ref().map_or(1.0, |m| m[i]);
        *d = if active { *d * scale } else { 0.0 };
    }
    dense_backward(layer, &cache.input, &d_out, rows)
}

/// Gradients of an affine map given the gradient of its pre-activation output.
fn dense_backward(layer: &Dense, input: &[f64], d_z: &[f64], rows: usize) -> (DenseGrad, Vec<f64>) {
    let (n_in, n_out) = (layer.in_dim, layer.out_dim);
    let mut gw = vec![0.0; n_in * n_out];
    let mut gb = vec![0.0; n_out];
    let mut dx = vec![0.0; rows * n_in];
    for r in 0..rows {
        let xr = &input[r * n_in..(r + 1) * n_in];
        let dzr = &d_z[r * n_out..(r + 1) * n_out];
        let dxr = &mut dx[r * n_in..(r + 1) * n_in];
        for (o, &g) in dzr.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            axpy(g, xr, &mut gw[o * n_in..(o + 1) * n_in]);
            axpy(g, &layer.weights[o * n_in..(o + 1) * n_in], dxr);
        }
    }
    (DenseGrad { weights: gw, bias: gb }, dx)
}

/// Single-sample forward pass.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x1: &[f64],
    x2: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    params.forward_batch(x1, x2, 1, mode, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn default_architecture_shapes() {
        let m = init_model(400, 768, classes(5), &HiddenSpec::default(), 1).unwrap();
        let widths = |ls: &[Dense]| ls.iter().map(|l| l.out_dim).collect::<Vec<_>>();
        assert_eq!(widths(&m.branch1), [256, 128]);
        assert_eq!(widths(&m.branch2), [512, 256]);
        assert_eq!(widths(&m.merge), [256, 128]);
        assert_eq!(m.branch1[0].in_dim, 400);
        assert_eq!(m.branch2[0].in_dim, 768);
        assert_eq!(m.merge[0].in_dim, 128 + 256);
        assert_eq!((m.output.in_dim, m.output.out_dim), (128, 5));
        assert_eq!(m.output.weights.len(), 128 * 5);
        assert_eq!(m.output.bias, vec![0.0; 5]);
        assert_eq!(m.merge[1].dropout, 0.5);
        assert!(m.layers().filter(|l| l.dropout > 0.0).count() == 1);
        assert!(m.layers().all(|l| l.bias.iter().all(|b| *b == 0.0)));
        for pair in m.merge.windows(2) {
            assert_eq!(pair[0].out_dim, pair[1].in_dim);
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(400, 768, classes(5), &HiddenSpec::default(), 1).unwrap();
        let b = init_model(400, 768, classes(5), &HiddenSpec::default(), 1).unwrap();
        assert_eq!(a, b);
        let c = init_model(400, 768, classes(5), &HiddenSpec::default(), 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn needs_two_classes() {
        assert!(matches!(
            init_model(4, 4, classes(1), &HiddenSpec::default(), 0),
            Err(ModelError::TooFewClasses(1))
        ));
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let mut m = init_model(6, 3, classes(4), &HiddenSpec { branch1: vec![5], branch2: vec![2], merge: vec![3], final_dropout: 0.5 }, 3).unwrap();
        m.layers_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w = 0.0));
        let p = m.predict_batch(&[0.3; 6], &[1.0; 3], 1).unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hand_computed_two_two_two_network() {
        // x1 = [1.0], x2 = [-2.0] → concat [1, -2]
        // hidden: W = [[0.5, -0.25], [-1.0, 0.75]], b = [0.1, 0.2], ReLU
        //   z = [0.5 + 0.5 + 0.1, -1.0 - 1.5 + 0.2] = [1.1, -2.3] → h = [1.1, 0]
        // output: W = [[2.0, 1.0], [-1.0, 3.0]], b = [0.0, 0.5]
        //   logits = [2.2, -1.1 + 0.5] = [2.2, -0.6]
        let hidden = HiddenSpec { branch1: vec![], branch2: vec![], merge: vec![2], final_dropout: 0.0 };
        let mut m = init_model(1, 1, classes(2), &hidden, 0).unwrap();
        m.merge[0].weights = vec![0.5, -0.25, -1.0, 0.75];
        m.merge[0].bias = vec![0.1, 0.2];
        m.output.weights = vec![2.0, 1.0, -1.0, 3.0];
        m.output.bias = vec![0.0, 0.5];
        let p = m.predict_batch(&[1.0], &[-2.0], 1).unwrap();
        let e0 = 2.2f64.exp();
        let e1 = (-0.6f64).exp();
        let want = [e0 / (e0 + e1), e1 / (e0 + e1)];
        assert!((p[0] - want[0]).abs() < 1e-12 && (p[1] - want[1]).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn loss_values() {
        assert!(loss(&[1.0, 0.0], 0, &[1.0, 1.0]).abs() <= 2e-12);
        let uniform = [0.25; 4];
        assert!((loss(&uniform, 2, &[1.0; 4]) - 4f64.ln()).abs() < 1e-10);
        assert!((4f64.ln() - 1.3863).abs() < 1e-4);
        let p = [0.2, 0.8];
        let got = loss(&p, 0, &[2.5, 1.0]);
        assert!((got - 2.5 * 5f64.ln()).abs() < 1e-10);
        assert!((got - 4.0236).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = init_model(4, 3, classes(2), &HiddenSpec::default(), 0).unwrap();
        assert!(matches!(m.predict_batch(&[0.0; 3], &[0.0; 3], 1), Err(ModelError::DimMismatch { what: "x1", .. })));
        assert!(matches!(m.predict_batch(&[0.0; 4], &[0.0; 2], 1), Err(ModelError::DimMismatch { what: "x2", .. })));
    }

    #[test]
    fn zero_class_weights_give_zero_gradients() {
        let m = init_model(4, 3, classes(3), &HiddenSpec { branch1: vec![4], branch2: vec![3], merge: vec![5], final_dropout: 0.0 }, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, g) = m
            .loss_and_gradients(&[0.3, -0.1, 0.2, 0.9], &[0.5, 0.5, -1.0], &[1], &[0.0; 3], Mode::Eval, &mut rng)
            .unwrap();
        assert!(g.iter_values().all(|v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_has_equal_mean_gradient() {
        let m = init_model(4, 3, classes(3), &HiddenSpec { branch1: vec![4], branch2: vec![3], merge: vec![5], final_dropout: 0.0 }, 5).unwrap();
        let x1 = [0.3, -0.1, 0.2, 0.9];
        let x2 = [0.5, 0.5, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (l1, g1) = m.loss_and_gradients(&x1, &x2, &[2], &[1.0; 3], Mode::Eval, &mut rng).unwrap();
        let x1d: Vec<f64> = x1.iter().chain(&x1).copied().collect();
        let x2d: Vec<f64> = x2.iter().chain(&x2).copied().collect();
        let (l2, g2) = m.loss_and_gradients(&x1d, &x2d, &[2, 2], &[1.0; 3], Mode::Eval, &mut rng).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.iter_values().zip(g2.iter_values()) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn doubling_a_class_weight_doubles_its_loss() {
        let m = init_model(4, 3, classes(3), &HiddenSpec { branch1: vec![4], branch2: vec![3], merge: vec![5], final_dropout: 0.0 }, 5).unwrap();
        let x1 = [0.3, -0.1, 0.2, 0.9, 0.0, 1.0, 0.5, -0.5];
        let x2 = [0.5, 0.5, -1.0, 0.1, 0.2, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (base, _) = m.loss_and_gradients(&x1, &x2, &[1, 1], &[1.0, 1.0, 1.0], Mode::Eval, &mut rng).unwrap();
        let (doubled, _) = m.loss_and_gradients(&x1, &x2, &[1, 1], &[1.0, 2.0, 1.0], Mode::Eval, &mut rng).unwrap();
        assert_eq!(doubled, 2.0 * base);
    }

    #[test]
    fn eval_mode_is_deterministic_and_train_mode_uses_rng() {
        let m = init_model(6, 4, classes(3), &HiddenSpec { branch1: vec![8], branch2: vec![8], merge: vec![16], final_dropout: 0.5 }, 9).unwrap();
        let x1 = [0.1, 0.2, 0.3, -0.4, 0.5, 0.6];
        let x2 = [1.0, -1.0, 0.5, 0.25];
        let a = m.predict_batch(&x1, &x2, 1).unwrap();
        let b = m.predict_batch(&x1, &x2, 1).unwrap();
        assert_eq!(a, b);
        let t1 = forward(&m, &x1, &x2, Mode::Train, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let t1b = forward(&m, &x1, &x2, Mode::Train, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t1, t1b);
        assert!((t1.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
