//! Layer stack, forward pass and backpropagation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::train::TrainConfig;
use crate::error::{Error, Result};

/// Channel-major activation shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width }
    }

    pub fn square(side: usize) -> Self {
        Self::new(1, side, side)
    }

    pub fn flat(n: usize) -> Self {
        Self::new(n, 1, 1)
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    /// Valid convolution, stride 1. `weight` is `out × (in·k·k)` row-major.
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        #[serde(with = "crate::vio::b64")]
        weight: Vec<f64>,
        #[serde(with = "crate::vio::b64")]
        bias: Vec<f64>,
    },
    /// 2×2 max pooling, stride 2, trailing odd row/column dropped.
    MaxPool,
    Relu,
    /// `weight` is `outputs × inputs` row-major.
    Dense {
        inputs: usize,
        outputs: usize,
        #[serde(with = "crate::vio::b64")]
        weight: Vec<f64>,
        #[serde(with = "crate::vio::b64")]
        bias: Vec<f64>,
    },
    /// Inverted dropout; identity at inference.
    Dropout { rate: f64 },
    Softmax,
}

impl Layer {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Layer::Conv {
            in_channels,
            out_channels,
            kernel,
            weight: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn dense(inputs: usize, outputs: usize) -> Self {
        Layer::Dense { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    pub fn output_shape(&self, s: Shape) -> Result<Shape> {
        match self {
            Layer::Conv { in_channels, out_channels, kernel, .. } => {
                if s.channels != *in_channels || s.height < *kernel || s.width < *kernel {
                    return Err(Error::Shape(format!(
                        "conv {kernel}×{kernel}×{in_channels} cannot take input {}×{}×{}",
                        s.height, s.width, s.channels
                    )));
                }
                Ok(Shape::new(*out_channels, s.height - kernel + 1, s.width - kernel + 1))
            }
            Layer::MaxPool => {
                if s.height < 2 || s.width < 2 {
                    return Err(Error::Shape(format!("max-pool cannot take {}×{}", s.height, s.width)));
                }
                Ok(Shape::new(s.channels, s.height / 2, s.width / 2))
            }
            Layer::Dense { inputs, outputs, .. } => {
                if s.len() != *inputs {
                    return Err(Error::Shape(format!("dense layer expects {inputs} inputs, got {}", s.len())));
                }
                Ok(Shape::flat(*outputs))
            }
            Layer::Relu | Layer::Dropout { .. } | Layer::Softmax => Ok(s),
        }
    }

    fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Conv { weight, bias, .. } | Layer::Dense { weight, bias, .. } => Some((weight, bias)),
            _ => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::Conv { weight, bias, .. } | Layer::Dense { weight, bias, .. } => Some((weight, bias)),
            _ => None,
        }
    }
}

/// One buffer per parameter tensor, in layer order (weight then bias).
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub tensors: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(model: &NetModel) -> Self {
        Self { tensors: model.param_tensors().iter().map(|(t, _)| vec![0.0; t.len()]).collect() }
    }

    pub fn scale(&mut self, s: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= s);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub input: Shape,
    pub layers: Vec<Layer>,
    /// Hyperparameters of the run that produced the weights.
    #[serde(default)]
    pub trained_with: Option<TrainConfig>,
}

enum Cache {
    Conv { col: Vec<f64> },
    Pool { argmax: Vec<usize> },
    Relu { out: Vec<f64> },
    Dense { input: Vec<f64> },
    Dropout { mask: Option<Vec<f64>> },
    Softmax,
}

impl NetModel {
    pub fn new(input: Shape, layers: Vec<Layer>) -> Result<Self> {
        let m = Self { input, layers, trained_with: None };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = self.shapes()?;
        if !matches!(self.layers.last(), Some(Layer::Softmax)) {
            return Err(Error::Shape("classifier must end with softmax".into()));
        }
        if shapes.last().map(|s| s.height * s.width) != Some(1) {
            return Err(Error::Shape("softmax must follow a dense layer".into()));
        }
        for l in &self.layers {
            match l {
                Layer::Conv { weight, bias, in_channels, out_channels, kernel, .. } => {
                    if weight.len() != in_channels * out_channels * kernel * kernel || bias.len() != *out_channels {
                        return Err(Error::Shape("conv parameter length mismatch".into()));
                    }
                }
                Layer::Dense { weight, bias, inputs, outputs } => {
                    if weight.len() != inputs * outputs || bias.len() != *outputs {
                        return Err(Error::Shape("dense parameter length mismatch".into()));
                    }
                }
                Layer::Dropout { rate } if !(0.0..1.0).contains(rate) => {
                    return Err(Error::Shape(format!("dropout rate {rate} outside [0, 1)")));
                }
                _ => {}
            }
        }
        if self.param_tensors().iter().any(|(t, _)| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape("non-finite weight".into()));
        }
        Ok(())
    }

    /// Input shape of every layer, followed by the output shape.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut s = vec![self.input];
        for l in &self.layers {
            let next = l.output_shape(*s.last().unwrap())?;
            s.push(next);
        }
        Ok(s)
    }

    pub fn classes(&self) -> usize {
        self.shapes().map(|s| s.last().unwrap().len()).unwrap_or(0)
    }

    /// Parameter tensors with a flag telling weights (true) from biases.
    pub fn param_tensors(&self) -> Vec<(&[f64], bool)> {
        self.layers.iter().filter_map(|l| l.params()).flat_map(|(w, b)| [(w, true), (b, false)]).collect()
    }

    pub fn param_tensors_mut(&mut self) -> Vec<(&mut Vec<f64>, bool)> {
        self.layers
            .iter_mut()
            .filter_map(|l| l.params_mut())
            .flat_map(|(w, b)| [(w, true), (b, false)])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|(t, _)| t.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input.len() {
            return Err(Error::Shape(format!("expected input of {} values, got {}", self.input.len(), x.len())));
        }
        Ok(())
    }

    /// Activation after the first `n` layers in inference mode.
    pub fn forward_to(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let shapes = self.shapes()?;
        let mut a = x.to_vec();
        for (l, s) in self.layers.iter().zip(&shapes).take(n) {
            a = forward_layer(l, *s, &a, None::<&mut ChaCha8Rng>).0;
        }
        Ok(a)
    }

    /// Class probabilities for one sample.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_to(x, self.layers.len())
    }

    /// Input of the final dense layer: the learnt feature vector.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let last_dense = self
            .layers
            .iter()
            .rposition(|l| matches!(l, Layer::Dense { .. }))
            .ok_or_else(|| Error::Shape("model has no dense layer".into()))?;
        self.forward_to(x, last_dense)
    }

    /// Cross-entropy loss of one sample; adds its parameter gradient to `grads`.
    /// Dropout is active only when `rng` is given.
    pub fn accumulate_gradient<R: Rng>(
        &self,
        x: &[f64],
        label: usize,
        mut rng: Option<&mut R>,
        grads: &mut Grads,
    ) -> Result<f64> {
        self.check_input(x)?;
        let shapes = self.shapes()?;
        let classes = shapes.last().unwrap().len();
        if label >= classes {
            return Err(Error::InvalidArgument(format!("label {label} outside 0..{classes}")));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (l, s) in self.layers.iter().zip(&shapes) {
            let (out, cache) = forward_layer(l, *s, &a, rng.as_deref_mut());
            caches.push(cache);
            a = out;
        }
        let loss = -a[label].max(f64::MIN_POSITIVE).ln();
        // softmax + cross-entropy
        let mut d = a;
        d[label] -= 1.0;

        let mut slot = grads.tensors.len();
        let n = self.layers.len() - 1;
        for i in (0..n).rev() {
            let l = &self.layers[i];
            let has_params = l.params().is_some();
            if has_params {
                slot -= 2;
            }
            let (gw, gb) = if has_params {
                let (left, right) = grads.tensors.split_at_mut(slot + 1);
                (Some(&mut left[slot]), Some(&mut right[0]))
            } else {
                (None, None)
            };
            d = backward_layer(l, shapes[i], &caches[i], &d, gw, gb, i > 0);
        }
        Ok(loss)
    }
}

/// Probability rows for a batch in inference mode.
pub fn net_forward(model: &NetModel, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    crate::par::map(batch, |x| model.predict(x)).into_iter().collect()
}

fn gemm(m: usize, k: usize, n: usize, a: (&[f64], isize, isize), b: (&[f64], isize, isize), beta: f64, c: &mut [f64]) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a` (m×k), `b` (k×n) and `c` (m×n, row-major).
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.0.as_ptr(), a.1, a.2, b.0.as_ptr(), b.1, b.2, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

fn im2col(x: &[f64], s: Shape, k: usize) -> Vec<f64> {
    let (oh, ow) = (s.height - k + 1, s.width - k + 1);
    let p = oh * ow;
    let mut col = vec![0.0; s.channels * k * k * p];
    for c in 0..s.channels {
        for ky in 0..k {
            for kx in 0..k {
                let row = ((c * k + ky) * k + kx) * p;
                for oy in 0..oh {
                    let src = c * s.height * s.width + (oy + ky) * s.width + kx;
                    col[row + oy * ow..row + (oy + 1) * ow].copy_from_slice(&x[src..src + ow]);
                }
            }
        }
    }
    col
}

fn col2im(dcol: &[f64], s: Shape, k: usize) -> Vec<f64> {
    let (oh, ow) = (s.height - k + 1, s.width - k + 1);
    let p = oh * ow;
    let mut dx = vec![0.0; s.len()];
    for c in 0..s.channels {
        for ky in 0..k {
            for kx in 0..k {
                let row = ((c * k + ky) * k + kx) * p;
                for oy in 0..oh {
                    let dst = c * s.height * s.width + (oy + ky) * s.width + kx;
                    for (d, g) in dx[dst..dst + ow].iter_mut().zip(&dcol[row + oy * ow..row + (oy + 1) * ow]) {
                        *d += g;
                    }
                }
            }
        }
    }
    dx
}

fn forward_layer<R: Rng>(l: &Layer, s: Shape, x: &[f64], rng: Option<&mut R>) -> (Vec<f64>, Cache) {
    match l {
        Layer::Conv { out_channels, kernel, weight, bias, .. } => {
            let k = *kernel;
            let col = im2col(x, s, k);
            let kk = s.channels * k * k;
            let p = (s.height - k + 1) * (s.width - k + 1);
            let mut out = vec![0.0; out_channels * p];
            for (o, b) in bias.iter().enumerate() {
                out[o * p..(o + 1) * p].fill(*b);
            }
            gemm(*out_channels, kk, p, (weight, kk as isize, 1), (&col, p as isize, 1), 1.0, &mut out);
            (out, Cache::Conv { col })
        }
        Layer::MaxPool => {
            let (oh, ow) = (s.height / 2, s.width / 2);
            let mut out = Vec::with_capacity(s.channels * oh * ow);
            let mut argmax = Vec::with_capacity(out.capacity());
            for c in 0..s.channels {
                let base = c * s.height * s.width;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let i0 = base + 2 * oy * s.width + 2 * ox;
                        let mut best = i0;
                        for i in [i0 + 1, i0 + s.width, i0 + s.width + 1] {
                            if x[i] > x[best] {
                                best = i;
                            }
                        }
                        out.push(x[best]);
                        argmax.push(best);
                    }
                }
            }
            (out, Cache::Pool { argmax })
        }
        Layer::Relu => {
            let out: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
            (out.clone(), Cache::Relu { out })
        }
        Layer::Dense { inputs, outputs, weight, bias } => {
            let out = (0..*outputs)
                .map(|o| bias[o] + weight[o * inputs..(o + 1) * inputs].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
                .collect();
            (out, Cache::Dense { input: x.to_vec() })
        }
        Layer::Dropout { rate } => match rng {
            Some(rng) if *rate > 0.0 => {
                let keep = 1.0 - rate;
                let mask: Vec<f64> =
                    x.iter().map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                (x.iter().zip(&mask).map(|(v, m)| v * m).collect(), Cache::Dropout { mask: Some(mask) })
            }
            _ => (x.to_vec(), Cache::Dropout { mask: None }),
        },
        Layer::Softmax => {
            let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
            let z: f64 = e.iter().sum();
            (e.into_iter().map(|v| v / z).collect(), Cache::Softmax)
        }
    }
}

fn backward_layer(
    l: &Layer,
    s: Shape,
    cache: &Cache,
    d: &[f64],
    gw: Option<&mut Vec<f64>>,
    gb: Option<&mut Vec<f64>>,
    need_dx: bool,
) -> Vec<f64> {
    match (l, cache) {
        (Layer::Conv { out_channels, kernel, weight, .. }, Cache::Conv { col }) => {
            let k = *kernel;
            let kk = s.channels * k * k;
            let p = (s.height - k + 1) * (s.width - k + 1);
            let (gw, gb) = (gw.unwrap(), gb.unwrap());
            for (o, g) in gb.iter_mut().enumerate() {
                *g += d[o * p..(o + 1) * p].iter().sum::<f64>();
            }
            gemm(*out_channels, p, kk, (d, p as isize, 1), (col, 1, p as isize), 1.0, gw);
            if !need_dx {
                return Vec::new();
            }
            let mut dcol = vec![0.0; kk * p];
            gemm(kk, *out_channels, p, (weight, 1, kk as isize), (d, p as isize, 1), 0.0, &mut dcol);
            col2im(&dcol, s, k)
        }
        (Layer::MaxPool, Cache::Pool { argmax }) => {
            let mut dx = vec![0.0; s.len()];
            for (g, &i) in d.iter().zip(argmax) {
                dx[i] += g;
            }
            dx
        }
        (Layer::Relu, Cache::Relu { out }) => {
            d.iter().zip(out).map(|(g, o)| if *o > 0.0 { *g } else { 0.0 }).collect()
        }
        (Layer::Dense { inputs, weight, .. }, Cache::Dense { input }) => {
            let (gw, gb) = (gw.unwrap(), gb.unwrap());
            for (o, g) in d.iter().enumerate() {
                gb[o] += g;
                if *g != 0.0 {
                    for (w, v) in gw[o * inputs..(o + 1) * inputs].iter_mut().zip(input) {
                        *w += g * v;
                    }
                }
            }
            if !need_dx {
                return Vec::new();
            }
            let mut dx = vec![0.0; *inputs];
            for (o, g) in d.iter().enumerate() {
                if *g != 0.0 {
                    for (x, w) in dx.iter_mut().zip(&weight[o * inputs..(o + 1) * inputs]) {
                        *x += g * w;
                    }
                }
            }
            dx
        }
        (Layer::Dropout { .. }, Cache::Dropout { mask }) => match mask {
            Some(m) => d.iter().zip(m).map(|(g, m)| g * m).collect(),
            None => d.to_vec(),
        },
        (Layer::Softmax, Cache::Softmax) => d.to_vec(),
        _ => unreachable!("cache kind always matches its layer"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub filters: usize,
    pub kernel: usize,
}

/// A conv→relu→pool trunk followed by dense→relu→dropout→dense→softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_side: usize,
    pub stages: Vec<ConvStage>,
    pub hidden: usize,
    pub dropout: f64,
    pub classes: usize,
}

impl Architecture {
    fn trunk(input_side: usize, widths: [usize; 3], hidden: usize) -> Self {
        let stages = widths.iter().zip([5, 3, 3]).map(|(&filters, kernel)| ConvStage { filters, kernel }).collect();
        Self { input_side, stages, hidden, dropout: 0.5, classes: 2 }
    }

    /// 49×49 patches: conv 16/32/64, FC 128.
    pub fn refinement() -> Self {
        Self::trunk(49, [16, 32, 64], 128)
    }

    /// Same trunk on 89×89 slice crops.
    pub fn detection() -> Self {
        Self::trunk(89, [16, 32, 64], 128)
    }

    /// Same layer kinds with custom widths.
    pub fn scaled(input_side: usize, widths: [usize; 3], hidden: usize) -> Self {
        Self::trunk(input_side, widths, hidden)
    }

    pub fn input_shape(&self) -> Shape {
        Shape::square(self.input_side)
    }

    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut ch = 1;
        for st in &self.stages {
            layers.push(Layer::conv(ch, st.filters, st.kernel));
            layers.push(Layer::Relu);
            layers.push(Layer::MaxPool);
            ch = st.filters;
        }
        let mut s = self.input_shape();
        for l in &layers {
            match l.output_shape(s) {
                Ok(next) => s = next,
                Err(_) => return layers,
            }
        }
        layers.push(Layer::dense(s.len(), self.hidden));
        layers.push(Layer::Relu);
        layers.push(Layer::Dropout { rate: self.dropout });
        layers.push(Layer::dense(self.hidden, self.classes));
        layers.push(Layer::Softmax);
        layers
    }

    /// He-initialised model; biases start at zero.
    pub fn build(&self, seed: u64) -> Result<NetModel> {
        let mut model = NetModel::new(self.input_shape(), self.layers())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut model.layers {
            let fan_in: usize = match l {
                Layer::Conv { in_channels, kernel, .. } => *in_channels * *kernel * *kernel,
                Layer::Dense { inputs, .. } => *inputs,
                _ => continue,
            };
            let n = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive fan-in");
            if let Some((w, _)) = l.params_mut() {
                w.iter_mut().for_each(|v| *v = n.sample(&mut rng));
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn randomise(model: &mut NetModel, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (t, _) in model.param_tensors_mut() {
            let n = t.len();
            *t = rand_vec(&mut rng, n);
        }
    }

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let model = NetModel::new(Shape::square(13), Architecture::scaled(13, [2, 2, 2], 4).layers()[..0].to_vec());
        assert!(model.is_err());
        let arch = Architecture { stages: vec![ConvStage { filters: 3, kernel: 5 }], ..Architecture::scaled(13, [1, 1, 1], 4) };
        let model = NetModel::new(arch.input_shape(), arch.layers()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, 169)).collect();
        for row in net_forward(&model, &batch).unwrap() {
            assert_eq!(row, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let layers = vec![
            Layer::Conv { in_channels: 1, out_channels: 1, kernel: 3, weight: w, bias: vec![0.0] },
            Layer::dense(4, 2),
            Layer::Softmax,
        ];
        let model = NetModel::new(Shape::square(4), layers).unwrap();
        let x: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let fm = model.forward_to(&x, 1).unwrap();
        assert_eq!(fm, vec![5.0, 6.0, 9.0, 10.0]);
    }

    fn naive_forward(model: &NetModel, x: &[f64]) -> Vec<f64> {
        let shapes = model.shapes().unwrap();
        let mut a = x.to_vec();
        for (l, s) in model.layers.iter().zip(&shapes) {
            a = match l {
                Layer::Conv { in_channels, out_channels, kernel, weight, bias } => {
                    let (oh, ow) = (s.height - kernel + 1, s.width - kernel + 1);
                    let mut out = vec![0.0; out_channels * oh * ow];
                    for o in 0..*out_channels {
                        for y in 0..oh {
                            for xx in 0..ow {
                                let mut acc = bias[o];
                                for c in 0..*in_channels {
                                    for ky in 0..*kernel {
                                        for kx in 0..*kernel {
                                            acc += weight[((o * in_channels + c) * kernel + ky) * kernel + kx]
                                                * a[(c * s.height + y + ky) * s.width + xx + kx];
                                        }
                                    }
                                }
                                out[(o * oh + y) * ow + xx] = acc;
                            }
                        }
                    }
                    out
                }
                Layer::MaxPool => {
                    let (oh, ow) = (s.height / 2, s.width / 2);
                    let mut out = vec![0.0; s.channels * oh * ow];
                    for c in 0..s.channels {
                        for y in 0..oh {
                            for xx in 0..ow {
                                let at = |dy: usize, dx: usize| a[(c * s.height + 2 * y + dy) * s.width + 2 * xx + dx];
                                out[(c * oh + y) * ow + xx] = at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1));
                            }
                        }
                    }
                    out
                }
                Layer::Relu => a.iter().map(|v| v.max(0.0)).collect(),
                Layer::Dense { inputs, outputs, weight, bias } => (0..*outputs)
                    .map(|o| bias[o] + (0..*inputs).map(|i| weight[o * inputs + i] * a[i]).sum::<f64>())
                    .collect(),
                Layer::Dropout { .. } => a,
                Layer::Softmax => {
                    let z: f64 = a.iter().map(|v| v.exp()).sum();
                    a.iter().map(|v| v.exp() / z).collect()
                }
            };
        }
        a
    }

    #[test]
    fn forward_matches_direct_convolution() {
        for seed in 0..5 {
            let arch = Architecture::scaled(33, [3, 4, 2], 5);
            let mut model = arch.build(seed).unwrap();
            randomise(&mut model, seed + 100);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = rand_vec(&mut rng, 33 * 33);
            let got = model.predict(&x).unwrap();
            let want = naive_forward(&model, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10);
            }
            assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_errors() {
        let model = Architecture::scaled(13, [2, 2, 2], 4);
        let m = NetModel::new(model.input_shape(), model.layers());
        // three stages do not fit in 13×13
        assert!(m.is_err());
        let arch = Architecture::refinement();
        let m = arch.build(0).unwrap();
        assert!(matches!(m.predict(&[0.0; 10]), Err(Error::Shape(_))));
        assert_eq!(m.shapes().unwrap()[9], Shape::new(64, 4, 4));
        assert_eq!(Architecture::detection().build(0).unwrap().shapes().unwrap()[9], Shape::new(64, 9, 9));
    }

    #[test]
    fn json_round_trip() {
        let m = Architecture::scaled(33, [2, 2, 2], 3).build(4).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: NetModel = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
    }
}
