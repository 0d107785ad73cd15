//! Mini-batch SGD with momentum on the softmax cross-entropy loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment;
use super::net::{Architecture, Grads, Layer, NetModel, Shape};
use crate::error::{Error, Result};
use crate::volcore::Grid2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Random rotation/shear/flip/scale of every sample in every epoch.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::refinement()
    }
}

impl TrainConfig {
    /// Patch-classifier schedule.
    pub fn refinement() -> Self {
        Self {
            learning_rate: 1e-2,
            momentum: 0.75,
            batch_size: 256,
            l2: 1e-4,
            epochs: 50,
            dropout: 0.5,
            seed: 0,
            augment: true,
        }
    }

    /// Slice-classifier schedule.
    pub fn detection() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 16,
            l2: 1e-4,
            epochs: 20,
            dropout: 0.5,
            seed: 0,
            augment: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate {} must be finite and >= 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("L2 coefficient {} must be >= 0", self.l2)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Labelled samples sharing one input shape.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::LengthMismatch(inputs.len(), labels.len()));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(), labels: idx.iter().map(|&i| self.labels[i]).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub model: NetModel,
    /// Mean training loss per epoch.
    pub loss: Vec<f64>,
}

/// `v ← m·v − lr·(g + l2·w)`, `w ← w + v`.
pub fn sgdm_step(w: &mut [f64], v: &mut [f64], grad: &[f64], lr: f64, momentum: f64, l2: f64) {
    for ((w, v), g) in w.iter_mut().zip(v.iter_mut()).zip(grad) {
        *v = momentum * *v - lr * (g + l2 * *w);
        *w += *v;
    }
}

/// Initialises `arch` from the run seed and trains it.
pub fn net_train(data: &Dataset, arch: &Architecture, cfg: &TrainConfig) -> Result<Trained> {
    let model = arch.build(cfg.seed ^ 0x5eed_0000_0000_0001)?;
    train_model(model, data, cfg)
}

fn seed_for(seed: u64, epoch: usize, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((epoch as u64) << 32) ^ index as u64
}

/// Continues training an existing model. Bias terms are not decayed.
pub fn train_model(mut model: NetModel, data: &Dataset, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyClass);
    }
    let classes = model.classes();
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 0..{classes}")));
    }
    let input = model.input;
    if cfg.augment && (input.channels != 1 || input.height != input.width) {
        return Err(Error::Shape("augmentation needs square single-channel inputs".into()));
    }
    for l in &mut model.layers {
        if let Layer::Dropout { rate } = l {
            *rate = cfg.dropout;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = Grads::zeros_like(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Grads::zeros_like(&model);
            let mut batch_loss = 0.0;
            for &i in batch {
                let x = if cfg.augment {
                    augmented(&data.inputs[i], input, seed_for(cfg.seed, epoch, i))
                } else {
                    data.inputs[i].clone()
                };
                batch_loss += model.accumulate_gradient(&x, data.labels[i], Some(&mut rng), &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += batch_loss;
            grads.scale(1.0 / batch.len() as f64);
            for (((w, is_weight), v), g) in model.param_tensors_mut().into_iter().zip(&mut velocity.tensors).zip(&grads.tensors) {
                let l2 = if is_weight { cfg.l2 } else { 0.0 };
                sgdm_step(w, v, g, cfg.learning_rate, cfg.momentum, l2);
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || model.param_tensors().iter().any(|(t, _)| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(mean);
    }
    model.trained_with = Some(cfg.clone());
    Ok(Trained { model, loss: trace })
}

fn augmented(x: &[f64], s: Shape, seed: u64) -> Vec<f64> {
    let patch = Grid2::from_vec(s.width, s.height, x.to_vec());
    augment(&patch, seed).into_vec()
}

/// Fraction of samples whose arg-max class equals the label.
pub fn accuracy(model: &NetModel, data: &Dataset) -> Result<f64> {
    let probs = super::net::net_forward(model, &data.inputs)?;
    let hits = probs
        .iter()
        .zip(&data.labels)
        .filter(|(p, &l)| p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) == Some(l))
        .count();
    Ok(hits as f64 / data.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fc_net(seed: u64) -> NetModel {
        let layers = vec![Layer::dense(2, 8), Layer::Relu, Layer::dense(8, 2), Layer::Softmax];
        let mut m = NetModel::new(Shape::flat(2), layers).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (t, w) in m.param_tensors_mut() {
            if w {
                t.iter_mut().for_each(|v| *v = rng.random_range(-0.7..0.7));
            }
        }
        m
    }

    fn toy(seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        while inputs.len() < n {
            let p: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let s = p[0] + 0.5 * p[1];
            if s.abs() < 0.1 {
                continue;
            }
            inputs.push(p.to_vec());
            labels.push(usize::from(s > 0.0));
        }
        Dataset::new(inputs, labels).unwrap()
    }

    fn plain(lr: f64, epochs: usize) -> TrainConfig {
        TrainConfig { learning_rate: lr, momentum: 0.9, batch_size: 8, l2: 0.0, epochs, dropout: 0.0, seed: 3, augment: false }
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let m = fc_net(1);
        let t = train_model(m.clone(), &toy(1, 40), &TrainConfig { l2: 1e-2, ..plain(0.0, 3) }).unwrap();
        assert_eq!(t.model.layers, m.layers);
        assert_eq!(t.loss.len(), 3);
    }

    #[test]
    fn separable_toy_is_learnt() {
        let data = toy(2, 100);
        let t = train_model(fc_net(2), &data, &plain(0.1, 50)).unwrap();
        assert_eq!(accuracy(&t.model, &data).unwrap(), 1.0);
        assert!(t.loss.last().unwrap() < t.loss.first().unwrap());
    }

    #[test]
    fn sgdm_single_step_by_hand() {
        // f(w) = (w0 - 1)² + 3 w1², gradient (2(w0 - 1), 6 w1)
        let mut w = [2.0, 1.0];
        let mut v = [0.5, -0.5];
        let g = [2.0 * (w[0] - 1.0), 6.0 * w[1]];
        sgdm_step(&mut w, &mut v, &g, 0.1, 0.9, 0.01);
        let v0 = 0.9 * 0.5 - 0.1 * (2.0 + 0.01 * 2.0);
        let v1 = 0.9 * -0.5 - 0.1 * (6.0 + 0.01 * 1.0);
        assert_eq!(v, [v0, v1]);
        assert_eq!(w, [2.0 + v0, 1.0 + v1]);
    }

    #[test]
    fn weight_decay_alone_shrinks_norm() {
        let mut w = vec![0.3, -1.2, 2.0];
        let mut v = vec![0.0; 3];
        let mut norm = w.iter().map(|x| x * x).sum::<f64>();
        for _ in 0..10 {
            sgdm_step(&mut w, &mut v, &[0.0; 3], 0.05, 0.0, 0.1);
            let n = w.iter().map(|x| x * x).sum::<f64>();
            assert!(n < norm);
            norm = n;
        }
    }

    #[test]
    fn training_is_deterministic() {
        let arch = Architecture::scaled(13, [2, 2, 2], 4);
        let arch = Architecture { stages: arch.stages[..2].to_vec(), ..arch };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inputs: Vec<Vec<f64>> = (0..12).map(|_| (0..169).map(|_| rng.random::<f64>()).collect()).collect();
        let data = Dataset::new(inputs, (0..12).map(|i| i % 2).collect()).unwrap();
        let cfg = TrainConfig { epochs: 2, batch_size: 4, ..TrainConfig::refinement() };
        let a = net_train(&data, &arch, &cfg).unwrap();
        let b = net_train(&data, &arch, &cfg).unwrap();
        assert_eq!(a, b);
        let c = net_train(&data, &arch, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn divergence_is_reported() {
        let data = toy(5, 20);
        let r = train_model(fc_net(5), &data, &TrainConfig { learning_rate: 1e300, momentum: 0.0, ..plain(1e300, 5) });
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }
}
