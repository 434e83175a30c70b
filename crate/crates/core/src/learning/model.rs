//! The global model, the native classifier used for local updates, and
//! server-side averaging.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::units::Samples;

/// Flat parameter vector distributed to and aggregated from clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    pub params: Vec<f64>,
    pub round: u32,
}

impl GlobalModel {
    pub fn new(params: Vec<f64>) -> Result<Self> {
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Model("non-finite parameter".into()));
        }
        Ok(Self { params, round: 0 })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    /// Minibatch SGD on a small softmax classifier.
    Native,
    /// Closed-form saturating accuracy curve; parameters are not touched.
    Surrogate,
}

/// Local-update hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSpec {
    pub kind: TrainerKind,
    pub batch: usize,
    pub epochs: u32,
    pub lr0: f64,
    /// Multiplicative learning-rate decay applied once per round.
    pub lr_decay: f64,
}

impl Default for TrainerSpec {
    fn default() -> Self {
        Self {
            kind: TrainerKind::Surrogate,
            batch: 50,
            epochs: 5,
            lr0: 0.25,
            lr_decay: 0.99,
        }
    }
}

impl TrainerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::param("batch", "must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be >= 1"));
        }
        if !(self.lr0.is_finite() && self.lr0 >= 0.0) {
            return Err(Error::param("lr0", "must be finite and >= 0"));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::param("lr_decay", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn learning_rate(&self, round: u32) -> f64 {
        self.lr0 * self.lr_decay.powi(round as i32)
    }
}

/// Fully connected network: ReLU hidden layers, softmax output.
///
/// Parameters are laid out layer by layer, each as a row-major
/// `out x in` weight matrix followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    sizes: Vec<usize>,
}

impl Mlp {
    pub fn new(inputs: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        if inputs == 0 || classes < 2 || hidden.contains(&0) {
            return Err(Error::param(
                "architecture",
                "layer widths must be positive, classes >= 2",
            ));
        }
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(classes);
        Ok(Self { sizes })
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    pub fn inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    /// Weights `N(0, 1/fan_in)`, zero biases.
    pub fn init(&self, rng: &mut RngStream) -> GlobalModel {
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.sizes.windows(2) {
            let scale = 1.0 / (w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| scale * rng.standard_normal()));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        GlobalModel { params, round: 0 }
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Model(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer; the last entry holds class probabilities.
    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[offset..offset + n_in * n_out];
            let bias = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let input = acts.last().expect("non-empty");
            let mut z: Vec<f64> = (0..n_out)
                .map(|o| {
                    bias[o]
                        + weights[o * n_in..(o + 1) * n_in]
                            .iter()
                            .zip(input)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                })
                .collect();
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            } else {
                softmax_in_place(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Mean cross-entropy over `indices`.
    pub fn loss(&self, params: &[f64], data: &Dataset, indices: &[usize]) -> Result<f64> {
        self.check(params)?;
        let total: f64 = indices
            .iter()
            .map(|&i| {
                let probs = self
                    .forward(params, data.features(i))
                    .pop()
                    .expect("output layer");
                -probs[data.label(i) as usize].max(f64::MIN_POSITIVE).ln()
            })
            .sum();
        Ok(total / indices.len().max(1) as f64)
    }

    /// Mean cross-entropy over `indices` and its gradient.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        data: &Dataset,
        indices: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        self.check(params)?;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for &i in indices {
            loss +=
                self.accumulate_sample(params, data.features(i), data.label(i) as usize, &mut grad);
        }
        let n = indices.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }

    fn accumulate_sample(&self, params: &[f64], x: &[f64], label: usize, grad: &mut [f64]) -> f64 {
        let acts = self.forward(params, x);
        let probs = acts.last().expect("output layer");
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();

        // dL/dz for the output layer
        let mut delta: Vec<f64> = probs.clone();
        delta[label] -= 1.0;

        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |acc, w| {
                let start = *acc;
                *acc += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();

        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                grad[off + n_in * n_out + o] += d;
            }
            if l > 0 {
                let weights = &params[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|j| {
                        if input[j] <= 0.0 {
                            0.0
                        } else {
                            (0..n_out).map(|o| weights[o * n_in + j] * delta[o]).sum()
                        }
                    })
                    .collect();
            }
        }
        loss
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> usize {
        let probs = self.forward(params, x).pop().expect("output layer");
        probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("at least two classes")
    }

    /// Fraction of the whole dataset classified correctly.
    pub fn accuracy(&self, params: &[f64], data: &Dataset) -> Result<f64> {
        self.check(params)?;
        if data.is_empty() {
            return Ok(0.0);
        }
        let correct = (0..data.len())
            .filter(|&i| self.predict(params, data.features(i)) == data.label(i) as usize)
            .count();
        Ok(correct as f64 / data.len() as f64)
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// One client's local training pass.
///
/// Runs `epochs` passes of minibatch SGD over a freshly shuffled copy of
/// the shard at learning rate `lr0 * lr_decay^round`. The dataset and the
/// shard are borrowed immutably; only parameters leave the client.
pub fn local_update(
    model: &GlobalModel,
    arch: &Mlp,
    data: &Dataset,
    shard: &[usize],
    spec: &TrainerSpec,
    rng: &mut RngStream,
) -> Result<GlobalModel> {
    arch.check(&model.params)?;
    if shard.is_empty() {
        return Err(Error::param(
            "shard",
            "local update needs at least one sample",
        ));
    }
    if data.n_features() != arch.inputs() {
        return Err(Error::Model(format!(
            "model expects {} features, data has {}",
            arch.inputs(),
            data.n_features()
        )));
    }
    let lr = spec.learning_rate(model.round);
    let mut params = model.params.clone();
    let mut order = shard.to_vec();
    for _ in 0..spec.epochs {
        order.shuffle(rng);
        for batch in order.chunks(spec.batch) {
            let (_, grad) = arch.loss_and_grad(&params, data, batch)?;
            params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= lr * g);
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Model("local update diverged".into()));
    }
    Ok(GlobalModel {
        params,
        round: model.round,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Plain mean of the uploaded parameter vectors.
    #[default]
    Unweighted,
    /// Mean weighted by each client's sample count.
    Weighted,
}

/// Averages client updates into the next global model.
///
/// Updates are put in a canonical order first and averaged as offsets from
/// the first one, so the result does not depend on the input order and N
/// copies of a model average back to that model bit for bit.
pub fn aggregate(
    updates: &[(GlobalModel, Samples)],
    weighting: Aggregation,
) -> Result<GlobalModel> {
    let Some((first, _)) = updates.first() else {
        return Err(Error::param("updates", "nothing to aggregate"));
    };
    let width = first.param_count();
    if let Some((bad, _)) = updates.iter().find(|(m, _)| m.param_count() != width) {
        return Err(Error::Model(format!(
            "parameter count mismatch: {} vs {width}",
            bad.param_count()
        )));
    }
    let mut sorted: Vec<(&[f64], f64)> = updates
        .iter()
        .map(|(m, w)| {
            let weight = match weighting {
                Aggregation::Unweighted => 1.0,
                Aggregation::Weighted => w.value(),
            };
            (m.params.as_slice(), weight)
        })
        .collect();
    sorted.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.total_cmp(&b.1))
    });
    let total_weight: f64 = sorted.iter().map(|(_, w)| w).sum();
    if total_weight.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::param("updates", "aggregation weights sum to zero"));
    }
    let anchor = sorted[0].0;
    let params = (0..width)
        .map(|j| {
            let offset: f64 = sorted.iter().map(|(p, w)| w * (p[j] - anchor[j])).sum();
            anchor[j] + offset / total_weight
        })
        .collect();
    let round = updates.iter().map(|(m, _)| m.round).max().unwrap_or(0) + 1;
    Ok(GlobalModel { params, round })
}
