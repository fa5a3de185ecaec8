use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::{Network, CHUNK};
use super::spec::{ModelSpec, OutputHead};
use crate::dataset::epoch_permutation;
use crate::error::{Error, Result};
use crate::types::{AbsorptionLabel, BandProfile, N_BANDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1000,
            learning_rate: 1e-3,
            epochs: 400,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub train_config: TrainConfig,
    pub dataset_fingerprint: String,
    pub best_epoch: usize,
    pub dev_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub net: Network<f32>,
    pub provenance: Provenance,
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.net.spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingCurve {
    pub fn best(&self) -> Option<EpochRecord> {
        self.epochs
            .iter()
            .copied()
            .min_by(|a, b| a.dev_loss.total_cmp(&b.dev_loss))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,dev_loss")?;
        for r in &self.epochs {
            writeln!(w, "{},{:.8e},{:.8e}", r.epoch, r.train_loss, r.dev_loss)?;
        }
        Ok(())
    }
}

/// In-memory examples: `inputs` is `n × input_dim`, `labels` is `n × 12`
/// (six mean absorptions followed by six mean scatterings).
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub input_dim: usize,
    pub inputs: Vec<f32>,
    pub labels: Vec<f32>,
}

pub const LABEL_DIM: usize = 2 * N_BANDS;

impl Examples {
    pub fn len(&self) -> usize {
        self.labels.len() / LABEL_DIM
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn label(&self, i: usize) -> &[f32] {
        &self.labels[i * LABEL_DIM..(i + 1) * LABEL_DIM]
    }

    /// Regression target of item `i` for the given head.
    pub fn target(&self, i: usize, head: OutputHead) -> Vec<f32> {
        let l = self.label(i);
        match head {
            OutputHead::Alpha => l[..N_BANDS].to_vec(),
            OutputHead::InverseAlpha => l[..N_BANDS].iter().map(|&a| 1.0 / a.max(1e-3)).collect(),
            OutputHead::AlphaAndScattering => l.to_vec(),
        }
    }

    fn gather(&self, idx: &[usize], head: OutputHead) -> (Vec<f32>, Vec<f32>) {
        let mut x = Vec::with_capacity(idx.len() * self.input_dim);
        let mut t = Vec::with_capacity(idx.len() * head.dim());
        for &i in idx {
            x.extend_from_slice(self.input(i));
            t.extend(self.target(i, head));
        }
        (x, t)
    }

    fn check(&self, spec: &ModelSpec) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.input_dim != spec.input_dim || self.inputs.len() != self.len() * self.input_dim {
            return Err(Error::Shape(format!(
                "examples of dimension {} do not fit model input {}",
                self.input_dim, spec.input_dim
            )));
        }
        Ok(())
    }
}

/// Mean squared error of `net` over all of `data`.
pub fn mean_loss(net: &Network<f32>, data: &Examples) -> Result<f64> {
    let head = net.spec.head;
    let block = 8 * CHUNK;
    let mut sse = 0.0;
    let idx: Vec<usize> = (0..data.len()).collect();
    for part in idx.chunks(block) {
        let (x, t) = data.gather(part, head);
        let y = net.forward(&x)?;
        sse += y
            .iter()
            .zip(&t)
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>();
    }
    Ok(sse / (data.len() * head.dim()) as f64)
}

/// Trains from a seeded initialization and returns the parameters with the
/// lowest dev loss seen after any epoch, plus the loss curve.
pub fn train(
    spec: &ModelSpec,
    train_set: &Examples,
    dev_set: &Examples,
    config: &TrainConfig,
    fingerprint: &str,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainingCurve)> {
    train_set.check(spec)?;
    dev_set.check(spec)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net: Network<f32> = Network::new(spec, &mut rng)?;
    let mut adam = Adam::new(config.learning_rate, config.beta1, config.beta2, config.epsilon);
    let mut curve = TrainingCurve::default();
    let mut best: Option<(Network<f32>, EpochRecord)> = None;
    let head = spec.head;
    for epoch in 1..=config.epochs {
        let order = epoch_permutation(train_set.len(), config.seed, epoch as u64);
        let mut sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (x, t) = train_set.gather(batch, head);
            let (loss, grads) = net.mse_and_grad(&x, &t)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(epoch));
            }
            sum += loss * batch.len() as f64;
            let mut views: Vec<&mut [f32]> = net.params.iter_mut().map(|p| &mut p.data[..]).collect();
            adam.step(&mut views, &grads);
        }
        let dev_loss = mean_loss(&net, dev_set)?;
        if !dev_loss.is_finite() {
            return Err(Error::Divergence(epoch));
        }
        let record = EpochRecord {
            epoch,
            train_loss: sum / train_set.len() as f64,
            dev_loss,
        };
        on_epoch(&record);
        curve.epochs.push(record);
        if best.as_ref().is_none_or(|(_, b)| dev_loss < b.dev_loss) {
            best = Some((net.clone(), record));
        }
    }
    let (net, rec) = best.ok_or_else(|| Error::InvalidInput("epochs must be at least 1".into()))?;
    let provenance = Provenance {
        train_config: config.clone(),
        dataset_fingerprint: fingerprint.to_string(),
        best_epoch: rec.epoch,
        dev_loss: rec.dev_loss,
    };
    Ok((Model { net, provenance }, curve))
}

/// Raw outputs of `model` for one preprocessed vector.
pub fn predict_raw(model: &Model, input: &[f32]) -> Result<Vec<f32>> {
    if input.len() != model.net.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} samples, model expects {}",
            input.len(),
            model.net.input_dim()
        )));
    }
    model.net.forward(input)
}

/// Mean absorption (and scattering, for that head) estimated from one
/// preprocessed vector. Inverse-head outputs are inverted and clamped to
/// `[0, 1]`.
pub fn predict(model: &Model, input: &[f32]) -> Result<AbsorptionLabel> {
    let y = predict_raw(model, input)?;
    let profile = |v: &[f32], f: &dyn Fn(f64) -> f64| {
        let mut out = [0.0; N_BANDS];
        for (o, &x) in out.iter_mut().zip(v) {
            *o = f(x as f64);
        }
        BandProfile(out)
    };
    Ok(match model.net.spec.head {
        OutputHead::Alpha => AbsorptionLabel {
            alpha_bar: profile(&y, &|x| x),
            s_bar: None,
        },
        OutputHead::InverseAlpha => AbsorptionLabel {
            alpha_bar: profile(&y, &|x| if x > 1.0 { 1.0 / x } else { 1.0 }),
            s_bar: None,
        },
        OutputHead::AlphaAndScattering => AbsorptionLabel {
            alpha_bar: profile(&y[..N_BANDS], &|x| x),
            s_bar: Some(profile(&y[N_BANDS..], &|x| x)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::spec::LayerSpec;
    use super::*;
    use rand::Rng;

    fn small_mlp() -> ModelSpec {
        ModelSpec {
            input_dim: 20,
            architecture: vec![LayerSpec::Dense { out: 8 }, LayerSpec::Elu],
            head: OutputHead::Alpha,
        }
    }

    fn constant_examples(n: usize, seed: u64) -> Examples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..n * 20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut labels = Vec::new();
        for _ in 0..n {
            labels.extend([0.3f32; 6]);
            labels.extend([0.5f32; 6]);
        }
        Examples {
            input_dim: 20,
            inputs,
            labels,
        }
    }

    fn config(epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            learning_rate: 1e-2,
            epochs,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_constant_target() {
        let (tr, dev) = (constant_examples(64, 1), constant_examples(32, 2));
        let (model, curve) = train(&small_mlp(), &tr, &dev, &config(300), "t", |_| {}).unwrap();
        assert!(model.provenance.dev_loss < 1e-4, "{}", model.provenance.dev_loss);
        assert_eq!(curve.epochs.len(), 300);
        assert_eq!(curve.best().unwrap().epoch, model.provenance.best_epoch);
        // Smoothed training loss goes down.
        let avg = |r: std::ops::Range<usize>| {
            curve.epochs[r].iter().map(|e| e.train_loss).sum::<f64>() / 10.0
        };
        assert!(avg(10..20) < avg(0..10));
        let y = predict(&model, tr.input(0)).unwrap();
        assert!(y.alpha_bar.0.iter().all(|a| (a - 0.3).abs() < 0.02));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (tr, dev) = (constant_examples(40, 1), constant_examples(8, 2));
        let (a, _) = train(&small_mlp(), &tr, &dev, &config(5), "t", |_| {}).unwrap();
        let (b, _) = train(&small_mlp(), &tr, &dev, &config(5), "t", |_| {}).unwrap();
        assert_eq!(a.net.params, b.net.params);
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let empty = Examples {
            input_dim: 20,
            inputs: vec![],
            labels: vec![],
        };
        let dev = constant_examples(4, 2);
        assert!(matches!(
            train(&small_mlp(), &empty, &dev, &config(1), "t", |_| {}),
            Err(Error::EmptyDataset)
        ));
        let mut wrong = constant_examples(4, 3);
        wrong.input_dim = 10;
        wrong.inputs.truncate(40);
        assert!(matches!(
            train(&small_mlp(), &wrong, &dev, &config(1), "t", |_| {}),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut tr = constant_examples(8, 1);
        tr.inputs[3] = f32::NAN;
        let dev = constant_examples(4, 2);
        assert!(matches!(
            train(&small_mlp(), &tr, &dev, &config(2), "t", |_| {}),
            Err(Error::Divergence(1))
        ));
    }

    #[test]
    fn inverse_head_is_clamped() {
        let spec = ModelSpec {
            head: OutputHead::InverseAlpha,
            ..small_mlp()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net: Network<f32> = Network::new(&spec, &mut rng).unwrap();
        net.params.iter_mut().for_each(|p| p.data.fill(0.0));
        let model = Model {
            net,
            provenance: Provenance {
                train_config: TrainConfig::default(),
                dataset_fingerprint: String::new(),
                best_epoch: 0,
                dev_loss: 0.0,
            },
        };
        let y = predict(&model, &[0.0; 20]).unwrap();
        assert!(y.alpha_bar.0.iter().all(|&a| a == 1.0));
        assert!(predict(&model, &[0.0; 19]).is_err());
    }
}
