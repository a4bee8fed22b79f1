//! Training loop and split evaluation.

use std::collections::BTreeMap;

use openspace_core::eval::{argmax_labels, confusion, ConfusionMatrix};
use openspace_core::models::{param_count, Arch, ModelSpec, Network};
use openspace_core::nn::{Layer, Mode, ParamStore, RmsProp, TrainableCrossEntropy};
use openspace_core::pipeline::Modality;
use openspace_core::simulate::LabelDomain;
use openspace_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{restore_into, Checkpoint};
use crate::dataset::SplitData;
use crate::error::{Error, Result};

/// Name of the class-weight vector inside the parameter store.
pub const THETA_NAME: &str = "loss.theta";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub arch: Arch,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub eval_every: usize,
}

/// A built network with its parameters and loss.
pub struct Model {
    pub spec: ModelSpec,
    pub modality: Modality,
    pub labels: LabelDomain,
    pub label_hw: (usize, usize),
    pub net: Network<f32>,
    pub loss: TrainableCrossEntropy<f32>,
    pub store: ParamStore<f32>,
}

impl Model {
    pub fn new(
        arch: Arch,
        modality: Modality,
        labels: LabelDomain,
        in_channels: usize,
        label_hw: (usize, usize),
        seed: u64,
    ) -> Result<Self> {
        let spec = ModelSpec::new(arch, in_channels);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(&mut store, &spec, label_hw, &mut rng)?;
        let loss = TrainableCrossEntropy::new(&mut store, "loss", spec.n_classes);
        debug_assert_eq!(store.get(loss.theta).name, THETA_NAME);
        Ok(Self {
            spec,
            modality,
            labels,
            label_hw,
            net,
            loss,
            store,
        })
    }

    pub fn for_data(arch: Arch, data: &SplitData, seed: u64) -> Result<Self> {
        Self::new(arch, data.modality, data.labels, data.input_shape[2], data.label_hw, seed)
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.net, &self.store)
    }

    pub fn theta(&self) -> Vec<f32> {
        self.store.value(self.loss.theta).to_vec()
    }

    /// Per-pixel class predictions, NHW order.
    pub fn predict(&mut self, input: &Tensor<f32>) -> Result<Vec<u8>> {
        let logits = self.net.forward(&self.store, input, Mode::Infer)?;
        Ok(argmax_labels(&logits)?)
    }

    pub fn evaluate(&mut self, data: &SplitData, batch_size: usize) -> Result<ConfusionMatrix> {
        let mut cm = ConfusionMatrix::default();
        for b in data.batches(batch_size, None) {
            cm += confusion(&self.predict(&b.input)?, &b.labels)?;
        }
        Ok(cm)
    }

    pub fn metadata(&self) -> BTreeMap<String, String> {
        [
            ("arch", self.spec.arch.to_string()),
            ("modality", self.modality.to_string()),
            ("label_domain", self.labels.to_string()),
            ("in_channels", self.spec.in_channels.to_string()),
            ("label_h", self.label_hw.0.to_string()),
            ("label_w", self.label_hw.1.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn to_checkpoint(&self, extra: &[(&str, String)]) -> Checkpoint {
        let mut meta = self.metadata();
        for (k, v) in extra {
            meta.insert(k.to_string(), v.clone());
        }
        Checkpoint {
            meta,
            store: self.store.clone(),
        }
    }

    /// Rebuilds the model a checkpoint was written from.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let get = |k: &str| {
            ck.meta
                .get(k)
                .ok_or_else(|| Error::CheckpointMismatch(format!("missing metadata `{k}`")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::CheckpointMismatch(format!("bad metadata `{k}`")))
        };
        let mut m = Self::new(
            get("arch")?.parse()?,
            get("modality")?.parse()?,
            get("label_domain")?.parse()?,
            num("in_channels")?,
            (num("label_h")?, num("label_w")?),
            0,
        )?;
        restore_into(&ck.store, &mut m.store)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// `(step, loss)` for every step, 1-based.
    pub losses: Vec<(usize, f32)>,
    /// `(step, eval mean-IoU)` at each evaluation.
    pub evals: Vec<(usize, f64)>,
    pub best_step: usize,
    pub best_miou: f64,
    pub final_theta: Vec<f32>,
}

/// Flips the class-weight gradient so the optimizer step raises the loss
/// along θ. Descending along θ has a degenerate optimum: all weight mass
/// moves onto whichever class is currently easiest and the other class stops
/// receiving gradient. As an adversary θ instead drifts towards the harder
/// class, and the fixed total mass keeps that bounded; at equilibrium the
/// per-class losses balance.
pub fn ascend_theta(model: &mut Model) {
    for g in model.store.grad_mut(model.loss.theta) {
        *g = -*g;
    }
}

/// Minimises the weighted cross-entropy over the network (θ ascends, see
/// [`ascend_theta`]) with RMSProp, evaluating every
/// `eval_every` steps and at the end. On return `model` holds the
/// parameters of the best evaluation.
pub fn train(
    model: &mut Model,
    train: &SplitData,
    eval: &SplitData,
    opts: &TrainOptions,
    log: &mut dyn FnMut(&str),
) -> Result<TrainReport> {
    if train.len() < 2 {
        return Err(Error::Config("training split needs at least 2 frames".into()));
    }
    let opt = RmsProp::with_lr(opts.lr);
    let batch_size = opts.batch_size.min(train.len()).max(2);
    let mut losses = Vec::with_capacity(opts.steps);
    let mut evals = Vec::new();
    let mut best: Option<(usize, f64, ParamStore<f32>)> = None;
    let mut epoch = 0u64;
    let mut queue: Vec<usize> = Vec::new();
    for step in 1..=opts.steps {
        if queue.len() < batch_size {
            // whole-epoch reshuffle; leftovers short of a batch are dropped
            queue = train.order(Some(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(epoch)));
            epoch += 1;
        }
        let idx: Vec<usize> = queue.drain(..batch_size).collect();
        let batch = train.batch(&idx)?;
        model.store.zero_grad();
        let logits = model.net.forward(&model.store, &batch.input, Mode::Train)?;
        let loss = model.loss.forward(&model.store, &logits, &batch.labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let g = model.loss.backward(&mut model.store)?;
        model.net.backward(&mut model.store, &g)?;
        ascend_theta(model);
        opt.step(&mut model.store)?;
        losses.push((step, loss));
        if step % opts.eval_every == 0 || step == opts.steps {
            let miou = model.evaluate(eval, 8)?.mean_iou()?;
            evals.push((step, miou));
            log(&format!("step {step} loss {loss:.5} eval_miou {miou:.4}"));
            if best.as_ref().is_none_or(|b| miou > b.1) {
                best = Some((step, miou, model.store.clone()));
            }
        }
    }
    let final_theta = model.theta();
    let (best_step, best_miou) = match best {
        Some((s, m, store)) => {
            model.store = store;
            (s, m)
        }
        None => (0, f64::NAN),
    };
    Ok(TrainReport {
        losses,
        evals,
        best_step,
        best_miou,
        final_theta,
    })
}

impl TrainReport {
    /// Mean loss over steps `[from, to]` (1-based, inclusive).
    pub fn mean_loss(&self, from: usize, to: usize) -> f64 {
        let sel: Vec<f64> = self
            .losses
            .iter()
            .filter(|(s, _)| (from..=to).contains(s))
            .map(|&(_, l)| l as f64)
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    }
}
