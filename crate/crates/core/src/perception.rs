//! Per-ray linear-softmax segmentation model with online SGD refinement.

use crate::error::{Error, PerceptionError};
use crate::rng::Rng;
use crate::world::{ClassId, Observation};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_FORMAT: &str = "embal-seg-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegModel {
    pub classes: usize,
    pub feature_dim: usize,
    /// Row-major `classes x feature_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Number of completed refine calls.
    pub version: u64,
    pub momentum_w: Vec<f64>,
    pub momentum_b: Vec<f64>,
}

/// Refinement schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub target_accuracy: f64,
    pub max_iterations: usize,
    pub flip_prob: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lr: 3e-3,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 4,
            target_accuracy: 0.95,
            max_iterations: 1000,
            flip_prob: 0.5,
        }
    }
}

/// One annotated view: ray features and ground-truth labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledView {
    pub features: Vec<f64>,
    pub labels: Vec<ClassId>,
    pub feature_dim: usize,
}

impl LabeledView {
    pub fn from_observation(obs: &Observation) -> Self {
        Self {
            features: obs.image.clone(),
            labels: obs.gt_mask.clone(),
            feature_dim: obs.feature_dim,
        }
    }

    pub fn rays(&self) -> usize {
        self.labels.len()
    }

    pub fn feature(&self, ray: usize) -> &[f64] {
        &self.features[ray * self.feature_dim..(ray + 1) * self.feature_dim]
    }

    /// Reverses the ray order.
    pub fn flipped(&self) -> Self {
        let d = self.feature_dim;
        let mut features = Vec::with_capacity(self.features.len());
        for ray in (0..self.rays()).rev() {
            features.extend_from_slice(&self.features[ray * d..(ray + 1) * d]);
        }
        let mut labels = self.labels.clone();
        labels.reverse();
        Self {
            features,
            labels,
            feature_dim: d,
        }
    }
}

/// Annotated views collected so far, in annotation order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSet {
    pub views: Vec<LabeledView>,
}

impl TrainSet {
    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn push(&mut self, view: LabeledView) {
        self.views.push(view);
    }

    pub fn last(&self) -> Option<&LabeledView> {
        self.views.last()
    }
}

/// Per-ray class ids and probability rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SegMask {
    pub ids: Vec<ClassId>,
    /// Row-major `rays x classes`.
    pub probs: Vec<f64>,
    pub classes: usize,
}

impl SegMask {
    /// One-hot mask from known labels.
    pub fn from_labels(labels: &[ClassId], classes: usize) -> Self {
        let mut probs = vec![0.0; labels.len() * classes];
        for (i, &c) in labels.iter().enumerate() {
            probs[i * classes + c] = 1.0;
        }
        Self {
            ids: labels.to_vec(),
            probs,
            classes,
        }
    }

    pub fn rays(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, ray: usize) -> &[f64] {
        &self.probs[ray * self.classes..(ray + 1) * self.classes]
    }
}

pub fn init_model(seed: u64, classes: usize, feature_dim: usize) -> SegModel {
    let mut rng = crate::rng::seeded(&[seed, crate::rng::tag::MODEL_INIT]);
    let weights = (0..classes * feature_dim).map(|_| rng.random_range(-0.01..=0.01)).collect();
    SegModel {
        classes,
        feature_dim,
        weights,
        bias: vec![0.0; classes],
        version: 0,
        momentum_w: vec![0.0; classes * feature_dim],
        momentum_b: vec![0.0; classes],
    }
}

fn softmax_into(logits: &mut [f64]) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in logits.iter_mut() {
        *v /= z;
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

impl SegModel {
    /// Class probabilities for one feature vector.
    fn probs_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.feature_dim;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * d..(c + 1) * d];
            *o = self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax_into(out);
    }

    fn check_dim(&self, dim: usize) -> Result<(), PerceptionError> {
        if dim != self.feature_dim {
            return Err(PerceptionError::DimensionMismatch {
                expected: self.feature_dim,
                got: dim,
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    /// Predicts class ids for flat `rays x feature_dim` features.
    pub fn predict_features(&self, features: &[f64], dim: usize) -> Result<SegMask, PerceptionError> {
        self.check_dim(dim)?;
        let rays = features.len() / dim.max(1);
        let c = self.classes;
        let mut probs = vec![0.0; rays * c];
        let mut ids = Vec::with_capacity(rays);
        for r in 0..rays {
            let x = &features[r * dim..(r + 1) * dim];
            if x.iter().any(|v| !v.is_finite()) {
                return Err(PerceptionError::NonFinite(r));
            }
            let row = &mut probs[r * c..(r + 1) * c];
            self.probs_into(x, row);
            ids.push(argmax(row));
        }
        Ok(SegMask { ids, probs, classes: c })
    }

    /// Argmax labels only; skips validation and allocation of probability rows.
    fn labels_for(&self, view: &LabeledView, buf: &mut [f64]) -> Vec<ClassId> {
        (0..view.rays())
            .map(|r| {
                self.probs_into(view.feature(r), buf);
                argmax(buf)
            })
            .collect()
    }

    /// Mean cross-entropy over all pixels of `batch` and its gradient
    /// `(loss, d_weights, d_bias)`. Weight decay is not part of the loss.
    pub fn loss_and_grad(&self, batch: &[LabeledView]) -> (f64, Vec<f64>, Vec<f64>) {
        let (c, d) = (self.classes, self.feature_dim);
        let mut gw = vec![0.0; c * d];
        let mut gb = vec![0.0; c];
        let mut p = vec![0.0; c];
        let mut loss = 0.0;
        let mut n = 0usize;
        for view in batch {
            for r in 0..view.rays() {
                let x = view.feature(r);
                self.probs_into(x, &mut p);
                let y = view.labels[r];
                loss -= p[y].max(f64::MIN_POSITIVE).ln();
                p[y] -= 1.0;
                for k in 0..c {
                    gb[k] += p[k];
                    let g = &mut gw[k * d..(k + 1) * d];
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += p[k] * xi;
                    }
                }
                n += 1;
            }
        }
        let scale = 1.0 / n.max(1) as f64;
        gw.iter_mut().chain(gb.iter_mut()).for_each(|g| *g *= scale);
        (loss * scale, gw, gb)
    }

    pub fn apply_sgd(&mut self, gw: &[f64], gb: &[f64], cfg: &SgdConfig) {
        for i in 0..self.weights.len() {
            let g = gw[i] + cfg.weight_decay * self.weights[i];
            self.momentum_w[i] = cfg.momentum * self.momentum_w[i] + g;
            self.weights[i] -= cfg.lr * self.momentum_w[i];
        }
        for i in 0..self.bias.len() {
            let g = gb[i] + cfg.weight_decay * self.bias[i];
            self.momentum_b[i] = cfg.momentum * self.momentum_b[i] + g;
            self.bias[i] -= cfg.lr * self.momentum_b[i];
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, Error> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.format_version != MODEL_VERSION {
            return Err(PerceptionError::Checkpoint(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                file.format, file.format_version
            ))
            .into());
        }
        let m = file.model;
        let (c, d) = (m.classes, m.feature_dim);
        if m.weights.len() != c * d || m.bias.len() != c || m.momentum_w.len() != c * d || m.momentum_b.len() != c {
            return Err(PerceptionError::Checkpoint("parameter shapes do not match header".into()).into());
        }
        if !m.is_finite() {
            return Err(PerceptionError::Checkpoint("non-finite parameters".into()).into());
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    model: SegModel,
}

pub fn predict(model: &SegModel, obs: &Observation) -> Result<SegMask, PerceptionError> {
    model.predict_features(&obs.image, obs.feature_dim)
}

/// Fraction of rays whose predicted class equals the ground truth.
pub fn accuracy(model: &SegModel, obs: &Observation) -> f64 {
    let mut buf = vec![0.0; model.classes];
    let view = LabeledView::from_observation(obs);
    view_accuracy(model, std::slice::from_ref(&view), &mut buf)
}

fn view_accuracy(model: &SegModel, views: &[LabeledView], buf: &mut [f64]) -> f64 {
    let mut hit = 0usize;
    let mut n = 0usize;
    for v in views {
        let pred = model.labels_for(v, buf);
        hit += pred.iter().zip(&v.labels).filter(|(a, b)| a == b).count();
        n += v.rays();
    }
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    /// Iterations run, including the one whose accuracy triggered the stop.
    pub iterations: usize,
    /// SGD steps applied.
    pub steps: usize,
    pub final_batch_accuracy: f64,
    pub reached_target: bool,
}

/// Appends `new_view` to the training set, then refines the model with
/// minibatches that always contain the newest view.
pub fn refine(
    model: &mut SegModel,
    trainset: &mut TrainSet,
    new_view: LabeledView,
    cfg: &SgdConfig,
    rng: &mut Rng,
) -> Result<RefineReport, PerceptionError> {
    model.check_dim(new_view.feature_dim)?;
    trainset.push(new_view);
    refine_on(model, trainset, cfg, rng)
}

/// Refinement on an existing training set; the last view anchors every batch.
pub fn refine_on(
    model: &mut SegModel,
    trainset: &TrainSet,
    cfg: &SgdConfig,
    rng: &mut Rng,
) -> Result<RefineReport, PerceptionError> {
    let last = trainset.last().ok_or(PerceptionError::EmptyTrainSet)?;
    let mut buf = vec![0.0; model.classes];
    let mut report = RefineReport {
        iterations: 0,
        steps: 0,
        final_batch_accuracy: 0.0,
        reached_target: false,
    };
    let n = trainset.len();
    for _ in 0..cfg.max_iterations.max(1) {
        report.iterations += 1;
        let mut batch: Vec<LabeledView> = if n < cfg.batch_size {
            trainset.views.clone()
        } else {
            let mut b = vec![last.clone()];
            for _ in 1..cfg.batch_size {
                b.push(trainset.views[rng.random_range(0..n)].clone());
            }
            b
        };
        for v in batch.iter_mut() {
            if rng.random_bool(cfg.flip_prob.clamp(0.0, 1.0)) {
                *v = v.flipped();
            }
        }
        report.final_batch_accuracy = view_accuracy(model, &batch, &mut buf);
        if report.final_batch_accuracy >= cfg.target_accuracy {
            report.reached_target = true;
            break;
        }
        let (_, gw, gb) = model.loss_and_grad(&batch);
        model.apply_sgd(&gw, &gb, cfg);
        report.steps += 1;
    }
    model.version += 1;
    Ok(report)
}

/// The `k` classes with most ground-truth pixels, ties to the smaller id,
/// returned in ascending id order. Fewer are returned if fewer are present.
pub fn top_common_classes(ref_views: &[Observation], k: usize, classes: usize) -> Vec<ClassId> {
    let mut counts = vec![0usize; classes];
    for v in ref_views {
        for &c in &v.gt_mask {
            counts[c] += 1;
        }
    }
    let mut order: Vec<ClassId> = (0..classes).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|a, b| counts[*b].cmp(&counts[*a]).then(a.cmp(b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Mean IoU over `subset`, pooled over all pairs of (prediction, truth).
/// Classes with no predicted and no true pixel are left out.
pub fn miou_from_labels<'a>(pairs: impl IntoIterator<Item = (&'a [ClassId], &'a [ClassId])>, subset: &[ClassId]) -> f64 {
    let max = subset.iter().copied().max().map_or(0, |m| m + 1);
    let mut tp = vec![0usize; max];
    let mut fp = vec![0usize; max];
    let mut fn_ = vec![0usize; max];
    let mut in_subset = vec![false; max];
    for &c in subset {
        in_subset[c] = true;
    }
    for (pred, truth) in pairs {
        for (&p, &t) in pred.iter().zip(truth) {
            if p == t {
                if p < max && in_subset[p] {
                    tp[p] += 1;
                }
            } else {
                if p < max && in_subset[p] {
                    fp[p] += 1;
                }
                if t < max && in_subset[t] {
                    fn_[t] += 1;
                }
            }
        }
    }
    let ious: Vec<f64> = subset
        .iter()
        .filter_map(|&c| {
            let denom = tp[c] + fp[c] + fn_[c];
            (denom > 0).then(|| tp[c] as f64 / denom as f64)
        })
        .collect();
    if ious.is_empty() {
        0.0
    } else {
        ious.iter().sum::<f64>() / ious.len() as f64
    }
}

pub fn miou(model: &SegModel, ref_views: &[Observation], subset: &[ClassId]) -> f64 {
    let mut buf = vec![0.0; model.classes];
    let preds: Vec<Vec<ClassId>> = ref_views
        .iter()
        .map(|o| model.labels_for(&LabeledView::from_observation(o), &mut buf))
        .collect();
    miou_from_labels(
        preds.iter().zip(ref_views).map(|(p, o)| (p.as_slice(), o.gt_mask.as_slice())),
        subset,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, Rng};
    use crate::world::{generate_scene, render_view, sample_reference_views, WorldParams};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic_view(rng: &mut Rng, protos: &[Vec<f64>], rays: usize, sigma: f64) -> LabeledView {
        let d = protos[0].len();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..rays {
            let c = rng.random_range(0..protos.len());
            for k in 0..d {
                let z: f64 = StandardNormal.sample(rng);
                features.push(protos[c][k] + sigma * z);
            }
            labels.push(c);
        }
        LabeledView {
            features,
            labels,
            feature_dim: d,
        }
    }

    #[test]
    fn init_is_seeded_and_small() {
        let a = init_model(3, 12, 16);
        assert_eq!(a, init_model(3, 12, 16));
        assert_ne!(a, init_model(4, 12, 16));
        assert_eq!(a.version, 0);
        assert!(a.weights.iter().all(|w| w.abs() <= 0.01));
    }

    #[test]
    fn fresh_model_is_at_chance() {
        let protos = WorldParams::default().class_prototypes();
        let mut rng = seeded(&[77]);
        let views: Vec<_> = (0..160).map(|_| synthetic_view(&mut rng, &protos, 64, 0.8)).collect();
        let pixels: usize = views.iter().map(|v| v.rays()).sum();
        assert!(pixels >= 10_000);
        let mut acc = 0.0;
        let models = 20;
        for seed in 0..models {
            let m = init_model(seed, 12, 16);
            acc += view_accuracy(&m, &views, &mut vec![0.0; 12]);
        }
        acc /= models as f64;
        assert!((acc - 1.0 / 12.0).abs() < 0.05, "{acc}");
    }

    #[test]
    fn zero_weights_give_uniform_rows() {
        let mut m = init_model(0, 5, 3);
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        let mask = m.predict_features(&[1.0, 2.0, 3.0, -1.0, 0.0, 4.0], 3).unwrap();
        for r in 0..2 {
            assert!(mask.row(r).iter().all(|p| (p - 0.2).abs() < 1e-15));
        }
    }

    #[test]
    fn probabilities_match_direct_softmax() {
        let m = init_model(9, 4, 3);
        let mut m = m;
        let mut rng = seeded(&[1]);
        m.weights.iter_mut().for_each(|w| *w = rng.random_range(-2.0..2.0));
        m.bias.iter_mut().for_each(|w| *w = rng.random_range(-2.0..2.0));
        let x = [0.3, -1.2, 2.5];
        let mask = m.predict_features(&x, 3).unwrap();
        let logits: Vec<f64> = (0..4).map(|c| m.bias[c] + (0..3).map(|k| m.weights[c * 3 + k] * x[k]).sum::<f64>()).collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        for c in 0..4 {
            assert!((mask.row(0)[c] - logits[c].exp() / z).abs() < 1e-12);
        }
        assert!((mask.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(mask.ids[0], argmax(mask.row(0)));
    }

    #[test]
    fn prototype_readout_reproduces_labels() {
        let params = WorldParams {
            scene_sigma: 0.0,
            pixel_sigma: 0.0,
            ..WorldParams::default()
        };
        let scene = generate_scene(&params, 5).unwrap();
        let obs = render_view(&scene, scene.start_pose());
        let mut m = init_model(0, params.classes, params.feature_dim);
        // Nearest-prototype classifier written as a linear readout.
        for c in 0..params.classes {
            let p = &scene.prototypes[c];
            m.weights[c * params.feature_dim..(c + 1) * params.feature_dim].copy_from_slice(p);
            m.bias[c] = -0.5 * p.iter().map(|v| v * v).sum::<f64>();
        }
        assert_eq!(predict(&m, &obs).unwrap().ids, obs.gt_mask);
        assert_eq!(accuracy(&m, &obs), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = init_model(0, 3, 2);
        assert!(matches!(m.predict_features(&[0.0; 6], 3), Err(PerceptionError::DimensionMismatch { .. })));
        assert!(matches!(m.predict_features(&[0.0, f64::NAN], 2), Err(PerceptionError::NonFinite(0))));
        let mut m = m;
        let err = refine_on(&mut m, &TrainSet::default(), &SgdConfig::default(), &mut seeded(&[0]));
        assert!(matches!(err, Err(PerceptionError::EmptyTrainSet)));
    }

    #[test]
    fn accuracy_examples() {
        let scene = generate_scene(&WorldParams::default(), 1).unwrap();
        let mut obs = render_view(&scene, scene.start_pose());
        let mut m = init_model(0, 3, obs.feature_dim);
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        m.bias = vec![0.0, 5.0, 0.0];
        // Half the rays are class 1, the rest class 2.
        let w = obs.rays();
        obs.gt_mask = (0..w).map(|i| if i < w / 2 { 1 } else { 2 }).collect();
        assert_eq!(accuracy(&m, &obs), 0.5);
        obs.gt_mask = vec![1; w];
        assert_eq!(accuracy(&m, &obs), 1.0);
        obs.gt_mask = vec![0; w];
        assert_eq!(accuracy(&m, &obs), 0.0);
    }

    fn numeric_grad(m: &SegModel, batch: &[LabeledView], param: usize) -> f64 {
        let h = 1e-5;
        let mut plus = m.clone();
        let mut minus = m.clone();
        let nw = m.weights.len();
        if param < nw {
            plus.weights[param] += h;
            minus.weights[param] -= h;
        } else {
            plus.bias[param - nw] += h;
            minus.bias[param - nw] -= h;
        }
        (plus.loss_and_grad(batch).0 - minus.loss_and_grad(batch).0) / (2.0 * h)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let protos = WorldParams::default().class_prototypes();
        let mut rng = seeded(&[2024]);
        for point in 0..100 {
            let mut m = init_model(point, 12, 16);
            m.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
            m.bias.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
            let batch = vec![synthetic_view(&mut rng, &protos, 8, 0.8)];
            let (_, gw, gb) = m.loss_and_grad(&batch);
            for _ in 0..5 {
                let p = rng.random_range(0..gw.len() + gb.len());
                let a = if p < gw.len() { gw[p] } else { gb[p - gw.len()] };
                let n = numeric_grad(&m, &batch, p);
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel < 1e-4, "point {point} param {p}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn separable_view_is_learned() {
        let params = WorldParams {
            scene_sigma: 0.0,
            pixel_sigma: 0.0,
            ..WorldParams::default()
        };
        let scene = generate_scene(&params, 4).unwrap();
        let obs = render_view(&scene, scene.start_pose());
        let mut m = init_model(1, params.classes, params.feature_dim);
        let mut ts = TrainSet::default();
        let mut rng = seeded(&[5]);
        let cfg = SgdConfig::default();
        let r = refine(&mut m, &mut ts, LabeledView::from_observation(&obs), &cfg, &mut rng).unwrap();
        assert!(r.reached_target && r.iterations <= 1000 && r.iterations >= 1);
        assert!(accuracy(&m, &obs) >= 0.95);
        assert_eq!(m.version, 1);
        // Already fitted: the second call stops at its first iteration.
        let r2 = refine(&mut m, &mut ts, LabeledView::from_observation(&obs), &cfg, &mut rng).unwrap();
        assert_eq!((r2.iterations, r2.steps), (1, 0));
        assert_eq!(m.version, 2);
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn iteration_cap_is_respected() {
        // Contradictory labels on identical features: the target is unreachable.
        let view = LabeledView {
            features: vec![1.0; 8],
            labels: vec![0, 1, 2, 3],
            feature_dim: 2,
        };
        let mut ts = TrainSet::default();
        let mut m = init_model(0, 4, 2);
        let cfg = SgdConfig {
            max_iterations: 37,
            ..SgdConfig::default()
        };
        let r = refine(&mut m, &mut ts, view, &cfg, &mut seeded(&[0])).unwrap();
        assert_eq!((r.iterations, r.steps, r.reached_target), (37, 37, false));
    }

    #[test]
    fn plain_gradient_descent_lowers_fixed_batch_loss() {
        let protos = WorldParams::default().class_prototypes();
        let mut rng = seeded(&[31]);
        let batch = vec![synthetic_view(&mut rng, &protos, 64, 0.8)];
        let mut m = init_model(0, 12, 16);
        let cfg = SgdConfig {
            momentum: 0.0,
            weight_decay: 0.0,
            lr: 1e-3,
            ..SgdConfig::default()
        };
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let (loss, gw, gb) = m.loss_and_grad(&batch);
            assert!(loss <= last + 1e-12);
            last = loss;
            m.apply_sgd(&gw, &gb, &cfg);
        }
    }

    #[test]
    fn flip_reverses_rays() {
        let v = LabeledView {
            features: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            labels: vec![0, 1, 2],
            feature_dim: 2,
        };
        let f = v.flipped();
        assert_eq!(f.features, vec![5.0, 6.0, 3.0, 4.0, 1.0, 2.0]);
        assert_eq!(f.labels, vec![2, 1, 0]);
        assert_eq!(f.flipped(), v);
    }

    fn obs_with_mask(mask: Vec<ClassId>) -> Observation {
        let scene = generate_scene(&WorldParams::default(), 0).unwrap();
        let mut o = render_view(&scene, scene.start_pose());
        o.gt_mask = mask;
        o
    }

    #[test]
    fn top_classes_examples() {
        let v = obs_with_mask([vec![1; 30], vec![2; 34]].concat());
        assert_eq!(top_common_classes(&[v.clone()], 2, 12), vec![1, 2]);
        assert_eq!(top_common_classes(&[v.clone()], 10, 12), vec![1, 2]);
        let v5 = obs_with_mask([vec![5; 40], vec![3; 24]].concat());
        assert_eq!(top_common_classes(&[v5], 1, 12), vec![5]);
        // Tie between 1 and 2 at 32 each goes to 1.
        let tie = obs_with_mask([vec![1; 32], vec![2; 32]].concat());
        assert_eq!(top_common_classes(&[tie], 1, 12), vec![1]);
    }

    #[test]
    fn top_classes_match_histogram() {
        let scene = generate_scene(&WorldParams::default(), 6).unwrap();
        let views = sample_reference_views(&scene, 32, 0);
        let mut hist = std::collections::BTreeMap::new();
        for v in &views {
            for c in &v.gt_mask {
                *hist.entry(*c).or_insert(0usize) += 1;
            }
        }
        let mut ranked: Vec<_> = hist.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut want: Vec<_> = ranked.iter().take(10).map(|(c, _)| *c).collect();
        want.sort();
        assert_eq!(top_common_classes(&views, 10, 12), want);
    }

    #[test]
    fn miou_examples() {
        let truth: Vec<ClassId> = vec![0, 0, 1, 1];
        assert_eq!(miou_from_labels([(truth.as_slice(), truth.as_slice())], &[0, 1]), 1.0);
        let swapped: Vec<ClassId> = vec![1, 1, 0, 0];
        assert_eq!(miou_from_labels([(swapped.as_slice(), truth.as_slice())], &[0, 1]), 0.0);
    }

    #[test]
    fn miou_matches_confusion_matrix_by_hand() {
        // 10 pixels over classes {0, 1, 2}; class 3 is outside the subset.
        let truth: Vec<ClassId> = vec![0, 0, 0, 1, 1, 1, 2, 2, 3, 3];
        let pred: Vec<ClassId> = vec![0, 0, 1, 1, 1, 2, 2, 0, 3, 2];
        // Confusion: class 0 TP 2 FP 1 FN 1 -> 2/4; class 1 TP 2 FP 1 FN 1 -> 2/4;
        // class 2 TP 1 FP 2 FN 1 -> 1/4.
        let want = (0.5 + 0.5 + 0.25) / 3.0;
        let got = miou_from_labels([(pred.as_slice(), truth.as_slice())], &[0, 1, 2]);
        assert!((got - want).abs() < 1e-15);
        // Class 5 never occurs anywhere: excluded from the mean.
        let got = miou_from_labels([(pred.as_slice(), truth.as_slice())], &[0, 1, 2, 5]);
        assert!((got - want).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn miou_ignores_view_order(seed in 0u64..1000, n in 2usize..6) {
            let mut rng = seeded(&[seed]);
            let views: Vec<(Vec<ClassId>, Vec<ClassId>)> = (0..n)
                .map(|_| ((0..16).map(|_| rng.random_range(0..5)).collect(), (0..16).map(|_| rng.random_range(0..5)).collect()))
                .collect();
            let subset = [0, 1, 2, 3];
            let fwd = miou_from_labels(views.iter().map(|(p, t)| (p.as_slice(), t.as_slice())), &subset);
            let rev = miou_from_labels(views.iter().rev().map(|(p, t)| (p.as_slice(), t.as_slice())), &subset);
            prop_assert!((fwd - rev).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&fwd));
        }
    }

    #[test]
    fn warm_start_helps_without_domain_gap() {
        // Identical appearance across scenes: knowledge from scene A transfers to B.
        let params = WorldParams {
            scene_sigma: 0.0,
            ..WorldParams::default()
        };
        let mut wins = 0;
        let trials = 20;
        for seed in 0..trials {
            let a = generate_scene(&params, 100 + seed).unwrap();
            let b = generate_scene(&params, 200 + seed).unwrap();
            let mut m = init_model(seed, params.classes, params.feature_dim);
            let fresh = m.clone();
            let mut ts = TrainSet::default();
            let mut rng = seeded(&[seed, 1]);
            for obs in sample_reference_views(&a, 5, 9) {
                refine(&mut m, &mut ts, LabeledView::from_observation(&obs), &SgdConfig::default(), &mut rng).unwrap();
            }
            let refs = sample_reference_views(&b, 32, 0);
            let subset = top_common_classes(&refs, 10, params.classes);
            if miou(&m, &refs, &subset) > miou(&fresh, &refs, &subset) {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * trials as f64, "{wins}/{trials}");
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut m = init_model(8, 12, 16);
        m.version = 7;
        let back = SegModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let broken = m.to_json().unwrap().replace(MODEL_FORMAT, "nope");
        assert!(SegModel::from_json(&broken).is_err());
    }
}
