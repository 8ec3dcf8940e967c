use crate::perception::{init_model, miou, top_common_classes, LabeledView, SegModel, SgdConfig};
use crate::rng::{self, tag};
use crate::world::{render_view, sample_poses, sample_reference_views, Scene};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub sgd: SgdConfig,
    /// SGD steps over random minibatches of the pooled views.
    pub iterations: usize,
    pub ref_views: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            sgd: SgdConfig::default(),
            iterations: 3000,
            ref_views: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainResult {
    pub model: SegModel,
    /// Mean over test scenes of reference-view mIoU.
    pub test_miou: f64,
    pub per_scene: Vec<f64>,
}

/// `n_views` annotated views drawn round-robin over scenes at random poses.
pub fn pooled_views(scenes: &[Scene], n_views: usize, seed: u64) -> Vec<LabeledView> {
    if scenes.is_empty() {
        return Vec::new();
    }
    let mut rng = rng::seeded(&[seed, tag::PRETRAIN_VIEWS]);
    (0..n_views)
        .map(|i| {
            let scene = &scenes[i % scenes.len()];
            let pose = sample_poses(scene, 1, rng.random())[0];
            LabeledView::from_observation(&render_view(scene, pose))
        })
        .collect()
}

/// Trains one model offline on views pooled from `train` and scores it on
/// the reference views of each `test` scene.
pub fn pretrain_baseline(train: &[Scene], n_views: usize, test: &[Scene], cfg: &PretrainConfig, seed: u64) -> PretrainResult {
    let (classes, dim) = train
        .first()
        .or(test.first())
        .map_or((1, 1), |s| (s.classes, s.feature_dim()));
    let mut model = init_model(seed, classes, dim);
    let views = pooled_views(train, n_views, seed);
    if !views.is_empty() {
        let mut rng = rng::seeded(&[seed, tag::REFINE]);
        for _ in 0..cfg.iterations {
            let batch: Vec<LabeledView> = (0..cfg.sgd.batch_size.min(views.len()).max(1))
                .map(|_| {
                    let v = &views[rng.random_range(0..views.len())];
                    if rng.random_bool(cfg.sgd.flip_prob.clamp(0.0, 1.0)) {
                        v.flipped()
                    } else {
                        v.clone()
                    }
                })
                .collect();
            let (_, gw, gb) = model.loss_and_grad(&batch);
            model.apply_sgd(&gw, &gb, &cfg.sgd);
        }
        model.version += 1;
    }
    let per_scene: Vec<f64> = test
        .iter()
        .map(|s| {
            let refs = sample_reference_views(s, cfg.ref_views, 0);
            let subset = top_common_classes(&refs, s.top_k, s.classes);
            miou(&model, &refs, &subset)
        })
        .collect();
    let test_miou = if per_scene.is_empty() {
        0.0
    } else {
        per_scene.iter().sum::<f64>() / per_scene.len() as f64
    };
    PretrainResult {
        model,
        test_miou,
        per_scene,
    }
}
