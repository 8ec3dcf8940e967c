//! State encoding and the learned annotation agent.

use super::net::{PolicyInput, PolicyNet, NAV_INPUTS};
use crate::agents::{AgentPolicy, AgentState};
use crate::error::Error;
use crate::perception::SegMask;
use crate::planner::PolarGoal;
use crate::rng::{self, tag, Rng};
use crate::world::{Action, Observation};
use rand::Rng as _;
use std::f64::consts::PI;

/// Per-ray input width: features, predicted class probabilities, propagated
/// labels with the no-label channel, normalized depth.
pub fn ray_input_width(classes: usize, feature_dim: usize) -> usize {
    feature_dim + classes + (classes + 1) + 1
}

/// Navigation input: scaled distance, scaled bearing and its cosine and sine.
/// Zero when there is no target or navigation input is disabled.
pub fn encode_nav(polar: Option<PolarGoal>) -> [f64; NAV_INPUTS] {
    match polar {
        Some(g) => [g.r / 10.0, g.phi / PI, g.phi.cos(), g.phi.sin()],
        None => [0.0; NAV_INPUTS],
    }
}

pub fn encode_state(
    obs: &Observation,
    seg: &SegMask,
    propagated: &SegMask,
    polar: Option<PolarGoal>,
    depth_scale: f64,
    annotate_allowed: bool,
) -> PolicyInput {
    let n = obs.rays();
    let width = obs.feature_dim + seg.classes + propagated.classes + 1;
    let mut rays = Vec::with_capacity(n * width);
    for r in 0..n {
        rays.extend_from_slice(obs.feature(r));
        rays.extend_from_slice(seg.row(r));
        rays.extend_from_slice(propagated.row(r));
        rays.push(obs.depth[r] / depth_scale);
    }
    PolicyInput {
        rays,
        nav: encode_nav(polar),
        annotate_allowed,
    }
}

/// Samples `probs`; deterministic given the stream.
pub fn sample_action(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn argmax(probs: &[f64]) -> usize {
    probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
        .0
}

/// Recurrent policy acting through [`AgentPolicy`].
#[derive(Clone, Debug)]
pub struct RlAgent {
    pub net: PolicyNet,
    /// Take the most likely action instead of sampling.
    pub greedy: bool,
    /// Feed the polar navigation target; off for agents trained without it.
    pub use_nav: bool,
    pub depth_scale: f64,
    hidden: Vec<f64>,
    rng: Rng,
}

impl RlAgent {
    pub fn new(net: PolicyNet, depth_scale: f64, use_nav: bool) -> Self {
        let hidden = net.zero_hidden();
        Self {
            net,
            greedy: false,
            use_nav,
            depth_scale,
            hidden,
            rng: rng::seeded(&[0, tag::AGENT]),
        }
    }

    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }
}

impl AgentPolicy for RlAgent {
    fn name(&self) -> &str {
        "rl"
    }

    fn reset(&mut self, seed: u64) {
        self.hidden = self.net.zero_hidden();
        self.rng = rng::seeded(&[seed, tag::AGENT]);
    }

    fn act(&mut self, state: &AgentState) -> Result<Action, Error> {
        let polar = if self.use_nav { state.polar } else { None };
        let input = encode_state(state.obs, state.seg, state.propagated, polar, self.depth_scale, true);
        let fwd = self.net.forward(&input, &self.hidden)?;
        let a = if self.greedy {
            argmax(&fwd.probs)
        } else {
            sample_action(&fwd.probs, &mut self.rng)
        };
        self.hidden = fwd.hidden;
        Action::from_index(a).ok_or_else(|| Error::InvalidAction {
            agent: "rl".into(),
            step: state.step,
            detail: format!("action index {a}"),
        })
    }
}
