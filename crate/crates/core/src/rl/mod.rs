//! The learned annotation agent: rewards, label propagation, the recurrent
//! actor-critic network and its PPO training loops.

pub mod agent;
pub mod net;
pub mod ppo;
pub mod train;
mod propagate;
mod reward;

pub use propagate::propagate_mask;
pub use reward::{
    exploration_reward, perception_reward, perception_reward_from, total_reward, ExplorationStep, RewardConfig,
};
pub use net::{Adam, NetShape, PolicyInput, PolicyNet};
pub use ppo::{clipped_surrogate, gae, ppo_update, PpoConfig, PpoStats, Rollout, Transition};
pub use agent::{encode_state, ray_input_width, RlAgent};
pub use train::{
    curve_csv, pointgoal_success_rate, policy_shape, pretrain_pointgoal, train_lifelong, train_policy, Ablations, CurvePoint,
    EpisodeSummary, PointGoalConfig, PolicyCheckpoint, RlConfig, StageReport, TrainedPolicy,
};
