//! Frontier exploration with a motion-only agent, printing the occupancy map
//! as it grows.

use embal::agents::{motion_controller, AgentPolicy, AgentState};
use embal::harness::{fresh_model, Env, EnvConfig};
use embal::perception::TrainSet;
use embal::world::{generate_scene, Action, WorldParams};

/// Follows the navigator and never annotates.
struct Walker;

impl AgentPolicy for Walker {
    fn name(&self) -> &str {
        "walker"
    }
    fn reset(&mut self, _seed: u64) {}
    fn act(&mut self, state: &AgentState) -> embal::Result<Action> {
        Ok(motion_controller(state.polar, state.turn_angle))
    }
}

fn main() -> embal::Result<()> {
    let scene = generate_scene(&WorldParams::default(), 3)?;
    let mut env = Env::new(&scene, fresh_model(0, &scene), TrainSet::default(), EnvConfig::default(), 0, "walker")?;
    let mut agent = Walker;
    let mut next_dump = 0;
    while !env.is_done() {
        if env.steps_taken() >= next_dump {
            println!("step {} explored {:.0} m^2\n{}", env.steps_taken(), env.map().explored_area(), env.map().to_ascii());
            next_dump += 60;
        }
        let a = agent.act(&env.state())?;
        env.step(a)?;
    }
    let (log, _, _) = env.into_parts();
    println!(
        "finished after {} steps ({:?}): {:.0} of {:.0} m^2\n{}",
        log.steps.len(),
        log.termination,
        log.final_area(),
        log.total_area,
        log.final_map
    );
    Ok(())
}
