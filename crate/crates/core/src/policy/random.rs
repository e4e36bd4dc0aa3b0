use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionMap, BehaviorAction, Policy, StepContext};
use crate::error::ProtocolError;
use crate::world::{VehicleId, World};

/// Uniform action drawn from a stream keyed by `(seed, step, vehicle)`, so
/// the draw does not depend on iteration order or on the observation.
pub fn random_action(seed: u64, step: u64, id: VehicleId) -> BehaviorAction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng.set_word_pos(u128::from(id.0) * 16);
    BehaviorAction::ALL[rng.gen_range(0..BehaviorAction::ALL.len())]
}

#[derive(Debug, Clone, Default)]
pub struct RandomPolicy {
    /// Fixed seed; the episode seed is used when absent.
    pub seed: Option<u64>,
    active: u64,
}

impl RandomPolicy {
    pub fn new(seed: Option<u64>) -> Self {
        Self { seed, active: 0 }
    }
}

impl Policy for RandomPolicy {
    fn begin(&mut self, _world: &World, seed: u64) -> Result<(), ProtocolError> {
        self.active = self.seed.unwrap_or(seed);
        Ok(())
    }

    fn act(&mut self, ctx: &StepContext<'_>) -> Result<ActionMap, ProtocolError> {
        Ok(ctx
            .world
            .live()
            .map(|v| (v.id, random_action(self.active, ctx.step, v.id)))
            .collect())
    }
}
