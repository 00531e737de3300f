use crate::error::Result;
use crate::ArmId;

/// A dueling-bandit learner driven one comparison at a time.
///
/// `propose` returns two distinct arms, or `None` once the learner has
/// settled on a single arm. `observe` is the only way to feed it results.
pub trait DuelingPolicy: Send {
    fn name(&self) -> &str;

    fn propose(&mut self) -> Option<(ArmId, ArmId)>;

    fn observe(&mut self, first: ArmId, second: ArmId, winner: ArmId) -> Result<()>;

    /// The arm the learner currently believes is best.
    fn recommend(&self) -> ArmId;
}
