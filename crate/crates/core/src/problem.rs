//! The problem abstraction shared by every domain.

use rand::RngCore;

use crate::error::Result;
use crate::reward::ErrorVector;

/// A problem domain the evolutionary loop can drive: it creates, varies and
/// scores genomes. The mutation strength is whatever rate the active
/// controller hands out.
pub trait Problem: Sync {
    type Genome: Clone + Send + Sync + PartialEq + std::fmt::Debug;

    fn name(&self) -> String;

    fn random_genome(&self, rng: &mut dyn RngCore) -> Self::Genome;

    fn evaluate(&self, genome: &Self::Genome) -> Result<ErrorVector>;

    fn mutate(&self, genome: &Self::Genome, rate: f64, rng: &mut dyn RngCore) -> Result<Self::Genome>;

    /// Whether `errors` counts as a solution. Problems without a success
    /// criterion never solve.
    fn is_solved(&self, _errors: &ErrorVector) -> bool {
        false
    }
}
