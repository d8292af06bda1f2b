//! Core algorithms for evolving voxel soft actuators.

pub mod activation;
pub mod analysis;
pub mod evolution;
pub mod fitness;
pub mod genome;
pub mod hyperneat;
pub mod morphology;
pub mod pipeline;
pub mod protocol;
pub mod simulator;

pub use activation::Activation;
pub use genome::{CppnGenome, GenomeError, InnovationRegistry, NeatParams};
pub use hyperneat::{PaintingConfig, PhenotypeNetwork, SubstrateLayout};
pub use morphology::{decode, normalize_coord, LatticeDims, Morphology, VoxelState};
pub use simulator::{simulate, ControllerScenario, SimConfig, SimStatus, SimulationResult};
pub use fitness::{FitnessConfig, FitnessMode, FitnessValue};
pub use protocol::{EvalError, EvaluationRequest, EvaluationResponse, Evaluator, LocalEvaluator, ResponseStatus};
