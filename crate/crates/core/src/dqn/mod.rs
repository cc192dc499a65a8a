//! Deep Q-learning tester.

pub mod agent;
pub mod driving;
pub mod memory;
pub mod network;
pub mod state;
pub mod toy;

pub use agent::{run_training, Agent, EpsilonSchedule, TrainConfig, TrainingLog};
pub use state::{encode_state, StateVector, STATE_LEN};
