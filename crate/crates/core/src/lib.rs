//! Integrate-and-fire neurons built from switched resistor-capacitor
//! circuits: exact simulation, resistance training, pruning, and analysis
//! of how a hardware build deviates from the model.

pub mod bundled;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod hardware;
pub mod model_io;
pub mod neuron;
pub mod ode;
pub mod rc;
pub mod training;

pub use error::{Error, Result};
pub use neuron::{IfNeuron, Network, Polarity, StimulationSchedule, Synapse};
