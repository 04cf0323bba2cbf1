//! Reference three-unit posture model (stand, lie, sit) with trained weights
//! from the hardware build. Inputs are pitch (0), roll (1) and bias (2).

use crate::model_io;
use crate::neuron::Network;

pub const TABLE1_JSON: &str = include_str!("../models/table1.json");

/// Upper resistance bound the reference model was trained against.
pub const TABLE1_R_MAX: f64 = 1000e3;

pub fn table1() -> Network {
    model_io::from_json(TABLE1_JSON).expect("bundled model is valid")
}

/// The reference model with every synapse at the resistance ceiling removed.
pub fn table1_pruned() -> Network {
    crate::training::prune(&table1(), TABLE1_R_MAX, crate::training::DEFAULT_PRUNE_FRACTION)
}
