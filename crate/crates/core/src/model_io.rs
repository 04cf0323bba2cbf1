//! JSON persistence for [`Network`].
//!
//! Floats go through `serde_json`'s shortest round-trip formatting, so a
//! save/load cycle reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{IfNeuron, Network, Polarity, Synapse};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub n_inputs: usize,
    pub supply_voltage: f64,
    pub t_max: f64,
    pub threshold: f64,
    pub capacitance: f64,
    pub neurons: Vec<NeuronRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronRecord {
    pub label: String,
    pub synapses: Vec<SynapseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseRecord {
    pub input_index: usize,
    pub polarity: Polarity,
    pub resistance_ohms: f64,
}

impl ModelFile {
    pub fn from_network(net: &Network) -> Result<Self> {
        let capacitance = match net.neurons().first() {
            Some(n) => n.capacitance(),
            None => crate::neuron::DEFAULT_CAPACITANCE,
        };
        if net.neurons().iter().any(|n| n.capacitance() != capacitance) {
            return Err(Error::Model(
                "the model format stores one capacitance; neurons disagree".into(),
            ));
        }
        Ok(Self {
            schema_version: MODEL_SCHEMA_VERSION,
            n_inputs: net.n_inputs(),
            supply_voltage: net.supply_voltage(),
            t_max: net.t_max(),
            threshold: net.threshold(),
            capacitance,
            neurons: net
                .neurons()
                .iter()
                .map(|n| NeuronRecord {
                    label: n.label().to_owned(),
                    synapses: n
                        .synapses()
                        .iter()
                        .map(|s| SynapseRecord {
                            input_index: s.input_index,
                            polarity: s.polarity,
                            resistance_ohms: s.resistance,
                        })
                        .collect(),
                })
                .collect(),
        })
    }

    pub fn into_network(self) -> Result<Network> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "unsupported schema_version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let neurons = self
            .neurons
            .into_iter()
            .map(|n| {
                let synapses = n
                    .synapses
                    .iter()
                    .map(|s| Synapse::new(s.input_index, s.polarity, s.resistance_ohms))
                    .collect::<Result<Vec<_>>>()?;
                IfNeuron::new(n.label, self.capacitance, synapses)
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(
            neurons,
            self.n_inputs,
            self.supply_voltage,
            self.t_max,
            self.threshold,
        )
    }
}

pub fn to_json(net: &Network) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_network(net)?)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<Network> {
    serde_json::from_str::<ModelFile>(s)?.into_network()
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use proptest::prelude::*;

    #[test]
    fn bundled_model_round_trips() {
        let net = bundled::table1();
        assert_eq!(from_json(&to_json(&net).unwrap()).unwrap(), net);
    }

    #[test]
    fn rejects_unknown_schema() {
        let mut m = ModelFile::from_network(&bundled::table1()).unwrap();
        m.schema_version = 9;
        let text = serde_json::to_string(&m).unwrap();
        assert!(matches!(from_json(&text), Err(Error::Model(_))));
    }

    #[test]
    fn rejects_nonpositive_resistance() {
        let text = bundled::TABLE1_JSON.replacen("20330.0", "-1.0", 1);
        assert!(from_json(&text).is_err());
    }

    proptest! {
        #[test]
        fn resistances_survive_round_trip(rs in proptest::collection::vec(1e-3..1e9f64, 6),
                                          c in 1e-12..1.0f64, t in 1e-6..10.0f64) {
            let net = Network::fully_connected(&["a"], 2, c, |_, i, p| {
                rs[i + if p == Polarity::Excitatory { 0 } else { 3 }]
            })
            .unwrap()
            .with_t_max(t)
            .unwrap();
            let back = from_json(&to_json(&net).unwrap()).unwrap();
            prop_assert_eq!(back, net);
        }
    }
}
