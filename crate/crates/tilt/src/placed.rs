//! JSON file format for placed circuits, as written by `tilt compile` and
//! read by `tilt run`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tilt_core::circuit::{InputPort, PlacedCircuit, RailCells};
use tilt_core::Cell;

use crate::json::{JsonError, WorkspaceJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RailsJson {
    pub pos: [i32; 2],
    pub neg: [i32; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputJson {
    #[serde(flatten)]
    pub rails: RailsJson,
    pub particle: String,
    pub label: char,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedJson {
    pub workspace: WorkspaceJson,
    pub stage_count: usize,
    pub cycles_per_evaluation: usize,
    pub input_names: Vec<String>,
    pub inputs: BTreeMap<String, InputJson>,
    pub outputs: BTreeMap<String, RailsJson>,
    pub feedback: bool,
    pub inventory: BTreeMap<String, usize>,
}

fn rails_to(r: RailCells) -> RailsJson {
    RailsJson { pos: [r.pos.x, r.pos.y], neg: [r.neg.x, r.neg.y] }
}

fn rails_from(r: RailsJson) -> RailCells {
    RailCells { pos: Cell::new(r.pos[0], r.pos[1]), neg: Cell::new(r.neg[0], r.neg[1]) }
}

impl From<&PlacedCircuit> for PlacedJson {
    fn from(c: &PlacedCircuit) -> Self {
        PlacedJson {
            workspace: WorkspaceJson::from(&c.workspace),
            stage_count: c.stage_count,
            cycles_per_evaluation: c.cycles_per_evaluation,
            input_names: c.input_names.clone(),
            inputs: c
                .inputs
                .iter()
                .map(|(k, p)| {
                    (k.clone(), InputJson { rails: rails_to(p.rails), particle: p.particle.clone(), label: p.label })
                })
                .collect(),
            outputs: c.outputs.iter().map(|(k, r)| (k.clone(), rails_to(*r))).collect(),
            feedback: c.feedback,
            inventory: c.inventory.clone(),
        }
    }
}

impl PlacedJson {
    pub fn to_circuit(&self) -> Result<PlacedCircuit, JsonError> {
        Ok(PlacedCircuit {
            workspace: self.workspace.to_workspace()?,
            stage_count: self.stage_count,
            cycles_per_evaluation: self.cycles_per_evaluation,
            input_names: self.input_names.clone(),
            inputs: self
                .inputs
                .iter()
                .map(|(k, p)| {
                    (k.clone(), InputPort { rails: rails_from(p.rails), particle: p.particle.clone(), label: p.label })
                })
                .collect(),
            outputs: self.outputs.iter().map(|(k, r)| (k.clone(), rails_from(*r))).collect(),
            feedback: self.feedback,
            inventory: self.inventory.clone(),
        })
    }
}

pub fn serialize(c: &PlacedCircuit) -> String {
    serde_json::to_string_pretty(&PlacedJson::from(c)).expect("plain data")
}

pub fn parse(text: &str) -> Result<PlacedCircuit, JsonError> {
    serde_json::from_str::<PlacedJson>(text)?.to_circuit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = tilt_core::circuit::compile("INPUT a b\nx = XOR a b\nOUTPUT x\n", false).unwrap();
        assert_eq!(parse(&serialize(&c)).unwrap(), c);
        let k = tilt_core::circuit::build_counter(2).unwrap();
        assert_eq!(parse(&serialize(&k)).unwrap(), k);
    }
}
