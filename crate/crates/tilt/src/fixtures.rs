//! Named workspaces shipped with the binary: the gadget catalog, the two
//! particle puzzles and a 3-bit counter.

use serde_json::{json, Value};
use tilt_core::circuit::{build_counter, counter_state};
use tilt_core::{gates, twf, Workspace};

use crate::json;

pub const PAIR_SOLVABLE: &str = include_str!("../../tilt-core/fixtures/pair-solvable.twf");
pub const PAIR_UNSOLVABLE: &str = include_str!("../../tilt-core/fixtures/pair-unsolvable.twf");

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub kind: &'static str,
    pub workspace: Workspace,
    /// Kind-specific metadata: ports and truth table for gadgets, the
    /// clock budget for counters.
    pub info: Value,
}

impl Fixture {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "kind": self.kind,
            "width": self.workspace.width(),
            "height": self.workspace.height(),
            "workspace": json::to_value(&self.workspace),
            "info": self.info,
        })
    }
}

pub fn puzzles() -> Vec<Fixture> {
    [("pair-solvable", PAIR_SOLVABLE), ("pair-unsolvable", PAIR_UNSOLVABLE)]
        .into_iter()
        .map(|(name, text)| Fixture {
            name: name.into(),
            kind: "puzzle",
            workspace: twf::parse(text).expect("shipped fixture"),
            info: json!({}),
        })
        .collect()
}

pub fn gadgets() -> Vec<Fixture> {
    gates::gadget_names()
        .map(|name| {
            let (_, side) = gates::fixture_text(name).expect("listed");
            let g = gates::gadget(name).expect("shipped fixture");
            Fixture {
                name: name.into(),
                kind: "gadget",
                workspace: g.template,
                info: serde_json::from_str(side).expect("shipped sidecar"),
            }
        })
        .collect()
}

/// An n-bit counter at zero. One count takes `cycles_per_count` clock
/// cycles.
pub fn counter(n: usize) -> Fixture {
    let c = build_counter(n).expect("supported width");
    let workspace = c.load(&counter_state(n, 0)).expect("state names");
    let state: serde_json::Map<String, Value> = c
        .outputs
        .iter()
        .map(|(k, r)| (k.clone(), json!({"pos": [r.pos.x, r.pos.y], "neg": [r.neg.x, r.neg.y]})))
        .collect();
    Fixture {
        name: format!("counter{n}"),
        kind: "counter",
        workspace,
        info: json!({
            "bits": n,
            "cycles_per_count": c.cycles_per_evaluation,
            "moves_per_count": c.moves_per_evaluation(),
            "state_rails": state,
            "inventory": c.inventory,
        }),
    }
}

pub fn all() -> Vec<Fixture> {
    let mut v = gadgets();
    v.extend(puzzles());
    v.push(counter(3));
    v
}

pub fn find(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
