//! Dual-rail gadgets driven by the clock ⟨d,l,u,r⟩.
//!
//! Every gadget is a fixture pair: a TWF template holding the rock and any
//! internal particles, and a JSON sidecar naming the ports, the rail groups
//! and the expected truth table. Inputs sit at the top of entry columns,
//! outputs are cells with a free column straight down to the bottom row, so
//! gadgets stack with a wire band in between.
//!
//! A port reads as set when a unit particle covers it. Sliders encode state,
//! never signals.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Deserialize;

use crate::sim::{parse_moves, Cell, Move, Particle, Shape, Workspace, CLOCK};
use crate::twf;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GateError {
    #[error("gadget {name}: {msg}")]
    Fixture { name: String, msg: String },
    #[error("expected {want} input bits, got {got}")]
    Arity { want: usize, got: usize },
    #[error("rail group {group} has {set} of its ports set, expected exactly one")]
    IllegalRails { group: String, set: usize },
    #[error("gadget {0} holds state; pass the current value")]
    MissingState(String),
    #[error("no gadget named {0}")]
    Unknown(String),
    #[error("fan-out needs at least 2 outputs, got {0}")]
    FanoutTooSmall(usize),
    #[error("no fan-out fixture for {0} outputs (shipped: 2 to {max})", max = FANOUT_MAX)]
    FanoutUnavailable(usize),
    #[error("cannot route a wire with offset {0}")]
    Unroutable(i32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Port {
    pub name: String,
    pub cell: Cell,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthRow {
    /// Input port occupancy, in input-port order.
    pub inputs: Vec<bool>,
    /// Output port occupancy, in output-port order.
    pub outputs: Vec<bool>,
    /// For stateful gadgets, the state before and after the clock.
    pub state: Option<(bool, bool)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TruthTable {
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn lookup(&self, inputs: &[bool], state: Option<bool>) -> Option<&TruthRow> {
        self.rows.iter().find(|r| r.inputs == inputs && r.state.map(|s| s.0) == state)
    }
}

/// Where the state-holding slider rests for each stored value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSlider {
    pub particle: String,
    pub off: Cell,
    pub on: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub name: String,
    /// Obstacles and internal particles; input particles are not included.
    /// For stateful gadgets the slider is in its `off` position.
    pub template: Workspace,
    pub ports: Vec<Port>,
    /// Rail groups as indices into the input ports. A legal input sets
    /// exactly one port per group; ports outside every group are free bits.
    pub groups: Vec<Vec<usize>>,
    pub clock: Vec<Move>,
    pub truth_table: TruthTable,
    pub state: Option<StateSlider>,
    /// Dead-end cells where surplus particles park.
    pub waste: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub outputs: Vec<bool>,
    pub state: Option<bool>,
    pub after: Workspace,
}

impl Gadget {
    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn input_count(&self) -> usize {
        self.inputs().count()
    }

    pub fn output_count(&self) -> usize {
        self.outputs().count()
    }

    pub fn size(&self) -> (usize, usize) {
        (self.template.width(), self.template.height())
    }

    pub fn has_slider(&self) -> bool {
        self.template.particles().iter().any(|p| p.shape != Shape::Unit)
    }

    pub fn is_stateful(&self) -> bool {
        self.state.is_some()
    }

    pub fn check_inputs(&self, bits: &[bool]) -> Result<(), GateError> {
        let want = self.input_count();
        if bits.len() != want {
            return Err(GateError::Arity { want, got: bits.len() });
        }
        let names: Vec<&str> = self.inputs().map(|p| p.name.as_str()).collect();
        for g in &self.groups {
            let set = g.iter().filter(|&&i| bits[i]).count();
            if set != 1 {
                let group = g.iter().map(|&i| names[i]).collect::<Vec<_>>().join("/");
                return Err(GateError::IllegalRails { group, set });
            }
        }
        Ok(())
    }

    /// Every legal input vector, in the order the truth table lists them.
    pub fn legal_inputs(&self) -> Vec<Vec<bool>> {
        let n = self.input_count();
        let grouped: Vec<usize> = self.groups.iter().flatten().copied().collect();
        let loose: Vec<usize> = (0..n).filter(|i| !grouped.contains(i)).collect();
        let mut out = Vec::new();
        let mut pick = vec![0usize; self.groups.len()];
        loop {
            for mask in 0..1u32 << loose.len() {
                let mut v = vec![false; n];
                for (g, &k) in self.groups.iter().zip(&pick) {
                    v[g[k]] = true;
                }
                for (j, &i) in loose.iter().enumerate() {
                    v[i] = mask >> (loose.len() - 1 - j) & 1 == 1;
                }
                out.push(v);
            }
            // odometer over the groups, last group fastest
            let mut k = self.groups.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                pick[k] += 1;
                if pick[k] < self.groups[k].len() {
                    break;
                }
                pick[k] = 0;
            }
        }
    }

    /// The template with input particles placed and the slider set to `state`.
    pub fn load(&self, bits: &[bool], state: Option<bool>) -> Result<Workspace, GateError> {
        self.check_inputs(bits)?;
        let mut w = self.template.clone();
        if let Some(s) = &self.state {
            let q = state.ok_or_else(|| GateError::MissingState(self.name.clone()))?;
            let slider = w.remove_particle(&s.particle).expect("fixture validated");
            let mut moved = slider.clone();
            moved.anchor = if q { s.on } else { s.off };
            w.add_particle(moved).map_err(|e| self.fixture_err(format!("{e}")))?;
        }
        for (i, p) in self.inputs().enumerate() {
            if bits[i] {
                let id = format!("in{i}");
                w.add_particle(Particle::unit(id, char::from(b'p' + (i as u8 % 10)), p.cell))
                    .map_err(|e| self.fixture_err(format!("{e}")))?;
            }
        }
        Ok(w)
    }

    pub fn read_outputs(&self, w: &Workspace) -> Vec<bool> {
        self.outputs().map(|p| matches!(w.occupant(p.cell), Some(q) if q.shape == Shape::Unit)).collect()
    }

    pub fn read_state(&self, w: &Workspace) -> Option<bool> {
        self.state.as_ref().map(|s| w.particle(&s.particle).is_some_and(|p| p.anchor == s.on))
    }

    fn fixture_err(&self, msg: String) -> GateError {
        GateError::Fixture { name: self.name.clone(), msg }
    }
}

/// Places the inputs, runs one clock and reads the outputs.
pub fn evaluate_gadget(g: &Gadget, inputs: &[bool]) -> Result<Vec<bool>, GateError> {
    Ok(evaluate_with_state(g, inputs, None)?.outputs)
}

pub fn evaluate_with_state(g: &Gadget, inputs: &[bool], state: Option<bool>) -> Result<Evaluation, GateError> {
    let w = g.load(inputs, state)?;
    let after = w.apply_sequence(&g.clock);
    Ok(Evaluation { outputs: g.read_outputs(&after), state: g.read_state(&after), after })
}

#[derive(Deserialize)]
struct SideCar {
    name: String,
    clock: String,
    ports: Vec<SidePort>,
    groups: Vec<Vec<String>>,
    truth_table: Vec<SideRow>,
    #[serde(default)]
    state: Option<SideState>,
    #[serde(default)]
    waste: Vec<[i32; 2]>,
}

#[derive(Deserialize)]
struct SidePort {
    name: String,
    cell: [i32; 2],
    direction: String,
}

#[derive(Deserialize)]
struct SideRow {
    #[serde(rename = "in")]
    inputs: serde_json::Map<String, serde_json::Value>,
    out: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    q: Option<u8>,
    #[serde(default)]
    q_next: Option<u8>,
}

#[derive(Deserialize)]
struct SideState {
    particle: String,
    #[serde(rename = "false")]
    off: [i32; 2],
    #[serde(rename = "true")]
    on: [i32; 2],
}

fn bit(m: &serde_json::Map<String, serde_json::Value>, name: &str) -> Option<bool> {
    match m.get(name)?.as_u64()? {
        0 => Some(false),
        1 => Some(true),
        _ => None,
    }
}

/// Builds a gadget from a TWF template and its JSON sidecar.
pub fn load_fixture(twf_text: &str, json_text: &str) -> Result<Gadget, GateError> {
    let side: SideCar = serde_json::from_str(json_text)
        .map_err(|e| GateError::Fixture { name: "?".to_owned(), msg: format!("sidecar: {e}") })?;
    let name = side.name.clone();
    let err = |msg: String| GateError::Fixture { name: name.clone(), msg };
    let template = twf::parse(twf_text).map_err(|e| err(format!("template: {e}")))?;
    let clock = parse_moves(&side.clock).map_err(|e| err(format!("clock: {e}")))?;

    let mut ports = Vec::new();
    for p in &side.ports {
        let direction = match p.direction.as_str() {
            "input" => Direction::Input,
            "output" => Direction::Output,
            other => return Err(err(format!("port {} has direction {other:?}", p.name))),
        };
        let cell = Cell::new(p.cell[0], p.cell[1]);
        if !template.in_bounds(cell) || template.is_obstacle(cell) {
            return Err(err(format!("port {} sits on rock at ({},{})", p.name, cell.x, cell.y)));
        }
        ports.push(Port { name: p.name.clone(), cell, direction });
    }
    let in_names: Vec<&str> =
        ports.iter().filter(|p| p.direction == Direction::Input).map(|p| p.name.as_str()).collect();
    let out_names: Vec<&str> =
        ports.iter().filter(|p| p.direction == Direction::Output).map(|p| p.name.as_str()).collect();

    let mut groups = Vec::new();
    for g in &side.groups {
        let mut idx = Vec::new();
        for n in g {
            let i = in_names.iter().position(|m| m == n).ok_or_else(|| err(format!("group names unknown input {n}")))?;
            idx.push(i);
        }
        groups.push(idx);
    }

    let mut rows = Vec::new();
    for (k, r) in side.truth_table.iter().enumerate() {
        let read = |m, names: &[&str]| -> Result<Vec<bool>, GateError> {
            names.iter().map(|n| bit(m, n).ok_or_else(|| err(format!("row {k}: no bit for {n}")))).collect()
        };
        let state = match (r.q, r.q_next) {
            (Some(a), Some(b)) => Some((a == 1, b == 1)),
            (None, None) => None,
            _ => return Err(err(format!("row {k}: q and q_next must come together"))),
        };
        rows.push(TruthRow { inputs: read(&r.inputs, &in_names)?, outputs: read(&r.out, &out_names)?, state });
    }

    let state = side.state.as_ref().map(|s| StateSlider {
        particle: s.particle.clone(),
        off: Cell::new(s.off[0], s.off[1]),
        on: Cell::new(s.on[0], s.on[1]),
    });
    if let Some(s) = &state {
        match template.particle(&s.particle) {
            Some(p) if p.anchor == s.off => {}
            _ => return Err(err(format!("slider {} is not at its off position", s.particle))),
        }
    }
    let waste = side.waste.iter().map(|c| Cell::new(c[0], c[1])).collect();
    Ok(Gadget { name: side.name, template, ports, groups, clock, truth_table: TruthTable { rows }, state, waste })
}

macro_rules! fixture {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!("../gadgets/", $name, ".twf")),
            include_str!(concat!("../gadgets/", $name, ".json")),
        )
    };
}

const FIXTURES: &[(&str, &str, &str)] = &[
    fixture!("buffer"),
    fixture!("not"),
    fixture!("universal"),
    fixture!("xor"),
    fixture!("fanout2"),
    fixture!("fanout3"),
    fixture!("fanout4"),
    fixture!("fanout5"),
    fixture!("latch"),
];

pub const FANOUT_MAX: usize = 5;

pub fn gadget_names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|f| f.0)
}

/// The raw fixture texts, TWF then JSON.
pub fn fixture_text(name: &str) -> Option<(&'static str, &'static str)> {
    FIXTURES.iter().find(|f| f.0 == name).map(|f| (f.1, f.2))
}

pub fn gadget(name: &str) -> Result<Gadget, GateError> {
    let (t, j) = fixture_text(name).ok_or_else(|| GateError::Unknown(name.to_owned()))?;
    load_fixture(t, j)
}

pub fn catalog() -> Vec<Gadget> {
    gadget_names().map(|n| gadget(n).expect("shipped fixtures load")).collect()
}

/// Passes one rail through unchanged; used to delay a signal by a stage.
pub fn buffer() -> Gadget {
    gadget("buffer").expect("shipped fixture")
}

/// Inputs A, ~A. Outputs ~A, A: the rails trade places.
pub fn not_gate() -> Gadget {
    gadget("not").expect("shipped fixture")
}

/// Inputs A, ~A, B, ~B. Outputs OR, AND, NAND, NOR.
pub fn universal_gate() -> Gadget {
    gadget("universal").expect("shipped fixture")
}

/// Inputs A, ~A, B, ~B. Outputs XOR, XNOR, ONE, ZERO.
pub fn xor_gate() -> Gadget {
    gadget("xor").expect("shipped fixture")
}

/// Input A, ~A plus `n - 1` supply particles and a 2x1 slider.
/// Outputs A.1..A.n then ~A.1..~A.n.
pub fn fanout_gate(n: usize) -> Result<Gadget, GateError> {
    if n < 2 {
        return Err(GateError::FanoutTooSmall(n));
    }
    if n > FANOUT_MAX {
        return Err(GateError::FanoutUnavailable(n));
    }
    gadget(&format!("fanout{n}"))
}

/// Tri-rail inputs S (set), C (clear), R (read). Outputs M, ~M carry the
/// stored value after the operation. The slider rests low for true.
pub fn memory_latch() -> Gadget {
    gadget("latch").expect("shipped fixture")
}

/// The clock every catalog gadget uses.
pub fn clock() -> Vec<Move> {
    CLOCK.to_vec()
}

/// One wire for one clock cycle: drop from `src` to the `floor` row, slide
/// left to the `riser` column, rise to the `ceiling` row and slide right to
/// `dst_x`. When `dst_x == src.x` the wire parks: the delivered cell lies on
/// the drop column, so every later cycle returns the particle to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WireRoute {
    pub src: Cell,
    pub floor: i32,
    pub riser: i32,
    pub ceiling: i32,
    pub dst_x: i32,
    /// Lowest row of the entry column below the delivered cell, if any.
    pub entry_bottom: Option<i32>,
}

impl WireRoute {
    pub fn dest(&self) -> Cell {
        Cell::new(self.dst_x, self.ceiling)
    }

    pub fn is_parking(&self) -> bool {
        self.dst_x == self.src.x
    }

    pub fn check(&self) -> Result<(), GateError> {
        let bad = || GateError::Unroutable(self.dst_x - self.src.x);
        let lo = self.src.x.min(self.dst_x);
        let ok = self.floor < self.ceiling
            && self.floor < self.src.y
            && self.riser < lo
            && if self.is_parking() {
                self.riser == self.src.x - 1 && self.ceiling < self.src.y
            } else {
                // a stopper left of the drop column must not sit on it
                self.dst_x > self.src.x || self.dst_x + 1 < self.src.x
            };
        if ok {
            Ok(())
        } else {
            Err(bad())
        }
    }

    /// Cells the particle may pass through.
    pub fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        let (s, f, x0, c) = (self.src, self.floor, self.riser, self.ceiling);
        out.extend((f..=s.y).map(|y| Cell::new(s.x, y)));
        out.extend((x0..s.x).map(|x| Cell::new(x, f)));
        out.extend((f + 1..=c).map(|y| Cell::new(x0, y)));
        out.extend((x0 + 1..=self.dst_x).map(|x| Cell::new(x, c)));
        if let Some(b) = self.entry_bottom {
            out.extend((b..c).map(|y| Cell::new(self.dst_x, y)));
        }
        out
    }

    /// Cells that must be rock for the wire to stop where it should.
    pub fn stop_cells(&self) -> [Cell; 4] {
        [
            Cell::new(self.src.x, self.floor - 1),
            Cell::new(self.riser - 1, self.floor),
            Cell::new(self.riser, self.ceiling + 1),
            Cell::new(self.dst_x + 1, self.ceiling),
        ]
    }
}

/// A stand-alone wire fragment with the source cell on the top row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interconnect {
    pub workspace: Workspace,
    pub route: WireRoute,
    pub source: Cell,
    pub dest: Cell,
}

/// Builds a one-cycle wire whose destination column is `offset` columns
/// right of the source. Offset 0 parks the particle below the source.
/// Offset -1 cannot be built: the rightward slide on the ceiling row would
/// always run into the drop column.
pub fn interconnect(offset: i32) -> Result<Interconnect, GateError> {
    if offset == -1 {
        return Err(GateError::Unroutable(offset));
    }
    let sx = 2 + (-offset).max(0);
    let dx = sx + offset;
    let route =
        WireRoute { src: Cell::new(sx, 4), floor: 1, riser: sx.min(dx) - 1, ceiling: 3, dst_x: dx, entry_bottom: None };
    route.check()?;
    let width = (sx.max(dx) + 3) as usize;
    let mut w = Workspace::open(width, 6);
    for y in 0..6 {
        for x in 0..width as i32 {
            w.set_obstacle(Cell::new(x, y));
        }
    }
    for c in route.free_cells() {
        w.clear_obstacle(c);
    }
    Ok(Interconnect { workspace: w, route, source: route.src, dest: route.dest() })
}
