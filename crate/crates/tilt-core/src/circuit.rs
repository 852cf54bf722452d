//! Boolean netlists compiled to particle workspaces.
//!
//! Gates are levelled by depth and level k becomes band k, a row of gadgets
//! with their tops aligned. Below every band a wiring region moves each
//! particle on to the next band in one clock cycle: it drops out of its
//! output column onto a private floor row, slides left to a private riser,
//! rises to a private ceiling row and slides right until it stops over the
//! consumer's entry. A value that skips a level passes through buffers, so
//! every particle spends exactly two cycles per level.
//!
//! Rails nobody consumes end in sinks at the right edge of their region:
//! small loops that return the particle to the same cell every cycle.
//! Circuit outputs are read from sinks too. With feedback the last region
//! wires back over the first band instead, and the constant outputs are
//! recycled as the fan-out supplies of the next evaluation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::carve::Carve;
use crate::gates::{self, Direction, Gadget, GateError, FANOUT_MAX};
use crate::sim::{Cell, Move, Particle, Scratch, Shape, Workspace, CLOCK};

pub const MAX_DIMENSION: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("signal {0} is defined twice")]
    Duplicate(String),
    #[error("signal {0} is used but never defined")]
    Undefined(String),
    #[error("signal {signal} feeds {uses} consumers; route it through a FANOUT")]
    FanoutViolation { signal: String, uses: usize },
    #[error("cycle detected through {0}")]
    Cycle(String),
    #[error("{op} takes {want} operand(s), got {got}")]
    Arity { op: String, want: usize, got: usize },
    #[error("missing input bit for {0}")]
    MissingInput(String),
    #[error("no input named {0}")]
    UnknownInput(String),
    #[error("placed circuit is {width}x{height}, over the {max_width}x{max_height} limit")]
    Unroutable { width: usize, height: usize, max_width: usize, max_height: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("counters are built for 2 to {max} bits, got {0}", max = FANOUT_MAX)]
    CounterBits(usize),
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Fanout(usize),
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Not | Op::Fanout(_) => 1,
            _ => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Some(match s {
            "AND" => Op::And,
            "OR" => Op::Or,
            "NAND" => Op::Nand,
            "NOR" => Op::Nor,
            "XOR" => Op::Xor,
            "XNOR" => Op::Xnor,
            "NOT" => Op::Not,
            _ => Op::Fanout(s.strip_prefix("FANOUT")?.parse().ok()?),
        })
    }

    /// Value of every signal the operator defines.
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Op::And => a & b,
            Op::Or => a | b,
            Op::Nand => !(a & b),
            Op::Nor => !(a | b),
            Op::Xor => a ^ b,
            Op::Xnor => !(a ^ b),
            Op::Not => !a,
            Op::Fanout(_) => a,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::And => f.write_str("AND"),
            Op::Or => f.write_str("OR"),
            Op::Nand => f.write_str("NAND"),
            Op::Nor => f.write_str("NOR"),
            Op::Xor => f.write_str("XOR"),
            Op::Xnor => f.write_str("XNOR"),
            Op::Not => f.write_str("NOT"),
            Op::Fanout(k) => write!(f, "FANOUT{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateDef {
    pub id: String,
    pub op: Op,
    pub operands: Vec<String>,
}

impl GateDef {
    /// A fan-out `f` defines `f.1` to `f.k`; every other gate its own id.
    pub fn defines(&self) -> Vec<String> {
        match self.op {
            Op::Fanout(k) => (1..=k).map(|j| format!("{}.{j}", self.id)).collect(),
            _ => vec![self.id.clone()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitNetlist {
    pub inputs: Vec<String>,
    pub gates: Vec<GateDef>,
    pub outputs: Vec<String>,
}

fn is_name(s: &str, dotted: bool) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || (dotted && c == '.'))
}

pub fn parse_netlist(text: &str) -> Result<CircuitNetlist, CircuitError> {
    let n = parse_syntax(text)?;
    n.validate()?;
    Ok(n)
}

/// Statements only; no checks across lines.
pub fn parse_syntax(text: &str) -> Result<CircuitNetlist, CircuitError> {
    let mut n = CircuitNetlist::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| CircuitError::Parse { line: i + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            kw @ ("INPUT" | "OUTPUT") => {
                if toks.len() < 2 {
                    return Err(bad(format!("{kw} needs a name")));
                }
                for t in &toks[1..] {
                    if !is_name(t, kw == "OUTPUT") {
                        return Err(bad(format!("bad name {t:?}")));
                    }
                    let list = if kw == "INPUT" { &mut n.inputs } else { &mut n.outputs };
                    list.push(t.to_string());
                }
            }
            id => {
                if toks.len() < 3 || toks[1] != "=" {
                    return Err(bad("expected `<id> = <OP> <operand> [<operand>]`".into()));
                }
                if !is_name(id, false) {
                    return Err(bad(format!("bad gate id {id:?}")));
                }
                let op = Op::parse(toks[2]).ok_or_else(|| bad(format!("unknown operator {}", toks[2])))?;
                let operands: Vec<String> = toks[3..].iter().map(|s| s.to_string()).collect();
                if let Some(o) = operands.iter().find(|o| !is_name(o, true)) {
                    return Err(bad(format!("bad operand {o:?}")));
                }
                n.gates.push(GateDef { id: id.to_string(), op, operands });
            }
        }
    }
    Ok(n)
}

impl CircuitNetlist {
    /// Producing gate of every signal; `None` for inputs.
    fn producers(&self) -> Result<BTreeMap<String, Option<usize>>, CircuitError> {
        let mut m = BTreeMap::new();
        for i in &self.inputs {
            if m.insert(i.clone(), None).is_some() {
                return Err(CircuitError::Duplicate(i.clone()));
            }
        }
        for (gi, g) in self.gates.iter().enumerate() {
            for s in g.defines() {
                if m.insert(s.clone(), Some(gi)).is_some() {
                    return Err(CircuitError::Duplicate(s));
                }
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let producers = self.producers()?;
        let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
        for g in &self.gates {
            if let Op::Fanout(k) = g.op {
                if k < 2 {
                    return Err(GateError::FanoutTooSmall(k).into());
                }
            }
            if g.operands.len() != g.op.arity() {
                return Err(CircuitError::Arity { op: g.op.to_string(), want: g.op.arity(), got: g.operands.len() });
            }
        }
        let used = self.gates.iter().flat_map(|g| g.operands.iter()).chain(self.outputs.iter());
        for o in used {
            if !producers.contains_key(o) {
                return Err(CircuitError::Undefined(o.clone()));
            }
            *uses.entry(o).or_default() += 1;
        }
        if let Some((s, &k)) = uses.iter().find(|(_, &k)| k > 1) {
            return Err(CircuitError::FanoutViolation { signal: s.to_string(), uses: k });
        }
        self.topo_order().map(|_| ())
    }

    /// Gate indices with every gate after the producers of its operands.
    pub fn topo_order(&self) -> Result<Vec<usize>, CircuitError> {
        let prod = self.producers()?;
        let n = self.gates.len();
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let before = order.len();
            for i in 0..n {
                let ready = !done[i]
                    && self.gates[i].operands.iter().all(|o| match prod.get(o) {
                        Some(Some(j)) => done[*j],
                        _ => true,
                    });
                if ready {
                    done[i] = true;
                    order.push(i);
                }
            }
            if order.len() == before {
                let stuck = (0..n).find(|&i| !done[i]).unwrap_or(0);
                return Err(CircuitError::Cycle(self.gates[stuck].id.clone()));
            }
        }
        Ok(order)
    }

    /// Reference evaluation of the outputs.
    pub fn evaluate(&self, inputs: &BTreeMap<String, bool>) -> Result<BTreeMap<String, bool>, CircuitError> {
        let mut v: BTreeMap<String, bool> = BTreeMap::new();
        for i in &self.inputs {
            v.insert(i.clone(), *inputs.get(i).ok_or_else(|| CircuitError::MissingInput(i.clone()))?);
        }
        for gi in self.topo_order()? {
            let g = &self.gates[gi];
            let val = |k: usize| g.operands.get(k).map(|o| v.get(o).copied().unwrap_or(false)).unwrap_or(false);
            let out = g.op.eval(val(0), val(1));
            for s in g.defines() {
                v.insert(s, out);
            }
        }
        self.outputs
            .iter()
            .map(|o| v.get(o).map(|&b| (o.clone(), b)).ok_or_else(|| CircuitError::Undefined(o.clone())))
            .collect()
    }
}

impl fmt::Display for CircuitNetlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inputs {
            writeln!(f, "INPUT {i}")?;
        }
        for g in &self.gates {
            write!(f, "{} = {}", g.id, g.op)?;
            for o in &g.operands {
                write!(f, " {o}")?;
            }
            writeln!(f)?;
        }
        for o in &self.outputs {
            writeln!(f, "OUTPUT {o}")?;
        }
        Ok(())
    }
}

/// Inserts fan-outs for every signal with several consumers. Wider than
/// the largest catalog fan-out becomes a chain.
pub fn auto_fanout(n: &CircuitNetlist) -> CircuitNetlist {
    let mut uses: BTreeMap<String, usize> = BTreeMap::new();
    for o in n.gates.iter().flat_map(|g| g.operands.iter()).chain(n.outputs.iter()) {
        *uses.entry(o.clone()).or_default() += 1;
    }
    let mut taken: BTreeSet<String> = n.inputs.iter().cloned().collect();
    taken.extend(n.gates.iter().map(|g| g.id.clone()));

    let mut added: BTreeMap<String, Vec<GateDef>> = BTreeMap::new();
    let mut copies: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (s, &k) in &uses {
        if k < 2 {
            continue;
        }
        let mut need = k;
        let mut src = s.clone();
        let mut names = Vec::new();
        let mut chain = Vec::new();
        loop {
            let base = format!("{}_fo", s.replace('.', "_"));
            let mut id = base.clone();
            let mut j = 2;
            while taken.contains(&id) {
                id = format!("{base}{j}");
                j += 1;
            }
            taken.insert(id.clone());
            let width = need.min(FANOUT_MAX);
            chain.push(GateDef { id: id.clone(), op: Op::Fanout(width), operands: vec![src] });
            if need <= FANOUT_MAX {
                names.extend((1..=width).map(|j| format!("{id}.{j}")));
                break;
            }
            names.extend((1..width).map(|j| format!("{id}.{j}")));
            src = format!("{id}.{width}");
            need -= width - 1;
        }
        names.reverse();
        copies.insert(s.clone(), names);
        added.insert(s.clone(), chain);
    }

    let mut take = |s: &String| copies.get_mut(s).and_then(|c| c.pop()).unwrap_or_else(|| s.clone());
    let mut gates = Vec::new();
    for i in &n.inputs {
        gates.extend(added.get(i).cloned().unwrap_or_default());
    }
    for g in &n.gates {
        let operands = g.operands.iter().map(&mut take).collect();
        gates.push(GateDef { id: g.id.clone(), op: g.op, operands });
        for s in g.defines() {
            gates.extend(added.get(&s).cloned().unwrap_or_default());
        }
    }
    let outputs = n.outputs.iter().map(&mut take).collect();
    CircuitNetlist { inputs: n.inputs.clone(), gates, outputs }
}

/// One rail of a dual-rail signal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rail {
    Input { name: String, positive: bool },
    Port { node: usize, port: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RailPair {
    pub pos: Rail,
    pub neg: Rail,
}

/// A catalog gadget instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredNode {
    pub id: String,
    pub gadget: String,
    pub inputs: Vec<(String, Rail)>,
    /// Output ports that between them hold exactly one particle every time.
    pub constant: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualRailNetlist {
    pub inputs: Vec<String>,
    /// In dependency order.
    pub nodes: Vec<LoweredNode>,
    pub signals: BTreeMap<String, RailPair>,
    pub outputs: Vec<String>,
}

impl DualRailNetlist {
    pub fn gadget_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.gadget.clone()).or_default() += 1;
        }
        m
    }
}

/// Maps every gate onto a catalog gadget. NOT only swaps the rails.
pub fn lower_to_dual_rail(n: &CircuitNetlist) -> Result<DualRailNetlist, CircuitError> {
    n.validate()?;
    let mut d = DualRailNetlist { inputs: n.inputs.clone(), nodes: Vec::new(), signals: BTreeMap::new(), outputs: n.outputs.clone() };
    for i in &n.inputs {
        let rail = |positive| Rail::Input { name: i.clone(), positive };
        d.signals.insert(i.clone(), RailPair { pos: rail(true), neg: rail(false) });
    }
    for gi in n.topo_order()? {
        let g = &n.gates[gi];
        let args: Vec<RailPair> = g.operands.iter().map(|o| d.signals[o].clone()).collect();
        let node = d.nodes.len();
        let port = |p: &str| Rail::Port { node, port: p.to_string() };
        let rails = |a: &RailPair, b: Option<&RailPair>| {
            let mut v = vec![("A".to_string(), a.pos.clone()), ("~A".to_string(), a.neg.clone())];
            if let Some(b) = b {
                v.push(("B".to_string(), b.pos.clone()));
                v.push(("~B".to_string(), b.neg.clone()));
            }
            v
        };
        match g.op {
            Op::Not => {
                let a = &args[0];
                d.signals.insert(g.id.clone(), RailPair { pos: a.neg.clone(), neg: a.pos.clone() });
            }
            Op::Fanout(k) => {
                let inputs = rails(&args[0], None);
                d.nodes.push(LoweredNode { id: g.id.clone(), gadget: format!("fanout{k}"), inputs, constant: vec![] });
                for j in 1..=k {
                    let pair = RailPair { pos: port(&format!("A.{j}")), neg: port(&format!("~A.{j}")) };
                    d.signals.insert(format!("{}.{j}", g.id), pair);
                }
            }
            op => {
                let (gadget, pos, neg, constant): (&str, &str, &str, &[&str]) = match op {
                    Op::And => ("universal", "AND", "NAND", &["OR", "NOR"]),
                    Op::Nand => ("universal", "NAND", "AND", &["OR", "NOR"]),
                    Op::Or => ("universal", "OR", "NOR", &["AND", "NAND"]),
                    Op::Nor => ("universal", "NOR", "OR", &["AND", "NAND"]),
                    Op::Xor => ("xor", "XOR", "XNOR", &["ONE"]),
                    _ => ("xor", "XNOR", "XOR", &["ONE"]),
                };
                let inputs = rails(&args[0], Some(&args[1]));
                let constant = constant.iter().map(|s| s.to_string()).collect();
                d.nodes.push(LoweredNode { id: g.id.clone(), gadget: gadget.to_string(), inputs, constant });
                d.signals.insert(g.id.clone(), RailPair { pos: port(pos), neg: port(neg) });
            }
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceOptions {
    pub max_width: usize,
    pub max_height: usize,
    /// (output, input) pairs wired from the last band back over the first.
    pub feedback: Vec<(String, String)>,
}

impl Default for PlaceOptions {
    fn default() -> Self {
        PlaceOptions { max_width: MAX_DIMENSION, max_height: MAX_DIMENSION, feedback: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RailCells {
    pub pos: Cell,
    pub neg: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputPort {
    pub rails: RailCells,
    pub particle: String,
    pub label: char,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedCircuit {
    /// Internal particles only; inputs are added per evaluation.
    pub workspace: Workspace,
    pub stage_count: usize,
    pub cycles_per_evaluation: usize,
    pub input_names: Vec<String>,
    /// Start cells of every input that some gate reads.
    pub inputs: BTreeMap<String, InputPort>,
    /// Read cells after each evaluation. With feedback these are keyed by
    /// the fed-back input and coincide with its start cells.
    pub outputs: BTreeMap<String, RailCells>,
    pub feedback: bool,
    /// Gadget instances by catalog name, buffers included.
    pub inventory: BTreeMap<String, usize>,
}

impl PlacedCircuit {
    pub fn moves_per_evaluation(&self) -> usize {
        self.cycles_per_evaluation * CLOCK.len()
    }

    /// The workspace with input particles on the rails `bits` selects.
    pub fn load(&self, bits: &BTreeMap<String, bool>) -> Result<Workspace, CircuitError> {
        if let Some(k) = bits.keys().find(|k| !self.input_names.contains(k)) {
            return Err(CircuitError::UnknownInput(k.clone()));
        }
        let mut w = self.workspace.clone();
        for name in &self.input_names {
            let bit = *bits.get(name).ok_or_else(|| CircuitError::MissingInput(name.clone()))?;
            if let Some(p) = self.inputs.get(name) {
                let at = if bit { p.rails.pos } else { p.rails.neg };
                w.add_particle(Particle::unit(p.particle.clone(), p.label, at)).expect("start cells are free");
            }
        }
        Ok(w)
    }

    /// Occupancy of both rails of every output.
    pub fn rails(&self, w: &Workspace) -> BTreeMap<String, (bool, bool)> {
        self.outputs.iter().map(|(k, r)| (k.clone(), (w.is_occupied(r.pos), w.is_occupied(r.neg)))).collect()
    }

    pub fn read(&self, w: &Workspace) -> BTreeMap<String, bool> {
        self.rails(w).into_iter().map(|(k, (p, _))| (k, p)).collect()
    }

    pub fn clock(&self) -> Vec<Move> {
        CLOCK.iter().copied().cycle().take(self.moves_per_evaluation()).collect()
    }
}

/// Places inputs, clocks `evaluations` times and reads after each. Without
/// feedback every evaluation starts from a fresh copy.
pub fn run_circuit(
    c: &PlacedCircuit,
    inputs: &BTreeMap<String, bool>,
    evaluations: usize,
) -> Result<Vec<BTreeMap<String, bool>>, CircuitError> {
    let start = c.load(inputs)?;
    let engine = start.engine();
    let seq = c.clock();
    let mut scratch = Scratch::default();
    let mut anchors = start.anchors();
    let mut out = Vec::with_capacity(evaluations);
    for _ in 0..evaluations {
        if !c.feedback {
            anchors = start.anchors();
        }
        engine.run(&mut anchors, &seq, &mut scratch);
        out.push(c.read(&start.with_anchors(&anchors)));
    }
    Ok(out)
}

// ---- placement ----

#[derive(Clone, Debug, PartialEq, Eq)]
enum Start {
    Input(String, bool),
    Supply,
}

enum Src {
    Start(Start),
    Ports(Vec<(usize, Cell)>),
}

#[derive(Clone, Debug)]
enum Dest {
    Entry(usize, Cell),
    Sink(Option<(String, bool)>),
    Feedback(usize, Cell),
}

struct Hop {
    band: usize,
    srcs: Vec<(usize, Cell)>,
    dest: Dest,
}

struct Inst {
    gadget: Gadget,
    band: usize,
    x: i32,
    /// Entries fed from above; their top boundary is opened.
    entries: BTreeSet<Cell>,
    exits: BTreeSet<Cell>,
    keep_supplies: bool,
}

#[derive(Default)]
struct Plan {
    insts: Vec<Inst>,
    hops: Vec<Hop>,
    starts: Vec<(Start, usize, Cell)>,
}

fn port_cell(g: &Gadget, name: &str, dir: Direction) -> Cell {
    g.ports.iter().find(|p| p.name == name && p.direction == dir).map(|p| p.cell).expect("catalog port")
}

fn never_set(g: &Gadget, port: &str) -> bool {
    let k = g.outputs().position(|p| p.name == port).expect("catalog port");
    g.truth_table.rows.iter().all(|r| !r.outputs[k])
}

impl Plan {
    fn inst(&mut self, gadget: Gadget, band: usize) -> usize {
        self.insts.push(Inst {
            gadget,
            band,
            x: 0,
            entries: BTreeSet::new(),
            exits: BTreeSet::new(),
            keep_supplies: false,
        });
        self.insts.len() - 1
    }

    /// Carries `src`, valid after level `from`, to `dest` at level `to`.
    fn route(&mut self, src: Src, from: usize, dest: Dest, to: usize) {
        let buffer = gates::buffer();
        let (bi, bo) = (port_cell(&buffer, "A", Direction::Input), port_cell(&buffer, "A", Direction::Output));
        let mut cur = src;
        for level in from + 1..to {
            let b = self.inst(buffer.clone(), level);
            self.connect(cur, Dest::Entry(b, bi));
            cur = Src::Ports(vec![(b, bo)]);
        }
        self.connect(cur, dest);
    }

    fn connect(&mut self, src: Src, dest: Dest) {
        match src {
            Src::Start(s) => match dest {
                Dest::Entry(i, c) => self.starts.push((s, i, c)),
                _ => unreachable!("starts only feed the first band"),
            },
            Src::Ports(ps) => {
                if let Dest::Entry(i, c) | Dest::Feedback(i, c) = dest {
                    self.insts[i].entries.insert(c);
                }
                for &(i, c) in &ps {
                    self.insts[i].exits.insert(c);
                }
                let band = self.insts[ps[0].0].band;
                self.hops.push(Hop { band, srcs: ps, dest });
            }
        }
    }
}

struct Glyphs {
    units: usize,
    sliders: usize,
}

impl Glyphs {
    fn unit(&mut self) -> (String, char) {
        const U: &str = "abcdefghijklmnopqrstuvwxyz0123456789";
        self.units += 1;
        match U.chars().nth(self.units - 1) {
            Some(c) => (c.to_string(), c),
            None => (format!("u{}", self.units), 'o'),
        }
    }
    fn slider(&mut self) -> (String, char) {
        self.sliders += 1;
        match (b'A' + (self.sliders - 1) as u8) as char {
            c if c.is_ascii_uppercase() => (c.to_string(), c),
            _ => (format!("s{}", self.sliders), 'S'),
        }
    }
}

pub fn place_and_route(d: &DualRailNetlist, opts: &PlaceOptions) -> Result<PlacedCircuit, CircuitError> {
    let feedback = !opts.feedback.is_empty();
    let gadgets: Vec<Gadget> = d.nodes.iter().map(|n| gates::gadget(&n.gadget)).collect::<Result<_, _>>()?;
    let mut level: Vec<usize> = Vec::with_capacity(d.nodes.len());
    for node in &d.nodes {
        let deepest = node
            .inputs
            .iter()
            .map(|(_, r)| match r {
                Rail::Input { .. } => 0,
                Rail::Port { node, .. } => level[*node],
            })
            .max()
            .unwrap_or(0);
        level.push(deepest + 1);
    }
    let last = level.iter().copied().max().unwrap_or(0).max(1);

    let mut plan = Plan::default();
    let node_inst: Vec<usize> = (0..d.nodes.len()).map(|i| plan.inst(gadgets[i].clone(), level[i])).collect();
    let mut used: BTreeSet<(usize, String)> = BTreeSet::new();
    let mut src_of = |r: &Rail| -> (Src, usize) {
        match r {
            Rail::Input { name, positive } => (Src::Start(Start::Input(name.clone(), *positive)), 0),
            Rail::Port { node, port } => {
                used.insert((*node, port.clone()));
                let cell = port_cell(&gadgets[*node], port, Direction::Output);
                (Src::Ports(vec![(node_inst[*node], cell)]), level[*node])
            }
        }
    };

    for (i, node) in d.nodes.iter().enumerate() {
        for (port, rail) in &node.inputs {
            let (src, from) = src_of(rail);
            let at = port_cell(&gadgets[i], port, Direction::Input);
            plan.route(src, from, Dest::Entry(node_inst[i], at), level[i]);
        }
    }

    // fan-out supplies
    let mut slots = Vec::new();
    for (i, g) in gadgets.iter().enumerate() {
        let supplies: Vec<Cell> =
            g.template.particles().iter().filter(|p| p.shape == Shape::Unit).map(|p| p.anchor).collect();
        if supplies.is_empty() {
            continue;
        }
        if feedback {
            if level[i] != 1 {
                return Err(CircuitError::Unsupported(format!(
                    "fan-out {} sits at level {}; with feedback every fan-out must read a fed-back input",
                    d.nodes[i].id, level[i]
                )));
            }
            slots.extend(supplies.into_iter().map(|c| (node_inst[i], c)));
        } else if level[i] == 1 {
            plan.insts[node_inst[i]].keep_supplies = true;
        } else {
            for c in supplies {
                plan.route(Src::Start(Start::Supply), 0, Dest::Entry(node_inst[i], c), level[i]);
            }
        }
    }

    let pair_of = |s: &String| d.signals.get(s).cloned().ok_or_else(|| CircuitError::Undefined(s.clone()));
    if feedback {
        for o in &d.outputs {
            if !opts.feedback.iter().any(|(a, _)| a == o) {
                return Err(CircuitError::Unsupported(format!("output {o} is not fed back")));
            }
        }
        for (out, inp) in &opts.feedback {
            let pair = pair_of(out)?;
            if !d.inputs.contains(inp) {
                return Err(CircuitError::UnknownInput(inp.clone()));
            }
            for (rail, positive) in [(&pair.pos, true), (&pair.neg, false)] {
                let want = Start::Input(inp.clone(), positive);
                let (i, c) = plan
                    .starts
                    .iter()
                    .find(|(s, ..)| *s == want)
                    .map(|(_, i, c)| (*i, *c))
                    .ok_or_else(|| CircuitError::Unsupported(format!("fed-back input {inp} is never read")))?;
                let (src, from) = src_of(rail);
                plan.route(src, from, Dest::Feedback(i, c), last + 1);
            }
        }
    } else {
        for o in &d.outputs {
            let pair = pair_of(o)?;
            for (rail, positive) in [(&pair.pos, true), (&pair.neg, false)] {
                let (src, from) = src_of(rail);
                plan.route(src, from, Dest::Sink(Some((o.clone(), positive))), last + 1);
            }
        }
    }

    // constants and rails nobody reads
    let mut constants = Vec::new();
    for (i, node) in d.nodes.iter().enumerate() {
        let g = &gadgets[i];
        if !node.constant.is_empty() {
            let ps = node.constant.iter().map(|p| (node_inst[i], port_cell(g, p, Direction::Output))).collect();
            used.extend(node.constant.iter().map(|p| (i, p.clone())));
            if feedback {
                constants.push((Src::Ports(ps), level[i]));
            } else {
                plan.route(Src::Ports(ps), level[i], Dest::Sink(None), level[i] + 1);
            }
        }
        for p in g.outputs() {
            if used.contains(&(i, p.name.clone())) || never_set(g, &p.name) {
                continue;
            }
            if feedback {
                return Err(CircuitError::Unsupported(format!("output {} of {} is never read", p.name, node.id)));
            }
            plan.route(Src::Ports(vec![(node_inst[i], p.cell)]), level[i], Dest::Sink(None), level[i] + 1);
        }
    }
    if feedback {
        if constants.len() != slots.len() {
            return Err(CircuitError::Unsupported(format!(
                "{} constant outputs cannot refill {} fan-out supplies",
                constants.len(),
                slots.len()
            )));
        }
        for ((src, from), (i, c)) in constants.into_iter().zip(slots.iter().copied()) {
            plan.route(src, from, Dest::Feedback(i, c), last + 1);
        }
    }

    layout(d, plan, last, feedback, &slots, opts)
}

fn layout(
    d: &DualRailNetlist,
    mut plan: Plan,
    last: usize,
    feedback: bool,
    slots: &[(usize, Cell)],
    opts: &PlaceOptions,
) -> Result<PlacedCircuit, CircuitError> {
    let bands: Vec<Vec<usize>> =
        (1..=last).map(|b| (0..plan.insts.len()).filter(|&i| plan.insts[i].band == b).collect()).collect();
    let is_fb = |h: &Hop| matches!(h.dest, Dest::Feedback(..));
    let fb_hops: Vec<usize> = (0..plan.hops.len()).filter(|&h| is_fb(&plan.hops[h])).collect();
    let region = |b: usize| -> Vec<usize> {
        (0..plan.hops.len()).filter(|&h| plan.hops[h].band == b && !is_fb(&plan.hops[h])).collect()
    };
    let regions: Vec<Vec<usize>> = (1..=last).map(region).collect();
    let nr = regions.iter().map(|r| r.len()).max().unwrap_or(0) as i32;

    // columns: feedback risers, region risers, then the bands
    let mut riser: BTreeMap<usize, i32> = BTreeMap::new();
    for (k, &h) in fb_hops.iter().enumerate() {
        riser.insert(h, 1 + 2 * k as i32);
    }
    let xr0 = 1 + 2 * fb_hops.len() as i32;
    for r in &regions {
        for (k, &h) in r.iter().enumerate() {
            riser.insert(h, xr0 + 2 * k as i32);
        }
    }
    let x0 = xr0 + 2 * nr + 1;
    let mut right = vec![x0; last + 2];
    let mut above: Vec<i32> = Vec::new();
    for b in 1..=last {
        let mut cursor = x0;
        for &i in &bands[b - 1] {
            let mut x = cursor;
            let clash = |x: i32| plan.insts[i].entries.iter().any(|c| above.iter().any(|&e| (x + c.x - e).abs() < 2));
            while clash(x) {
                x += 1;
            }
            plan.insts[i].x = x;
            cursor = x + plan.insts[i].gadget.size().0 as i32;
        }
        right[b] = cursor;
        above = bands[b - 1]
            .iter()
            .flat_map(|&i| plan.insts[i].exits.iter().map(move |c| (i, c.x)))
            .map(|(i, x)| plan.insts[i].x + x)
            .collect();
    }
    let abs_x = |i: usize, c: Cell| plan.insts[i].x + c.x;

    // rows, counted downward from the top
    let mut ceiling: BTreeMap<usize, i32> = BTreeMap::new();
    let mut floor: BTreeMap<usize, i32> = BTreeMap::new();
    let mut sink_x: BTreeMap<usize, i32> = BTreeMap::new();
    let mut sink_floor: BTreeMap<usize, i32> = BTreeMap::new();
    let dst_x = |h: &Hop, sink_x: &BTreeMap<usize, i32>, k: usize| match h.dest {
        Dest::Entry(i, c) | Dest::Feedback(i, c) => abs_x(i, c),
        Dest::Sink(_) => sink_x[&k],
    };
    let mut t = 0;
    let mut top: Vec<usize> = fb_hops.clone();
    top.sort_by_key(|&h| dst_x(&plan.hops[h], &sink_x, h));
    for h in top {
        ceiling.insert(h, t);
        t += 2;
    }
    let mut band_top = vec![0; last + 1];
    let mut band_height = vec![0; last + 1];
    for b in 1..=last {
        band_top[b] = t;
        band_height[b] = bands[b - 1].iter().map(|&i| plan.insts[i].gadget.size().1 as i32).max().unwrap_or(1);
        t += band_height[b];
        let hops = &regions[b - 1];
        let edge = right[b].max(right[b + 1]);
        let mut k = 0;
        for &h in hops {
            if let Dest::Sink(_) = plan.hops[h].dest {
                sink_x.insert(h, edge + 2 + 3 * k);
                k += 1;
            }
        }
        let mut by_dst: Vec<usize> = hops.clone();
        by_dst.sort_by_key(|&h| dst_x(&plan.hops[h], &sink_x, h));
        for h in by_dst {
            ceiling.insert(h, t);
            t += 2;
        }
        for h in (0..plan.hops.len()).filter(|&h| plan.hops[h].band == b) {
            floor.insert(h, t);
            t += 2;
        }
        if k > 0 {
            sink_floor.insert(b, t);
            t += 1;
        }
    }

    let at = |i: usize, c: Cell| -> (i32, i32) {
        let inst = &plan.insts[i];
        let h = inst.gadget.size().1 as i32;
        (inst.x + c.x, band_top[inst.band] + h - 1 - c.y)
    };
    let mut cv = Carve::default();
    let col = |cv: &mut Carve, x: i32, t0: i32, t1: i32| cv.col(x, -t0, -t1);
    let row = |cv: &mut Carve, t: i32, x0: i32, x1: i32| cv.row(-t, x0, x1);
    for (i, inst) in plan.insts.iter().enumerate() {
        let (w, h) = inst.gadget.size();
        for y in 1..h as i32 - 1 {
            for x in 1..w as i32 - 1 {
                if !inst.gadget.template.is_obstacle(Cell::new(x, y)) {
                    let (ax, at_) = at(i, Cell::new(x, y));
                    cv.cell(ax, -at_);
                }
            }
        }
        for c in &inst.entries {
            let (ax, at_) = at(i, Cell::new(c.x, h as i32 - 1));
            cv.cell(ax, -at_);
        }
        let bottom = band_top[inst.band] + band_height[inst.band] - 1;
        for c in &inst.exits {
            let (ax, at_) = at(i, Cell::new(c.x, 0));
            col(&mut cv, ax, at_, bottom);
        }
    }
    let mut sink_nodes: BTreeMap<(String, bool), (i32, i32)> = BTreeMap::new();
    let mut fb_nodes: BTreeMap<(usize, Cell), (i32, i32)> = BTreeMap::new();
    for (k, hop) in plan.hops.iter().enumerate() {
        let (f, r, c) = (floor[&k], riser[&k], ceiling[&k]);
        let mut far = r;
        for &(i, p) in &hop.srcs {
            let (sx, st) = at(i, p);
            col(&mut cv, sx, st, f);
            far = far.max(sx);
        }
        row(&mut cv, f, r, far);
        col(&mut cv, r, c, f);
        match &hop.dest {
            Dest::Entry(i, p) | Dest::Feedback(i, p) => {
                let (dx, dt) = at(*i, *p);
                row(&mut cv, c, r, dx);
                col(&mut cv, dx, c, dt);
                if let Dest::Feedback(..) = hop.dest {
                    fb_nodes.insert((*i, *p), (dx, c));
                }
            }
            Dest::Sink(read) => {
                let xs = sink_x[&k];
                let sf = sink_floor[&hop.band];
                row(&mut cv, c, r, xs);
                col(&mut cv, xs, c, sf);
                row(&mut cv, sf, xs - 1, xs);
                col(&mut cv, xs - 1, sf, c);
                if let Some(key) = read {
                    sink_nodes.insert(key.clone(), (xs, c));
                }
            }
        }
    }

    let (mut ws, shift) = cv.build();
    if ws.width() > opts.max_width || ws.height() > opts.max_height {
        return Err(CircuitError::Unroutable {
            width: ws.width(),
            height: ws.height(),
            max_width: opts.max_width,
            max_height: opts.max_height,
        });
    }
    let place = |(x, t): (i32, i32)| Cell::new(x + shift.x, -t + shift.y);
    let mut names = Glyphs { units: 0, sliders: 0 };
    let add = |ws: &mut Workspace, names: &mut Glyphs, shape: Shape, at: Cell| {
        let (id, label) = if shape == Shape::Unit { names.unit() } else { names.slider() };
        ws.add_particle(Particle::domino(id, label, shape, at)).expect("internal particles sit on free cells");
    };
    for (i, inst) in plan.insts.iter().enumerate() {
        for p in inst.gadget.template.particles() {
            if p.shape != Shape::Unit || inst.keep_supplies {
                add(&mut ws, &mut names, p.shape, place(at(i, p.anchor)));
            }
        }
    }
    for (s, i, c) in &plan.starts {
        if *s == Start::Supply {
            add(&mut ws, &mut names, Shape::Unit, place(at(*i, *c)));
        }
    }
    for slot in slots {
        add(&mut ws, &mut names, Shape::Unit, place(fb_nodes[slot]));
    }

    let start_cell = |name: &str, positive: bool| {
        plan.starts.iter().find(|(s, ..)| *s == Start::Input(name.to_string(), positive)).map(|(_, i, c)| {
            if feedback {
                place(fb_nodes[&(*i, *c)])
            } else {
                place(at(*i, *c))
            }
        })
    };
    let mut inputs = BTreeMap::new();
    for name in &d.inputs {
        if let (Some(pos), Some(neg)) = (start_cell(name, true), start_cell(name, false)) {
            let (particle, label) = names.unit();
            inputs.insert(name.clone(), InputPort { rails: RailCells { pos, neg }, particle, label });
        }
    }
    let mut outputs = BTreeMap::new();
    if feedback {
        for (_, inp) in &opts.feedback {
            outputs.insert(inp.clone(), inputs[inp].rails);
        }
    } else {
        for o in &d.outputs {
            let cell = |p: bool| place(sink_nodes[&(o.clone(), p)]);
            outputs.insert(o.clone(), RailCells { pos: cell(true), neg: cell(false) });
        }
    }
    let mut inventory = BTreeMap::new();
    for inst in &plan.insts {
        *inventory.entry(inst.gadget.name.clone()).or_default() += 1;
    }
    Ok(PlacedCircuit {
        workspace: ws,
        stage_count: last,
        cycles_per_evaluation: 2 * last,
        input_names: d.inputs.clone(),
        inputs,
        outputs,
        feedback,
        inventory,
    })
}

/// Parses, lowers and places in one go. With `auto` the single-use rule
/// is satisfied by inserting fan-outs first.
pub fn compile(text: &str, auto: bool) -> Result<PlacedCircuit, CircuitError> {
    let mut n = parse_syntax(text)?;
    if auto {
        n = auto_fanout(&n);
    }
    n.validate()?;
    place_and_route(&lower_to_dual_rail(&n)?, &PlaceOptions::default())
}

/// Next-state logic of an n-bit binary counter over state `q0..` (q0 is
/// the low bit), defining `s0..`. Carries are computed once per consumer
/// so every fan-out reads a state bit and the depth stays n.
pub fn counter_netlist(n: usize) -> Result<CircuitNetlist, CircuitError> {
    if !(2..=FANOUT_MAX).contains(&n) {
        return Err(CircuitError::CounterBits(n));
    }
    let mut g = Vec::new();
    let mut gate = |id: String, op: Op, ops: &[String]| g.push(GateDef { id, op, operands: ops.to_vec() });
    let q = |k: usize| format!("q{k}");
    gate("s0".into(), Op::Not, &[q(0)]);
    gate("s1".into(), Op::Xor, &[q(1), q(0)]);
    let carry = |k: usize, j: usize| format!("c{k}_{j}");
    for j in 1..=n - 2 {
        gate(carry(1, j), Op::And, &[q(1), q(0)]);
    }
    for k in 2..n {
        gate(format!("s{k}"), Op::Xor, &[q(k), carry(k - 1, 1)]);
        for j in 1..=n - 1 - k {
            gate(carry(k, j), Op::And, &[q(k), carry(k - 1, j + 1)]);
        }
    }
    let raw = CircuitNetlist { inputs: (0..n).map(q).collect(), gates: g, outputs: (0..n).map(|k| format!("s{k}")).collect() };
    let net = auto_fanout(&raw);
    net.validate()?;
    Ok(net)
}

/// An n-bit counter: every evaluation adds one to the state held on the
/// input rails.
pub fn build_counter(n: usize) -> Result<PlacedCircuit, CircuitError> {
    let net = counter_netlist(n)?;
    let d = lower_to_dual_rail(&net)?;
    let feedback = (0..n).map(|k| (format!("s{k}"), format!("q{k}"))).collect();
    place_and_route(&d, &PlaceOptions { feedback, ..PlaceOptions::default() })
}

/// Bits of `value` as counter state, low bit first.
pub fn counter_state(n: usize, value: usize) -> BTreeMap<String, bool> {
    (0..n).map(|k| (format!("q{k}"), value >> k & 1 == 1)).collect()
}

/// Reads a counter state back as a number.
pub fn counter_value(state: &BTreeMap<String, bool>) -> usize {
    state.iter().filter(|(_, &b)| b).map(|(k, _)| 1usize << k[1..].parse::<usize>().unwrap_or(0)).sum()
}
