//! 3SAT as a full-tilt puzzle.
//!
//! Each literal occurrence gets its own variable gadget: a tower of `n`
//! chambers that a particle descends one `d` at a time. Chamber `k` has a
//! hole at each end, so the `l`/`r` made in it is forgotten by the next
//! `d`, except in chamber `i` whose two holes lead to separate True (left)
//! and False (right) lanes. Clause gadgets pack their inputs against a wall
//! and let only the wall particle through; the others drop into lipped
//! pockets. The check gadget's exit sits `m - 1` cells from its wall, so it
//! is reached only when all `m` clauses deliver.
//!
//! Vertical layout of a composed instance, bottom up: target row 1, check
//! row 3, clause pockets 5, clause exit row 7, clause row 9, variable
//! pockets 11, collectors 13, chambers above.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::carve::Carve;
use crate::sim::{Cell, Goal, Move, Particle, Who, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn eval(self, a: &Assignment) -> bool {
        a.values[self.var - 1] == self.positive
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    pub n: usize,
    pub clauses: Vec<[Literal; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SatError {
    #[error("line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
    #[error("clause {clause} has {got} literals; only 3-literal clauses are supported")]
    ClauseWidth { clause: usize, got: usize },
    #[error("literal {lit} is outside variables 1..={n}")]
    VarRange { lit: i64, n: usize },
    #[error("variable index {i} is outside 1..={n}")]
    Index { i: usize, n: usize },
    #[error("formula needs at least one variable and one clause")]
    Empty,
    #[error("assignment has {got} values for {n} variables")]
    AssignmentLength { got: usize, n: usize },
    #[error("assignment character {0:?} is not T or F")]
    AssignmentChar(char),
    #[error("gadget needs at least one input")]
    NoInputs,
}

impl CnfFormula {
    pub fn new(n: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, SatError> {
        if n == 0 || clauses.is_empty() {
            return Err(SatError::Empty);
        }
        for c in &clauses {
            for l in c {
                if l.var == 0 || l.var > n {
                    return Err(SatError::VarRange { lit: l.var as i64, n });
                }
            }
        }
        Ok(CnfFormula { n, clauses })
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn eval(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(a)))
    }

    /// Literal occurrences per variable.
    pub fn occurrences(&self, var: usize) -> usize {
        self.clauses.iter().flatten().filter(|l| l.var == var).count()
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n, self.m());
        for c in &self.clauses {
            for l in c {
                let v = l.var as i64;
                s += &format!("{} ", if l.positive { v } else { -v });
            }
            s += "0\n";
        }
        s
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.clauses.iter().enumerate() {
            if j > 0 {
                f.write_str(" & ")?;
            }
            f.write_str("(")?;
            for (k, l) in c.iter().enumerate() {
                if k > 0 {
                    f.write_str(" | ")?;
                }
                write!(f, "{}x{}", if l.positive { "" } else { "~" }, l.var)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Reads DIMACS CNF: comment lines start with `c`, the header is
/// `p cnf <vars> <clauses>`, clauses are whitespace separated literals
/// ended by `0` and may span lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, SatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<[Literal; 3]> = Vec::new();
    let mut cur: Vec<Literal> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let ln = i + 1;
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let t: Vec<&str> = line.split_whitespace().collect();
            if header.is_some() {
                return Err(SatError::Dimacs { line: ln, msg: "second header".into() });
            }
            match t.as_slice() {
                ["p", "cnf", v, c] => {
                    let v = v.parse().map_err(|_| SatError::Dimacs { line: ln, msg: "bad variable count".into() })?;
                    let c = c.parse().map_err(|_| SatError::Dimacs { line: ln, msg: "bad clause count".into() })?;
                    header = Some((v, c));
                }
                _ => return Err(SatError::Dimacs { line: ln, msg: "expected \"p cnf <vars> <clauses>\"".into() }),
            }
            continue;
        }
        let (n, _) = header.ok_or(SatError::Dimacs { line: ln, msg: "clause before header".into() })?;
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| SatError::Dimacs { line: ln, msg: format!("bad literal {tok:?}") })?;
            if v == 0 {
                let got = cur.len();
                let c: [Literal; 3] =
                    cur.as_slice().try_into().map_err(|_| SatError::ClauseWidth { clause: clauses.len() + 1, got })?;
                clauses.push(c);
                cur.clear();
            } else {
                if v.unsigned_abs() as usize > n {
                    return Err(SatError::VarRange { lit: v, n });
                }
                cur.push(Literal { var: v.unsigned_abs() as usize, positive: v > 0 });
            }
        }
    }
    let (n, m) = header.ok_or(SatError::Dimacs { line: 0, msg: "missing header".into() })?;
    if !cur.is_empty() {
        return Err(SatError::Dimacs { line: text.lines().count(), msg: "last clause not ended by 0".into() });
    }
    if clauses.len() != m {
        return Err(SatError::Dimacs {
            line: 0,
            msg: format!("header promises {m} clauses, found {}", clauses.len()),
        });
    }
    CnfFormula::new(n, clauses)
}

/// Parses "TFFT" (case-insensitive; `1`/`0` also accepted).
pub fn parse_assignment(text: &str, n: usize) -> Result<Assignment, SatError> {
    let values = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            'T' | 't' | '1' => Ok(true),
            'F' | 'f' | '0' => Ok(false),
            other => Err(SatError::AssignmentChar(other)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(SatError::AssignmentLength { got: values.len(), n });
    }
    Ok(Assignment { values })
}

impl Assignment {
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Assignment { values: (0..n).map(|i| bits >> i & 1 == 1).collect() }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.values {
            f.write_str(if v { "T" } else { "F" })?;
        }
        Ok(())
    }
}

// Row constants of a composed instance.
const TARGET_ROW: i32 = 1;
const CHECK_ROW: i32 = 3;
const CLAUSE_POCKET_ROW: i32 = 5;
const CLAUSE_EXIT_ROW: i32 = 7;
const CLAUSE_ROW: i32 = 9;
const VAR_POCKET_ROW: i32 = 11;
const COLLECTOR_ROW: i32 = 13;

/// Geometry of one variable gadget, in absolute coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
struct VarLayout {
    start: Cell,
    true_out: Cell,
    false_out: Cell,
    true_collector: Vec<Cell>,
    false_collector: Vec<Cell>,
    left: i32,
    right: i32,
}

/// Carves variable gadget `i` of `n` centred on column `x0`.
fn carve_variable(c: &mut Carve, i: usize, n: usize, x0: i32) -> VarLayout {
    let (i, n) = (i as i32, n as i32);
    let yc = COLLECTOR_ROW;
    let chamber_y = |k: i32| yc + 2 * (n - k + 1);
    let chamber = |c: &mut Carve, k: i32, a: i32, b: i32| {
        let y = chamber_y(k);
        c.row(y, a, b);
        c.cell(a, y - 1);
        c.cell(b, y - 1);
    };
    let start = Cell::new(x0, chamber_y(1) + 1);
    c.cell(start.x, start.y);
    for k in 1..i {
        chamber(c, k, x0 - k, x0 + k);
    }
    chamber(c, i, x0 - (n + 1), x0 + (n + 1));
    let (ct, cf) = (x0 - (n + 1), x0 + (n + 1));
    for k in i + 1..=n {
        let h = k - i;
        chamber(c, k, ct - h, ct + h);
        chamber(c, k, cf - h, cf + h);
    }
    let h = n - i;
    c.row(yc, ct - h, ct + h + 1);
    c.row(yc, cf - h, cf + h + 1);
    let true_out = Cell::new(ct + h + 1, yc);
    let false_out = Cell::new(cf + h + 1, yc);
    VarLayout {
        start,
        true_out,
        false_out,
        true_collector: (ct - h..=ct + h + 1).map(|x| Cell::new(x, yc)).collect(),
        false_collector: (cf - h..=cf + h + 1).map(|x| Cell::new(x, yc)).collect(),
        left: ct - h,
        right: false_out.x,
    }
}

/// Width a variable gadget occupies left and right of its centre.
fn variable_reach(n: usize) -> (i32, i32) {
    let n = n as i32;
    (2 * n, 2 * n + 1)
}

/// A pocket under column `x` one row below the floor the particle drops
/// to: the landing cell has rock on both sides beyond one free cell, so
/// after any sideways move the particle rests under rock for good.
fn carve_pocket(c: &mut Carve, x: i32, from_y: i32, row: i32) -> Vec<Cell> {
    c.col(x, row, from_y);
    c.row(row, x - 1, x + 1);
    (x - 1..=x + 1).map(|x| Cell::new(x, row)).collect()
}

/// Geometry of one clause gadget.
#[derive(Clone, Debug)]
struct ClauseLayout {
    right: i32,
    out: Cell,
    waste: Vec<Cell>,
}

/// Carves a clause gadget fed by channels at `inputs` (top row `top`).
fn carve_clause(c: &mut Carve, inputs: &[i32], top: i32) -> ClauseLayout {
    let first = *inputs.iter().min().unwrap();
    let last = *inputs.iter().max().unwrap();
    let xw = first - 3;
    let right = last + 3;
    c.row(CLAUSE_ROW, xw, right);
    for &a in inputs {
        c.col(a, CLAUSE_ROW, top);
    }
    // the wall particle drops to the exit row and slides to the exit
    c.col(xw, CLAUSE_EXIT_ROW, CLAUSE_ROW);
    let out = Cell::new(xw + 6, CLAUSE_EXIT_ROW);
    c.row(CLAUSE_EXIT_ROW, xw, out.x);
    // the next two drop through the exit row into the pocket row
    c.col(xw + 1, CLAUSE_POCKET_ROW, CLAUSE_ROW);
    c.col(xw + 2, CLAUSE_POCKET_ROW, CLAUSE_ROW);
    c.row(CLAUSE_POCKET_ROW, xw - 2, xw + 4);
    let waste = (xw - 2..=xw + 4).map(|x| Cell::new(x, CLAUSE_POCKET_ROW)).collect();
    ClauseLayout { right, out, waste }
}

/// Geometry of the check gadget.
#[derive(Clone, Debug)]
struct CheckLayout {
    target: Cell,
    channel: i32,
}

fn carve_check(c: &mut Carve, inputs: &[i32], top: i32) -> CheckLayout {
    let m = inputs.len() as i32;
    let first = *inputs.iter().min().unwrap();
    let last = *inputs.iter().max().unwrap();
    let xw = first - m;
    let ch = xw + m - 1;
    let right = (last + m + 1).max(ch + 2 * m + 1);
    c.row(CHECK_ROW, xw, right);
    for &a in inputs {
        c.col(a, CHECK_ROW, top);
    }
    c.col(ch, TARGET_ROW, CHECK_ROW);
    c.row(TARGET_ROW, ch, ch + 1);
    CheckLayout { target: Cell::new(ch + 1, TARGET_ROW), channel: ch }
}

/// A stand-alone variable gadget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableGadget {
    pub i: usize,
    pub n: usize,
    /// Holds one particle labelled `a` on `start`.
    pub workspace: Workspace,
    pub start: Cell,
    pub true_out: Cell,
    pub false_out: Cell,
    pub true_collector: Vec<Cell>,
    pub false_collector: Vec<Cell>,
}

impl VariableGadget {
    /// Which lane a cell belongs to: Some(true) for the True collector.
    pub fn exit_of(&self, c: Cell) -> Option<bool> {
        if self.true_collector.contains(&c) {
            Some(true)
        } else if self.false_collector.contains(&c) {
            Some(false)
        } else {
            None
        }
    }
}

/// Variable gadget `i` of `n` with its particle on the start cell.
pub fn build_variable_gadget(i: usize, n: usize) -> Result<VariableGadget, SatError> {
    if i == 0 || i > n {
        return Err(SatError::Index { i, n });
    }
    let mut c = Carve::default();
    let v = carve_variable(&mut c, i, n, 0);
    let (mut ws, d) = c.build();
    let sh = |p: Cell| Cell::new(p.x + d.x, p.y + d.y);
    ws.add_particle(Particle::unit("a", 'a', sh(v.start))).expect("start cell is free");
    Ok(VariableGadget {
        i,
        n,
        workspace: ws,
        start: sh(v.start),
        true_out: sh(v.true_out),
        false_out: sh(v.false_out),
        true_collector: v.true_collector.into_iter().map(sh).collect(),
        false_collector: v.false_collector.into_iter().map(sh).collect(),
    })
}

/// A stand-alone clause or check gadget: inputs at the tops of their
/// channels, one output cell and the cells counted as waste.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicGadget {
    pub workspace: Workspace,
    pub inputs: Vec<Cell>,
    pub output: Cell,
    pub waste: Vec<Cell>,
}

impl LogicGadget {
    /// The gadget with particles on the chosen inputs, labelled a, b, ...
    pub fn with_inputs(&self, on: &[bool]) -> Workspace {
        let mut w = self.workspace.clone();
        for (k, (&c, _)) in self.inputs.iter().zip(on).filter(|(_, &b)| b).enumerate() {
            let label = (b'a' + k as u8) as char;
            w.add_particle(Particle::unit(format!("{label}"), label, c)).expect("input cell is free");
        }
        w
    }
}

/// The phase sequence shared by clause and check gadgets.
pub const LOGIC_PHASE: [Move; 4] = [Move::Down, Move::Left, Move::Down, Move::Right];

pub fn build_or_gadget() -> LogicGadget {
    let mut c = Carve::default();
    let top = CLAUSE_ROW + 2;
    let inputs = [10, 12, 14];
    let cl = carve_clause(&mut c, &inputs, top);
    let (ws, d) = c.build();
    let sh = |p: Cell| Cell::new(p.x + d.x, p.y + d.y);
    LogicGadget {
        workspace: ws,
        inputs: inputs.iter().map(|&x| sh(Cell::new(x, top))).collect(),
        output: sh(cl.out),
        waste: cl.waste.into_iter().map(sh).collect(),
    }
}

pub fn build_and_gadget(m: usize) -> Result<LogicGadget, SatError> {
    if m == 0 {
        return Err(SatError::NoInputs);
    }
    let mut c = Carve::default();
    let top = CHECK_ROW + 2;
    let inputs: Vec<i32> = (0..m as i32).map(|k| 3 * m as i32 + 2 + 2 * k).collect();
    let ck = carve_check(&mut c, &inputs, top);
    let (mut ws, d) = c.build();
    let sh = |p: Cell| Cell::new(p.x + d.x, p.y + d.y);
    ws.add_goal(Goal { who: Who::Any, cell: sh(ck.target) });
    Ok(LogicGadget {
        workspace: ws,
        inputs: inputs.iter().map(|&x| sh(Cell::new(x, top))).collect(),
        output: sh(ck.target),
        waste: Vec::new(),
    })
}

/// Where one literal occurrence was placed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedLiteral {
    pub clause: usize,
    pub literal: Literal,
    pub particle: String,
    pub start: Cell,
    /// Output cell routed to the clause gadget.
    pub used_out: Cell,
    /// Output cell routed to a pocket.
    pub unused_out: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatInstance {
    pub formula: CnfFormula,
    /// Obstacles, one particle per literal occurrence and a goal on the
    /// target cell for any particle.
    pub workspace: Workspace,
    pub literals: Vec<PlacedLiteral>,
    /// Exit cell of each clause gadget.
    pub clause_outputs: Vec<Cell>,
    pub waste: Vec<Cell>,
    pub target: Cell,
}

impl SatInstance {
    pub fn variable_gadgets(&self) -> usize {
        self.literals.len()
    }
    pub fn or_gadgets(&self) -> usize {
        self.clause_outputs.len()
    }
    pub fn and_inputs(&self) -> usize {
        self.clause_outputs.len()
    }
    pub fn reaches_target(&self, w: &Workspace) -> bool {
        w.is_occupied(self.target)
    }
    /// Index of the move after which every variable particle sits on an
    /// output cell of its gadget, for canonical sequences.
    pub fn variable_phase_len(&self) -> usize {
        2 * self.formula.n + 2
    }
}

/// Lays out one variable gadget per literal occurrence, three per clause,
/// with the clause gadget under them and the check gadget under all.
pub fn build_3sat_workspace(f: &CnfFormula) -> SatInstance {
    let n = f.n;
    let (reach_l, reach_r) = variable_reach(n);
    let mut c = Carve::default();
    let mut literals = Vec::new();
    let mut clause_layouts = Vec::new();
    let mut waste = Vec::new();
    let mut cursor = 0i32;
    let mut pid = 0usize;
    for (j, clause) in f.clauses.iter().enumerate() {
        let mut used = Vec::new();
        for lit in clause {
            let x0 = cursor + reach_l;
            let v = carve_variable(&mut c, lit.var, n, x0);
            let (u, nu) = if lit.positive { (v.true_out, v.false_out) } else { (v.false_out, v.true_out) };
            c.col(u.x, CLAUSE_ROW + 1, COLLECTOR_ROW);
            waste.extend(carve_pocket(&mut c, nu.x, COLLECTOR_ROW, VAR_POCKET_ROW));
            used.push(u.x);
            literals.push(PlacedLiteral {
                clause: j,
                literal: *lit,
                particle: particle_id(pid),
                start: v.start,
                used_out: u,
                unused_out: nu,
            });
            pid += 1;
            cursor = x0 + reach_r + 3;
        }
        let cl = carve_clause(&mut c, &used, CLAUSE_ROW);
        waste.extend(cl.waste.iter().copied());
        cursor = cursor.max(cl.right + 4).max(cl.out.x + 4);
        clause_layouts.push(cl);
    }
    let outs: Vec<i32> = clause_layouts.iter().map(|cl| cl.out.x).collect();
    for &x in &outs {
        c.col(x, CHECK_ROW, CLAUSE_EXIT_ROW);
    }
    let ck = carve_check(&mut c, &outs, CHECK_ROW);
    debug_assert!(ck.channel < outs[0]);
    let (mut ws, d) = c.build();
    let sh = |p: Cell| Cell::new(p.x + d.x, p.y + d.y);
    for l in &mut literals {
        l.start = sh(l.start);
        l.used_out = sh(l.used_out);
        l.unused_out = sh(l.unused_out);
        let label = particle_label(&l.particle);
        ws.add_particle(Particle::unit(l.particle.clone(), label, l.start)).expect("start cells are free");
    }
    let target = sh(ck.target);
    ws.add_goal(Goal { who: Who::Any, cell: target });
    SatInstance {
        formula: f.clone(),
        workspace: ws,
        literals,
        clause_outputs: clause_layouts.iter().map(|cl| sh(cl.out)).collect(),
        waste: waste.into_iter().map(sh).collect(),
        target,
    }
}

// Particle ids are their TWF glyph while glyphs last (36), so small
// instances serialize; larger ones fall back to "p<k>".
const GLYPHS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

fn particle_id(k: usize) -> String {
    match GLYPHS.get(k) {
        Some(&g) => String::from(g as char),
        None => format!("p{k}"),
    }
}

fn particle_label(id: &str) -> char {
    match id.parse::<char>() {
        Ok(c) => c,
        Err(_) => {
            let k: usize = id[1..].parse().unwrap_or(0);
            GLYPHS[k % GLYPHS.len()] as char
        }
    }
}

/// `d`, then the choice for each variable (`l` for True), a final `d, r`
/// to the outputs, then one ⟨d,l,d,r⟩ for the clauses and one for the check.
pub fn assignment_to_sequence(f: &CnfFormula, a: &Assignment) -> Vec<Move> {
    let mut s = variable_sequence(&a.values[..f.n]);
    s.push(Move::Right);
    s.extend_from_slice(&LOGIC_PHASE);
    s.extend_from_slice(&LOGIC_PHASE);
    s
}

/// ⟨d, c1, d, c2, ..., d, cn, d⟩.
pub fn variable_sequence(choices: &[bool]) -> Vec<Move> {
    let mut s = Vec::with_capacity(2 * choices.len() + 1);
    for &v in choices {
        s.push(Move::Down);
        s.push(if v { Move::Left } else { Move::Right });
    }
    s.push(Move::Down);
    s
}

/// Removes commands that cannot change the outcome, to a fixpoint:
/// `d,u` pairs and lone `u`, repeated commands, leading `l`/`r`, and all
/// but the last of a run of `l`/`r`.
pub fn canonicalize_sequence(s: &[Move]) -> Vec<Move> {
    let mut cur: Vec<Move> = s.to_vec();
    loop {
        let mut next: Vec<Move> = Vec::with_capacity(cur.len());
        for &m in &cur {
            if m == Move::Up {
                if next.last() == Some(&Move::Down) {
                    next.pop();
                }
                continue;
            }
            if next.last() == Some(&m) {
                continue;
            }
            let horizontal = !m.is_vertical();
            if horizontal {
                if let Some(&last) = next.last() {
                    if !last.is_vertical() {
                        next.pop();
                    }
                }
                if next.is_empty() {
                    continue;
                }
            }
            next.push(m);
        }
        if next == cur {
            return next;
        }
        cur = next;
    }
}
