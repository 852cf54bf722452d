//! Workspaces, particles and the maximal-slide move engine.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// A grid cell. `x` grows rightward, `y` grows upward, origin bottom-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn step(self, m: Move) -> Cell {
        let (dx, dy) = m.delta();
        Cell::new(self.x + dx, self.y + dy)
    }
}

// Row-major from the bottom: (y, x). Goals and obstacle lists use this order.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Move::Up => (0, 1),
            Move::Down => (0, -1),
            Move::Left => (-1, 0),
            Move::Right => (1, 0),
        }
    }

    pub fn token(self) -> char {
        match self {
            Move::Up => 'u',
            Move::Down => 'd',
            Move::Left => 'l',
            Move::Right => 'r',
        }
    }

    /// Accepts `u d l r`, the script ell and upper case.
    pub fn from_token(c: char) -> Option<Move> {
        match c {
            'u' | 'U' => Some(Move::Up),
            'd' | 'D' => Some(Move::Down),
            'l' | 'L' | 'ℓ' => Some(Move::Left),
            'r' | 'R' => Some(Move::Right),
            _ => None,
        }
    }

    pub fn opposite(self) -> Move {
        match self {
            Move::Up => Move::Down,
            Move::Down => Move::Up,
            Move::Left => Move::Right,
            Move::Right => Move::Left,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Move::Up | Move::Down)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

pub type MoveSequence = Vec<Move>;

/// The clock cycle shared by every gate and wire.
pub const CLOCK: [Move; 4] = [Move::Down, Move::Left, Move::Up, Move::Right];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadMove(pub char);

impl fmt::Display for BadMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "illegal move token {:?}", self.0)
    }
}

/// Parses "r,d,l", "rdl" or "r d l". Separators are commas and whitespace.
pub fn parse_moves(text: &str) -> Result<MoveSequence, BadMove> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| Move::from_token(c).ok_or(BadMove(c)))
        .collect()
}

pub fn format_moves(seq: &[Move]) -> String {
    let mut s = String::with_capacity(seq.len() * 2);
    for (i, m) in seq.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push(m.token());
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Unit,
    /// Two cells, anchor and the one to its right.
    Horizontal,
    /// Two cells, anchor and the one above it.
    Vertical,
}

impl Shape {
    pub fn cells(self, anchor: Cell) -> ([Cell; 2], usize) {
        match self {
            Shape::Unit => ([anchor, anchor], 1),
            Shape::Horizontal => ([anchor, Cell::new(anchor.x + 1, anchor.y)], 2),
            Shape::Vertical => ([anchor, Cell::new(anchor.x, anchor.y + 1)], 2),
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Shape::Unit => "1x1",
            Shape::Horizontal => "2x1h",
            Shape::Vertical => "2x1v",
        }
    }

    pub fn from_code(s: &str) -> Option<Shape> {
        match s {
            "1x1" => Some(Shape::Unit),
            "2x1h" => Some(Shape::Horizontal),
            "2x1v" => Some(Shape::Vertical),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Particle {
    pub id: String,
    pub label: char,
    pub shape: Shape,
    pub anchor: Cell,
}

impl Particle {
    pub fn unit(id: impl Into<String>, label: char, at: Cell) -> Self {
        Particle { id: id.into(), label, shape: Shape::Unit, anchor: at }
    }

    pub fn domino(id: impl Into<String>, label: char, shape: Shape, anchor: Cell) -> Self {
        Particle { id: id.into(), label, shape, anchor }
    }

    pub fn covers(&self, c: Cell) -> bool {
        let (cells, n) = self.shape.cells(self.anchor);
        cells[..n].contains(&c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Who {
    Any,
    Id(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Goal {
    pub who: Who,
    pub cell: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WorkspaceError {
    #[error("cell ({x},{y}) is outside the {w}x{h} grid")]
    OutOfBounds { x: i32, y: i32, w: usize, h: usize },
    #[error("workspace is not bounded: boundary cell ({x},{y}) is free")]
    Unbounded { x: i32, y: i32 },
    #[error("particle {id} overlaps an obstacle at ({x},{y})")]
    OnObstacle { id: String, x: i32, y: i32 },
    #[error("particles {a} and {b} overlap at ({x},{y})")]
    Overlap { a: String, b: String, x: i32, y: i32 },
    #[error("duplicate particle id {0}")]
    DuplicateId(String),
    #[error("goal names unknown particle {0}")]
    UnknownGoalId(String),
    #[error("workspace dimensions must be at least 1x1")]
    Empty,
}

/// A bounded grid of obstacles with particles and optional goals.
///
/// Particles are kept sorted by id and goals by cell, so two workspaces
/// holding the same data compare equal regardless of construction order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Workspace {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    particles: Vec<Particle>,
    goals: Vec<Goal>,
}

impl Workspace {
    /// A workspace whose boundary ring is obstacle and interior free.
    pub fn new(width: usize, height: usize) -> Self {
        let mut w = Workspace::open(width, height);
        for x in 0..width as i32 {
            w.set_obstacle(Cell::new(x, 0));
            w.set_obstacle(Cell::new(x, height as i32 - 1));
        }
        for y in 0..height as i32 {
            w.set_obstacle(Cell::new(0, y));
            w.set_obstacle(Cell::new(width as i32 - 1, y));
        }
        w
    }

    /// All cells free; callers must close the boundary before `validate`.
    pub fn open(width: usize, height: usize) -> Self {
        Workspace {
            width,
            height,
            blocked: vec![false; width * height],
            particles: Vec::new(),
            goals: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.blocked[self.idx(c)]
    }

    pub fn set_obstacle(&mut self, c: Cell) {
        if self.in_bounds(c) {
            let i = self.idx(c);
            self.blocked[i] = true;
        }
    }

    pub fn clear_obstacle(&mut self, c: Cell) {
        if self.in_bounds(c) {
            let i = self.idx(c);
            self.blocked[i] = false;
        }
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| Cell::new((i % w) as i32, (i / w) as i32))
    }

    pub fn obstacle_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn particle(&self, id: &str) -> Option<&Particle> {
        self.particles
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.particles[i])
    }

    /// Inserts in id order. Fails only on a duplicate id; geometry is checked by `validate`.
    pub fn add_particle(&mut self, p: Particle) -> Result<(), WorkspaceError> {
        match self.particles.binary_search_by(|q| q.id.cmp(&p.id)) {
            Ok(_) => Err(WorkspaceError::DuplicateId(p.id)),
            Err(i) => {
                self.particles.insert(i, p);
                Ok(())
            }
        }
    }

    pub fn remove_particle(&mut self, id: &str) -> Option<Particle> {
        let i = self.particles.binary_search_by(|p| p.id.as_str().cmp(id)).ok()?;
        Some(self.particles.remove(i))
    }

    pub fn clear_particles(&mut self) {
        self.particles.clear();
    }

    pub fn add_goal(&mut self, g: Goal) {
        let i = self
            .goals
            .binary_search_by(|h| (h.cell, &h.who).cmp(&(g.cell, &g.who)))
            .unwrap_or_else(|i| i);
        self.goals.insert(i, g);
    }

    pub fn clear_goals(&mut self) {
        self.goals.clear();
    }

    /// Checks every type invariant.
    pub fn validate(&self) -> Result<(), WorkspaceError> {
        if self.width == 0 || self.height == 0 {
            return Err(WorkspaceError::Empty);
        }
        let (w, h) = (self.width as i32, self.height as i32);
        for x in 0..w {
            for y in [0, h - 1] {
                if !self.is_obstacle(Cell::new(x, y)) {
                    return Err(WorkspaceError::Unbounded { x, y });
                }
            }
        }
        for y in 0..h {
            for x in [0, w - 1] {
                if !self.is_obstacle(Cell::new(x, y)) {
                    return Err(WorkspaceError::Unbounded { x, y });
                }
            }
        }
        let mut owner: Vec<u32> = vec![u32::MAX; self.width * self.height];
        for (pi, p) in self.particles.iter().enumerate() {
            let (cells, n) = p.shape.cells(p.anchor);
            for &c in &cells[..n] {
                if !self.in_bounds(c) {
                    return Err(WorkspaceError::OutOfBounds {
                        x: c.x,
                        y: c.y,
                        w: self.width,
                        h: self.height,
                    });
                }
                if self.is_obstacle(c) {
                    return Err(WorkspaceError::OnObstacle { id: p.id.clone(), x: c.x, y: c.y });
                }
                let i = self.idx(c);
                if owner[i] != u32::MAX {
                    return Err(WorkspaceError::Overlap {
                        a: self.particles[owner[i] as usize].id.clone(),
                        b: p.id.clone(),
                        x: c.x,
                        y: c.y,
                    });
                }
                owner[i] = pi as u32;
            }
        }
        for g in &self.goals {
            if !self.in_bounds(g.cell) {
                return Err(WorkspaceError::OutOfBounds {
                    x: g.cell.x,
                    y: g.cell.y,
                    w: self.width,
                    h: self.height,
                });
            }
            if let Who::Id(id) = &g.who {
                if self.particle(id).is_none() {
                    return Err(WorkspaceError::UnknownGoalId(id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn occupant(&self, c: Cell) -> Option<&Particle> {
        self.particles.iter().find(|p| p.covers(c))
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupant(c).is_some()
    }

    pub fn goal_met(&self, g: &Goal) -> bool {
        match &g.who {
            Who::Any => self.is_occupied(g.cell),
            Who::Id(id) => self.particle(id).is_some_and(|p| p.covers(g.cell)),
        }
    }

    /// True when every goal holds. Vacuously true without goals.
    pub fn goals_satisfied(&self) -> bool {
        self.goals.iter().all(|g| self.goal_met(g))
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self)
    }

    pub fn apply_move(&self, m: Move) -> Workspace {
        let eng = self.engine();
        let mut anchors = self.anchors();
        let mut scratch = Scratch::default();
        eng.step(&mut anchors, m, &mut scratch);
        self.with_anchors(&anchors)
    }

    pub fn apply_sequence(&self, seq: &[Move]) -> Workspace {
        if seq.is_empty() {
            return self.clone();
        }
        let eng = self.engine();
        let mut anchors = self.anchors();
        let mut scratch = Scratch::default();
        for &m in seq {
            eng.step(&mut anchors, m, &mut scratch);
        }
        self.with_anchors(&anchors)
    }

    /// Particle anchors in id order.
    pub fn anchors(&self) -> Vec<Cell> {
        self.particles.iter().map(|p| p.anchor).collect()
    }

    pub fn with_anchors(&self, anchors: &[Cell]) -> Workspace {
        let mut out = self.clone();
        for (p, a) in out.particles.iter_mut().zip(anchors) {
            p.anchor = *a;
        }
        out
    }

    pub fn canonical_config(&self) -> Configuration {
        Configuration {
            entries: self
                .particles
                .iter()
                .map(|p| ConfigEntry { id: p.id.clone(), shape: p.shape, anchor: p.anchor })
                .collect(),
        }
    }

    /// Copies `other` into this workspace with its lower-left corner at `at`.
    /// Obstacles are or-ed in; particles and goals are appended.
    pub fn stamp(&mut self, other: &Workspace, at: Cell) -> Result<(), WorkspaceError> {
        for c in other.obstacles() {
            self.set_obstacle(Cell::new(c.x + at.x, c.y + at.y));
        }
        for p in &other.particles {
            let mut q = p.clone();
            q.anchor = Cell::new(q.anchor.x + at.x, q.anchor.y + at.y);
            self.add_particle(q)?;
        }
        for g in &other.goals {
            self.add_goal(Goal { who: g.who.clone(), cell: Cell::new(g.cell.x + at.x, g.cell.y + at.y) });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigEntry {
    pub id: String,
    pub shape: Shape,
    pub anchor: Cell,
}

/// Snapshot of particle placements, ordered by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub entries: Vec<ConfigEntry>,
}

impl Configuration {
    /// Stable byte encoding: per entry the id bytes, a NUL, shape code and two i32 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend_from_slice(e.id.as_bytes());
            out.push(0);
            out.push(match e.shape {
                Shape::Unit => 0,
                Shape::Horizontal => 1,
                Shape::Vertical => 2,
            });
            out.extend_from_slice(&e.anchor.x.to_le_bytes());
            out.extend_from_slice(&e.anchor.y.to_le_bytes());
        }
        out
    }
}

/// Reusable buffers for `Engine::step`.
#[derive(Default)]
pub struct Scratch {
    occ: Vec<u32>,
    order: Vec<u32>,
}

/// The static part of a workspace: obstacle grid and particle shapes.
/// Stepping works on a bare anchor slice so search code avoids cloning ids.
#[derive(Clone, Debug)]
pub struct Engine {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    shapes: Vec<Shape>,
}

const EMPTY: u32 = u32::MAX;

impl Engine {
    pub fn new(w: &Workspace) -> Self {
        Engine {
            width: w.width,
            height: w.height,
            blocked: w.blocked.clone(),
            shapes: w.particles.iter().map(|p| p.shape).collect(),
        }
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    #[inline]
    fn idx(&self, c: Cell) -> Option<usize> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            None
        } else {
            Some(c.y as usize * self.width + c.x as usize)
        }
    }

    fn lead(shape: Shape, a: Cell, m: Move) -> i32 {
        let (cells, n) = shape.cells(a);
        let last = cells[n - 1];
        match m {
            Move::Right => last.x,
            Move::Left => a.x,
            Move::Up => last.y,
            Move::Down => a.y,
        }
    }

    /// Moves every particle maximally in direction `m`.
    ///
    /// Particles are processed far-to-near by their leading edge. A particle
    /// can only be blocked by one strictly ahead of it, which has already
    /// settled, so one pass gives the simultaneous-motion fixpoint.
    pub fn step(&self, anchors: &mut [Cell], m: Move, s: &mut Scratch) {
        let cells = self.width * self.height;
        s.occ.clear();
        s.occ.resize(cells, EMPTY);
        for (i, (&a, &sh)) in anchors.iter().zip(&self.shapes).enumerate() {
            let (cs, n) = sh.cells(a);
            for &c in &cs[..n] {
                if let Some(k) = self.idx(c) {
                    s.occ[k] = i as u32;
                }
            }
        }
        s.order.clear();
        s.order.extend(0..anchors.len() as u32);
        let shapes = &self.shapes;
        let key = |i: &u32| Self::lead(shapes[*i as usize], anchors[*i as usize], m);
        match m {
            Move::Right | Move::Up => s.order.sort_by_key(|i| core::cmp::Reverse(key(i))),
            Move::Left | Move::Down => s.order.sort_by_key(key),
        }
        for oi in 0..s.order.len() {
            let i = s.order[oi] as usize;
            let sh = self.shapes[i];
            let mut a = anchors[i];
            loop {
                let next = a.step(m);
                let (cs, n) = sh.cells(next);
                let free = cs[..n].iter().all(|&c| match self.idx(c) {
                    None => false,
                    Some(k) => !self.blocked[k] && (s.occ[k] == EMPTY || s.occ[k] == i as u32),
                });
                if !free {
                    break;
                }
                a = next;
            }
            if a != anchors[i] {
                let (old, n) = sh.cells(anchors[i]);
                for &c in &old[..n] {
                    if let Some(k) = self.idx(c) {
                        s.occ[k] = EMPTY;
                    }
                }
                let (new, n) = sh.cells(a);
                for &c in &new[..n] {
                    if let Some(k) = self.idx(c) {
                        s.occ[k] = i as u32;
                    }
                }
                anchors[i] = a;
            }
        }
    }

    pub fn run(&self, anchors: &mut [Cell], seq: &[Move], s: &mut Scratch) {
        for &m in seq {
            self.step(anchors, m, s);
        }
    }
}
