//! Breadth-first search over configurations.
//!
//! States are particle anchors in id order, packed one `u32` cell index per
//! particle. Children are generated in the order u, d, l, r and a direction
//! is never repeated (the second press would be a no-op), so the first path
//! found to any configuration is the lexicographically least of the
//! shortest ones.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::sim::{Cell, Configuration, Engine, Goal, Move, Scratch, Who, Workspace};

pub const DEFAULT_CAP: usize = 10_000_000;

/// Move order used for expansion and tie breaking.
pub const ORDER: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoalSpec {
    /// Labeled or unlabeled goal cells; all must hold.
    Goals(Vec<Goal>),
    /// Every particle on the given anchor, in id order.
    Configuration(Vec<Cell>),
}

impl GoalSpec {
    /// The goals stored in the workspace.
    pub fn from_workspace(w: &Workspace) -> Self {
        GoalSpec::Goals(w.goals().to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Solved,
    Unsolvable,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub status: Status,
    pub sequence: Option<Vec<Move>>,
    pub explored: usize,
    pub frontier_peak: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("workspace has no particles")]
    NoParticles,
    #[error("goal configuration lists {got} anchors for {want} particles")]
    GoalArity { got: usize, want: usize },
    #[error("search budget of {0} configurations exhausted")]
    Budget(usize),
}

/// Compiled goal test over packed states: each goal holds when some listed
/// particle sits on one of the listed anchors.
enum Check {
    Cells(Vec<Vec<(usize, u32)>>),
    Exact(Box<[u32]>),
}

impl Check {
    fn holds(&self, key: &[u32]) -> bool {
        match self {
            Check::Exact(k) => **k == *key,
            Check::Cells(goals) => goals.iter().all(|g| g.iter().any(|&(i, k)| key[i] == k)),
        }
    }
}

struct Space {
    engine: Engine,
    width: i32,
    n: usize,
}

impl Space {
    fn new(w: &Workspace) -> Self {
        Space { engine: w.engine(), width: w.width() as i32, n: w.particles().len() }
    }
    fn pack(&self, anchors: &[Cell]) -> Box<[u32]> {
        anchors.iter().map(|c| (c.y * self.width + c.x) as u32).collect()
    }
    fn unpack(&self, key: &[u32], out: &mut Vec<Cell>) {
        out.clear();
        out.extend(key.iter().map(|&k| Cell::new(k as i32 % self.width, k as i32 / self.width)));
    }
}

fn compile(w: &Workspace, space: &Space, goal: &GoalSpec) -> Result<Check, SolveError> {
    match goal {
        GoalSpec::Configuration(cells) => {
            if cells.len() != space.n {
                return Err(SolveError::GoalArity { got: cells.len(), want: space.n });
            }
            Ok(Check::Exact(space.pack(cells)))
        }
        GoalSpec::Goals(goals) => {
            let shapes = space.engine.shapes();
            let mut out = Vec::new();
            for g in goals {
                let mut pairs = Vec::new();
                for (i, p) in w.particles().iter().enumerate() {
                    if let Who::Id(id) = &g.who {
                        if *id != p.id {
                            continue;
                        }
                    }
                    // anchors whose footprint covers the goal cell
                    for (dx, dy) in [(0, 0), (-1, 0), (0, -1)] {
                        let a = Cell::new(g.cell.x + dx, g.cell.y + dy);
                        let (cells, len) = shapes[i].cells(a);
                        if a.x >= 0 && a.y >= 0 && w.in_bounds(a) && cells[..len].contains(&g.cell) {
                            pairs.push((i, space.pack(&[a])[0]));
                        }
                    }
                }
                out.push(pairs);
            }
            Ok(Check::Cells(out))
        }
    }
}

/// Shortest command sequence reaching `goal`, or proof that none exists.
pub fn bfs_shortest_sequence(w: &Workspace, goal: &GoalSpec, cap: usize) -> Result<SearchResult, SolveError> {
    if w.particles().is_empty() {
        return Err(SolveError::NoParticles);
    }
    let space = Space::new(w);
    let check = compile(w, &space, goal)?;
    let start = space.pack(&w.anchors());
    if check.holds(&start) {
        return Ok(SearchResult { status: Status::Solved, sequence: Some(Vec::new()), explored: 1, frontier_peak: 1 });
    }
    // parent index and move per discovered state
    let mut states: Vec<(Box<[u32]>, u32, u8)> = Vec::new();
    let mut seen: HashMap<Box<[u32]>, u32> = HashMap::new();
    seen.insert(start.clone(), 0);
    states.push((start, u32::MAX, u8::MAX));
    let mut queue: VecDeque<u32> = VecDeque::from([0]);
    let mut peak = 1;
    let mut scratch = Scratch::default();
    let mut anchors = Vec::with_capacity(space.n);
    while let Some(idx) = queue.pop_front() {
        let (key, _, last) = &states[idx as usize];
        let last = *last;
        let key = key.clone();
        for (mi, &m) in ORDER.iter().enumerate() {
            if mi as u8 == last {
                continue;
            }
            space.unpack(&key, &mut anchors);
            space.engine.step(&mut anchors, m, &mut scratch);
            let child = space.pack(&anchors);
            if seen.contains_key(&child) {
                continue;
            }
            if seen.len() >= cap {
                return Ok(SearchResult {
                    status: Status::BudgetExhausted,
                    sequence: None,
                    explored: seen.len(),
                    frontier_peak: peak,
                });
            }
            let ci = states.len() as u32;
            seen.insert(child.clone(), ci);
            let hit = check.holds(&child);
            states.push((child, idx, mi as u8));
            if hit {
                return Ok(SearchResult {
                    status: Status::Solved,
                    sequence: Some(trace(&states, ci)),
                    explored: seen.len(),
                    frontier_peak: peak.max(queue.len() + 1),
                });
            }
            queue.push_back(ci);
            peak = peak.max(queue.len());
        }
    }
    Ok(SearchResult { status: Status::Unsolvable, sequence: None, explored: seen.len(), frontier_peak: peak })
}

fn trace(states: &[(Box<[u32]>, u32, u8)], mut i: u32) -> Vec<Move> {
    let mut out = Vec::new();
    while states[i as usize].1 != u32::MAX {
        out.push(ORDER[states[i as usize].2 as usize]);
        i = states[i as usize].1;
    }
    out.reverse();
    out
}

pub fn is_solvable(w: &Workspace, goal: &GoalSpec, cap: usize) -> Result<bool, SolveError> {
    let r = bfs_shortest_sequence(w, goal, cap)?;
    match r.status {
        Status::Solved => Ok(true),
        Status::Unsolvable => Ok(false),
        Status::BudgetExhausted => Err(SolveError::Budget(cap)),
    }
}

#[derive(Clone, Debug, Default)]
pub struct Reachable {
    pub configs: HashSet<Configuration>,
    /// False when the cap stopped enumeration early.
    pub complete: bool,
}

/// Every configuration reachable from the start, the start included.
pub fn reachable_configs(w: &Workspace, cap: usize) -> Reachable {
    let mut out = Reachable { configs: HashSet::new(), complete: true };
    let space = Space::new(w);
    let mut seen: HashSet<Box<[u32]>> = HashSet::new();
    let start = space.pack(&w.anchors());
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    let mut scratch = Scratch::default();
    let mut anchors = Vec::with_capacity(space.n);
    'outer: while let Some(key) = queue.pop_front() {
        for &m in &ORDER {
            space.unpack(&key, &mut anchors);
            space.engine.step(&mut anchors, m, &mut scratch);
            let child = space.pack(&anchors);
            if seen.contains(&child) {
                continue;
            }
            if seen.len() >= cap {
                out.complete = false;
                break 'outer;
            }
            seen.insert(child.clone());
            queue.push_back(child);
        }
    }
    let mut cells = Vec::new();
    for key in &seen {
        space.unpack(key, &mut cells);
        out.configs.insert(w.with_anchors(&cells).canonical_config());
    }
    out
}
