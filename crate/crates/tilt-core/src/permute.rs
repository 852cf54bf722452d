//! Matrix permutation workspaces and generator decompositions.
//!
//! Matrices sit with their lower-left cell at a base cell. Indices are
//! row-major with row 0 on top. A [`Permutation`] maps a source index to the
//! target index the element ends up in.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::sim::{Cell, Move, MoveSequence, Particle, Workspace};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PermuteError {
    #[error("mapping is not a bijection on 0..{0}")]
    NotBijection(usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("matrix dimensions must be positive with a_r*a_c = b_r*b_c")]
    BadMatrix,
    #[error("more than two colors")]
    TooManyColors,
    #[error("source and target color counts differ")]
    ColorCounts,
    #[error("selector needs at least one permutation")]
    NoPermutations,
    #[error("target has fewer rows than source ({b_r} < {a_r})")]
    ShortTarget { a_r: usize, b_r: usize },
    #[error("source and target shapes must match")]
    Reshape,
    #[error("bad generator token {0:?}")]
    BadToken(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, PermuteError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &t in &map {
            if t >= n || seen[t] {
                return Err(PermuteError::NotBijection(n));
            }
            seen[t] = true;
        }
        Ok(Permutation(map))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// Swaps indices `a` and `b`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut m: Vec<usize> = (0..n).collect();
        m.swap(a, b);
        Permutation(m)
    }

    /// The cycle i -> i+1 (mod n).
    pub fn rotation(n: usize) -> Self {
        Permutation((0..n).map(|i| (i + 1) % n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &t)| i == t)
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&t| next.0[t]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &t) in self.0.iter().enumerate() {
            inv[t] = i;
        }
        Permutation(inv)
    }

    pub fn pow(&self, t: u64) -> Permutation {
        let mut out = Permutation::identity(self.len());
        for _ in 0..t {
            out = out.then(self);
        }
        out
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut j = s;
            while !seen[j] {
                seen[j] = true;
                cyc.push(j);
                j = self.0[j];
            }
            out.push(cyc);
        }
        out
    }

    /// Least t >= 1 with self^t = id: the lcm of the cycle lengths.
    pub fn order(&self) -> u64 {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        self.cycles().iter().fold(1u64, |acc, c| {
            let l = c.len() as u64;
            acc / gcd(acc, l) * l
        })
    }
}

pub fn permutation_order(p: &Permutation) -> u64 {
    p.order()
}

/// A permutation sending every source cell to a target cell of the same
/// color, which is its own inverse. Colors are arbitrary values, at most two.
pub fn make_involution<T: PartialEq + Clone>(source: &[T], target: &[T]) -> Result<Permutation, PermuteError> {
    if source.len() != target.len() {
        return Err(PermuteError::SizeMismatch(source.len(), target.len()));
    }
    let mut colors: Vec<T> = Vec::new();
    for c in source.iter().chain(target) {
        if !colors.contains(c) {
            colors.push(c.clone());
        }
    }
    if colors.len() > 2 {
        return Err(PermuteError::TooManyColors);
    }
    let mut map: Vec<usize> = (0..source.len()).collect();
    // Mismatched cells come in two kinds; pairing them off swaps colors.
    let first = colors.first();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..source.len() {
        if source[i] != target[i] {
            if Some(&source[i]) == first {
                xs.push(i);
            } else {
                ys.push(i);
            }
        }
    }
    if xs.len() != ys.len() {
        return Err(PermuteError::ColorCounts);
    }
    for (&x, &y) in xs.iter().zip(&ys) {
        map[x] = y;
        map[y] = x;
    }
    Ok(Permutation(map))
}

/// Base permutations. `P(i)` swaps index 0 and index i; `Q` rotates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    P(usize),
    Q,
}

impl Generator {
    pub fn permutation(self, n: usize) -> Permutation {
        match self {
            Generator::P(i) => Permutation::transposition(n, 0, i),
            Generator::Q => Permutation::rotation(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alphabet {
    /// p = (1,2) and q.
    Two,
    /// p1..p(N-1) and q.
    Star,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorWord {
    pub alphabet: Alphabet,
    pub letters: Vec<Generator>,
}

impl GeneratorWord {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Left-to-right composition on `n` elements.
    pub fn evaluate(&self, n: usize) -> Permutation {
        self.letters.iter().fold(Permutation::identity(n), |acc, g| acc.then(&g.permutation(n)))
    }

    /// Parses "p q q p" or "p3 q p1". A bare `p` is p1.
    pub fn parse(text: &str) -> Result<GeneratorWord, PermuteError> {
        let mut letters = Vec::new();
        let mut star = false;
        for tok in text.split_whitespace() {
            let g = match tok {
                "q" => Generator::Q,
                "p" => Generator::P(1),
                t if t.starts_with('p') => {
                    star = true;
                    match t[1..].parse::<usize>() {
                        Ok(i) if i >= 1 => Generator::P(i),
                        _ => return Err(PermuteError::BadToken(t.to_string())),
                    }
                }
                t => return Err(PermuteError::BadToken(t.to_string())),
            };
            letters.push(g);
        }
        Ok(GeneratorWord { alphabet: if star { Alphabet::Star } else { Alphabet::Two }, letters })
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, g) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            match (g, self.alphabet) {
                (Generator::Q, _) => f.write_str("q")?,
                (Generator::P(_), Alphabet::Two) => f.write_str("p")?,
                (Generator::P(i), Alphabet::Star) => write!(f, "p{}", i)?,
            }
        }
        Ok(())
    }
}

/// Bubble sort in a rotating frame: q turns the frame, p swaps the two
/// elements at positions 0 and 1. Tries every final rotation and keeps the
/// shortest word.
pub fn decompose_two_generators(pi: &Permutation) -> GeneratorWord {
    let n = pi.len();
    let mut best: Option<Vec<Generator>> = None;
    if n >= 2 {
        for r in 0..n {
            let w = rotating_bubble(pi, r);
            if best.as_ref().is_none_or(|b| w.len() < b.len()) {
                best = Some(w);
            }
        }
    }
    GeneratorWord { alphabet: Alphabet::Two, letters: best.unwrap_or_default() }
}

fn rotating_bubble(pi: &Permutation, r: usize) -> Vec<Generator> {
    let n = pi.len();
    // Frame slot j sits at position (j + t) mod n after t rotations. The
    // item bound for position pi[item] must end in slot pi[item] - r.
    let key = |item: usize| (pi.0[item] + n - r) % n;
    let mut frame: Vec<usize> = (0..n).collect();
    let mut w = Vec::new();
    let mut t = 0usize;
    while (0..n).any(|j| key(frame[j]) != j) {
        let s = (n - t % n) % n;
        if s != n - 1 && key(frame[s]) > key(frame[s + 1]) {
            w.push(Generator::P(1));
            frame.swap(s, s + 1);
        }
        w.push(Generator::Q);
        t += 1;
    }
    while t % n != r {
        w.push(Generator::Q);
        t += 1;
    }
    w
}

/// Words over p1..p(N-1) and q. Exact shortest words up to this size, by
/// breadth-first search over all arrangements.
pub const STAR_EXACT_LIMIT: usize = 8;

pub fn decompose_n_generators(pi: &Permutation) -> GeneratorWord {
    let n = pi.len();
    let letters = if n < 2 || pi.is_identity() {
        Vec::new()
    } else if n <= STAR_EXACT_LIMIT {
        star_bfs(pi)
    } else {
        star_heuristic(pi)
    };
    GeneratorWord { alphabet: Alphabet::Star, letters }
}

fn star_generators(n: usize) -> Vec<Generator> {
    let mut g: Vec<Generator> = (1..n).map(Generator::P).collect();
    g.push(Generator::Q);
    g
}

// arrangement[pos] = item; a generator moves the item at pos j to g(j)
fn act(arr: &[u8], g: Generator) -> Vec<u8> {
    let n = arr.len();
    let mut out = arr.to_vec();
    match g {
        Generator::P(i) => out.swap(0, i),
        Generator::Q => {
            for j in 0..n {
                out[(j + 1) % n] = arr[j];
            }
        }
    }
    out
}

fn lehmer_rank(arr: &[u8]) -> usize {
    let n = arr.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller = arr[i + 1..].iter().filter(|&&v| v < arr[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

fn star_bfs(pi: &Permutation) -> Vec<Generator> {
    let n = pi.len();
    let gens = star_generators(n);
    let total: usize = (1..=n).product();
    let mut target = vec![0u8; n];
    for (i, &t) in pi.0.iter().enumerate() {
        target[t] = i as u8;
    }
    let target_rank = lehmer_rank(&target);
    // parent rank and generator index, u32::MAX marks unvisited
    let mut parent: Vec<(u32, u8)> = vec![(u32::MAX, 0); total];
    let start: Vec<u8> = (0..n as u8).collect();
    let start_rank = lehmer_rank(&start);
    parent[start_rank] = (start_rank as u32, 0);
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        let ra = lehmer_rank(&a);
        if ra == target_rank {
            break;
        }
        for (gi, &g) in gens.iter().enumerate() {
            let b = act(&a, g);
            let rb = lehmer_rank(&b);
            if parent[rb].0 == u32::MAX {
                parent[rb] = (ra as u32, gi as u8);
                queue.push_back(b);
            }
        }
    }
    let mut word = Vec::new();
    let mut r = target_rank;
    while r != start_rank {
        let (p, gi) = parent[r];
        word.push(gens[gi as usize]);
        r = p as usize;
    }
    word.reverse();
    word
}

/// Star transpositions sort each cycle; a rotation before or after is
/// chosen to minimise the total.
fn star_heuristic(pi: &Permutation) -> Vec<Generator> {
    let n = pi.len();
    let mut best: Option<Vec<Generator>> = None;
    for a in 0..n {
        // rotation last: sigma(i) = pi(i) - a
        let s1: Vec<usize> = (0..n).map(|i| (pi.0[i] + n - a) % n).collect();
        let mut w1 = star_word(&s1);
        w1.extend(core::iter::repeat_n(Generator::Q, a));
        // rotation first: sigma(j) = pi(j - a)
        let s2: Vec<usize> = (0..n).map(|j| pi.0[(j + n - a) % n]).collect();
        let mut w2: Vec<Generator> = core::iter::repeat_n(Generator::Q, a).collect();
        w2.extend(star_word(&s2));
        for w in [w1, w2] {
            if best.as_ref().is_none_or(|b| w.len() < b.len()) {
                best = Some(w);
            }
        }
    }
    best.unwrap_or_default()
}

// Word taking the identity arrangement to item i at sigma(i): sort the
// target arrangement with swaps against position 0, then reverse.
fn star_word(sigma: &[usize]) -> Vec<Generator> {
    let n = sigma.len();
    let mut b = vec![0usize; n];
    for (i, &t) in sigma.iter().enumerate() {
        b[t] = i;
    }
    let mut swaps = Vec::new();
    loop {
        let j = if b[0] != 0 {
            b[0]
        } else {
            match (1..n).find(|&j| b[j] != j) {
                Some(j) => j,
                None => break,
            }
        };
        b.swap(0, j);
        swaps.push(Generator::P(j));
    }
    swaps.reverse();
    swaps
}

/// Source a_r x a_c, target b_r x b_c, same element count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixSpec {
    pub a_r: usize,
    pub a_c: usize,
    pub b_r: usize,
    pub b_c: usize,
}

impl MatrixSpec {
    pub fn new(a_r: usize, a_c: usize, b_r: usize, b_c: usize) -> Result<Self, PermuteError> {
        if a_r == 0 || a_c == 0 || b_r == 0 || b_c == 0 || a_r * a_c != b_r * b_c {
            return Err(PermuteError::BadMatrix);
        }
        Ok(MatrixSpec { a_r, a_c, b_r, b_c })
    }

    pub fn square(rows: usize, cols: usize) -> Result<Self, PermuteError> {
        Self::new(rows, cols, rows, cols)
    }

    pub fn n(&self) -> usize {
        self.a_r * self.a_c
    }

    /// Local cell of source index i, base at (0,0).
    pub fn source_cell(&self, i: usize) -> Cell {
        Cell::new((i % self.a_c) as i32, (self.a_r - 1 - i / self.a_c) as i32)
    }

    pub fn target_cell(&self, t: usize) -> Cell {
        Cell::new((t % self.b_c) as i32, (self.b_r - 1 - t / self.b_c) as i32)
    }
}

const GLYPHS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// Particle id for element i of an n-element matrix. Single glyphs while
/// they last so small instances stay writable as TWF.
pub fn element_id(i: usize, n: usize) -> String {
    if n <= GLYPHS.len() {
        (GLYPHS[i] as char).to_string()
    } else {
        let width = format!("{}", n - 1).len();
        format!("e{:0width$}", i, width = width)
    }
}

fn element_label(i: usize) -> char {
    GLYPHS[i % 26] as char
}

/// A synthesized workspace holding a labeled matrix at `base`.
#[derive(Clone, Debug)]
pub struct MatrixWorkspace {
    pub workspace: Workspace,
    pub spec: MatrixSpec,
    pub base: Cell,
    /// Particle id of source element i.
    pub ids: Vec<String>,
    /// Obstacles placed by the construction, boundary ring excluded.
    pub constructed: usize,
    /// Bounding box of constructed obstacles and the matrix.
    pub bbox: (usize, usize),
}

impl MatrixWorkspace {
    fn read(&self, ws: &Workspace, rows: usize, cols: usize) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(rows * cols);
        for t in 0..rows * cols {
            let c = Cell::new(self.base.x + (t % cols) as i32, self.base.y + (rows - 1 - t / cols) as i32);
            let p = ws.occupant(c)?;
            out.push(self.ids.iter().position(|id| *id == p.id)?);
        }
        Some(out)
    }

    /// Element index at each target position, or None if the matrix is not
    /// fully assembled in target shape.
    pub fn read_target(&self, ws: &Workspace) -> Option<Vec<usize>> {
        self.read(ws, self.spec.b_r, self.spec.b_c)
    }

    pub fn read_source(&self, ws: &Workspace) -> Option<Vec<usize>> {
        self.read(ws, self.spec.a_r, self.spec.a_c)
    }

    /// True when `ws` holds element i at target position pi(i) for all i.
    pub fn realizes(&self, ws: &Workspace, pi: &Permutation) -> bool {
        match self.read_target(ws) {
            Some(at) => (0..pi.len()).all(|i| at[pi.image(i)] == i),
            None => false,
        }
    }
}

// Shifts local obstacle cells into a ring-bounded workspace and places the
// source matrix.
fn assemble(spec: MatrixSpec, mut obstacles: Vec<Cell>) -> MatrixWorkspace {
    obstacles.sort();
    obstacles.dedup();
    let corners = [Cell::new(0, 0), Cell::new(spec.a_c.max(spec.b_c) as i32 - 1, spec.a_r.max(spec.b_r) as i32 - 1)];
    let all = obstacles.iter().chain(corners.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for c in all {
        x0 = x0.min(c.x);
        y0 = y0.min(c.y);
        x1 = x1.max(c.x);
        y1 = y1.max(c.y);
    }
    let (dx, dy) = (1 - x0, 1 - y0);
    let mut ws = Workspace::new((x1 - x0 + 3) as usize, (y1 - y0 + 3) as usize);
    for c in &obstacles {
        ws.set_obstacle(Cell::new(c.x + dx, c.y + dy));
    }
    let n = spec.n();
    let ids: Vec<String> = (0..n).map(|i| element_id(i, n)).collect();
    for (i, id) in ids.iter().enumerate() {
        let c = spec.source_cell(i);
        ws.add_particle(Particle::unit(id.clone(), element_label(i), Cell::new(c.x + dx, c.y + dy)))
            .expect("element ids are distinct");
    }
    MatrixWorkspace {
        workspace: ws,
        spec,
        base: Cell::new(dx, dy),
        ids,
        constructed: obstacles.len(),
        bbox: ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize),
    }
}

pub const FOUR_MOVES: [Move; 4] = [Move::Up, Move::Right, Move::Down, Move::Left];
pub const CLOCKWISE: [Move; 4] = FOUR_MOVES;
pub const COUNTERCLOCKWISE: [Move; 4] = [Move::Right, Move::Up, Move::Left, Move::Down];

/// Obstacles realizing `pi` under the four moves u, r, d, l.
///
/// u stacks each source column under its own stopper so every element gets
/// a private row; r stops each element in a private drop column (odd columns
/// between them hold the stoppers); d drops it onto its target row; l packs
/// the rows against a wall left of the base.
pub fn build_permutation_workspace(spec: MatrixSpec, pi: &Permutation) -> Result<(MatrixWorkspace, MoveSequence), PermuteError> {
    let n = spec.n();
    if pi.len() != n {
        return Err(PermuteError::SizeMismatch(pi.len(), n));
    }
    let (a_r, a_c, b_r) = (spec.a_r as i32, spec.a_c as i32, spec.b_r as i32);
    let wide = spec.a_c.max(spec.b_c) as i32;
    let h0 = b_r;
    let mut obs = Vec::with_capacity(4 * n + 1);
    for c in 0..a_c {
        obs.push(Cell::new(c, h0 + (c + 1) * a_r));
    }
    // drop columns ordered by (target row from the bottom, target column)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| {
        let t = spec.target_cell(pi.image(i));
        (t.y, t.x)
    });
    for (rank, &i) in order.iter().enumerate() {
        let s = spec.source_cell(i);
        let t = spec.target_cell(pi.image(i));
        let row = h0 + s.x * a_r + s.y;
        let col = wide + 2 * rank as i32;
        obs.push(Cell::new(col + 1, row));
        obs.push(Cell::new(col, t.y - 1));
    }
    for y in 0..b_r {
        obs.push(Cell::new(-1, y));
    }
    Ok((assemble(spec, obs), FOUR_MOVES.to_vec()))
}

#[derive(Clone, Debug)]
pub struct SelectorWorkspace {
    pub matrix: MatrixWorkspace,
    /// Move sequence selecting permutation i.
    pub sequences: Vec<MoveSequence>,
    pub depth: usize,
}

/// Binary selection tree. After r, d every element has a private row and
/// column; each level's l or r choice moves it into the chosen child's
/// column block and d drops it into the next band of rows. Leaves drop
/// elements onto per-leaf landing rows; l packs them against a wall and u
/// lifts the columns under a ceiling above the base.
pub fn build_selector_workspace(perms: &[Permutation], spec: MatrixSpec) -> Result<SelectorWorkspace, PermuteError> {
    let k = perms.len();
    if k == 0 {
        return Err(PermuteError::NoPermutations);
    }
    let n = spec.n();
    if let Some(p) = perms.iter().find(|p| p.len() != n) {
        return Err(PermuteError::SizeMismatch(p.len(), n));
    }
    if spec.b_r < spec.a_r {
        return Err(PermuteError::ShortTarget { a_r: spec.a_r, b_r: spec.b_r });
    }
    let depth = (usize::BITS - (k - 1).leading_zeros()).max(1) as usize;
    let exists = |d: usize, prefix: usize| (prefix << (depth - d)) < k;
    let ni = n as i32;

    // In-order column blocks: the root block holds the packed source rows,
    // other blocks have slots at odd offsets and stoppers between them.
    let mut block = alloc::collections::BTreeMap::new();
    let mut cursor = spec.a_c.max(spec.b_c) as i32 + 1;
    fn place(
        d: usize,
        prefix: usize,
        depth: usize,
        n: i32,
        exists: &dyn Fn(usize, usize) -> bool,
        cursor: &mut i32,
        block: &mut alloc::collections::BTreeMap<(usize, usize), i32>,
    ) {
        if d < depth && exists(d + 1, prefix * 2) {
            place(d + 1, prefix * 2, depth, n, exists, cursor, block);
        }
        block.insert((d, prefix), *cursor);
        *cursor += if d == 0 { n + 1 } else { 2 * n + 1 };
        if d < depth && exists(d + 1, prefix * 2 + 1) {
            place(d + 1, prefix * 2 + 1, depth, n, exists, cursor, block);
        }
    }
    place(0, 0, depth, ni, &exists, &mut cursor, &mut block);

    // Row bands: band j holds element i at row band_top(j) - 2i.
    let band_top = |j: usize| -2 - 2 * ni * j as i32;
    let row = |j: usize, i: usize| band_top(j) - 2 * i as i32;
    let b_r = spec.b_r as i32;
    let landing_bottom = band_top(depth) - 2 * (k as i32 * b_r - 1);
    let landing = |leaf: usize, kk: i32| landing_bottom + 2 * (leaf as i32 * b_r + kk);

    let column = |d: usize, prefix: usize, i: usize| -> i32 {
        let m = block[&(d, prefix)];
        if d == 0 {
            m + i as i32
        } else if d < depth {
            m + 1 + 2 * i as i32
        } else {
            let pi = &perms[prefix];
            let key = |j: usize| {
                let t = spec.target_cell(pi.image(j));
                (t.y, t.x)
            };
            let rank = (0..n).filter(|&j| key(j) < key(i)).count();
            m + 1 + 2 * rank as i32
        }
    };

    let mut obs = Vec::new();
    let root = block[&(0, 0)];
    for r in 0..spec.a_r as i32 {
        obs.push(Cell::new(root + (r + 1) * spec.a_c as i32, spec.a_r as i32 - 1 - r));
    }
    for i in 0..n {
        obs.push(Cell::new(column(0, 0, i), row(0, i) - 1));
    }
    for &(d, prefix) in block.keys() {
        if d == depth {
            continue;
        }
        for bit in 0..2 {
            let child = prefix * 2 + bit;
            if !exists(d + 1, child) {
                continue;
            }
            for i in 0..n {
                let x = column(d + 1, child, i);
                let side = if bit == 1 { 1 } else { -1 };
                obs.push(Cell::new(x + side, row(d, i)));
                let below = if d + 1 < depth {
                    row(d + 1, i)
                } else {
                    landing(child, spec.target_cell(perms[child].image(i)).y)
                };
                obs.push(Cell::new(x, below - 1));
            }
        }
    }
    for leaf in 0..k {
        for kk in 0..b_r {
            obs.push(Cell::new(-1, landing(leaf, kk)));
        }
    }
    for x in 0..spec.b_c as i32 {
        obs.push(Cell::new(x, b_r));
    }

    let sequences = (0..k)
        .map(|leaf| {
            let mut s = vec![Move::Right, Move::Down];
            for lvl in (0..depth).rev() {
                s.push(if (leaf >> lvl) & 1 == 1 { Move::Right } else { Move::Left });
                s.push(Move::Down);
            }
            s.push(Move::Left);
            s.push(Move::Up);
            s
        })
        .collect();
    Ok(SelectorWorkspace { matrix: assemble(spec, obs), sequences, depth })
}

/// One workspace where the clockwise cycle u, r, d, l applies `cw` and the
/// counterclockwise cycle r, u, l, d applies `ccw`.
///
/// Above the base each source column c owns a block of 3*a_r rows: the top
/// a_r rows are where u stacks it, the lower rows (every other one) are where
/// the counterclockwise l delivers elements bound for column c. Right of the
/// base each row y owns a region of 3*a_c columns: drop slots for the
/// clockwise d at every other column, then the a_c cells where the
/// counterclockwise r packs row y. Stoppers shared between the two cycles
/// sit where a block or region begins.
pub fn build_two_perm_workspace(cw: &Permutation, ccw: &Permutation, spec: MatrixSpec) -> Result<MatrixWorkspace, PermuteError> {
    if spec.a_r != spec.b_r || spec.a_c != spec.b_c {
        return Err(PermuteError::Reshape);
    }
    let n = spec.n();
    for p in [cw, ccw] {
        if p.len() != n {
            return Err(PermuteError::SizeMismatch(p.len(), n));
        }
    }
    let (a_r, a_c) = (spec.a_r as i32, spec.a_c as i32);
    let h0 = a_r;
    let v0 = a_c;
    let block = |c: i32| h0 + 3 * a_r * c; // bottom row of column c's block
    let region = |y: i32| v0 + 3 * a_c * y; // first column of row y's region
    let stack_row = |cell: Cell| block(cell.x) + 2 * a_r + cell.y;
    let delivery_row = |cell: Cell| block(cell.x) + 2 * cell.y;
    let drop_col = |cell: Cell| region(cell.y) + 2 * cell.x;
    let pack_col = |cell: Cell| region(cell.y) + 2 * a_c + cell.x;

    let mut obs = Vec::new();
    for c in 0..a_c {
        obs.push(Cell::new(c, block(c + 1)));
        obs.push(Cell::new(c, -1));
    }
    for y in 0..a_r {
        obs.push(Cell::new(-1, y));
        obs.push(Cell::new(region(y + 1), y));
    }
    for i in 0..n {
        let s = spec.source_cell(i);
        let t = spec.source_cell(cw.image(i));
        let x = drop_col(t);
        obs.push(Cell::new(x + 1, stack_row(s)));
        obs.push(Cell::new(x, t.y - 1));
        let t = spec.source_cell(ccw.image(i));
        let y = delivery_row(t);
        obs.push(Cell::new(pack_col(s), y + 1));
        obs.push(Cell::new(t.x - 1, y));
    }
    Ok(assemble(spec, obs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealizeMode {
    /// Two-permutation workspace for p and q, words of length <= N^2.
    TwoGen,
    /// Selector over p1..p(N-1), q.
    NGen,
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub matrix: MatrixWorkspace,
    pub sequence: MoveSequence,
    pub word: GeneratorWord,
}

/// Builds a workspace for the chosen generator set and the move sequence
/// spelling `pi` in it.
pub fn realize_permutation(pi: &Permutation, spec: MatrixSpec, mode: RealizeMode) -> Result<Realization, PermuteError> {
    let n = spec.n();
    if pi.len() != n {
        return Err(PermuteError::SizeMismatch(pi.len(), n));
    }
    if spec.a_r != spec.b_r || spec.a_c != spec.b_c {
        return Err(PermuteError::Reshape);
    }
    match mode {
        RealizeMode::TwoGen => {
            let p = Generator::P(1.min(n.saturating_sub(1))).permutation(n);
            let q = Permutation::rotation(n);
            let matrix = build_two_perm_workspace(&p, &q, spec)?;
            let word = decompose_two_generators(pi);
            let mut sequence = Vec::with_capacity(4 * word.len());
            for g in &word.letters {
                sequence.extend_from_slice(if *g == Generator::Q { &COUNTERCLOCKWISE } else { &CLOCKWISE });
            }
            Ok(Realization { matrix, sequence, word })
        }
        RealizeMode::NGen => {
            let gens = if n < 2 { Vec::new() } else { star_generators(n) };
            let mut perms: Vec<Permutation> = gens.iter().map(|g| g.permutation(n)).collect();
            if perms.is_empty() {
                perms.push(Permutation::identity(n));
            }
            let sel = build_selector_workspace(&perms, spec)?;
            let word = decompose_n_generators(pi);
            let mut sequence = Vec::new();
            for g in &word.letters {
                let idx = gens.iter().position(|h| h == g).expect("word uses star generators");
                sequence.extend_from_slice(&sel.sequences[idx]);
            }
            Ok(Realization { matrix: sel.matrix, sequence, word })
        }
    }
}
