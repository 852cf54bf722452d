//! The TWF text format and ASCII rendering.
//!
//! ```text
//! TWF v1 6 4
//! ######
//! #a.BB#
//! #..#.#
//! ######
//! GOALS
//! a 4 1
//! ```
//!
//! Rows are listed top first. `#` is an obstacle, `.` free, a lowercase
//! letter or digit a unit particle, and an uppercase letter filling exactly
//! two adjacent cells a domino. An optional `GOALS` line starts a section of
//! `<id|*> <x> <y>` rows.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::sim::{Cell, Goal, Particle, Shape, Who, Workspace, WorkspaceError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TwfError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: row has {got} cells, expected {want}")]
    RowLength { line: usize, got: usize, want: usize },
    #[error("line {line}, column {col}: unknown glyph {glyph:?}")]
    Glyph { line: usize, col: usize, glyph: char },
    #[error("domino {id}: halves not adjacent at ({x0},{y0}) and ({x1},{y1})")]
    DominoSplit { id: char, x0: i32, y0: i32, x1: i32, y1: i32 },
    #[error("domino {id}: expected exactly two cells, found {count} (first at ({x},{y}))")]
    DominoCount { id: char, count: usize, x: i32, y: i32 },
    #[error("unit particle {id} appears twice, at ({x0},{y0}) and ({x1},{y1})")]
    DuplicateUnit { id: char, x0: i32, y0: i32, x1: i32, y1: i32 },
    #[error("particle {0} cannot be written as a TWF glyph")]
    Unrepresentable(String),
    #[error(transparent)]
    Invalid(#[from] WorkspaceError),
}

fn syntax(line: usize, msg: impl Into<String>) -> TwfError {
    TwfError::Syntax { line, msg: msg.into() }
}

pub fn parse(text: &str) -> Result<Workspace, TwfError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (hl, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("TWF") || tok.next() != Some("v1") {
        return Err(syntax(hl, "expected header \"TWF v1 <width> <height>\""));
    }
    let mut dim = || -> Result<usize, TwfError> {
        tok.next()
            .and_then(|t| t.parse::<usize>().ok())
            .filter(|v| *v > 0)
            .ok_or_else(|| syntax(hl, "bad width or height"))
    };
    let (w, h) = (dim()?, dim()?);
    let mut ws = Workspace::open(w, h);
    let mut units: BTreeMap<char, Cell> = BTreeMap::new();
    let mut dominoes: BTreeMap<char, Vec<Cell>> = BTreeMap::new();
    for r in 0..h {
        let (ln, row) = lines.next().ok_or_else(|| syntax(hl + r + 1, "missing grid row"))?;
        let glyphs: Vec<char> = row.chars().collect();
        if glyphs.len() != w {
            return Err(TwfError::RowLength { line: ln, got: glyphs.len(), want: w });
        }
        let y = (h - 1 - r) as i32;
        for (x, &g) in glyphs.iter().enumerate() {
            let c = Cell::new(x as i32, y);
            match g {
                '#' => ws.set_obstacle(c),
                '.' => {}
                'a'..='z' | '0'..='9' => {
                    if let Some(prev) = units.insert(g, c) {
                        return Err(TwfError::DuplicateUnit {
                            id: g,
                            x0: prev.x,
                            y0: prev.y,
                            x1: c.x,
                            y1: c.y,
                        });
                    }
                }
                'A'..='Z' => dominoes.entry(g).or_default().push(c),
                _ => return Err(TwfError::Glyph { line: ln, col: x + 1, glyph: g }),
            }
        }
    }
    for (g, c) in units {
        ws.add_particle(Particle::unit(g.to_string(), g, c))?;
    }
    for (g, cells) in dominoes {
        if cells.len() != 2 {
            return Err(TwfError::DominoCount { id: g, count: cells.len(), x: cells[0].x, y: cells[0].y });
        }
        let (a, b) = (cells[0].min(cells[1]), cells[0].max(cells[1]));
        let shape = if a.y == b.y && b.x == a.x + 1 {
            Shape::Horizontal
        } else if a.x == b.x && b.y == a.y + 1 {
            Shape::Vertical
        } else {
            return Err(TwfError::DominoSplit { id: g, x0: a.x, y0: a.y, x1: b.x, y1: b.y });
        };
        ws.add_particle(Particle::domino(g.to_string(), g, shape, a))?;
    }
    let mut in_goals = false;
    for (ln, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if !in_goals {
            if t == "GOALS" {
                in_goals = true;
                continue;
            }
            return Err(syntax(ln, "unexpected text after grid"));
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(syntax(ln, "goal rows are \"<id|*> <x> <y>\""));
        }
        let coord = |s: &str| s.parse::<i32>().map_err(|_| syntax(ln, "bad goal coordinate"));
        let cell = Cell::new(coord(parts[1])?, coord(parts[2])?);
        let who = if parts[0] == "*" { Who::Any } else { Who::Id(parts[0].to_string()) };
        ws.add_goal(Goal { who, cell });
    }
    ws.validate()?;
    Ok(ws)
}

fn glyph_for(p: &Particle) -> Option<char> {
    let mut it = p.id.chars();
    let g = it.next()?;
    if it.next().is_some() || g != p.label {
        return None;
    }
    let ok = match p.shape {
        Shape::Unit => g.is_ascii_lowercase() || g.is_ascii_digit(),
        _ => g.is_ascii_uppercase(),
    };
    ok.then_some(g)
}

fn grid(ws: &Workspace, glyph: impl Fn(&Particle) -> char) -> Vec<Vec<char>> {
    let (w, h) = (ws.width(), ws.height());
    let mut rows = alloc::vec![alloc::vec!['.'; w]; h];
    for c in ws.obstacles() {
        rows[h - 1 - c.y as usize][c.x as usize] = '#';
    }
    for p in ws.particles() {
        let (cells, n) = p.shape.cells(p.anchor);
        for c in &cells[..n] {
            if ws.in_bounds(*c) {
                rows[h - 1 - c.y as usize][c.x as usize] = glyph(p);
            }
        }
    }
    rows
}

/// Exact serialization. Fails when a particle id is not a single glyph that
/// also matches its label and shape class.
pub fn serialize(ws: &Workspace) -> Result<String, TwfError> {
    for p in ws.particles() {
        if glyph_for(p).is_none() {
            return Err(TwfError::Unrepresentable(p.id.clone()));
        }
    }
    let mut out = format!("TWF v1 {} {}\n", ws.width(), ws.height());
    for row in grid(ws, |p| p.label) {
        out.extend(row);
        out.push('\n');
    }
    if !ws.goals().is_empty() {
        out.push_str("GOALS\n");
        for g in ws.goals() {
            let who = match &g.who {
                Who::Any => "*",
                Who::Id(id) => id.as_str(),
            };
            out.push_str(&format!("{} {} {}\n", who, g.cell.x, g.cell.y));
        }
    }
    Ok(out)
}

/// Grid drawing with particle labels; never fails.
pub fn render_ascii(ws: &Workspace) -> String {
    let mut out = String::new();
    for row in grid(ws, |p| p.label) {
        out.extend(row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Move;

    #[test]
    fn smallest_workspace() {
        let ws = parse("TWF v1 3 3\n###\n#.#\n###\n").unwrap();
        assert_eq!((ws.width(), ws.height(), ws.obstacle_count()), (3, 3, 8));
        assert_eq!(serialize(&ws).unwrap(), "TWF v1 3 3\n###\n#.#\n###\n");
        assert_eq!(render_ascii(&ws).lines().count(), 3);
    }

    #[test]
    fn domino_and_goals() {
        let text = "TWF v1 6 4\n######\n#a.BB#\n#..#.#\n######\nGOALS\na 4 1\n* 1 2\n";
        let ws = parse(text).unwrap();
        let b = ws.particle("B").unwrap();
        assert_eq!((b.shape, b.anchor), (Shape::Horizontal, Cell::new(3, 2)));
        // goals come back ordered by (y, x)
        let out = serialize(&ws).unwrap();
        assert!(out.ends_with("GOALS\na 4 1\n* 1 2\n"));
        assert_eq!(parse(&out).unwrap(), ws);
        let moved = ws.apply_move(Move::Down);
        assert_eq!(moved.particle("a").unwrap().anchor, Cell::new(1, 1));
    }

    #[test]
    fn vertical_domino() {
        let ws = parse("TWF v1 3 4\n###\n#V#\n#V#\n###\n").unwrap();
        let v = ws.particle("V").unwrap();
        assert_eq!((v.shape, v.anchor), (Shape::Vertical, Cell::new(1, 1)));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("TWF v1 4 3\n####\n#A.A\n####\n"), Err(TwfError::DominoSplit { .. })));
        assert!(matches!(parse("TWF v1 4 3\n####\n#A.#\n####\n"), Err(TwfError::DominoCount { .. })));
        assert!(matches!(parse("TWF v1 4 3\n####\n#..#\n###\n"), Err(TwfError::RowLength { line: 4, .. })));
        assert!(matches!(parse("TWF v1 3 3\n###\n#.#\n#.#\n"), Err(TwfError::Invalid(WorkspaceError::Unbounded { .. }))));
        assert!(matches!(parse("TWF v1 4 3\n####\n#aa#\n####\n"), Err(TwfError::DuplicateUnit { .. })));
        assert!(matches!(parse("TWF v1 3 3\n###\n#?#\n###\n"), Err(TwfError::Glyph { glyph: '?', .. })));
        assert!(matches!(parse("TWF v2 3 3\n"), Err(TwfError::Syntax { line: 1, .. })));
        assert!(matches!(parse("TWF v1 3 3\n###\n#.#\n###\nGOALS\nz 1 1\n"), Err(TwfError::Invalid(WorkspaceError::UnknownGoalId(_)))));
    }

    #[test]
    fn unrepresentable_ids() {
        let mut ws = Workspace::new(3, 3);
        ws.add_particle(Particle::unit("in.A", 'a', Cell::new(1, 1))).unwrap();
        assert!(matches!(serialize(&ws), Err(TwfError::Unrepresentable(_))));
        assert_eq!(render_ascii(&ws), "###\n#a#\n###\n");
    }
}
