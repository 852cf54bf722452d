//! SVG rendering: obstacles black, free cells white, units as discs,
//! dominoes as capsules and goals as dashed circles.

use std::fmt::Write;

use tilt_core::{Cell, Shape, Who, Workspace};

const CELL: i32 = 24;

const PALETTE: [&str; 10] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45", "#469990", "#9a6324",
];

fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub fn render(w: &Workspace) -> String {
    let (wd, ht) = (w.width() as i32, w.height() as i32);
    // screen y grows downward
    let top = |c: Cell| (ht - 1 - c.y) * CELL;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        wd * CELL,
        ht * CELL,
        wd * CELL,
        ht * CELL
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, wd * CELL, ht * CELL);
    for c in w.obstacles() {
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="black"/>"#, c.x * CELL, top(c));
    }
    let r = CELL / 2 - 3;
    for (i, p) in w.particles().iter().enumerate() {
        let a = p.anchor;
        match p.shape {
            Shape::Unit => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="{r}" fill="{}"><title>{}</title></circle>"#,
                    a.x * CELL + CELL / 2,
                    top(a) + CELL / 2,
                    colour(i),
                    p.id
                );
            }
            Shape::Horizontal | Shape::Vertical => {
                let (cw, ch, y) = if p.shape == Shape::Horizontal {
                    (2 * CELL, CELL, top(a))
                } else {
                    (CELL, 2 * CELL, top(Cell::new(a.x, a.y + 1)))
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" rx="{}" fill="{}"><title>{}</title></rect>"#,
                    a.x * CELL + 3,
                    y + 3,
                    cw - 6,
                    ch - 6,
                    r,
                    colour(i),
                    p.id
                );
            }
        }
    }
    for g in w.goals() {
        let stroke = match &g.who {
            Who::Any => "#555555",
            Who::Id(id) => w.particles().iter().position(|p| &p.id == id).map_or("#555555", colour),
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="{stroke}" stroke-width="2" stroke-dasharray="4 3"/>"#,
            g.cell.x * CELL + CELL / 2,
            top(g.cell) + CELL / 2,
            r + 1
        );
    }
    s.push_str("</svg>\n");
    s
}
