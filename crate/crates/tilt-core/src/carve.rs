use alloc::collections::BTreeSet;

use crate::sim::{Cell, Workspace};

/// Free cells collected while laying out; everything else is rock.
#[derive(Default)]
pub(crate) struct Carve {
    free: BTreeSet<Cell>,
}

impl Carve {
    pub(crate) fn cell(&mut self, x: i32, y: i32) {
        self.free.insert(Cell::new(x, y));
    }
    pub(crate) fn row(&mut self, y: i32, x0: i32, x1: i32) {
        for x in x0.min(x1)..=x0.max(x1) {
            self.cell(x, y);
        }
    }
    pub(crate) fn col(&mut self, x: i32, y0: i32, y1: i32) {
        for y in y0.min(y1)..=y0.max(y1) {
            self.cell(x, y);
        }
    }
    pub(crate) fn span(&self) -> (i32, i32, i32, i32) {
        let xs = self.free.iter().map(|c| c.x);
        let ys = self.free.iter().map(|c| c.y);
        (xs.clone().min().unwrap(), xs.max().unwrap(), ys.clone().min().unwrap(), ys.max().unwrap())
    }
    /// A rock-filled workspace just big enough, shifted so the lowest
    /// and leftmost free cells are at 1. Returns the shift.
    pub(crate) fn build(&self) -> (Workspace, Cell) {
        let (x0, x1, y0, y1) = self.span();
        let (dx, dy) = (1 - x0, 1 - y0);
        let w = (x1 + dx + 2) as usize;
        let h = (y1 + dy + 2) as usize;
        let mut ws = Workspace::open(w, h);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                ws.set_obstacle(Cell::new(x, y));
            }
        }
        for c in &self.free {
            ws.clear_obstacle(Cell::new(c.x + dx, c.y + dy));
        }
        (ws, Cell::new(dx, dy))
    }
}

