//! Exhaustive truth-table verification of catalog gadgets.

use std::fmt;

use tilt_core::gates::{evaluate_with_state, Gadget};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetCheck {
    pub name: String,
    pub passed: usize,
    pub rows: usize,
    pub area: (usize, usize),
    /// Width and height the gadget must fit in, where one is stated.
    pub bound: Option<(usize, usize)>,
    pub failures: Vec<String>,
}

impl GadgetCheck {
    pub fn fits(&self) -> bool {
        self.bound.is_none_or(|(w, h)| self.area.0 <= w && self.area.1 <= h)
    }

    pub fn ok(&self) -> bool {
        self.passed == self.rows && self.rows > 0 && self.fits()
    }
}

impl fmt::Display for GadgetCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "OK" } else { "FAIL" };
        write!(f, "{verdict}: {}/{} rows, area {}×{}", self.passed, self.rows, self.area.0, self.area.1)?;
        if let Some((w, h)) = self.bound {
            let rel = if self.fits() { "≤" } else { ">" };
            write!(f, " {rel} {w}×{h}")?;
        }
        Ok(())
    }
}

/// Size limit for the gadgets that have one: fan-outs must fit in
/// (4n+7)×(2n+4), the latch in 16×8.
pub fn area_bound(name: &str) -> Option<(usize, usize)> {
    if let Some(n) = name.strip_prefix("fanout").and_then(|s| s.parse::<usize>().ok()) {
        return Some((4 * n + 7, 2 * n + 4));
    }
    (name == "latch").then_some((16, 8))
}

pub fn check_gadget(g: &Gadget) -> GadgetCheck {
    let mut c = GadgetCheck {
        name: g.name.clone(),
        passed: 0,
        rows: g.truth_table.rows.len(),
        area: g.size(),
        bound: area_bound(&g.name),
        failures: Vec::new(),
    };
    for (i, row) in g.truth_table.rows.iter().enumerate() {
        match evaluate_with_state(g, &row.inputs, row.state.map(|s| s.0)) {
            Ok(e) if e.outputs == row.outputs && e.state == row.state.map(|s| s.1) => c.passed += 1,
            Ok(e) => c.failures.push(format!("row {}: got {:?}, expected {:?}", i + 1, e.outputs, row.outputs)),
            Err(e) => c.failures.push(format!("row {}: {e}", i + 1)),
        }
    }
    c
}
