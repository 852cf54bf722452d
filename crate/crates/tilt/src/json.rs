//! Canonical JSON workspace format.
//!
//! Obstacles and goals are listed by `(y, x)`, particles by id, so equal
//! workspaces serialize to identical bytes.

use serde::{Deserialize, Serialize};
use tilt_core::{Cell, Goal, Particle, Shape, Who, Workspace, WorkspaceError};

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("json: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("particle {id}: unknown shape {shape:?}")]
    Shape { id: String, shape: String },
    #[error("particle {id}: label must be a single character")]
    Label { id: String },
    #[error("obstacle ({x},{y}) lies outside the grid")]
    Obstacle { x: i32, y: i32 },
    #[error(transparent)]
    Invalid(#[from] WorkspaceError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceJson {
    pub width: usize,
    pub height: usize,
    pub obstacles: Vec<[i32; 2]>,
    pub particles: Vec<ParticleJson>,
    #[serde(default)]
    pub goals: Vec<GoalJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleJson {
    pub id: String,
    pub shape: String,
    pub anchor: [i32; 2],
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalJson {
    pub who: String,
    pub cell: [i32; 2],
}

impl From<&Workspace> for WorkspaceJson {
    fn from(w: &Workspace) -> Self {
        WorkspaceJson {
            width: w.width(),
            height: w.height(),
            obstacles: w.obstacles().map(|c| [c.x, c.y]).collect(),
            particles: w
                .particles()
                .iter()
                .map(|p| ParticleJson {
                    id: p.id.clone(),
                    shape: p.shape.code().into(),
                    anchor: [p.anchor.x, p.anchor.y],
                    label: p.label.to_string(),
                })
                .collect(),
            goals: w
                .goals()
                .iter()
                .map(|g| GoalJson {
                    who: match &g.who {
                        Who::Any => "any".into(),
                        Who::Id(id) => id.clone(),
                    },
                    cell: [g.cell.x, g.cell.y],
                })
                .collect(),
        }
    }
}

impl WorkspaceJson {
    pub fn to_workspace(&self) -> Result<Workspace, JsonError> {
        let mut w = Workspace::open(self.width, self.height);
        for &[x, y] in &self.obstacles {
            if !w.in_bounds(Cell::new(x, y)) {
                return Err(JsonError::Obstacle { x, y });
            }
            w.set_obstacle(Cell::new(x, y));
        }
        for p in &self.particles {
            let shape = Shape::from_code(&p.shape)
                .ok_or_else(|| JsonError::Shape { id: p.id.clone(), shape: p.shape.clone() })?;
            let mut chars = p.label.chars();
            let label = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(JsonError::Label { id: p.id.clone() }),
            };
            let anchor = Cell::new(p.anchor[0], p.anchor[1]);
            w.add_particle(Particle { id: p.id.clone(), label, shape, anchor })?;
        }
        for g in &self.goals {
            let who = if g.who == "any" { Who::Any } else { Who::Id(g.who.clone()) };
            w.add_goal(Goal { who, cell: Cell::new(g.cell[0], g.cell[1]) });
        }
        w.validate()?;
        Ok(w)
    }
}

pub fn to_value(w: &Workspace) -> serde_json::Value {
    serde_json::to_value(WorkspaceJson::from(w)).expect("plain data")
}

/// Compact canonical text.
pub fn serialize(w: &Workspace) -> String {
    serde_json::to_string(&WorkspaceJson::from(w)).expect("plain data")
}

pub fn parse(text: &str) -> Result<Workspace, JsonError> {
    serde_json::from_str::<WorkspaceJson>(text)?.to_workspace()
}

pub fn from_value(v: serde_json::Value) -> Result<Workspace, JsonError> {
    serde_json::from_value::<WorkspaceJson>(v)?.to_workspace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goals_in_canonical_order() {
        let mut w = Workspace::new(5, 4);
        w.add_particle(Particle::unit("b", 'b', Cell::new(2, 1))).unwrap();
        w.add_particle(Particle::domino("A", 'A', Shape::Horizontal, Cell::new(1, 2))).unwrap();
        w.add_goal(Goal { who: Who::Id("b".into()), cell: Cell::new(3, 2) });
        w.add_goal(Goal { who: Who::Any, cell: Cell::new(3, 1) });
        let text = serialize(&w);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["goals"][0]["who"], "any");
        assert_eq!(v["goals"][1]["cell"], serde_json::json!([3, 2]));
        assert_eq!(v["particles"][0]["shape"], "2x1h");
        assert_eq!(parse(&text).unwrap(), w);
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse("{"), Err(JsonError::Syntax(_))));
        let open = r#"{"width":3,"height":3,"obstacles":[],"particles":[]}"#;
        assert!(matches!(parse(open), Err(JsonError::Invalid(WorkspaceError::Unbounded { .. }))));
        let mut v = to_value(&Workspace::new(3, 3));
        v["particles"] = serde_json::json!([{"id":"a","shape":"3x1","anchor":[1,1],"label":"a"}]);
        assert!(matches!(from_value(v.clone()), Err(JsonError::Shape { .. })));
        v["particles"][0]["shape"] = "1x1".into();
        v["particles"][0]["label"] = "ab".into();
        assert!(matches!(from_value(v), Err(JsonError::Label { .. })));
    }
}
