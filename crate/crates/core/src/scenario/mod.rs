//! Dynamics models, predicate constructors and benchmark scenarios.
//!
//! A scenario file is JSON:
//!
//! ```json
//! {
//!   "name": "demo",
//!   "dynamics": {"type": "unicycle", "params": {"dt": 0.5}},
//!   "T": 10,
//!   "x0": [0, 0, 0],
//!   "alpha": 1.0,
//!   "Q": [[0,0,0],[0,0,0],[0,0,0]],
//!   "R": [[1,0],[0,1]],
//!   "input_box": {"lower": [-1, -1], "upper": [1, 1]},
//!   "state_box": {"lower": [-20, -20, -20], "upper": [20, 20, 20]},
//!   "predicates": [
//!     {"name": "goal", "type": "circle", "params": {"center": [2, 0], "radius": 0.5}}
//!   ],
//!   "formula": "F[5,10] goal",
//!   "warm_start": [[0, 0, 0], [10, 2, 0]]
//! }
//! ```
//!
//! `state_box` defaults to `[-20, 20]` per coordinate. `warm_start` lists
//! `[t, px, py]` waypoints for the reference trajectory.

mod builtin;
mod dynamics;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin, builtin_names, builtin_scenarios};
pub use dynamics::{double_integrator, unicycle, unicycle_step, Dynamics};

use crate::error::{Error, Result};
use crate::formula::{parse, Formula, Predicate, PredicateShape};
use crate::nlp::{assemble, Boxes, Encoding, NlpProblem, Weights};
use crate::trajectory::Trajectory;
use crate::tree::{prepare_tree, TreeNode, TreeOptions};

/// `h = r² − ‖p − c‖²`, or its negation when `inside` is false.
pub fn circle_predicate(name: &str, center: [f64; 2], radius: f64, inside: bool) -> Result<Predicate> {
    Predicate::circle(name, center, radius, inside).map_err(Error::Scenario)
}

/// `h = normalᵀ·p − offset`.
pub fn halfplane_predicate(name: &str, normal: Vec<f64>, offset: f64) -> Result<Predicate> {
    Predicate::halfplane(name, normal, offset).map_err(Error::Scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateEntry {
    pub name: String,
    #[serde(flatten)]
    pub shape: PredicateShape,
}

/// Serialized scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub dynamics: Dynamics,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub input_box: BoxBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_box: Option<BoxBounds>,
    pub predicates: Vec<PredicateEntry>,
    pub formula: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<Vec<[f64; 3]>>,
}

/// Default per-coordinate state bound when a scenario gives none.
pub const DEFAULT_STATE_BOUND: f64 = 20.0;

/// A validated scenario with its formula parsed, bound and in negation
/// normal form.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub formula: Formula,
    pub predicates: HashMap<String, Predicate>,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.dynamics.validate()?;
        let n = spec.dynamics.state_dim();
        let m = spec.dynamics.input_dim();
        if spec.x0.len() != n {
            return Err(Error::Dimension(format!(
                "x0 has {} entries, state has {n}",
                spec.x0.len()
            )));
        }
        let mut predicates = HashMap::new();
        for p in &spec.predicates {
            if p.shape.min_state_dim() > n {
                return Err(Error::Dimension(format!(
                    "predicate {} reads {} state components, state has {n}",
                    p.name,
                    p.shape.min_state_dim()
                )));
            }
            let pred = Predicate::new(p.name.clone(), p.shape.clone())
                .map_err(|e| Error::Scenario(format!("predicate {}: {e}", p.name)))?;
            if predicates.insert(p.name.clone(), pred).is_some() {
                return Err(Error::Scenario(format!("duplicate predicate {}", p.name)));
            }
        }
        let formula = parse(&spec.formula)?.bind(&predicates)?.to_nnf()?;
        let needed = formula.horizon();
        if needed > spec.horizon {
            return Err(Error::Horizon {
                needed,
                available: spec.horizon,
            });
        }
        let s = Self {
            spec,
            formula,
            predicates,
        };
        s.weights().validate(n, m)?;
        let b = s.boxes();
        if b.input_lower.len() != m || b.input_upper.len() != m || b.state_lower.len() != n || b.state_upper.len() != n
        {
            return Err(Error::Dimension("box dimensions do not match the dynamics".into()));
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("scenario specs always serialize")
    }

    /// Same scenario with a different horizon. The formula must still fit.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.horizon = horizon;
        Self::new(spec)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.spec.dynamics.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.dynamics.input_dim()
    }

    pub fn weights(&self) -> Weights {
        Weights {
            alpha: self.spec.alpha,
            q: self.spec.q.clone(),
            r: self.spec.r.clone(),
        }
    }

    pub fn boxes(&self) -> Boxes {
        let n = self.state_dim();
        let sb = self
            .spec
            .state_box
            .clone()
            .unwrap_or_else(|| BoxBounds::symmetric(n, DEFAULT_STATE_BOUND));
        Boxes {
            state_lower: sb.lower,
            state_upper: sb.upper,
            input_lower: self.spec.input_box.lower.clone(),
            input_upper: self.spec.input_box.upper.clone(),
        }
    }

    pub fn tree(&self, opts: TreeOptions) -> Result<TreeNode> {
        prepare_tree(&self.formula, self.spec.horizon, opts)
    }

    pub fn assemble(&self, encoding: Encoding<'_>) -> Result<NlpProblem> {
        assemble(
            &self.spec.dynamics,
            &self.spec.x0,
            self.spec.horizon,
            &self.weights(),
            &self.boxes(),
            encoding,
        )
    }

    /// `−α·ρ(x) + Σₜ xₜᵀQxₜ + uₜᵀRuₜ` with the exact robustness `ρ`.
    pub fn original_objective(&self, x: &Trajectory) -> Result<f64> {
        let rho = self.formula.robustness(x, 0)?;
        Ok(self.original_objective_with(x, rho))
    }

    /// Same as [`original_objective`] with a precomputed robustness; terms
    /// are summed in the order the assembled objective uses.
    ///
    /// [`original_objective`]: Scenario::original_objective
    pub fn original_objective_with(&self, x: &Trajectory, rho: f64) -> f64 {
        let mut total = -self.spec.alpha * rho;
        for t in 0..=x.horizon() {
            if let Some(v) = quad_form(&self.spec.q, x.state(t)) {
                total += v;
            }
            if let Some(v) = quad_form(&self.spec.r, x.input(t)) {
                total += v;
            }
        }
        total
    }

    /// Dynamically consistent reference trajectory that follows the
    /// `warm_start` waypoints, or holds `x0` with zero input when none are
    /// given.
    pub fn reference_trajectory(&self) -> Trajectory {
        let m = self.input_dim();
        let horizon = self.spec.horizon;
        let Some(points) = self.spec.warm_start.as_deref().filter(|p| !p.is_empty()) else {
            return self.rollout(&vec![vec![0.0; m]; horizon + 1]);
        };
        match &self.spec.dynamics {
            Dynamics::Lti { .. } if is_double_integrator(&self.spec.dynamics) => {
                let x0 = &self.spec.x0;
                let mut pos = vec![[x0[0], x0[1]], [x0[0] + x0[2], x0[1] + x0[3]]];
                for t in 2..=horizon {
                    pos.push(interpolate(points, t as f64));
                }
                pos.truncate(horizon + 1);
                let mut vel: Vec<[f64; 2]> = (0..horizon)
                    .map(|t| [pos[t + 1][0] - pos[t][0], pos[t + 1][1] - pos[t][1]])
                    .collect();
                vel.push([0.0, 0.0]);
                if horizon == 0 {
                    vel[0] = [x0[2], x0[3]];
                }
                let mut inputs: Vec<Vec<f64>> = (0..horizon)
                    .map(|t| vec![vel[t + 1][0] - vel[t][0], vel[t + 1][1] - vel[t][1]])
                    .collect();
                inputs.push(vec![0.0; m]);
                let states: Vec<Vec<f64>> = (0..=horizon)
                    .map(|t| vec![pos[t][0], pos[t][1], vel[t][0], vel[t][1]])
                    .collect();
                Trajectory::from_rows(&states, &inputs).expect("rows have uniform width")
            }
            Dynamics::Unicycle { dt } => {
                let b = self.boxes();
                let mut x = self.spec.x0.clone();
                let mut inputs = Vec::with_capacity(horizon + 1);
                // Pure pursuit toward the waypoint path two steps ahead,
                // slowing down while the heading error is large.
                for t in 0..horizon {
                    let target = interpolate(points, (t + 2) as f64);
                    let (dx, dy) = (target[0] - x[0], target[1] - x[1]);
                    let dist = dx.hypot(dy);
                    let err = if dist < 1e-9 {
                        0.0
                    } else {
                        wrap_angle(dy.atan2(dx) - x[2])
                    };
                    let w = (err / dt).clamp(b.input_lower[1], b.input_upper[1]);
                    let v = (dist * err.cos().max(0.0) / (2.0 * dt)).clamp(b.input_lower[0], b.input_upper[0]);
                    let u = vec![v, w];
                    x = self.spec.dynamics.step(&x, &u);
                    inputs.push(u);
                }
                inputs.push(vec![0.0; m]);
                self.rollout(&inputs)
            }
            Dynamics::Lti { .. } => self.rollout(&vec![vec![0.0; m]; horizon + 1]),
        }
    }

    /// States from `x0` under `inputs` (one row per step, `T+1` rows).
    pub fn rollout(&self, inputs: &[Vec<f64>]) -> Trajectory {
        let horizon = self.spec.horizon;
        let states = self.spec.dynamics.rollout(&self.spec.x0, &inputs[..horizon]);
        Trajectory::from_rows(&states, inputs).expect("rollout rows have uniform width")
    }
}

fn quad_form(q: &[Vec<f64>], v: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    let mut any = false;
    for (i, row) in q.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c != 0.0 {
                any = true;
                acc += c * (v[i] * v[j]);
            }
        }
    }
    any.then_some(acc)
}

fn is_double_integrator(d: &Dynamics) -> bool {
    *d == double_integrator()
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI
}

/// Piecewise-linear position at time `t`; clamped outside the waypoint span.
fn interpolate(points: &[[f64; 3]], t: f64) -> [f64; 2] {
    let first = points[0];
    if t <= first[0] {
        return [first[1], first[2]];
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t <= b[0] {
            let s = if b[0] > a[0] { (t - a[0]) / (b[0] - a[0]) } else { 1.0 };
            return [a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])];
        }
    }
    let last = points[points.len() - 1];
    [last[1], last[2]]
}
