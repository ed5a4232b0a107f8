use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{NodeId, TapeBuilder};

/// Discrete-time dynamics `x_{t+1} = f(x_t, u_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum Dynamics {
    /// `x⁺ = A x + B u`, matrices given row by row.
    Lti { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    /// Euler-discretized kinematic unicycle over `[px, py, θ]` with input
    /// `[v, ω]`.
    Unicycle { dt: f64 },
}

/// Planar double integrator: position `(px, py)` and velocity `(vx, vy)`,
/// input is the velocity increment.
pub fn double_integrator() -> Dynamics {
    let a = vec![
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    let b = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    Dynamics::Lti { a, b }
}

pub fn unicycle(dt: f64) -> Dynamics {
    Dynamics::Unicycle { dt }
}

/// One unicycle step with time step `dt`.
pub fn unicycle_step(x: &[f64], u: &[f64], dt: f64) -> [f64; 3] {
    [
        x[0] + dt * u[0] * x[2].cos(),
        x[1] + dt * u[0] * x[2].sin(),
        x[2] + dt * u[1],
    ]
}

impl Dynamics {
    pub fn state_dim(&self) -> usize {
        match self {
            Dynamics::Lti { a, .. } => a.len(),
            Dynamics::Unicycle { .. } => 3,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Dynamics::Lti { b, .. } => b.first().map_or(0, Vec::len),
            Dynamics::Unicycle { .. } => 2,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Dynamics::Lti { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Dynamics::Lti { a, b } => {
                let n = a.len();
                if n == 0 {
                    return Err(Error::Dimension("A must be non-empty".into()));
                }
                if a.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension(format!("A must be {n}x{n}")));
                }
                if b.len() != n {
                    return Err(Error::Dimension(format!("B must have {n} rows, got {}", b.len())));
                }
                let m = b[0].len();
                if b.iter().any(|r| r.len() != m) {
                    return Err(Error::Dimension("ragged B".into()));
                }
                if a.iter().chain(b).flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Dimension("non-finite dynamics coefficient".into()));
                }
                Ok(())
            }
            Dynamics::Unicycle { dt } => {
                if dt.is_finite() && *dt > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Dimension(format!("unicycle dt must be positive, got {dt}")))
                }
            }
        }
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Dynamics::Lti { a, b } => a
                .iter()
                .zip(b)
                .map(|(ar, br)| {
                    let ax: f64 = ar.iter().zip(x).map(|(c, v)| c * v).sum();
                    let bu: f64 = br.iter().zip(u).map(|(c, v)| c * v).sum();
                    ax + bu
                })
                .collect(),
            Dynamics::Unicycle { dt } => unicycle_step(x, u, *dt).to_vec(),
        }
    }

    /// Records component `i` of `f(x, u)` into `b`.
    pub fn emit_row(&self, b: &mut TapeBuilder, i: usize, x: &[NodeId], u: &[NodeId]) -> NodeId {
        match self {
            Dynamics::Lti { a, b: bm } => {
                let terms = a[i]
                    .iter()
                    .zip(x)
                    .chain(bm[i].iter().zip(u))
                    .filter(|(c, _)| **c != 0.0)
                    .map(|(c, n)| (*n, *c))
                    .collect();
                b.affine(terms, 0.0)
            }
            Dynamics::Unicycle { dt } => match i {
                0 | 1 => {
                    let trig = if i == 0 { b.cos(x[2]) } else { b.sin(x[2]) };
                    let vt = b.mul(u[0], trig);
                    b.affine(vec![(x[i], 1.0), (vt, *dt)], 0.0)
                }
                _ => b.affine(vec![(x[2], 1.0), (u[1], *dt)], 0.0),
            },
        }
    }

    /// Open-loop rollout from `x0`; `inputs` holds one row per step.
    pub fn rollout(&self, x0: &[f64], inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = vec![x0.to_vec()];
        for u in inputs {
            let next = self.step(out.last().unwrap(), u);
            out.push(next);
        }
        out
    }
}
