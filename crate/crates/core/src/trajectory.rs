use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Sampled state and input trajectories over steps `0..=T`.
///
/// Stored time-major: `states[t * n + i]` is component `i` of `x_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    n: usize,
    m: usize,
    states: Vec<f64>,
    inputs: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from per-step rows. Every state row must have the
    /// same length, and likewise every input row; both lists need `T+1` rows.
    pub fn from_rows(states: &[Vec<f64>], inputs: &[Vec<f64>]) -> Result<Self, Error> {
        if states.is_empty() {
            return Err(Error::Dimension("trajectory needs at least one state".into()));
        }
        if inputs.len() != states.len() {
            return Err(Error::Dimension(format!(
                "{} state rows but {} input rows",
                states.len(),
                inputs.len()
            )));
        }
        let n = states[0].len();
        let m = inputs[0].len();
        if states.iter().any(|r| r.len() != n) || inputs.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged trajectory rows".into()));
        }
        Ok(Self {
            n,
            m,
            states: states.concat(),
            inputs: inputs.concat(),
        })
    }

    /// Flat time-major buffers. `states.len()` must be `(T+1)·n` and
    /// `inputs.len()` must be `(T+1)·m`.
    pub fn from_flat(n: usize, m: usize, states: Vec<f64>, inputs: Vec<f64>) -> Result<Self, Error> {
        if n == 0 || !states.len().is_multiple_of(n) || states.is_empty() {
            return Err(Error::Dimension(format!(
                "state buffer of length {} is not a multiple of n = {n}",
                states.len()
            )));
        }
        let steps = states.len() / n;
        if inputs.len() != steps * m {
            return Err(Error::Dimension(format!(
                "expected {} input values, got {}",
                steps * m,
                inputs.len()
            )));
        }
        Ok(Self { n, m, states, inputs })
    }

    /// All-zero trajectory.
    pub fn zeros(n: usize, m: usize, horizon: usize) -> Self {
        Self {
            n,
            m,
            states: vec![0.0; n * (horizon + 1)],
            inputs: vec![0.0; m * (horizon + 1)],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    /// `T`, the last step index.
    pub fn horizon(&self) -> usize {
        self.states.len() / self.n - 1
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.n..(t + 1) * self.n]
    }

    pub fn state_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.states[t * self.n..(t + 1) * self.n]
    }

    pub fn input(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.m..(t + 1) * self.m]
    }

    pub fn input_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.inputs[t * self.m..(t + 1) * self.m]
    }

    pub fn states_flat(&self) -> &[f64] {
        &self.states
    }

    pub fn inputs_flat(&self) -> &[f64] {
        &self.inputs
    }
}
