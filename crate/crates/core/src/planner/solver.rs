use alloc::vec;
use alloc::vec::Vec;

use super::belief::{check_belief, propagate};
use super::model::PomdpModel;
use super::PlannerError;

/// A linear value function piece and the action it recommends.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub action: usize,
}

impl AlphaVector {
    pub fn dot(&self, b: &[f64]) -> f64 {
        self.values.iter().zip(b).map(|(a, p)| a * p).sum()
    }
}

/// A set of alpha-vectors; acts greedily on a belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    alphas: Vec<AlphaVector>,
    n_states: usize,
}

impl Policy {
    pub fn new(alphas: Vec<AlphaVector>) -> Result<Self, PlannerError> {
        let n_states = alphas.first().map(|a| a.values.len()).ok_or(PlannerError::EmptyPolicy)?;
        if n_states == 0 || alphas.iter().any(|a| a.values.len() != n_states || a.values.iter().any(|v| !v.is_finite())) {
            return Err(PlannerError::Shape);
        }
        Ok(Self { alphas, n_states })
    }

    pub fn alphas(&self) -> &[AlphaVector] {
        &self.alphas
    }

    fn best(&self, b: &[f64]) -> &AlphaVector {
        let mut best = &self.alphas[0];
        let mut best_v = best.dot(b);
        for a in &self.alphas[1..] {
            let v = a.dot(b);
            if v > best_v || (v == best_v && a.action < best.action) {
                best = a;
                best_v = v;
            }
        }
        best
    }

    /// Action of the maximizing vector; equal values go to the lower action
    /// index. `b` must be a distribution.
    pub fn action(&self, b: &[f64]) -> Result<usize, PlannerError> {
        check_belief(b, self.n_states)?;
        Ok(self.best(b).action)
    }

    /// Value estimate `max_α ⟨α, b⟩`.
    pub fn value(&self, b: &[f64]) -> Result<f64, PlannerError> {
        check_belief(b, self.n_states)?;
        Ok(self.best(b).dot(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Maximum number of belief points.
    pub belief_set_size: usize,
    /// Stop once the largest change of value at any point is below this.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Seed beliefs for the reachable-set expansion. Empty means the
    /// uniform belief plus every corner.
    pub priors: Vec<Vec<f64>>,
    /// Keep the value at every point after every backup.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            belief_set_size: 300,
            epsilon: 1e-6,
            max_iterations: 1000,
            priors: Vec::new(),
            record_trace: false,
        }
    }
}

/// Output of a solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: Policy,
    pub beliefs: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// `trace[k][i]`: value at belief `i` after backup `k` (index 0 is the
    /// initial bound).
    pub trace: Vec<Vec<f64>>,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Breadth-first expansion of the beliefs reachable from `seeds` under
/// every action and every observation with positive probability, stopping
/// at `max_points`. Near-duplicates (L1 < 1e-9) are merged.
pub fn reachable_beliefs(m: &PomdpModel, seeds: &[Vec<f64>], max_points: usize) -> Result<Vec<Vec<f64>>, PlannerError> {
    let n = m.n_states();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |out: &mut Vec<Vec<f64>>, b: Vec<f64>| -> bool {
        if out.len() < max_points && !out.iter().any(|o| l1(o, &b) < 1e-9) {
            out.push(b);
            true
        } else {
            false
        }
    };
    for s in seeds {
        check_belief(s, n)?;
        push(&mut out, s.clone());
    }
    let mut frontier = 0;
    let mut scratch = vec![0.0; n];
    while frontier < out.len() && out.len() < max_points {
        let b = out[frontier].clone();
        frontier += 1;
        for a in 0..m.n_actions() {
            for z in 0..m.n_observations() {
                propagate(m, &b, a, z, &mut scratch);
                let norm: f64 = scratch.iter().sum();
                if norm > 0.0 {
                    push(&mut out, scratch.iter().map(|p| p / norm).collect());
                }
            }
        }
    }
    Ok(out)
}

fn default_seeds(n: usize) -> Vec<Vec<f64>> {
    let mut seeds = vec![vec![1.0 / n as f64; n]];
    for s in 0..n {
        let mut c = vec![0.0; n];
        c[s] = 1.0;
        seeds.push(c);
    }
    seeds
}

/// `γ Σ_{s'} T(s,a,s') O(s',a,z) α(s')` for every (a, z, α).
fn project(m: &PomdpModel, gamma: &[AlphaVector]) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = m.n_states();
    (0..m.n_actions())
        .map(|a| {
            (0..m.n_observations())
                .map(|z| {
                    gamma
                        .iter()
                        .map(|alpha| {
                            (0..n)
                                .map(|s| {
                                    m.gamma
                                        * (0..n)
                                            .map(|s2| m.t(s, a, s2) * m.o(s2, a, z) * alpha.values[s2])
                                            .sum::<f64>()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Point-based Bellman backup of `gamma` at `b`.
fn backup_point(m: &PomdpModel, proj: &[Vec<Vec<Vec<f64>>>], b: &[f64]) -> AlphaVector {
    let n = m.n_states();
    let mut best: Option<(f64, AlphaVector)> = None;
    for (a, per_z) in proj.iter().enumerate() {
        let mut values: Vec<f64> = (0..n).map(|s| m.r(s, a)).collect();
        for candidates in per_z {
            let mut pick = &candidates[0];
            let mut pick_v = dot(pick, b);
            for c in &candidates[1..] {
                let v = dot(c, b);
                if v > pick_v {
                    pick = c;
                    pick_v = v;
                }
            }
            for (v, g) in values.iter_mut().zip(pick) {
                *v += g;
            }
        }
        let v = dot(&values, b);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, AlphaVector { values, action: a }));
        }
    }
    best.map(|(_, alpha)| alpha).unwrap_or(AlphaVector {
        values: vec![0.0; n],
        action: 0,
    })
}

fn dedup(alphas: Vec<AlphaVector>) -> Vec<AlphaVector> {
    let mut out: Vec<AlphaVector> = Vec::with_capacity(alphas.len());
    for a in alphas {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

fn values_at(policy: &[AlphaVector], beliefs: &[Vec<f64>]) -> Vec<f64> {
    beliefs
        .iter()
        .map(|b| policy.iter().map(|a| a.dot(b)).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Values of the blind policies "repeat action `a` forever", one vector per
/// action. Each is the value of an actual policy, hence a lower bound.
pub fn blind_vectors(m: &PomdpModel) -> Vec<AlphaVector> {
    let n = m.n_states();
    let gamma_set = (0..m.n_actions())
        .map(|a| {
            let mut values = vec![0.0; n];
            for _ in 0..100_000 {
                let next: Vec<f64> = (0..n)
                    .map(|s| m.r(s, a) + m.gamma * (0..n).map(|s2| m.t(s, a, s2) * values[s2]).sum::<f64>())
                    .collect();
                let delta = l1(&next, &values);
                values = next;
                if delta < 1e-12 {
                    break;
                }
            }
            AlphaVector { values, action: a }
        })
        .collect();
    dedup(gamma_set)
}

/// Point-based value iteration from the blind lower bound.
///
/// At each point the backed-up vector replaces the incumbent only if it is
/// at least as good there, so values at the points never decrease.
pub fn solve(m: &PomdpModel, cfg: &SolverConfig) -> Result<Solution, PlannerError> {
    m.validate()?;
    let n = m.n_states();
    let seeds = if cfg.priors.is_empty() { default_seeds(n) } else { cfg.priors.clone() };
    let beliefs = reachable_beliefs(m, &seeds, cfg.belief_set_size.max(1))?;

    let mut gamma_set = blind_vectors(m);
    let mut current = values_at(&gamma_set, &beliefs);
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(current.clone());
    }

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let proj = project(m, &gamma_set);
        let mut next = Vec::with_capacity(beliefs.len());
        for (b, old_v) in beliefs.iter().zip(&current) {
            let candidate = backup_point(m, &proj, b);
            if candidate.dot(b) >= *old_v {
                next.push(candidate);
            } else {
                let keep = gamma_set
                    .iter()
                    .max_by(|x, y| x.dot(b).total_cmp(&y.dot(b)))
                    .cloned()
                    .unwrap_or(candidate);
                next.push(keep);
            }
        }
        gamma_set = dedup(next);
        let updated = values_at(&gamma_set, &beliefs);
        residual = updated
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = updated;
        if cfg.record_trace {
            trace.push(current.clone());
        }
        if residual < cfg.epsilon {
            break;
        }
    }
    Ok(Solution {
        policy: Policy::new(gamma_set)?,
        beliefs,
        iterations,
        residual,
        converged: residual < cfg.epsilon,
        trace,
    })
}

/// Finite-horizon point-based backups from the zero function: after
/// `horizon` backups the policy values the best `horizon`-step plan at each
/// of `beliefs`. Exact at a point whenever the successors needed by the
/// optimal plan are in `beliefs`.
pub fn solve_horizon(m: &PomdpModel, beliefs: &[Vec<f64>], horizon: usize) -> Result<Solution, PlannerError> {
    m.validate()?;
    let n = m.n_states();
    for b in beliefs {
        check_belief(b, n)?;
    }
    if beliefs.is_empty() {
        return Err(PlannerError::EmptyPolicy);
    }
    let mut gamma_set = vec![AlphaVector {
        values: vec![0.0; n],
        action: 0,
    }];
    let mut trace = vec![values_at(&gamma_set, beliefs)];
    for _ in 0..horizon {
        let proj = project(m, &gamma_set);
        gamma_set = dedup(beliefs.iter().map(|b| backup_point(m, &proj, b)).collect());
        trace.push(values_at(&gamma_set, beliefs));
    }
    Ok(Solution {
        policy: Policy::new(gamma_set)?,
        beliefs: beliefs.to_vec(),
        iterations: horizon,
        residual: 0.0,
        converged: true,
        trace,
    })
}
