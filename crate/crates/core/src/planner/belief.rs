use alloc::vec;
use alloc::vec::Vec;

use super::model::PomdpModel;
use super::PlannerError;

/// Tolerance for "is this a distribution".
pub const BELIEF_TOLERANCE: f64 = 1e-9;

pub fn check_belief(b: &[f64], n: usize) -> Result<(), PlannerError> {
    if b.len() != n {
        return Err(PlannerError::Shape);
    }
    let sum: f64 = b.iter().sum();
    if b.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > BELIEF_TOLERANCE {
        return Err(PlannerError::NotNormalized(sum));
    }
    Ok(())
}

/// Unnormalized `O(s',a,z) * sum_s T(s,a,s') b(s)` into `out`.
pub(crate) fn propagate(m: &PomdpModel, b: &[f64], a: usize, z: usize, out: &mut [f64]) {
    let n = m.n_states();
    for s2 in 0..n {
        let o = m.o(s2, a, z);
        out[s2] = if o == 0.0 {
            0.0
        } else {
            o * (0..n).map(|s| m.t(s, a, s2) * b[s]).sum::<f64>()
        };
    }
}

/// Bayes filter step. Returns the posterior and `P(z | a, b)`.
pub fn belief_update(m: &PomdpModel, b: &[f64], a: usize, z: usize) -> Result<(Vec<f64>, f64), PlannerError> {
    check_belief(b, m.n_states())?;
    if a >= m.n_actions() || z >= m.n_observations() {
        return Err(PlannerError::Shape);
    }
    let mut out = vec![0.0; m.n_states()];
    propagate(m, b, a, z, &mut out);
    let norm: f64 = out.iter().sum();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(PlannerError::ImpossibleObservation {
            action: m.actions[a].clone(),
            observation: m.observations[z].clone(),
        });
    }
    out.iter_mut().for_each(|p| *p /= norm);
    Ok((out, norm))
}

/// Places an intention marginal `[p_interested, p_not]` on the not-turned
/// states of the intention model.
pub fn lift_prior(marginal: &[f64]) -> Result<[f64; 5], PlannerError> {
    check_belief(marginal, 2)?;
    Ok([marginal[0], marginal[1], 0.0, 0.0, 0.0])
}
