use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::error::InferenceError;
use super::kb::{Fact, KnowledgeBase};

/// One complete assignment (value index per declared variable) and its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub assignment: Vec<usize>,
    pub weight: f64,
}

/// A distribution over joint assignments of a list of variables.
///
/// Probabilities are stored in mixed-radix order with the last variable
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    vars: Vec<usize>,
    radix: Vec<usize>,
    probs: Vec<f64>,
}

impl Belief {
    /// Builds a belief, normalizing `probs`. Returns `None` if the shape is
    /// wrong or there is no positive mass.
    pub fn new(vars: Vec<usize>, radix: Vec<usize>, probs: Vec<f64>) -> Option<Self> {
        if vars.len() != radix.len() || radix.iter().product::<usize>() != probs.len() {
            return None;
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return None;
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return None;
        }
        Some(Self {
            vars,
            radix,
            probs: probs.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Decodes a flat index into one value per variable.
    pub fn assignment(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radix.len()];
        for (slot, r) in out.iter_mut().zip(&self.radix).rev() {
            *slot = index % r;
            index /= r;
        }
        out
    }

    fn encode(&self, values: impl Iterator<Item = usize>) -> usize {
        values.zip(&self.radix).fold(0, |acc, (v, r)| acc * r + v)
    }

    /// Probability of a full assignment to `vars()`.
    pub fn prob(&self, values: &[usize]) -> f64 {
        self.probs[self.encode(values.iter().copied())]
    }

    /// Index of the most probable assignment; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

fn combined_facts(kb: &KnowledgeBase, facts: &[Fact]) -> Result<Vec<Option<usize>>, InferenceError> {
    let mut fixed: Vec<Option<usize>> = vec![None; kb.variables().len()];
    for fact in kb.facts().iter().chain(facts) {
        let var = kb
            .variables()
            .get(fact.var)
            .ok_or_else(|| InferenceError::UnknownVariable(format!("#{}", fact.var)))?;
        if fact.value >= var.values.len() {
            return Err(InferenceError::UnknownVariable(var.name.clone()));
        }
        match fixed[fact.var] {
            Some(v) if v != fact.value => {
                return Err(InferenceError::ConflictingFacts(var.name.clone()));
            }
            _ => fixed[fact.var] = Some(fact.value),
        }
    }
    Ok(fixed)
}

fn fact_list(kb: &KnowledgeBase, facts: &[Fact]) -> String {
    let all: Vec<String> = kb
        .facts()
        .iter()
        .chain(facts)
        .map(|f| kb.describe(*f))
        .collect();
    if all.is_empty() {
        "(no facts)".to_string()
    } else {
        all.join(", ")
    }
}

/// Every complete assignment with its weight under `kb`, conditioned on
/// `facts` and normalized. Worlds contradicting a fact keep weight 0.
pub fn enumerate_worlds(kb: &KnowledgeBase, facts: &[Fact]) -> Result<Vec<World>, InferenceError> {
    let fixed = combined_facts(kb, facts)?;
    let radix: Vec<usize> = kb.variables().iter().map(|v| v.values.len()).collect();
    let count: usize = radix.iter().product();
    let mut worlds = Vec::with_capacity(count);
    let mut assignment = vec![0usize; radix.len()];
    let mut total = 0.0;
    for _ in 0..count {
        let consistent = fixed
            .iter()
            .zip(&assignment)
            .all(|(f, v)| f.is_none_or(|f| f == *v));
        let weight = if consistent {
            kb.order()
                .iter()
                .map(|&var| kb.local_probability(var, &assignment))
                .product()
        } else {
            0.0
        };
        total += weight;
        worlds.push(World {
            assignment: assignment.clone(),
            weight,
        });
        // odometer increment, last variable fastest
        for i in (0..radix.len()).rev() {
            assignment[i] += 1;
            if assignment[i] < radix[i] {
                break;
            }
            assignment[i] = 0;
        }
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(InferenceError::Inconsistent(fact_list(kb, facts)));
    }
    for w in &mut worlds {
        w.weight /= total;
    }
    Ok(worlds)
}

fn check_query(kb: &KnowledgeBase, query: &[usize]) -> Result<(), InferenceError> {
    for (i, &q) in query.iter().enumerate() {
        let var = kb
            .variables()
            .get(q)
            .ok_or_else(|| InferenceError::UnknownVariable(format!("#{q}")))?;
        if query[..i].contains(&q) {
            return Err(InferenceError::DuplicateQuery(var.name.clone()));
        }
    }
    Ok(())
}

/// Posterior over joint assignments of `query` given `facts`.
pub fn infer(kb: &KnowledgeBase, facts: &[Fact], query: &[usize]) -> Result<Belief, InferenceError> {
    check_query(kb, query)?;
    let worlds = enumerate_worlds(kb, facts)?;
    let radix: Vec<usize> = query.iter().map(|&q| kb.variables()[q].values.len()).collect();
    let mut probs = vec![0.0; radix.iter().product()];
    for w in &worlds {
        let idx = query
            .iter()
            .zip(&radix)
            .fold(0, |acc, (&q, r)| acc * r + w.assignment[q]);
        probs[idx] += w.weight;
    }
    Belief::new(query.to_vec(), radix, probs)
        .ok_or_else(|| InferenceError::Inconsistent(fact_list(kb, facts)))
}

/// Posterior over `query` given variable names.
pub fn infer_named(
    kb: &KnowledgeBase,
    facts: &[Fact],
    query: &[&str],
) -> Result<Belief, InferenceError> {
    let idx = query
        .iter()
        .map(|name| {
            kb.var_index(name)
                .ok_or_else(|| InferenceError::UnknownVariable(name.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    infer(kb, facts, &idx)
}

/// Sums `belief` down to the variables in `shared`, in the given order.
pub fn marginalize(belief: &Belief, shared: &[usize]) -> Result<Belief, InferenceError> {
    let positions = shared
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if shared[..i].contains(s) {
                return Err(InferenceError::DuplicateQuery(format!("#{s}")));
            }
            belief
                .vars
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| InferenceError::UnknownVariable(format!("#{s}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let radix: Vec<usize> = positions.iter().map(|&p| belief.radix[p]).collect();
    let mut probs = vec![0.0; radix.iter().product()];
    for (i, p) in belief.probs.iter().enumerate() {
        let full = belief.assignment(i);
        let idx = positions
            .iter()
            .zip(&radix)
            .fold(0, |acc, (&pos, r)| acc * r + full[pos]);
        probs[idx] += p;
    }
    Belief::new(shared.to_vec(), radix, probs)
        .ok_or_else(|| InferenceError::Inconsistent("empty marginal".to_string()))
}
