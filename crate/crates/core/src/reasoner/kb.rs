use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::error::{KbError, KbErrorKind};

/// Tolerance used when checking that a conditional distribution sums to one.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A random variable with a finite, ordered range of symbolic values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomVariable {
    pub name: String,
    pub values: Vec<String>,
}

impl RandomVariable {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// `variable = value`, with both sides resolved to indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: usize,
    pub value: usize,
}

impl Literal {
    pub const fn new(var: usize, value: usize) -> Self {
        Self { var, value }
    }
}

/// An observed `variable = value` (an element of the runtime fact set).
pub type Fact = Literal;

/// `pr(head | condition) = probability`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrAtom {
    pub head: Literal,
    /// Sorted by variable index, at most one literal per variable.
    pub condition: Vec<Literal>,
    pub probability: f64,
}

impl PrAtom {
    pub fn new(head: Literal, mut condition: Vec<Literal>, probability: f64) -> Self {
        condition.sort();
        Self {
            head,
            condition,
            probability,
        }
    }
}

/// One resolved conditional distribution row: the full probability vector of
/// a variable whenever `condition` holds (and no more specific row applies).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DistributionRow {
    pub condition: Vec<Literal>,
    pub probs: Vec<f64>,
}

/// A validated restricted probabilistic-logic program: declarations,
/// pr-atoms and hard facts, with an acyclic dependency structure.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    variables: Vec<RandomVariable>,
    atoms: Vec<PrAtom>,
    facts: Vec<Fact>,
    /// Topological order of variables (parents before children).
    order: Vec<usize>,
    /// Per variable, rows sorted from most to least specific condition.
    rows: Vec<Vec<DistributionRow>>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.atoms == other.atoms && self.facts == other.facts
    }
}

fn compatible(a: &[Literal], b: &[Literal]) -> bool {
    a.iter()
        .all(|x| b.iter().all(|y| x.var != y.var || x.value == y.value))
}

fn subset(a: &[Literal], b: &[Literal]) -> bool {
    a.iter().all(|x| b.contains(x))
}

impl KnowledgeBase {
    /// Validates and builds a knowledge base.
    ///
    /// Errors carry the index of the offending atom (`KbError::atom`) so that
    /// callers holding source positions can report a line number.
    pub fn new(
        variables: Vec<RandomVariable>,
        atoms: Vec<PrAtom>,
        facts: Vec<Fact>,
    ) -> Result<Self, KbError> {
        if variables.is_empty() {
            return Err(KbError::new(KbErrorKind::NoVariables));
        }
        for (i, v) in variables.iter().enumerate() {
            if v.values.is_empty() {
                return Err(KbError::new(KbErrorKind::EmptyRange(v.name.clone())));
            }
            for (j, val) in v.values.iter().enumerate() {
                if v.values[..j].contains(val) {
                    return Err(KbError::new(KbErrorKind::DuplicateValue {
                        var: v.name.clone(),
                        value: val.clone(),
                    }));
                }
            }
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(KbError::new(KbErrorKind::DuplicateVariable(v.name.clone())));
            }
        }

        let check_literal = |lit: &Literal| -> Result<(), KbErrorKind> {
            let var = variables
                .get(lit.var)
                .ok_or_else(|| KbErrorKind::UnknownVariable(format!("#{}", lit.var)))?;
            if lit.value >= var.values.len() {
                return Err(KbErrorKind::UnknownValue {
                    var: var.name.clone(),
                    value: format!("#{}", lit.value),
                });
            }
            Ok(())
        };

        for (idx, atom) in atoms.iter().enumerate() {
            let at = |kind| KbError::new(kind).at_atom(idx);
            check_literal(&atom.head).map_err(at)?;
            for lit in &atom.condition {
                check_literal(lit).map_err(at)?;
            }
            if !(0.0..=1.0).contains(&atom.probability) {
                return Err(at(KbErrorKind::ProbabilityOutOfRange(atom.probability)));
            }
            let name = &variables[atom.head.var].name;
            if atom.condition.iter().any(|l| l.var == atom.head.var) {
                return Err(at(KbErrorKind::SelfCondition(name.clone())));
            }
            if atom.condition.windows(2).any(|w| w[0].var == w[1].var) {
                return Err(at(KbErrorKind::RepeatedConditionVariable(name.clone())));
            }
        }
        for fact in &facts {
            check_literal(fact).map_err(KbError::new)?;
        }

        let order = topological_order(&variables, &atoms)?;
        let rows = resolve_rows(&variables, &atoms)?;

        Ok(Self {
            variables,
            atoms,
            facts,
            order,
            rows,
        })
    }

    pub fn variables(&self) -> &[RandomVariable] {
        &self.variables
    }

    pub fn atoms(&self) -> &[PrAtom] {
        &self.atoms
    }

    /// Facts declared inside the program text.
    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    /// Variables in dependency order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Resolves `name = value` against the declarations.
    pub fn literal(&self, name: &str, value: &str) -> Result<Literal, KbError> {
        let var = self
            .var_index(name)
            .ok_or_else(|| KbError::new(KbErrorKind::UnknownVariable(name.to_string())))?;
        let value_idx = self.variables[var].value_index(value).ok_or_else(|| {
            KbError::new(KbErrorKind::UnknownValue {
                var: name.to_string(),
                value: value.to_string(),
            })
        })?;
        Ok(Literal::new(var, value_idx))
    }

    pub fn describe(&self, lit: Literal) -> String {
        let var = &self.variables[lit.var];
        format!("{}={}", var.name, var.values[lit.value])
    }

    /// Distribution of `var` in a (complete or partial-but-sufficient)
    /// assignment. The most specific applicable row wins; with no applicable
    /// row the distribution is uniform.
    pub fn distribution(&self, var: usize, assignment: &[usize]) -> Vec<f64> {
        match self.applicable_row(var, assignment) {
            Some(row) => row.probs.clone(),
            None => {
                let n = self.variables[var].values.len();
                vec![1.0 / n as f64; n]
            }
        }
    }

    pub(crate) fn applicable_row(&self, var: usize, assignment: &[usize]) -> Option<&DistributionRow> {
        self.rows[var].iter().find(|row| {
            row.condition
                .iter()
                .all(|lit| assignment.get(lit.var) == Some(&lit.value))
        })
    }

    /// Probability of `value` for `var` given the rest of `assignment`.
    pub(crate) fn local_probability(&self, var: usize, assignment: &[usize]) -> f64 {
        let value = assignment[var];
        match self.applicable_row(var, assignment) {
            Some(row) => row.probs[value],
            None => 1.0 / self.variables[var].values.len() as f64,
        }
    }

    /// Returns a copy with an extra variable declaration appended.
    pub fn with_variable(&self, variable: RandomVariable) -> Result<Self, KbError> {
        let mut vars = self.variables.clone();
        vars.push(variable);
        Self::new(vars, self.atoms.clone(), self.facts.clone())
    }

    /// Returns a copy whose atoms are rewritten by `f`; atoms mapped to
    /// `None` are dropped.
    pub fn map_atoms<F>(&self, f: F) -> Result<Self, KbError>
    where
        F: FnMut(&PrAtom) -> Option<PrAtom>,
    {
        let atoms = self.atoms.iter().filter_map(f).collect();
        Self::new(self.variables.clone(), atoms, self.facts.clone())
    }

    /// Returns a copy with `extra` atoms appended.
    pub fn with_atoms(&self, extra: Vec<PrAtom>) -> Result<Self, KbError> {
        let mut atoms = self.atoms.clone();
        atoms.extend(extra);
        Self::new(self.variables.clone(), atoms, self.facts.clone())
    }
}

fn topological_order(variables: &[RandomVariable], atoms: &[PrAtom]) -> Result<Vec<usize>, KbError> {
    let n = variables.len();
    // parents[child] = set of parent vars, with the first atom that introduced the edge
    let mut parents: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    for (idx, atom) in atoms.iter().enumerate() {
        for lit in &atom.condition {
            parents[atom.head.var].entry(lit.var).or_insert(idx);
        }
    }
    // Kahn's algorithm, picking the lowest declared index among ready nodes.
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while order.len() < n {
        let next = (0..n).find(|&v| !done[v] && indegree[v] == 0);
        match next {
            Some(v) => {
                done[v] = true;
                order.push(v);
                for (child, ps) in parents.iter().enumerate() {
                    if !done[child] && ps.contains_key(&v) {
                        indegree[child] -= 1;
                    }
                }
            }
            None => {
                let (var, atom) = (0..n)
                    .filter(|&v| !done[v])
                    .find_map(|v| parents[v].iter().find(|(p, _)| !done[**p]).map(|(_, a)| (v, *a)))
                    .unwrap_or((0, 0));
                return Err(
                    KbError::new(KbErrorKind::CyclicDependency(variables[var].name.clone())).at_atom(atom),
                );
            }
        }
    }
    Ok(order)
}

fn resolve_rows(
    variables: &[RandomVariable],
    atoms: &[PrAtom],
) -> Result<Vec<Vec<DistributionRow>>, KbError> {
    // group atoms by (head variable, condition), remembering first atom index
    let mut groups: BTreeMap<(usize, Vec<Literal>), (usize, Vec<Option<f64>>)> = BTreeMap::new();
    for (idx, atom) in atoms.iter().enumerate() {
        let n = variables[atom.head.var].values.len();
        let entry = groups
            .entry((atom.head.var, atom.condition.clone()))
            .or_insert_with(|| (idx, vec![None; n]));
        let slot = &mut entry.1[atom.head.value];
        if slot.is_some() {
            let var = &variables[atom.head.var];
            return Err(KbError::new(KbErrorKind::DuplicateAtom(format!(
                "{}={}",
                var.name, var.values[atom.head.value]
            )))
            .at_atom(idx));
        }
        *slot = Some(atom.probability);
    }

    let mut rows: Vec<Vec<(usize, DistributionRow)>> = vec![Vec::new(); variables.len()];
    for ((var, condition), (first_atom, slots)) in groups {
        let name = &variables[var].name;
        let given: f64 = slots.iter().flatten().sum();
        let missing = slots.iter().filter(|s| s.is_none()).count();
        if given > 1.0 + DISTRIBUTION_TOLERANCE {
            return Err(KbError::new(KbErrorKind::MassExceedsOne {
                var: name.clone(),
                total: given,
            })
            .at_atom(first_atom));
        }
        if missing == 0 && (given - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(KbError::new(KbErrorKind::MassNotOne {
                var: name.clone(),
                total: given,
            })
            .at_atom(first_atom));
        }
        let residual = if missing > 0 {
            (1.0 - given).max(0.0) / missing as f64
        } else {
            0.0
        };
        let probs = slots.iter().map(|s| s.unwrap_or(residual)).collect();
        rows[var].push((first_atom, DistributionRow { condition, probs }));
    }

    // Rows for the same variable must be nested or mutually exclusive, so
    // that "most specific applicable row" is well defined.
    for (var, var_rows) in rows.iter().enumerate() {
        for (i, (_, a)) in var_rows.iter().enumerate() {
            for (atom_b, b) in &var_rows[i + 1..] {
                if compatible(&a.condition, &b.condition)
                    && !subset(&a.condition, &b.condition)
                    && !subset(&b.condition, &a.condition)
                {
                    return Err(KbError::new(KbErrorKind::AmbiguousConditions(
                        variables[var].name.clone(),
                    ))
                    .at_atom(*atom_b));
                }
            }
        }
    }

    Ok(rows
        .into_iter()
        .map(|mut var_rows| {
            // stable: most specific first, ties keep declaration order
            var_rows.sort_by(|(ia, a), (ib, b)| {
                b.condition.len().cmp(&a.condition.len()).then(ia.cmp(ib))
            });
            var_rows.into_iter().map(|(_, row)| row).collect()
        })
        .collect())
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for var in &self.variables {
            writeln!(f, "var {} : {{{}}}.", var.name, var.values.join(", "))?;
        }
        for atom in &self.atoms {
            write!(f, "pr({}", self.describe(atom.head))?;
            for (i, lit) in atom.condition.iter().enumerate() {
                let sep = if i == 0 { " | " } else { ", " };
                write!(f, "{}{}", sep, self.describe(*lit))?;
            }
            writeln!(f, ") = {}.", atom.probability)?;
        }
        for fact in &self.facts {
            writeln!(f, "fact {}.", self.describe(*fact))?;
        }
        Ok(())
    }
}
