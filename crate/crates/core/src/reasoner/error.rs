use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbErrorKind {
    #[error("no variables declared")]
    NoVariables,
    #[error("variable `{0}` has an empty range")]
    EmptyRange(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("value `{value}` repeated in range of `{var}`")]
    DuplicateValue { var: String, value: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{value}` is not in the range of `{var}`")]
    UnknownValue { var: String, value: String },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("`{0}` appears in its own condition")]
    SelfCondition(String),
    #[error("a condition on `{0}` mentions the same variable twice")]
    RepeatedConditionVariable(String),
    #[error("pr-atom for `{0}` given twice under the same condition")]
    DuplicateAtom(String),
    #[error("probabilities for `{var}` sum to {total} > 1")]
    MassExceedsOne { var: String, total: f64 },
    #[error("probabilities for `{var}` cover the whole range but sum to {total}")]
    MassNotOne { var: String, total: f64 },
    #[error("overlapping but unordered conditions for `{0}`")]
    AmbiguousConditions(String),
    #[error("cyclic dependency through `{0}`")]
    CyclicDependency(String),
    #[error("malformed confusion matrix: {0}")]
    MalformedConfusion(&'static str),
}

/// Validation failure, optionally tied to the pr-atom that caused it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}")]
pub struct KbError {
    pub kind: KbErrorKind,
    /// Index into `KnowledgeBase::atoms` order, when one atom is to blame.
    pub atom: Option<usize>,
}

impl KbError {
    pub fn new(kind: KbErrorKind) -> Self {
        Self { kind, atom: None }
    }

    pub fn at_atom(mut self, atom: usize) -> Self {
        self.atom = Some(atom);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: KbError,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Invalid { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("facts are impossible under the knowledge base: {0}")]
    Inconsistent(String),
    #[error("unknown query variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate query variable `{0}`")]
    DuplicateQuery(String),
    #[error("conflicting facts for `{0}`")]
    ConflictingFacts(String),
}
