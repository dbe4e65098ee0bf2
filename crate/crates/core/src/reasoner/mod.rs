//! Restricted probabilistic-logic reasoning over contextual knowledge.
//!
//! Programs are acyclic sets of pr-atoms plus hard facts. Inference is exact
//! enumeration of possible worlds.

mod error;
mod infer;
mod kb;
mod parse;

use alloc::vec::Vec;

pub use error::{InferenceError, KbError, KbErrorKind, ParseError};
pub use infer::{enumerate_worlds, infer, infer_named, marginalize, Belief, World};
pub use kb::{Fact, KnowledgeBase, Literal, PrAtom, RandomVariable, DISTRIBUTION_TOLERANCE};
pub use parse::parse_kb;

use crate::classifier::ConfusionMatrix;
use crate::dataset::Intention;

pub const IDENTITY: &str = "identity";
pub const TIME: &str = "time";
pub const LOCATION: &str = "location";
pub const INTENTION: &str = "intention";
/// The classifier's output, attached as evidence.
pub const S_LRN: &str = "s_lrn";

/// Source of the calibrated domain knowledge base (also the simulator's
/// ground truth).
pub const INTENTION_KB: &str = include_str!("../../kb/intention.kb");

/// Parses [`INTENTION_KB`].
pub fn default_kb() -> KnowledgeBase {
    parse_kb(INTENTION_KB).expect("bundled knowledge base is valid")
}

/// Encodes the classifier's confusion matrix as pr-atoms
/// `pr(s_lrn = predicted | intention = truth) = C[truth][predicted]`,
/// replacing any previous ones. Declares `s_lrn` if needed.
pub fn attach_classifier_evidence(
    kb: &KnowledgeBase,
    confusion: &ConfusionMatrix,
) -> Result<KnowledgeBase, KbError> {
    let confusion = ConfusionMatrix::new(confusion.rows())?;
    let intention = kb
        .var_index(INTENTION)
        .ok_or_else(|| KbError::new(KbErrorKind::UnknownVariable(INTENTION.into())))?;
    let labels = [Intention::Interested, Intention::NotInterested];
    for label in labels {
        kb.literal(INTENTION, label.name())?;
    }
    let base = match kb.var_index(S_LRN) {
        Some(_) => kb.clone(),
        None => kb.with_variable(RandomVariable::new(
            S_LRN,
            &[Intention::Interested.name(), Intention::NotInterested.name()],
        ))?,
    };
    let s_lrn = base.var_index(S_LRN).expect("declared above");
    let mut atoms = Vec::with_capacity(4);
    for truth in labels {
        let cond = base.literal(INTENTION, truth.name())?;
        debug_assert_eq!(cond.var, intention);
        for predicted in labels {
            let head = base.literal(S_LRN, predicted.name())?;
            atoms.push(PrAtom::new(head, alloc::vec![cond], confusion.get(truth, predicted)));
        }
    }
    base.map_atoms(|a| (a.head.var != s_lrn).then(|| a.clone()))?
        .with_atoms(atoms)
}

/// Fact `s_lrn = label` for a classifier prediction.
pub fn classifier_fact(kb: &KnowledgeBase, label: Intention) -> Result<Fact, KbError> {
    kb.literal(S_LRN, label.name())
}

/// Marginal over intention as `[P(interested), P(not_interested)]`.
pub fn intention_marginal(kb: &KnowledgeBase, facts: &[Fact]) -> Result<[f64; 2], InferenceError> {
    let belief = infer_named(kb, facts, &[INTENTION])?;
    let idx = |label: Intention| {
        kb.literal(INTENTION, label.name())
            .map(|l| l.value)
            .map_err(|_| InferenceError::UnknownVariable(INTENTION.into()))
    };
    let p = belief.probs();
    Ok([
        p[idx(Intention::Interested)?],
        p[idx(Intention::NotInterested)?],
    ])
}
