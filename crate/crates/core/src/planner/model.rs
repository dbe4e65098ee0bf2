use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::PlannerError;
use crate::dataset::Intention;

/// Tolerance for distribution rows.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A finite POMDP with dense tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `T[a][s][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `O[a][s'][z]`.
    pub observation: Vec<Vec<Vec<f64>>>,
    /// `R[s][a]`.
    pub reward: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl PomdpModel {
    /// Zero tables for the given names.
    pub fn empty(states: &[&str], actions: &[&str], observations: &[&str], gamma: f64) -> Self {
        let (ns, na, nz) = (states.len(), actions.len(), observations.len());
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self {
            states: own(states),
            actions: own(actions),
            observations: own(observations),
            transition: vec![vec![vec![0.0; ns]; ns]; na],
            observation: vec![vec![vec![0.0; nz]; ns]; na],
            reward: vec![vec![0.0; na]; ns],
            gamma,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn t(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[a][s][s2]
    }

    pub fn o(&self, s2: usize, a: usize, z: usize) -> f64 {
        self.observation[a][s2][z]
    }

    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s][a]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|s| s == name)
    }

    /// Checks shapes, that every T and O row is a distribution, that
    /// rewards are finite and that `gamma` lies in [0, 1).
    pub fn validate(&self) -> Result<(), PlannerError> {
        let (ns, na, nz) = (self.n_states(), self.n_actions(), self.n_observations());
        if ns == 0 || na == 0 || nz == 0 {
            return Err(PlannerError::Invalid("states, actions and observations must be nonempty".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(PlannerError::Invalid(format!("discount {} outside [0, 1)", self.gamma)));
        }
        let shape_ok = self.transition.len() == na
            && self.observation.len() == na
            && self.reward.len() == ns
            && self.reward.iter().all(|r| r.len() == na)
            && self.transition.iter().all(|m| m.len() == ns && m.iter().all(|r| r.len() == ns))
            && self.observation.iter().all(|m| m.len() == ns && m.iter().all(|r| r.len() == nz));
        if !shape_ok {
            return Err(PlannerError::Shape);
        }
        let check = |row: &[f64], what: &str, a: usize, s: usize| -> Result<(), PlannerError> {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(PlannerError::Invalid(format!(
                    "{what} row for action `{}`, state `{}` sums to {sum}",
                    self.actions[a], self.states[s]
                )));
            }
            Ok(())
        };
        for a in 0..na {
            for s in 0..ns {
                check(&self.transition[a][s], "T", a, s)?;
                check(&self.observation[a][s], "O", a, s)?;
            }
        }
        if self.reward.iter().flatten().any(|r| !r.is_finite()) {
            return Err(PlannerError::Invalid("rewards must be finite".into()));
        }
        Ok(())
    }
}

/// Actions of the intention model, in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntentionAction {
    Turn = 0,
    Greet = 1,
    MoveForward = 2,
    ReportInterested = 3,
    ReportNotInterested = 4,
}

impl IntentionAction {
    pub const ALL: [IntentionAction; 5] = [
        IntentionAction::Turn,
        IntentionAction::Greet,
        IntentionAction::MoveForward,
        IntentionAction::ReportInterested,
        IntentionAction::ReportNotInterested,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            IntentionAction::Turn => "turn",
            IntentionAction::Greet => "greet",
            IntentionAction::MoveForward => "move_forward",
            IntentionAction::ReportInterested => "report_interested",
            IntentionAction::ReportNotInterested => "report_not_interested",
        }
    }

    pub fn is_report(self) -> bool {
        matches!(self, IntentionAction::ReportInterested | IntentionAction::ReportNotInterested)
    }

    /// The label a report action announces.
    pub fn reported_label(self) -> Option<Intention> {
        match self {
            IntentionAction::ReportInterested => Some(Intention::Interested),
            IntentionAction::ReportNotInterested => Some(Intention::NotInterested),
            _ => None,
        }
    }

    /// The report action announcing `label`.
    pub fn report(label: Intention) -> Self {
        match label {
            Intention::Interested => IntentionAction::ReportInterested,
            Intention::NotInterested => IntentionAction::ReportNotInterested,
        }
    }
}

/// Human feedback symbols, in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Pos = 0,
    Neg = 1,
    None = 2,
}

impl Observation {
    pub const ALL: [Observation; 3] = [Observation::Pos, Observation::Neg, Observation::None];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Observation::Pos => "pos",
            Observation::Neg => "neg",
            Observation::None => "none",
        }
    }
}

/// State names of the intention model: not-turned/turned crossed with
/// interested/not, then the absorbing terminal state.
pub const INTENTION_STATES: [&str; 5] = [
    "not_turned_interested",
    "not_turned_not_interested",
    "turned_interested",
    "turned_not_interested",
    "term",
];
pub const TERM: usize = 4;

/// Parameters of [`build_intention_pomdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntentionPomdpConfig {
    pub correct_reward: f64,
    /// Reward (negative) for a wrong report.
    pub wrong_reward: f64,
    pub turn_cost: f64,
    pub greet_cost: f64,
    pub move_cost: f64,
    /// P(feedback agrees with the intention) after the robot has turned.
    pub reliability_turned: f64,
    /// Same, before turning.
    pub reliability_not_turned: f64,
    pub gamma: f64,
}

impl Default for IntentionPomdpConfig {
    fn default() -> Self {
        Self {
            correct_reward: 100.0,
            wrong_reward: -800.0,
            turn_cost: 1.0,
            greet_cost: 2.0,
            move_cost: 3.0,
            reliability_turned: 0.7,
            reliability_not_turned: 0.6,
            gamma: 0.99,
        }
    }
}

/// Builds the intention-interaction POMDP.
///
/// Intention never changes. `turn` moves to the turned half and draws no
/// informative feedback; `greet` and `move_forward` draw feedback that
/// agrees with the intention with the reliability of the resulting state.
/// Reports move to `term` and observe `none`.
pub fn build_intention_pomdp(cfg: &IntentionPomdpConfig) -> Result<PomdpModel, PlannerError> {
    for r in [cfg.reliability_turned, cfg.reliability_not_turned] {
        if !(0.0..=1.0).contains(&r) {
            return Err(PlannerError::Invalid(format!("reliability {r} outside [0, 1]")));
        }
    }
    let scalars = [cfg.correct_reward, cfg.wrong_reward, cfg.turn_cost, cfg.greet_cost, cfg.move_cost];
    if scalars.iter().any(|v| !v.is_finite()) {
        return Err(PlannerError::Invalid("rewards and costs must be finite".into()));
    }
    let actions: Vec<&str> = IntentionAction::ALL.iter().map(|a| a.name()).collect();
    let obs: Vec<&str> = Observation::ALL.iter().map(|o| o.name()).collect();
    let mut m = PomdpModel::empty(&INTENTION_STATES, &actions, &obs, cfg.gamma);

    let (pos, neg, none) = (Observation::Pos.index(), Observation::Neg.index(), Observation::None.index());
    for action in IntentionAction::ALL {
        let a = action.index();
        for s in 0..5 {
            let next = match action {
                _ if s == TERM => TERM,
                IntentionAction::Turn => 2 + s % 2,
                a if a.is_report() => TERM,
                _ => s,
            };
            m.transition[a][s][next] = 1.0;
        }
        for s2 in 0..5 {
            let row = &mut m.observation[a][s2];
            if s2 == TERM || action.is_report() {
                row[none] = 1.0;
            } else if action == IntentionAction::Turn {
                row[pos] = 0.5;
                row[neg] = 0.5;
            } else {
                let r = if s2 >= 2 { cfg.reliability_turned } else { cfg.reliability_not_turned };
                let interested = s2 % 2 == 0;
                row[pos] = if interested { r } else { 1.0 - r };
                row[neg] = 1.0 - row[pos];
            }
        }
        for s in 0..TERM {
            let interested = s % 2 == 0;
            m.reward[s][a] = match action {
                IntentionAction::Turn => -cfg.turn_cost,
                IntentionAction::Greet => -cfg.greet_cost,
                IntentionAction::MoveForward => -cfg.move_cost,
                IntentionAction::ReportInterested if interested => cfg.correct_reward,
                IntentionAction::ReportNotInterested if !interested => cfg.correct_reward,
                _ => cfg.wrong_reward,
            };
        }
    }
    m.validate()?;
    Ok(m)
}
