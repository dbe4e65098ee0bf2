use thiserror::Error;

use crate::dataset::Intention;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("F1 score of an empty set of predictions")]
pub struct EmptyInput;

/// F1 score for the interested class over `(truth, reported)` pairs. Zero
/// when there are no true positives.
pub fn f1_score(pairs: impl IntoIterator<Item = (Intention, Intention)>) -> Result<f64, EmptyInput> {
    let mut m = Metrics::default();
    for (truth, reported) in pairs {
        m.record(truth, reported, 0.0);
    }
    if m.trials() == 0 {
        return Err(EmptyInput);
    }
    Ok(m.f1())
}

/// Running tallies of (truth, reported) pairs and interaction cost.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub total_cost: f64,
}

impl Metrics {
    pub fn record(&mut self, truth: Intention, reported: Intention, cost: f64) {
        match (truth, reported) {
            (Intention::Interested, Intention::Interested) => self.tp += 1,
            (Intention::NotInterested, Intention::Interested) => self.fp += 1,
            (Intention::Interested, Intention::NotInterested) => self.fn_ += 1,
            (Intention::NotInterested, Intention::NotInterested) => self.tn += 1,
        }
        self.total_cost += cost;
    }

    pub fn trials(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.trials())
    }

    pub fn mean_cost(&self) -> f64 {
        match self.trials() {
            0 => 0.0,
            n => self.total_cost / n as f64,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
