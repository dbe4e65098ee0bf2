use core::fmt;

use crate::dataset::Intention;
use crate::reasoner::{KbError, KbErrorKind};

/// Row-normalized estimate of P(predicted | true).
///
/// Rows and columns are indexed by [`Intention::index`]: 0 = interested,
/// 1 = not interested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMatrix {
    rows: [[f64; 2]; 2],
}

/// Raw (true, predicted) tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: Intention, predicted: Intention) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Adds one to every cell and normalizes each row.
    pub fn smoothed(&self) -> ConfusionMatrix {
        let mut rows = [[0.0; 2]; 2];
        for (t, row) in self.counts.iter().enumerate() {
            let denom = (row[0] + row[1] + 2) as f64;
            rows[t] = [(row[0] + 1) as f64 / denom, (row[1] + 1) as f64 / denom];
        }
        ConfusionMatrix { rows }
    }
}

impl ConfusionMatrix {
    pub fn new(rows: [[f64; 2]; 2]) -> Result<Self, KbError> {
        for row in &rows {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(KbError::new(KbErrorKind::MalformedConfusion(
                    "entries must lie in [0, 1]",
                )));
            }
            if ((row[0] + row[1]) - 1.0).abs() > 1e-9 {
                return Err(KbError::new(KbErrorKind::MalformedConfusion(
                    "rows must sum to 1",
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity() -> Self {
        Self {
            rows: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn uniform() -> Self {
        Self {
            rows: [[0.5, 0.5], [0.5, 0.5]],
        }
    }

    /// P(predicted | truth).
    pub fn get(&self, truth: Intention, predicted: Intention) -> f64 {
        self.rows[truth.index()][predicted.index()]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }

    pub fn true_positive_rate(&self) -> f64 {
        self.rows[0][0]
    }

    pub fn true_negative_rate(&self) -> f64 {
        self.rows[1][1]
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.rows;
        write!(f, "[[{:.4}, {:.4}], [{:.4}, {:.4}]]", r[0][0], r[0][1], r[1][0], r[1][1])
    }
}
