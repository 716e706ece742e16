//! Maximum admissible livestock load as a function of covered wooded area.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StockingError {
    #[error("SAC must lie in [0, 100], got {0}")]
    OutOfRange(f64),
    #[error("invalid stocking table: {0}")]
    InvalidTable(String),
    #[error("cannot read stocking table: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse stocking table: {0}")]
    Parse(#[from] serde_json::Error),
}

/// One table row: loads apply up to and including `max_sac` percent; `None`
/// marks the open-ended last row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket(pub Option<f64>, pub f64);

impl Bracket {
    pub fn max_sac(&self) -> Option<f64> {
        self.0
    }

    pub fn load(&self) -> f64 {
        self.1
    }
}

/// How a SAC value between table rows is turned into a load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadStrategy {
    /// Load of the first bracket containing the SAC.
    #[default]
    Step,
    /// Piecewise-linear between bracket upper bounds.
    Interpolated,
}

/// SAC brackets (percent) mapped to livestock loads (animals per hectare).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StockingTable {
    brackets: Vec<Bracket>,
}

impl Default for StockingTable {
    /// Royal Decree 4/2014 loads for acorn-fed Iberian pigs.
    fn default() -> Self {
        StockingTable {
            brackets: vec![
                Bracket(Some(10.0), 0.25),
                Bracket(Some(15.0), 0.42),
                Bracket(Some(20.0), 0.75),
                Bracket(Some(30.0), 0.92),
                Bracket(Some(35.0), 1.08),
                Bracket(None, 1.25),
            ],
        }
    }
}

impl StockingTable {
    pub fn new(brackets: Vec<Bracket>) -> Result<Self, StockingError> {
        let invalid = |m: &str| Err(StockingError::InvalidTable(m.to_string()));
        if brackets.len() < 2 {
            return invalid("need at least one bounded bracket and the open-ended one");
        }
        let (last, bounded) = brackets.split_last().expect("non-empty");
        if last.0.is_some() {
            return invalid("the last bracket must be open-ended (null bound)");
        }
        if bounded.iter().any(|b| b.0.is_none()) {
            return invalid("only the last bracket may be open-ended");
        }
        if brackets.iter().any(|b| !b.1.is_finite() || b.1 < 0.0) {
            return invalid("loads must be finite and non-negative");
        }
        for pair in bounded.windows(2) {
            if !(pair[0].0 < pair[1].0) {
                return invalid("bounds must be strictly increasing");
            }
        }
        for pair in brackets.windows(2) {
            if pair[1].1 < pair[0].1 {
                return invalid("loads must be non-decreasing");
            }
        }
        Ok(StockingTable { brackets })
    }

    /// Reads a JSON list of `[max_sac, load]` pairs, `null` bounding the last.
    pub fn from_json(text: &str) -> Result<Self, StockingError> {
        let brackets: Vec<Bracket> = serde_json::from_str(text)?;
        StockingTable::new(brackets)
    }

    pub fn from_path(path: &Path) -> Result<Self, StockingError> {
        StockingTable::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    fn check(sac: f64) -> Result<(), StockingError> {
        if (0.0..=100.0).contains(&sac) {
            Ok(())
        } else {
            Err(StockingError::OutOfRange(sac))
        }
    }

    /// Load of the first bracket whose bound is at least `sac`.
    pub fn load_step(&self, sac: f64) -> Result<f64, StockingError> {
        Self::check(sac)?;
        let bracket = self
            .brackets
            .iter()
            .find(|b| b.0.is_none_or(|max| sac <= max))
            .expect("last bracket is open-ended");
        Ok(bracket.1)
    }

    /// Linear interpolation between `(bound, load)` knots; the first load
    /// below the first knot and the open-ended load above the last.
    pub fn load_interpolated(&self, sac: f64) -> Result<f64, StockingError> {
        Self::check(sac)?;
        let (open, bounded) = self.brackets.split_last().expect("non-empty");
        let knots: Vec<(f64, f64)> = bounded.iter().map(|b| (b.0.unwrap(), b.1)).collect();
        let (first_x, first_y) = knots[0];
        let (last_x, last_y) = knots[knots.len() - 1];
        if sac <= first_x {
            return Ok(first_y);
        }
        if sac > last_x {
            return Ok(open.1);
        }
        if sac == last_x {
            return Ok(last_y);
        }
        let i = knots.partition_point(|(x, _)| *x < sac);
        let (x1, y1) = knots[i];
        if x1 == sac {
            return Ok(y1);
        }
        let (x0, y0) = knots[i - 1];
        Ok(y0 + (sac - x0) * (y1 - y0) / (x1 - x0))
    }

    pub fn load(&self, sac: f64, strategy: LoadStrategy) -> Result<f64, StockingError> {
        match strategy {
            LoadStrategy::Step => self.load_step(sac),
            LoadStrategy::Interpolated => self.load_interpolated(sac),
        }
    }
}
