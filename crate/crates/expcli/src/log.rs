//! Append-only convergence records.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record {
    pub iteration: usize,
    pub loss: f64,
    /// Vertex error, PSNR or pose error depending on the experiment.
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("iteration {got} does not follow {last}")]
pub struct OrderError {
    pub last: usize,
    pub got: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceLog {
    records: Vec<Record>,
}

impl ConvergenceLog {
    pub fn push(&mut self, iteration: usize, loss: f64, metric: f64) -> Result<(), OrderError> {
        if let Some(last) = self.records.last() {
            if iteration <= last.iteration {
                return Err(OrderError {
                    last: last.iteration,
                    got: iteration,
                });
            }
        }
        self.records.push(Record {
            iteration,
            loss,
            metric,
        });
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First logged iteration whose metric is below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.metric < threshold).map(|r| r.iteration)
    }

    /// Metric averaged over consecutive windows of `window` records.
    pub fn smoothed_metric(&self, window: usize) -> Vec<f64> {
        self.records
            .chunks(window.max(1))
            .map(|c| c.iter().map(|r| r.metric).sum::<f64>() / c.len() as f64)
            .collect()
    }
}
