pub const PLATEAU_FACTOR: f64 = 0.1;
pub const PLATEAU_PATIENCE: usize = 5;
pub const PLATEAU_MIN_DELTA: f64 = 1e-4;

/// Reduce-on-plateau for a metric to be maximized (validation macro F1).
///
/// An epoch counts as bad unless the metric beats the best so far by at
/// least `min_delta`; once more than `patience` bad epochs accumulate, the
/// learning rate is multiplied by `factor` and the count restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub enabled: bool,
    pub factor: f64,
    pub patience: usize,
    pub min_delta: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(enabled: bool) -> Self {
        PlateauScheduler {
            enabled,
            factor: PLATEAU_FACTOR,
            patience: PLATEAU_PATIENCE,
            min_delta: PLATEAU_MIN_DELTA,
            best: f64::NEG_INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn bad_epochs(&self) -> usize {
        self.bad_epochs
    }

    /// Records one epoch's metric and returns the learning rate to use next.
    pub fn step(&mut self, metric: f64, lr: f64) -> f64 {
        if !self.enabled {
            return lr;
        }
        if metric > self.best + self.min_delta {
            self.best = metric;
            self.bad_epochs = 0;
            return lr;
        }
        self.bad_epochs += 1;
        if self.bad_epochs > self.patience {
            self.bad_epochs = 0;
            lr * self.factor
        } else {
            lr
        }
    }
}
