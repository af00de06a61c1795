//! Learning-rate schedule: halve on stagnation, stop below a floor.

/// Decision returned after each window of batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Continue,
    /// Learning rate was just halved; the stagnation counter restarts.
    Halve,
    /// A further halving would drop below the floor; training ends.
    Stop,
}

/// Tracks the best window mean since the last halving and halves the rate
/// after `patience` consecutive windows without a new best. The rate only
/// ever decreases within a run.
#[derive(Clone, Debug)]
pub struct Schedule {
    lr: f64,
    stop_lr: f64,
    patience: usize,
    best: Option<f64>,
    since_best: usize,
}

impl Schedule {
    pub const DEFAULT_INITIAL_LR: f64 = 0.1;
    pub const DEFAULT_STOP_LR: f64 = 1e-4;
    pub const DEFAULT_PATIENCE: usize = 6;
    /// Batches per schedule window.
    pub const WINDOW_BATCHES: usize = 100;

    pub fn new(initial_lr: f64) -> Self {
        Schedule {
            lr: initial_lr,
            stop_lr: Self::DEFAULT_STOP_LR,
            patience: Self::DEFAULT_PATIENCE,
            best: None,
            since_best: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feeds one completed window's mean error and returns the action.
    pub fn update(&mut self, window_mean: f64) -> Action {
        let improved = self.best.map(|b| window_mean < b).unwrap_or(true);
        if improved {
            self.best = Some(window_mean);
            self.since_best = 0;
            return Action::Continue;
        }
        self.since_best += 1;
        if self.since_best < self.patience {
            return Action::Continue;
        }
        if self.lr / 2.0 < self.stop_lr {
            return Action::Stop;
        }
        self.lr /= 2.0;
        self.best = None;
        self.since_best = 0;
        Action::Halve
    }
}
