use serde::Serialize;

/// Halves the learning rate once validation loss has failed to improve on
/// the best value for `patience` consecutive epochs; the count then restarts.
#[derive(Debug, Clone, Serialize)]
pub struct LrSchedule {
    pub lr0: f64,
    pub lr: f64,
    pub patience: usize,
    pub best: Option<f64>,
    pub bad_epochs: usize,
    pub halvings: u32,
}

impl LrSchedule {
    pub fn new(lr0: f64, patience: usize) -> Self {
        Self {
            lr0,
            lr: lr0,
            patience: patience.max(1),
            best: None,
            bad_epochs: 0,
            halvings: 0,
        }
    }

    /// Records one epoch's validation loss; returns whether the rate halved.
    pub fn step(&mut self, val_loss: f64) -> bool {
        match self.best {
            Some(b) if val_loss >= b || val_loss.is_nan() => {
                self.bad_epochs += 1;
                if self.bad_epochs >= self.patience {
                    self.halvings += 1;
                    self.lr = self.lr0 * 0.5f64.powi(self.halvings as i32);
                    self.bad_epochs = 0;
                    return true;
                }
                false
            }
            _ => {
                self.best = Some(val_loss);
                self.bad_epochs = 0;
                false
            }
        }
    }

    pub fn improved(&self, val_loss: f64) -> bool {
        self.best.is_none_or(|b| val_loss < b)
    }
}
