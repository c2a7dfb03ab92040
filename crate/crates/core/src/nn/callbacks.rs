use serde::{Deserialize, Serialize};

/// Learning-rate plateau and early-stopping settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CallbackConfig {
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub min_lr: f64,
    pub early_min_delta: f64,
    pub early_patience: usize,
}

impl Default for CallbackConfig {
    fn default() -> Self {
        Self {
            plateau_factor: 0.1,
            plateau_patience: 10,
            min_lr: 1e-10,
            early_min_delta: 1e-4,
            early_patience: 50,
        }
    }
}

impl CallbackConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(format!("plateau_factor {} not in (0, 1)", self.plateau_factor));
        }
        if !(self.min_lr > 0.0) {
            return Err(format!("min_lr {} must be positive", self.min_lr));
        }
        if !(self.early_min_delta >= 0.0) {
            return Err(format!("early_min_delta {} must be >= 0", self.early_min_delta));
        }
        if self.plateau_patience == 0 || self.early_patience == 0 {
            return Err("patience values must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallbackAction {
    Continue,
    ReduceLr,
    Stop,
}

/// Owns the current learning rate and the two patience counters.
///
/// The plateau rule counts epochs without any decrease of the best loss; the
/// early-stopping rule counts epochs whose decrease is not larger than
/// `early_min_delta`. Stop wins when both fire on the same epoch.
#[derive(Debug, Clone)]
pub struct TrainerCallbacks {
    config: CallbackConfig,
    lr: f64,
    plateau_best: f64,
    plateau_wait: usize,
    early_best: f64,
    early_wait: usize,
}

impl TrainerCallbacks {
    pub fn new(config: CallbackConfig, initial_lr: f64) -> Self {
        config.validate().expect("invalid callback config");
        assert!(initial_lr > 0.0, "learning rate must be positive");
        Self {
            config,
            lr: initial_lr,
            plateau_best: f64::INFINITY,
            plateau_wait: 0,
            early_best: f64::INFINITY,
            early_wait: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn best_loss(&self) -> f64 {
        self.plateau_best
    }

    pub fn on_epoch_end(&mut self, epoch_loss: f64) -> CallbackAction {
        debug_assert!(epoch_loss.is_finite());
        let cfg = self.config;

        if epoch_loss < self.early_best - cfg.early_min_delta {
            self.early_best = epoch_loss;
            self.early_wait = 0;
        } else {
            self.early_wait += 1;
        }

        let mut action = CallbackAction::Continue;
        if epoch_loss < self.plateau_best {
            self.plateau_best = epoch_loss;
            self.plateau_wait = 0;
        } else {
            self.plateau_wait += 1;
            if self.plateau_wait >= cfg.plateau_patience {
                self.plateau_wait = 0;
                if self.lr > cfg.min_lr {
                    self.lr = (self.lr * cfg.plateau_factor).max(cfg.min_lr);
                    action = CallbackAction::ReduceLr;
                }
            }
        }

        if self.early_wait >= cfg.early_patience {
            CallbackAction::Stop
        } else {
            action
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decreasing_losses_continue() {
        let mut cb = TrainerCallbacks::new(CallbackConfig::default(), 1e-3);
        for i in 0..200 {
            assert_eq!(cb.on_epoch_end(1.0 - i as f64 * 1e-3), CallbackAction::Continue);
        }
        assert_eq!(cb.learning_rate(), 1e-3);
    }

    #[test]
    fn ten_flat_epochs_reduce_lr() {
        let mut cb = TrainerCallbacks::new(CallbackConfig::default(), 1e-3);
        assert_eq!(cb.on_epoch_end(0.5), CallbackAction::Continue);
        for _ in 0..9 {
            assert_eq!(cb.on_epoch_end(0.5), CallbackAction::Continue);
        }
        assert_eq!(cb.on_epoch_end(0.5), CallbackAction::ReduceLr);
        assert!((cb.learning_rate() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn fifty_small_improvements_stop() {
        let mut cb = TrainerCallbacks::new(CallbackConfig::default(), 1e-3);
        let mut loss = 1.0;
        cb.on_epoch_end(loss);
        for epoch in 1..=50 {
            // improves the best loss, but never by more than min_delta in total
            loss -= 1e-6;
            let action = cb.on_epoch_end(loss);
            if epoch < 50 {
                assert_ne!(action, CallbackAction::Stop, "stopped early at {epoch}");
            } else {
                assert_eq!(action, CallbackAction::Stop);
            }
        }
        // the plateau rule never fired: every epoch lowered the best loss
        assert_eq!(cb.learning_rate(), 1e-3);
    }

    #[test]
    fn lr_is_floored() {
        let cfg = CallbackConfig {
            early_patience: 10_000,
            ..CallbackConfig::default()
        };
        let mut cb = TrainerCallbacks::new(cfg, 1e-3);
        for _ in 0..1000 {
            cb.on_epoch_end(1.0);
        }
        assert_eq!(cb.learning_rate(), 1e-10);
    }

    proptest! {
        #[test]
        fn never_raises_lr_nor_goes_below_floor(
            losses in proptest::collection::vec(0.0f64..1.0, 1..300),
        ) {
            let mut cb = TrainerCallbacks::new(CallbackConfig::default(), 1e-3);
            let mut last = cb.learning_rate();
            for l in losses {
                cb.on_epoch_end(l);
                prop_assert!(cb.learning_rate() <= last);
                prop_assert!(cb.learning_rate() >= 1e-10);
                last = cb.learning_rate();
            }
        }
    }
}
