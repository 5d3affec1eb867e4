//! Per-trial records and batch summaries shared by the randomized checks.

use serde::Serialize;

pub use crate::variational::TrialStatus;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckTrial {
    pub index: u64,
    pub seed: u64,
    pub attempts: u64,
    pub status: TrialStatus,
    /// The checked quantity (an error, a variation, a residual) for this trial.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub subject: String,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// Largest `value` over conclusive trials.
    pub max_value: f64,
    pub trials: Vec<CheckTrial>,
}

impl CheckReport {
    pub fn from_trials(
        check: impl Into<String>,
        subject: impl Into<String>,
        seed: u64,
        tolerance: f64,
        trials: Vec<CheckTrial>,
    ) -> Self {
        let count = |s| trials.iter().filter(|t| t.status == s).count();
        let max_value = trials
            .iter()
            .filter(|t| t.status != TrialStatus::Inconclusive)
            .map(|t| t.value)
            .fold(0.0, f64::max);
        Self {
            check: check.into(),
            subject: subject.into(),
            seed,
            tolerance,
            passed: count(TrialStatus::Pass),
            failed: count(TrialStatus::Fail),
            inconclusive: count(TrialStatus::Inconclusive),
            max_value,
            trials,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.trials.len()
    }
}

/// Runs `trials` independent trials with up to `max_attempts` resamples each.
///
/// `run(seed)` returns the checked value, or an error that triggers a
/// resample; a trial whose attempts all fail is recorded as inconclusive.
pub fn run_trials<F>(
    seed: u64,
    trials: u64,
    max_attempts: u64,
    tolerance: f64,
    mut run: F,
) -> Vec<CheckTrial>
where
    F: FnMut(u64) -> crate::Result<f64>,
{
    run_indexed_trials(seed, trials, max_attempts, tolerance, |_, s| run(s))
}

/// [`run_trials`] with the trial index passed alongside the attempt seed.
pub fn run_indexed_trials<F>(
    seed: u64,
    trials: u64,
    max_attempts: u64,
    tolerance: f64,
    mut run: F,
) -> Vec<CheckTrial>
where
    F: FnMut(u64, u64) -> crate::Result<f64>,
{
    (0..trials)
        .map(|index| {
            let mut note = None;
            for attempt in 0..max_attempts {
                let s = crate::variational::attempt_seed(seed, index, attempt);
                match run(index, s) {
                    Ok(value) => {
                        let status = if value <= tolerance {
                            TrialStatus::Pass
                        } else {
                            TrialStatus::Fail
                        };
                        return CheckTrial {
                            index,
                            seed: s,
                            attempts: attempt + 1,
                            status,
                            value,
                            note: None,
                        };
                    }
                    Err(e) => note = Some(e.to_string()),
                }
            }
            CheckTrial {
                index,
                seed: crate::variational::attempt_seed(seed, index, max_attempts.saturating_sub(1)),
                attempts: max_attempts,
                status: TrialStatus::Inconclusive,
                value: f64::NAN,
                note,
            }
        })
        .collect()
}

/// `|a − b| / max(1, |a|, |b|)`.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
