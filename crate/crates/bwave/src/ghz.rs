//! Three-qubit finite-speed signaling protocol.
//!
//! One party (Alice) holds the first qubit of a three-qubit
//! `(|000> + |111>) / sqrt(2)` state; the other two measure simultaneously
//! at a later preferred-frame instant, a distance `l` from her. If Alice
//! measures and her influence — propagating at finite speed `v` — arrives
//! before their measurement, both partners are forced into her outcome and
//! always agree. If she abstains (or the influence is late) they collapse
//! independently and agree half the time. Comparing agreement rates
//! therefore reveals Alice's decision, and the timing window
//! `v > l / (t_L - t_A) > c` places that reveal ahead of any light signal.

use rand::Rng;

use crate::engine::trial_rng;
use crate::error::{Error, Result};
use crate::polarization::ghz_state;

/// Speed of light used by the timing condition, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzConfig {
    /// Distance from Alice to each partner, meters.
    pub l: f64,
    /// Alice's measurement instant (preferred frame), seconds.
    pub t_a: f64,
    /// The partners' common measurement instant, seconds.
    pub t_l_meas: f64,
    /// Influence propagation speed, m/s.
    pub v: f64,
    pub alice_measures: bool,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzTrialRecord {
    /// Present exactly when Alice measures.
    pub a_outcome: Option<u8>,
    pub b_outcome: u8,
    pub c_outcome: u8,
    pub influence_reached: bool,
}

/// True iff both strict inequalities of the timing window hold:
/// the influence can arrive (`v > l / dt`) while light cannot
/// (`l / dt > c`).
pub fn validate_ghz_timing(cfg: &GhzConfig) -> bool {
    let dt = cfg.t_l_meas - cfg.t_a;
    if !(dt > 0.0 && cfg.l > 0.0 && cfg.v.is_finite() && cfg.v > 0.0) {
        return false;
    }
    let ratio = cfg.l / dt;
    cfg.v > ratio && ratio > SPEED_OF_LIGHT
}

/// Whether an influence launched at Alice's instant covers `l` strictly
/// before the partners measure. This is the only part of the window that
/// matters dynamically; the `> c` clause is about what the comparison
/// demonstrates, not about the trial itself.
fn influence_arrives(cfg: &GhzConfig) -> bool {
    cfg.t_a + cfg.l / cfg.v < cfg.t_l_meas
}

/// Runs one trial of the protocol.
pub fn ghz_trial(cfg: &GhzConfig, rng: &mut impl Rng) -> Result<GhzTrialRecord> {
    let state = ghz_state();
    if cfg.alice_measures {
        let p0 = state.outcome_probability(0, 0)?;
        let a: u8 = if rng.random::<f64>() < p0 { 0 } else { 1 };
        if influence_arrives(cfg) {
            // Her collapse is carried to both partners before they look.
            let collapsed = state.collapsed(0, a)?;
            let b = sample_outcome(collapsed.outcome_probability(1, 0)?, rng);
            let c = sample_outcome(collapsed.outcome_probability(2, 0)?, rng);
            Ok(GhzTrialRecord {
                a_outcome: Some(a),
                b_outcome: b,
                c_outcome: c,
                influence_reached: true,
            })
        } else {
            // Late influence: the partners measure simultaneously with no
            // word from anyone, so each falls back to its local marginal.
            let b = sample_outcome(state.outcome_probability(1, 0)?, rng);
            let c = sample_outcome(state.outcome_probability(2, 0)?, rng);
            Ok(GhzTrialRecord {
                a_outcome: Some(a),
                b_outcome: b,
                c_outcome: c,
                influence_reached: false,
            })
        }
    } else {
        let b = sample_outcome(state.outcome_probability(1, 0)?, rng);
        let c = sample_outcome(state.outcome_probability(2, 0)?, rng);
        Ok(GhzTrialRecord {
            a_outcome: None,
            b_outcome: b,
            c_outcome: c,
            influence_reached: false,
        })
    }
}

fn sample_outcome(p0: f64, rng: &mut impl Rng) -> u8 {
    if rng.random::<f64>() < p0 {
        0
    } else {
        1
    }
}

/// Aggregate of a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzSummary {
    pub n: u64,
    pub n_same: u64,
    /// Fraction of trials with matching partner outcomes.
    pub p_same: f64,
    /// Binomial standard error of `p_same`.
    pub std_err: f64,
    /// 2x2 partner-outcome table: [b=0 c=0, b=0 c=1, b=1 c=0, b=1 c=1].
    pub table: [u64; 4],
    pub timing_valid: bool,
}

/// Runs `cfg.trials` seeded trials and estimates the agreement rate.
pub fn ghz_experiment(cfg: &GhzConfig) -> Result<GhzSummary> {
    if cfg.trials == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut n_same = 0u64;
    let mut table = [0u64; 4];
    for i in 0..cfg.trials {
        let rec = ghz_trial(cfg, &mut trial_rng(cfg.seed, i))?;
        if rec.b_outcome == rec.c_outcome {
            n_same += 1;
        }
        table[(2 * rec.b_outcome + rec.c_outcome) as usize] += 1;
    }
    let n = cfg.trials;
    let p_same = n_same as f64 / n as f64;
    Ok(GhzSummary {
        n,
        n_same,
        p_same,
        std_err: (p_same * (1.0 - p_same) / n as f64).sqrt(),
        table,
        timing_valid: validate_ghz_timing(cfg),
    })
}
