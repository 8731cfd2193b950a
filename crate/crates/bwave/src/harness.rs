//! Monte Carlo orchestration and statistical inference.
//!
//! Batch trial execution with per-trial random substreams (so counts are
//! identical for any worker count), channel-count aggregation, probability
//! estimators with binomial standard errors, the closed-form marginals the
//! receiver compares against, a pooled two-proportion z-test for detecting
//! the sender's decision, and a one-bit-per-block message codec on top of
//! the receiver's transmission marginal.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{trial_rng, TrialEngine, TrialRecord};
use crate::error::{Error, Result};
use crate::geometry::{require_feasible, ScenarioConfig, TriggerRule};

/// Hard ceiling for [`required_trials`]; effects needing more than this
/// are refused as vanishing.
pub const REQUIRED_TRIALS_CAP: u64 = 1_000_000_000;

/// Channel-pair counts from a batch of trials.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountsTable {
    pub n: u64,
    /// (Transmission, Transmission)
    pub c_12: u64,
    /// (Transmission, Reflection)
    pub c_12p: u64,
    /// (Reflection, Transmission)
    pub c_1p2: u64,
    /// (Reflection, Reflection)
    pub c_1p2p: u64,
    /// Trials in which the wave never reached photon 2.
    pub c_bwave_missed: u64,
}

impl CountsTable {
    pub fn record(&mut self, rec: &TrialRecord) {
        use crate::polarization::Channel::*;
        self.n += 1;
        match (rec.ch1, rec.ch2) {
            (Transmission, Transmission) => self.c_12 += 1,
            (Transmission, Reflection) => self.c_12p += 1,
            (Reflection, Transmission) => self.c_1p2 += 1,
            (Reflection, Reflection) => self.c_1p2p += 1,
        }
        if !rec.bwave_arrived {
            self.c_bwave_missed += 1;
        }
    }

    /// Order-independent merge: plain sums, so any reduction tree yields
    /// the same table.
    pub fn merge(self, other: Self) -> Self {
        Self {
            n: self.n + other.n,
            c_12: self.c_12 + other.c_12,
            c_12p: self.c_12p + other.c_12p,
            c_1p2: self.c_1p2 + other.c_1p2,
            c_1p2p: self.c_1p2p + other.c_1p2p,
            c_bwave_missed: self.c_bwave_missed + other.c_bwave_missed,
        }
    }

    /// Trials in which photon 1 was transmitted.
    pub fn transmission_1(&self) -> u64 {
        self.c_12 + self.c_12p
    }

    /// Trials in which photon 2 was transmitted — the receiver statistic.
    pub fn transmission_2(&self) -> u64 {
        self.c_12 + self.c_1p2
    }
}

/// A point estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

fn binomial_estimate(count: u64, n: u64) -> Estimate {
    let p = count as f64 / n as f64;
    Estimate {
        value: p,
        std_err: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Estimated joint and marginal channel probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityEstimates {
    pub p12: Estimate,
    pub p12p: Estimate,
    pub p1p2: Estimate,
    pub p1p2p: Estimate,
    pub p1: Estimate,
    pub p1p: Estimate,
    pub p2: Estimate,
    pub p2p: Estimate,
}

/// Ratio estimators over a counts table. The marginal pairs are exactly
/// complementary by construction: p1 + p1' = p2 + p2' = 1.
pub fn estimate_probabilities(counts: &CountsTable) -> Result<ProbabilityEstimates> {
    if counts.n == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = counts.n;
    Ok(ProbabilityEstimates {
        p12: binomial_estimate(counts.c_12, n),
        p12p: binomial_estimate(counts.c_12p, n),
        p1p2: binomial_estimate(counts.c_1p2, n),
        p1p2p: binomial_estimate(counts.c_1p2p, n),
        p1: binomial_estimate(counts.transmission_1(), n),
        p1p: binomial_estimate(counts.c_1p2 + counts.c_1p2p, n),
        p2: binomial_estimate(counts.transmission_2(), n),
        p2p: binomial_estimate(counts.c_12p + counts.c_1p2p, n),
    })
}

/// Closed-form marginals when the reflected branch carries an effective
/// partner orientation `b_prime` while the transmitted branch keeps `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormMarginals {
    pub p1: f64,
    pub p1p: f64,
    pub p2: f64,
    pub p2p: f64,
}

/// The sender's marginals are 1/2 unconditionally; the receiver's mix the
/// two branch orientations: p2 = (sin^2(b - a) + cos^2(b' - a)) / 2.
pub fn closed_form_marginals(a: f64, b: f64, b_prime: f64) -> ClosedFormMarginals {
    let p2 = 0.5 * ((b - a).sin().powi(2) + (b_prime - a).cos().powi(2));
    let p2p = 0.5 * ((b - a).cos().powi(2) + (b_prime - a).sin().powi(2));
    ClosedFormMarginals {
        p1: 0.5,
        p1p: 0.5,
        p2,
        p2p,
    }
}

/// Closed-form joint probabilities when the transmitted branch sees an
/// effective partner orientation `b_t` and the reflected branch `b_r`:
/// (TT, TR, RT, RR).
pub fn closed_form_joints(a: f64, b_t: f64, b_r: f64) -> [f64; 4] {
    [
        0.5 * (b_t - a).sin().powi(2),
        0.5 * (b_t - a).cos().powi(2),
        0.5 * (b_r - a).cos().powi(2),
        0.5 * (b_r - a).sin().powi(2),
    ]
}

fn run_counts(engine: &TrialEngine, n: u64, seed: u64, start_index: u64) -> CountsTable {
    (0..n)
        .into_par_iter()
        .fold(CountsTable::default, |mut acc, i| {
            let rec = engine.simulate(&mut trial_rng(seed, start_index + i));
            acc.record(&rec);
            acc
        })
        .reduce(CountsTable::default, CountsTable::merge)
}

/// Runs `n` trials of a feasible scenario and aggregates channel counts.
/// Deterministic for fixed `(cfg, n, seed)` whatever the parallelism.
pub fn run_experiment(cfg: &ScenarioConfig, n: u64, seed: u64) -> Result<CountsTable> {
    require_feasible(cfg)?;
    run_experiment_unchecked(cfg, n, seed)
}

/// Same as [`run_experiment`] but without the feasibility gate, for
/// deliberately broken arrangements.
pub fn run_experiment_unchecked(cfg: &ScenarioConfig, n: u64, seed: u64) -> Result<CountsTable> {
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let engine = TrialEngine::new(cfg)?;
    Ok(run_counts(&engine, n, seed, 0))
}

/// Runs `n` trials and keeps the per-trial records in trial order.
pub fn run_trials(cfg: &ScenarioConfig, n: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    require_feasible(cfg)?;
    run_trials_unchecked(cfg, n, seed)
}

pub fn run_trials_unchecked(cfg: &ScenarioConfig, n: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    let engine = TrialEngine::new(cfg)?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| engine.simulate(&mut trial_rng(seed, i)))
        .collect())
}

/// Runs a closure inside a rayon pool of the given size; `None` uses the
/// global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("worker pool")
            .install(f),
        None => f(),
    }
}

/// Two-proportion z-test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalTestResult {
    pub z_statistic: f64,
    pub p_value: f64,
    pub reject_null: bool,
    /// |p2(on) - p2(off)| point estimate.
    pub effect: f64,
    pub significance: f64,
}

/// Pooled two-proportion z-test on successes `x1/n1` vs `x2/n2`
/// (two-sided).
pub fn two_proportion_test(
    x1: u64,
    n1: u64,
    x2: u64,
    n2: u64,
    significance: f64,
) -> Result<SignalTestResult> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyCounts);
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidProportion {
            name: "significance",
            value: significance,
        });
    }
    let p1 = x1 as f64 / n1 as f64;
    let p2 = x2 as f64 / n2 as f64;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let variance = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if variance <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let z = (p1 - p2) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = 2.0 * normal.cdf(-z.abs());
    Ok(SignalTestResult {
        z_statistic: z,
        p_value,
        reject_null: p_value < significance,
        effect: (p1 - p2).abs(),
        significance,
    })
}

/// Tests whether the receiver's transmission marginal differs between a
/// trigger-on and a trigger-off batch.
pub fn signaling_test(
    counts_on: &CountsTable,
    counts_off: &CountsTable,
    significance: f64,
) -> Result<SignalTestResult> {
    two_proportion_test(
        counts_on.transmission_2(),
        counts_on.n,
        counts_off.transmission_2(),
        counts_off.n,
        significance,
    )
}

/// Decoded message and (when ground truth is given) its bit error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedMessage {
    pub bits: Vec<bool>,
    pub ber: Option<f64>,
}

/// Decodes one bit per block: bit = 1 iff the block's transmission-2 rate
/// falls below `threshold` (triggering depresses the rate).
pub fn decode_message(
    blocks: &[CountsTable],
    threshold: f64,
    truth: Option<&[bool]>,
) -> Result<DecodedMessage> {
    if blocks.is_empty() {
        return Err(Error::NoBlocks);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidProportion {
            name: "threshold",
            value: threshold,
        });
    }
    let mut bits = Vec::with_capacity(blocks.len());
    for block in blocks {
        if block.n == 0 {
            return Err(Error::EmptyCounts);
        }
        let p2 = block.transmission_2() as f64 / block.n as f64;
        bits.push(p2 < threshold);
    }
    let ber = match truth {
        Some(truth) => {
            if truth.len() != bits.len() {
                return Err(Error::TruthLengthMismatch {
                    truth: truth.len(),
                    blocks: bits.len(),
                });
            }
            let errors = bits.iter().zip(truth).filter(|(d, t)| d != t).count();
            Some(errors as f64 / bits.len() as f64)
        }
        None => None,
    };
    Ok(DecodedMessage { bits, ber })
}

/// Simulates a sender pushing `bits` through the channel, one block of
/// `trials_per_block` per bit: bit 1 arms the reflection-conditioned
/// trigger, bit 0 disarms it. Block `i` consumes trial substreams
/// `[i * trials_per_block, (i+1) * trials_per_block)` of `seed`, so blocks
/// never reuse randomness.
pub fn simulate_message(
    cfg: &ScenarioConfig,
    bits: &[bool],
    trials_per_block: u64,
    seed: u64,
) -> Result<Vec<CountsTable>> {
    if trials_per_block == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut on_cfg = cfg.clone();
    on_cfg.trigger_rule = TriggerRule::OnReflectionD1Prime;
    let mut off_cfg = cfg.clone();
    off_cfg.trigger_rule = TriggerRule::Never;
    let on_engine = TrialEngine::new(&on_cfg)?;
    let off_engine = TrialEngine::new(&off_cfg)?;
    let mut blocks = Vec::with_capacity(bits.len());
    for (i, &bit) in bits.iter().enumerate() {
        let engine = if bit { &on_engine } else { &off_engine };
        blocks.push(run_counts(
            engine,
            trials_per_block,
            seed,
            i as u64 * trials_per_block,
        ));
    }
    Ok(blocks)
}

/// Per-condition sample size for the pooled two-proportion z-test to reach
/// the given two-sided significance and power.
pub fn required_trials(p_on: f64, p_off: f64, alpha: f64, power: f64) -> Result<u64> {
    for (name, value) in [
        ("p_on", p_on),
        ("p_off", p_off),
        ("alpha", alpha),
        ("power", power),
    ] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::InvalidProportion { name, value });
        }
    }
    let effect = (p_on - p_off).abs();
    if effect == 0.0 {
        return Err(Error::EffectTooSmall {
            effect,
            cap: REQUIRED_TRIALS_CAP,
        });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z_alpha = normal.inverse_cdf(1.0 - alpha / 2.0);
    let z_beta = normal.inverse_cdf(power);
    let p_bar = 0.5 * (p_on + p_off);
    let pooled_term = z_alpha * (2.0 * p_bar * (1.0 - p_bar)).sqrt();
    let split_term = z_beta * (p_on * (1.0 - p_on) + p_off * (1.0 - p_off)).sqrt();
    let n = ((pooled_term + split_term) / effect).powi(2).ceil();
    if !n.is_finite() || n > REQUIRED_TRIALS_CAP as f64 {
        return Err(Error::EffectTooSmall {
            effect,
            cap: REQUIRED_TRIALS_CAP,
        });
    }
    Ok(n.max(1.0) as u64)
}
