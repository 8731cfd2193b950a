//! Preferred-frame layout of the two-photon experiment and its timing
//! algebra.
//!
//! The source sits at path coordinate 0 on both arms. Photon 1 travels a
//! path of length `x_a + 2y` (straight arm plus a detour of height `y`) to
//! its analyzer and detectors; photon 2 travels `x_b` to its own. A Pockels
//! cell sits on arm 1 between the source and the detour, a straight-line
//! distance `x` from the detectors, so a light-speed trigger fired at
//! detection reaches it after `x / c` while a carrier wave retracing the
//! photon path needs `(x + 2y) / v_b`. The race is winnable by the trigger
//! exactly when `y > (v_b - c) x / (2 c)`.

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::polarization::{AnalyzerOrientation, OpticalElement, PhotonIndex};

/// Carrier-speed regime for the collapse wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BWaveMode {
    /// Finite superluminal speed in m/s; must exceed `c`.
    Finite { v_b: f64 },
    /// The wave arrives at the partner photon the instant the first photon
    /// is detected.
    Instantaneous,
    /// No wave at all; the partner photon always falls back to its local
    /// marginal.
    Disabled,
}

impl BWaveMode {
    pub fn label(&self) -> &'static str {
        match self {
            BWaveMode::Finite { .. } => "finite",
            BWaveMode::Instantaneous => "instantaneous",
            BWaveMode::Disabled => "none",
        }
    }
}

/// When the detection of photon 1 fires the light-speed trigger toward the
/// Pockels cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerRule {
    /// Fire only when photon 1 lands in the reflection channel.
    OnReflectionD1Prime,
    Never,
    Always,
}

/// An extra static unitary element placed along one arm.
///
/// `position` is the path-length coordinate from the source, in meters,
/// measured along the actual path (the detour included on arm 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedElement {
    pub arm: PhotonIndex,
    pub element: OpticalElement,
    pub position: f64,
}

/// Full preferred-frame description of one experimental arrangement.
///
/// Lengths in meters, speeds in m/s, angles carried as canonical
/// [`AnalyzerOrientation`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Straight length of arm 1 excluding the detour.
    pub x_a: f64,
    /// Detour height; contributes `2 y` of extra path on arm 1.
    pub y: f64,
    /// Path length from the source to the photon-2 detectors.
    pub x_b: f64,
    /// Straight-line distance from the Pockels cell to the photon-1
    /// detectors, used by the trigger signal.
    pub x: f64,
    /// Speed of light in this frame.
    pub c: f64,
    pub bwave_mode: BWaveMode,
    pub analyzer_a: AnalyzerOrientation,
    pub analyzer_b: AnalyzerOrientation,
    /// Element the Pockels cell applies while active (identity while idle).
    pub pc_element: OpticalElement,
    pub trigger_rule: TriggerRule,
    pub extra_elements: Vec<PlacedElement>,
}

/// One failed validity or feasibility condition.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    #[error("{name} = {value} must be a finite positive length")]
    NonPositiveLength { name: &'static str, value: f64 },

    #[error("speed {name} = {value} must be finite and positive")]
    InvalidSpeed { name: &'static str, value: f64 },

    #[error("carrier speed v_b = {v_b} must exceed c = {c}")]
    SubluminalCarrier { v_b: f64, c: f64 },

    #[error("element on arm {arm} at position {position} lies outside (0, {arm_length})")]
    ElementOutOfRange {
        arm: u8,
        position: f64,
        arm_length: f64,
    },

    #[error(
        "detection ordering violated: arm-1 path x_a + 2y = {path1} must be strictly shorter than x_b = {x_b}"
    )]
    OrderingViolation { path1: f64, x_b: f64 },

    #[error(
        "race lost: detour y = {y} does not exceed the minimum (v_b - c) x / (2 c) = {y_min}"
    )]
    RaceViolation { y: f64, y_min: f64 },

    #[error(
        "no catch-up: the wave would overtake photon 2 at {intercept_position} m, at or past the detector at x_b = {x_b} m"
    )]
    NoCatch {
        intercept_position: f64,
        x_b: f64,
    },
}

/// Computed preferred-frame times for one arrangement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    /// Detection time of photon 1.
    pub t1: f64,
    /// Detection time of photon 2 absent interception.
    pub t2: f64,
    /// Trigger flight time from the detectors to the Pockels cell.
    pub t_l: f64,
    /// Wave transit time from the detectors back to the Pockels cell;
    /// absent unless the carrier speed is finite.
    pub t_b: Option<f64>,
    /// Time at which the wave overtakes photon 2, measured from emission;
    /// absent when it cannot (interception at or past the detector, or no
    /// wave at all).
    pub t_catch: Option<f64>,
}

impl ScenarioConfig {
    /// Total path length of arm 1 (straight part plus detour).
    pub fn arm1_path_length(&self) -> f64 {
        self.x_a + 2.0 * self.y
    }

    /// Violations of the type invariants alone (positive finite lengths,
    /// superluminal carrier, element placement).
    pub fn invariant_violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (name, value) in [
            ("x_a", self.x_a),
            ("y", self.y),
            ("x_b", self.x_b),
            ("x", self.x),
        ] {
            if !value.is_finite() || value <= 0.0 {
                v.push(Violation::NonPositiveLength { name, value });
            }
        }
        if !self.c.is_finite() || self.c <= 0.0 {
            v.push(Violation::InvalidSpeed {
                name: "c",
                value: self.c,
            });
        }
        if let BWaveMode::Finite { v_b } = self.bwave_mode {
            if !v_b.is_finite() || v_b <= 0.0 {
                v.push(Violation::InvalidSpeed {
                    name: "v_b",
                    value: v_b,
                });
            } else if self.c.is_finite() && v_b <= self.c {
                v.push(Violation::SubluminalCarrier { v_b, c: self.c });
            }
        }
        let l1 = self.arm1_path_length();
        for e in &self.extra_elements {
            let (arm, arm_length) = match e.arm {
                PhotonIndex::One => (1, l1),
                PhotonIndex::Two => (2, self.x_b),
            };
            if !e.position.is_finite() || e.position <= 0.0 || e.position >= arm_length {
                v.push(Violation::ElementOutOfRange {
                    arm,
                    position: e.position,
                    arm_length,
                });
            }
        }
        v
    }
}

/// Flight time of the light-speed trigger from the detectors to the
/// Pockels cell: `x / c`.
pub fn light_signal_time(cfg: &ScenarioConfig) -> f64 {
    cfg.x / cfg.c
}

/// Transit time of the carrier wave from the detectors back to the Pockels
/// cell along the photon path: `(x + 2y) / v_b`. Defined only for a finite
/// carrier speed.
pub fn bwave_transit_time(cfg: &ScenarioConfig) -> Result<f64> {
    match cfg.bwave_mode {
        BWaveMode::Finite { v_b } => Ok((cfg.x + 2.0 * cfg.y) / v_b),
        other => Err(Error::NoFiniteBWaveSpeed {
            mode: other.label(),
        }),
    }
}

/// True when the trigger strictly beats the wave to the Pockels cell.
pub fn race_ok(cfg: &ScenarioConfig) -> Result<bool> {
    Ok(light_signal_time(cfg) < bwave_transit_time(cfg)?)
}

/// Minimum detour height for a winnable race: `(v_b - c) x / (2 c)`.
/// `race_ok` is true strictly above this value and false at or below it.
pub fn min_detour(cfg: &ScenarioConfig) -> Result<f64> {
    match cfg.bwave_mode {
        BWaveMode::Finite { v_b } => Ok((v_b - cfg.c) * cfg.x / (2.0 * cfg.c)),
        other => Err(Error::NoFiniteBWaveSpeed {
            mode: other.label(),
        }),
    }
}

/// Path coordinate at which the wave overtakes photon 2, and the time it
/// happens, for a wave created at photon 1's detection. Absent when the
/// interception would land at or past `x_b`, or when there is no wave.
fn catch_up(cfg: &ScenarioConfig) -> Option<(f64, f64)> {
    let l1 = cfg.arm1_path_length();
    let t1 = l1 / cfg.c;
    match cfg.bwave_mode {
        BWaveMode::Disabled => None,
        BWaveMode::Instantaneous => Some((t1, cfg.c * t1)).filter(|&(_, pos)| pos < cfg.x_b),
        BWaveMode::Finite { v_b } => {
            // The wave leaves the detectors at t1, reaches the source at
            // t_s = t1 + l1 / v_b, then chases photon 2 (at path position
            // c * t) at speed v_b: interception when v_b (t - t_s) = c t.
            let t_s = t1 + l1 / v_b;
            let t_catch = v_b * t_s / (v_b - cfg.c);
            let pos = cfg.c * t_catch;
            (pos < cfg.x_b).then_some((t_catch, pos))
        }
    }
}

/// Detection and race times for the arrangement.
pub fn detection_times(cfg: &ScenarioConfig) -> TimingReport {
    TimingReport {
        t1: cfg.arm1_path_length() / cfg.c,
        t2: cfg.x_b / cfg.c,
        t_l: light_signal_time(cfg),
        t_b: bwave_transit_time(cfg).ok(),
        t_catch: catch_up(cfg).map(|(t, _)| t),
    }
}

/// Every violated validity or feasibility condition, in a fixed order.
///
/// Empty means: the invariants hold, photon 1 is detected strictly first,
/// and (in finite mode) the trigger wins the race and the wave overtakes
/// photon 2 strictly before its detection. `Instantaneous` and `Disabled`
/// modes skip the race conditions; they have no race to win.
pub fn validate_scenario(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut violations = cfg.invariant_violations();
    if !violations.is_empty() {
        return violations;
    }
    let l1 = cfg.arm1_path_length();
    if l1 >= cfg.x_b {
        violations.push(Violation::OrderingViolation {
            path1: l1,
            x_b: cfg.x_b,
        });
    }
    if let BWaveMode::Finite { .. } = cfg.bwave_mode {
        let y_min = min_detour(cfg).expect("finite mode");
        if cfg.y <= y_min {
            violations.push(Violation::RaceViolation { y: cfg.y, y_min });
        }
        if catch_up(cfg).is_none() {
            // Recompute the would-be interception point for the message.
            let v_b = match cfg.bwave_mode {
                BWaveMode::Finite { v_b } => v_b,
                _ => unreachable!(),
            };
            let t_s = l1 / cfg.c + l1 / v_b;
            let pos = cfg.c * v_b * t_s / (v_b - cfg.c);
            violations.push(Violation::NoCatch {
                intercept_position: pos,
                x_b: cfg.x_b,
            });
        }
    }
    violations
}

/// Shorthand: error out unless `validate_scenario` is clean.
pub fn require_feasible(cfg: &ScenarioConfig) -> Result<()> {
    let violations = validate_scenario(cfg);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible { violations })
    }
}


#[cfg(test)]
mod tests {
    use super::testing::{feasible_config, C};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn light_signal_time_is_x_over_c() {
        let mut cfg = feasible_config();
        cfg.x = C;
        assert_eq!(light_signal_time(&cfg), 1.0);
        cfg.x = 1.0;
        cfg.c = 3.0e8;
        assert!((light_signal_time(&cfg) - 1.0 / 3.0e8).abs() <= 1e-24);
    }

    #[test]
    fn zero_length_is_an_invariant_violation() {
        let mut cfg = feasible_config();
        cfg.x = 0.0;
        assert!(cfg
            .invariant_violations()
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveLength { name: "x", .. })));
    }

    #[test]
    fn transit_time_direct_evaluation() {
        let mut cfg = feasible_config();
        cfg.x = 1.0;
        cfg.y = 0.5;
        cfg.bwave_mode = BWaveMode::Finite { v_b: 2.0 * cfg.c };
        let t = bwave_transit_time(&cfg).unwrap();
        assert!((t - 1.0 / cfg.c).abs() <= 1e-20);
    }

    #[test]
    fn transit_time_requires_finite_mode() {
        let mut cfg = feasible_config();
        cfg.bwave_mode = BWaveMode::Instantaneous;
        assert!(matches!(
            bwave_transit_time(&cfg),
            Err(Error::NoFiniteBWaveSpeed { .. })
        ));
        assert!(matches!(min_detour(&cfg), Err(Error::NoFiniteBWaveSpeed { .. })));
    }

    #[test]
    fn subluminal_carrier_rejected() {
        let mut cfg = feasible_config();
        cfg.bwave_mode = BWaveMode::Finite { v_b: 0.5 * cfg.c };
        assert!(cfg
            .invariant_violations()
            .iter()
            .any(|v| matches!(v, Violation::SubluminalCarrier { .. })));
    }

    #[test]
    fn min_detour_matches_published_ratio() {
        let mut cfg = feasible_config();
        cfg.x = 1.0;
        cfg.bwave_mode = BWaveMode::Finite { v_b: 1.0e4 * cfg.c };
        let y_min = min_detour(&cfg).unwrap();
        assert!((y_min - 4999.5).abs() <= 1e-9);
        // v_b = 3c, x = 2 gives exactly 2.
        cfg.x = 2.0;
        cfg.bwave_mode = BWaveMode::Finite { v_b: 3.0 * cfg.c };
        assert!((min_detour(&cfg).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn race_flips_exactly_at_min_detour() {
        let mut cfg = feasible_config();
        let y_min = min_detour(&cfg).unwrap();
        cfg.y = y_min * (1.0 + 1e-9);
        assert!(race_ok(&cfg).unwrap());
        cfg.y = y_min * (1.0 - 1e-9);
        assert!(!race_ok(&cfg).unwrap());
        cfg.y = y_min;
        assert!(!race_ok(&cfg).unwrap());
    }

    #[test]
    fn barely_superluminal_carrier_always_loses_race() {
        let mut cfg = feasible_config();
        cfg.bwave_mode = BWaveMode::Finite {
            v_b: cfg.c * (1.0 + 1e-9),
        };
        cfg.y = 1.0;
        assert!(race_ok(&cfg).unwrap());
    }

    #[test]
    fn long_trigger_path_loses_race() {
        let mut cfg = feasible_config();
        cfg.x = 1.0e6;
        cfg.bwave_mode = BWaveMode::Finite { v_b: 1.0e4 * cfg.c };
        // y stays at its small default; y_min scales with x.
        assert!(!race_ok(&cfg).unwrap());
    }

    #[test]
    fn detection_times_order_and_catch() {
        let cfg = feasible_config();
        let report = detection_times(&cfg);
        assert!(report.t1 < report.t2);
        assert!((report.t1 - cfg.arm1_path_length() / cfg.c).abs() <= 1e-18);
        assert!((report.t2 - cfg.x_b / cfg.c).abs() <= 1e-18);
        let t_catch = report.t_catch.expect("feasible config intercepts");
        assert!(report.t1 < t_catch && t_catch < report.t2);
    }

    #[test]
    fn instantaneous_catch_is_at_first_detection() {
        let mut cfg = feasible_config();
        cfg.bwave_mode = BWaveMode::Instantaneous;
        let report = detection_times(&cfg);
        assert_eq!(report.t_catch, Some(report.t1));
        assert_eq!(report.t_b, None);
    }

    #[test]
    fn ordering_violation_flagged() {
        let mut cfg = feasible_config();
        cfg.x_b = cfg.arm1_path_length() * 0.9;
        // Keep interception irrelevant: the ordering violation must appear.
        let violations = validate_scenario(&cfg);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::OrderingViolation { .. })));
        let report = detection_times(&cfg);
        assert!(report.t1 >= report.t2);
    }

    #[test]
    fn no_catch_flagged_when_detector_too_close() {
        let mut cfg = feasible_config();
        cfg.x = 1.0;
        cfg.y = 60.0;
        cfg.x_a = 100.0;
        cfg.bwave_mode = BWaveMode::Finite { v_b: 2.0 * cfg.c };
        // Interception would land at l1 (v_b + c)/(v_b - c) = 3 l1 = 660 m.
        cfg.x_b = 440.0;
        let violations = validate_scenario(&cfg);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::NoCatch { .. }));
    }

    #[test]
    fn feasible_default_validates_clean() {
        assert!(validate_scenario(&feasible_config()).is_empty());
    }

    #[test]
    fn race_violation_flagged_below_threshold() {
        let mut cfg = feasible_config();
        let y_min = min_detour(&cfg).unwrap();
        cfg.y = 0.5 * y_min;
        // Shrinking y keeps ordering fine (x_b is generous).
        let violations = validate_scenario(&cfg);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::RaceViolation { .. })));
    }

    proptest! {
        #[test]
        fn race_threshold_is_exact(x in 0.1..100.0f64, ratio in 1.5..1000.0f64) {
            let mut cfg = feasible_config();
            cfg.x = x;
            cfg.bwave_mode = BWaveMode::Finite { v_b: ratio * cfg.c };
            let y_min = min_detour(&cfg).unwrap();
            cfg.y = y_min * (1.0 + 1e-9);
            prop_assert!(race_ok(&cfg).unwrap());
            cfg.y = y_min * (1.0 - 1e-9);
            prop_assert!(!race_ok(&cfg).unwrap());
        }

        #[test]
        fn ordering_holds_whenever_path_condition_holds(
            x_a in 1.0..1000.0f64,
            y in 1.0..1000.0f64,
            slack in 1.0001..10.0f64,
        ) {
            let mut cfg = feasible_config();
            cfg.x_a = x_a;
            cfg.y = y;
            cfg.x_b = (x_a + 2.0 * y) * slack;
            let report = detection_times(&cfg);
            prop_assert!(report.t1 < report.t2);
        }

        #[test]
        fn min_detour_monotone_in_speed_and_trigger_distance(
            x in 0.1..100.0f64,
            ratio in 1.5..1000.0f64,
            bump in 1.001..4.0f64,
        ) {
            let mut cfg = feasible_config();
            cfg.x = x;
            cfg.bwave_mode = BWaveMode::Finite { v_b: ratio * cfg.c };
            let base = min_detour(&cfg).unwrap();
            cfg.bwave_mode = BWaveMode::Finite { v_b: ratio * bump * cfg.c };
            prop_assert!(min_detour(&cfg).unwrap() > base);
            cfg.bwave_mode = BWaveMode::Finite { v_b: ratio * cfg.c };
            cfg.x = x * bump;
            prop_assert!(min_detour(&cfg).unwrap() > base);
        }
    }
}
