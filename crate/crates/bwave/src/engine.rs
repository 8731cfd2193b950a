//! Discrete-event simulation of one experimental trial in the preferred
//! frame.
//!
//! Each trial plays out on a time-ordered event queue: the photons cross
//! their optical elements, photon 1 is measured, its detection launches a
//! collapse wave carrying the partner state and (depending on the trigger
//! rule) a light-speed signal toward the Pockels cell. The wave retraces
//! arm 1 backward, applying the adjoint of whatever unitary each element
//! holds at the moment of crossing, passes the source, runs forward along
//! arm 2, and — if it overtakes photon 2 before detection — forces it into
//! the carried state. A wave that misses leaves photon 2 on its local
//! marginal (an unbiased coin for the singlet).
//!
//! The backward-adjoint rule is the unique local convention under which a
//! purely static arrangement reproduces the Born-rule statistics of the
//! device-evolved pair state, while still letting a Pockels cell that
//! switches on between photon 1's passage and the wave's passage steer the
//! partner outcome.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{require_feasible, BWaveMode, ScenarioConfig, TriggerRule};
use crate::polarization::{
    apply_jones_to_photon, collapse_on_first_detection, make_element, marginal_probability,
    singlet, AnalyzerOrientation, Channel, JonesOperator, PhotonIndex, SinglePhotonState,
    TwoPhotonState,
};

/// Activation schedule of one optical element: `idle` applies before the
/// activation instant, `active` strictly after it. Static elements carry
/// the same operator in both slots and never activate; a Pockels cell
/// idles as the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceTimeline {
    pub idle: JonesOperator,
    pub active: JonesOperator,
    pub activation: Option<f64>,
}

impl DeviceTimeline {
    pub fn static_element(u: JonesOperator) -> Self {
        Self {
            idle: u,
            active: u,
            activation: None,
        }
    }

    pub fn pockels(active: JonesOperator) -> Self {
        Self {
            idle: JonesOperator::identity(),
            active,
            activation: None,
        }
    }

    /// Operator in effect at time `t`.
    pub fn unitary_at(&self, t: f64) -> &JonesOperator {
        if pc_active_at(self, t) {
            &self.active
        } else {
            &self.idle
        }
    }
}

/// True when an activation exists and `t` lies strictly after it. A
/// crossing at exactly the activation instant sees the element idle.
pub fn pc_active_at(timeline: &DeviceTimeline, t: f64) -> bool {
    timeline.activation.is_some_and(|t_act| t > t_act)
}

/// An element placed on an arm, with its schedule. `position` is the
/// path-length coordinate from the source along that arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedElement {
    pub position: f64,
    pub timeline: DeviceTimeline,
    pub is_pc: bool,
}

/// Which leg of its journey the collapse wave is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BWaveLeg {
    BackwardOnArm1,
    ForwardOnArm2,
}

/// The in-flight carrier: the state the partner photon will be forced
/// into, its current path coordinate, direction, and speed (infinite in
/// instantaneous mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BWave {
    pub carried_state: SinglePhotonState,
    pub position: f64,
    pub leg: BWaveLeg,
    pub speed: f64,
}

/// What happened in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub ch1: Channel,
    pub ch2: Channel,
    pub t1: f64,
    pub t2: f64,
    /// The Pockels cell was active when the wave crossed it.
    pub pc_activated: bool,
    /// The wave overtook photon 2 before its detection.
    pub bwave_arrived: bool,
    pub t_catch: Option<f64>,
    /// Detections coincided (resolved photon-1-first).
    pub simultaneous: bool,
}

/// One entry of the processed-event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    PhotonArrivesAtElement {
        photon: PhotonIndex,
        position: f64,
    },
    Detection {
        detector: PhotonIndex,
        channel: Channel,
    },
    TriggerArrivesAtPc,
    BWaveCrossesElement {
        position: f64,
        backward: bool,
        pc_active: bool,
    },
    BWaveReachesPartner,
}

/// Pending queue entries. Ties in time break by class first (trigger and
/// wave legs resolve before photon bookkeeping and detections), then by
/// insertion order, so equal-time cascades stay deterministic.
#[derive(Debug, Clone, Copy)]
enum Action {
    Photon1Crossing { slot: usize },
    Photon2Crossing { slot: usize },
    Detect1,
    Detect2,
    TriggerAtPc,
    BWaveCrossing { slot: usize, backward: bool },
    BWaveReachesPartner,
}

impl Action {
    fn class(&self) -> u8 {
        match self {
            Action::TriggerAtPc => 0,
            Action::BWaveCrossing { .. } => 1,
            Action::BWaveReachesPartner => 2,
            Action::Photon1Crossing { .. } | Action::Photon2Crossing { .. } => 3,
            Action::Detect1 | Action::Detect2 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    class: u8,
    seq: u64,
    action: Action,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop earliest first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.class.cmp(&self.class))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Interception of photon 2 by the wave, if it happens before detection.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Intercept {
    time: f64,
    position: f64,
}

/// Per-scenario machinery for running trials. Construction checks the
/// structural invariants (positive lengths, superluminal finite carrier,
/// in-range elements) but not feasibility; [`simulate_trial`] adds the
/// feasibility gate.
#[derive(Debug, Clone)]
pub struct TrialEngine {
    analyzer_a: AnalyzerOrientation,
    analyzer_b: AnalyzerOrientation,
    trigger_rule: TriggerRule,
    mode: BWaveMode,
    l1: f64,
    x_b: f64,
    c: f64,
    t1: f64,
    t2: f64,
    /// Trigger flight time from the detectors to the Pockels cell.
    trigger_delay: f64,
    /// Arm-1 elements (Pockels cell included), ascending path coordinate.
    arm1: Vec<TimedElement>,
    /// Arm-2 elements, ascending path coordinate.
    arm2: Vec<TimedElement>,
    pc_slot: usize,
    source: TwoPhotonState,
    intercept: Option<Intercept>,
}

struct TrialState {
    pair: TwoPhotonState,
    ch1: Option<Channel>,
    ch2: Option<Channel>,
    pc_activation: Option<f64>,
    bwave: Option<BWave>,
    forced: Option<SinglePhotonState>,
    pc_active_at_crossing: bool,
    bwave_arrived: bool,
    t_catch: Option<f64>,
}

impl TrialEngine {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let violations = cfg.invariant_violations();
        if !violations.is_empty() {
            return Err(Error::Infeasible { violations });
        }
        let l1 = cfg.arm1_path_length();
        let t1 = l1 / cfg.c;
        let t2 = cfg.x_b / cfg.c;

        let mut arm1: Vec<TimedElement> = Vec::new();
        // The cell sits between the source and the detour; only its
        // path distance to the detectors (x + 2y) is fixed by the layout,
        // which puts it at coordinate x_a - x from the source.
        arm1.push(TimedElement {
            position: cfg.x_a - cfg.x,
            timeline: DeviceTimeline::pockels(make_element(cfg.pc_element)?),
            is_pc: true,
        });
        let mut arm2: Vec<TimedElement> = Vec::new();
        for placed in &cfg.extra_elements {
            let element = TimedElement {
                position: placed.position,
                timeline: DeviceTimeline::static_element(make_element(placed.element)?),
                is_pc: false,
            };
            match placed.arm {
                PhotonIndex::One => arm1.push(element),
                PhotonIndex::Two => arm2.push(element),
            }
        }
        arm1.sort_by(|a, b| a.position.total_cmp(&b.position));
        arm2.sort_by(|a, b| a.position.total_cmp(&b.position));
        let pc_slot = arm1.iter().position(|e| e.is_pc).expect("pc inserted");

        let intercept = match cfg.bwave_mode {
            BWaveMode::Disabled => None,
            BWaveMode::Instantaneous => {
                let position = cfg.c * t1;
                (position < cfg.x_b).then_some(Intercept { time: t1, position })
            }
            BWaveMode::Finite { v_b } => {
                // Stepwise: back to the source, then close the gap to the
                // photon at relative speed v_b - c.
                let t_source = t1 + l1 / v_b;
                let gap = cfg.c * t_source;
                let time = t_source + gap / (v_b - cfg.c);
                let position = cfg.c * time;
                (position < cfg.x_b).then_some(Intercept { time, position })
            }
        };

        Ok(Self {
            analyzer_a: cfg.analyzer_a,
            analyzer_b: cfg.analyzer_b,
            trigger_rule: cfg.trigger_rule,
            mode: cfg.bwave_mode,
            l1,
            x_b: cfg.x_b,
            c: cfg.c,
            t1,
            t2,
            trigger_delay: cfg.x / cfg.c,
            arm1,
            arm2,
            pc_slot,
            source: singlet(),
            intercept,
        })
    }

    pub fn detection_time_1(&self) -> f64 {
        self.t1
    }

    pub fn detection_time_2(&self) -> f64 {
        self.t2
    }

    fn trigger_fires(&self, ch1: Channel) -> bool {
        match self.trigger_rule {
            TriggerRule::Always => true,
            TriggerRule::Never => false,
            TriggerRule::OnReflectionD1Prime => ch1 == Channel::Reflection,
        }
    }

    /// Time at which the wave, launched at `t1` from the detectors, crosses
    /// the backward path coordinate `p` on arm 1.
    fn backward_cross_time(&self, p: f64) -> f64 {
        match self.mode {
            BWaveMode::Finite { v_b } => self.t1 + (self.l1 - p) / v_b,
            _ => self.t1,
        }
    }

    /// Time at which the wave crosses forward coordinate `q` on arm 2.
    fn forward_cross_time(&self, q: f64) -> f64 {
        match self.mode {
            BWaveMode::Finite { v_b } => self.t1 + self.l1 / v_b + q / v_b,
            _ => self.t1,
        }
    }

    fn wave_speed(&self) -> f64 {
        match self.mode {
            BWaveMode::Finite { v_b } => v_b,
            _ => f64::INFINITY,
        }
    }

    /// Runs one trial. Two uniform draws are consumed per trial, one per
    /// detection, in detection order.
    pub fn simulate(&self, rng: &mut impl Rng) -> TrialRecord {
        self.run(rng, None)
    }

    /// Runs one trial and returns the processed-event log alongside it.
    pub fn simulate_logged(&self, rng: &mut impl Rng) -> (TrialRecord, Vec<Event>) {
        let mut log = Vec::new();
        let record = self.run(rng, Some(&mut log));
        (record, log)
    }

    fn run(&self, rng: &mut impl Rng, mut log: Option<&mut Vec<Event>>) -> TrialRecord {
        let mut queue: BinaryHeap<Scheduled> =
            BinaryHeap::with_capacity(8 + 2 * (self.arm1.len() + self.arm2.len()));
        let mut seq: u64 = 0;
        let push = |queue: &mut BinaryHeap<Scheduled>, seq: &mut u64, time: f64, action: Action| {
            debug_assert!(time.is_finite() && time >= 0.0);
            queue.push(Scheduled {
                time,
                class: action.class(),
                seq: *seq,
                action,
            });
            *seq += 1;
        };

        // Photon flights are known at emission; everything downstream of
        // the first detection is scheduled by its handler.
        push(&mut queue, &mut seq, self.t1, Action::Detect1);
        push(&mut queue, &mut seq, self.t2, Action::Detect2);
        for (slot, e) in self.arm1.iter().enumerate() {
            // The cell's derived coordinate can fall outside the arm when x
            // exceeds x_a; it is symbolic there and idles for photon 1
            // anyway, so only in-range crossings are played.
            if e.position > 0.0 && e.position < self.l1 {
                push(
                    &mut queue,
                    &mut seq,
                    e.position / self.c,
                    Action::Photon1Crossing { slot },
                );
            }
        }
        for (slot, e) in self.arm2.iter().enumerate() {
            push(
                &mut queue,
                &mut seq,
                e.position / self.c,
                Action::Photon2Crossing { slot },
            );
        }

        let mut state = TrialState {
            pair: self.source,
            ch1: None,
            ch2: None,
            pc_activation: None,
            bwave: None,
            forced: None,
            pc_active_at_crossing: false,
            bwave_arrived: false,
            t_catch: None,
        };

        let mut last_time = f64::NEG_INFINITY;
        while let Some(entry) = queue.pop() {
            debug_assert!(entry.time >= last_time, "event queue must be causal");
            last_time = entry.time;
            let logged = self.handle(entry.time, entry.action, &mut state, rng, |time, action| {
                push(&mut queue, &mut seq, time, action);
            });
            if let Some(log) = log.as_deref_mut() {
                log.push(Event {
                    time: entry.time,
                    kind: logged,
                });
            }
        }

        TrialRecord {
            ch1: state.ch1.expect("photon 1 detected"),
            ch2: state.ch2.expect("photon 2 detected"),
            t1: self.t1,
            t2: self.t2,
            pc_activated: state.pc_active_at_crossing,
            bwave_arrived: state.bwave_arrived,
            t_catch: state.t_catch,
            simultaneous: self.t1 == self.t2,
        }
    }

    fn element_timeline(&self, elem: &TimedElement, pc_activation: Option<f64>) -> DeviceTimeline {
        if elem.is_pc {
            DeviceTimeline {
                activation: pc_activation,
                ..elem.timeline
            }
        } else {
            elem.timeline
        }
    }

    fn handle(
        &self,
        time: f64,
        action: Action,
        state: &mut TrialState,
        rng: &mut impl Rng,
        mut schedule: impl FnMut(f64, Action),
    ) -> EventKind {
        match action {
            Action::Photon1Crossing { slot } => {
                let elem = &self.arm1[slot];
                let timeline = self.element_timeline(elem, state.pc_activation);
                state.pair =
                    apply_jones_to_photon(&state.pair, PhotonIndex::One, timeline.unitary_at(time));
                EventKind::PhotonArrivesAtElement {
                    photon: PhotonIndex::One,
                    position: elem.position,
                }
            }
            Action::Photon2Crossing { slot } => {
                let elem = &self.arm2[slot];
                if time < self.t1 {
                    // Pre-measurement flight: the pair state evolves.
                    state.pair = apply_jones_to_photon(
                        &state.pair,
                        PhotonIndex::Two,
                        elem.timeline.unitary_at(time),
                    );
                } else if let Some(forced) = state.forced {
                    // Past the interception point the photon itself carries
                    // the forced state through the remaining elements.
                    state.forced = Some(elem.timeline.unitary_at(time).apply(forced));
                }
                // Between detection and interception the photon holds no
                // definite state; the wave re-crosses these elements.
                EventKind::PhotonArrivesAtElement {
                    photon: PhotonIndex::Two,
                    position: elem.position,
                }
            }
            Action::Detect1 => {
                let p_t = marginal_probability(
                    &state.pair,
                    PhotonIndex::One,
                    self.analyzer_a,
                    Channel::Transmission,
                );
                let ch1 = sample_channel(rng, p_t);
                state.ch1 = Some(ch1);

                if self.trigger_fires(ch1) {
                    schedule(time + self.trigger_delay, Action::TriggerAtPc);
                }

                if self.mode != BWaveMode::Disabled {
                    // The wave departs carrying the partner state the
                    // source pair assigns to this outcome: the orthogonal
                    // orientation for a transmission, the analyzer
                    // orientation itself for a reflection.
                    let (_, carried) =
                        collapse_on_first_detection(&self.source, self.analyzer_a, ch1)
                            .expect("source-state branches are non-degenerate");
                    state.bwave = Some(BWave {
                        carried_state: carried,
                        position: self.l1,
                        leg: BWaveLeg::BackwardOnArm1,
                        speed: self.wave_speed(),
                    });
                    for (slot, e) in self.arm1.iter().enumerate().rev() {
                        schedule(
                            self.backward_cross_time(e.position),
                            Action::BWaveCrossing {
                                slot,
                                backward: true,
                            },
                        );
                    }
                    if let Some(intercept) = self.intercept {
                        for (slot, e) in self.arm2.iter().enumerate() {
                            if e.position < intercept.position {
                                schedule(
                                    self.forward_cross_time(e.position),
                                    Action::BWaveCrossing {
                                        slot,
                                        backward: false,
                                    },
                                );
                            }
                        }
                        schedule(intercept.time, Action::BWaveReachesPartner);
                    }
                }
                EventKind::Detection {
                    detector: PhotonIndex::One,
                    channel: ch1,
                }
            }
            Action::Detect2 => {
                let p_t = match state.forced {
                    Some(forced) => {
                        forced.channel_probability(self.analyzer_b, Channel::Transmission)
                    }
                    // Local marginal of the singlet: an unbiased coin at
                    // any orientation.
                    None => 0.5,
                };
                let ch2 = sample_channel(rng, p_t);
                state.ch2 = Some(ch2);
                EventKind::Detection {
                    detector: PhotonIndex::Two,
                    channel: ch2,
                }
            }
            Action::TriggerAtPc => {
                state.pc_activation = Some(time);
                EventKind::TriggerArrivesAtPc
            }
            Action::BWaveCrossing { slot, backward } => {
                let elem = if backward {
                    &self.arm1[slot]
                } else {
                    &self.arm2[slot]
                };
                let timeline = self.element_timeline(elem, state.pc_activation);
                let pc_active = elem.is_pc && pc_active_at(&timeline, time);
                if elem.is_pc {
                    state.pc_active_at_crossing = pc_active;
                }
                let wave = state.bwave.as_mut().expect("wave in flight");
                let u = timeline.unitary_at(time);
                wave.carried_state = if backward {
                    u.adjoint().apply(wave.carried_state)
                } else {
                    u.apply(wave.carried_state)
                };
                wave.position = elem.position;
                wave.leg = if backward {
                    BWaveLeg::BackwardOnArm1
                } else {
                    BWaveLeg::ForwardOnArm2
                };
                EventKind::BWaveCrossesElement {
                    position: elem.position,
                    backward,
                    pc_active,
                }
            }
            Action::BWaveReachesPartner => {
                let wave = state.bwave.as_mut().expect("wave in flight");
                wave.leg = BWaveLeg::ForwardOnArm2;
                wave.position = self
                    .intercept
                    .map(|i| i.position)
                    .expect("interception scheduled");
                state.forced = Some(wave.carried_state);
                state.bwave_arrived = true;
                state.t_catch = Some(time);
                EventKind::BWaveReachesPartner
            }
        }
    }

    /// Exact model probabilities of the four channel pairs
    /// (TT, TR, RT, RR), computed without sampling by tracing each
    /// first-photon branch through [`bwave_trace`].
    pub fn exact_joint_probabilities(&self) -> Result<[f64; 4]> {
        // Pair state at the first detection: photon 1 has crossed its whole
        // arm, photon 2 everything nearer than c * t1.
        let mut pair = self.source;
        for e in &self.arm1 {
            if e.position > 0.0 && e.position < self.l1 {
                let t = e.position / self.c;
                pair = apply_jones_to_photon(&pair, PhotonIndex::One, e.timeline.unitary_at(t));
            }
        }
        for e in &self.arm2 {
            let t = e.position / self.c;
            if t < self.t1 {
                pair = apply_jones_to_photon(&pair, PhotonIndex::Two, e.timeline.unitary_at(t));
            }
        }

        let mut joints = [0.0; 4];
        for (row, ch1) in [Channel::Transmission, Channel::Reflection]
            .into_iter()
            .enumerate()
        {
            let p1 = marginal_probability(&pair, PhotonIndex::One, self.analyzer_a, ch1);
            let (_, carried) = collapse_on_first_detection(&self.source, self.analyzer_a, ch1)?;
            let activation = self
                .trigger_fires(ch1)
                .then_some(self.t1 + self.trigger_delay);
            let (arm1, arm2) = self.timed_arms(activation);
            let traced = bwave_trace(&arm1, &arm2, carried, self.t1, &self.trace_geometry());
            let p2_t = match traced.arrival {
                Some(_) => traced
                    .final_state
                    .channel_probability(self.analyzer_b, Channel::Transmission),
                None => 0.5,
            };
            joints[2 * row] = p1 * p2_t;
            joints[2 * row + 1] = p1 * (1.0 - p2_t);
        }
        Ok(joints)
    }

    fn timed_arms(&self, pc_activation: Option<f64>) -> (Vec<TimedElement>, Vec<TimedElement>) {
        let mut arm1 = self.arm1.clone();
        arm1[self.pc_slot].timeline.activation = pc_activation;
        (arm1, self.arm2.clone())
    }

    fn trace_geometry(&self) -> TraceGeometry {
        TraceGeometry {
            l1: self.l1,
            x_b: self.x_b,
            c: self.c,
            mode: self.mode,
        }
    }
}

/// Geometry a standalone trace needs.
#[derive(Debug, Clone, Copy)]
pub struct TraceGeometry {
    pub l1: f64,
    pub x_b: f64,
    pub c: f64,
    pub mode: BWaveMode,
}

impl TraceGeometry {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            l1: cfg.arm1_path_length(),
            x_b: cfg.x_b,
            c: cfg.c,
            mode: cfg.bwave_mode,
        }
    }
}

/// Result of a standalone wave trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOutcome {
    /// State the partner photon presents to its analyzer (meaningful only
    /// when `arrival` is set).
    pub final_state: SinglePhotonState,
    /// Interception time, absent when the wave cannot overtake photon 2
    /// before its detection.
    pub arrival: Option<f64>,
}

/// Closed-form walk of the wave: arm 1 in reverse spatial order applying
/// adjoints, arm 2 forward applying the operators themselves, every
/// crossing evaluated with the element's operator as of the crossing time.
/// Elements past the interception point are carried by the forced photon
/// itself at light speed.
pub fn bwave_trace(
    arm1: &[TimedElement],
    arm2: &[TimedElement],
    carried: SinglePhotonState,
    t_start: f64,
    geometry: &TraceGeometry,
) -> TraceOutcome {
    let mut state = carried;
    let (v_b, instantaneous) = match geometry.mode {
        BWaveMode::Finite { v_b } => (v_b, false),
        BWaveMode::Instantaneous => (f64::INFINITY, true),
        BWaveMode::Disabled => {
            return TraceOutcome {
                final_state: carried,
                arrival: None,
            }
        }
    };

    let backward_time = |p: f64| {
        if instantaneous {
            t_start
        } else {
            t_start + (geometry.l1 - p) / v_b
        }
    };
    let t_source = if instantaneous {
        t_start
    } else {
        t_start + geometry.l1 / v_b
    };
    let forward_time = |q: f64| if instantaneous { t_start } else { t_source + q / v_b };

    let (t_catch, x_int) = if instantaneous {
        (t_start, geometry.c * t_start)
    } else {
        let gap = geometry.c * t_source;
        let t = t_source + gap / (v_b - geometry.c);
        (t, geometry.c * t)
    };
    let arrives = x_int < geometry.x_b;

    let mut sorted1: Vec<&TimedElement> = arm1.iter().collect();
    sorted1.sort_by(|a, b| b.position.total_cmp(&a.position));
    for e in sorted1 {
        let t = backward_time(e.position);
        state = e.timeline.unitary_at(t).adjoint().apply(state);
    }

    let mut sorted2: Vec<&TimedElement> = arm2.iter().collect();
    sorted2.sort_by(|a, b| a.position.total_cmp(&b.position));
    for e in sorted2 {
        let t = if arrives && e.position >= x_int {
            e.position / geometry.c
        } else {
            forward_time(e.position)
        };
        state = e.timeline.unitary_at(t).apply(state);
    }

    TraceOutcome {
        final_state: state,
        arrival: arrives.then_some(t_catch),
    }
}

/// Per-trial random substream: one master seed, one independent stream per
/// trial index, so aggregation order and worker count cannot change any
/// outcome.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

fn sample_channel(rng: &mut impl Rng, p_transmission: f64) -> Channel {
    if rng.random::<f64>() < p_transmission {
        Channel::Transmission
    } else {
        Channel::Reflection
    }
}

/// Runs one trial of a feasible scenario.
pub fn simulate_trial(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<TrialRecord> {
    require_feasible(cfg)?;
    Ok(TrialEngine::new(cfg)?.simulate(rng))
}

/// Runs one trial without the feasibility gate (structural invariants are
/// still enforced). Intended for negative tests on deliberately broken
/// arrangements.
pub fn simulate_trial_unchecked(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<TrialRecord> {
    Ok(TrialEngine::new(cfg)?.simulate(rng))
}

/// Exact model probabilities of (TT, TR, RT, RR) for any structurally
/// valid arrangement, feasible or not.
pub fn model_channel_probabilities(cfg: &ScenarioConfig) -> Result<[f64; 4]> {
    TrialEngine::new(cfg)?.exact_joint_probabilities()
}
