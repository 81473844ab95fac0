//! Threshold gesture engine.
//!
//! Board ranger values are turned into lean and jump actions, shoe angles
//! into push strokes and crouches. The engine is a deterministic transducer:
//! [`engine_step`] consumes one sample and returns the next state plus any
//! events that sample triggered.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::{SensorSample, SensorTrace, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Side distance below which the rider is leaning left.
    pub tilt_low_mm: f64,
    /// Side distance above which the rider is leaning right.
    pub tilt_high_mm: f64,
    /// Dead band applied on both sides of each tilt threshold; also the
    /// re-arm margin below the jump threshold.
    pub tilt_hysteresis_mm: f64,
    /// Nose rise over the resting front distance that counts as a jump.
    pub jump_pitch_mm: f64,
    /// Resting front distance. `None` takes the first front sample.
    pub pitch_rest_mm: Option<f64>,
    pub push_angle_deg: f64,
    pub crouch_angle_deg: f64,
    pub angle_hysteresis_deg: f64,
    /// Minimum spacing between two jumps, or two pushes of the same shoe.
    pub debounce_ms: u64,
    /// Heading change carried by one heading event.
    pub heading_step_deg: f64,
    /// A lean held this long turns the turntable by one heading step.
    pub heading_hold_ms: u64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            tilt_low_mm: 110.0,
            tilt_high_mm: 190.0,
            tilt_hysteresis_mm: 10.0,
            jump_pitch_mm: 40.0,
            pitch_rest_mm: None,
            push_angle_deg: 120.0,
            crouch_angle_deg: 90.0,
            angle_hysteresis_deg: 2.0,
            debounce_ms: 150,
            heading_step_deg: 90.0,
            heading_hold_ms: 1500,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        let h = self.tilt_hysteresis_mm;
        if !(h >= 0.0) {
            return Err(Error::invalid(format!(
                "tilt hysteresis must be >= 0, got {h}"
            )));
        }
        if !(self.tilt_low_mm + h < self.tilt_high_mm - h) {
            return Err(Error::invalid(format!(
                "tilt bands overlap: {} + {h} >= {} - {h}",
                self.tilt_low_mm, self.tilt_high_mm
            )));
        }
        if !(self.push_angle_deg > 0.0 && self.push_angle_deg < 180.0) {
            return Err(Error::invalid(format!(
                "push angle must lie in (0, 180), got {}",
                self.push_angle_deg
            )));
        }
        if !(self.angle_hysteresis_deg >= 0.0) {
            return Err(Error::invalid("angle hysteresis must be >= 0"));
        }
        if !(self.jump_pitch_mm > 0.0) {
            return Err(Error::invalid("jump pitch must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    LeanLeftOn,
    LeanRightOn,
    LeanOff,
    Jump,
    Push,
    CrouchOn,
    CrouchOff,
    HeadingLeft,
    HeadingRight,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        ActionKind::LeanLeftOn,
        ActionKind::LeanRightOn,
        ActionKind::LeanOff,
        ActionKind::Jump,
        ActionKind::Push,
        ActionKind::CrouchOn,
        ActionKind::CrouchOff,
        ActionKind::HeadingLeft,
        ActionKind::HeadingRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::LeanLeftOn => "LeanLeftOn",
            ActionKind::LeanRightOn => "LeanRightOn",
            ActionKind::LeanOff => "LeanOff",
            ActionKind::Jump => "Jump",
            ActionKind::Push => "Push",
            ActionKind::CrouchOn => "CrouchOn",
            ActionKind::CrouchOff => "CrouchOff",
            ActionKind::HeadingLeft => "HeadingLeft",
            ActionKind::HeadingRight => "HeadingRight",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown action {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub timestamp_ms: u64,
    pub kind: ActionKind,
}

impl ActionEvent {
    pub fn new(timestamp_ms: u64, kind: ActionKind) -> Self {
        ActionEvent { timestamp_ms, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HidKey {
    ArrowLeft,
    ArrowRight,
    ArrowUp,
    Space,
    KeyC,
}

impl HidKey {
    pub fn as_str(self) -> &'static str {
        match self {
            HidKey::ArrowLeft => "ArrowLeft",
            HidKey::ArrowRight => "ArrowRight",
            HidKey::ArrowUp => "ArrowUp",
            HidKey::Space => "Space",
            HidKey::KeyC => "KeyC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyAction {
    Down,
    Up,
}

impl KeyAction {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyAction::Down => "Down",
            KeyAction::Up => "Up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HidEvent {
    pub timestamp_ms: u64,
    pub key: HidKey,
    pub action: KeyAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeanState {
    #[default]
    Neutral,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct PushTracker {
    below: bool,
    last_push_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EngineState {
    last_ts: Option<u64>,
    lean: LeanState,
    lean_since_ms: u64,
    heading_sent: bool,
    pitch_rest: Option<f64>,
    jump_disarmed: bool,
    last_jump_ms: Option<u64>,
    left_push: PushTracker,
    right_push: PushTracker,
    crouching: bool,
}

impl EngineState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lean(&self) -> LeanState {
        self.lean
    }

    pub fn crouching(&self) -> bool {
        self.crouching
    }
}

fn debounced(last: Option<u64>, now: u64, debounce_ms: u64) -> bool {
    last.is_none_or(|prev| now - prev >= debounce_ms)
}

/// One transition of the engine. Timestamps must not go backwards.
pub fn engine_step(
    state: &EngineState,
    sample: &SensorSample,
    config: &ThresholdConfig,
) -> Result<(EngineState, Vec<ActionEvent>)> {
    let t = sample.timestamp_ms;
    if let Some(prev) = state.last_ts {
        if t < prev {
            return Err(Error::invalid(format!(
                "sample at {t} ms arrives after {prev} ms"
            )));
        }
    }
    let mut next = state.clone();
    next.last_ts = Some(t);
    let mut events = Vec::new();
    let v = sample.value;

    match sample.source {
        Source::BoardSide => {
            let h = config.tilt_hysteresis_mm;
            match next.lean {
                LeanState::Left if v >= config.tilt_low_mm + h => {
                    events.push(ActionEvent::new(t, ActionKind::LeanOff));
                    next.lean = LeanState::Neutral;
                }
                LeanState::Right if v <= config.tilt_high_mm - h => {
                    events.push(ActionEvent::new(t, ActionKind::LeanOff));
                    next.lean = LeanState::Neutral;
                }
                _ => {}
            }
            if next.lean == LeanState::Neutral {
                let entered = if v < config.tilt_low_mm - h {
                    Some((LeanState::Left, ActionKind::LeanLeftOn))
                } else if v > config.tilt_high_mm + h {
                    Some((LeanState::Right, ActionKind::LeanRightOn))
                } else {
                    None
                };
                if let Some((lean, kind)) = entered {
                    events.push(ActionEvent::new(t, kind));
                    next.lean = lean;
                    next.lean_since_ms = t;
                    next.heading_sent = false;
                }
            }
            if next.lean != LeanState::Neutral
                && !next.heading_sent
                && t - next.lean_since_ms >= config.heading_hold_ms
            {
                let kind = if next.lean == LeanState::Left {
                    ActionKind::HeadingLeft
                } else {
                    ActionKind::HeadingRight
                };
                events.push(ActionEvent::new(t, kind));
                next.heading_sent = true;
            }
        }
        Source::BoardFront => {
            let Some(rest) = config.pitch_rest_mm.or(next.pitch_rest) else {
                next.pitch_rest = Some(v);
                return Ok((next, events));
            };
            let threshold = rest + config.jump_pitch_mm;
            if !next.jump_disarmed && v >= threshold {
                next.jump_disarmed = true;
                if debounced(next.last_jump_ms, t, config.debounce_ms) {
                    events.push(ActionEvent::new(t, ActionKind::Jump));
                    next.last_jump_ms = Some(t);
                }
            } else if next.jump_disarmed && v < threshold - config.tilt_hysteresis_mm {
                next.jump_disarmed = false;
            }
        }
        Source::LeftShoe | Source::RightShoe => {
            let tracker = if sample.source == Source::LeftShoe {
                &mut next.left_push
            } else {
                &mut next.right_push
            };
            if !tracker.below && v < config.push_angle_deg {
                tracker.below = true;
            } else if tracker.below && v >= config.push_angle_deg {
                tracker.below = false;
                if debounced(tracker.last_push_ms, t, config.debounce_ms) {
                    tracker.last_push_ms = Some(t);
                    events.push(ActionEvent::new(t, ActionKind::Push));
                }
            }

            if sample.source == Source::LeftShoe {
                if !next.crouching && v < config.crouch_angle_deg {
                    next.crouching = true;
                    events.push(ActionEvent::new(t, ActionKind::CrouchOn));
                } else if next.crouching
                    && v >= config.crouch_angle_deg + config.angle_hysteresis_deg
                {
                    next.crouching = false;
                    events.push(ActionEvent::new(t, ActionKind::CrouchOff));
                }
            }
        }
    }
    Ok((next, events))
}

/// Folds [`engine_step`] over a sample stream from the initial state.
pub fn run_samples<'a>(
    samples: impl IntoIterator<Item = &'a SensorSample>,
    config: &ThresholdConfig,
) -> Result<Vec<ActionEvent>> {
    config.validate()?;
    let mut state = EngineState::new();
    let mut events = Vec::new();
    for sample in samples {
        let (next, mut emitted) = engine_step(&state, sample, config)?;
        state = next;
        events.append(&mut emitted);
    }
    Ok(events)
}

pub fn run_engine(trace: &SensorTrace, config: &ThresholdConfig) -> Result<Vec<ActionEvent>> {
    run_samples(&trace.samples, config)
}

/// Maps actions onto keyboard events. Leans hold an arrow key, crouch holds
/// `C`, jumps and pushes are instantaneous taps. Heading events have no key.
pub fn to_hid(events: &[ActionEvent]) -> Result<Vec<HidEvent>> {
    let mut out = Vec::with_capacity(events.len() * 2);
    let mut held_arrow: Option<HidKey> = None;
    let mut crouch_held = false;
    let mut last_ts = 0;
    for ev in events {
        let t = ev.timestamp_ms;
        if t < last_ts {
            return Err(Error::invalid(format!("event at {t} ms out of order")));
        }
        last_ts = t;
        let key_event = |key, action| HidEvent {
            timestamp_ms: t,
            key,
            action,
        };
        match ev.kind {
            ActionKind::LeanLeftOn | ActionKind::LeanRightOn => {
                if let Some(key) = held_arrow {
                    return Err(Error::Protocol(format!(
                        "{} at {t} ms while {} is held",
                        ev.kind,
                        key.as_str()
                    )));
                }
                let key = if ev.kind == ActionKind::LeanLeftOn {
                    HidKey::ArrowLeft
                } else {
                    HidKey::ArrowRight
                };
                held_arrow = Some(key);
                out.push(key_event(key, KeyAction::Down));
            }
            ActionKind::LeanOff => {
                let key = held_arrow.take().ok_or_else(|| {
                    Error::Protocol(format!("LeanOff at {t} ms with no lean active"))
                })?;
                out.push(key_event(key, KeyAction::Up));
            }
            ActionKind::Jump | ActionKind::Push => {
                let key = if ev.kind == ActionKind::Jump {
                    HidKey::Space
                } else {
                    HidKey::ArrowUp
                };
                out.push(key_event(key, KeyAction::Down));
                out.push(key_event(key, KeyAction::Up));
            }
            ActionKind::CrouchOn | ActionKind::CrouchOff => {
                let on = ev.kind == ActionKind::CrouchOn;
                if on == crouch_held {
                    return Err(Error::Protocol(format!("unbalanced {} at {t} ms", ev.kind)));
                }
                crouch_held = on;
                let action = if on { KeyAction::Down } else { KeyAction::Up };
                out.push(key_event(HidKey::KeyC, action));
            }
            ActionKind::HeadingLeft | ActionKind::HeadingRight => {}
        }
    }
    Ok(out)
}

pub fn write_events<W: Write>(events: &[ActionEvent], mut w: W) -> Result<()> {
    writeln!(w, "timestamp_ms,kind")?;
    for ev in events {
        writeln!(w, "{},{}", ev.timestamp_ms, ev.kind)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<ActionEvent>> {
    let mut events = Vec::new();
    let mut last_ts = 0;
    for (idx, line) in r.lines().enumerate() {
        let row = idx + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() || (row == 1 && line == "timestamp_ms,kind") {
            continue;
        }
        let (ts, kind) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(row, "expected `timestamp_ms,kind`"))?;
        let timestamp_ms: u64 = ts
            .trim()
            .parse()
            .map_err(|_| Error::parse(row, format!("bad timestamp {ts:?}")))?;
        let kind: ActionKind = kind.trim().parse().map_err(|e| Error::parse(row, e))?;
        if timestamp_ms < last_ts {
            return Err(Error::parse(row, "events out of order"));
        }
        last_ts = timestamp_ms;
        events.push(ActionEvent { timestamp_ms, kind });
    }
    Ok(events)
}

pub fn write_hid<W: Write>(events: &[HidEvent], mut w: W) -> Result<()> {
    writeln!(w, "timestamp_ms,key,action")?;
    for ev in events {
        writeln!(
            w,
            "{},{},{}",
            ev.timestamp_ms,
            ev.key.as_str(),
            ev.action.as_str()
        )?;
    }
    w.flush()?;
    Ok(())
}
