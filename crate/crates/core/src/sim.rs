//! Fixed-timestep kinematics of the skating game.
//!
//! The course is a one-dimensional track measured by arc length `s`, with a
//! lateral offset bounded by roadside colliders. Pushes add speed, linear
//! friction removes it, leans slide the rider sideways, and jumps lift the
//! rider over obstacles. Turns are waypoints: a matching heading event within
//! the turn window keeps full speed, a miss halves it.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::{ActionEvent, ActionKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub s_m: f64,
    pub lateral_m: f64,
    pub radius_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub s_m: f64,
    /// Positive turns right, negative turns left.
    pub heading_change_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseModel {
    pub length_m: f64,
    pub half_width_m: f64,
    #[serde(default)]
    pub obstacles: Vec<Disc>,
    #[serde(default)]
    pub coins: Vec<Disc>,
    #[serde(default)]
    pub turns: Vec<Turn>,
}

impl CourseModel {
    pub fn straight(length_m: f64, half_width_m: f64) -> Self {
        CourseModel {
            length_m,
            half_width_m,
            obstacles: Vec::new(),
            coins: Vec::new(),
            turns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0 && self.half_width_m > 0.0) {
            return Err(Error::invalid(
                "course length and half width must be positive",
            ));
        }
        let on_track = |what: &str, i: usize, s: f64, lateral: f64| {
            if !(0.0..=self.length_m).contains(&s) || lateral.abs() > self.half_width_m {
                Err(Error::invalid(format!(
                    "{what} {i} at (s={s}, lateral={lateral}) lies off the course"
                )))
            } else {
                Ok(())
            }
        };
        for (i, d) in self.obstacles.iter().enumerate() {
            on_track("obstacle", i, d.s_m, d.lateral_m)?;
        }
        for (i, d) in self.coins.iter().enumerate() {
            on_track("coin", i, d.s_m, d.lateral_m)?;
        }
        for (i, t) in self.turns.iter().enumerate() {
            on_track("turn", i, t.s_m, 0.0)?;
        }
        Ok(())
    }
}

pub fn load_course(path: impl AsRef<Path>) -> Result<CourseModel> {
    let course: CourseModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    course.validate()?;
    Ok(course)
}

pub fn save_course(course: &CourseModel, path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, course)?;
    writeln!(f)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub push_impulse_mps: f64,
    pub friction_decel_mps2: f64,
    /// Push gain while crouching.
    pub crouch_speed_factor: f64,
    pub lean_lateral_speed_mps: f64,
    pub jump_up_speed_mps: f64,
    pub gravity_mps2: f64,
    pub coin_pickup_radius_m: f64,
    pub dt_ms: u64,
    /// Half-width of the window around a turn in which a heading event counts.
    pub turn_window_ms: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            push_impulse_mps: 1.5,
            friction_decel_mps2: 0.8,
            crouch_speed_factor: 1.3,
            lean_lateral_speed_mps: 1.0,
            jump_up_speed_mps: 3.0,
            gravity_mps2: 9.81,
            coin_pickup_radius_m: 0.5,
            dt_ms: 10,
            turn_window_ms: 2000,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("push_impulse_mps", self.push_impulse_mps),
            ("friction_decel_mps2", self.friction_decel_mps2),
            ("lean_lateral_speed_mps", self.lean_lateral_speed_mps),
            ("jump_up_speed_mps", self.jump_up_speed_mps),
            ("gravity_mps2", self.gravity_mps2),
            ("coin_pickup_radius_m", self.coin_pickup_radius_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.crouch_speed_factor >= 1.0) {
            return Err(Error::invalid("crouch_speed_factor must be >= 1"));
        }
        if self.dt_ms == 0 {
            return Err(Error::invalid("dt_ms must be positive"));
        }
        Ok(())
    }

    fn dt_s(&self) -> f64 {
        self.dt_ms as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lean {
    Left,
    #[default]
    None,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Heading {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiderState {
    pub s_m: f64,
    pub lateral_m: f64,
    pub speed_mps: f64,
    pub height_m: f64,
    pub vertical_speed_mps: f64,
    pub crouching: bool,
    pub lean: Lean,
    pub coins: u32,
    pub collisions: u32,
    pub pushes: u32,
    pub t_ms: u64,
    coin_taken: Vec<bool>,
    obstacle_contact: Vec<bool>,
    headings: Vec<(u64, Heading)>,
    pending_turns: Vec<(u64, Heading)>,
    turns_made: u32,
    turns_missed: u32,
}

impl RiderState {
    /// Rider at rest on the start line, centred.
    pub fn new(course: &CourseModel) -> Self {
        RiderState {
            s_m: 0.0,
            lateral_m: 0.0,
            speed_mps: 0.0,
            height_m: 0.0,
            vertical_speed_mps: 0.0,
            crouching: false,
            lean: Lean::None,
            coins: 0,
            collisions: 0,
            pushes: 0,
            t_ms: 0,
            coin_taken: vec![false; course.coins.len()],
            obstacle_contact: vec![false; course.obstacles.len()],
            headings: Vec::new(),
            pending_turns: Vec::new(),
            turns_made: 0,
            turns_missed: 0,
        }
    }

    pub fn airborne(&self) -> bool {
        self.height_m > 0.0 || self.vertical_speed_mps > 0.0
    }

    pub fn turns_made(&self) -> u32 {
        self.turns_made
    }

    pub fn turns_missed(&self) -> u32 {
        self.turns_missed
    }
}

fn apply_in_place(state: &mut RiderState, event: &ActionEvent, params: &SimParams) {
    match event.kind {
        ActionKind::Push => {
            let gain = if state.crouching {
                params.crouch_speed_factor
            } else {
                1.0
            };
            state.speed_mps += params.push_impulse_mps * gain;
            state.pushes += 1;
        }
        ActionKind::LeanLeftOn => state.lean = Lean::Left,
        ActionKind::LeanRightOn => state.lean = Lean::Right,
        ActionKind::LeanOff => state.lean = Lean::None,
        ActionKind::Jump => {
            if state.height_m == 0.0 {
                state.vertical_speed_mps = params.jump_up_speed_mps;
            }
        }
        ActionKind::CrouchOn => state.crouching = true,
        ActionKind::CrouchOff => state.crouching = false,
        ActionKind::HeadingLeft => state.headings.push((event.timestamp_ms, Heading::Left)),
        ActionKind::HeadingRight => state.headings.push((event.timestamp_ms, Heading::Right)),
    }
}

pub fn apply_action(state: &RiderState, event: &ActionEvent, params: &SimParams) -> RiderState {
    let mut next = state.clone();
    apply_in_place(&mut next, event, params);
    next
}

fn step_in_place(state: &mut RiderState, course: &CourseModel, params: &SimParams) {
    let dt = params.dt_s();
    state.t_ms += params.dt_ms;

    state.speed_mps = (state.speed_mps - params.friction_decel_mps2 * dt).max(0.0);
    let prev_s = state.s_m;
    state.s_m += state.speed_mps * dt;

    let lateral_dir = match state.lean {
        Lean::Left => -1.0,
        Lean::None => 0.0,
        Lean::Right => 1.0,
    };
    state.lateral_m = (state.lateral_m + lateral_dir * params.lean_lateral_speed_mps * dt)
        .clamp(-course.half_width_m, course.half_width_m);

    if state.airborne() {
        state.vertical_speed_mps -= params.gravity_mps2 * dt;
        state.height_m += state.vertical_speed_mps * dt;
        if state.height_m <= 0.0 {
            state.height_m = 0.0;
            state.vertical_speed_mps = 0.0;
        }
    }

    for (coin, taken) in course.coins.iter().zip(state.coin_taken.iter_mut()) {
        if *taken {
            continue;
        }
        let ds = state.s_m - coin.s_m;
        let dl = state.lateral_m - coin.lateral_m;
        let dist = (ds * ds + dl * dl + state.height_m * state.height_m).sqrt();
        if dist <= params.coin_pickup_radius_m {
            *taken = true;
            state.coins += 1;
        }
    }

    for (obs, contact) in course
        .obstacles
        .iter()
        .zip(state.obstacle_contact.iter_mut())
    {
        let ds = state.s_m - obs.s_m;
        let dl = state.lateral_m - obs.lateral_m;
        let touching = state.height_m == 0.0 && (ds * ds + dl * dl).sqrt() <= obs.radius_m;
        if touching && !*contact {
            state.collisions += 1;
            state.speed_mps *= 0.5;
        }
        *contact = touching;
    }

    for turn in &course.turns {
        if prev_s < turn.s_m && turn.s_m <= state.s_m && turn.heading_change_deg != 0.0 {
            let dir = if turn.heading_change_deg > 0.0 {
                Heading::Right
            } else {
                Heading::Left
            };
            state.pending_turns.push((state.t_ms, dir));
        }
    }
    resolve_turns(state, params);
}

fn resolve_turns(state: &mut RiderState, params: &SimParams) {
    let window = params.turn_window_ms;
    let now = state.t_ms;
    let mut still_pending = Vec::new();
    for (crossed, dir) in std::mem::take(&mut state.pending_turns) {
        let matched = state
            .headings
            .iter()
            .position(|&(t, h)| h == dir && t + window >= crossed && t <= crossed + window);
        if let Some(i) = matched {
            state.headings.remove(i);
            state.turns_made += 1;
        } else if now >= crossed + window {
            state.speed_mps *= 0.5;
            state.turns_missed += 1;
        } else {
            still_pending.push((crossed, dir));
        }
    }
    state.pending_turns = still_pending;
    // Headings too old to match any future crossing.
    state.headings.retain(|&(t, _)| t + 2 * window >= now);
}

pub fn step_physics(state: &RiderState, course: &CourseModel, params: &SimParams) -> RiderState {
    let mut next = state.clone();
    step_in_place(&mut next, course, params);
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeReport {
    /// `None` when the rider did not reach the end before the timeout.
    pub finish_time_ms: Option<u64>,
    pub coins: u32,
    pub collisions: u32,
    pub pushes: u32,
    pub distance_m: f64,
}

impl EpisodeReport {
    pub const CSV_HEADER: &'static str = "finish_time_ms,coins,collisions,pushes,distance_m";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(w, "{self}")?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for EpisodeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.finish_time_ms {
            Some(t) => write!(f, "{t}")?,
            None => f.write_str("DNF")?,
        }
        write!(
            f,
            ",{},{},{},{:.3}",
            self.coins, self.collisions, self.pushes, self.distance_m
        )
    }
}

/// Plays an event stream through the course. Events are applied at the
/// first step boundary at or after their timestamp.
pub fn run_episode(
    events: &[ActionEvent],
    course: &CourseModel,
    params: &SimParams,
    timeout_ms: u64,
) -> Result<EpisodeReport> {
    run_episode_traced(events, course, params, timeout_ms, |_| {})
}

/// [`run_episode`] with a callback observing the state after every step.
pub fn run_episode_traced(
    events: &[ActionEvent],
    course: &CourseModel,
    params: &SimParams,
    timeout_ms: u64,
    mut observe: impl FnMut(&RiderState),
) -> Result<EpisodeReport> {
    course.validate()?;
    params.validate()?;
    if events
        .windows(2)
        .any(|w| w[1].timestamp_ms < w[0].timestamp_ms)
    {
        return Err(Error::invalid("events must be ordered by timestamp"));
    }

    let mut state = RiderState::new(course);
    let mut pending = events.iter().peekable();
    let finish_time_ms = loop {
        while let Some(ev) = pending.next_if(|e| e.timestamp_ms <= state.t_ms) {
            apply_in_place(&mut state, ev, params);
        }
        if state.s_m >= course.length_m {
            break Some(state.t_ms);
        }
        if state.t_ms >= timeout_ms {
            break None;
        }
        step_in_place(&mut state, course, params);
        observe(&state);
    };
    Ok(EpisodeReport {
        finish_time_ms,
        coins: state.coins,
        collisions: state.collisions,
        pushes: state.pushes,
        distance_m: state.s_m,
    })
}
