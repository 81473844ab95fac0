//! Reference implementations shared by the integration tests. These are
//! written as direct scans over the data and deliberately do not call into
//! the engine or simulator code they are compared against.

#![allow(dead_code)]

use std::path::PathBuf;

use boardsim::gesture::{ActionEvent, ActionKind, ThresholdConfig};
use boardsim::sensor::{
    add_noise, gen_jump_trace, gen_lean_trace, gen_push_cycle_trace_on, LeanDirection,
    SensorSample, SensorTrace, Source,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Events found by scanning each channel on its own, tagged with the index
/// of the sample that produced them, then merged by that index.
pub fn reference_events(samples: &[SensorSample], cfg: &ThresholdConfig) -> Vec<ActionEvent> {
    let mut tagged: Vec<(usize, u8, ActionEvent)> = Vec::new();
    let indexed = |src: Source| {
        samples
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.source == src)
            .map(|(i, s)| (i, s.timestamp_ms, s.value))
    };

    // Side ranger: -1 left, 0 neutral, +1 right.
    let h = cfg.tilt_hysteresis_mm;
    let mut side = 0i8;
    let mut since = 0u64;
    let mut turned = false;
    for (i, t, v) in indexed(Source::BoardSide) {
        let mut order = 0u8;
        let mut emit = |kind| {
            tagged.push((i, order, ActionEvent::new(t, kind)));
            order += 1;
        };
        if (side == -1 && v >= cfg.tilt_low_mm + h) || (side == 1 && v <= cfg.tilt_high_mm - h) {
            emit(ActionKind::LeanOff);
            side = 0;
        }
        if side == 0 && v < cfg.tilt_low_mm - h {
            emit(ActionKind::LeanLeftOn);
            side = -1;
            since = t;
            turned = false;
        } else if side == 0 && v > cfg.tilt_high_mm + h {
            emit(ActionKind::LeanRightOn);
            side = 1;
            since = t;
            turned = false;
        }
        if side != 0 && !turned && t - since >= cfg.heading_hold_ms {
            emit(if side < 0 {
                ActionKind::HeadingLeft
            } else {
                ActionKind::HeadingRight
            });
            turned = true;
        }
    }

    // Front ranger: one jump per excursion over rest + pitch.
    let front: Vec<(usize, u64, f64)> = indexed(Source::BoardFront).collect();
    if let Some(&(_, _, first)) = front.first() {
        let (rest, skip) = match cfg.pitch_rest_mm {
            Some(r) => (r, 0),
            None => (first, 1),
        };
        let thr = rest + cfg.jump_pitch_mm;
        let mut above = false;
        let mut last_jump: Option<u64> = None;
        for &(i, t, v) in &front[skip..] {
            if !above && v >= thr {
                above = true;
                if last_jump.is_none_or(|l| t - l >= cfg.debounce_ms) {
                    tagged.push((i, 0, ActionEvent::new(t, ActionKind::Jump)));
                    last_jump = Some(t);
                }
            } else if above && v < thr - h {
                above = false;
            }
        }
    }

    // Shoes: a push at every debounced rising crossing of the push angle.
    for src in [Source::LeftShoe, Source::RightShoe] {
        for (i, t) in reference_push_times(samples, src, cfg) {
            tagged.push((i, 0, ActionEvent::new(t, ActionKind::Push)));
        }
    }

    // Left shoe crouch.
    let mut low = false;
    for (i, t, v) in indexed(Source::LeftShoe) {
        if !low && v < cfg.crouch_angle_deg {
            low = true;
            tagged.push((i, 1, ActionEvent::new(t, ActionKind::CrouchOn)));
        } else if low && v >= cfg.crouch_angle_deg + cfg.angle_hysteresis_deg {
            low = false;
            tagged.push((i, 1, ActionEvent::new(t, ActionKind::CrouchOff)));
        }
    }

    tagged.sort_by_key(|(i, order, _)| (*i, *order));
    tagged.into_iter().map(|(_, _, e)| e).collect()
}

/// (sample index, timestamp) of each counted push on one shoe.
pub fn reference_push_times(
    samples: &[SensorSample],
    src: Source,
    cfg: &ThresholdConfig,
) -> Vec<(usize, u64)> {
    let mut out = Vec::new();
    let mut below = false;
    let mut last: Option<u64> = None;
    for (i, s) in samples.iter().enumerate().filter(|(_, s)| s.source == src) {
        if s.value < cfg.push_angle_deg {
            below = true;
        } else if below {
            below = false;
            if last.is_none_or(|l| s.timestamp_ms - l >= cfg.debounce_ms) {
                out.push((i, s.timestamp_ms));
                last = Some(s.timestamp_ms);
            }
        }
    }
    out
}

pub fn reference_push_count(samples: &[SensorSample], cfg: &ThresholdConfig) -> usize {
    [Source::LeftShoe, Source::RightShoe]
        .into_iter()
        .map(|src| reference_push_times(samples, src, cfg).len())
        .sum()
}

/// A multi-channel trace built from random lean, jump and push segments
/// with optional noise.
pub fn random_trace(seed: u64) -> SensorTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = 50.0;

    let mut side = gen_lean_trace(LeanDirection::Neutral, 400, 150.0, 10.0, rate).unwrap();
    for _ in 0..rng.random_range(1..5) {
        let dir = match rng.random_range(0..3) {
            0 => LeanDirection::Left,
            1 => LeanDirection::Right,
            _ => LeanDirection::Neutral,
        };
        let seg = gen_lean_trace(
            dir,
            rng.random_range(500..2500),
            rng.random_range(140.0..160.0),
            rng.random_range(10.0..110.0),
            rate,
        )
        .unwrap();
        side = side.then(&seg).unwrap();
    }

    let mut front = gen_jump_trace(200, 120.0, 0.0, rate).unwrap();
    for _ in 0..rng.random_range(1..4) {
        let seg = gen_jump_trace(
            rng.random_range(300..1500),
            120.0,
            rng.random_range(0.0..90.0),
            rate,
        )
        .unwrap();
        front = front.then(&seg).unwrap();
    }

    let right = gen_push_cycle_trace_on(
        Source::RightShoe,
        rng.random_range(0..6),
        rng.random_range(0.5..3.0),
        rng.random_range(150.0..170.0),
        rng.random_range(95.0..125.0),
        rate,
    )
    .unwrap();
    let left = gen_push_cycle_trace_on(
        Source::LeftShoe,
        rng.random_range(0..4),
        rng.random_range(0.5..2.0),
        rng.random_range(140.0..170.0),
        rng.random_range(70.0..125.0),
        rate,
    )
    .unwrap();

    let merged = SensorTrace::merge(&[side, front, left, right]).unwrap();
    let sigma = if rng.random_bool(0.5) {
        rng.random_range(0.0..3.0)
    } else {
        0.0
    };
    add_noise(&merged, sigma, rng.random()).unwrap()
}

/// Straight-line rider used as an oracle for the simulator: pushes, linear
/// friction, position, and whether any coin on the centre line is reached.
pub struct LineRider {
    pub t_ms: u64,
    pub speed: f64,
    pub s: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn reference_line_run(
    push_times_ms: &[u64],
    impulse: f64,
    friction: f64,
    dt_ms: u64,
    length: f64,
    coin_s: f64,
    pickup: f64,
    timeout_ms: u64,
) -> (Option<u64>, bool) {
    let dt = dt_ms as f64 / 1000.0;
    let mut r = LineRider {
        t_ms: 0,
        speed: 0.0,
        s: 0.0,
    };
    let mut next_push = 0;
    let mut got_coin = false;
    loop {
        while next_push < push_times_ms.len() && push_times_ms[next_push] <= r.t_ms {
            r.speed += impulse;
            next_push += 1;
        }
        if r.s >= length {
            return (Some(r.t_ms), got_coin);
        }
        if r.t_ms >= timeout_ms {
            return (None, got_coin);
        }
        r.t_ms += dt_ms;
        r.speed = f64::max(r.speed - friction * dt, 0.0);
        r.s += r.speed * dt;
        if (r.s - coin_s).abs() <= pickup {
            got_coin = true;
        }
    }
}

/// Random, timestamp-ordered action stream covering every event kind.
pub fn random_events(seed: u64, span_ms: u64) -> Vec<ActionEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..80);
    let mut events: Vec<ActionEvent> = (0..n)
        .map(|_| {
            let kind = ActionKind::ALL[rng.random_range(0..ActionKind::ALL.len())];
            ActionEvent::new(rng.random_range(0..span_ms), kind)
        })
        .collect();
    events.sort_by_key(|e| e.timestamp_ms);
    events
}

/// Random course with obstacles, coins and turns scattered along it.
pub fn random_course(seed: u64) -> boardsim::sim::CourseModel {
    use boardsim::sim::{CourseModel, Disc, Turn};
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let length: f64 = rng.random_range(10.0..80.0);
    let half: f64 = rng.random_range(0.5..3.0);
    let mut course = CourseModel::straight(length, half);
    for _ in 0..rng.random_range(0..8) {
        course.obstacles.push(Disc {
            s_m: rng.random_range(0.0..length),
            lateral_m: rng.random_range(-half..half),
            radius_m: rng.random_range(0.1..0.8),
        });
    }
    for _ in 0..rng.random_range(0..10) {
        course.coins.push(Disc {
            s_m: rng.random_range(0.0..length),
            lateral_m: rng.random_range(-half..half),
            radius_m: 0.0,
        });
    }
    for _ in 0..rng.random_range(0..4) {
        course.turns.push(Turn {
            s_m: rng.random_range(0.0..length),
            heading_change_deg: if rng.random_bool(0.5) { 90.0 } else { -90.0 },
        });
    }
    course
}
