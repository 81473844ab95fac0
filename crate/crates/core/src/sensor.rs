//! Synthetic sensor traces standing in for the board's ultrasonic rangers and
//! the shoe-mounted gyration sensors.
//!
//! Traces use integer millisecond timestamps. A trace may interleave several
//! sources; each source is sampled at the trace rate.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0;

/// Share of a lean trace spent ramping in, and again ramping out.
pub const LEAN_RAMP_FRACTION: f64 = 0.2;

/// Half-width of the jump excursion as a share of the trace duration.
pub const JUMP_HALF_WIDTH_FRACTION: f64 = 0.2;

pub const BOARD_RANGE_MM: (f64, f64) = (0.0, 2000.0);
pub const SHOE_RANGE_DEG: (f64, f64) = (0.0, 180.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    BoardSide,
    BoardFront,
    LeftShoe,
    RightShoe,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::BoardSide,
        Source::BoardFront,
        Source::LeftShoe,
        Source::RightShoe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::BoardSide => "board_side",
            Source::BoardFront => "board_front",
            Source::LeftShoe => "left_shoe",
            Source::RightShoe => "right_shoe",
        }
    }

    /// Valid value range: millimetres for board rangers, degrees for shoes.
    pub fn valid_range(self) -> (f64, f64) {
        match self {
            Source::BoardSide | Source::BoardFront => BOARD_RANGE_MM,
            Source::LeftShoe | Source::RightShoe => SHOE_RANGE_DEG,
        }
    }

    pub fn is_shoe(self) -> bool {
        matches!(self, Source::LeftShoe | Source::RightShoe)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| format!("unknown source {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub timestamp_ms: u64,
    pub source: Source,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeanDirection {
    Left,
    Right,
    Neutral,
}

impl FromStr for LeanDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(LeanDirection::Left),
            "right" => Ok(LeanDirection::Right),
            "neutral" => Ok(LeanDirection::Neutral),
            other => Err(format!("unknown lean direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    pub sample_rate_hz: f64,
    pub samples: Vec<SensorSample>,
    pub label: String,
}

impl SensorTrace {
    pub fn new(sample_rate_hz: f64, label: impl Into<String>) -> Self {
        SensorTrace {
            sample_rate_hz,
            samples: Vec::new(),
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz
    }

    /// Samples of one source, in trace order.
    pub fn channel(&self, source: Source) -> impl Iterator<Item = &SensorSample> + '_ {
        self.samples.iter().filter(move |s| s.source == source)
    }

    /// Covered time: the longest per-source sample count times the period.
    pub fn duration_ms(&self) -> u64 {
        let mut counts = [0usize; 4];
        for s in &self.samples {
            counts[s.source.index()] += 1;
        }
        let n = counts.into_iter().max().unwrap_or(0);
        (n as f64 * self.period_ms()).round() as u64
    }

    /// Appends `other` after this trace, shifting its timestamps by this
    /// trace's duration. Rates must match.
    pub fn then(&self, other: &SensorTrace) -> Result<SensorTrace> {
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::invalid(format!(
                "cannot concatenate traces at {} Hz and {} Hz",
                self.sample_rate_hz, other.sample_rate_hz
            )));
        }
        let offset = self.duration_ms();
        let mut out = self.clone();
        out.label = join_labels(&self.label, &other.label);
        out.samples
            .extend(other.samples.iter().map(|s| SensorSample {
                timestamp_ms: s.timestamp_ms + offset,
                ..*s
            }));
        Ok(out)
    }

    /// Interleaves traces recorded over the same window into one stream,
    /// ordered by timestamp then source.
    pub fn merge(traces: &[SensorTrace]) -> Result<SensorTrace> {
        let Some(first) = traces.first() else {
            return Err(Error::invalid("nothing to merge"));
        };
        if traces
            .iter()
            .any(|t| t.sample_rate_hz != first.sample_rate_hz)
        {
            return Err(Error::invalid("merged traces must share a sample rate"));
        }
        let mut samples: Vec<SensorSample> = traces
            .iter()
            .flat_map(|t| t.samples.iter().copied())
            .collect();
        samples.sort_by_key(|s| (s.timestamp_ms, s.source));
        let label = traces
            .iter()
            .map(|t| t.label.as_str())
            .fold(String::new(), |acc, l| join_labels(&acc, l));
        Ok(SensorTrace {
            sample_rate_hz: first.sample_rate_hz,
            samples,
            label,
        })
    }

    /// Range and ordering checks: every value inside its source's range,
    /// timestamps strictly increasing per source and non-decreasing overall.
    pub fn check_ordering(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        let mut last_by_source: [Option<u64>; 4] = [None; 4];
        let mut last_any = 0u64;
        for (i, s) in self.samples.iter().enumerate() {
            let (lo, hi) = s.source.valid_range();
            if !(lo..=hi).contains(&s.value) {
                return Err(Error::invalid(format!(
                    "sample {i}: {} value {} outside [{lo}, {hi}]",
                    s.source, s.value
                )));
            }
            if s.timestamp_ms < last_any {
                return Err(Error::invalid(format!(
                    "sample {i}: timestamp {} precedes {last_any}",
                    s.timestamp_ms
                )));
            }
            let slot = &mut last_by_source[s.source.index()];
            if let Some(prev) = *slot {
                if s.timestamp_ms <= prev {
                    return Err(Error::invalid(format!(
                        "sample {i}: {} timestamp {} not after {prev}",
                        s.source, s.timestamp_ms
                    )));
                }
            }
            *slot = Some(s.timestamp_ms);
            last_any = s.timestamp_ms;
        }
        Ok(())
    }

    /// Full invariant check, including per-source spacing of one period
    /// (±1 ms).
    pub fn validate(&self) -> Result<()> {
        self.check_ordering()?;
        let period = self.period_ms();
        let mut last_by_source: [Option<u64>; 4] = [None; 4];
        for (i, s) in self.samples.iter().enumerate() {
            let slot = &mut last_by_source[s.source.index()];
            if let Some(prev) = *slot {
                let gap = (s.timestamp_ms - prev) as f64;
                if (gap - period).abs() > 1.0 {
                    return Err(Error::invalid(format!(
                        "sample {i}: {} spacing {gap} ms, expected {period} ms",
                        s.source
                    )));
                }
            }
            *slot = Some(s.timestamp_ms);
        }
        Ok(())
    }
}

fn join_labels(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a}+{b}"),
    }
}

fn check_rate_and_duration(duration_ms: f64, sample_rate_hz: f64) -> Result<()> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(duration_ms > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration_ms}"
        )));
    }
    Ok(())
}

fn sample_count(duration_ms: f64, sample_rate_hz: f64) -> usize {
    (duration_ms * sample_rate_hz / 1000.0).round() as usize
}

fn sample_time(i: usize, sample_rate_hz: f64) -> u64 {
    (i as f64 * 1000.0 / sample_rate_hz).round() as u64
}

fn check_in_range(source: Source, what: &str, value: f64) -> Result<()> {
    let (lo, hi) = source.valid_range();
    if !(lo..=hi).contains(&value) {
        return Err(Error::invalid(format!(
            "{what} {value} outside {source} range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn build(
    source: Source,
    n: usize,
    sample_rate_hz: f64,
    label: String,
    value_at: impl Fn(usize, u64) -> f64,
) -> SensorTrace {
    let samples = (0..n)
        .map(|i| {
            let t = sample_time(i, sample_rate_hz);
            SensorSample {
                timestamp_ms: t,
                source,
                value: value_at(i, t),
            }
        })
        .collect();
    SensorTrace {
        sample_rate_hz,
        samples,
        label,
    }
}

/// Side-ranger trace for a lean: ramps from rest to the plateau over the
/// first fifth of the samples, holds, and ramps back over the last fifth.
/// A left lean brings the board closer to the ranger (smaller distance).
pub fn gen_lean_trace(
    direction: LeanDirection,
    duration_ms: u64,
    rest_distance_mm: f64,
    lean_delta_mm: f64,
    sample_rate_hz: f64,
) -> Result<SensorTrace> {
    check_rate_and_duration(duration_ms as f64, sample_rate_hz)?;
    if !(lean_delta_mm > 0.0) {
        return Err(Error::invalid(format!(
            "lean delta must be positive, got {lean_delta_mm}"
        )));
    }
    if rest_distance_mm - lean_delta_mm < 0.0 {
        return Err(Error::invalid("rest distance minus lean delta is negative"));
    }
    let sign = match direction {
        LeanDirection::Left => -1.0,
        LeanDirection::Right => 1.0,
        LeanDirection::Neutral => 0.0,
    };
    check_in_range(Source::BoardSide, "rest distance", rest_distance_mm)?;
    check_in_range(
        Source::BoardSide,
        "plateau",
        rest_distance_mm + sign * lean_delta_mm,
    )?;

    let n = sample_count(duration_ms as f64, sample_rate_hz);
    let ramp = ((n as f64 * LEAN_RAMP_FRACTION).round() as usize).max(1);
    let label = format!("lean-{direction:?}").to_lowercase();
    Ok(build(
        Source::BoardSide,
        n,
        sample_rate_hz,
        label,
        |i, _| {
            let frac = if i < ramp {
                i as f64 / ramp as f64
            } else if i + ramp >= n {
                (n - 1 - i) as f64 / ramp as f64
            } else {
                1.0
            };
            rest_distance_mm + sign * lean_delta_mm * frac
        },
    ))
}

/// Front-ranger trace with one triangular upward excursion centred on the
/// middle of the trace.
pub fn gen_jump_trace(
    duration_ms: u64,
    rest_distance_mm: f64,
    pitch_delta_mm: f64,
    sample_rate_hz: f64,
) -> Result<SensorTrace> {
    check_rate_and_duration(duration_ms as f64, sample_rate_hz)?;
    if !(pitch_delta_mm >= 0.0) {
        return Err(Error::invalid(format!(
            "pitch delta must be non-negative, got {pitch_delta_mm}"
        )));
    }
    check_in_range(Source::BoardFront, "rest distance", rest_distance_mm)?;
    check_in_range(
        Source::BoardFront,
        "peak",
        rest_distance_mm + pitch_delta_mm,
    )?;

    let n = sample_count(duration_ms as f64, sample_rate_hz);
    let center = duration_ms as f64 / 2.0;
    let half_width = duration_ms as f64 * JUMP_HALF_WIDTH_FRACTION;
    Ok(build(
        Source::BoardFront,
        n,
        sample_rate_hz,
        "jump".into(),
        |_, t| {
            let shape = (1.0 - (t as f64 - center).abs() / half_width).max(0.0);
            rest_distance_mm + pitch_delta_mm * shape
        },
    ))
}

/// Right-shoe angle trace of `cycles` raised-cosine dips from the rest angle
/// down to `min_angle_deg`, one per `1 / cadence_hz` seconds. Zero cycles
/// yields an empty trace.
pub fn gen_push_cycle_trace(
    cycles: u32,
    cadence_hz: f64,
    rest_angle_deg: f64,
    min_angle_deg: f64,
    sample_rate_hz: f64,
) -> Result<SensorTrace> {
    if !(cadence_hz.is_finite() && cadence_hz > 0.0) {
        return Err(Error::invalid(format!(
            "cadence must be positive, got {cadence_hz}"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(0.0 <= min_angle_deg && min_angle_deg < rest_angle_deg && rest_angle_deg <= 180.0) {
        return Err(Error::invalid(format!(
            "need 0 <= min ({min_angle_deg}) < rest ({rest_angle_deg}) <= 180"
        )));
    }
    let period_ms = 1000.0 / cadence_hz;
    let n = sample_count(cycles as f64 * period_ms, sample_rate_hz);
    let depth = rest_angle_deg - min_angle_deg;
    Ok(build(
        Source::RightShoe,
        n,
        sample_rate_hz,
        format!("push-x{cycles}"),
        |_, t| {
            let phase = std::f64::consts::TAU * t as f64 / period_ms;
            rest_angle_deg - depth * (1.0 - phase.cos()) / 2.0
        },
    ))
}

/// Same as [`gen_push_cycle_trace`] but on any shoe channel.
pub fn gen_push_cycle_trace_on(
    source: Source,
    cycles: u32,
    cadence_hz: f64,
    rest_angle_deg: f64,
    min_angle_deg: f64,
    sample_rate_hz: f64,
) -> Result<SensorTrace> {
    if !source.is_shoe() {
        return Err(Error::invalid(format!("{source} is not a shoe channel")));
    }
    let mut trace = gen_push_cycle_trace(
        cycles,
        cadence_hz,
        rest_angle_deg,
        min_angle_deg,
        sample_rate_hz,
    )?;
    for s in &mut trace.samples {
        s.source = source;
    }
    Ok(trace)
}

/// Perturbs every value with N(0, sigma²) noise from a ChaCha8 stream seeded
/// by `seed`, then clamps to the source's range.
pub fn add_noise(trace: &SensorTrace, sigma: f64, seed: u64) -> Result<SensorTrace> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise sigma must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(trace.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = trace.clone();
    for s in &mut out.samples {
        let (lo, hi) = s.source.valid_range();
        s.value = (s.value + normal.sample(&mut rng)).clamp(lo, hi);
    }
    Ok(out)
}

pub fn write_trace<W: Write>(trace: &SensorTrace, mut w: W) -> Result<()> {
    writeln!(w, "# rate_hz={}", trace.sample_rate_hz)?;
    if !trace.label.is_empty() {
        writeln!(w, "# label={}", trace.label.replace('\n', " "))?;
    }
    for s in &trace.samples {
        writeln!(w, "{},{},{}", s.timestamp_ms, s.source, s.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<SensorTrace> {
    let mut lines = r.lines().enumerate();
    let rate = match lines.next() {
        Some((_, line)) => {
            let line = line?;
            let raw = line
                .trim_end()
                .strip_prefix("# rate_hz=")
                .ok_or_else(|| Error::parse(1, "expected header `# rate_hz=<real>`"))?;
            let rate: f64 = raw
                .parse()
                .map_err(|_| Error::parse(1, format!("bad sample rate {raw:?}")))?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::parse(
                    1,
                    format!("sample rate must be positive, got {rate}"),
                ));
            }
            rate
        }
        None => return Err(Error::parse(1, "missing header")),
    };

    let mut trace = SensorTrace::new(rate, "");
    let mut last_by_source: [Option<u64>; 4] = [None; 4];
    let mut last_any = 0u64;
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(label) = comment.trim_start().strip_prefix("label=") {
                trace.label = label.to_string();
            }
            continue;
        }
        let mut fields = line.split(',');
        let (Some(ts), Some(src), Some(val), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(row, "expected `timestamp_ms,source,value`"));
        };
        let timestamp_ms: u64 = ts
            .trim()
            .parse()
            .map_err(|_| Error::parse(row, format!("bad timestamp {ts:?}")))?;
        let source: Source = src.trim().parse().map_err(|e| Error::parse(row, e))?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::parse(row, format!("bad value {val:?}")))?;
        let (lo, hi) = source.valid_range();
        if !(lo..=hi).contains(&value) {
            return Err(Error::parse(
                row,
                format!("{source} value {value} outside [{lo}, {hi}]"),
            ));
        }
        if timestamp_ms < last_any {
            return Err(Error::parse(
                row,
                format!("timestamp {timestamp_ms} goes backwards (previous {last_any})"),
            ));
        }
        if let Some(prev) = last_by_source[source.index()] {
            if timestamp_ms <= prev {
                return Err(Error::parse(
                    row,
                    format!("{source} timestamp {timestamp_ms} not after {prev}"),
                ));
            }
        }
        last_by_source[source.index()] = Some(timestamp_ms);
        last_any = timestamp_ms;
        trace.samples.push(SensorSample {
            timestamp_ms,
            source,
            value,
        });
    }
    Ok(trace)
}

pub fn save_trace(trace: &SensorTrace, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_trace(trace, BufWriter::new(file))
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<SensorTrace> {
    let file = File::open(path)?;
    read_trace(BufReader::new(file))
}
