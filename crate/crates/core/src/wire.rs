//! Telemetry frames from the two shoe transmitters to the headset receiver.
//!
//! Frame layout, little-endian throughout:
//!
//! ```text
//! unit_id (1) | seq (2) | base_timestamp_ms (4) | sample_count (1)
//! | sample_count × [delta_ms (1) | value_centi (2)] | checksum (2)
//! ```
//!
//! The checksum is the 16-bit one's-complement sum of every preceding byte,
//! read as little-endian words (an odd trailing byte is padded with zero).
//! Each delta is relative to the previous sample in the frame; the first
//! sample has delta 0 and sits at the base timestamp.

use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sensor::{SensorSample, SensorTrace, Source};

pub const HEADER_LEN: usize = 8;
pub const CHECKSUM_LEN: usize = 2;
pub const SAMPLE_LEN: usize = 3;
pub const MIN_FRAME_LEN: usize = HEADER_LEN + CHECKSUM_LEN;
pub const MAX_SAMPLES: usize = 20;

/// Reordering the receiver resolves when unwrapping sequence numbers.
pub const SEQ_WINDOW: u16 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum UnitId {
    LeftShoe = 1,
    RightShoe = 2,
}

impl UnitId {
    pub fn source(self) -> Source {
        match self {
            UnitId::LeftShoe => Source::LeftShoe,
            UnitId::RightShoe => Source::RightShoe,
        }
    }

    pub fn for_source(source: Source) -> Option<UnitId> {
        match source {
            Source::LeftShoe => Some(UnitId::LeftShoe),
            Source::RightShoe => Some(UnitId::RightShoe),
            _ => None,
        }
    }
}

impl TryFrom<u8> for UnitId {
    type Error = Error;

    fn try_from(b: u8) -> Result<Self> {
        match b {
            1 => Ok(UnitId::LeftShoe),
            2 => Ok(UnitId::RightShoe),
            other => Err(Error::Protocol(format!("unknown unit id {other}"))),
        }
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.source().as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketSample {
    pub delta_ms: u8,
    pub value_centi: i16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub unit: UnitId,
    pub seq: u16,
    pub base_timestamp_ms: u32,
    pub samples: Vec<PacketSample>,
}

impl Packet {
    pub fn frame_len(&self) -> usize {
        MIN_FRAME_LEN + SAMPLE_LEN * self.samples.len()
    }
}

pub fn ones_complement_sum(bytes: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    for chunk in bytes.chunks(2) {
        let word = match *chunk {
            [lo, hi] => u16::from_le_bytes([lo, hi]),
            [lo] => lo as u16,
            _ => unreachable!(),
        };
        sum += word as u32;
        sum = (sum & 0xffff) + (sum >> 16);
    }
    sum as u16
}

pub fn encode(packet: &Packet) -> Result<Vec<u8>> {
    if packet.samples.len() > MAX_SAMPLES {
        return Err(Error::invalid(format!(
            "packet carries {} samples, limit is {MAX_SAMPLES}",
            packet.samples.len()
        )));
    }
    let mut buf = Vec::with_capacity(packet.frame_len());
    buf.push(packet.unit as u8);
    buf.extend_from_slice(&packet.seq.to_le_bytes());
    buf.extend_from_slice(&packet.base_timestamp_ms.to_le_bytes());
    buf.push(packet.samples.len() as u8);
    for s in &packet.samples {
        buf.push(s.delta_ms);
        buf.extend_from_slice(&s.value_centi.to_le_bytes());
    }
    let checksum = ones_complement_sum(&buf);
    buf.extend_from_slice(&checksum.to_le_bytes());
    Ok(buf)
}

pub fn decode(bytes: &[u8]) -> Result<Packet> {
    if bytes.len() < MIN_FRAME_LEN {
        return Err(Error::Truncated {
            needed: MIN_FRAME_LEN,
            got: bytes.len(),
        });
    }
    let count = bytes[7] as usize;
    if count > MAX_SAMPLES {
        return Err(Error::Corrupt(format!(
            "sample count {count} exceeds {MAX_SAMPLES}"
        )));
    }
    let needed = MIN_FRAME_LEN + SAMPLE_LEN * count;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            got: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after frame",
            bytes.len() - needed
        )));
    }
    let body = &bytes[..needed - CHECKSUM_LEN];
    let stored = u16::from_le_bytes([bytes[needed - 2], bytes[needed - 1]]);
    let computed = ones_complement_sum(body);
    if stored != computed {
        return Err(Error::Corrupt(format!(
            "checksum {stored:#06x} does not match {computed:#06x}"
        )));
    }
    let unit = UnitId::try_from(bytes[0])?;
    let seq = u16::from_le_bytes([bytes[1], bytes[2]]);
    let base_timestamp_ms = u32::from_le_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]);
    let samples = body[HEADER_LEN..]
        .chunks_exact(SAMPLE_LEN)
        .map(|c| PacketSample {
            delta_ms: c[0],
            value_centi: i16::from_le_bytes([c[1], c[2]]),
        })
        .collect();
    Ok(Packet {
        unit,
        seq,
        base_timestamp_ms,
        samples,
    })
}

pub fn to_centi(value: f64) -> Result<i16> {
    let centi = (value * 100.0).round();
    if !(i16::MIN as f64..=i16::MAX as f64).contains(&centi) {
        return Err(Error::invalid(format!(
            "value {value} does not fit the centi-unit range"
        )));
    }
    Ok(centi as i16)
}

/// Rounds a value to the wire resolution of 0.01 units.
pub fn quantize_centi(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

/// Splits one unit's samples into frames. A new frame starts when the
/// current one is full or the gap to the previous sample exceeds 255 ms.
/// Sequence numbers count up from `first_seq`, wrapping at 2^16.
pub fn packetize(samples: &[SensorSample], unit: UnitId, first_seq: u16) -> Result<Vec<Packet>> {
    let mut packets: Vec<Packet> = Vec::new();
    let mut seq = first_seq;
    let mut prev_ts: Option<u64> = None;
    for s in samples {
        if s.source != unit.source() {
            return Err(Error::invalid(format!(
                "{} sample cannot be sent by unit {unit}",
                s.source
            )));
        }
        let ts = u32::try_from(s.timestamp_ms)
            .map_err(|_| Error::invalid(format!("timestamp {} exceeds 32 bits", s.timestamp_ms)))?;
        let value_centi = to_centi(s.value)?;
        let delta = match (prev_ts, packets.last()) {
            (Some(prev), Some(p)) if p.samples.len() < MAX_SAMPLES => {
                let d = s.timestamp_ms.checked_sub(prev).ok_or_else(|| {
                    Error::invalid(format!("timestamp {} goes backwards", s.timestamp_ms))
                })?;
                u8::try_from(d).ok()
            }
            _ => None,
        };
        match delta {
            Some(delta_ms) => packets.last_mut().unwrap().samples.push(PacketSample {
                delta_ms,
                value_centi,
            }),
            None => {
                packets.push(Packet {
                    unit,
                    seq,
                    base_timestamp_ms: ts,
                    samples: vec![PacketSample {
                        delta_ms: 0,
                        value_centi,
                    }],
                });
                seq = seq.wrapping_add(1);
            }
        }
        prev_ts = Some(s.timestamp_ms);
    }
    Ok(packets)
}

/// Frames for the shoe channels of a trace, interleaved by base timestamp.
/// Board samples are left out; they never cross the radio link.
pub fn packetize_trace(trace: &SensorTrace) -> Result<Vec<Packet>> {
    let mut all = Vec::new();
    for unit in [UnitId::LeftShoe, UnitId::RightShoe] {
        let samples: Vec<SensorSample> = trace.channel(unit.source()).copied().collect();
        all.extend(packetize(&samples, unit, 0)?);
    }
    all.sort_by_key(|p| (p.base_timestamp_ms, p.unit));
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelOutcome {
    pub delivered: Vec<Packet>,
    /// Input indices of the packets the channel dropped, ascending.
    pub dropped: Vec<usize>,
}

/// Drops each packet independently with probability `loss_rate`, then
/// shuffles survivors within consecutive windows of `reorder_window`
/// packets. All randomness comes from a ChaCha8 stream seeded by `seed`.
pub fn simulate_channel_detailed(
    packets: &[Packet],
    loss_rate: f64,
    reorder_window: usize,
    seed: u64,
) -> Result<ChannelOutcome> {
    if !(0.0..=1.0).contains(&loss_rate) {
        return Err(Error::invalid(format!(
            "loss rate must lie in [0, 1], got {loss_rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delivered = Vec::with_capacity(packets.len());
    let mut dropped = Vec::new();
    for (i, p) in packets.iter().enumerate() {
        if rng.random::<f64>() < loss_rate {
            dropped.push(i);
        } else {
            delivered.push(p.clone());
        }
    }
    if reorder_window > 1 {
        for window in delivered.chunks_mut(reorder_window) {
            window.shuffle(&mut rng);
        }
    }
    Ok(ChannelOutcome { delivered, dropped })
}

pub fn simulate_channel(
    packets: &[Packet],
    loss_rate: f64,
    reorder_window: usize,
    seed: u64,
) -> Result<Vec<Packet>> {
    simulate_channel_detailed(packets, loss_rate, reorder_window, seed).map(|o| o.delivered)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnitLinkStats {
    pub received: usize,
    pub duplicates: usize,
    /// Sequence numbers missing between the first and last received frame.
    pub gaps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub left: UnitLinkStats,
    pub right: UnitLinkStats,
}

impl LinkStats {
    pub fn unit(&self, unit: UnitId) -> &UnitLinkStats {
        match unit {
            UnitId::LeftShoe => &self.left,
            UnitId::RightShoe => &self.right,
        }
    }

    pub fn total_gaps(&self) -> usize {
        self.left.gaps + self.right.gaps
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "unit,received,duplicates,gaps")?;
        for unit in [UnitId::LeftShoe, UnitId::RightShoe] {
            let s = self.unit(unit);
            writeln!(w, "{unit},{},{},{}", s.received, s.duplicates, s.gaps)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn reassemble_unit(unit: UnitId, packets: &[&Packet]) -> (Vec<SensorSample>, UnitLinkStats) {
    let mut stats = UnitLinkStats {
        received: packets.len(),
        ..Default::default()
    };
    // Unwrap sequence numbers against the highest one seen so far.
    let mut highest: Option<i64> = None;
    let mut keyed: Vec<(i64, &Packet)> = Vec::with_capacity(packets.len());
    for p in packets {
        let unwrapped = match highest {
            None => p.seq as i64,
            Some(h) => h + p.seq.wrapping_sub(h as u16) as i16 as i64,
        };
        highest = Some(highest.map_or(unwrapped, |h| h.max(unwrapped)));
        keyed.push((unwrapped, p));
    }
    keyed.sort_by_key(|(k, _)| *k);
    let before = keyed.len();
    keyed.dedup_by_key(|(k, _)| *k);
    stats.duplicates = before - keyed.len();
    if let (Some(first), Some(last)) = (keyed.first(), keyed.last()) {
        stats.gaps = (last.0 - first.0 + 1) as usize - keyed.len();
    }

    let source = unit.source();
    let mut samples = Vec::new();
    for (_, p) in keyed {
        let mut ts = p.base_timestamp_ms as u64;
        for s in &p.samples {
            ts += s.delta_ms as u64;
            samples.push(SensorSample {
                timestamp_ms: ts,
                source,
                value: s.value_centi as f64 / 100.0,
            });
        }
    }
    (samples, stats)
}

/// Rebuilds the shoe sample stream from whatever frames arrived.
pub fn reassemble(packets: &[Packet]) -> (Vec<SensorSample>, LinkStats) {
    let mut stats = LinkStats::default();
    let mut merged = Vec::new();
    for unit in [UnitId::LeftShoe, UnitId::RightShoe] {
        let mine: Vec<&Packet> = packets.iter().filter(|p| p.unit == unit).collect();
        let (samples, unit_stats) = reassemble_unit(unit, &mine);
        match unit {
            UnitId::LeftShoe => stats.left = unit_stats,
            UnitId::RightShoe => stats.right = unit_stats,
        }
        merged.extend(samples);
    }
    merged.sort_by_key(|s| (s.timestamp_ms, s.source));
    (merged, stats)
}

/// Capture file: frames concatenated, each preceded by its length as a
/// little-endian u16.
pub fn write_capture<W: Write>(frames: &[Vec<u8>], mut w: W) -> Result<()> {
    for f in frames {
        let len = u16::try_from(f.len())
            .map_err(|_| Error::invalid(format!("frame of {} bytes too long", f.len())))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_capture<R: Read>(mut r: R) -> Result<Vec<Vec<u8>>> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut frames = Vec::new();
    let mut rest = data.as_slice();
    while !rest.is_empty() {
        if rest.len() < 2 {
            return Err(Error::Truncated {
                needed: 2,
                got: rest.len(),
            });
        }
        let len = u16::from_le_bytes([rest[0], rest[1]]) as usize;
        rest = &rest[2..];
        if rest.len() < len {
            return Err(Error::Truncated {
                needed: len,
                got: rest.len(),
            });
        }
        frames.push(rest[..len].to_vec());
        rest = &rest[len..];
    }
    Ok(frames)
}
