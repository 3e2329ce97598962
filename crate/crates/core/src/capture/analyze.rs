//! Load and timing statistics over a list of captured frames.

use serde::Serialize;
use thiserror::Error;

use crate::engine::WireEvent;
use crate::frame::MIN_IFG;
use crate::load::{self, ticks_to_seconds, LineRate};

use super::pcap::{Capture, Resolution};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error("capture contains no frames")]
    Empty,
    #[error("frame {0} is timestamped before its predecessor")]
    Unsorted(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureSummary {
    pub rate_mbps: u32,
    pub frames: u64,
    /// First and last frame start, in seconds.
    pub t0: f64,
    pub t1: f64,
    pub t0_ticks: u64,
    pub t1_ticks: u64,
    /// Frame size when every frame has the same size.
    pub s: Option<u32>,
    pub total_bits: u64,
    /// Time on the wire of the last frame including its minimum gap.
    pub frame_time_last: f64,
    /// Σ(S_k + 12)·8 over the window from the first frame start to the end
    /// of the last frame.
    pub achieved_load: f64,
    /// Same bits over t1 − t0 only; needs a common size and two frames.
    pub achieved_load_start_to_start: Option<f64>,
    pub mean_interarrival: Option<f64>,
    /// Largest |interarrival − mean| in ticks.
    pub max_jitter_ticks: f64,
    pub fcs_errors: u64,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub interarrival_ticks: Vec<u64>,
    /// Seconds between consecutive frame starts.
    #[serde(skip)]
    pub interarrival: Vec<f64>,
    /// Interarrival minus the preceding frame's full-load slot time.
    #[serde(skip)]
    pub deviation: Vec<f64>,
    #[serde(skip)]
    pub deviation_ticks: Vec<i64>,
    /// Interarrival minus the mean interarrival, in ticks.
    #[serde(skip)]
    pub jitter_ticks: Vec<f64>,
}

fn slot_ticks(event: &WireEvent, rate: LineRate) -> u64 {
    rate.byte_ticks(u64::from(event.frame.s_on_wire + MIN_IFG))
}

pub fn analyze(events: &[WireEvent], rate: LineRate) -> Result<CaptureSummary, AnalyzeError> {
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(AnalyzeError::Empty),
    };
    if let Some(i) = events
        .windows(2)
        .position(|w| w[1].timestamp < w[0].timestamp)
    {
        return Err(AnalyzeError::Unsorted(i + 1));
    }
    let bps = rate.bits_per_second();
    let frames = events.len() as u64;
    let s = last.frame.s_on_wire;
    let uniform = events.iter().all(|e| e.frame.s_on_wire == s);
    let total_bits: u64 = events
        .iter()
        .map(|e| u64::from(e.frame.s_on_wire + MIN_IFG) * 8)
        .sum();
    let t0 = ticks_to_seconds(first.timestamp);
    let t1 = ticks_to_seconds(last.timestamp);
    let frame_time_last = ticks_to_seconds(slot_ticks(last, rate));
    let window_ticks = last.timestamp - first.timestamp + slot_ticks(last, rate);
    let achieved_load = total_bits as f64 / (ticks_to_seconds(window_ticks) * bps);

    let mut notes = Vec::new();
    let achieved_load_start_to_start = if frames < 2 {
        notes.push("single frame: start-to-start window is empty, windowed load reported".into());
        None
    } else if !uniform {
        notes.push("mixed frame sizes: start-to-start load not reported".into());
        None
    } else {
        load::achieved_load(s, frames, t0, t1, rate).ok()
    };

    let interarrival_ticks: Vec<u64> = events
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    let interarrival = interarrival_ticks
        .iter()
        .map(|&t| ticks_to_seconds(t))
        .collect();
    let deviation_ticks: Vec<i64> = events
        .windows(2)
        .zip(&interarrival_ticks)
        .map(|(w, &ia)| ia as i64 - slot_ticks(&w[0], rate) as i64)
        .collect();
    let deviation = deviation_ticks
        .iter()
        .map(|&d| d as f64 * ticks_to_seconds(1))
        .collect();
    let mean_ticks = (!interarrival_ticks.is_empty())
        .then(|| (last.timestamp - first.timestamp) as f64 / interarrival_ticks.len() as f64);
    let jitter_ticks: Vec<f64> = match mean_ticks {
        Some(m) => interarrival_ticks.iter().map(|&t| t as f64 - m).collect(),
        None => Vec::new(),
    };
    let max_jitter_ticks = jitter_ticks.iter().fold(0.0f64, |a, j| a.max(j.abs()));
    let fcs_errors = events.iter().filter(|e| !e.frame.fcs_valid()).count() as u64;

    Ok(CaptureSummary {
        rate_mbps: rate.mbps(),
        frames,
        t0,
        t1,
        t0_ticks: first.timestamp,
        t1_ticks: last.timestamp,
        s: uniform.then_some(s),
        total_bits,
        frame_time_last,
        achieved_load,
        achieved_load_start_to_start,
        mean_interarrival: mean_ticks.map(|m| m * ticks_to_seconds(1)),
        max_jitter_ticks,
        fcs_errors,
        notes,
        interarrival_ticks,
        interarrival,
        deviation,
        deviation_ticks,
        jitter_ticks,
    })
}

/// Analyzes a capture read from disk, noting timestamp resolution issues.
pub fn analyze_capture(
    capture: &Capture,
    events: &[WireEvent],
    rate: LineRate,
) -> Result<CaptureSummary, AnalyzeError> {
    let mut summary = analyze(events, rate)?;
    if capture.resolution == Resolution::Micro {
        summary
            .notes
            .push("microsecond-resolution capture: interarrival jitter is at least 1 µs".into());
    }
    if capture.quantized() {
        summary
            .notes
            .push("timestamps are not multiples of 8 ns and were truncated to ticks".into());
    }
    Ok(summary)
}
