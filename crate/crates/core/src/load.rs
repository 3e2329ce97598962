//! Load-gap, duration and achieved-load arithmetic, plus the tick-exact
//! gap schedule that realizes a fractional load gap on an 8 ns timeline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{frame_size, FrameError, FrameSpec, MIN_IFG};

/// Simulation tick in nanoseconds (125 MHz system clock).
pub const TICK_NS: u64 = 8;
pub const TICKS_PER_SECOND: u64 = 1_000_000_000 / TICK_NS;

/// Smallest on-wire frame size accepted by the load formulas.
pub const MIN_FRAME_SIZE: u32 = 64 + crate::frame::UNCAPTURED_LEN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("load {0} outside (0, 1]")]
    Load(f64),
    #[error("load percentage {0} outside (0, 100]")]
    Percent(f64),
    #[error("line rate {0} Mbit/s not supported (100 or 1000)")]
    Rate(u32),
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("frame size {0} below the {MIN_FRAME_SIZE}-byte minimum")]
    FrameSize(u32),
    #[error("measurement window t1 ({t1} s) must be after t0 ({t0} s)")]
    Window { t0: f64, t1: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Line rate of a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineRate {
    Fast,
    Gigabit,
}

impl LineRate {
    pub fn from_mbps(mbps: u32) -> Result<Self, LoadError> {
        match mbps {
            100 => Ok(LineRate::Fast),
            1000 => Ok(LineRate::Gigabit),
            other => Err(LoadError::Rate(other)),
        }
    }

    pub fn mbps(self) -> u32 {
        match self {
            LineRate::Fast => 100,
            LineRate::Gigabit => 1000,
        }
    }

    pub fn bits_per_second(self) -> f64 {
        f64::from(self.mbps()) * 1e6
    }

    /// Duration of one byte in 8 ns ticks: 10 at 100 Mbit/s, 1 at 1 Gbit/s.
    pub fn ticks_per_byte(self) -> u64 {
        match self {
            LineRate::Fast => 10,
            LineRate::Gigabit => 1,
        }
    }

    pub fn byte_ticks(self, bytes: u64) -> u64 {
        bytes * self.ticks_per_byte()
    }
}

impl fmt::Display for LineRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Mbit/s", self.mbps())
    }
}

/// Fraction of line rate in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Load(f64);

impl Load {
    pub const FULL: Load = Load(1.0);

    pub fn new(fraction: f64) -> Result<Self, LoadError> {
        if fraction > 0.0 && fraction <= 1.0 {
            Ok(Load(fraction))
        } else {
            Err(LoadError::Load(fraction))
        }
    }

    pub fn from_percent(pct: f64) -> Result<Self, LoadError> {
        if pct > 0.0 && pct <= 100.0 {
            Ok(Load(pct / 100.0))
        } else {
            Err(LoadError::Percent(pct))
        }
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    pub fn percent(self) -> f64 {
        self.0 * 100.0
    }
}

pub fn ticks_to_seconds(ticks: u64) -> f64 {
    ticks as f64 * TICK_NS as f64 * 1e-9
}

fn check_size(s: u32) -> Result<(), LoadError> {
    if s < MIN_FRAME_SIZE {
        Err(LoadError::FrameSize(s))
    } else {
        Ok(())
    }
}

/// Load gap `I_L` in byte-times: `12 + (12 + S)(1 - L)/L`.
pub fn load_gap(s: u32, load: f64) -> Result<f64, LoadError> {
    check_size(s)?;
    let l = Load::new(load)?.fraction();
    let slot = f64::from(MIN_IFG + s);
    Ok(f64::from(MIN_IFG) + slot * (1.0 - l) / l)
}

/// Time per frame slot at full load, `(S + 12)·8 / R`, in seconds.
pub fn frame_time(s: u32, rate: LineRate) -> Result<f64, LoadError> {
    check_size(s)?;
    Ok(f64::from(s + MIN_IFG) * 8.0 / rate.bits_per_second())
}

/// Time in seconds to send `frames` frames of size `s` at the given load.
pub fn duration(s: u32, frames: u64, load: f64, rate: LineRate) -> Result<f64, LoadError> {
    check_size(s)?;
    if frames == 0 {
        return Err(LoadError::NoFrames);
    }
    let l = Load::new(load)?.fraction();
    Ok(f64::from(s + MIN_IFG) * 8.0 * frames as f64 / (l * rate.bits_per_second()))
}

/// Achieved load as a fraction of line rate over the window `[t0, t1]`.
///
/// Values slightly above 1.0 are legitimate: a start-to-start window
/// excludes the final frame slot.
pub fn achieved_load(
    s: u32,
    frames: u64,
    t0: f64,
    t1: f64,
    rate: LineRate,
) -> Result<f64, LoadError> {
    check_size(s)?;
    if frames == 0 {
        return Err(LoadError::NoFrames);
    }
    if t1 <= t0 || !t1.is_finite() || !t0.is_finite() {
        return Err(LoadError::Window { t0, t1 });
    }
    Ok(f64::from(s + MIN_IFG) * 8.0 * frames as f64 / ((t1 - t0) * rate.bits_per_second()))
}

/// A complete load job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    pub load: Load,
    pub rate: LineRate,
    pub frames: u64,
    pub spec: FrameSpec,
}

impl LoadConfig {
    pub fn new(
        load: Load,
        rate: LineRate,
        frames: u64,
        spec: FrameSpec,
    ) -> Result<Self, LoadError> {
        if frames == 0 {
            return Err(LoadError::NoFrames);
        }
        frame_size(&spec)?;
        Ok(LoadConfig {
            load,
            rate,
            frames,
            spec,
        })
    }

    pub fn frame_size(&self) -> Result<u32, LoadError> {
        Ok(frame_size(&self.spec)?)
    }

    pub fn load_gap(&self) -> Result<f64, LoadError> {
        load_gap(self.frame_size()?, self.load.fraction())
    }

    pub fn duration(&self) -> Result<f64, LoadError> {
        duration(
            self.frame_size()?,
            self.frames,
            self.load.fraction(),
            self.rate,
        )
    }

    pub fn frame_time(&self) -> Result<f64, LoadError> {
        frame_time(self.frame_size()?, self.rate)
    }

    /// Acceptance tolerance on achieved load: `max(1/F, 0.1%)`.
    pub fn load_tolerance(&self) -> f64 {
        load_tolerance(self.frames)
    }
}

pub fn load_tolerance(frames: u64) -> f64 {
    (1.0 / frames as f64).max(0.001)
}

/// The quantized realization of a [`LoadConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPlan {
    pub s: u32,
    /// `I_L` in byte-times.
    pub gap_nominal: f64,
    /// Expected duration `T` in seconds.
    pub duration: f64,
    /// `I_L` expressed in ticks at the configured rate.
    pub nominal_ticks: f64,
    pub gap_ticks: Vec<u64>,
    /// Set when a quantized gap had to be raised to the 12-byte minimum.
    pub clamped: bool,
}

impl LoadPlan {
    /// Ticks from the first frame start to the end of the last slot.
    pub fn total_ticks(&self, rate: LineRate) -> u64 {
        let frame = rate.byte_ticks(u64::from(self.s));
        self.gap_ticks.iter().map(|g| g + frame).sum()
    }
}

/// Nominal gaps that sit within this distance of an integer tick count are
/// snapped to it, so that loads such as 50% give exact integer gaps.
const SNAP_EPSILON: f64 = 1e-9;

pub(crate) fn snap_ticks(nominal: f64) -> f64 {
    let r = nominal.round();
    if (nominal - r).abs() <= SNAP_EPSILON * nominal.max(1.0) {
        r
    } else {
        nominal
    }
}

/// Quantized gap sequence with its clamp flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapSequence {
    pub ticks: Vec<u64>,
    pub clamped: bool,
}

/// Error-carry quantization of a real-valued gap into integer ticks.
///
/// Each gap is `floor(nominal + credit)` and the remainder is carried into
/// the next gap. The credit is recomputed from the running total so it does
/// not drift over long runs. Gaps below `min_ticks` are raised to it.
pub struct ErrorCarry {
    nominal: f64,
    min_ticks: u64,
    emitted: u64,
    index: u64,
    clamped: bool,
}

impl ErrorCarry {
    pub fn new(nominal_ticks: f64, min_ticks: u64) -> Self {
        ErrorCarry {
            nominal: snap_ticks(nominal_ticks),
            min_ticks,
            emitted: 0,
            index: 0,
            clamped: false,
        }
    }

    pub fn nominal(&self) -> f64 {
        self.nominal
    }

    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn next_gap(&mut self) -> u64 {
        self.index += 1;
        let target = (self.nominal * self.index as f64).floor() as u64;
        let mut gap = target.saturating_sub(self.emitted);
        if gap < self.min_ticks {
            gap = self.min_ticks;
            self.clamped = true;
        }
        self.emitted += gap;
        gap
    }
}

pub fn quantize_gaps(nominal_ticks: f64, min_ticks: u64, count: u64) -> GapSequence {
    let mut carry = ErrorCarry::new(nominal_ticks, min_ticks);
    let ticks = (0..count).map(|_| carry.next_gap()).collect();
    GapSequence {
        ticks,
        clamped: carry.clamped(),
    }
}

pub fn gap_schedule(config: &LoadConfig) -> Result<LoadPlan, LoadError> {
    let s = config.frame_size()?;
    let gap_nominal = config.load_gap()?;
    let duration = config.duration()?;
    let nominal_ticks = gap_nominal * config.rate.ticks_per_byte() as f64;
    let min_ticks = config.rate.byte_ticks(u64::from(MIN_IFG));
    let seq = quantize_gaps(nominal_ticks, min_ticks, config.frames);
    Ok(LoadPlan {
        s,
        gap_nominal,
        duration,
        nominal_ticks: snap_ticks(nominal_ticks),
        gap_ticks: seq.ticks,
        clamped: seq.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{MacAddress, ETHERTYPE_PROFINET_RT};
    use proptest::prelude::*;

    fn spec(payload: usize) -> FrameSpec {
        FrameSpec::zeroed(
            MacAddress::BROADCAST,
            MacAddress([2, 0, 0, 0, 0, 1]),
            None,
            ETHERTYPE_PROFINET_RT,
            payload,
        )
        .unwrap()
    }

    fn config(load: f64, payload: usize, frames: u64, rate: LineRate) -> LoadConfig {
        LoadConfig::new(Load::new(load).unwrap(), rate, frames, spec(payload)).unwrap()
    }

    #[test]
    fn load_gap_reference_values() {
        assert_eq!(load_gap(1526, 1.0).unwrap(), 12.0);
        assert_eq!(load_gap(1526, 0.5).unwrap(), 1550.0);
        assert_eq!(load_gap(72, 0.25).unwrap(), 264.0);
    }

    #[test]
    fn load_gap_rejects_zero_load() {
        assert_eq!(load_gap(1526, 0.0), Err(LoadError::Load(0.0)));
        assert!(load_gap(1526, -0.1).is_err());
        assert!(load_gap(1526, 1.01).is_err());
        assert_eq!(load_gap(60, 0.5), Err(LoadError::FrameSize(60)));
    }

    #[test]
    fn duration_reference_values() {
        let t50 = duration(1526, 31702, 0.5, LineRate::Fast).unwrap();
        assert!((t50 - 7.8012).abs() < 1e-4, "{t50}");
        let t100 = duration(1526, 33510, 1.0, LineRate::Fast).unwrap();
        assert!((t100 - 4.12307).abs() < 1e-5, "{t100}");
        assert_eq!(
            duration(1526, 1, 1.0, LineRate::Fast).unwrap(),
            frame_time(1526, LineRate::Fast).unwrap()
        );
    }

    #[test]
    fn frame_time_reference_values() {
        assert_eq!(frame_time(1526, LineRate::Fast).unwrap(), 123.04e-6);
        assert_eq!(frame_time(1526, LineRate::Gigabit).unwrap(), 12.304e-6);
        assert_eq!(frame_time(72, LineRate::Fast).unwrap(), 6.72e-6);
    }

    #[test]
    fn achieved_load_reference_values() {
        let osc = achieved_load(1526, 624, 0.0, 0.076653, LineRate::Fast).unwrap();
        assert!((osc - 1.0016).abs() < 1e-4, "{osc}");
        let half = achieved_load(1526, 31702, 0.0, 7.801, LineRate::Fast).unwrap();
        assert!((half - 0.5).abs() < 1e-3, "{half}");
        assert!(achieved_load(1526, 10, 1.0, 1.0, LineRate::Fast).is_err());
        assert!(achieved_load(1526, 0, 0.0, 1.0, LineRate::Fast).is_err());
    }

    #[test]
    fn schedule_full_load_gigabit_is_exact() {
        let plan = gap_schedule(&config(1.0, 1500, 100, LineRate::Gigabit)).unwrap();
        assert!(plan.gap_ticks.iter().all(|&g| g == 12));
        assert!(!plan.clamped);
    }

    #[test]
    fn schedule_half_load_fast_is_exact() {
        let plan = gap_schedule(&config(0.5, 1500, 1000, LineRate::Fast)).unwrap();
        assert_eq!(plan.nominal_ticks, 15500.0);
        assert!(plan.gap_ticks.iter().all(|&g| g == 15500));
        // Slots sum to T exactly.
        let total = plan.total_ticks(LineRate::Fast);
        let t = duration(1526, 1000, 0.5, LineRate::Fast).unwrap();
        assert_eq!(total, (t * TICKS_PER_SECOND as f64).round() as u64);
    }

    #[test]
    fn schedule_carries_fractional_gap() {
        // 72-byte frames at 1 Gbit/s, 45% load: I_L = 12 + 84·(0.55/0.45) ≈ 114.67 ticks.
        let plan = gap_schedule(&config(0.45, 46, 9, LineRate::Gigabit)).unwrap();
        let nominal = 12.0 + 84.0 * (0.55 / 0.45);
        assert!((plan.nominal_ticks - nominal).abs() < 1e-9);
        let floor = nominal.floor() as u64;
        assert!(plan.gap_ticks.iter().all(|&g| g == floor || g == floor + 1));
        let sum: u64 = plan.gap_ticks.iter().sum();
        assert!((sum as f64 - 9.0 * nominal).abs() < 1.0);
    }

    #[test]
    fn carry_clamps_below_minimum() {
        let seq = quantize_gaps(5.0, 12, 3);
        assert_eq!(seq.ticks, vec![12, 12, 12]);
        assert!(seq.clamped);
    }

    fn arb_config() -> impl Strategy<Value = LoadConfig> {
        (
            0.01f64..=1.0,
            46usize..=1500,
            1u64..3000,
            prop_oneof![Just(LineRate::Fast), Just(LineRate::Gigabit)],
        )
            .prop_map(|(l, p, f, r)| config(l, p, f, r))
    }

    proptest! {
        #[test]
        fn duration_identity(cfg in arb_config()) {
            let s = cfg.frame_size().unwrap();
            let t = cfg.duration().unwrap();
            let lhs = t * cfg.load.fraction() * cfg.rate.bits_per_second();
            let rhs = f64::from(s + 12) * 8.0 * cfg.frames as f64;
            prop_assert!((lhs - rhs).abs() <= rhs * 1e-12);
        }

        #[test]
        fn achieved_inverts_duration(cfg in arb_config()) {
            let s = cfg.frame_size().unwrap();
            let t = cfg.duration().unwrap();
            let l = achieved_load(s, cfg.frames, 0.0, t, cfg.rate).unwrap();
            prop_assert!((l - cfg.load.fraction()).abs() <= 1e-12);
        }

        #[test]
        fn gap_monotonicity(s in 72u32..=1530, l in 0.01f64..0.99, dl in 0.001f64..0.01) {
            prop_assert_eq!(load_gap(s, 1.0).unwrap(), 12.0);
            prop_assert!(load_gap(s, l).unwrap() > load_gap(s, l + dl).unwrap());
            prop_assert!(load_gap(s + 1, l).unwrap() > load_gap(s, l).unwrap());
        }

        #[test]
        fn schedule_mean_converges(cfg in arb_config()) {
            let plan = gap_schedule(&cfg).unwrap();
            let f = cfg.frames as f64;
            let sum: u64 = plan.gap_ticks.iter().sum();
            prop_assert!((sum as f64 - f * plan.nominal_ticks).abs() < 1.0);
            prop_assert!((sum as f64 / f - plan.nominal_ticks).abs() < 1.0 / f);
            let min = cfg.rate.byte_ticks(12);
            prop_assert!(plan.gap_ticks.iter().all(|&g| g >= min));
        }
    }
}
