use std::fmt;

use serde::Serialize;

use crate::engine::RunReport;
use crate::load::LoadConfig;

use super::analyze::CaptureSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportLine {
    pub verdict: Option<Verdict>,
    pub text: String,
}

impl fmt::Display for ReportLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            Some(Verdict::Pass) => write!(f, "PASS {}", self.text),
            Some(Verdict::Fail) => write!(f, "FAIL {}", self.text),
            None => f.write_str(&self.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Report {
    pub lines: Vec<ReportLine>,
}

impl Report {
    fn info(&mut self, text: impl Into<String>) {
        self.lines.push(ReportLine {
            verdict: None,
            text: text.into(),
        });
    }

    fn check(&mut self, pass: bool, text: impl Into<String>) {
        self.lines.push(ReportLine {
            verdict: Some(if pass { Verdict::Pass } else { Verdict::Fail }),
            text: text.into(),
        });
    }

    /// True when no line failed.
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.verdict != Some(Verdict::Fail))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportLine> {
        self.lines
            .iter()
            .filter(|l| l.verdict == Some(Verdict::Fail))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Seconds with five decimals, or microseconds below one millisecond.
pub fn format_seconds(seconds: f64) -> String {
    if seconds.abs() < 1e-3 {
        format!("{:.2} µs", seconds * 1e6)
    } else {
        format!("{seconds:.5} s")
    }
}

fn pct(fraction: f64) -> String {
    format!("{:.4} %", fraction * 100.0)
}

/// Builds the run report. Each argument contributes its own section; checks
/// that need both the configuration and a capture only appear when both are
/// given.
pub fn report(
    summary: Option<&CaptureSummary>,
    config: Option<&LoadConfig>,
    run: Option<&RunReport>,
) -> Report {
    let mut r = Report::default();
    // A LoadConfig is validated on construction, so its derived values exist.
    let planned = config.and_then(|c| {
        Some((
            c,
            c.frame_size().ok()?,
            c.load_gap().ok()?,
            c.duration().ok()?,
            c.frame_time().ok()?,
        ))
    });

    if let Some((c, s, gap, t, _)) = planned {
        r.info(format!("configured load: {}", pct(c.load.fraction())));
        r.info(format!("frame size S: {s} bytes"));
        r.info(format!("load gap I_L: {gap} byte-times"));
        r.info(format!("frames F: {}", c.frames));
        r.info(format!("line rate R: {}", c.rate));
        r.info(format!("expected duration T: {}", format_seconds(t)));
    }

    if let Some(sum) = summary {
        r.info(format!("captured frames: {}", sum.frames));
        r.info(format!("first frame t0: {}", format_seconds(sum.t0)));
        r.info(format!("last frame t1: {}", format_seconds(sum.t1)));
        r.info(format!(
            "achieved load (windowed): {}",
            pct(sum.achieved_load)
        ));
        if let Some(l) = sum.achieved_load_start_to_start {
            r.info(format!("achieved load (start-to-start): {}", pct(l)));
        }
        r.info(format!(
            "max interarrival jitter: {} ticks ({} ns)",
            sum.max_jitter_ticks,
            sum.max_jitter_ticks * crate::load::TICK_NS as f64
        ));
    }

    if let (Some(sum), Some((c, s, _, t, tf))) = (summary, planned) {
        r.check(
            sum.frames == c.frames,
            format!(
                "frame count: {} captured, {} configured",
                sum.frames, c.frames
            ),
        );
        r.check(
            sum.s == Some(s),
            match sum.s {
                Some(got) => format!("frame size: {got} bytes captured, {s} bytes configured"),
                None => format!("frame size: mixed sizes captured, {s} bytes configured"),
            },
        );
        let tolerance = c.load_tolerance();
        let configured = c.load.fraction();
        r.check(
            (sum.achieved_load - configured).abs() <= tolerance,
            format!(
                "load: {} achieved, {} configured, tolerance {}",
                pct(sum.achieved_load),
                pct(configured),
                pct(tolerance)
            ),
        );
        // The last frame starts one load slot (T_f / L) before the job ends.
        let expected_last = t - tf / configured;
        let observed = sum.t1 - sum.t0;
        r.check(
            (observed - expected_last).abs() <= tf,
            format!(
                "last frame: {} after t0, expected {} (T - T_f/L), tolerance {}",
                format_seconds(observed),
                format_seconds(expected_last),
                format_seconds(tf)
            ),
        );
    }

    if let Some(sum) = summary {
        r.check(
            sum.fcs_errors == 0,
            format!(
                "FCS validated: {} of {} frames valid",
                sum.frames - sum.fcs_errors,
                sum.frames
            ),
        );
    }

    if let Some(run) = run {
        for g in &run.generators {
            if g.gap_clamped {
                r.info(format!(
                    "generator {}: gap clamped to the 12 byte-time minimum",
                    g.port
                ));
            }
        }
        for check in &run.checks {
            r.check(
                check.passed,
                format!(
                    "OCBM_CHECK line {}: {} {} = {} (observed {})",
                    check.line, check.port, check.register, check.expected, check.observed
                ),
            );
        }
        r.info(format!(
            "monitor: {} forwarded, {} dropped",
            run.monitor_forwarded, run.monitor_drops
        ));
        for note in &run.notes {
            r.info(format!("note: {note}"));
        }
    }
    if let Some(sum) = summary {
        for note in &sum.notes {
            r.info(format!("note: {note}"));
        }
    }
    r
}
