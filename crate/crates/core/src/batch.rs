//! Evaluates many load jobs end to end: script generation, compilation,
//! simulation, pcap encoding and analysis of the decoded capture.
//!
//! With the `parallel` feature (on by default) [`evaluate_all`] spreads jobs
//! over rayon's thread pool; without it the same call runs sequentially.
//! Each job is independent and deterministic, so both paths return
//! identical results in input order.

use thiserror::Error;

use crate::capture::{analyze, pcap, AnalyzeError, CaptureSummary, PcapError};
use crate::engine::{run, Direction, Port, RunError, RunOptions};
use crate::load::LoadConfig;
use crate::nsl::{self, NslError};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("script: {0}")]
    Nsl(#[from] NslError),
    #[error("engine: {0}")]
    Run(#[from] RunError),
    #[error("pcap: {0}")]
    Pcap(#[from] PcapError),
    #[error("analysis: {0}")]
    Analyze(#[from] AnalyzeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub target: f64,
    pub tolerance: f64,
    pub summary: CaptureSummary,
    pub pcap_len: usize,
    pub checks_passed: bool,
}

impl JobOutcome {
    pub fn error(&self) -> f64 {
        (self.summary.achieved_load - self.target).abs()
    }

    pub fn within_tolerance(&self) -> bool {
        self.error() <= self.tolerance
    }
}

pub fn evaluate(config: &LoadConfig) -> Result<JobOutcome, BatchError> {
    let program = nsl::load(&nsl::generate_load_script(config))?;
    let result = run(&program, &RunOptions::scripting(config.rate), &[])?;
    let bytes = pcap::encode(&result.tx_events(Port::A))?;
    let events = pcap::decode(&bytes)?.events(Port::A, Direction::Tx);
    Ok(JobOutcome {
        target: config.load.fraction(),
        tolerance: config.load_tolerance(),
        summary: analyze(&events, config.rate)?,
        pcap_len: bytes.len(),
        checks_passed: result.report.all_checks_passed(),
    })
}

pub fn evaluate_sequential(configs: &[LoadConfig]) -> Vec<Result<JobOutcome, BatchError>> {
    configs.iter().map(evaluate).collect()
}

#[cfg(feature = "parallel")]
pub fn evaluate_parallel(configs: &[LoadConfig]) -> Vec<Result<JobOutcome, BatchError>> {
    use rayon::prelude::*;
    configs.par_iter().map(evaluate).collect()
}

pub fn evaluate_all(configs: &[LoadConfig]) -> Vec<Result<JobOutcome, BatchError>> {
    #[cfg(feature = "parallel")]
    {
        evaluate_parallel(configs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        evaluate_sequential(configs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{FrameSpec, MacAddress, ETHERTYPE_PROFINET_RT};
    use crate::load::{LineRate, Load};

    fn configs() -> Vec<LoadConfig> {
        [
            (0.1, 46, LineRate::Fast),
            (0.75, 500, LineRate::Gigabit),
            (1.0, 1500, LineRate::Fast),
        ]
        .into_iter()
        .map(|(l, payload, rate)| {
            let spec = FrameSpec::zeroed(
                MacAddress::BROADCAST,
                MacAddress([2, 0, 0, 0, 0, 1]),
                None,
                ETHERTYPE_PROFINET_RT,
                payload,
            )
            .unwrap();
            LoadConfig::new(Load::new(l).unwrap(), rate, 150, spec).unwrap()
        })
        .collect()
    }

    #[test]
    fn jobs_hit_their_load() {
        for outcome in evaluate_all(&configs()) {
            let o = outcome.unwrap();
            assert!(
                o.within_tolerance(),
                "{} vs {}",
                o.summary.achieved_load,
                o.target
            );
            assert!(o.checks_passed);
            assert_eq!(o.summary.frames, 150);
        }
    }

    #[test]
    fn paths_agree() {
        let c = configs();
        let seq: Vec<_> = evaluate_sequential(&c)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        let all: Vec<_> = evaluate_all(&c).into_iter().map(Result::unwrap).collect();
        assert_eq!(seq, all);
    }
}
