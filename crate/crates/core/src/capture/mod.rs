//! Captures: pcap files, load analysis and run reports.

pub mod analyze;
pub mod pcap;
pub mod report;

pub use analyze::{analyze, analyze_capture, AnalyzeError, CaptureSummary};
pub use pcap::{read_pcap, write_pcap, Capture, PcapError, Resolution};
pub use report::{format_seconds, report, Report, Verdict};
