//! Deterministic software load generator for industrial Ethernet testing.
//!
//! The crate plans traffic at an exact fraction of line rate, realizes it on
//! a virtual four-port tester with an 8 ns clock, and audits the result from
//! pcap captures:
//!
//! - [`frame`]: frame layout, on-wire size and FCS serialization
//! - [`load`]: load gap, duration and the tick-exact gap schedule
//! - [`nsl`]: the register scripting language (lexer, parser, compiler)
//! - [`engine`]: the discrete-event virtual device
//! - [`capture`]: pcap I/O, load analysis and run reports
//! - [`batch`]: data-parallel evaluation of many load jobs

pub mod batch;
pub mod capture;
pub mod engine;
pub mod frame;
pub mod load;
pub mod nsl;

pub use frame::{FrameSpec, MacAddress, VlanTag, WireBytes};
pub use load::{LineRate, Load, LoadConfig, LoadPlan};
