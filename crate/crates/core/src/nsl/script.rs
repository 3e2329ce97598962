//! Emits a complete three-phase script that realizes a [`LoadConfig`] on
//! generator port A.

use std::fmt::Write;

use super::ast::Value;
use super::printer::format_value;
use crate::frame::TPID_8021Q;
use crate::load::{LoadConfig, TICKS_PER_SECOND};

/// Smallest polling interval of the execution loop: 1 ms.
const MIN_POLL_TICKS: u64 = TICKS_PER_SECOND / 1000;
const MAX_POLLS: u64 = 1000;

fn hdr_after_mac(config: &LoadConfig) -> u64 {
    let ethertype = u64::from(config.spec.ethertype);
    match config.spec.vlan {
        Some(tag) => u64::from(TPID_8021Q) << 32 | u64::from(tag.tci) << 16 | ethertype,
        None => ethertype,
    }
}

/// Poll interval and iteration count covering the whole job plus one
/// spare poll.
pub(crate) fn poll_plan(total_ticks: u64) -> (u64, u64) {
    let chunk = MIN_POLL_TICKS.max(total_ticks.div_ceil(MAX_POLLS));
    (chunk, total_ticks.div_ceil(chunk) + 1)
}

pub fn generate_load_script(config: &LoadConfig) -> String {
    // LoadConfig::new validated the frame, so these cannot fail.
    let s = config.frame_size().expect("validated frame");
    let gap = config.load_gap().expect("validated frame");
    let duration = config.duration().expect("validated frame");
    let total_ticks = (duration * TICKS_PER_SECOND as f64).ceil() as u64;
    let (chunk, polls) = poll_plan(total_ticks);
    let spec = &config.spec;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "REPORT \"{:.4}% load, S={s}, {} frames at {}\"",
        config.load.percent(),
        config.frames,
        config.rate
    );
    let _ = writeln!(
        out,
        "REF \"I_L={} byte-times, T={duration:.5} s\"",
        format_value(&Value::Decimal(gap))
    );
    let _ = writeln!(out, "DEFINE FRAMES {}", config.frames);
    out.push('\n');
    let _ = writeln!(out, "OCBM_WRITE A DST_MAC {}", spec.dst);
    let _ = writeln!(out, "OCBM_WRITE A SRC_MAC {}", spec.src);
    let _ = writeln!(
        out,
        "OCBM_WRITE A HDR_AFTER_MAC {}",
        format_value(&Value::hex(hdr_after_mac(config) as i64))
    );
    let _ = writeln!(out, "OCBM_WRITE A PAYLOAD_SIZE {}", spec.payload.len());
    let _ = writeln!(
        out,
        "OCBM_WRITE A INTERFRAME_GAP {}",
        format_value(&Value::Decimal(gap))
    );
    let _ = writeln!(out, "OCBM_WRITE A NUMBER_OF_FRAMES FRAMES");
    let _ = writeln!(out, "OCBM_WRITE A START_DELAY 0");
    let _ = writeln!(out, "OCBM_WRITE A TR_CTRL 1");
    let _ = writeln!(out, "ETH_TXRX_START");
    let _ = writeln!(out, "LOOP {polls}");
    let _ = writeln!(out, "  WAIT_FOR {chunk} TICKS");
    let _ = writeln!(out, "  EXITONCHECK A TRANSMITTER_STATE DONE");
    let _ = writeln!(out, "END LOOP");
    let _ = writeln!(out, "ETH_TXRX_STOP");
    let _ = writeln!(out, "OCBM_CHECK A TRANSMITTER_STATE DONE");
    let _ = writeln!(out, "OCBM_CHECK A FRAMES_SENT FRAMES");
    out
}
