//! Per-port frame analyser: pattern matching, OK/NOK counters and auto-stop.

use super::registers::{AnalyserRegs, MatchPattern, RxState};
use super::WireEvent;
use crate::frame::{MacAddress, TPID_8021Q};

/// Header fields pulled out of a captured frame without validating it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct HeaderFields<'a> {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub ethertype: u16,
    pub payload: &'a [u8],
}

impl<'a> HeaderFields<'a> {
    pub fn extract(bytes: &'a [u8]) -> Option<Self> {
        if bytes.len() < 18 {
            return None;
        }
        let mac = |at: usize| {
            let mut o = [0u8; 6];
            o.copy_from_slice(&bytes[at..at + 6]);
            MacAddress(o)
        };
        let mut at = 12;
        let mut ethertype = u16::from_be_bytes([bytes[at], bytes[at + 1]]);
        if ethertype == TPID_8021Q {
            at += 4;
            if bytes.len() < at + 2 + 4 {
                return None;
            }
            ethertype = u16::from_be_bytes([bytes[at], bytes[at + 1]]);
        }
        at += 2;
        let end = bytes.len().saturating_sub(4).max(at);
        Some(HeaderFields {
            dst: mac(0),
            src: mac(6),
            ethertype,
            payload: &bytes[at..end],
        })
    }
}

impl MatchPattern {
    pub fn matches(&self, bytes: &[u8]) -> bool {
        let Some(h) = HeaderFields::extract(bytes) else {
            return false;
        };
        self.dst.is_none_or(|d| d == h.dst)
            && self.src.is_none_or(|s| s == h.src)
            && self.ethertype.is_none_or(|e| e == h.ethertype)
            && self
                .payload_prefix
                .as_ref()
                .is_none_or(|p| h.payload.starts_with(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedOutcome {
    /// `None` when the analyser was not receiving.
    pub matched: Option<bool>,
    /// Error code to attach to the forwarded copy.
    pub error_tag: Option<u64>,
}

impl AnalyserRegs {
    /// Counts one received frame and applies the auto-stop limits.
    pub fn feed(&mut self, event: &WireEvent) -> FeedOutcome {
        if self.state != RxState::Receiving {
            return FeedOutcome {
                matched: None,
                error_tag: None,
            };
        }
        let matched = self.pattern.matches(&event.frame.bytes);
        if matched {
            self.recv_ok += 1;
        } else {
            self.recv_nok += 1;
        }
        let total_reached = self.frames_exp > 0 && self.recv_ok + self.recv_nok >= self.frames_exp;
        let ok_reached = self.frames_exp_ok > 0 && self.recv_ok >= self.frames_exp_ok;
        if total_reached || ok_reached {
            self.state = RxState::Hold;
        }
        FeedOutcome {
            matched: Some(matched),
            error_tag: (!matched && self.error_tagging).then_some(self.error_code),
        }
    }
}
