//! Port L monitor: accept filter plus a four-frame buffer drained at line rate.

use std::collections::VecDeque;

use super::registers::FilterRule;
use super::{Direction, Port, WireEvent};
use crate::frame::MIN_IFG;
use crate::load::LineRate;

pub const MONITOR_BUFFER_FRAMES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Accept rules; an empty list accepts every frame.
    pub filters: Vec<FilterRule>,
    pub port_tagging: bool,
    pub buffer_capacity: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            filters: Vec::new(),
            port_tagging: false,
            buffer_capacity: MONITOR_BUFFER_FRAMES,
        }
    }
}

impl FilterRule {
    pub fn accepts(&self, bytes: &[u8]) -> bool {
        let Some(fields) = super::analyser::HeaderFields::extract(bytes) else {
            return false;
        };
        self.dst.is_none_or(|d| d == fields.dst)
            && self.src.is_none_or(|s| s == fields.src)
            && self.ethertype.is_none_or(|e| e == fields.ethertype)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorOutcome {
    pub forwarded: Option<WireEvent>,
    /// Total drops so far.
    pub drops: u64,
}

/// Monitor state. A frame occupies a buffer slot from arrival until its
/// copy has left port L; port L sends one frame per `(S + 12)` byte-times.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    rate: LineRate,
    /// Departure-complete tick of each buffered frame, oldest first.
    slots: VecDeque<u64>,
    l_free_at: u64,
    forwarded: u64,
    drops: u64,
    max_occupancy: usize,
}

impl Monitor {
    pub fn new(config: MonitorConfig, rate: LineRate) -> Self {
        Monitor {
            config,
            rate,
            slots: VecDeque::new(),
            l_free_at: 0,
            forwarded: 0,
            drops: 0,
            max_occupancy: 0,
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Replaces filters and tagging; buffered frames and counters are kept.
    pub fn reconfigure(&mut self, config: MonitorConfig) {
        self.config = config;
    }

    pub fn drops(&self) -> u64 {
        self.drops
    }

    pub fn forwarded(&self) -> u64 {
        self.forwarded
    }

    /// Buffer occupancy after draining everything finished by `now`.
    pub fn occupancy_at(&mut self, now: u64) -> usize {
        self.drain(now);
        self.slots.len()
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    fn drain(&mut self, now: u64) {
        while self.slots.front().is_some_and(|&end| end <= now) {
            self.slots.pop_front();
        }
    }

    fn accepts(&self, bytes: &[u8]) -> bool {
        self.config.filters.is_empty() || self.config.filters.iter().any(|r| r.accepts(bytes))
    }

    /// Offers one observed frame to the monitor. Events must be fed in
    /// non-decreasing timestamp order.
    pub fn feed(&mut self, event: &WireEvent) -> MonitorOutcome {
        if !self.accepts(&event.frame.bytes) {
            return MonitorOutcome {
                forwarded: None,
                drops: self.drops,
            };
        }
        let now = event.timestamp;
        self.drain(now);
        if self.slots.len() >= self.config.buffer_capacity {
            self.drops += 1;
            return MonitorOutcome {
                forwarded: None,
                drops: self.drops,
            };
        }
        let start = now.max(self.l_free_at);
        let slot = self
            .rate
            .byte_ticks(u64::from(event.frame.s_on_wire + MIN_IFG));
        self.l_free_at = start + slot;
        self.slots.push_back(self.l_free_at);
        self.max_occupancy = self.max_occupancy.max(self.slots.len());
        self.forwarded += 1;
        let forwarded = WireEvent {
            timestamp: start,
            port: Port::L,
            direction: Direction::Tx,
            frame: event.frame.clone(),
            port_tag: self.config.port_tagging.then_some(event.port),
            error_code: event.error_code,
        };
        MonitorOutcome {
            forwarded: Some(forwarded),
            drops: self.drops,
        }
    }
}
