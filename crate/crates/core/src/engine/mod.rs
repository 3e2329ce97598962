//! Deterministic discrete-event model of the four-port tester.
//!
//! Time is an integer count of 8 ns ticks. A [`RegisterProgram`] drives the
//! control plane (register writes, start/stop, delays, checks); the data
//! plane is a priority queue of frame events ordered by
//! `(timestamp, port, sequence)`, so equal-time events always merge in
//! port order A < B < C < D < L.

pub mod analyser;
pub mod monitor;
pub mod registers;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{self, FrameSpec, VlanTag, WireBytes, MAX_PAYLOAD, MIN_IFG, TPID_8021Q};
use crate::load::{ticks_to_seconds, ErrorCarry, LineRate};

pub use monitor::{Monitor, MonitorConfig, MonitorOutcome, MONITOR_BUFFER_FRAMES};
pub use registers::{
    Block, FilterRule, MatchPattern, Port, RegValue, Register, RegisterFile, RxState, TxState,
    ValueKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Tx,
    Rx,
}

/// One frame occurrence on the virtual wire. The timestamp marks the start
/// of the frame on the port, in ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireEvent {
    pub timestamp: u64,
    pub port: Port,
    pub direction: Direction,
    pub frame: Arc<WireBytes>,
    pub port_tag: Option<Port>,
    pub error_code: Option<u64>,
}

impl WireEvent {
    pub fn new(timestamp: u64, port: Port, direction: Direction, frame: WireBytes) -> Self {
        WireEvent {
            timestamp,
            port,
            direction,
            frame: Arc::new(frame),
            port_tag: None,
            error_code: None,
        }
    }

    pub fn seconds(&self) -> f64 {
        ticks_to_seconds(self.timestamp)
    }

    pub fn without_tags(&self) -> Self {
        WireEvent {
            port_tag: None,
            error_code: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeviceMode {
    /// All port traffic is copied to port L.
    Transparent,
    /// Traffic received on A leaves on B (and C/D likewise), both directions.
    Switching,
    /// Generators and analysers run under a register program.
    Scripting,
}

impl FromStr for DeviceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transparent" => Ok(DeviceMode::Transparent),
            "switching" => Ok(DeviceMode::Switching),
            "scripting" => Ok(DeviceMode::Scripting),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// One compiled control-plane operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Write {
        port: Port,
        register: Register,
        value: RegValue,
        line: u32,
    },
    Start {
        line: u32,
    },
    Delay {
        ticks: u64,
        line: u32,
    },
    /// Jump to `target` when the register equals `expected`.
    ExitIf {
        port: Port,
        register: Register,
        expected: RegValue,
        target: usize,
        line: u32,
    },
    Check {
        port: Port,
        register: Register,
        expected: RegValue,
        line: u32,
    },
    Stop {
        line: u32,
    },
}

/// A flat, timed list of register operations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegisterProgram {
    pub description: Vec<String>,
    pub refs: Vec<String>,
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub mode: DeviceMode,
    pub rate: LineRate,
    /// Cables between ports (scripting mode): a frame sent on one end is
    /// received on the other at the same tick.
    pub links: Vec<(Port, Port)>,
}

impl RunOptions {
    pub fn scripting(rate: LineRate) -> Self {
        RunOptions {
            mode: DeviceMode::Scripting,
            rate,
            links: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("line {line}: write to {register} on port {port} while it is transmitting")]
    WriteWhileTransmitting {
        port: Port,
        register: Register,
        line: u32,
    },
    #[error("line {line}: register {register} is read-only")]
    ReadOnly { register: Register, line: u32 },
    #[error("line {line}: register {register} does not exist on port {port}")]
    NoSuchRegister {
        port: Port,
        register: Register,
        line: u32,
    },
    #[error("external frame offered on port {0}, which has no receiver")]
    ExternalPort(Port),
    #[error("generator on port {0} enabled outside scripting mode")]
    GeneratorOutsideScripting(Port),
    #[error("generator on port {port}: {reason}")]
    BadFrame { port: Port, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub line: u32,
    pub port: Port,
    pub register: Register,
    pub expected: RegValue,
    pub observed: RegValue,
    pub passed: bool,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: {} {} expected {} observed {}",
            self.line, self.port, self.register, self.expected, self.observed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSummary {
    pub port: Port,
    pub frame_size: u32,
    pub frames_requested: u64,
    pub frames_sent: u64,
    pub first_tx: Option<u64>,
    pub last_tx: Option<u64>,
    /// End of the last transmitted frame.
    pub done_at: Option<u64>,
    /// End of the last frame plus its trailing gap.
    pub schedule_end: Option<u64>,
    pub nominal_gap_ticks: f64,
    pub gap_clamped: bool,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub checks: Vec<CheckOutcome>,
    pub generators: Vec<GeneratorSummary>,
    pub monitor_forwarded: u64,
    pub monitor_drops: u64,
    pub monitor_max_occupancy: usize,
    pub notes: Vec<String>,
    /// Control-plane clock when the program finished.
    pub control_end: u64,
    pub exits_taken: u64,
}

impl RunReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub events: Vec<WireEvent>,
    pub registers: RegisterFile,
    pub report: RunReport,
}

impl RunResult {
    pub fn tx_events(&self, port: Port) -> Vec<WireEvent> {
        self.events
            .iter()
            .filter(|e| e.port == port && e.direction == Direction::Tx)
            .cloned()
            .collect()
    }

    pub fn generator(&self, port: Port) -> Option<&GeneratorSummary> {
        self.report.generators.iter().find(|g| g.port == port)
    }
}

#[derive(Debug)]
enum PendingKind {
    Generate(usize),
    Receive(WireEvent),
    Bridge(WireEvent),
}

#[derive(Debug)]
struct Pending {
    ts: u64,
    port: Port,
    seq: u64,
    kind: PendingKind,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.ts, other.port, other.seq).cmp(&(self.ts, self.port, self.seq))
    }
}

struct Generator {
    port: Port,
    spec: FrameSpec,
    template: Arc<WireBytes>,
    counter: bool,
    frame_ticks: u64,
    carry: ErrorCarry,
    requested: u64,
    sent: u64,
    next_tx: u64,
    first_tx: Option<u64>,
    last_tx: Option<u64>,
    done_at: Option<u64>,
    schedule_end: Option<u64>,
    stopped: bool,
    clamped_register: bool,
}

impl Generator {
    fn frame(&self) -> Arc<WireBytes> {
        if !self.counter {
            return Arc::clone(&self.template);
        }
        let mut spec = self.spec.clone();
        spec.payload[..4].copy_from_slice(&(self.sent as u32).to_be_bytes());
        Arc::new(frame::serialize(&spec).expect("template validated at start"))
    }

    fn summary(&self) -> GeneratorSummary {
        GeneratorSummary {
            port: self.port,
            frame_size: self.template.s_on_wire,
            frames_requested: self.requested,
            frames_sent: self.sent,
            first_tx: self.first_tx,
            last_tx: self.last_tx,
            done_at: self.done_at,
            schedule_end: self.schedule_end,
            nominal_gap_ticks: self.carry.nominal(),
            gap_clamped: self.clamped_register || self.carry.clamped(),
            stopped_early: self.stopped && self.sent < self.requested,
        }
    }
}

/// Builds the generator's frame template from its content registers.
pub fn generator_frame(regs: &registers::GeneratorRegs) -> Result<FrameSpec, String> {
    let hdr = regs.hdr_after_mac;
    let (vlan, ethertype) = if hdr <= 0xffff {
        (None, hdr as u16)
    } else if hdr >> 32 == u64::from(TPID_8021Q) {
        (
            Some(VlanTag {
                tci: ((hdr >> 16) & 0xffff) as u16,
            }),
            (hdr & 0xffff) as u16,
        )
    } else {
        return Err(format!(
            "HDR_AFTER_MAC {hdr:#x} is neither an Ethertype nor an 802.1Q tag"
        ));
    };
    if regs.payload_size as usize > MAX_PAYLOAD {
        return Err(format!(
            "PAYLOAD_SIZE {} exceeds {MAX_PAYLOAD}",
            regs.payload_size
        ));
    }
    FrameSpec::zeroed(
        regs.dst,
        regs.src,
        vlan,
        ethertype,
        regs.payload_size as usize,
    )
    .map_err(|e| e.to_string())
}

struct Sim<'a> {
    opts: &'a RunOptions,
    regs: RegisterFile,
    heap: BinaryHeap<Pending>,
    seq: u64,
    gens: [Option<Generator>; 4],
    monitor: Monitor,
    out: Vec<(WireEvent, u64)>,
    port_free: [u64; 4],
    running: bool,
    notes: Vec<String>,
}

impl<'a> Sim<'a> {
    fn new(opts: &'a RunOptions) -> Self {
        Sim {
            opts,
            regs: RegisterFile::default(),
            heap: BinaryHeap::new(),
            seq: 0,
            gens: [None, None, None, None],
            monitor: Monitor::new(MonitorConfig::default(), opts.rate),
            out: Vec::new(),
            port_free: [0; 4],
            running: false,
            notes: Vec::new(),
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn push(&mut self, ts: u64, port: Port, kind: PendingKind) {
        let seq = self.next_seq();
        self.heap.push(Pending {
            ts,
            port,
            seq,
            kind,
        });
    }

    fn record(&mut self, event: WireEvent) {
        let seq = self.next_seq();
        self.out.push((event, seq));
    }

    fn monitor_enabled(&self) -> bool {
        self.opts.mode == DeviceMode::Transparent || self.regs.monitor.control
    }

    fn observe(&mut self, event: &WireEvent) {
        if !self.monitor_enabled() {
            return;
        }
        if let Some(copy) = self.monitor.feed(event).forwarded {
            self.record(copy);
        }
        self.regs.monitor.forwarded = self.monitor.forwarded();
        self.regs.monitor.drops = self.monitor.drops();
    }

    fn deliver_links(&mut self, event: &WireEvent) {
        if self.opts.mode != DeviceMode::Scripting {
            return;
        }
        let peers: Vec<Port> = self
            .opts
            .links
            .iter()
            .filter_map(|&(a, b)| {
                if a == event.port {
                    Some(b)
                } else if b == event.port {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        for peer in peers {
            let rx = WireEvent {
                timestamp: event.timestamp,
                port: peer,
                direction: Direction::Rx,
                frame: Arc::clone(&event.frame),
                port_tag: None,
                error_code: None,
            };
            self.push(event.timestamp, peer, PendingKind::Receive(rx));
        }
    }

    fn process(&mut self, p: Pending) {
        match p.kind {
            PendingKind::Generate(i) => self.generate(i),
            PendingKind::Receive(ev) => self.receive(ev),
            PendingKind::Bridge(ev) => {
                self.record(ev.clone());
                self.deliver_links(&ev);
            }
        }
    }

    fn generate(&mut self, i: usize) {
        let Some(g) = self.gens[i].as_mut() else {
            return;
        };
        if g.stopped {
            return;
        }
        let ts = g.next_tx;
        let frame = g.frame();
        g.sent += 1;
        g.first_tx.get_or_insert(ts);
        g.last_tx = Some(ts);
        let frame_end = ts + g.frame_ticks;
        let gap = g.carry.next_gap();
        let more = g.sent < g.requested;
        if more {
            g.next_tx = frame_end + gap;
        } else {
            g.done_at = Some(frame_end);
            g.schedule_end = Some(frame_end + gap);
        }
        let port = g.port;
        let next = g.next_tx;
        self.regs.ports[i].generator.frames_sent += 1;
        if more {
            self.push(next, port, PendingKind::Generate(i));
        }
        let event = WireEvent {
            timestamp: ts,
            port,
            direction: Direction::Tx,
            frame,
            port_tag: None,
            error_code: None,
        };
        self.record(event.clone());
        self.observe(&event);
        self.deliver_links(&event);
    }

    fn receive(&mut self, mut event: WireEvent) {
        let port = event.port;
        if let Some(regs) = self.regs.port_mut(port) {
            let outcome = regs.analyser.feed(&event);
            if let Some(code) = outcome.error_tag {
                event.error_code = Some(code);
            }
        }
        self.record(event.clone());
        self.observe(&event);
        if self.opts.mode == DeviceMode::Switching {
            if let Some(peer) = port.bridge_peer() {
                let idx = peer.data_index().expect("bridge peers are data ports");
                let start = event.timestamp.max(self.port_free[idx]);
                self.port_free[idx] = start
                    + self
                        .opts
                        .rate
                        .byte_ticks(u64::from(event.frame.s_on_wire + MIN_IFG));
                let out = WireEvent {
                    timestamp: start,
                    port: peer,
                    direction: Direction::Tx,
                    frame: Arc::clone(&event.frame),
                    port_tag: None,
                    error_code: event.error_code,
                };
                self.push(start, peer, PendingKind::Bridge(out));
            }
        }
    }

    /// Processes every data-plane event strictly before `t`.
    fn advance_to(&mut self, t: u64) {
        while self.heap.peek().is_some_and(|p| p.ts < t) {
            let p = self.heap.pop().expect("peeked");
            self.process(p);
        }
        for (i, g) in self.gens.iter().enumerate() {
            if let Some(g) = g {
                if g.done_at.is_some_and(|d| d <= t) {
                    self.regs.ports[i].generator.state = TxState::Done;
                }
            }
        }
    }

    fn start_generator(&mut self, port: Port, now: u64) -> Result<(), RunError> {
        let i = port.data_index().expect("generator on data port");
        if self.opts.mode != DeviceMode::Scripting {
            return Err(RunError::GeneratorOutsideScripting(port));
        }
        let regs = &self.regs.ports[i].generator;
        let spec = generator_frame(regs).map_err(|reason| RunError::BadFrame { port, reason })?;
        let template = Arc::new(frame::serialize(&spec).map_err(|e| RunError::BadFrame {
            port,
            reason: e.to_string(),
        })?);
        let rate = self.opts.rate;
        let clamped_register = regs.interframe_gap < f64::from(MIN_IFG);
        if clamped_register {
            self.notes.push(format!(
                "port {port}: INTERFRAME_GAP {} below {MIN_IFG} byte-times, clamped",
                regs.interframe_gap
            ));
        }
        let gap_bytes = regs.interframe_gap.max(f64::from(MIN_IFG));
        let carry = ErrorCarry::new(
            gap_bytes * rate.ticks_per_byte() as f64,
            rate.byte_ticks(u64::from(MIN_IFG)),
        );
        let start = now + regs.start_delay;
        let requested = regs.number_of_frames;
        let g = Generator {
            port,
            frame_ticks: rate.byte_ticks(u64::from(template.s_on_wire)),
            spec,
            template,
            counter: regs.payload_counter,
            carry,
            requested,
            sent: 0,
            next_tx: start,
            first_tx: None,
            last_tx: None,
            done_at: (requested == 0).then_some(now),
            schedule_end: (requested == 0).then_some(now),
            stopped: false,
            clamped_register,
        };
        self.regs.ports[i].generator.frames_sent = 0;
        self.regs.ports[i].generator.state = if requested == 0 {
            TxState::Done
        } else {
            TxState::Transmitting
        };
        self.gens[i] = Some(g);
        if requested > 0 {
            self.push(start, port, PendingKind::Generate(i));
        }
        Ok(())
    }

    fn write(
        &mut self,
        port: Port,
        register: Register,
        value: &RegValue,
        line: u32,
        now: u64,
    ) -> Result<(), RunError> {
        if !register.valid_on(port) {
            return Err(RunError::NoSuchRegister {
                port,
                register,
                line,
            });
        }
        if register.read_only() {
            return Err(RunError::ReadOnly { register, line });
        }
        if register.block() == Block::Generator {
            let state = self.regs.port(port).map(|r| r.generator.state);
            if state == Some(TxState::Transmitting) {
                return Err(RunError::WriteWhileTransmitting {
                    port,
                    register,
                    line,
                });
            }
        }
        self.regs.store(port, register, value);
        match register.block() {
            Block::Monitor => {
                let m = &self.regs.monitor;
                self.monitor.reconfigure(MonitorConfig {
                    filters: m.filters.clone(),
                    port_tagging: m.port_tagging,
                    buffer_capacity: MONITOR_BUFFER_FRAMES,
                });
            }
            Block::Generator if register == Register::TransmitterControl && self.running => {
                let regs = self.regs.port(port).expect("data port");
                if regs.generator.control && regs.generator.state == TxState::Disabled {
                    self.start_generator(port, now)?;
                }
            }
            Block::Analyser if register == Register::AnalyserControl && self.running => {
                let a = &mut self.regs.port_mut(port).expect("data port").analyser;
                a.state = if a.control {
                    RxState::Receiving
                } else {
                    RxState::Disabled
                };
            }
            _ => {}
        }
        Ok(())
    }

    fn start(&mut self, now: u64) -> Result<(), RunError> {
        self.running = true;
        for port in Port::DATA {
            let i = port.data_index().expect("data port");
            if self.regs.ports[i].analyser.control {
                self.regs.ports[i].analyser.state = RxState::Receiving;
            }
            let g = &self.regs.ports[i].generator;
            if g.control && g.state == TxState::Disabled {
                self.start_generator(port, now)?;
            }
        }
        Ok(())
    }

    fn stop(&mut self, now: u64) {
        self.running = false;
        for (i, g) in self.gens.iter_mut().enumerate() {
            let Some(g) = g else { continue };
            if g.done_at.is_none() {
                g.stopped = true;
                let end = g.last_tx.map_or(now, |t| (t + g.frame_ticks).max(now));
                g.done_at = Some(end);
                g.schedule_end = Some(end);
                self.notes.push(format!(
                    "port {}: stopped after {} of {} frames",
                    g.port, g.sent, g.requested
                ));
            }
            self.regs.ports[i].generator.state = TxState::Done;
        }
        for regs in self.regs.ports.iter_mut() {
            if regs.analyser.state == RxState::Receiving {
                regs.analyser.state = RxState::Hold;
            }
        }
    }

    fn read(&self, port: Port, register: Register, line: u32) -> Result<RegValue, RunError> {
        self.regs
            .read(port, register)
            .ok_or(RunError::NoSuchRegister {
                port,
                register,
                line,
            })
    }
}

/// Executes a register program on the virtual device.
///
/// `external_rx` frames arrive on their data ports at their timestamps,
/// in any order.
pub fn run(
    program: &RegisterProgram,
    options: &RunOptions,
    external_rx: &[WireEvent],
) -> Result<RunResult, RunError> {
    let mut sim = Sim::new(options);
    for ev in external_rx {
        if !ev.port.is_data() {
            return Err(RunError::ExternalPort(ev.port));
        }
        let rx = WireEvent {
            direction: Direction::Rx,
            ..ev.clone()
        };
        sim.push(ev.timestamp, ev.port, PendingKind::Receive(rx));
    }

    let mut checks = Vec::new();
    let mut exits_taken = 0;
    let mut now = 0u64;
    let mut pc = 0usize;
    while let Some(op) = program.ops.get(pc) {
        pc += 1;
        match op {
            Op::Write {
                port,
                register,
                value,
                line,
            } => {
                sim.advance_to(now);
                sim.write(*port, *register, value, *line, now)?;
            }
            Op::Start { .. } => {
                sim.advance_to(now);
                sim.start(now)?;
            }
            Op::Delay { ticks, .. } => now += ticks,
            Op::ExitIf {
                port,
                register,
                expected,
                target,
                line,
            } => {
                sim.advance_to(now);
                if sim.read(*port, *register, *line)? == *expected {
                    exits_taken += 1;
                    pc = *target;
                }
            }
            Op::Check {
                port,
                register,
                expected,
                line,
            } => {
                sim.advance_to(now);
                let observed = sim.read(*port, *register, *line)?;
                checks.push(CheckOutcome {
                    line: *line,
                    port: *port,
                    register: *register,
                    passed: observed == *expected,
                    expected: expected.clone(),
                    observed,
                });
            }
            Op::Stop { .. } => {
                sim.advance_to(now);
                sim.stop(now);
            }
        }
    }
    sim.advance_to(u64::MAX);

    let mut out = std::mem::take(&mut sim.out);
    out.sort_by_key(|(e, seq)| (e.timestamp, e.port, *seq));
    let report = RunReport {
        checks,
        generators: sim.gens.iter().flatten().map(Generator::summary).collect(),
        monitor_forwarded: sim.monitor.forwarded(),
        monitor_drops: sim.monitor.drops(),
        monitor_max_occupancy: sim.monitor.max_occupancy(),
        notes: sim.notes,
        control_end: now,
        exits_taken,
    };
    Ok(RunResult {
        events: out.into_iter().map(|(e, _)| e).collect(),
        registers: sim.regs,
        report,
    })
}
