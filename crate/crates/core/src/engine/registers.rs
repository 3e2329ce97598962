//! Symbolic register map of the virtual tester.
//!
//! Each data port (A–D) carries a frame generator and a frame analyser;
//! port L carries the monitor. Registers are addressed by name.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frame::{MacAddress, ETHERTYPE_PROFINET_RT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
    C,
    D,
    /// Monitor / bridge port.
    L,
}

impl Port {
    pub const DATA: [Port; 4] = [Port::A, Port::B, Port::C, Port::D];

    pub fn is_data(self) -> bool {
        self != Port::L
    }

    pub(crate) fn data_index(self) -> Option<usize> {
        match self {
            Port::A => Some(0),
            Port::B => Some(1),
            Port::C => Some(2),
            Port::D => Some(3),
            Port::L => None,
        }
    }

    /// Partner port in switching mode.
    pub fn bridge_peer(self) -> Option<Port> {
        match self {
            Port::A => Some(Port::B),
            Port::B => Some(Port::A),
            Port::C => Some(Port::D),
            Port::D => Some(Port::C),
            Port::L => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Port::A => "A",
            Port::B => "B",
            Port::C => "C",
            Port::D => "D",
            Port::L => "L",
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Port {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Port::A),
            "B" => Ok(Port::B),
            "C" => Ok(Port::C),
            "D" => Ok(Port::D),
            "L" => Ok(Port::L),
            _ => Err(format!("unknown port `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxState {
    Disabled,
    Transmitting,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RxState {
    #[default]
    Disabled,
    Receiving,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Generator,
    Analyser,
    Monitor,
}

/// What a register holds, used to type-check script values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Flag,
    Count,
    /// Byte-times, fractional allowed.
    Gap,
    Mac,
    /// Ethertype, or VLAN tag + Ethertype as `0x8100_TTTT_EEEE`.
    Header,
    Ethertype,
    TxState,
    RxState,
    Bytes,
}

macro_rules! registers {
    ($( $variant:ident => $name:literal [$($alias:literal),*], $block:ident, $kind:ident, $ro:literal; )*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum Register {
            $($variant,)*
        }

        impl Register {
            pub const ALL: &'static [Register] = &[$(Register::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Register::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Register> {
                let upper = name.to_ascii_uppercase();
                match upper.as_str() {
                    $($name $(| $alias)* => Some(Register::$variant),)*
                    _ => None,
                }
            }

            pub fn block(self) -> Block {
                match self {
                    $(Register::$variant => Block::$block,)*
                }
            }

            pub fn kind(self) -> ValueKind {
                match self {
                    $(Register::$variant => ValueKind::$kind,)*
                }
            }

            pub fn read_only(self) -> bool {
                match self {
                    $(Register::$variant => $ro,)*
                }
            }
        }
    };
}

registers! {
    TransmitterControl => "TRANSMITTER_CONTROL" ["TR_CTRL"], Generator, Flag, false;
    TransmitterState => "TRANSMITTER_STATE" ["TRASMITTER_STATE", "TR_STATE"], Generator, TxState, true;
    InterframeGap => "INTERFRAME_GAP" ["INTERFAME_GAP"], Generator, Gap, false;
    StartDelay => "START_DELAY" [], Generator, Count, false;
    NumberOfFrames => "NUMBER_OF_FRAMES" [], Generator, Count, false;
    FramesSent => "FRAMES_SENT" [], Generator, Count, true;
    DstMac => "DST_MAC" [], Generator, Mac, false;
    SrcMac => "SRC_MAC" [], Generator, Mac, false;
    HdrAfterMac => "HDR_AFTER_MAC" [], Generator, Header, false;
    PayloadSize => "PAYLOAD_SIZE" [], Generator, Count, false;
    PayloadCounter => "PAYLOAD_COUNTER" [], Generator, Flag, false;
    AnalyserControl => "ANALYSER_CONTROL" ["RX_CTRL"], Analyser, Flag, false;
    AnalyserState => "ANALYSER_STATE" ["RX_STATE"], Analyser, RxState, true;
    FramesExp => "FRAMES_EXP" [], Analyser, Count, false;
    FramesExpOk => "FRAMES_EXP_OK" [], Analyser, Count, false;
    NumberOfRecvOk => "NUMBER_OF_RECV_OK" [], Analyser, Count, true;
    NumberOfRecvNok => "NUMBER_OF_RECV_NOK" [], Analyser, Count, true;
    ErrorCode => "ERROR_CODE" [], Analyser, Count, false;
    ErrorTagging => "ERROR_TAGGING" [], Analyser, Flag, false;
    MatchDst => "MATCH_DST" [], Analyser, Mac, false;
    MatchSrc => "MATCH_SRC" [], Analyser, Mac, false;
    MatchEthertype => "MATCH_ETHERTYPE" [], Analyser, Ethertype, false;
    MatchPayload => "MATCH_PAYLOAD" [], Analyser, Bytes, false;
    MonitorControl => "MONITOR_CONTROL" [], Monitor, Flag, false;
    PortTagging => "PORT_TAGGING" [], Monitor, Flag, false;
    FilterDst => "FILTER_DST" [], Monitor, Mac, false;
    FilterSrc => "FILTER_SRC" [], Monitor, Mac, false;
    FilterEthertype => "FILTER_ETHERTYPE" [], Monitor, Ethertype, false;
    FilterAdd => "FILTER_ADD" [], Monitor, Flag, false;
    MonitorForwarded => "MONITOR_FORWARDED" [], Monitor, Count, true;
    MonitorDrops => "MONITOR_DROPS" [], Monitor, Count, true;
}

impl Register {
    /// Whether the register exists on `port`.
    pub fn valid_on(self, port: Port) -> bool {
        match self.block() {
            Block::Monitor => port == Port::L,
            Block::Generator | Block::Analyser => port.is_data(),
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed register value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegValue {
    Int(u64),
    Decimal(f64),
    Mac(MacAddress),
    Tx(TxState),
    Rx(RxState),
    Bytes(Vec<u8>),
}

impl fmt::Display for RegValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegValue::Int(v) => write!(f, "{v}"),
            RegValue::Decimal(v) => write!(f, "{v}"),
            RegValue::Mac(m) => write!(f, "{m}"),
            RegValue::Tx(s) => f.write_str(match s {
                TxState::Disabled => "DISABLED",
                TxState::Transmitting => "TRANSMITTING",
                TxState::Done => "DONE",
            }),
            RegValue::Rx(s) => f.write_str(match s {
                RxState::Disabled => "DISABLED",
                RxState::Receiving => "RECEIVING",
                RxState::Hold => "HOLD",
            }),
            RegValue::Bytes(b) => {
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn tx_state_from_name(name: &str) -> Option<TxState> {
    match name.to_ascii_uppercase().as_str() {
        "DISABLED" | "DISABLE" => Some(TxState::Disabled),
        "TRANSMITTING" => Some(TxState::Transmitting),
        "DONE" => Some(TxState::Done),
        _ => None,
    }
}

pub fn rx_state_from_name(name: &str) -> Option<RxState> {
    match name.to_ascii_uppercase().as_str() {
        "DISABLED" | "DISABLE" => Some(RxState::Disabled),
        "RECEIVING" => Some(RxState::Receiving),
        "HOLD" => Some(RxState::Hold),
        _ => None,
    }
}

/// Per-field equality pattern used by the analyser; `None` fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchPattern {
    pub dst: Option<MacAddress>,
    pub src: Option<MacAddress>,
    pub ethertype: Option<u16>,
    pub payload_prefix: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRegs {
    pub control: bool,
    pub state: TxState,
    /// Byte-times.
    pub interframe_gap: f64,
    /// Ticks.
    pub start_delay: u64,
    pub number_of_frames: u64,
    pub frames_sent: u64,
    pub dst: MacAddress,
    pub src: MacAddress,
    pub hdr_after_mac: u64,
    pub payload_size: u64,
    pub payload_counter: bool,
}

impl Default for GeneratorRegs {
    fn default() -> Self {
        GeneratorRegs {
            control: false,
            state: TxState::Disabled,
            interframe_gap: 12.0,
            start_delay: 0,
            number_of_frames: 0,
            frames_sent: 0,
            dst: MacAddress::BROADCAST,
            src: MacAddress([0x02, 0, 0, 0, 0, 0x01]),
            hdr_after_mac: u64::from(ETHERTYPE_PROFINET_RT),
            payload_size: 46,
            payload_counter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalyserRegs {
    pub control: bool,
    pub state: RxState,
    pub frames_exp: u64,
    pub frames_exp_ok: u64,
    pub recv_ok: u64,
    pub recv_nok: u64,
    pub error_code: u64,
    pub error_tagging: bool,
    pub pattern: MatchPattern,
}

/// An accept rule of the monitor filter; `None` fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterRule {
    pub src: Option<MacAddress>,
    pub dst: Option<MacAddress>,
    pub ethertype: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorRegs {
    pub control: bool,
    pub port_tagging: bool,
    pub pending: FilterRule,
    pub filters: Vec<FilterRule>,
    pub forwarded: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PortRegs {
    pub generator: GeneratorRegs,
    pub analyser: AnalyserRegs,
}

/// All registers of the device.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegisterFile {
    pub ports: [PortRegs; 4],
    pub monitor: MonitorRegs,
}

impl RegisterFile {
    pub fn port(&self, port: Port) -> Option<&PortRegs> {
        port.data_index().map(|i| &self.ports[i])
    }

    pub fn port_mut(&mut self, port: Port) -> Option<&mut PortRegs> {
        port.data_index().map(move |i| &mut self.ports[i])
    }

    /// Current value of a register, or `None` if it does not exist on `port`.
    pub fn read(&self, port: Port, register: Register) -> Option<RegValue> {
        use Register::*;
        if !register.valid_on(port) {
            return None;
        }
        if register.block() == Block::Monitor {
            let m = &self.monitor;
            return Some(match register {
                MonitorControl => RegValue::Int(m.control.into()),
                PortTagging => RegValue::Int(m.port_tagging.into()),
                FilterDst => RegValue::Mac(m.pending.dst.unwrap_or(MacAddress([0; 6]))),
                FilterSrc => RegValue::Mac(m.pending.src.unwrap_or(MacAddress([0; 6]))),
                FilterEthertype => RegValue::Int(m.pending.ethertype.unwrap_or(0).into()),
                FilterAdd => RegValue::Int(m.filters.len() as u64),
                MonitorForwarded => RegValue::Int(m.forwarded),
                MonitorDrops => RegValue::Int(m.drops),
                _ => unreachable!("non-monitor register"),
            });
        }
        let regs = self.port(port)?;
        let g = &regs.generator;
        let a = &regs.analyser;
        Some(match register {
            TransmitterControl => RegValue::Int(g.control.into()),
            TransmitterState => RegValue::Tx(g.state),
            InterframeGap => RegValue::Decimal(g.interframe_gap),
            StartDelay => RegValue::Int(g.start_delay),
            NumberOfFrames => RegValue::Int(g.number_of_frames),
            FramesSent => RegValue::Int(g.frames_sent),
            DstMac => RegValue::Mac(g.dst),
            SrcMac => RegValue::Mac(g.src),
            HdrAfterMac => RegValue::Int(g.hdr_after_mac),
            PayloadSize => RegValue::Int(g.payload_size),
            PayloadCounter => RegValue::Int(g.payload_counter.into()),
            AnalyserControl => RegValue::Int(a.control.into()),
            AnalyserState => RegValue::Rx(a.state),
            FramesExp => RegValue::Int(a.frames_exp),
            FramesExpOk => RegValue::Int(a.frames_exp_ok),
            NumberOfRecvOk => RegValue::Int(a.recv_ok),
            NumberOfRecvNok => RegValue::Int(a.recv_nok),
            ErrorCode => RegValue::Int(a.error_code),
            ErrorTagging => RegValue::Int(a.error_tagging.into()),
            MatchDst => RegValue::Mac(a.pattern.dst.unwrap_or(MacAddress([0; 6]))),
            MatchSrc => RegValue::Mac(a.pattern.src.unwrap_or(MacAddress([0; 6]))),
            MatchEthertype => RegValue::Int(a.pattern.ethertype.unwrap_or(0).into()),
            MatchPayload => RegValue::Bytes(a.pattern.payload_prefix.clone().unwrap_or_default()),
            _ => unreachable!("monitor register on data port"),
        })
    }

    /// Stores a value that has already been type-checked against the
    /// register's [`ValueKind`]. Read-only registers are rejected by the caller.
    pub(crate) fn store(&mut self, port: Port, register: Register, value: &RegValue) {
        use Register::*;
        let flag = |v: &RegValue| matches!(v, RegValue::Int(x) if *x != 0);
        let int = |v: &RegValue| match v {
            RegValue::Int(x) => *x,
            RegValue::Decimal(x) => *x as u64,
            _ => 0,
        };
        let mac = |v: &RegValue| match v {
            RegValue::Mac(m) => *m,
            RegValue::Int(x) => MacAddress::from_u64(*x),
            _ => MacAddress([0; 6]),
        };
        if register.block() == Block::Monitor {
            let m = &mut self.monitor;
            match register {
                MonitorControl => m.control = flag(value),
                PortTagging => m.port_tagging = flag(value),
                FilterDst => m.pending.dst = Some(mac(value)),
                FilterSrc => m.pending.src = Some(mac(value)),
                FilterEthertype => m.pending.ethertype = Some(int(value) as u16),
                FilterAdd if flag(value) => {
                    let rule = std::mem::take(&mut m.pending);
                    m.filters.push(rule);
                }
                _ => {}
            }
            return;
        }
        let Some(regs) = self.port_mut(port) else {
            return;
        };
        let g = &mut regs.generator;
        let a = &mut regs.analyser;
        match register {
            TransmitterControl => g.control = flag(value),
            InterframeGap => {
                g.interframe_gap = match value {
                    RegValue::Decimal(x) => *x,
                    other => int(other) as f64,
                }
            }
            StartDelay => g.start_delay = int(value),
            NumberOfFrames => g.number_of_frames = int(value),
            DstMac => g.dst = mac(value),
            SrcMac => g.src = mac(value),
            HdrAfterMac => g.hdr_after_mac = int(value),
            PayloadSize => g.payload_size = int(value),
            PayloadCounter => g.payload_counter = flag(value),
            AnalyserControl => a.control = flag(value),
            FramesExp => a.frames_exp = int(value),
            FramesExpOk => a.frames_exp_ok = int(value),
            ErrorCode => a.error_code = int(value),
            ErrorTagging => a.error_tagging = flag(value),
            MatchDst => a.pattern.dst = Some(mac(value)),
            MatchSrc => a.pattern.src = Some(mac(value)),
            MatchEthertype => a.pattern.ethertype = Some(int(value) as u16),
            MatchPayload => {
                if let RegValue::Bytes(b) = value {
                    a.pattern.payload_prefix = Some(b.clone());
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_aliases_resolve() {
        for r in Register::ALL {
            assert_eq!(Register::from_name(r.name()), Some(*r));
        }
        assert_eq!(
            Register::from_name("TR_CTRL"),
            Some(Register::TransmitterControl)
        );
        assert_eq!(
            Register::from_name("trasmitter_state"),
            Some(Register::TransmitterState)
        );
        assert_eq!(Register::from_name("NOPE"), None);
    }

    #[test]
    fn blocks_bind_to_ports() {
        assert!(Register::InterframeGap.valid_on(Port::A));
        assert!(!Register::InterframeGap.valid_on(Port::L));
        assert!(Register::MonitorDrops.valid_on(Port::L));
        assert!(!Register::MonitorDrops.valid_on(Port::B));
        assert!(Register::NumberOfRecvOk.read_only());
        assert!(!Register::FramesExp.read_only());
    }

    #[test]
    fn store_then_read() {
        let mut rf = RegisterFile::default();
        rf.store(Port::B, Register::InterframeGap, &RegValue::Decimal(264.5));
        rf.store(Port::B, Register::TransmitterControl, &RegValue::Int(1));
        assert_eq!(
            rf.read(Port::B, Register::InterframeGap),
            Some(RegValue::Decimal(264.5))
        );
        assert_eq!(
            rf.read(Port::B, Register::TransmitterControl),
            Some(RegValue::Int(1))
        );
        assert_eq!(
            rf.read(Port::A, Register::TransmitterControl),
            Some(RegValue::Int(0))
        );
        assert_eq!(rf.read(Port::L, Register::InterframeGap), None);
    }

    #[test]
    fn filter_add_commits_pending_rule() {
        let mut rf = RegisterFile::default();
        rf.store(
            Port::L,
            Register::FilterDst,
            &RegValue::Mac(MacAddress::BROADCAST),
        );
        rf.store(Port::L, Register::FilterAdd, &RegValue::Int(1));
        assert_eq!(rf.monitor.filters.len(), 1);
        assert_eq!(rf.monitor.filters[0].dst, Some(MacAddress::BROADCAST));
        assert_eq!(rf.monitor.pending, FilterRule::default());
    }
}
