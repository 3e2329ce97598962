//! Ethernet frame layout, on-wire size accounting and byte serialization.
//!
//! On-wire size `S` counts preamble (7), start-of-frame delimiter (1),
//! both MAC addresses, the optional 802.1Q tag, the Ethertype, the payload
//! and the FCS. Serialized frames (and pcap records) carry everything from
//! the destination MAC through the FCS, i.e. `S - 8` bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PREAMBLE_LEN: u32 = 7;
pub const SFD_LEN: u32 = 1;
pub const FCS_LEN: u32 = 4;
pub const VLAN_TAG_LEN: u32 = 4;
/// Minimum interframe gap in byte-times.
pub const MIN_IFG: u32 = 12;
pub const MAX_PAYLOAD: usize = 1500;
pub const MIN_PAYLOAD_UNTAGGED: usize = 46;
pub const MIN_PAYLOAD_TAGGED: usize = 42;
/// Preamble + SFD + two MACs + Ethertype + FCS.
pub const FIXED_OVERHEAD: u32 = PREAMBLE_LEN + SFD_LEN + 6 + 6 + 2 + FCS_LEN;
/// Bytes of `S` that never appear in a capture.
pub const UNCAPTURED_LEN: u32 = PREAMBLE_LEN + SFD_LEN;

pub const ETHERTYPE_PROFINET_RT: u16 = 0x8892;
pub const TPID_8021Q: u16 = 0x8100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {len} bytes outside {min}..={max}")]
    PayloadLength { len: usize, min: usize, max: usize },
    #[error("invalid MAC address `{0}`")]
    InvalidMac(String),
    #[error("truncated frame: {0} bytes, need at least 64")]
    Truncated(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MacAddress(pub [u8; 6]);

impl MacAddress {
    pub const BROADCAST: MacAddress = MacAddress([0xff; 6]);

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }

    /// The 48-bit big-endian integer value of the address.
    pub fn to_u64(&self) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, b| (acc << 8) | u64::from(*b))
    }

    pub fn from_u64(v: u64) -> Self {
        let b = v.to_be_bytes();
        MacAddress([b[2], b[3], b[4], b[5], b[6], b[7]])
    }
}

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MacAddress {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut octets = [0u8; 6];
        let mut parts = s.split(':');
        for slot in octets.iter_mut() {
            let part = parts
                .next()
                .ok_or_else(|| FrameError::InvalidMac(s.into()))?;
            if part.len() != 2 {
                return Err(FrameError::InvalidMac(s.into()));
            }
            *slot = u8::from_str_radix(part, 16).map_err(|_| FrameError::InvalidMac(s.into()))?;
        }
        if parts.next().is_some() {
            return Err(FrameError::InvalidMac(s.into()));
        }
        Ok(MacAddress(octets))
    }
}

/// An 802.1Q tag; always serialized with TPID 0x8100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VlanTag {
    pub tci: u16,
}

impl VlanTag {
    pub fn new(pcp: u8, dei: bool, vid: u16) -> Self {
        VlanTag {
            tci: (u16::from(pcp & 0x7) << 13) | (u16::from(dei) << 12) | (vid & 0x0fff),
        }
    }

    pub fn vid(&self) -> u16 {
        self.tci & 0x0fff
    }
}

/// The content of one Ethernet frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSpec {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub vlan: Option<VlanTag>,
    pub ethertype: u16,
    pub payload: Vec<u8>,
}

fn min_payload(tagged: bool) -> usize {
    if tagged {
        MIN_PAYLOAD_TAGGED
    } else {
        MIN_PAYLOAD_UNTAGGED
    }
}

impl FrameSpec {
    /// Builds a frame, zero-padding short payloads up to the Ethernet
    /// minimum (46 bytes untagged, 42 tagged).
    pub fn new(
        dst: MacAddress,
        src: MacAddress,
        vlan: Option<VlanTag>,
        ethertype: u16,
        mut payload: Vec<u8>,
    ) -> Result<Self, FrameError> {
        let min = min_payload(vlan.is_some());
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadLength {
                len: payload.len(),
                min,
                max: MAX_PAYLOAD,
            });
        }
        if payload.len() < min {
            payload.resize(min, 0);
        }
        Ok(FrameSpec {
            dst,
            src,
            vlan,
            ethertype,
            payload,
        })
    }

    /// A frame with an all-zero payload of `payload_len` bytes (padded as in [`FrameSpec::new`]).
    pub fn zeroed(
        dst: MacAddress,
        src: MacAddress,
        vlan: Option<VlanTag>,
        ethertype: u16,
        payload_len: usize,
    ) -> Result<Self, FrameError> {
        Self::new(dst, src, vlan, ethertype, vec![0; payload_len])
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let min = min_payload(self.vlan.is_some());
        let len = self.payload.len();
        if !(min..=MAX_PAYLOAD).contains(&len) {
            return Err(FrameError::PayloadLength {
                len,
                min,
                max: MAX_PAYLOAD,
            });
        }
        Ok(())
    }

    /// MAC-layer packet size: destination MAC through payload, no FCS.
    pub fn packet_size(&self) -> u32 {
        frame_size_unchecked(self) - PREAMBLE_LEN - SFD_LEN - FCS_LEN
    }
}

fn frame_size_unchecked(spec: &FrameSpec) -> u32 {
    let tag = if spec.vlan.is_some() { VLAN_TAG_LEN } else { 0 };
    FIXED_OVERHEAD + tag + spec.payload.len() as u32
}

/// On-wire size `S` in bytes.
pub fn frame_size(spec: &FrameSpec) -> Result<u32, FrameError> {
    spec.validate()?;
    Ok(frame_size_unchecked(spec))
}

/// A serialized MAC-layer frame (destination MAC through FCS).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireBytes {
    pub bytes: Vec<u8>,
    pub s_on_wire: u32,
}

impl WireBytes {
    /// Wraps captured bytes; `S` is reconstructed by adding preamble and SFD.
    pub fn from_captured(bytes: Vec<u8>) -> Self {
        let s_on_wire = bytes.len() as u32 + UNCAPTURED_LEN;
        WireBytes { bytes, s_on_wire }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Whether the trailing four bytes are a valid CRC-32 over the rest.
    pub fn fcs_valid(&self) -> bool {
        fcs_matches(&self.bytes)
    }
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

fn fcs_matches(bytes: &[u8]) -> bool {
    if bytes.len() < FCS_LEN as usize {
        return false;
    }
    let (body, fcs) = bytes.split_at(bytes.len() - FCS_LEN as usize);
    crc32(body).to_le_bytes() == fcs
}

pub fn serialize(spec: &FrameSpec) -> Result<WireBytes, FrameError> {
    let s_on_wire = frame_size(spec)?;
    let mut bytes = Vec::with_capacity((s_on_wire - UNCAPTURED_LEN) as usize);
    bytes.extend_from_slice(&spec.dst.0);
    bytes.extend_from_slice(&spec.src.0);
    if let Some(tag) = spec.vlan {
        bytes.extend_from_slice(&TPID_8021Q.to_be_bytes());
        bytes.extend_from_slice(&tag.tci.to_be_bytes());
    }
    bytes.extend_from_slice(&spec.ethertype.to_be_bytes());
    bytes.extend_from_slice(&spec.payload);
    let fcs = crc32(&bytes);
    bytes.extend_from_slice(&fcs.to_le_bytes());
    Ok(WireBytes { bytes, s_on_wire })
}

/// Result of [`parse`]; a bad FCS is reported, not rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFrame {
    pub spec: FrameSpec,
    pub fcs_valid: bool,
}

pub fn parse(bytes: &[u8]) -> Result<ParsedFrame, FrameError> {
    if bytes.len() < 64 {
        return Err(FrameError::Truncated(bytes.len()));
    }
    let mac = |at: usize| {
        let mut o = [0u8; 6];
        o.copy_from_slice(&bytes[at..at + 6]);
        MacAddress(o)
    };
    let dst = mac(0);
    let src = mac(6);
    let mut at = 12;
    let mut type_field = u16::from_be_bytes([bytes[at], bytes[at + 1]]);
    let mut vlan = None;
    if type_field == TPID_8021Q {
        vlan = Some(VlanTag {
            tci: u16::from_be_bytes([bytes[at + 2], bytes[at + 3]]),
        });
        at += 4;
        type_field = u16::from_be_bytes([bytes[at], bytes[at + 1]]);
    }
    at += 2;
    let end = bytes.len() - FCS_LEN as usize;
    let payload = bytes[at..end].to_vec();
    let spec = FrameSpec {
        dst,
        src,
        vlan,
        ethertype: type_field,
        payload,
    };
    spec.validate()?;
    Ok(ParsedFrame {
        spec,
        fcs_valid: fcs_matches(bytes),
    })
}
