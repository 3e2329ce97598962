//! Classic pcap I/O. Files are written with nanosecond timestamps in
//! little-endian order; reading accepts both resolutions in either byte
//! order.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::engine::{Direction, Port, WireEvent};
use crate::frame::WireBytes;
use crate::load::TICK_NS;

pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const SNAPLEN: u32 = 65_535;
pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a pcap file (magic {0:#010x})")]
    BadMagic(u32),
    #[error("truncated pcap at byte {0}")]
    Truncated(usize),
    #[error("unsupported link type {0} (expected Ethernet)")]
    LinkType(u32),
    #[error("event {index} at tick {tick} precedes its predecessor")]
    Unsorted { index: usize, tick: u64 },
    #[error("frame of {0} bytes exceeds the snapshot length")]
    TooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Resolution {
    Micro,
    Nano,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcapRecord {
    pub timestamp_ns: u64,
    pub orig_len: u32,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub resolution: Resolution,
    pub big_endian: bool,
    pub records: Vec<PcapRecord>,
}

impl Capture {
    /// True when some timestamp is not a whole number of ticks, so
    /// converting to ticks truncates.
    pub fn quantized(&self) -> bool {
        self.records.iter().any(|r| r.timestamp_ns % TICK_NS != 0)
    }

    /// Records as wire events on the given port and direction.
    pub fn events(&self, port: Port, direction: Direction) -> Vec<WireEvent> {
        self.records
            .iter()
            .map(|r| {
                WireEvent::new(
                    r.timestamp_ns / TICK_NS,
                    port,
                    direction,
                    WireBytes::from_captured(r.bytes.clone()),
                )
            })
            .collect()
    }
}

fn put(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serializes events to an in-memory nanosecond pcap.
pub fn encode(events: &[WireEvent]) -> Result<Vec<u8>, PcapError> {
    let payload: usize = events
        .iter()
        .map(|e| RECORD_HEADER_LEN + e.frame.bytes.len())
        .sum();
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + payload);
    put(&mut out, MAGIC_NANOS);
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    put(&mut out, 0); // thiszone
    put(&mut out, 0); // sigfigs
    put(&mut out, SNAPLEN);
    put(&mut out, LINKTYPE_ETHERNET);
    let mut last = 0;
    for (index, e) in events.iter().enumerate() {
        if e.timestamp < last {
            return Err(PcapError::Unsorted {
                index,
                tick: e.timestamp,
            });
        }
        last = e.timestamp;
        let len = e.frame.bytes.len();
        if len > SNAPLEN as usize {
            return Err(PcapError::TooLong(len));
        }
        let ns = e.timestamp * TICK_NS;
        let secs = u32::try_from(ns / 1_000_000_000).map_err(|_| {
            PcapError::Io(io::Error::new(
                io::ErrorKind::InvalidInput,
                "timestamp beyond the 32-bit seconds field",
            ))
        })?;
        put(&mut out, secs);
        put(&mut out, (ns % 1_000_000_000) as u32);
        put(&mut out, len as u32);
        put(&mut out, len as u32);
        out.extend_from_slice(&e.frame.bytes);
    }
    Ok(out)
}

pub fn write_pcap_to<W: Write>(events: &[WireEvent], mut w: W) -> Result<(), PcapError> {
    w.write_all(&encode(events)?)?;
    w.flush()?;
    Ok(())
}

/// Writes events to `path`. Nothing is written if the events are unsorted.
pub fn write_pcap(events: &[WireEvent], path: &Path) -> Result<(), PcapError> {
    let bytes = encode(events)?;
    fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    big_endian: bool,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32, PcapError> {
        let b: [u8; 4] = self
            .data
            .get(self.pos..self.pos + 4)
            .ok_or(PcapError::Truncated(self.pos))?
            .try_into()
            .expect("slice of length 4");
        self.pos += 4;
        Ok(if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }
}

pub fn decode(data: &[u8]) -> Result<Capture, PcapError> {
    if data.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::Truncated(data.len()));
    }
    let raw = u32::from_le_bytes(data[..4].try_into().expect("4 bytes"));
    let (resolution, big_endian) = match raw {
        MAGIC_MICROS => (Resolution::Micro, false),
        MAGIC_NANOS => (Resolution::Nano, false),
        m if m.swap_bytes() == MAGIC_MICROS => (Resolution::Micro, true),
        m if m.swap_bytes() == MAGIC_NANOS => (Resolution::Nano, true),
        m => return Err(PcapError::BadMagic(m)),
    };
    let mut r = Reader {
        data,
        pos: 20,
        big_endian,
    };
    let linktype = r.u32()?;
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::LinkType(linktype));
    }
    let mut records = Vec::new();
    while r.pos < data.len() {
        let start = r.pos;
        if data.len() - start < RECORD_HEADER_LEN {
            return Err(PcapError::Truncated(start));
        }
        let secs = u64::from(r.u32()?);
        let frac = u64::from(r.u32()?);
        let incl = r.u32()? as usize;
        let orig_len = r.u32()?;
        let bytes = data
            .get(r.pos..r.pos + incl)
            .ok_or(PcapError::Truncated(start))?
            .to_vec();
        r.pos += incl;
        let sub = match resolution {
            Resolution::Micro => frac * 1000,
            Resolution::Nano => frac,
        };
        records.push(PcapRecord {
            timestamp_ns: secs * 1_000_000_000 + sub,
            orig_len,
            bytes,
        });
    }
    Ok(Capture {
        resolution,
        big_endian,
        records,
    })
}

pub fn read_pcap(path: &Path) -> Result<Capture, PcapError> {
    decode(&fs::read(path)?)
}
