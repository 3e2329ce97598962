use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use flag_core::engine::Port;
use flag_core::frame::{
    FCS_LEN, FIXED_OVERHEAD, MAX_PAYLOAD, MIN_PAYLOAD_TAGGED, MIN_PAYLOAD_UNTAGGED, PREAMBLE_LEN,
    SFD_LEN, VLAN_TAG_LEN,
};
use flag_core::{FrameSpec, LineRate, Load, LoadConfig, MacAddress, VlanTag};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "flag",
    version,
    about = "Deterministic Ethernet load generator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print frame size, load gap and expected duration without running.
    Plan(JobArgs),
    /// Simulate the job and write a pcap and a report.
    Generate(GenerateArgs),
    /// Run a test script and report its checks.
    RunScript(ScriptArgs),
    /// Print load statistics of a pcap file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct JobArgs {
    /// Load in percent of line rate, in (0, 100].
    #[arg(long)]
    pub load: f64,
    /// Line rate in Mbit/s: 100 or 1000.
    #[arg(long, default_value_t = 100)]
    pub rate: u32,
    #[arg(long)]
    pub frames: u64,
    /// MAC-layer packet size in bytes (destination MAC through payload).
    #[arg(long, conflicts_with = "payload", required_unless_present = "payload")]
    pub size: Option<u32>,
    /// Payload size in bytes.
    #[arg(long)]
    pub payload: Option<u32>,
    #[arg(long, default_value = "ff:ff:ff:ff:ff:ff")]
    pub dst: MacAddress,
    #[arg(long, default_value = "02:00:00:00:00:01")]
    pub src: MacAddress,
    /// Ethertype in hex.
    #[arg(long, default_value = "0x8892", value_parser = parse_hex_u16)]
    pub ethertype: u16,
    /// Add an 802.1Q tag.
    #[arg(long)]
    pub vlan: bool,
    #[arg(long, default_value_t = 0, requires = "vlan")]
    pub vlan_id: u16,
    #[arg(long, default_value_t = 0, requires = "vlan")]
    pub priority: u8,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub job: JobArgs,
    /// Output pcap; defaults to a name derived from the job in $FLAG_OUT_DIR.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report file; defaults to the pcap path with a .txt extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also save the generated script.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Also save the capture summary as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputDir,
}

#[derive(Debug, Args)]
pub struct OutputDir {
    /// Directory for default output names.
    #[arg(long, env = "FLAG_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScriptArgs {
    /// Script file (.nsl).
    pub path: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub rate: u32,
    /// Cable between two ports, e.g. A-B. May be repeated.
    #[arg(long = "link", value_parser = parse_link)]
    pub links: Vec<(Port, Port)>,
    /// Port whose transmitted frames are captured and analysed.
    #[arg(long, default_value = "A")]
    pub capture: Port,
    /// Write the captured frames to this pcap.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub rate: u32,
    /// Print the summary as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn parse_hex_u16(s: &str) -> Result<u16, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u16::from_str_radix(digits, 16).map_err(|_| format!("`{s}` is not a 16-bit hex value"))
}

fn parse_link(s: &str) -> Result<(Port, Port), String> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| format!("`{s}` is not a link like A-B"))?;
    let (a, b): (Port, Port) = (a.parse()?, b.parse()?);
    if !a.is_data() || !b.is_data() || a == b {
        return Err(format!(
            "link `{s}` must join two different ports among A-D"
        ));
    }
    Ok((a, b))
}

pub fn rate(mbps: u32) -> Result<LineRate, Failure> {
    LineRate::from_mbps(mbps).map_err(|e| Failure::Usage(e.to_string()))
}

impl JobArgs {
    fn payload_len(&self) -> Result<usize, Failure> {
        let tag = if self.vlan { VLAN_TAG_LEN } else { 0 };
        let min = if self.vlan {
            MIN_PAYLOAD_TAGGED
        } else {
            MIN_PAYLOAD_UNTAGGED
        };
        let header = (FIXED_OVERHEAD - PREAMBLE_LEN - SFD_LEN - FCS_LEN + tag) as usize;
        let payload = match (self.size, self.payload) {
            (Some(size), _) => {
                let size = size as usize;
                if size < header + min || size > header + MAX_PAYLOAD {
                    return Err(Failure::Usage(format!(
                        "packet size {size} bytes outside {}..={} bytes",
                        header + min,
                        header + MAX_PAYLOAD
                    )));
                }
                size - header
            }
            (None, Some(p)) => p as usize,
            (None, None) => unreachable!("clap requires --size or --payload"),
        };
        if !(min..=MAX_PAYLOAD).contains(&payload) {
            return Err(Failure::Usage(format!(
                "payload {payload} bytes outside {min}..={MAX_PAYLOAD} bytes"
            )));
        }
        Ok(payload)
    }

    pub fn config(&self) -> Result<LoadConfig, Failure> {
        if !(self.load > 0.0 && self.load <= 100.0) {
            return Err(Failure::Usage(format!(
                "load {} % outside (0, 100]; 0 % would need an infinite gap",
                self.load
            )));
        }
        if self.frames == 0 {
            return Err(Failure::Usage("--frames must be at least 1".into()));
        }
        if self.vlan_id > 0x0fff || self.priority > 7 {
            return Err(Failure::Usage(
                "VLAN id must be < 4096 and priority < 8".into(),
            ));
        }
        let rate = rate(self.rate)?;
        let vlan = self
            .vlan
            .then(|| VlanTag::new(self.priority, false, self.vlan_id));
        let usage = |e: &dyn std::fmt::Display| Failure::Usage(e.to_string());
        let spec = FrameSpec::zeroed(
            self.dst,
            self.src,
            vlan,
            self.ethertype,
            self.payload_len()?,
        )
        .map_err(|e| usage(&e))?;
        let load = Load::from_percent(self.load).map_err(|e| usage(&e))?;
        LoadConfig::new(load, rate, self.frames, spec).map_err(|e| usage(&e))
    }

    /// `flag_<load>pct_<frames>f_<rate>M`
    pub fn stem(&self) -> String {
        format!("flag_{}pct_{}f_{}M", self.load, self.frames, self.rate)
    }
}
