use std::fs;
use std::path::Path;

use anyhow::Context;
use flag_core::capture::{
    analyze_capture, format_seconds, read_pcap, report, write_pcap, CaptureSummary,
};
use flag_core::engine::{run, DeviceMode, Direction, Port, RunOptions};
use flag_core::nsl;
use flag_core::LoadConfig;

use crate::args::{rate, AnalyzeArgs, GenerateArgs, JobArgs, ScriptArgs};
use crate::{Failure, Outcome};

fn print_plan(c: &LoadConfig) -> Result<(), Failure> {
    let usage = |e: flag_core::load::LoadError| Failure::Usage(e.to_string());
    println!("load L: {} %", c.load.percent());
    println!("line rate R: {}", c.rate);
    println!("frames F: {}", c.frames);
    println!("frame size S: {} bytes", c.frame_size().map_err(usage)?);
    println!("load gap I_L: {} byte-times", c.load_gap().map_err(usage)?);
    println!(
        "frame time T_f: {}",
        format_seconds(c.frame_time().map_err(usage)?)
    );
    println!(
        "expected duration T: {}",
        format_seconds(c.duration().map_err(usage)?)
    );
    Ok(())
}

pub fn plan(a: &JobArgs) -> Result<Outcome, Failure> {
    print_plan(&a.config()?)?;
    Ok(Outcome::Pass)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(a: &GenerateArgs) -> Result<Outcome, Failure> {
    let config = a.job.config()?;
    print_plan(&config)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => {
            fs::create_dir_all(&a.output.out_dir)
                .with_context(|| format!("creating {}", a.output.out_dir.display()))?;
            a.output.out_dir.join(format!("{}.pcap", a.job.stem()))
        }
    };
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| out.with_extension("txt"));

    let script = nsl::generate_load_script(&config);
    if let Some(path) = &a.script {
        write_text(path, &script)?;
    }
    let program = nsl::load(&script).context("generated script does not compile")?;
    let result =
        run(&program, &RunOptions::scripting(config.rate), &[]).map_err(anyhow::Error::from)?;
    write_pcap(&result.tx_events(Port::A), &out)
        .with_context(|| format!("writing {}", out.display()))?;

    // Audit the file as written, not the in-memory events.
    let capture = read_pcap(&out).with_context(|| format!("reading back {}", out.display()))?;
    let events = capture.events(Port::A, Direction::Tx);
    let summary =
        analyze_capture(&capture, &events, config.rate).context("analysing generated capture")?;
    let rep = report(Some(&summary), Some(&config), Some(&result.report));
    write_text(&report_path, &rep.to_string())?;
    if let Some(path) = &a.json {
        write_text(
            path,
            &serde_json::to_string_pretty(&summary).context("encoding summary")?,
        )?;
    }
    println!("pcap: {}", out.display());
    println!("report: {}", report_path.display());
    println!();
    print!("{rep}");
    Ok(if rep.passed() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

pub fn run_script(a: &ScriptArgs) -> Result<Outcome, Failure> {
    let text = fs::read_to_string(&a.path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.path.display())))?;
    let program = nsl::parse(&text)
        .and_then(|p| nsl::compile(&p))
        .map_err(|e| Failure::Usage(e.with_file(&a.path)))?;
    let opts = RunOptions {
        mode: DeviceMode::Scripting,
        rate: rate(a.rate)?,
        links: a.links.clone(),
    };
    let result =
        run(&program, &opts, &[]).map_err(|e| anyhow::anyhow!("{}: {e}", a.path.display()))?;
    let events = result.tx_events(a.capture);
    if let Some(out) = &a.out {
        write_pcap(&events, out).with_context(|| format!("writing {}", out.display()))?;
    }
    let summary = (!events.is_empty())
        .then(|| flag_core::capture::analyze(&events, opts.rate))
        .transpose()
        .context("analysing capture")?;
    let rep = report(summary.as_ref(), None, Some(&result.report));
    for line in &program.description {
        println!("{line}");
    }
    if summary.is_none() {
        println!("no frames transmitted on port {}", a.capture);
    }
    print!("{rep}");
    if let Some(path) = &a.report {
        write_text(path, &rep.to_string())?;
    }
    Ok(if rep.passed() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn print_summary(s: &CaptureSummary) {
    println!("frames: {}", s.frames);
    match s.s {
        Some(size) => println!("frame size S: {size} bytes"),
        None => println!("frame size S: mixed"),
    }
    println!("first frame t0: {}", format_seconds(s.t0));
    println!("last frame t1: {}", format_seconds(s.t1));
    println!("achieved load (windowed): {:.4} %", s.achieved_load * 100.0);
    if let Some(l) = s.achieved_load_start_to_start {
        println!("achieved load (start-to-start): {:.4} %", l * 100.0);
    }
    if let Some(m) = s.mean_interarrival {
        println!("mean interarrival: {}", format_seconds(m));
    }
    println!("max interarrival jitter: {} ticks", s.max_jitter_ticks);
    println!("FCS errors: {}", s.fcs_errors);
    for note in &s.notes {
        println!("note: {note}");
    }
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Outcome, Failure> {
    let rate = rate(a.rate)?;
    let capture =
        read_pcap(&a.path).map_err(|e| Failure::Usage(format!("{}: {e}", a.path.display())))?;
    let events = capture.events(Port::A, Direction::Rx);
    let summary = analyze_capture(&capture, &events, rate)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.path.display())))?;
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?
        );
    } else {
        print_summary(&summary);
    }
    Ok(Outcome::Pass)
}
