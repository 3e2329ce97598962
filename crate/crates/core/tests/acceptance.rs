//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

mod common {
    pub mod nsl_gen;
}

use std::cell::Cell;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use flag_core::capture::{analyze, pcap, read_pcap, report, write_pcap};
use flag_core::engine::{
    run, DeviceMode, Direction, Monitor, MonitorConfig, Port, RunOptions, WireEvent,
};
use flag_core::frame::{serialize, FrameSpec, MacAddress, ETHERTYPE_PROFINET_RT};
use flag_core::load::{
    achieved_load, duration, frame_time, gap_schedule, load_gap, ticks_to_seconds,
};
use flag_core::nsl::{self, parse, pretty_print, COMMANDS};
use flag_core::{LineRate, Load, LoadConfig};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOAD_GAP_BUDGET: Duration = Duration::from_millis(1);
const DURATION_TOL_S: f64 = 1e-4;
const REFERENCE_T_HALF: f64 = 7.8012;
const T_FULL: f64 = 4.12307;
/// Last-frame timestamp of the reference full-load capture, printed to 0.1 ms.
const CAPTURED_LAST_FRAME_FULL: f64 = 4.1229;
const READING_RESOLUTION: f64 = 1e-4;
const OSC_BAND: (f64, f64) = (0.99, 1.01);
const ROUND_TRIP_JOBS: usize = 200;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(60);
const DETERMINISM_BUDGET: Duration = Duration::from_secs(10);
const QUANTIZATION_CASES: u32 = 1000;
const FUZZED_SCRIPTS: u32 = 100;
const MONITOR_SLOTS: u64 = 4;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(payload: usize) -> FrameSpec {
    FrameSpec::zeroed(
        MacAddress::BROADCAST,
        MacAddress([2, 0, 0, 0, 0, 1]),
        None,
        ETHERTYPE_PROFINET_RT,
        payload,
    )
    .unwrap()
}

fn config(load: f64, payload: usize, frames: u64, rate: LineRate) -> LoadConfig {
    LoadConfig::new(Load::new(load).unwrap(), rate, frames, spec(payload)).unwrap()
}

fn simulate(c: &LoadConfig) -> Result<Vec<WireEvent>, String> {
    let program = nsl::load(&nsl::generate_load_script(c)).map_err(|e| e.to_string())?;
    let result = run(&program, &RunOptions::scripting(c.rate), &[]).map_err(|e| e.to_string())?;
    if !result.report.all_checks_passed() {
        return Err(format!("script checks failed: {:?}", result.report.checks));
    }
    Ok(result.tx_events(Port::A))
}

/// Seeded runner so every invocation checks the same cases.
fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn c1_load_gap() -> Outcome {
    let start = Instant::now();
    let full = load_gap(1526, 1.0).map_err(|e| e.to_string())?;
    let half = load_gap(1526, 0.5).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(full == 12.0, || {
        format!("I_L(1526, 1.0) = {full}, expected 12")
    })?;
    ensure(half == 1550.0, || {
        format!("I_L(1526, 0.5) = {half}, expected 1550")
    })?;
    ensure(elapsed < LOAD_GAP_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("I_L = {full} and {half} byte-times in {elapsed:?}"))
}

fn c2_duration() -> Outcome {
    let half = duration(1526, 31_702, 0.5, LineRate::Fast).map_err(|e| e.to_string())?;
    let full = duration(1526, 33_510, 1.0, LineRate::Fast).map_err(|e| e.to_string())?;
    ensure((half - REFERENCE_T_HALF).abs() <= DURATION_TOL_S, || {
        format!("T(50%) = {half}")
    })?;
    ensure((full - T_FULL).abs() <= DURATION_TOL_S, || {
        format!("T(100%) = {full}")
    })?;

    let tf = frame_time(1526, LineRate::Fast).map_err(|e| e.to_string())?;
    let events = simulate(&config(1.0, 1500, 33_510, LineRate::Fast))?;
    let t1 = events.last().map(WireEvent::seconds).ok_or("no frames")?;
    // Exact comparison in ticks: the last frame starts one slot before T.
    let t_ticks = 33_510u64 * 15_380;
    let t1_ticks = events.last().unwrap().timestamp;
    ensure(t_ticks - t1_ticks <= 15_380, || {
        format!("simulated t1 = {t1} s")
    })?;
    // The reference capture timestamp is printed to 0.1 ms; the reading stands
    // for any time in [4.1229, 4.1230) s.
    let reading = (
        CAPTURED_LAST_FRAME_FULL,
        CAPTURED_LAST_FRAME_FULL + READING_RESOLUTION,
    );
    let nearest = full.clamp(reading.0, reading.1);
    ensure((full - nearest).abs() <= tf, || {
        format!("reference reading {CAPTURED_LAST_FRAME_FULL} s is more than T_f from T = {full}")
    })?;
    ensure(t1 >= reading.0 && t1 < reading.1, || {
        format!("simulated t1 = {t1:.7} s does not read as {CAPTURED_LAST_FRAME_FULL} s")
    })?;
    Ok(format!(
        "T = {half:.5} s and {full:.5} s; simulated last frame {t1:.7} s = T - T_f; \
         reference reading {CAPTURED_LAST_FRAME_FULL} s (raw distance to T {:.1} µs, T_f {:.2} µs)",
        (full - CAPTURED_LAST_FRAME_FULL) * 1e6,
        tf * 1e6
    ))
}

fn c3_frame_time() -> Outcome {
    let tf = frame_time(1526, LineRate::Fast).map_err(|e| e.to_string())?;
    ensure(tf == 123.04e-6, || format!("T_f = {tf}"))?;
    Ok(format!("T_f = {:.2} µs", tf * 1e6))
}

fn c4_oscilloscope() -> Outcome {
    let l = achieved_load(1526, 624, 0.0, 0.076653, LineRate::Fast).map_err(|e| e.to_string())?;
    ensure(l >= OSC_BAND.0 && l <= OSC_BAND.1, || format!("load {l}"))?;
    Ok(format!("achieved load {:.4} %", l * 100.0))
}

fn c5_round_trip() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for job in 0..ROUND_TRIP_JOBS {
        let load = rng.random_range(0.05..=1.0);
        let s: u32 = rng.random_range(72..=1526);
        let frames = rng.random_range(10..=5000);
        let rate = if rng.random_bool(0.5) {
            LineRate::Fast
        } else {
            LineRate::Gigabit
        };
        let c = config(load, (s - 26) as usize, frames, rate);
        let path = dir.path().join(format!("job{job}.pcap"));
        write_pcap(&simulate(&c)?, &path).map_err(|e| e.to_string())?;
        let events = read_pcap(&path)
            .map_err(|e| e.to_string())?
            .events(Port::A, Direction::Tx);
        let summary = analyze(&events, rate).map_err(|e| e.to_string())?;
        let err = (summary.achieved_load - load).abs();
        let tol = c.load_tolerance();
        ensure(summary.frames == frames, || {
            format!("job {job}: {} frames", summary.frames)
        })?;
        ensure(err <= tol, || {
            format!(
                "job {job}: L={load} S={s} F={frames} {rate}: achieved {}",
                summary.achieved_load
            )
        })?;
        worst = worst.max(err / tol);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < ROUND_TRIP_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{ROUND_TRIP_JOBS} jobs in {:.1} s, worst error {:.3} of tolerance",
        elapsed.as_secs_f64(),
        worst
    ))
}

fn c6_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = config(1.0, 1500, 33_510, LineRate::Fast);
    let mut files = Vec::new();
    for i in 0..2 {
        let start = Instant::now();
        let path = dir.path().join(format!("run{i}.pcap"));
        write_pcap(&simulate(&c)?, &path).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure(elapsed < DETERMINISM_BUDGET, || {
            format!("run {i} took {elapsed:?}")
        })?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "pcaps differ".into())?;
    Ok(format!("two runs, {} identical bytes each", files[0].len()))
}

fn c7_quantization() -> Outcome {
    let mut runner = runner(QUANTIZATION_CASES);
    let strategy = (
        0.05f64..=1.0,
        46usize..=1500,
        1u64..=600,
        proptest::bool::ANY,
    );
    let worst_sum = Cell::new(0.0f64);
    let worst_jitter = Cell::new(0.0f64);
    runner
        .run(&strategy, |(load, payload, frames, gigabit)| {
            let rate = if gigabit {
                LineRate::Gigabit
            } else {
                LineRate::Fast
            };
            let c = config(load, payload, frames, rate);
            let plan = gap_schedule(&c).unwrap();
            let sum: u64 = plan.gap_ticks.iter().sum();
            let err = (sum as f64 - frames as f64 * plan.nominal_ticks).abs();
            if err >= 1.0 {
                return Err(TestCaseError::fail(format!("sum error {err} ticks")));
            }
            let summary = analyze(&simulate(&c).map_err(TestCaseError::fail)?, rate).unwrap();
            if summary.max_jitter_ticks > 1.0 {
                return Err(TestCaseError::fail(format!(
                    "jitter {} ticks",
                    summary.max_jitter_ticks
                )));
            }
            worst_sum.set(worst_sum.get().max(err));
            worst_jitter.set(worst_jitter.get().max(summary.max_jitter_ticks));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{QUANTIZATION_CASES} cases: max |sum - F*nominal| {:.3} ticks, max jitter {:.3} ticks",
        worst_sum.get(),
        worst_jitter.get()
    ))
}

fn c8_nsl() -> Outcome {
    let all = "REPORT \"all commands\"\nREF \"table\"\nDEFINE N 2\nOCBM_WRITE A TR_CTRL 1\n\
               ETH_TXRX_START\nLOOP N\nWAIT_FOR 10 TICKS\nEXITONCHECK A TRANSMITTER_STATE DONE\n\
               END LOOP\nETH_TXRX_STOP\nOCBM_CHECK A TRANSMITTER_STATE DONE\n";
    let printed = pretty_print(&parse(all).map_err(|e| e.to_string())?);
    for command in COMMANDS {
        ensure(printed.contains(command), || format!("{command} lost"))?;
    }

    let mut runner = runner(FUZZED_SCRIPTS);
    runner
        .run(&common::nsl_gen::program(), |p| {
            let text = pretty_print(&p);
            let back = parse(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if back != p || pretty_print(&back) != text {
                return Err(TestCaseError::fail(format!("round trip changed\n{text}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let text = std::fs::read_to_string(manifest_path("scripts/sample_load.nsl"))
        .map_err(|e| e.to_string())?;
    let program = nsl::load(&text).map_err(|e| e.to_string())?;
    let result =
        run(&program, &RunOptions::scripting(LineRate::Fast), &[]).map_err(|e| e.to_string())?;
    let summary = analyze(&result.tx_events(Port::A), LineRate::Fast).map_err(|e| e.to_string())?;
    let rep = report(Some(&summary), None, Some(&result.report));
    ensure(rep.passed(), || format!("sample report failed:\n{rep}"))?;
    Ok(format!(
        "{} commands, {FUZZED_SCRIPTS} fuzzed round trips, sample script PASS ({} checks)",
        COMMANDS.len(),
        result.report.checks.len()
    ))
}

fn c9_monitor() -> Outcome {
    let frame = serialize(&spec(46)).unwrap();
    for burst in 5..=9u64 {
        let mut m = Monitor::new(MonitorConfig::default(), LineRate::Fast);
        let forwarded = (0..burst)
            .filter(|_| {
                m.feed(&WireEvent::new(0, Port::A, Direction::Rx, frame.clone()))
                    .forwarded
                    .is_some()
            })
            .count() as u64;
        ensure(
            forwarded == MONITOR_SLOTS && m.drops() == burst - MONITOR_SLOTS,
            || {
                format!(
                    "burst {burst}: {forwarded} forwarded, {} dropped",
                    m.drops()
                )
            },
        )?;
    }
    // Same through the device: five frames arriving together in transparent mode.
    let external: Vec<WireEvent> = [Port::A, Port::B, Port::C, Port::D, Port::A]
        .into_iter()
        .map(|p| WireEvent::new(0, p, Direction::Rx, frame.clone()))
        .collect();
    let opts = RunOptions {
        mode: DeviceMode::Transparent,
        rate: LineRate::Fast,
        links: Vec::new(),
    };
    let program = nsl::load("ETH_TXRX_START\nETH_TXRX_STOP\n").map_err(|e| e.to_string())?;
    let result = run(&program, &opts, &external).map_err(|e| e.to_string())?;
    let on_l = result.events.iter().filter(|e| e.port == Port::L).count() as u64;
    ensure(
        on_l == MONITOR_SLOTS && result.report.monitor_drops == 1,
        || {
            format!(
                "device: {on_l} on L, {} dropped",
                result.report.monitor_drops
            )
        },
    )?;
    Ok("bursts of 5..9 keep 4 frames, drops counted; device run agrees".into())
}

fn c10_fixtures() -> Outcome {
    let reference = std::fs::read(manifest_path("tests/fixtures/reference_ns.pcap"))
        .map_err(|e| e.to_string())?;
    let events: Vec<WireEvent> = [
        (0u64, 0x00u8, 46usize),
        (15_380, 0xa5, 1500),
        (187_500_001, 0x5a, 100),
    ]
    .into_iter()
    .map(|(tick, fill, len)| {
        let mut s = spec(len);
        s.payload.fill(fill);
        WireEvent::new(tick, Port::A, Direction::Tx, serialize(&s).unwrap())
    })
    .collect();
    let ours = pcap::encode(&events).map_err(|e| e.to_string())?;
    ensure(ours == reference, || {
        "writer output differs from reference_ns.pcap".into()
    })?;
    let foreign = read_pcap(&manifest_path("tests/fixtures/reference_us_be.pcap"))
        .map_err(|e| e.to_string())?;
    let back = foreign.events(Port::A, Direction::Tx);
    ensure(back.len() == events.len(), || "frame count differs".into())?;
    for (a, b) in back.iter().zip(&events) {
        ensure(a.frame.bytes == b.frame.bytes, || {
            "frame bytes differ".into()
        })?;
        ensure(a.timestamp / 125 == b.timestamp / 125, || {
            format!(
                "timestamp {} vs {}",
                ticks_to_seconds(a.timestamp),
                ticks_to_seconds(b.timestamp)
            )
        })?;
    }
    Ok(format!(
        "{} bytes identical to the reference; big-endian µs reference read back",
        ours.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("load-gap reproduction", c1_load_gap),
        ("duration reproduction", c2_duration),
        ("per-frame time", c3_frame_time),
        ("oscilloscope check", c4_oscilloscope),
        ("end-to-end round trip", c5_round_trip),
        ("engine determinism", c6_determinism),
        ("quantization property", c7_quantization),
        ("NSL coverage", c8_nsl),
        ("monitor property", c9_monitor),
        ("pcap fixtures", c10_fixtures),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
