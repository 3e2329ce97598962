use std::path::PathBuf;

use flag_core::capture::{analyze, report};
use flag_core::engine::{run, Port, RunOptions};
use flag_core::nsl;
use flag_core::LineRate;

fn script(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scripts")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn sample_load_script_passes() {
    let program = nsl::load(&script("sample_load.nsl")).unwrap();
    let result = run(&program, &RunOptions::scripting(LineRate::Fast), &[]).unwrap();
    let tx = result.tx_events(Port::A);
    assert_eq!(tx.len(), 1000);
    let summary = analyze(&tx, LineRate::Fast).unwrap();
    assert!((summary.achieved_load - 1.0).abs() < 1e-12);
    let rep = report(Some(&summary), None, Some(&result.report));
    assert!(rep.passed(), "{rep}");
    assert_eq!(result.report.checks.len(), 2);
    // Exits after the first poll at or past the end of the last frame.
    assert!(result.report.exits_taken >= 1);
}

#[test]
fn loopback_analyser_counts_matches() {
    let program = nsl::load(&script("loopback_analyser.nsl")).unwrap();
    let mut opts = RunOptions::scripting(LineRate::Fast);
    opts.links.push((Port::A, Port::B));
    let result = run(&program, &opts, &[]).unwrap();
    assert!(
        result.report.all_checks_passed(),
        "{:?}",
        result.report.checks
    );
    let summary = analyze(&result.tx_events(Port::A), LineRate::Fast).unwrap();
    assert!((summary.achieved_load - 0.5).abs() <= 1.0 / 200.0);
}

#[test]
fn loopback_without_link_fails_checks() {
    let program = nsl::load(&script("loopback_analyser.nsl")).unwrap();
    let result = run(&program, &RunOptions::scripting(LineRate::Fast), &[]).unwrap();
    assert!(!result.report.all_checks_passed());
}
