use std::fmt::Write;

use super::ast::{NslProgram, Stmt, StmtKind, Value, WaitUnit};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub fn format_value(v: &Value) -> String {
    match v {
        Value::Int { value, hex: true } if *value >= 0 => format!("{value:#x}"),
        Value::Int { value, .. } => value.to_string(),
        Value::Decimal(d) => {
            let s = d.to_string();
            if s.contains('.') {
                s
            } else {
                format!("{s}.0")
            }
        }
        Value::Mac(m) => m.to_string(),
        Value::Str(s) => quote(s),
        Value::Ident(name) => name.clone(),
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let indent = "  ".repeat(depth);
    match &s.kind {
        StmtKind::OcbmWrite {
            port,
            register,
            value,
        } => {
            let _ = writeln!(
                out,
                "{indent}OCBM_WRITE {port} {register} {}",
                format_value(value)
            );
        }
        StmtKind::EthTxRxStart => {
            let _ = writeln!(out, "{indent}ETH_TXRX_START");
        }
        StmtKind::Loop { count, body } => {
            let _ = writeln!(out, "{indent}LOOP {}", format_value(count));
            for inner in body {
                stmt(out, inner, depth + 1);
            }
            let _ = writeln!(out, "{indent}END LOOP");
        }
        StmtKind::WaitFor { amount, unit } => {
            let unit = match unit {
                WaitUnit::Ticks => "TICKS",
                WaitUnit::Cycles => "CYCLES",
            };
            let _ = writeln!(out, "{indent}WAIT_FOR {} {unit}", format_value(amount));
        }
        StmtKind::ExitOnCheck {
            port,
            register,
            expected,
        } => {
            let _ = writeln!(
                out,
                "{indent}EXITONCHECK {port} {register} {}",
                format_value(expected)
            );
        }
        StmtKind::OcbmCheck {
            port,
            register,
            expected,
        } => {
            let _ = writeln!(
                out,
                "{indent}OCBM_CHECK {port} {register} {}",
                format_value(expected)
            );
        }
        StmtKind::EthTxRxStop => {
            let _ = writeln!(out, "{indent}ETH_TXRX_STOP");
        }
    }
}

/// Canonical text of a program: header first, then the statements with
/// loop bodies indented.
pub fn pretty_print(program: &NslProgram) -> String {
    let mut out = String::new();
    for r in &program.report {
        let _ = writeln!(out, "REPORT {}", quote(r));
    }
    for r in &program.refs {
        let _ = writeln!(out, "REF {}", quote(r));
    }
    for d in &program.defines {
        let _ = writeln!(out, "DEFINE {} {}", d.name, format_value(&d.value));
    }
    if !out.is_empty() {
        out.push('\n');
    }
    for s in &program.statements {
        stmt(&mut out, s, 0);
    }
    out
}
