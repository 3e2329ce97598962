//! Strategies producing well-formed programs for round-trip fuzzing.

use flag_core::engine::{Port, Register};
use flag_core::nsl::ast::{Define, NslProgram, Span, Stmt, StmtKind, Value, WaitUnit};
use flag_core::MacAddress;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[A-Z][A-Z0-9_]{0,8}"
}

pub fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-1_000_000i64..1_000_000).prop_map(Value::int),
        (0i64..1 << 48).prop_map(Value::hex),
        (-1e6f64..1e6).prop_map(Value::Decimal),
        any::<[u8; 6]>().prop_map(|b| Value::Mac(MacAddress(b))),
        "[ -~]{0,12}".prop_map(Value::Str),
        ident().prop_map(Value::Ident),
    ]
}

fn target() -> impl Strategy<Value = (Port, Register)> {
    let pairs: Vec<(Port, Register)> = [Port::A, Port::B, Port::C, Port::D, Port::L]
        .into_iter()
        .flat_map(|p| {
            Register::ALL
                .iter()
                .copied()
                .filter(move |r| r.valid_on(p))
                .map(move |r| (p, r))
        })
        .collect();
    prop::sample::select(pairs)
}

fn stmt(kind: StmtKind) -> Stmt {
    Stmt {
        kind,
        span: Span::default(),
    }
}

fn write() -> impl Strategy<Value = Stmt> {
    (target(), value()).prop_map(|((port, register), value)| {
        stmt(StmtKind::OcbmWrite {
            port,
            register,
            value,
        })
    })
}

fn check(exit: bool) -> impl Strategy<Value = Stmt> {
    (target(), value()).prop_map(move |((port, register), expected)| {
        stmt(if exit {
            StmtKind::ExitOnCheck {
                port,
                register,
                expected,
            }
        } else {
            StmtKind::OcbmCheck {
                port,
                register,
                expected,
            }
        })
    })
}

fn wait() -> impl Strategy<Value = Stmt> {
    (value(), any::<bool>()).prop_map(|(amount, ticks)| {
        stmt(StmtKind::WaitFor {
            amount,
            unit: if ticks {
                WaitUnit::Ticks
            } else {
                WaitUnit::Cycles
            },
        })
    })
}

fn execution_stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![write(), wait(), check(true), check(false)];
    leaf.prop_recursive(3, 24, 4, |inner| {
        (value(), prop::collection::vec(inner, 0..4))
            .prop_map(|(count, body)| stmt(StmtKind::Loop { count, body }))
    })
}

pub fn program() -> impl Strategy<Value = NslProgram> {
    (
        prop::collection::vec("[ -~]{0,20}", 0..3),
        prop::collection::vec("[ -~]{1,20}", 0..3),
        prop::collection::btree_map(ident(), value(), 0..4),
        prop::collection::vec(write(), 0..5),
        prop::collection::vec(execution_stmt(), 0..6),
        prop::collection::vec(check(false), 0..4),
    )
        .prop_map(|(report, refs, defines, setup, exec, checks)| {
            let mut statements = setup;
            statements.push(stmt(StmtKind::EthTxRxStart));
            statements.extend(exec);
            statements.push(stmt(StmtKind::EthTxRxStop));
            statements.extend(checks);
            NslProgram {
                report,
                refs,
                defines: defines
                    .into_iter()
                    .map(|(name, value)| Define {
                        name,
                        value,
                        span: Span::default(),
                    })
                    .collect(),
                statements,
            }
        })
}
