//! Lowers a parsed program to a flat [`RegisterProgram`]: constants are
//! substituted, values are type-checked against the register map, loops
//! are unrolled and conditional exits become forward jumps.

use super::ast::{NslProgram, Span, Stmt, StmtKind, Value};
use super::NslError;
use crate::engine::registers::{rx_state_from_name, tx_state_from_name};
use crate::engine::{Op, RegValue, Register, RegisterProgram, ValueKind};
use crate::frame::MacAddress;

/// Upper bound on unrolled operations.
pub const MAX_OPS: usize = 5_000_000;

const MAX_DEFINE_DEPTH: usize = 16;

struct Compiler<'a> {
    program: &'a NslProgram,
    ops: Vec<Op>,
    /// Indices of `ExitIf` ops awaiting a target, one list per open scope.
    exits: Vec<Vec<usize>>,
}

fn parse_hex_bytes(s: &str) -> Option<Vec<u8>> {
    let digits: String = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ':')
        .collect();
    if !digits.len().is_multiple_of(2) {
        return None;
    }
    (0..digits.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&digits[i..i + 2], 16).ok())
        .collect()
}

impl<'a> Compiler<'a> {
    fn resolve(&self, value: &'a Value, span: Span) -> Result<&'a Value, NslError> {
        let mut v = value;
        for _ in 0..MAX_DEFINE_DEPTH {
            match v {
                Value::Ident(name) => match self.program.define(name) {
                    Some(d) => v = &d.value,
                    None => return Ok(v),
                },
                _ => return Ok(v),
            }
        }
        Err(NslError::new(span, "DEFINE chain too deep (cyclic?)"))
    }

    fn integer(&self, value: &'a Value, span: Span, what: &str) -> Result<i64, NslError> {
        match self.resolve(value, span)? {
            Value::Int { value, .. } => Ok(*value),
            Value::Ident(name) => Err(NslError::new(span, format!("undefined constant `{name}`"))),
            other => Err(NslError::new(
                span,
                format!("{what} must be an integer, got {other:?}"),
            )),
        }
    }

    fn register_value(
        &self,
        register: Register,
        value: &'a Value,
        span: Span,
    ) -> Result<RegValue, NslError> {
        let resolved = self.resolve(value, span)?;
        let mismatch = || {
            NslError::new(
                span,
                format!("value {resolved:?} does not fit register {register}"),
            )
        };
        let non_negative = |v: i64| u64::try_from(v).map_err(|_| mismatch());
        let kind = register.kind();
        if let Value::Ident(name) = resolved {
            let symbolic = match kind {
                ValueKind::TxState => tx_state_from_name(name).map(RegValue::Tx),
                ValueKind::RxState => rx_state_from_name(name).map(RegValue::Rx),
                ValueKind::Flag => match name.to_ascii_uppercase().as_str() {
                    "ENABLE" | "ENABLED" | "ON" => Some(RegValue::Int(1)),
                    "DISABLE" | "DISABLED" | "OFF" => Some(RegValue::Int(0)),
                    _ => None,
                },
                _ => None,
            };
            return symbolic
                .ok_or_else(|| NslError::new(span, format!("undefined constant `{name}`")));
        }
        match (kind, resolved) {
            (ValueKind::Flag, Value::Int { value, .. }) => {
                Ok(RegValue::Int(u64::from(non_negative(*value)? != 0)))
            }
            (ValueKind::Count, Value::Int { value, .. }) => {
                Ok(RegValue::Int(non_negative(*value)?))
            }
            (ValueKind::Gap, Value::Int { value, .. }) => {
                Ok(RegValue::Decimal(non_negative(*value)? as f64))
            }
            (ValueKind::Gap, Value::Decimal(d)) if *d >= 0.0 => Ok(RegValue::Decimal(*d)),
            (ValueKind::Mac, Value::Mac(m)) => Ok(RegValue::Mac(*m)),
            (ValueKind::Mac, Value::Int { value, .. }) if (0..1 << 48).contains(value) => {
                Ok(RegValue::Mac(MacAddress::from_u64(*value as u64)))
            }
            (ValueKind::Header, Value::Int { value, .. }) if (0..1 << 48).contains(value) => {
                Ok(RegValue::Int(*value as u64))
            }
            (ValueKind::Ethertype, Value::Int { value, .. }) if (0..=0xffff).contains(value) => {
                Ok(RegValue::Int(*value as u64))
            }
            (ValueKind::Bytes, Value::Str(s)) => parse_hex_bytes(s)
                .map(RegValue::Bytes)
                .ok_or_else(|| NslError::new(span, format!("`{s}` is not a hex byte string"))),
            _ => Err(mismatch()),
        }
    }

    fn emit(&mut self, op: Op) -> Result<(), NslError> {
        if self.ops.len() >= MAX_OPS {
            let line = match &op {
                Op::Write { line, .. }
                | Op::Start { line }
                | Op::Delay { line, .. }
                | Op::ExitIf { line, .. }
                | Op::Check { line, .. }
                | Op::Stop { line } => *line,
            };
            return Err(NslError::new(
                Span { line, col: 1 },
                format!("program unrolls to more than {MAX_OPS} operations"),
            ));
        }
        self.ops.push(op);
        Ok(())
    }

    fn patch_exits(&mut self, target: usize) {
        let pending = self.exits.pop().unwrap_or_default();
        for i in pending {
            if let Op::ExitIf { target: t, .. } = &mut self.ops[i] {
                *t = target;
            }
        }
    }

    fn statement(&mut self, stmt: &'a Stmt) -> Result<(), NslError> {
        let span = stmt.span;
        let line = span.line;
        match &stmt.kind {
            StmtKind::OcbmWrite {
                port,
                register,
                value,
            } => {
                if register.read_only() {
                    return Err(NslError::new(
                        span,
                        format!("register {register} is read-only"),
                    ));
                }
                let value = self.register_value(*register, value, span)?;
                self.emit(Op::Write {
                    port: *port,
                    register: *register,
                    value,
                    line,
                })
            }
            StmtKind::EthTxRxStart => {
                self.exits.push(Vec::new());
                self.emit(Op::Start { line })
            }
            StmtKind::Loop { count, body } => {
                let n = self.integer(count, span, "loop count")?;
                if n < 1 {
                    return Err(NslError::new(
                        span,
                        format!("loop count must be positive, got {n}"),
                    ));
                }
                self.exits.push(Vec::new());
                for _ in 0..n {
                    for s in body {
                        self.statement(s)?;
                    }
                }
                let after = self.ops.len();
                self.patch_exits(after);
                Ok(())
            }
            StmtKind::WaitFor { amount, .. } => {
                let ticks = self.integer(amount, span, "WAIT_FOR duration")?;
                if ticks <= 0 {
                    return Err(NslError::new(
                        span,
                        format!("WAIT_FOR duration must be positive, got {ticks}"),
                    ));
                }
                self.emit(Op::Delay {
                    ticks: ticks as u64,
                    line,
                })
            }
            StmtKind::ExitOnCheck {
                port,
                register,
                expected,
            } => {
                let expected = self.register_value(*register, expected, span)?;
                let index = self.ops.len();
                self.emit(Op::ExitIf {
                    port: *port,
                    register: *register,
                    expected,
                    target: usize::MAX,
                    line,
                })?;
                self.exits
                    .last_mut()
                    .expect("exit checks only parse inside the execution phase")
                    .push(index);
                Ok(())
            }
            StmtKind::OcbmCheck {
                port,
                register,
                expected,
            } => {
                let expected = self.register_value(*register, expected, span)?;
                self.emit(Op::Check {
                    port: *port,
                    register: *register,
                    expected,
                    line,
                })
            }
            StmtKind::EthTxRxStop => {
                let here = self.ops.len();
                self.patch_exits(here);
                self.emit(Op::Stop { line })
            }
        }
    }
}

pub fn compile(program: &NslProgram) -> Result<RegisterProgram, NslError> {
    let mut c = Compiler {
        program,
        ops: Vec::new(),
        exits: Vec::new(),
    };
    for s in &program.statements {
        c.statement(s)?;
    }
    Ok(RegisterProgram {
        description: program.report.clone(),
        refs: program.refs.clone(),
        ops: c.ops,
    })
}
