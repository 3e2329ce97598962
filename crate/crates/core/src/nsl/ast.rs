use std::fmt;

use crate::engine::{Port, Register};
use crate::frame::MacAddress;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int {
        value: i64,
        hex: bool,
    },
    Decimal(f64),
    Mac(MacAddress),
    Str(String),
    /// A DEFINE'd constant or a symbolic state (`DONE`, `HOLD`, ...).
    Ident(String),
}

impl Value {
    pub fn int(value: i64) -> Self {
        Value::Int { value, hex: false }
    }

    pub fn hex(value: i64) -> Self {
        Value::Int { value, hex: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitUnit {
    Ticks,
    Cycles,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    OcbmWrite {
        port: Port,
        register: Register,
        value: Value,
    },
    EthTxRxStart,
    Loop {
        count: Value,
        body: Vec<Stmt>,
    },
    WaitFor {
        amount: Value,
        unit: WaitUnit,
    },
    ExitOnCheck {
        port: Port,
        register: Register,
        expected: Value,
    },
    OcbmCheck {
        port: Port,
        register: Register,
        expected: Value,
    },
    EthTxRxStop,
}

/// A statement with its source position. Equality ignores the position so
/// that reformatted scripts compare equal.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Define {
    pub name: String,
    pub value: Value,
    pub span: Span,
}

impl PartialEq for Define {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

/// A parsed script. Header commands (REPORT, REF, DEFINE) are collected
/// into their own fields; `statements` holds the three phases in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NslProgram {
    pub report: Vec<String>,
    pub refs: Vec<String>,
    pub defines: Vec<Define>,
    pub statements: Vec<Stmt>,
}

impl NslProgram {
    pub fn define(&self, name: &str) -> Option<&Define> {
        self.defines.iter().find(|d| d.name == name)
    }
}
