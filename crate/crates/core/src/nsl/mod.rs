//! A register-programming test language with three phases: setup writes,
//! a timed execution block, and reporting checks.
//!
//! ```text
//! REPORT "PROFINET frames at half load"
//! DEFINE FRAMES 1000
//! OCBM_WRITE A PAYLOAD_SIZE 1500
//! OCBM_WRITE A INTERFRAME_GAP 1550.0
//! OCBM_WRITE A NUMBER_OF_FRAMES FRAMES
//! OCBM_WRITE A TR_CTRL 1
//! ETH_TXRX_START
//! LOOP 32
//!   WAIT_FOR 125000 TICKS
//!   EXITONCHECK A TRANSMITTER_STATE DONE
//! END LOOP
//! ETH_TXRX_STOP
//! OCBM_CHECK A FRAMES_SENT FRAMES
//! ```

use std::fmt;
use std::path::Path;

pub mod ast;
pub mod compile;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod script;

pub use ast::{NslProgram, Span, Stmt, StmtKind, Value};
pub use compile::compile;
pub use parser::{parse, COMMANDS};
pub use printer::pretty_print;
pub use script::generate_load_script;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NslError {
    pub span: Span,
    pub message: String,
}

impl NslError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        NslError {
            span,
            message: message.into(),
        }
    }

    /// `file:line:col: message`.
    pub fn with_file(&self, path: &Path) -> String {
        format!("{}:{}: {}", path.display(), self.span, self.message)
    }
}

impl fmt::Display for NslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for NslError {}

/// Parse and compile in one step.
pub fn load(text: &str) -> Result<crate::engine::RegisterProgram, NslError> {
    compile(&parse(text)?)
}
