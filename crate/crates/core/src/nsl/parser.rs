use super::ast::{Define, NslProgram, Span, Stmt, StmtKind, Value, WaitUnit};
use super::lexer::{lex_line, lex_string, Token, TokenKind};
use super::NslError;
use crate::engine::{Port, Register};

/// Every command of the language, in table order.
pub const COMMANDS: [&str; 11] = [
    "REPORT",
    "DEFINE",
    "REF",
    "OCBM_WRITE",
    "ETH_TXRX_START",
    "LOOP",
    "WAIT_FOR",
    "EXITONCHECK",
    "END LOOP",
    "OCBM_CHECK",
    "ETH_TXRX_STOP",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Setup,
    Execution,
    Reporting,
}

struct OpenLoop {
    span: Span,
    count: Value,
    body: Vec<Stmt>,
}

struct Parser {
    program: NslProgram,
    phase: Phase,
    loops: Vec<OpenLoop>,
}

struct Line<'a> {
    tokens: &'a [Token],
    pos: usize,
    span: Span,
}

impl<'a> Line<'a> {
    fn next(&mut self, what: &str) -> Result<&'a Token, NslError> {
        let tok = self.tokens.get(self.pos).ok_or_else(|| {
            let col = self.tokens.last().map_or(self.span.col, |t| t.span.col + 1);
            NslError::new(
                Span {
                    line: self.span.line,
                    col,
                },
                format!("expected {what}"),
            )
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn finish(&self) -> Result<(), NslError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(NslError::new(t.span, "unexpected trailing argument")),
            None => Ok(()),
        }
    }

    fn port(&mut self) -> Result<(Port, Span), NslError> {
        let tok = self.next("port (A, B, C, D or L)")?;
        match &tok.kind {
            TokenKind::Word(w) => w
                .parse::<Port>()
                .map(|p| (p, tok.span))
                .map_err(|e| NslError::new(tok.span, e)),
            _ => Err(NslError::new(tok.span, "expected port (A, B, C, D or L)")),
        }
    }

    fn register(&mut self, port: Port) -> Result<Register, NslError> {
        let tok = self.next("register name")?;
        let TokenKind::Word(w) = &tok.kind else {
            return Err(NslError::new(tok.span, "expected register name"));
        };
        let reg = Register::from_name(w)
            .ok_or_else(|| NslError::new(tok.span, format!("unknown register `{w}`")))?;
        if !reg.valid_on(port) {
            return Err(NslError::new(
                tok.span,
                format!("register {reg} does not exist on port {port}"),
            ));
        }
        Ok(reg)
    }

    fn value(&mut self, what: &str) -> Result<Value, NslError> {
        let tok = self.next(what)?;
        Ok(match &tok.kind {
            TokenKind::Word(w) => Value::Ident(w.clone()),
            TokenKind::Value(v) => v.clone(),
        })
    }
}

/// Text argument of REPORT / REF: a quoted string or the raw rest of line.
fn text_argument(line: &str, after: usize, span: Span) -> Result<String, NslError> {
    let rest = &line[after..];
    let trimmed = rest.trim_start();
    let start = after + (rest.len() - trimmed.len());
    if trimmed.starts_with('"') {
        let (text, end) = lex_string(line, start, span)?;
        let tail = line[end..].trim_start();
        if !tail.is_empty() && !tail.starts_with('#') {
            return Err(NslError::new(span, "unexpected text after string"));
        }
        return Ok(text);
    }
    let text = trimmed.split('#').next().unwrap_or("").trim();
    if text.is_empty() {
        return Err(NslError::new(span, "expected text"));
    }
    Ok(text.to_string())
}

impl Parser {
    fn push(&mut self, stmt: Stmt) {
        match self.loops.last_mut() {
            Some(open) => open.body.push(stmt),
            None => self.program.statements.push(stmt),
        }
    }

    fn require_phase(&self, span: Span, command: &str, allowed: &[Phase]) -> Result<(), NslError> {
        if allowed.contains(&self.phase) {
            return Ok(());
        }
        let phase = match self.phase {
            Phase::Setup => "setup phase (before ETH_TXRX_START)",
            Phase::Execution => "execution phase",
            Phase::Reporting => "reporting phase (after ETH_TXRX_STOP)",
        };
        Err(NslError::new(
            span,
            format!("{command} not allowed in the {phase}"),
        ))
    }

    fn require_top_level(&self, span: Span, command: &str) -> Result<(), NslError> {
        match self.loops.last() {
            Some(open) => Err(NslError::new(
                span,
                format!("{command} inside LOOP opened at line {}", open.span.line),
            )),
            None => Ok(()),
        }
    }

    fn line(&mut self, raw: &str, line_no: u32) -> Result<(), NslError> {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(());
        }
        let cmd_start = raw.len() - trimmed.len();
        let cmd_end = trimmed
            .find(|c: char| c.is_whitespace() || c == '#' || c == '"')
            .map_or(raw.len(), |i| cmd_start + i);
        let span = Span {
            line: line_no,
            col: raw[..cmd_start].chars().count() as u32 + 1,
        };
        let command = raw[cmd_start..cmd_end].to_ascii_uppercase();

        match command.as_str() {
            "REPORT" | "REF" => {
                self.require_top_level(span, &command)?;
                let text = text_argument(raw, cmd_end, span)?;
                if command == "REPORT" {
                    self.program.report.push(text);
                } else {
                    self.program.refs.push(text);
                }
                return Ok(());
            }
            _ => {}
        }

        let tokens = lex_line(raw, line_no)?;
        let mut line = Line {
            tokens: &tokens,
            pos: 1,
            span,
        };
        match command.as_str() {
            "DEFINE" => {
                self.require_top_level(span, "DEFINE")?;
                let tok = line.next("constant name")?;
                let TokenKind::Word(name) = &tok.kind else {
                    return Err(NslError::new(tok.span, "expected constant name"));
                };
                if self.program.define(name).is_some() {
                    return Err(NslError::new(tok.span, format!("`{name}` defined twice")));
                }
                let value = line.value("constant value")?;
                line.finish()?;
                self.program.defines.push(Define {
                    name: name.clone(),
                    value,
                    span,
                });
            }
            "OCBM_WRITE" => {
                self.require_phase(span, "OCBM_WRITE", &[Phase::Setup, Phase::Execution])?;
                let (port, _) = line.port()?;
                let register = line.register(port)?;
                let value = line.value("value")?;
                line.finish()?;
                self.push(Stmt {
                    kind: StmtKind::OcbmWrite {
                        port,
                        register,
                        value,
                    },
                    span,
                });
            }
            "ETH_TXRX_START" => {
                self.require_phase(span, "ETH_TXRX_START", &[Phase::Setup])?;
                line.finish()?;
                self.phase = Phase::Execution;
                self.push(Stmt {
                    kind: StmtKind::EthTxRxStart,
                    span,
                });
            }
            "LOOP" => {
                self.require_phase(span, "LOOP", &[Phase::Execution])?;
                let count = line.value("loop count")?;
                line.finish()?;
                self.loops.push(OpenLoop {
                    span,
                    count,
                    body: Vec::new(),
                });
            }
            "WAIT_FOR" => {
                self.require_phase(span, "WAIT_FOR", &[Phase::Execution])?;
                let amount = line.value("delay")?;
                let tok = line.next("TICKS or CYCLES")?;
                let unit = match &tok.kind {
                    TokenKind::Word(w) if w.eq_ignore_ascii_case("TICKS") => WaitUnit::Ticks,
                    TokenKind::Word(w) if w.eq_ignore_ascii_case("CYCLES") => WaitUnit::Cycles,
                    _ => return Err(NslError::new(tok.span, "expected TICKS or CYCLES")),
                };
                line.finish()?;
                self.push(Stmt {
                    kind: StmtKind::WaitFor { amount, unit },
                    span,
                });
            }
            "EXITONCHECK" | "EXITONCHECKM" => {
                self.require_phase(span, "EXITONCHECK", &[Phase::Execution])?;
                let (port, _) = line.port()?;
                let register = line.register(port)?;
                let expected = line.value("expected value")?;
                line.finish()?;
                self.push(Stmt {
                    kind: StmtKind::ExitOnCheck {
                        port,
                        register,
                        expected,
                    },
                    span,
                });
            }
            "END" | "END_LOOP" | "ENDLOOP" => {
                if command == "END" {
                    match line.next("LOOP after END")? {
                        Token {
                            kind: TokenKind::Word(w),
                            ..
                        } if w.eq_ignore_ascii_case("LOOP") => {}
                        t => return Err(NslError::new(t.span, "expected LOOP after END")),
                    }
                }
                line.finish()?;
                let open = self
                    .loops
                    .pop()
                    .ok_or_else(|| NslError::new(span, "END LOOP without matching LOOP"))?;
                self.push(Stmt {
                    kind: StmtKind::Loop {
                        count: open.count,
                        body: open.body,
                    },
                    span: open.span,
                });
            }
            "OCBM_CHECK" => {
                self.require_phase(span, "OCBM_CHECK", &[Phase::Execution, Phase::Reporting])?;
                let (port, _) = line.port()?;
                let register = line.register(port)?;
                let expected = line.value("expected value")?;
                line.finish()?;
                self.push(Stmt {
                    kind: StmtKind::OcbmCheck {
                        port,
                        register,
                        expected,
                    },
                    span,
                });
            }
            "ETH_TXRX_STOP" => {
                self.require_phase(span, "ETH_TXRX_STOP", &[Phase::Execution])?;
                self.require_top_level(span, "ETH_TXRX_STOP")?;
                line.finish()?;
                self.phase = Phase::Reporting;
                self.push(Stmt {
                    kind: StmtKind::EthTxRxStop,
                    span,
                });
            }
            other => {
                return Err(NslError::new(span, format!("unknown command `{other}`")));
            }
        }
        Ok(())
    }
}

/// Parses a script into a phase-checked program.
pub fn parse(text: &str) -> Result<NslProgram, NslError> {
    let mut p = Parser {
        program: NslProgram::default(),
        phase: Phase::Setup,
        loops: Vec::new(),
    };
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i as u32 + 1;
        p.line(raw, last_line)?;
    }
    if let Some(open) = p.loops.last() {
        return Err(NslError::new(
            open.span,
            format!("LOOP opened at line {} is never closed", open.span.line),
        ));
    }
    let end = Span {
        line: last_line.max(1),
        col: 1,
    };
    match p.phase {
        Phase::Setup => Err(NslError::new(end, "missing ETH_TXRX_START")),
        Phase::Execution => Err(NslError::new(end, "missing ETH_TXRX_STOP")),
        Phase::Reporting => Ok(p.program),
    }
}
