//! Textual front-end for car position diagrams.
//!
//! The format is line-oriented, one statement per line, `#` to end of line
//! for comments:
//!
//! ```text
//! model overtake
//! lane Left, Right
//! box LCar.0 in Left at 0
//! box LCar.1 in Left at ?
//! init LCar.0
//! trans LCar.0 -> LCar.1 when exists RCar.1 else -> LCar.2
//! sync { LCar.0 -> LCar.1, RCar.0 -> RCar.1 }
//! constraint pos(LCar.1) < pos(RCar.1)
//! ```
//!
//! Statements may appear in any order; references are resolved after the
//! whole file is read. `else ->` is sugar: the primary edge keeps its guard
//! and the alternative edge gets the complementary guard on the same box.

use std::fmt;

use crate::model::{
    validate_model, BoxId, Model, Position, RawGuard, RawModel, Rel,
};

/// Location of a token in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntactic,
    Reference,
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub kind: ErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}",
            self.span.line, self.span.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u32),
    Dot,
    Comma,
    Arrow,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Lt,
    Le,
    Eq,
    Question,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Question => f.write_str("`?`"),
        }
    }
}

fn lex_line(line: &str, line_no: u32) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let col = (i + 1) as u32;
        let span1 = SourceSpan {
            line: line_no,
            column: col,
            length: 1,
        };
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push((
                    Tok::Ident(word),
                    SourceSpan {
                        line: line_no,
                        column: col,
                        length: (i - start) as u32,
                    },
                ));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let span = SourceSpan {
                    line: line_no,
                    column: col,
                    length: (i - start) as u32,
                };
                let n: u32 = text.parse().map_err(|_| ParseError {
                    span,
                    message: format!("number `{text}` out of range"),
                    kind: ErrorKind::Lexical,
                })?;
                out.push((Tok::Number(n), span));
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((
                    Tok::Arrow,
                    SourceSpan {
                        line: line_no,
                        column: col,
                        length: 2,
                    },
                ));
                i += 2;
            }
            '<' if chars.get(i + 1) == Some(&'=') => {
                out.push((
                    Tok::Le,
                    SourceSpan {
                        line: line_no,
                        column: col,
                        length: 2,
                    },
                ));
                i += 2;
            }
            '.' => {
                out.push((Tok::Dot, span1));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, span1));
                i += 1;
            }
            '{' => {
                out.push((Tok::LBrace, span1));
                i += 1;
            }
            '}' => {
                out.push((Tok::RBrace, span1));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, span1));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, span1));
                i += 1;
            }
            '<' => {
                out.push((Tok::Lt, span1));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, span1));
                i += 1;
            }
            '?' => {
                out.push((Tok::Question, span1));
                i += 1;
            }
            other => {
                return Err(ParseError {
                    span: span1,
                    message: format!("unexpected character `{other}`"),
                    kind: ErrorKind::Lexical,
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct LineParser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    line: u32,
    line_len: u32,
}

impl LineParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> SourceSpan {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .unwrap_or(SourceSpan {
                line: self.line,
                column: self.line_len.max(1),
                length: 1,
            })
    }

    fn err(&self, message: String) -> ParseError {
        ParseError {
            span: self.here(),
            message,
            kind: ErrorKind::Syntactic,
        }
    }

    fn bump(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<SourceSpan, ParseError> {
        match self.bump() {
            Some((t, s)) if t == want => Ok(s),
            Some((t, s)) => Err(ParseError {
                span: s,
                message: format!("expected {want}, found {t}"),
                kind: ErrorKind::Syntactic,
            }),
            None => Err(self.err(format!("expected {want}, found end of line"))),
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.bump() {
            Some((Tok::Ident(s), sp)) => Ok((s, sp)),
            Some((t, s)) => Err(ParseError {
                span: s,
                message: format!("expected identifier, found {t}"),
                kind: ErrorKind::Syntactic,
            }),
            None => Err(self.err("expected identifier, found end of line".into())),
        }
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match self.bump() {
            Some((Tok::Number(n), _)) => Ok(n),
            Some((t, s)) => Err(ParseError {
                span: s,
                message: format!("expected number, found {t}"),
                kind: ErrorKind::Syntactic,
            }),
            None => Err(self.err("expected number, found end of line".into())),
        }
    }

    /// `Car.idx`
    fn box_ref(&mut self) -> Result<(BoxId, SourceSpan), ParseError> {
        let (car, span) = self.ident()?;
        self.expect(Tok::Dot)?;
        let idx = self.number()?;
        Ok((BoxId::new(&car, idx), span))
    }

    fn end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected {t} after statement"))),
        }
    }
}

fn parse_statement(p: &mut LineParser, raw: &mut RawModel) -> Result<(), ParseError> {
    let (kw, kw_span) = p.ident()?;
    match kw.as_str() {
        "model" => {
            let (name, _) = p.ident()?;
            p.end()?;
            raw.name = name;
        }
        "lane" => loop {
            let (name, span) = p.ident()?;
            raw.lanes.push(crate::model::RawLane {
                name,
                span: Some(span),
            });
            match p.peek() {
                Some(Tok::Comma) => {
                    p.bump();
                }
                None => break,
                Some(_) => return p.end(),
            }
        },
        "box" => {
            let (id, span) = p.box_ref()?;
            let (in_kw, in_span) = p.ident()?;
            if in_kw != "in" {
                return Err(ParseError {
                    span: in_span,
                    message: format!("expected `in`, found `{in_kw}`"),
                    kind: ErrorKind::Syntactic,
                });
            }
            let (lane, _) = p.ident()?;
            let pos = match p.peek() {
                Some(Tok::Ident(w)) if w == "at" => {
                    p.bump();
                    match p.peek() {
                        Some(Tok::Question) => {
                            p.bump();
                            Some(Position::Parametric)
                        }
                        _ => Some(Position::Concrete(p.number()?)),
                    }
                }
                _ => None,
            };
            p.end()?;
            raw.boxes.push(crate::model::RawBox {
                id,
                lane,
                pos,
                span: Some(span),
            });
        }
        "init" => {
            let (id, span) = p.box_ref()?;
            p.end()?;
            raw.initial.push(crate::model::RawInit {
                box_id: id,
                span: Some(span),
            });
        }
        "trans" => {
            let (src, span) = p.box_ref()?;
            p.expect(Tok::Arrow)?;
            let (dst, _) = p.box_ref()?;
            let mut guard = RawGuard::None;
            if let Some(Tok::Ident(w)) = p.peek() {
                if w == "when" {
                    p.bump();
                    let (mode, mode_span) = p.ident()?;
                    let (cond, _) = p.box_ref()?;
                    guard = match mode.as_str() {
                        "exists" => RawGuard::Exists(cond),
                        "absent" => RawGuard::Absent(cond),
                        other => {
                            return Err(ParseError {
                                span: mode_span,
                                message: format!(
                                    "expected `exists` or `absent`, found `{other}`"
                                ),
                                kind: ErrorKind::Syntactic,
                            })
                        }
                    };
                }
            }
            let mut alt = None;
            if let Some(Tok::Ident(w)) = p.peek() {
                if w == "else" {
                    let else_span = p.here();
                    p.bump();
                    p.expect(Tok::Arrow)?;
                    let (alt_dst, _) = p.box_ref()?;
                    if guard == RawGuard::None {
                        return Err(ParseError {
                            span: else_span,
                            message: "`else ->` requires a `when` guard".into(),
                            kind: ErrorKind::Syntactic,
                        });
                    }
                    alt = Some(alt_dst);
                }
            }
            p.end()?;
            raw.transitions.push(crate::model::RawTransition {
                src: src.clone(),
                dst,
                guard: guard.clone(),
                span: Some(span),
            });
            if let Some(alt_dst) = alt {
                // Complementary guard on the same condition box.
                let flipped = match guard {
                    RawGuard::Exists(b) => RawGuard::Absent(b),
                    RawGuard::Absent(b) => RawGuard::Exists(b),
                    RawGuard::None => unreachable!(),
                };
                raw.transitions.push(crate::model::RawTransition {
                    src,
                    dst: alt_dst,
                    guard: flipped,
                    span: Some(span),
                });
            }
        }
        "sync" => {
            p.expect(Tok::LBrace)?;
            let mut members = Vec::new();
            loop {
                let (src, _) = p.box_ref()?;
                p.expect(Tok::Arrow)?;
                let (dst, _) = p.box_ref()?;
                members.push((src, dst));
                match p.bump() {
                    Some((Tok::Comma, _)) => continue,
                    Some((Tok::RBrace, _)) => break,
                    Some((t, s)) => {
                        return Err(ParseError {
                            span: s,
                            message: format!("expected `,` or `}}`, found {t}"),
                            kind: ErrorKind::Syntactic,
                        })
                    }
                    None => {
                        return Err(p.err("expected `,` or `}`, found end of line".into()))
                    }
                }
            }
            p.end()?;
            raw.syncs.push(crate::model::RawSync {
                members,
                span: Some(kw_span),
            });
        }
        "constraint" => {
            let pos_operand = |p: &mut LineParser| -> Result<BoxId, ParseError> {
                let (kw, span) = p.ident()?;
                if kw != "pos" {
                    return Err(ParseError {
                        span,
                        message: format!("expected `pos`, found `{kw}`"),
                        kind: ErrorKind::Syntactic,
                    });
                }
                p.expect(Tok::LParen)?;
                let (b, _) = p.box_ref()?;
                p.expect(Tok::RParen)?;
                Ok(b)
            };
            let lhs = pos_operand(p)?;
            let rel = match p.bump() {
                Some((Tok::Lt, _)) => Rel::Lt,
                Some((Tok::Le, _)) => Rel::Le,
                Some((Tok::Eq, _)) => Rel::Eq,
                Some((t, s)) => {
                    return Err(ParseError {
                        span: s,
                        message: format!("expected `<`, `<=` or `=`, found {t}"),
                        kind: ErrorKind::Syntactic,
                    })
                }
                None => return Err(p.err("expected relation, found end of line".into())),
            };
            let rhs = pos_operand(p)?;
            p.end()?;
            raw.constraints.push(crate::model::RawConstraint {
                lhs,
                rel,
                rhs,
                span: Some(kw_span),
            });
        }
        other => {
            return Err(ParseError {
                span: kw_span,
                message: format!("unknown statement `{other}`"),
                kind: ErrorKind::Syntactic,
            })
        }
    }
    Ok(())
}

/// Parse source text into a raw model, collecting every statement error.
pub fn parse_raw(text: &str) -> (RawModel, Vec<ParseError>) {
    let mut raw = RawModel::default();
    let mut errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let line_no = (idx + 1) as u32;
        let toks = match lex_line(line, line_no) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line_len: line.chars().count() as u32,
            toks,
            pos: 0,
            line: line_no,
        };
        if let Err(e) = parse_statement(&mut p, &mut raw) {
            errors.push(e);
        }
    }
    (raw, errors)
}

/// Parse and validate. Returns a compiled model only if the text is both
/// syntactically clean and reference-closed.
pub fn parse(text: &str) -> Result<Model, Vec<ParseError>> {
    let (raw, mut errors) = parse_raw(text);
    let report = validate_model(&raw);
    for d in report.errors {
        errors.push(ParseError {
            span: d.span.unwrap_or(SourceSpan {
                line: 1,
                column: 1,
                length: 1,
            }),
            message: d.message,
            kind: ErrorKind::Reference,
        });
    }
    if errors.is_empty() {
        Ok(Model::compile(&raw).expect("validated model compiles"))
    } else {
        Err(errors)
    }
}

/// Canonical text for a model: sorted cars, boxes by index, stable
/// transition and constraint order, LF line endings, positions explicit.
/// `parse(serialize(m))` is structurally identical to `m`.
pub fn serialize(m: &Model) -> String {
    let mut out = String::new();
    if !m.name().is_empty() {
        out.push_str(&format!("model {}\n", m.name()));
    }
    if !m.lanes().is_empty() {
        out.push_str(&format!("lane {}\n", m.lanes().join(", ")));
    }
    for b in 0..m.num_boxes() {
        let info = m.box_info(b);
        let pos = match info.pos {
            crate::model::Position::Concrete(p) => format!("at {p}"),
            crate::model::Position::Parametric => "at ?".to_string(),
        };
        out.push_str(&format!(
            "box {} in {} {}\n",
            m.box_id(b),
            m.lane_name(info.lane),
            pos
        ));
    }
    for c in 0..m.num_cars() {
        out.push_str(&format!("init {}\n", m.box_id(m.initial_box(c))));
    }
    for t in m.transitions() {
        let mut line = format!("trans {} -> {}", m.box_id(t.src), m.box_id(t.dst));
        match t.guard {
            crate::model::Guard::None => {}
            crate::model::Guard::Exists(b) => {
                line.push_str(&format!(" when exists {}", m.box_id(b)))
            }
            crate::model::Guard::Absent(b) => {
                line.push_str(&format!(" when absent {}", m.box_id(b)))
            }
        }
        line.push('\n');
        out.push_str(&line);
    }
    for g in m.syncs() {
        let members: Vec<String> = g
            .iter()
            .map(|&ti| {
                let t = &m.transitions()[ti];
                format!("{} -> {}", m.box_id(t.src), m.box_id(t.dst))
            })
            .collect();
        out.push_str(&format!("sync {{ {} }}\n", members.join(", ")));
    }
    for c in m.constraints() {
        out.push_str(&format!(
            "constraint pos({}) {} pos({})\n",
            m.box_id(c.lhs),
            c.rel,
            m.box_id(c.rhs)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    const FIG2: &str = "\
model fig2
lane Left, Right
box LCar.0 in Left at 0
box LCar.1 in Left at 1
box LCar.2 in Left at 2
box RCar.0 in Right at 0
box RCar.1 in Right at 1
box RCar.2 in Right at 2
init LCar.0
init RCar.0
trans LCar.0 -> LCar.1
trans LCar.1 -> LCar.2
trans RCar.0 -> RCar.1
trans RCar.1 -> RCar.2
";

    #[test]
    fn parses_fig2() {
        let m = parse(FIG2).unwrap();
        assert_eq!(m.num_cars(), 2);
        assert_eq!(m.num_boxes(), 6);
        assert_eq!(m.transitions().len(), 4);
        assert!(m.syncs().is_empty());
        assert_eq!(m, crate::model::Model::compile(&families::fig2()).unwrap());
    }

    #[test]
    fn else_desugars_to_two_guarded_transitions() {
        let text = "\
model sugar
lane Left, Right
box EgoCar.0 in Left at 0
box EgoCar.1 in Right at 1
box EgoCar.7 in Left at 1
box RCar.1 in Right at 0
init EgoCar.0
init RCar.1
trans EgoCar.0 -> EgoCar.1 when exists RCar.1 else -> EgoCar.7
";
        let m = parse(text).unwrap();
        assert_eq!(m.transitions().len(), 2);
        let guards: Vec<_> = m.transitions().iter().map(|t| t.guard).collect();
        let cond = m.find_box(&BoxId::new("RCar", 1)).unwrap();
        assert!(guards.contains(&crate::model::Guard::Exists(cond)));
        assert!(guards.contains(&crate::model::Guard::Absent(cond)));
    }

    #[test]
    fn cross_car_transition_is_a_reference_error() {
        let text = "\
lane L
box A.0 in L
box B.1 in L
init A.0
init B.1
trans A.0 -> B.1
";
        let errs = parse(text).unwrap_err();
        assert!(errs.iter().any(|e| e.kind == ErrorKind::Reference));
    }

    #[test]
    fn errors_carry_spans_inside_input() {
        let text = "box LCar.0 at\ntrans LCar.0 ->\n";
        let errs = parse(text).unwrap_err();
        assert!(!errs.is_empty());
        let lines: Vec<&str> = text.lines().collect();
        for e in errs {
            let line = lines[(e.span.line - 1) as usize];
            assert!(e.span.column as usize <= line.chars().count() + 1);
        }
    }

    #[test]
    fn error_recovery_reports_every_bad_statement() {
        let text = "\
lane L
box A.0 in L
bogus one
init A.0
also bad
";
        let errs = parse(text).unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn crlf_accepted() {
        let crlf = FIG2.replace('\n', "\r\n");
        assert_eq!(parse(&crlf).unwrap(), parse(FIG2).unwrap());
    }

    #[test]
    fn roundtrip_fixpoint_on_fig2() {
        let m = parse(FIG2).unwrap();
        let text = serialize(&m);
        let m2 = parse(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(serialize(&m2), text);
    }

    #[test]
    fn serializes_transitionless_model() {
        let text = "model lonely\nlane L\nbox A.0 in L at 0\ninit A.0\n";
        let m = parse(text).unwrap();
        let out = serialize(&m);
        assert_eq!(parse(&out).unwrap(), m);
    }

    #[test]
    fn serialize_is_deterministic() {
        let m = families::bench(3);
        assert_eq!(serialize(&m), serialize(&families::bench(3)));
    }

    #[test]
    fn undeclared_position_defaults_depend_on_constraints() {
        let text = "\
lane L, R
box A.0 in L
box A.1 in L
box B.0 in R
init A.0
init B.0
trans A.0 -> A.1
constraint pos(A.1) = pos(B.0)
";
        let m = parse(text).unwrap();
        let a0 = m.find_box(&BoxId::new("A", 0)).unwrap();
        let a1 = m.find_box(&BoxId::new("A", 1)).unwrap();
        assert_eq!(m.box_info(a0).pos, Position::Concrete(0));
        assert_eq!(m.box_info(a1).pos, Position::Parametric);
    }
}
