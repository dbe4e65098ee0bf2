//! Concrete syntax for knowledge bases.
//!
//! ```text
//! file    := item*
//! item    := "var" IDENT ":" "{" IDENT ("," IDENT)* "}" "."
//!          | "pr" "(" lit ("|" lit ("," lit)*)? ")" "=" NUMBER "."
//!          | "fact" lit "."
//! lit     := IDENT "=" IDENT
//! IDENT   := [A-Za-z_][A-Za-z0-9_]*
//! NUMBER  := [0-9]+ ("." [0-9]+)?
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Names may be used
//! before they are declared.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::error::{KbError, KbErrorKind, ParseError};
use super::kb::{KnowledgeBase, Literal, PrAtom, RandomVariable};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Number(f64),
    Punct(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned<'a> {
    tok: Tok<'a>,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned<'_>>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let col = src[line_start..i].chars().count() + 1;
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' | b')' | b'{' | b'}' | b'|' | b',' | b'=' | b'.' | b':' => {
                out.push(Spanned {
                    tok: Tok::Punct(c as char),
                    line,
                    col,
                });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    line,
                    col,
                    msg: format!("bad number `{text}`"),
                })?;
                out.push(Spanned {
                    tok: Tok::Number(value),
                    line,
                    col,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(&src[start..i]),
                    line,
                    col,
                });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    let col = src[line_start..].chars().count() + 1;
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct RawLit<'a> {
    var: &'a str,
    value: &'a str,
    line: usize,
}

struct Parser<'a> {
    toks: Vec<Spanned<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Spanned<'a> {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, at: &Spanned<'_>, expected: &str) -> Result<T, ParseError> {
        let found = match &at.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("`{n}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(ParseError::Syntax {
            line: at.line,
            col: at.col,
            msg: format!("expected {expected}, found {found}"),
        })
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            self.error(&t, &format!("`{c}`"))
        }
    }

    fn ident(&mut self) -> Result<Spanned<'a>, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(_) => Ok(t),
            _ => self.error(&t, "a name"),
        }
    }

    fn literal(&mut self) -> Result<RawLit<'a>, ParseError> {
        let var = self.ident()?;
        self.punct('=')?;
        let value = self.ident()?;
        let name = |t: &Spanned<'a>| match t.tok {
            Tok::Ident(s) => s,
            _ => "",
        };
        Ok(RawLit {
            var: name(&var),
            value: name(&value),
            line: var.line,
        })
    }
}

/// Parses and validates a knowledge base from rule-language text.
pub fn parse_kb(src: &str) -> Result<KnowledgeBase, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut vars: Vec<(RandomVariable, usize)> = Vec::new();
    let mut raw_atoms: Vec<(RawLit<'_>, Vec<RawLit<'_>>, f64, usize)> = Vec::new();
    let mut raw_facts: Vec<RawLit<'_>> = Vec::new();

    loop {
        let t = p.next();
        match t.tok {
            Tok::Eof => break,
            Tok::Ident("var") => {
                let name = p.ident()?;
                p.punct(':')?;
                p.punct('{')?;
                let mut values = Vec::new();
                loop {
                    if let Tok::Ident(v) = p.ident()?.tok {
                        values.push(v.to_string());
                    }
                    let sep = p.next();
                    match sep.tok {
                        Tok::Punct(',') => continue,
                        Tok::Punct('}') => break,
                        _ => return p.error(&sep, "`,` or `}`"),
                    }
                }
                p.punct('.')?;
                if let Tok::Ident(n) = name.tok {
                    vars.push((
                        RandomVariable {
                            name: n.to_string(),
                            values,
                        },
                        t.line,
                    ));
                }
            }
            Tok::Ident("pr") => {
                p.punct('(')?;
                let head = p.literal()?;
                let mut cond = Vec::new();
                let sep = p.next();
                match sep.tok {
                    Tok::Punct('|') => loop {
                        cond.push(p.literal()?);
                        let s = p.next();
                        match s.tok {
                            Tok::Punct(',') => continue,
                            Tok::Punct(')') => break,
                            _ => return p.error(&s, "`,` or `)`"),
                        }
                    },
                    Tok::Punct(')') => {}
                    _ => return p.error(&sep, "`|` or `)`"),
                }
                p.punct('=')?;
                let num = p.next();
                let v = match num.tok {
                    Tok::Number(v) => v,
                    _ => return p.error(&num, "a probability"),
                };
                p.punct('.')?;
                raw_atoms.push((head, cond, v, t.line));
            }
            Tok::Ident("fact") => {
                raw_facts.push(p.literal()?);
                p.punct('.')?;
            }
            _ => return p.error(&t, "`var`, `pr` or `fact`"),
        }
    }

    let resolve = |lit: &RawLit<'_>| -> Result<Literal, ParseError> {
        let invalid = |kind| ParseError::Invalid {
            line: lit.line,
            source: KbError::new(kind),
        };
        let var = vars
            .iter()
            .position(|(v, _)| v.name == lit.var)
            .ok_or_else(|| invalid(KbErrorKind::UnknownVariable(lit.var.to_string())))?;
        let value = vars[var].0.value_index(lit.value).ok_or_else(|| {
            invalid(KbErrorKind::UnknownValue {
                var: lit.var.to_string(),
                value: lit.value.to_string(),
            })
        })?;
        Ok(Literal::new(var, value))
    };

    let mut atoms = Vec::with_capacity(raw_atoms.len());
    let mut atom_lines = Vec::with_capacity(raw_atoms.len());
    for (head, cond, v, line) in &raw_atoms {
        let head = resolve(head)?;
        let cond = cond.iter().map(&resolve).collect::<Result<Vec<_>, _>>()?;
        atoms.push(PrAtom::new(head, cond, *v));
        atom_lines.push(*line);
    }
    let facts = raw_facts.iter().map(&resolve).collect::<Result<Vec<_>, _>>()?;

    let var_lines: Vec<usize> = vars.iter().map(|(_, l)| *l).collect();
    let variables: Vec<RandomVariable> = vars.into_iter().map(|(v, _)| v).collect();
    KnowledgeBase::new(variables.clone(), atoms, facts).map_err(|err| {
        let line = match (&err.kind, err.atom) {
            (_, Some(a)) => atom_lines[a],
            (
                KbErrorKind::EmptyRange(name)
                | KbErrorKind::DuplicateVariable(name)
                | KbErrorKind::DuplicateValue { var: name, .. },
                None,
            ) => variables
                .iter()
                .rposition(|v| &v.name == name)
                .map(|i| var_lines[i])
                .unwrap_or(1),
            _ => 1,
        };
        ParseError::Invalid { line, source: err }
    })
}
