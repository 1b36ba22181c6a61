//! Tokenizer for the surface syntax.
//!
//! `--` starts a line comment. The multi-character arrow tokens (`-[`, `]->`,
//! `=[`, `]=>`, `~>`, `->`, `=>`) are lexed greedily, so `-[` never splits
//! into minus and bracket.

use crate::ast::{Name, Span};
use crate::diag::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(Name),
    Int(i64),
    Real(f64),
    Str(String),
    // keywords
    Fun,
    Return,
    Let,
    In,
    With,
    Handle,
    Handler,
    If,
    Then,
    Else,
    Fix,
    Nil,
    Main,
    Effect,
    Type,
    Const,
    Pi1,
    Pi2,
    Any,
    True,
    False,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Star,
    Eq,
    Pipe,
    Underscore,
    Minus,
    Arrow,      // ->
    DArrow,     // =>
    EffArrowL,  // -[
    EffArrowR,  // ]->
    HandArrowL, // =[
    HandArrowR, // ]=>
    SigArrow,   // ~>
    Eof,
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let span = Span { line, col };
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' | '\n' => bump!(),
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '-' {
                    while i < chars.len() && chars[i] != '\n' {
                        bump!();
                    }
                } else if i + 1 < chars.len() && chars[i + 1] == '[' {
                    bump!();
                    bump!();
                    toks.push((Tok::EffArrowL, span));
                } else if i + 1 < chars.len() && chars[i + 1] == '>' {
                    bump!();
                    bump!();
                    toks.push((Tok::Arrow, span));
                } else {
                    bump!();
                    toks.push((Tok::Minus, span));
                }
            }
            ']' => {
                if i + 2 < chars.len() && chars[i + 1] == '-' && chars[i + 2] == '>' {
                    bump!();
                    bump!();
                    bump!();
                    toks.push((Tok::EffArrowR, span));
                } else if i + 2 < chars.len() && chars[i + 1] == '=' && chars[i + 2] == '>' {
                    bump!();
                    bump!();
                    bump!();
                    toks.push((Tok::HandArrowR, span));
                } else {
                    bump!();
                    toks.push((Tok::RBracket, span));
                }
            }
            '=' => {
                if i + 1 < chars.len() && chars[i + 1] == '[' {
                    bump!();
                    bump!();
                    toks.push((Tok::HandArrowL, span));
                } else if i + 1 < chars.len() && chars[i + 1] == '>' {
                    bump!();
                    bump!();
                    toks.push((Tok::DArrow, span));
                } else {
                    bump!();
                    toks.push((Tok::Eq, span));
                }
            }
            '~' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    bump!();
                    bump!();
                    toks.push((Tok::SigArrow, span));
                } else {
                    return Err(Diagnostic::error(span, "stray '~'"));
                }
            }
            '(' => {
                bump!();
                toks.push((Tok::LParen, span));
            }
            ')' => {
                bump!();
                toks.push((Tok::RParen, span));
            }
            '{' => {
                bump!();
                toks.push((Tok::LBrace, span));
            }
            '}' => {
                bump!();
                toks.push((Tok::RBrace, span));
            }
            '[' => {
                bump!();
                toks.push((Tok::LBracket, span));
            }
            ',' => {
                bump!();
                toks.push((Tok::Comma, span));
            }
            ';' => {
                bump!();
                toks.push((Tok::Semi, span));
            }
            ':' => {
                bump!();
                toks.push((Tok::Colon, span));
            }
            '.' => {
                bump!();
                toks.push((Tok::Dot, span));
            }
            '*' => {
                bump!();
                toks.push((Tok::Star, span));
            }
            '|' => {
                bump!();
                toks.push((Tok::Pipe, span));
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(Diagnostic::error(span, "unterminated string literal"));
                    }
                    match chars[i] {
                        '"' => {
                            bump!();
                            break;
                        }
                        '\\' => {
                            bump!();
                            if i >= chars.len() {
                                return Err(Diagnostic::error(span, "unterminated string literal"));
                            }
                            let esc = chars[i];
                            bump!();
                            s.push(match esc {
                                '"' => '"',
                                '\\' => '\\',
                                'n' => '\n',
                                't' => '\t',
                                other => {
                                    return Err(Diagnostic::error(
                                        Span { line, col },
                                        format!("unknown escape '\\{other}'"),
                                    ))
                                }
                            });
                        }
                        '\n' => {
                            return Err(Diagnostic::error(span, "unterminated string literal"))
                        }
                        other => {
                            s.push(other);
                            bump!();
                        }
                    }
                }
                toks.push((Tok::Str(s), span));
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                let is_real = i + 1 < chars.len()
                    && chars[i] == '.'
                    && chars[i + 1].is_ascii_digit();
                if is_real {
                    bump!();
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                    let text: String = chars[start..i].iter().collect();
                    match text.parse::<f64>() {
                        Ok(x) => toks.push((Tok::Real(x), span)),
                        Err(_) => {
                            return Err(Diagnostic::error(span, format!("bad real literal {text}")))
                        }
                    }
                } else {
                    let text: String = chars[start..i].iter().collect();
                    match text.parse::<i64>() {
                        Ok(n) => toks.push((Tok::Int(n), span)),
                        Err(_) => {
                            return Err(Diagnostic::error(
                                span,
                                format!("integer literal {text} does not fit in 64 bits"),
                            ))
                        }
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    bump!();
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "fun" => Tok::Fun,
                    "return" => Tok::Return,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    "with" => Tok::With,
                    "handle" => Tok::Handle,
                    "handler" => Tok::Handler,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "fix" => Tok::Fix,
                    "nil" => Tok::Nil,
                    "main" => Tok::Main,
                    "effect" => Tok::Effect,
                    "type" => Tok::Type,
                    "const" => Tok::Const,
                    "pi1" => Tok::Pi1,
                    "pi2" => Tok::Pi2,
                    "any" => Tok::Any,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "_" => Tok::Underscore,
                    _ => Tok::Ident(Name::new(&word)),
                };
                toks.push((tok, span));
            }
            other => {
                return Err(Diagnostic::error(span, format!("unexpected character '{other}'")));
            }
        }
    }
    toks.push((Tok::Eof, Span { line, col }));
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        lex(text).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn arrows_lex_greedily() {
        assert_eq!(
            kinds("-[ ]-> =[ ]=> ~> -> => - ["),
            vec![
                Tok::EffArrowL,
                Tok::EffArrowR,
                Tok::HandArrowL,
                Tok::HandArrowR,
                Tok::SigArrow,
                Tok::Arrow,
                Tok::DArrow,
                Tok::Minus,
                Tok::LBracket,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        assert_eq!(
            kinds("let -- everything here vanishes -> => \nx"),
            vec![Tok::Let, Tok::Ident(Name::new("x")), Tok::Eof]
        );
    }

    #[test]
    fn numbers_and_projections() {
        assert_eq!(
            kinds("3 3.5 pi1 x.y"),
            vec![
                Tok::Int(3),
                Tok::Real(3.5),
                Tok::Pi1,
                Tok::Ident(Name::new("x")),
                Tok::Dot,
                Tok::Ident(Name::new("y")),
                Tok::Eof
            ]
        );
        // a dot not followed by a digit stays a dot
        assert_eq!(kinds("3."), vec![Tok::Int(3), Tok::Dot, Tok::Eof]);
    }

    #[test]
    fn strings_unescape() {
        assert_eq!(
            kinds(r#""a\"b\\c\nd""#),
            vec![Tok::Str("a\"b\\c\nd".to_string()), Tok::Eof]
        );
        assert!(lex("\"unclosed").is_err());
    }

    #[test]
    fn spans_are_one_based() {
        let toks = lex("let\n  x").unwrap();
        assert_eq!(toks[0].1, Span { line: 1, col: 1 });
        assert_eq!(toks[1].1, Span { line: 2, col: 3 });
    }

    #[test]
    fn underscore_alone_is_a_wildcard() {
        assert_eq!(kinds("_ _x x_"), vec![
            Tok::Underscore,
            Tok::Ident(Name::new("_x")),
            Tok::Ident(Name::new("x_")),
            Tok::Eof
        ]);
    }
}
