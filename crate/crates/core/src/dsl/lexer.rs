//! Line-oriented tokenizer producing Python-style INDENT/DEDENT tokens.

use super::ast::Span;
use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            _ => "?",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let mut last_line = 0u32;

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx as u32 + 1;
        last_line = line_no;
        let chars: Vec<char> = raw_line.chars().collect();

        let mut col = 0usize;
        let mut width = 0usize;
        while col < chars.len() && (chars[col] == ' ' || chars[col] == '\t') {
            width += if chars[col] == '\t' { 4 } else { 1 };
            col += 1;
        }
        let blank = col >= chars.len() || chars[col] == '#';
        if blank {
            continue;
        }

        if depth == 0 {
            let current = *indents.last().unwrap();
            if width > current {
                indents.push(width);
                out.push(Token {
                    tok: Tok::Indent,
                    span: Span::new(line_no, 1),
                });
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    out.push(Token {
                        tok: Tok::Dedent,
                        span: Span::new(line_no, 1),
                    });
                }
                if width != *indents.last().unwrap() {
                    return Err(DslError::Syntax {
                        line: line_no,
                        col: 1,
                        message: "inconsistent indentation".into(),
                    });
                }
            }
        }

        while col < chars.len() {
            let c = chars[col];
            let span = Span::new(line_no, col as u32 + 1);
            if c == ' ' || c == '\t' || c == '\r' {
                col += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = col;
                while col < chars.len() && (chars[col].is_ascii_alphanumeric() || chars[col] == '_') {
                    col += 1;
                }
                let word: String = chars[start..col].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    span,
                });
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(col + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = col;
                while col < chars.len() && (chars[col].is_ascii_digit() || chars[col] == '.') {
                    col += 1;
                }
                if col < chars.len() && (chars[col] == 'e' || chars[col] == 'E') {
                    let save = col;
                    col += 1;
                    if col < chars.len() && (chars[col] == '+' || chars[col] == '-') {
                        col += 1;
                    }
                    if col < chars.len() && chars[col].is_ascii_digit() {
                        while col < chars.len() && chars[col].is_ascii_digit() {
                            col += 1;
                        }
                    } else {
                        col = save;
                    }
                }
                let text: String = chars[start..col].iter().collect();
                let value: f64 = text.parse().map_err(|_| DslError::Syntax {
                    line: line_no,
                    col: start as u32 + 1,
                    message: format!("malformed number '{text}'"),
                })?;
                out.push(Token {
                    tok: Tok::Number(value),
                    span,
                });
                continue;
            }
            let next = chars.get(col + 1).copied();
            let (tok, len) = match (c, next) {
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Assign, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('.', _) => (Tok::Dot, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                _ => {
                    return Err(DslError::Syntax {
                        line: line_no,
                        col: col as u32 + 1,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            };
            match tok {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    if depth == 0 {
                        return Err(DslError::Syntax {
                            line: line_no,
                            col: col as u32 + 1,
                            message: "unbalanced ')'".into(),
                        });
                    }
                    depth -= 1;
                }
                _ => {}
            }
            out.push(Token { tok, span });
            col += len;
        }

        if depth == 0 {
            out.push(Token {
                tok: Tok::Newline,
                span: Span::new(line_no, chars.len() as u32 + 1),
            });
        }
    }

    if depth != 0 {
        return Err(DslError::Syntax {
            line: last_line.max(1),
            col: 1,
            message: "unclosed '('".into(),
        });
    }
    let end = Span::new(last_line + 1, 1);
    while indents.len() > 1 {
        indents.pop();
        out.push(Token {
            tok: Tok::Dedent,
            span: end,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: end,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_produces_block_tokens() {
        let toks = kinds("a:\n    b\nc\n");
        assert_eq!(
            toks,
            vec![
                Tok::Ident("a".into()),
                Tok::Colon,
                Tok::Newline,
                Tok::Indent,
                Tok::Ident("b".into()),
                Tok::Newline,
                Tok::Dedent,
                Tok::Ident("c".into()),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn newlines_inside_parens_are_joined() {
        let toks = kinds("f(1,\n   2)\n");
        assert!(!toks[..toks.len() - 2].contains(&Tok::Newline));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let toks = kinds("# header\n\n  # indented comment\nx\n");
        assert_eq!(toks, vec![Tok::Ident("x".into()), Tok::Newline, Tok::Eof]);
    }

    #[test]
    fn numbers_and_operators() {
        let toks = kinds("1.5e2 <= .5 != 3\n");
        assert_eq!(
            toks[..5],
            [Tok::Number(150.0), Tok::Le, Tok::Number(0.5), Tok::Ne, Tok::Number(3.0)]
        );
    }

    #[test]
    fn bad_dedent_is_reported_with_line() {
        let err = tokenize("a:\n    b\n  c\n").unwrap_err();
        assert!(matches!(err, DslError::Syntax { line: 3, .. }));
    }
}
