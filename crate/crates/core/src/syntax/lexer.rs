use super::{Span, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// Unsized literal, typed `int`.
    Int(u128),
    /// `N:w`, a literal of type `bit<w>`.
    Sized {
        value: u128,
        width: u32,
    },
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

// Longest symbols first so that maximal munch works by linear scan.
const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", "<", ">", "=", ";",
    ",", ".", ":", "+", "-", "*", "&", "|", "^", "@", "/",
];

pub fn lex(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

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
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::Lex {
                        span,
                        message: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            tokens.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let value = lex_number(&chars, &mut i, &mut col, span)?;
            // `N:w` with no spaces is a sized literal
            if chars.get(i) == Some(&':') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                bump!();
                let wspan = Span::new(line, col);
                let width = lex_number(&chars, &mut i, &mut col, wspan)?;
                let width = u32::try_from(width)
                    .ok()
                    .filter(|w| (1..=super::MAX_BIT_WIDTH).contains(w))
                    .ok_or_else(|| SyntaxError::Lex {
                        span: wspan,
                        message: format!("bit width {width} is outside 1..=128"),
                    })?;
                if width < 128 && value >> width != 0 {
                    return Err(SyntaxError::Lex {
                        span,
                        message: format!("literal {value} does not fit in {width} bits"),
                    });
                }
                tokens.push(Token {
                    kind: TokenKind::Sized { value, width },
                    span,
                });
            } else {
                tokens.push(Token {
                    kind: TokenKind::Int(value),
                    span,
                });
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for _ in 0..sym.len() {
                    bump!();
                }
                tokens.push(Token {
                    kind: TokenKind::Sym(sym),
                    span,
                });
            }
            None => {
                return Err(SyntaxError::Lex {
                    span,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::new(line, col),
    });
    Ok(tokens)
}

fn lex_number(
    chars: &[char],
    i: &mut usize,
    col: &mut u32,
    span: Span,
) -> Result<u128, SyntaxError> {
    let radix = if chars[*i] == '0' && matches!(chars.get(*i + 1), Some('x') | Some('X')) {
        *i += 2;
        *col += 2;
        16
    } else {
        10
    };
    let start = *i;
    while *i < chars.len() && (chars[*i].is_digit(radix) || chars[*i] == '_') {
        *i += 1;
        *col += 1;
    }
    let text: String = chars[start..*i].iter().filter(|c| **c != '_').collect();
    u128::from_str_radix(&text, radix).map_err(|_| SyntaxError::Lex {
        span,
        message: format!("malformed or oversized number `{text}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        lex(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn sized_literals_and_keys() {
        assert_eq!(
            kinds("1:8 x: exact"),
            vec![
                TokenKind::Sized { value: 1, width: 8 },
                TokenKind::Ident("x".into()),
                TokenKind::Sym(":"),
                TokenKind::Ident("exact".into()),
                TokenKind::Eof
            ]
        );
        assert_eq!(kinds("0xff")[0], TokenKind::Int(255));
    }

    #[test]
    fn spans_are_one_based() {
        let toks = lex("a\n  bb // c\n/* x\n */ d").unwrap();
        assert_eq!(toks[0].span, Span::new(1, 1));
        assert_eq!(toks[1].span, Span::new(2, 3));
        assert_eq!(toks[2].span, Span::new(4, 5));
    }

    #[test]
    fn rejects_bad_width() {
        assert!(lex("3:0").is_err());
        assert!(lex("3:129").is_err());
        assert!(lex("256:8").is_err());
        assert!(lex("$").is_err());
    }

    #[test]
    fn maximal_munch() {
        assert_eq!(
            kinds("a<=b := c"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Sym("<="),
                TokenKind::Ident("b".into()),
                TokenKind::Sym(":="),
                TokenKind::Ident("c".into()),
                TokenKind::Eof
            ]
        );
    }
}
