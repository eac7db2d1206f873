use super::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    // keywords
    Input,
    Real,
    Int,
    In,
    Let,
    If,
    Else,
    While,
    For,
    Reach,
    Fn,
    Return,
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
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(v) => format!("number `{v:?}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Input => "input",
            Tok::Real => "real",
            Tok::Int => "int",
            Tok::In => "in",
            Tok::Let => "let",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::For => "for",
            Tok::Reach => "reach",
            Tok::Fn => "fn",
            Tok::Return => "return",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Num(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') => {
                    let mut ahead = cur.chars.clone();
                    ahead.next();
                    match ahead.next() {
                        Some('/') => {
                            while let Some(c) = cur.bump() {
                                if c == '\n' {
                                    break;
                                }
                            }
                        }
                        Some('*') => {
                            let (line, col) = (cur.line, cur.col);
                            cur.bump();
                            cur.bump();
                            let mut closed = false;
                            while let Some(c) = cur.bump() {
                                if c == '*' && cur.eat('/') {
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                return Err(ParseError::new(
                                    line,
                                    col,
                                    ParseErrorKind::Syntax("unterminated block comment".into()),
                                ));
                            }
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }

        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                col,
            });
            return Ok(out);
        };
        let syntax = |msg: String| ParseError::new(line, col, ParseErrorKind::Syntax(msg));

        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '=' => {
                if cur.eat('=') {
                    Tok::EqEq
                } else {
                    Tok::Assign
                }
            }
            '!' => {
                if cur.eat('=') {
                    Tok::NotEq
                } else {
                    Tok::Bang
                }
            }
            '<' => {
                if cur.eat('=') {
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            '>' => {
                if cur.eat('=') {
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '&' => {
                if cur.eat('&') {
                    Tok::AndAnd
                } else {
                    return Err(syntax("expected `&&`".into()));
                }
            }
            '|' => {
                if cur.eat('|') {
                    Tok::OrOr
                } else {
                    return Err(syntax("expected `||`".into()));
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => return Err(syntax("unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                return Err(syntax(format!(
                                    "invalid escape `\\{}`",
                                    other.unwrap_or(' ')
                                )))
                            }
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        cur.bump();
                    } else if d == 'e' || d == 'E' {
                        s.push(d);
                        cur.bump();
                        if let Some(sign @ ('+' | '-')) = cur.peek() {
                            s.push(sign);
                            cur.bump();
                        }
                    } else {
                        break;
                    }
                }
                let v: f64 = s
                    .parse()
                    .map_err(|_| syntax(format!("malformed number `{s}`")))?;
                if !v.is_finite() {
                    return Err(syntax(format!("number `{s}` is not finite")));
                }
                Tok::Num(v)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(d) = cur.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(d);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                match s.as_str() {
                    "input" => Tok::Input,
                    "real" => Tok::Real,
                    "int" => Tok::Int,
                    "in" => Tok::In,
                    "let" => Tok::Let,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "for" => Tok::For,
                    "reach" => Tok::Reach,
                    "fn" => Tok::Fn,
                    "return" => Tok::Return,
                    _ => Tok::Ident(s),
                }
            }
            other => return Err(syntax(format!("unexpected character `{other}`"))),
        };
        out.push(Token { tok, line, col });
    }
}
