//! Tokenizer for the Python subset.
//!
//! Produces a flat token stream with explicit `Indent`/`Dedent` tokens the way
//! CPython's tokenizer does. Comments are dropped, but lines that hold nothing
//! except a comment are remembered so line-of-code counts can exclude them.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Name,
    Number,
    String,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == TokenKind::Name && self.text == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("line {line}: inconsistent use of tabs and spaces in indentation")]
    InconsistentTabs { line: u32 },
    #[error("line {line}: unindent does not match any outer indentation level")]
    BadDedent { line: u32 },
    #[error("line {line}: unterminated string literal")]
    UnterminatedString { line: u32 },
    #[error("line {line}: unexpected character {ch:?}")]
    UnexpectedChar { line: u32, ch: char },
    #[error("line {line}: unmatched {bracket:?}")]
    UnmatchedBracket { line: u32, bracket: char },
}

impl LexError {
    pub fn line(&self) -> u32 {
        match *self {
            LexError::InconsistentTabs { line }
            | LexError::BadDedent { line }
            | LexError::UnterminatedString { line }
            | LexError::UnexpectedChar { line, .. }
            | LexError::UnmatchedBracket { line, .. } => line,
        }
    }
}

/// Output of [`tokenize`].
#[derive(Debug, Clone, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Physical lines whose only content is a comment.
    pub comment_lines: BTreeSet<u32>,
}

impl TokenStream {
    /// Number of logical lines (NEWLINE tokens).
    pub fn logical_lines(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Newline)
            .count()
    }
}

const THREE_CHAR_OPS: &[&str] = &["**=", "//=", ">>=", "<<=", "...", "!="];
const TWO_CHAR_OPS: &[&str] = &[
    "**", "//", "==", "!=", "<=", ">=", "<<", ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "->", ":=", "@=",
];
const ONE_CHAR_OPS: &str = "+-*/%<>=()[]{},:.;@&|^~";

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    strict: bool,
}

impl Lexer {
    fn new(text: &str, strict: bool) -> Self {
        Lexer {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 0,
            strict,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        let n = s.chars().count();
        self.chars.len() >= self.pos + n && s.chars().zip(&self.chars[self.pos..]).all(|(a, b)| a == *b)
    }

    fn at_line_end(&self) -> bool {
        matches!(self.peek(), None | Some('\n'))
            || (self.peek() == Some('\r') && matches!(self.peek_at(1), None | Some('\n')))
    }

    /// Consume the line terminator (`\n` or `\r\n`) if present.
    fn eat_newline(&mut self) {
        if self.peek() == Some('\r') {
            self.bump();
        }
        if self.peek() == Some('\n') {
            self.bump();
        }
    }

    fn run(mut self) -> Result<TokenStream, LexError> {
        let mut out = TokenStream::default();
        // Indentation stack holds (width with tab=8, width with tab=1).
        let mut indents: Vec<(usize, usize)> = vec![(0, 0)];
        let mut brackets: Vec<(char, u32)> = Vec::new();
        let mut at_line_start = true;
        let mut line_has_tokens = false;

        loop {
            if at_line_start && brackets.is_empty() {
                // Measure indentation of this physical line.
                let start_line = self.line;
                let (mut wide, mut narrow) = (0usize, 0usize);
                while let Some(c) = self.peek() {
                    match c {
                        ' ' => {
                            wide += 1;
                            narrow += 1;
                        }
                        '\t' => {
                            wide = (wide / 8 + 1) * 8;
                            narrow += 1;
                        }
                        '\x0c' => {
                            wide = 0;
                            narrow = 0;
                        }
                        _ => break,
                    }
                    self.bump();
                }
                match self.peek() {
                    None => break,
                    Some('#') => {
                        out.comment_lines.insert(start_line);
                        while !self.at_line_end() {
                            self.bump();
                        }
                        self.eat_newline();
                        continue;
                    }
                    Some('\n') | Some('\r') if self.at_line_end() => {
                        self.eat_newline();
                        continue;
                    }
                    Some('\\') if matches!(self.peek_at(1), Some('\n') | Some('\r')) => {
                        // A continuation on an otherwise blank line: treat as blank.
                        self.bump();
                        self.eat_newline();
                        continue;
                    }
                    _ => {}
                }
                let top = *indents.last().expect("indent stack never empty");
                if wide > top.0 {
                    if self.strict && narrow <= top.1 {
                        return Err(LexError::InconsistentTabs { line: start_line });
                    }
                    indents.push((wide, narrow));
                    out.tokens.push(Token {
                        kind: TokenKind::Indent,
                        text: String::new(),
                        line: start_line,
                        col: 0,
                        end_line: start_line,
                        end_col: self.col,
                    });
                } else {
                    if self.strict && wide == top.0 && narrow != top.1 {
                        return Err(LexError::InconsistentTabs { line: start_line });
                    }
                    while wide < indents.last().unwrap().0 {
                        indents.pop();
                        out.tokens.push(Token {
                            kind: TokenKind::Dedent,
                            text: String::new(),
                            line: start_line,
                            col: self.col,
                            end_line: start_line,
                            end_col: self.col,
                        });
                    }
                    let top = *indents.last().unwrap();
                    if wide != top.0 {
                        if self.strict {
                            return Err(LexError::BadDedent { line: start_line });
                        }
                    } else if self.strict && narrow != top.1 {
                        return Err(LexError::InconsistentTabs { line: start_line });
                    }
                }
                at_line_start = false;
                line_has_tokens = false;
            }

            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);

            if c == ' ' || c == '\t' || c == '\x0c' {
                self.bump();
                continue;
            }
            if c == '#' {
                while !self.at_line_end() {
                    self.bump();
                }
                continue;
            }
            if c == '\\' && matches!(self.peek_at(1), Some('\n') | Some('\r')) {
                self.bump();
                self.eat_newline();
                continue;
            }
            if c == '\n' || c == '\r' {
                if c == '\r' && !self.at_line_end() {
                    self.bump();
                    continue;
                }
                self.eat_newline();
                if brackets.is_empty() {
                    if line_has_tokens {
                        out.tokens.push(Token {
                            kind: TokenKind::Newline,
                            text: "\n".into(),
                            line,
                            col,
                            end_line: line,
                            end_col: col + 1,
                        });
                    }
                    at_line_start = true;
                }
                continue;
            }

            line_has_tokens = true;

            if c.is_alphabetic() || c == '_' {
                // String prefixes are lexed together with the literal.
                if let Some(tok) = self.try_prefixed_string(line, col)? {
                    out.tokens.push(tok);
                    continue;
                }
                let mut text = String::new();
                while let Some(c) = self.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.tokens.push(self.make(TokenKind::Name, text, line, col));
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
                let text = self.lex_number();
                out.tokens.push(self.make(TokenKind::Number, text, line, col));
                continue;
            }
            if c == '\'' || c == '"' {
                let tok = self.lex_string(String::new(), line, col)?;
                out.tokens.push(tok);
                continue;
            }

            let mut matched = None;
            for op in THREE_CHAR_OPS.iter().chain(TWO_CHAR_OPS) {
                if self.starts_with(op) {
                    matched = Some(op.to_string());
                    break;
                }
            }
            let op = match matched {
                Some(op) => op,
                None if ONE_CHAR_OPS.contains(c) => c.to_string(),
                None => {
                    if self.strict {
                        return Err(LexError::UnexpectedChar { line, ch: c });
                    }
                    self.bump();
                    continue;
                }
            };
            for _ in 0..op.chars().count() {
                self.bump();
            }
            match op.as_str() {
                "(" | "[" | "{" => brackets.push((op.chars().next().unwrap(), line)),
                ")" | "]" | "}" => {
                    let close = op.chars().next().unwrap();
                    let want = match close {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match brackets.pop() {
                        Some((open, _)) if open == want => {}
                        _ if !self.strict => {}
                        _ => return Err(LexError::UnmatchedBracket { line, bracket: close }),
                    }
                }
                _ => {}
            }
            out.tokens.push(self.make(TokenKind::Op, op, line, col));
        }

        if let Some(&(open, line)) = brackets.last() {
            if self.strict {
                return Err(LexError::UnmatchedBracket { line, bracket: open });
            }
        }
        let (line, col) = (self.line, self.col);
        if out
            .tokens
            .last()
            .is_some_and(|t| !matches!(t.kind, TokenKind::Newline | TokenKind::Dedent))
        {
            out.tokens.push(Token {
                kind: TokenKind::Newline,
                text: String::new(),
                line,
                col,
                end_line: line,
                end_col: col,
            });
        }
        for _ in 1..indents.len() {
            out.tokens.push(Token {
                kind: TokenKind::Dedent,
                text: String::new(),
                line,
                col,
                end_line: line,
                end_col: col,
            });
        }
        out.tokens.push(Token {
            kind: TokenKind::EndMarker,
            text: String::new(),
            line,
            col,
            end_line: line,
            end_col: col,
        });
        Ok(out)
    }

    fn make(&self, kind: TokenKind, text: String, line: u32, col: u32) -> Token {
        Token {
            kind,
            text,
            line,
            col,
            end_line: self.line,
            end_col: self.col,
        }
    }

    fn try_prefixed_string(&mut self, line: u32, col: u32) -> Result<Option<Token>, LexError> {
        let mut n = 0;
        while n < 2 && self.peek_at(n).is_some_and(|c| "rRbBuUfF".contains(c)) {
            n += 1;
        }
        if n == 0 || !matches!(self.peek_at(n), Some('\'') | Some('"')) {
            return Ok(None);
        }
        let prefix: String = self.chars[self.pos..self.pos + n].iter().collect();
        let lower = prefix.to_ascii_lowercase();
        let valid = matches!(
            lower.as_str(),
            "r" | "b" | "u" | "f" | "rb" | "br" | "fr" | "rf"
        );
        if !valid {
            return Ok(None);
        }
        for _ in 0..n {
            self.bump();
        }
        self.lex_string(prefix, line, col).map(Some)
    }

    fn lex_string(&mut self, prefix: String, line: u32, col: u32) -> Result<Token, LexError> {
        let quote = self.peek().expect("caller checked quote");
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        let mut text = prefix;
        let qlen = if triple { 3 } else { 1 };
        for _ in 0..qlen {
            text.push(self.bump().unwrap());
        }
        loop {
            let Some(c) = self.peek() else {
                if self.strict {
                    return Err(LexError::UnterminatedString { line });
                }
                break;
            };
            if c == '\\' {
                text.push(c);
                self.bump();
                if let Some(next) = self.peek() {
                    text.push(next);
                    self.bump();
                }
                continue;
            }
            if !triple && (c == '\n' || (c == '\r' && self.at_line_end())) {
                if self.strict {
                    return Err(LexError::UnterminatedString { line });
                }
                break;
            }
            if c == quote {
                if !triple {
                    text.push(c);
                    self.bump();
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    for _ in 0..3 {
                        text.push(self.bump().unwrap());
                    }
                    break;
                }
            }
            text.push(c);
            self.bump();
        }
        Ok(self.make(TokenKind::String, text, line, col))
    }

    fn lex_number(&mut self) -> String {
        let mut text = String::new();
        let take_digits = |lx: &mut Self, text: &mut String, pred: fn(char) -> bool| {
            while let Some(c) = lx.peek() {
                if pred(c) || (c == '_' && lx.peek_at(1).is_some_and(pred)) {
                    text.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
        };
        if self.peek() == Some('0') && self.peek_at(1).is_some_and(|c| "xXoObB".contains(c)) {
            text.push(self.bump().unwrap());
            let base = self.bump().unwrap();
            text.push(base);
            let pred: fn(char) -> bool = match base.to_ascii_lowercase() {
                'x' => |c| c.is_ascii_hexdigit(),
                'o' => |c| ('0'..='7').contains(&c),
                _ => |c| c == '0' || c == '1',
            };
            take_digits(self, &mut text, pred);
            return text;
        }
        take_digits(self, &mut text, |c| c.is_ascii_digit());
        if self.peek() == Some('.') {
            text.push('.');
            self.bump();
            take_digits(self, &mut text, |c| c.is_ascii_digit());
        }
        if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
            let sign = self.peek_at(1).is_some_and(|c| c == '+' || c == '-');
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    text.push(self.bump().unwrap());
                }
                take_digits(self, &mut text, |c| c.is_ascii_digit());
            }
        }
        if self.peek().is_some_and(|c| c == 'j' || c == 'J') {
            text.push(self.bump().unwrap());
        }
        text
    }
}

/// Tokenize source text.
pub fn tokenize(text: &str) -> Result<TokenStream, LexError> {
    Lexer::new(text, true).run()
}

/// Best-effort tokenization that never fails: unknown characters are skipped
/// and unterminated strings run to the end of their line. Used for keyword
/// scans over arbitrary (full-language) Python text.
pub fn tokenize_lenient(text: &str) -> TokenStream {
    Lexer::new(text, false)
        .run()
        .expect("lenient lexer does not report errors")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(ts: &TokenStream) -> Vec<(TokenKind, &str)> {
        ts.tokens
            .iter()
            .map(|t| (t.kind, t.text.as_str()))
            .collect()
    }

    #[test]
    fn minimal_statement() {
        let ts = tokenize("x = 1\n").unwrap();
        assert_eq!(
            kinds(&ts),
            vec![
                (TokenKind::Name, "x"),
                (TokenKind::Op, "="),
                (TokenKind::Number, "1"),
                (TokenKind::Newline, "\n"),
                (TokenKind::EndMarker, ""),
            ]
        );
    }

    #[test]
    fn block_has_one_indent_and_dedent() {
        let ts = tokenize("def f(s):\n    return s\n").unwrap();
        let indents = ts.tokens.iter().filter(|t| t.kind == TokenKind::Indent).count();
        let dedents = ts.tokens.iter().filter(|t| t.kind == TokenKind::Dedent).count();
        assert_eq!((indents, dedents), (1, 1));
    }

    #[test]
    fn comments_dropped_and_recorded() {
        let ts = tokenize("# header\nx = 1  # trailing\n\n").unwrap();
        assert!(ts.tokens.iter().all(|t| !t.text.contains('#')));
        assert_eq!(ts.comment_lines.iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn tokens_carry_positions() {
        let ts = tokenize("a = 1\nbb = 22\n").unwrap();
        let bb = ts.tokens.iter().find(|t| t.text == "bb").unwrap();
        assert_eq!((bb.line, bb.col, bb.end_col), (2, 0, 2));
    }

    #[test]
    fn brackets_join_lines() {
        let ts = tokenize("x = [1,\n     2]\n").unwrap();
        assert_eq!(ts.logical_lines(), 1);
    }

    #[test]
    fn inconsistent_tabs_rejected() {
        let err = tokenize("if x:\n        a = 1\n\tb = 2\n").unwrap_err();
        assert_eq!(err, LexError::InconsistentTabs { line: 3 });
    }

    #[test]
    fn unterminated_string_rejected() {
        let err = tokenize("x = 'abc\n").unwrap_err();
        assert_eq!(err, LexError::UnterminatedString { line: 1 });
        let err = tokenize("x = \"\"\"abc\n").unwrap_err();
        assert_eq!(err.line(), 1);
    }

    #[test]
    fn bad_dedent_rejected() {
        let err = tokenize("if x:\n    a = 1\n  b = 2\n").unwrap_err();
        assert_eq!(err, LexError::BadDedent { line: 3 });
    }

    #[test]
    fn string_prefixes_and_escapes() {
        let ts = tokenize("s = rb'a\\'b' + f\"{x}\"\n").unwrap();
        let strs: Vec<_> = ts
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::String)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(strs, vec!["rb'a\\'b'", "f\"{x}\""]);
    }

    #[test]
    fn numbers() {
        let ts = tokenize("a = 0x1F + 1_000 + 1.5e-3 + .5 + 3j\n").unwrap();
        let nums: Vec<_> = ts
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Number)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(nums, vec!["0x1F", "1_000", "1.5e-3", ".5", "3j"]);
    }

    #[test]
    fn lenient_mode_never_fails() {
        let ts = tokenize_lenient("x = 'oops\n$ y\n  z\n");
        assert!(ts.tokens.iter().any(|t| t.is_name("y")));
    }
}
