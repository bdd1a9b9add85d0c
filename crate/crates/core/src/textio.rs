//! Line-oriented reader shared by the textual checkpoint formats.

use std::str::FromStr;

use crate::{Error, Result};

pub(crate) struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate(), line: 0 }
    }

    pub fn line(&self) -> usize {
        self.line
    }

    /// Next non-blank line.
    pub fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Ok(t);
            }
        }
        Err(Error::parse(self.line + 1, "unexpected end of input"))
    }

    /// Reads a line that must start with `keyword`; returns the remaining tokens.
    pub fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some(k) if k == keyword => Ok(toks.collect()),
            other => Err(Error::parse(self.line, format!("expected `{keyword}`, found `{}`", other.unwrap_or("")))),
        }
    }

    pub fn parse<T: FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| Error::parse(self.line, format!("cannot parse `{tok}`")))
    }

    pub fn parse_all<T: FromStr>(&self, toks: &[&str]) -> Result<Vec<T>> {
        toks.iter().map(|t| self.parse(t)).collect()
    }

    /// The next `n` lines verbatim, blank ones included.
    pub fn raw_lines(&mut self, n: usize) -> Result<Vec<&'a str>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, l) = self.lines.next().ok_or_else(|| Error::parse(self.line + 1, "unexpected end of input"))?;
            self.line = i + 1;
            out.push(l);
        }
        Ok(out)
    }

    /// Parses a line of exactly `n` values.
    pub fn values<T: FromStr>(&mut self, n: usize) -> Result<Vec<T>> {
        let l = self.next_line()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != n {
            return Err(Error::parse(self.line, format!("expected {n} values, found {}", toks.len())));
        }
        self.parse_all(&toks)
    }
}
