//! Line-oriented text format for arrays.
//!
//! ```text
//! lapda K=4 L=2 S=1
//! stu 1 m=1/2 F=4 N=2
//! * * 2 1
//! 1 * * 2
//! 2 1 * *
//! * 2 1 *
//! ```
//!
//! `#` starts a comment. Emission uses single spaces and natural row order.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Entry, Lapda, Mlpda, PdaError, StuArray};
use crate::rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(pos),
                (true, Some(s)) => {
                    tokens.push(Token { text: &content[s..pos], column: content[..s].chars().count() + 1 });
                    start = None;
                }
                _ => {}
            }
        }
        if !tokens.is_empty() {
            lines.push(Line { number: i + 1, tokens });
        }
    }
    lines
}

fn parse_entry(token: &Token<'_>, line: usize) -> Result<Entry, ParseError> {
    if token.text == "*" {
        return Ok(Entry::Star);
    }
    match token.text.parse::<usize>() {
        Ok(0) => Err(ParseError::new(line, token.column, "slot indices start at 1")),
        Ok(n) => Ok(Entry::Slot(n)),
        Err(_) => Err(ParseError::new(line, token.column, format!("expected '*' or a slot index, found '{}'", token.text))),
    }
}

fn parse_rows(lines: &[Line<'_>], width: Option<usize>) -> Result<Vec<Vec<Entry>>, ParseError> {
    let mut rows = Vec::with_capacity(lines.len());
    let mut expected = width;
    for line in lines {
        let row = line
            .tokens
            .iter()
            .map(|t| parse_entry(t, line.number))
            .collect::<Result<Vec<_>, _>>()?;
        match expected {
            Some(k) if row.len() != k => {
                let column = line.tokens.last().map(|t| t.column).unwrap_or(1);
                return Err(ParseError::new(
                    line.number,
                    column,
                    format!("row has {} cells, expected {k}", row.len()),
                ));
            }
            None => expected = Some(row.len()),
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

fn structural(line: usize, err: PdaError) -> ParseError {
    ParseError::new(line, 1, err.to_string())
}

/// Bare grid of `*` and slot indices, one row per line.
pub fn parse_grid(text: &str, antennas: usize) -> Result<Mlpda, ParseError> {
    let lines = tokenize(text);
    let first = lines.first().map(|l| l.number).unwrap_or(1);
    let rows = parse_rows(&lines, None)?;
    Mlpda::from_rows(rows, antennas).map_err(|e| structural(first, e))
}

fn key_value<'a>(token: &Token<'a>, key: &str, line: usize) -> Result<&'a str, ParseError> {
    token
        .text
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| ParseError::new(line, token.column, format!("expected {key}=<value>, found '{}'", token.text)))
}

fn number(token: &Token<'_>, key: &str, line: usize) -> Result<usize, ParseError> {
    let value = key_value(token, key, line)?;
    value
        .parse()
        .map_err(|_| ParseError::new(line, token.column, format!("{key} must be a non-negative integer")))
}

pub fn parse_lapda(text: &str) -> Result<Lapda, ParseError> {
    let lines = tokenize(text);
    let header = lines.first().ok_or_else(|| ParseError::new(1, 1, "empty input"))?;
    if header.tokens[0].text != "lapda" || header.tokens.len() != 4 {
        return Err(ParseError::new(header.number, 1, "expected 'lapda K=<int> L=<int> S=<int>'"));
    }
    let users = number(&header.tokens[1], "K", header.number)?;
    let antennas = number(&header.tokens[2], "L", header.number)?;
    let count = number(&header.tokens[3], "S", header.number)?;

    let mut stus = Vec::with_capacity(count);
    let mut i = 1;
    while i < lines.len() {
        let line = &lines[i];
        if line.tokens[0].text != "stu" || line.tokens.len() != 5 {
            return Err(ParseError::new(line.number, 1, "expected 'stu <s> m=<p>/<q> F=<int> N=<int>'"));
        }
        let index: usize = line.tokens[1]
            .text
            .parse()
            .map_err(|_| ParseError::new(line.number, line.tokens[1].column, "STU index must be an integer"))?;
        if index != stus.len() + 1 {
            return Err(ParseError::new(
                line.number,
                line.tokens[1].column,
                format!("expected STU {}, found {index}", stus.len() + 1),
            ));
        }
        let m_text = key_value(&line.tokens[2], "m", line.number)?;
        let memory = rational::parse(m_text)
            .ok_or_else(|| ParseError::new(line.number, line.tokens[2].column, "m must be <p>/<q>"))?;
        let rows = number(&line.tokens[3], "F", line.number)?;
        let slots = number(&line.tokens[4], "N", line.number)?;
        let body = lines.get(i + 1..i + 1 + rows).filter(|b| b.len() == rows).ok_or_else(|| {
            ParseError::new(line.number, line.tokens[3].column, format!("STU {index} declares {rows} rows but input ends early"))
        })?;
        if let Some(bad) = body.iter().find(|l| l.tokens[0].text == "stu") {
            return Err(ParseError::new(bad.number, 1, format!("STU {index} declares {rows} rows")));
        }
        let grid = parse_rows(body, Some(users))?;
        let array = Mlpda::from_rows(grid, antennas).map_err(|e| structural(line.number, e))?;
        if array.slots() != slots {
            return Err(ParseError::new(
                line.number,
                line.tokens[4].column,
                format!("N={slots} but the largest slot index is {}", array.slots()),
            ));
        }
        stus.push(StuArray { memory, array });
        i += 1 + rows;
    }
    if stus.len() != count {
        let line = lines.last().map(|l| l.number).unwrap_or(1);
        return Err(ParseError::new(line, 1, format!("S={count} but {} STU blocks found", stus.len())));
    }
    Lapda::new(stus).map_err(|e| structural(header.number, e))
}

pub fn emit_lapda(lapda: &Lapda) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lapda K={} L={} S={}", lapda.users(), lapda.antennas(), lapda.stu_count());
    for (s, stu) in lapda.stus().iter().enumerate() {
        let a = &stu.array;
        let _ = writeln!(out, "stu {} m={} F={} N={}", s + 1, rational::format(&stu.memory), a.rows(), a.slots());
        out.push_str(&emit_grid(a));
    }
    out
}

pub fn emit_grid(array: &Mlpda) -> String {
    let mut out = String::new();
    for row in array.row_entries() {
        let cells: Vec<String> = row.iter().map(Entry::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
