//! Rate approximation, memory allocation and cache arrangement.

mod allocation;
mod manifest;
mod rates;
mod split;

use std::fmt::Write as _;

use thiserror::Error;

use crate::rational;
use crate::Rational;

pub use allocation::{allocate_memory, allocate_single_user, uniform_allocation, Allocation};
pub use manifest::{arrange_cache, arrange_lapda, CacheEntry, CacheManifest};
pub use rates::{approximate_rates, approximate_rates_with, RateMap};
pub use split::{quantize, quantize_allocation, FilePart, Gain, GainSplit, Placement, StuPlacement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacementError {
    #[error("no STUs or no samples")]
    Empty,
    #[error("rate of STU {} is not a positive finite number", .0 + 1)]
    Rate(usize),
    #[error("memory budget must be a non-negative finite number")]
    Budget,
    #[error("user count and antenna budget must be positive")]
    Dimensions,
    #[error("no feasible allocation")]
    Infeasible,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_error(line: usize, message: impl Into<String>) -> PlacementError {
    PlacementError::Parse { line, message: message.into() }
}

/// `stu,<s>,rate,<float>` per line.
pub fn emit_rates(map: &RateMap<f64>) -> String {
    let mut out = String::new();
    for (s, r) in map.rates.iter().enumerate() {
        let _ = writeln!(out, "stu,{},rate,{r}", s + 1);
    }
    out
}

/// `stu,<s>,m,<p>/<q>` per line.
pub fn emit_memory(memory: &[Rational]) -> String {
    let mut out = String::new();
    for (s, m) in memory.iter().enumerate() {
        let _ = writeln!(out, "stu,{},m,{}", s + 1, rational::format(m));
    }
    out
}

fn parse_records<'a>(text: &'a str, key: &str) -> Result<Vec<(usize, &'a str)>, PlacementError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [tag, index, field, value] = fields[..] else {
            return Err(parse_error(i + 1, format!("expected stu,<s>,{key},<value>")));
        };
        if tag != "stu" {
            return Err(parse_error(i + 1, format!("unknown record '{tag}'")));
        }
        if field != key {
            continue;
        }
        let s: usize = index.parse().map_err(|_| parse_error(i + 1, "STU index must be a positive integer"))?;
        if s != out.len() + 1 {
            return Err(parse_error(i + 1, format!("expected STU {}, found {s}", out.len() + 1)));
        }
        out.push((i + 1, value));
    }
    if out.is_empty() {
        return Err(parse_error(1, format!("no '{key}' records")));
    }
    Ok(out)
}

pub fn parse_rates(text: &str) -> Result<RateMap<f64>, PlacementError> {
    let rates = parse_records(text, "rate")?
        .into_iter()
        .map(|(line, v)| v.parse::<f64>().map_err(|_| parse_error(line, format!("bad rate '{v}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    RateMap::new(rates)
}

pub fn parse_memory(text: &str) -> Result<Vec<Rational>, PlacementError> {
    parse_records(text, "m")?
        .into_iter()
        .map(|(line, v)| rational::parse(v).ok_or_else(|| parse_error(line, format!("bad fraction '{v}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn key_value_files() {
        let map = RateMap::new(vec![3000.0, 0.125, 1e-3]).unwrap();
        let text = emit_rates(&map);
        assert_eq!(text.lines().next(), Some("stu,1,rate,3000"));
        assert_eq!(parse_rates(&text).unwrap(), map);
        let m = vec![ratio(1, 4), ratio(1, 2)];
        let text = emit_memory(&m);
        assert_eq!(text, "stu,1,m,1/4\nstu,2,m,1/2\n");
        assert_eq!(parse_memory(&text).unwrap(), m);
        let both = format!("# combined\n{}{}", emit_rates(&RateMap::new(vec![1.0, 2.0]).unwrap()), text);
        assert_eq!(parse_memory(&both).unwrap(), m);
    }

    #[test]
    fn malformed_records() {
        assert!(matches!(parse_rates("stu,1,rate"), Err(PlacementError::Parse { line: 1, .. })));
        assert!(matches!(parse_rates("stu,2,rate,1.0"), Err(PlacementError::Parse { .. })));
        assert!(matches!(parse_rates("stu,1,rate,-1"), Err(PlacementError::Rate(0))));
        assert!(parse_memory("stu,1,m,1/0").is_err());
    }
}
