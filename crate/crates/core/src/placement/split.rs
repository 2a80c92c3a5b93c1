//! Memory sharing for fractional caching gains and the per-part placement it induces.

use std::collections::HashMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::pda::{construct_mlpda, Lapda, Mlpda, PdaError};
use crate::rational::{from_usize, to_usize};
use crate::Rational;

/// `K m = lower_share * lower + upper_share * (lower + 1)` with shares summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GainSplit {
    pub lower: usize,
    pub upper: usize,
    /// Fraction of the file placed with the lower gain.
    pub lower_share: Rational,
    pub upper_share: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gain {
    Whole(usize),
    Split(GainSplit),
}

impl Gain {
    pub fn floor(&self) -> usize {
        match self {
            Gain::Whole(t) => *t,
            Gain::Split(s) => s.lower,
        }
    }

    /// Memory fraction reconstructed from the gain(s).
    pub fn memory(&self, users: usize) -> Rational {
        let k = from_usize(users);
        match self {
            Gain::Whole(t) => from_usize(*t) / k,
            Gain::Split(s) => (&s.lower_share * from_usize(s.lower) + &s.upper_share * from_usize(s.upper)) / k,
        }
    }
}

/// Splits a memory fraction whose gain `K m` is not an integer.
pub fn quantize(memory: &Rational, users: usize) -> Gain {
    let km = memory * from_usize(users);
    if let Some(t) = to_usize(&km) {
        return Gain::Whole(t);
    }
    let lower = km.numer().div_floor(km.denom());
    let lower_r = Rational::from_integer(lower.clone());
    let lower_share = &lower_r + Rational::one() - &km;
    let upper_share = &km - &lower_r;
    let lower = to_usize(&lower_r).expect("non-negative gain");
    Gain::Split(GainSplit { lower, upper: lower + 1, lower_share, upper_share })
}

pub fn quantize_allocation(memory: &[Rational], users: usize) -> Vec<Gain> {
    memory.iter().map(|m| quantize(m, users)).collect()
}

/// A share of one file placed with one array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePart {
    pub share: Rational,
    pub array: Arc<Mlpda>,
}

impl FilePart {
    /// Fraction of this part each user caches.
    pub fn memory(&self) -> Rational {
        self.array.memory()
    }

    /// Size of one subfile of this part.
    pub fn subfile_size(&self) -> Rational {
        &self.share / from_usize(self.array.rows())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StuPlacement {
    pub memory: Rational,
    pub gain: Gain,
    /// One part, or the lower- and upper-gain parts of a split.
    pub parts: Vec<FilePart>,
}

/// Per-STU placement with split files resolved into parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    users: usize,
    antennas: usize,
    stus: Vec<StuPlacement>,
}

impl Placement {
    /// Constructs cyclic-window arrays for every gain the memory profile needs.
    pub fn build(users: usize, antennas: usize, memory: &[Rational]) -> Result<Self, PdaError> {
        if memory.is_empty() {
            return Err(PdaError::NoStus);
        }
        let mut arrays: HashMap<usize, Arc<Mlpda>> = HashMap::new();
        let mut array = |t: usize| -> Result<Arc<Mlpda>, PdaError> {
            if let Some(a) = arrays.get(&t) {
                return Ok(a.clone());
            }
            let a = Arc::new(construct_mlpda(users, antennas, t)?);
            arrays.insert(t, a.clone());
            Ok(a)
        };
        let mut stus = Vec::with_capacity(memory.len());
        for m in memory {
            if *m < Rational::zero() || *m > Rational::one() {
                return Err(PdaError::FractionalGain(m.to_string()));
            }
            let gain = quantize(m, users);
            let parts = match &gain {
                Gain::Whole(t) => vec![FilePart { share: Rational::one(), array: array(*t)? }],
                Gain::Split(s) => vec![
                    FilePart { share: s.lower_share.clone(), array: array(s.lower)? },
                    FilePart { share: s.upper_share.clone(), array: array(s.upper)? },
                ],
            };
            stus.push(StuPlacement { memory: m.clone(), gain, parts });
        }
        Ok(Self { users, antennas, stus })
    }

    /// One part per STU, taken verbatim from the family.
    pub fn from_lapda(lapda: &Lapda) -> Self {
        let users = lapda.users();
        let stus = lapda
            .stus()
            .iter()
            .map(|s| StuPlacement {
                memory: s.memory.clone(),
                gain: quantize(&s.memory, users),
                parts: vec![FilePart { share: Rational::one(), array: Arc::new(s.array.clone()) }],
            })
            .collect();
        Self { users, antennas: lapda.antennas(), stus }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn stu_count(&self) -> usize {
        self.stus.len()
    }

    pub fn stus(&self) -> &[StuPlacement] {
        &self.stus
    }

    pub fn stu(&self, s: usize) -> &StuPlacement {
        &self.stus[s]
    }

    pub fn is_split(&self, s: usize) -> bool {
        self.stus[s].parts.len() > 1
    }
}
