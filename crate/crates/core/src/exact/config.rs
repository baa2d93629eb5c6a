use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An assignment of open (`true`) / closed (`false`) to every edge of a host
/// graph, indexed by edge id.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EdgeConfig(Vec<bool>);

impl EdgeConfig {
    pub fn closed(n: usize) -> EdgeConfig {
        EdgeConfig(vec![false; n])
    }

    pub fn open(n: usize) -> EdgeConfig {
        EdgeConfig(vec![true; n])
    }

    pub fn from_vec(values: Vec<bool>) -> EdgeConfig {
        EdgeConfig(values)
    }

    /// Parses a `0`/`1` string in edge-id order.
    pub fn from_bits(bits: &str) -> Result<EdgeConfig> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidParameter(format!("bad edge state {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(EdgeConfig)
    }

    pub fn to_bits(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, e: usize) -> bool {
        self.0[e]
    }

    pub fn set(&mut self, e: usize, open: bool) {
        self.0[e] = open;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn open_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// `self ≼ other`: every edge open in `self` is open in `other`.
    pub fn is_below(&self, other: &EdgeConfig) -> bool {
        self.first_violation(other).is_none()
    }

    /// First edge open in `self` but closed in `other`.
    pub fn first_violation(&self, other: &EdgeConfig) -> Option<usize> {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).position(|(&a, &b)| a && !b)
    }

    /// Lexicographic index of the restriction to `edges` (first listed edge
    /// most significant), matching [`super::Distribution`] indexing.
    pub fn index_on(&self, edges: &[usize]) -> usize {
        edges.iter().fold(0, |acc, &e| acc << 1 | self.0[e] as usize)
    }
}

impl fmt::Debug for EdgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EdgeConfig({})", self.to_bits())
    }
}

impl fmt::Display for EdgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bits())
    }
}

impl Serialize for EdgeConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bits())
    }
}

impl<'de> Deserialize<'de> for EdgeConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        EdgeConfig::from_bits(&s).map_err(serde::de::Error::custom)
    }
}
