//! Brute-force enumeration of random-cluster and Potts laws.
//!
//! Everything here is exact up to floating point and exponential in the
//! instance size, so each entry point enforces a cap. These functions are the
//! reference against which the samplers are tested.

mod config;
mod domination;
mod potts;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

pub use config::EdgeConfig;
pub use domination::{
    check_domination, check_domination_capped, check_holley, coupling_is_valid, DominationOutcome,
    HolleyOutcome, DOMINATION_EDGE_CAP, FEASIBILITY_TOLERANCE,
};
pub use potts::{dlr_conditional, potts_distribution, potts_distribution_capped, POTTS_STATE_CAP};

/// Default cap on the number of edges for [`rc_distribution`].
pub const RC_EDGE_CAP: usize = 20;

/// A law on `alphabet^sites`, stored densely.
///
/// Configurations are indexed in lexicographic order of their value strings
/// (first site most significant), so index `i` of a two-letter distribution
/// over edges `0..n` is the bit string of `i` read left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    sites: Vec<usize>,
    symbols: Symbols,
    probs: Vec<f64>,
}

/// What the sites of a [`Distribution`] carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbols {
    /// Edge states, written `0`/`1`.
    Bits,
    /// Potts spins, written `1..=q`.
    Spins(usize),
}

impl Symbols {
    pub fn alphabet(self) -> usize {
        match self {
            Symbols::Bits => 2,
            Symbols::Spins(q) => q,
        }
    }
}

/// One entry of the JSON form of a [`Distribution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub config: String,
    pub prob: f64,
}

impl Distribution {
    /// Normalizes `weights` (one per configuration, in index order).
    pub fn from_weights(sites: Vec<usize>, symbols: Symbols, weights: Vec<f64>) -> Result<Distribution> {
        let alphabet = symbols.alphabet();
        let expected = (alphabet as u64)
            .checked_pow(sites.len() as u32)
            .ok_or_else(|| Error::InvalidParameter("state space too large".into()))?;
        if alphabet < 2 || weights.len() as u64 != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} weights over an alphabet of size {alphabet}, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        let z: f64 = weights.iter().sum();
        if z <= 0.0 {
            return Err(Error::InvalidParameter("total weight is zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / z).collect();
        Ok(Distribution {
            sites,
            symbols,
            probs,
        })
    }

    /// Empirical law from per-configuration counts.
    pub fn empirical(sites: Vec<usize>, symbols: Symbols, counts: &[u64]) -> Result<Distribution> {
        Distribution::from_weights(sites, symbols, counts.iter().map(|&c| c as f64).collect())
    }

    /// Independent Bernoulli(`p_e`) edges.
    pub fn product(sites: Vec<usize>, p: &[f64]) -> Result<Distribution> {
        if p.len() != sites.len() || p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidParameter("one probability in [0,1] per site".into()));
        }
        let n = sites.len();
        let weights = (0..1usize << n)
            .map(|i| {
                (0..n)
                    .map(|s| if bit(i, n, s) { p[s] } else { 1.0 - p[s] })
                    .product()
            })
            .collect();
        Distribution::from_weights(sites, Symbols::Bits, weights)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn alphabet(&self) -> usize {
        self.symbols.alphabet()
    }

    pub fn symbols(&self) -> Symbols {
        self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Value (`0..alphabet`) of every site in configuration `index`.
    pub fn values(&self, index: usize) -> Vec<usize> {
        let n = self.sites.len();
        let a = self.alphabet();
        let mut out = vec![0; n];
        let mut rest = index;
        for s in (0..n).rev() {
            out[s] = rest % a;
            rest /= a;
        }
        out
    }

    pub fn index_of(&self, values: &[usize]) -> usize {
        let a = self.alphabet();
        values.iter().fold(0, |acc, &v| acc * a + v)
    }

    /// Probability that site position `s` takes value `value`.
    pub fn site_marginal(&self, s: usize, value: usize) -> f64 {
        let a = self.alphabet();
        let stride = a.pow((self.sites.len() - 1 - s) as u32);
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride) % a == value)
            .map(|(_, p)| p)
            .sum()
    }

    /// Law of the sub-configuration on the given site positions.
    pub fn marginal(&self, positions: &[usize]) -> Distribution {
        let a = self.alphabet();
        let sites: Vec<usize> = positions.iter().map(|&s| self.sites[s]).collect();
        let mut probs = vec![0.0; a.pow(positions.len() as u32)];
        for (i, &p) in self.probs.iter().enumerate() {
            let vals = self.values(i);
            let j = positions.iter().fold(0, |acc, &s| acc * a + vals[s]);
            probs[j] += p;
        }
        Distribution {
            sites,
            symbols: self.symbols,
            probs,
        }
    }

    /// Total-variation distance; both laws must live on the same space.
    pub fn tv_distance(&self, other: &Distribution) -> Result<f64> {
        if self.sites != other.sites || self.symbols != other.symbols {
            return Err(Error::InvalidParameter("distributions live on different spaces".into()));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Symbol string of configuration `index`: `0`/`1` for edge laws, spins
    /// `1..=q` for spin laws.
    pub fn config_string(&self, index: usize) -> String {
        let offset = match self.symbols {
            Symbols::Bits => 0,
            Symbols::Spins(_) => 1,
        };
        self.values(index)
            .into_iter()
            .map(|v| std::char::from_digit((v + offset) as u32, 36).unwrap_or('?'))
            .collect()
    }

    pub fn to_atoms(&self) -> Vec<Atom> {
        (0..self.len())
            .map(|i| Atom {
                config: self.config_string(i),
                prob: self.probs[i],
            })
            .collect()
    }
}

pub(crate) fn bit(index: usize, n: usize, s: usize) -> bool {
    (index >> (n - 1 - s)) & 1 == 1
}

fn check_param(p: f64, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q}: only q >= 1 is supported")));
    }
    Ok(())
}

/// Number of open clusters, isolated vertices included.
pub fn kappa(graph: &Graph, config: &EdgeConfig) -> usize {
    graph.component_count(config.as_slice())
}

/// Number of open clusters that avoid `boundary`.
pub fn kappa_wired(graph: &Graph, config: &EdgeConfig, boundary: &[usize]) -> usize {
    let (label, count) = graph.components(config.as_slice());
    let mut touches = vec![false; count];
    for &b in boundary {
        touches[label[b]] = true;
    }
    touches.iter().filter(|t| !**t).count()
}

/// The random-cluster law on all edges of `graph`: weight
/// `q^κ ∏ p^ξ(e) (1−p)^(1−ξ(e))`, with κ replaced by [`kappa_wired`] when a
/// boundary is given.
pub fn rc_distribution(graph: &Graph, p: f64, q: f64, boundary: Option<&[usize]>) -> Result<Distribution> {
    rc_distribution_capped(graph, p, q, boundary, RC_EDGE_CAP)
}

pub fn rc_distribution_capped(
    graph: &Graph,
    p: f64,
    q: f64,
    boundary: Option<&[usize]>,
    cap: usize,
) -> Result<Distribution> {
    check_param(p, q)?;
    let n = graph.edge_count();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "edge set",
            size: n as u64,
            cap: cap as u64,
        });
    }
    let mut config = EdgeConfig::closed(n);
    let weights = (0..1usize << n)
        .map(|i| {
            for e in 0..n {
                config.set(e, bit(i, n, e));
            }
            let open = config.open_count() as i32;
            let k = match boundary {
                Some(b) => kappa_wired(graph, &config, b),
                None => kappa(graph, &config),
            };
            q.powi(k as i32) * p.powi(open) * (1.0 - p).powi(n as i32 - open)
        })
        .collect();
    Distribution::from_weights((0..n).collect(), Symbols::Bits, weights)
}

/// Conditional probability that `edge` is open given the other edges, read
/// off from whether its endpoints are joined in `rest` (or, with a boundary,
/// both reach it).
pub fn conditional_edge_prob(
    graph: &Graph,
    p: f64,
    q: f64,
    edge: usize,
    rest: &EdgeConfig,
    boundary: Option<&[usize]>,
) -> Result<f64> {
    check_param(p, q)?;
    if rest.len() != graph.edge_count() || edge >= rest.len() {
        return Err(Error::InvalidParameter("configuration does not match the graph".into()));
    }
    let mut without = rest.clone();
    without.set(edge, false);
    let (label, _) = graph.components(without.as_slice());
    let (x, y) = graph.endpoints(edge);
    let mut joined = label[x] == label[y];
    if let Some(b) = boundary {
        let reaches = |v: usize| b.iter().any(|&w| label[w] == label[v]);
        joined |= reaches(x) && reaches(y);
    }
    Ok(if joined { p } else { p / (p + (1.0 - p) * q) })
}
