//! From edge configurations to Potts spins.
//!
//! Every open cluster gets one spin. A cluster touching the proxy set (the
//! finite-volume stand-in for an infinite cluster) gets the fixed spin `r`;
//! any other cluster `C` gets `σ(x*)` where `x*` minimizes the component
//! uniform `U*(x)` over `C`. Since `σ` is independent of `U*`, this is a
//! uniform spin, independent across clusters, and it is a deterministic
//! function of the vertex field, so it commutes with automorphisms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cftp::ParamPoint;
use crate::dynamics::{evolve, BoundaryKind, RuleSpec, UpdateRule};
use crate::exact::EdgeConfig;
use crate::graph::{Graph, Host};
use crate::randomness::{edge_randomness_from_vertices, events_in_window, AssignedStreams, VertexField};
use crate::{Error, Result};

/// `p = 1 − e^{−2β}`.
pub fn beta_to_p(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be non-negative")));
    }
    Ok(-(-2.0 * beta).exp_m1())
}

/// `β = −½ ln(1 − p)`; `p = 1` maps to `+∞`.
pub fn p_to_beta(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-0.5 * (-p).ln_1p())
}

/// A spin in `1..=q` for every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    q: u32,
    spins: Vec<u32>,
}

impl SpinConfig {
    pub fn new(q: u32, spins: Vec<u32>) -> Result<SpinConfig> {
        if q < 2 {
            return Err(Error::InvalidParameter("spin configurations need q >= 2".into()));
        }
        if let Some(s) = spins.iter().find(|&&s| s == 0 || s > q) {
            return Err(Error::InvalidParameter(format!("spin {s} outside 1..={q}")));
        }
        Ok(SpinConfig { q, spins })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn get(&self, x: usize) -> u32 {
        self.spins[x]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.spins
    }

    /// Spins in vertex order, one base-36 digit each.
    pub fn to_qary_string(&self) -> String {
        self.spins
            .iter()
            .map(|&s| std::char::from_digit(s, 36).unwrap_or('?'))
            .collect()
    }

    /// Index of the restriction to `vertices` in a spin distribution over
    /// those vertices (see [`crate::exact::potts_distribution`]).
    pub fn index_on(&self, vertices: &[usize]) -> usize {
        vertices
            .iter()
            .fold(0, |acc, &v| acc * self.q as usize + (self.spins[v] - 1) as usize)
    }
}

#[derive(Serialize, Deserialize)]
struct SpinConfigJson {
    q: u32,
    spins: BTreeMap<usize, u32>,
}

impl Serialize for SpinConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpinConfigJson {
            q: self.q,
            spins: self.spins.iter().copied().enumerate().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<SpinConfig, D::Error> {
        let raw = SpinConfigJson::deserialize(d)?;
        if raw.spins.keys().copied().ne(0..raw.spins.len()) {
            return Err(serde::de::Error::custom("spins must cover vertices 0..n"));
        }
        SpinConfig::new(raw.q, raw.spins.into_values().collect()).map_err(serde::de::Error::custom)
    }
}

/// Cluster spins with no proxy set.
pub fn assign_spins_free(graph: &Graph, config: &EdgeConfig, field: &VertexField) -> Result<SpinConfig> {
    assign_spins_wired(graph, config, 1, &[], field)
}

/// Clusters meeting `proxy` get spin `r`; each other cluster gets the spin
/// of its vertex with the smallest component uniform.
pub fn assign_spins_wired(
    graph: &Graph,
    config: &EdgeConfig,
    r: u32,
    proxy: &[usize],
    field: &VertexField,
) -> Result<SpinConfig> {
    let q = field.q();
    if r == 0 || r > q {
        return Err(Error::InvalidParameter(format!("boundary spin {r} outside 1..={q}")));
    }
    if config.len() != graph.edge_count() {
        return Err(Error::InvalidParameter("configuration does not match the graph".into()));
    }
    let (label, count) = graph.components(config.as_slice());
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in label.iter().enumerate() {
        members[c].push(v);
    }
    let mut pinned = vec![false; count];
    for &v in proxy {
        if v >= graph.vertex_count() {
            return Err(Error::InvalidParameter(format!("proxy vertex {v} is not in the graph")));
        }
        pinned[label[v]] = true;
    }
    let mut cluster_spin = vec![r; count];
    for c in 0..count {
        if !pinned[c] {
            cluster_spin[c] = field.spin(leader(&members[c], field));
        }
    }
    SpinConfig::new(q, label.iter().map(|&c| cluster_spin[c]).collect())
}

/// The vertex minimizing `U*`; exact ties are settled by later attempts.
fn leader(cluster: &[usize], field: &VertexField) -> usize {
    let mut tied: Vec<usize> = cluster.to_vec();
    let mut attempt = 0;
    loop {
        let values: Vec<f64> = tied.iter().map(|&x| field.component_uniform(x, attempt)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let next: Vec<usize> = tied
            .iter()
            .zip(&values)
            .filter(|(_, &u)| u == min)
            .map(|(&x, _)| x)
            .collect();
        if next.len() == 1 {
            return next[0];
        }
        log::warn!("component uniform tie among {next:?}; using attempt {}", attempt + 1);
        tied = next;
        attempt += 1;
    }
}

/// Output of [`factor_map`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorOutput {
    pub spins: SpinConfig,
    pub config: EdgeConfig,
    pub p: f64,
    /// Whether the bounding chains agreed at time 0; if not, `config` is the
    /// run from all open and the output is a truncation.
    pub coalesced: bool,
}

/// The factor map: edge clocks are read off the vertex field, the wired
/// dynamics at `p = 1 − e^{−2β}` runs over `(−window, 0]` on `volume`, and
/// clusters are coloured with spin `r` on the wired boundary and by
/// the smallest-`U*` vertex elsewhere.
pub fn factor_map(
    host: &Host,
    field: &VertexField,
    beta: f64,
    r: u32,
    window: f64,
    volume: usize,
) -> Result<FactorOutput> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter("the window must be positive and finite".into()));
    }
    let graph = &host.graph;
    let p = beta_to_p(beta)?;
    let param = ParamPoint::new(p, field.q() as f64)?;
    let spec = RuleSpec {
        kind: BoundaryKind::Wired,
        volume,
    };
    let rule = UpdateRule::new(host, spec, param)?;
    let assignment = edge_randomness_from_vertices(graph, field)?;
    let streams = AssignedStreams {
        field,
        assignment: &assignment,
    };
    let events = events_in_window(&streams, rule.active_edges(), window);
    let upper = evolve(&rule.open_start(), &rule, &events)?;
    let lower = evolve(&rule.closed_start(), &rule, &events)?;
    let coalesced = lower == upper;
    let proxy = host.exhaustion.wired_boundary(volume)?;
    let spins = assign_spins_wired(graph, &upper, r, proxy, field)?;
    Ok(FactorOutput {
        spins,
        config: upper,
        p,
        coalesced,
    })
}

/// One Potts sample: an exact random-cluster sample on `rule` followed by
/// the cluster spin assignment (proxy = the rule's boundary). Both use
/// `seed`, through disjoint streams.
pub fn sample_spins(rule: &UpdateRule, r: u32, seed: u64, t_max: f64) -> Result<SpinConfig> {
    let q = rule.param().q;
    if q.fract() != 0.0 || q < 2.0 {
        return Err(Error::InvalidParameter(format!("spins need an integer q >= 2, got {q}")));
    }
    let streams = crate::randomness::SeededStreams::new(seed);
    let rc = crate::cftp::cftp_exact(rule, &streams, t_max)?;
    let field = VertexField::new(seed, rule.graph().max_degree().max(1), q as u32)?;
    assign_spins_wired(rule.graph(), &rc.config, r, rule.boundary(), &field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{automorphisms, build_box, complete, cycle, path};

    #[test]
    fn beta_p_conversion() {
        assert_eq!(beta_to_p(0.0).unwrap(), 0.0);
        assert!((beta_to_p(2f64.ln()).unwrap() - 0.75).abs() < 1e-15);
        for i in 1..10 {
            let p = i as f64 / 10.0;
            assert!((beta_to_p(p_to_beta(p).unwrap()).unwrap() - p).abs() < 1e-12);
        }
        assert_eq!(p_to_beta(1.0).unwrap(), f64::INFINITY);
        assert_eq!(beta_to_p(f64::INFINITY).unwrap(), 1.0);
        assert!(beta_to_p(-0.1).is_err());
        assert!(p_to_beta(1.1).is_err());
    }

    #[test]
    fn spin_config_serialization() {
        let s = SpinConfig::new(3, vec![1, 3, 2]).unwrap();
        assert_eq!(s.to_qary_string(), "132");
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"q":3,"spins":{"0":1,"1":3,"2":2}}"#);
        assert_eq!(serde_json::from_str::<SpinConfig>(&text).unwrap(), s);
        assert!(SpinConfig::new(3, vec![0]).is_err());
        assert!(SpinConfig::new(3, vec![4]).is_err());
        assert_eq!(s.index_on(&[0, 1]), 2);
    }

    #[test]
    fn free_assignment_examples() {
        let g = cycle(5).unwrap().graph;
        let field = VertexField::new(3, 2, 4).unwrap();
        let all = assign_spins_free(&g, &EdgeConfig::open(5), &field).unwrap();
        assert!(all.as_slice().iter().all(|&s| s == all.get(0)));
        let none = assign_spins_free(&g, &EdgeConfig::closed(5), &field).unwrap();
        for x in 0..5 {
            assert_eq!(none.get(x), field.spin(x));
        }
    }

    #[test]
    fn wired_assignment_examples() {
        let g = cycle(5).unwrap().graph;
        let field = VertexField::new(8, 2, 3).unwrap();
        let c = EdgeConfig::from_bits("10100").unwrap();
        assert_eq!(
            assign_spins_wired(&g, &c, 2, &[], &field).unwrap(),
            assign_spins_free(&g, &c, &field).unwrap()
        );
        let all = assign_spins_wired(&g, &EdgeConfig::open(5), 2, &[3], &field).unwrap();
        assert!(all.as_slice().iter().all(|&s| s == 2));
        assert!(assign_spins_wired(&g, &c, 4, &[], &field).is_err());
    }

    #[test]
    fn assignment_ignores_field_off_cluster() {
        // vertices 0-1 joined, 2 and 3 isolated: changing the field seed only
        // matters through each cluster's own vertices
        let g = path(4).unwrap().graph;
        let c = EdgeConfig::from_bits("100").unwrap();
        for seed in 0..20 {
            let f = VertexField::new(seed, 2, 5).unwrap();
            let s = assign_spins_free(&g, &c, &f).unwrap();
            let lead = if f.component_uniform(0, 0) < f.component_uniform(1, 0) { 0 } else { 1 };
            assert_eq!(s.get(0), f.spin(lead));
            assert_eq!(s.get(1), s.get(0));
            assert_eq!(s.get(2), f.spin(2));
        }
    }

    #[test]
    fn single_edge_equal_spins() {
        let g = path(2).unwrap().graph;
        let rule = UpdateRule::free_on(&g, ParamPoint::new(0.5, 2.0).unwrap());
        let n = 40_000;
        let equal = (0..n)
            .filter(|&r| {
                let s = sample_spins(&rule, 1, crate::randomness::replica_seed(6, r), 1024.0).unwrap();
                s.get(0) == s.get(1)
            })
            .count() as f64
            / n as f64;
        let sd = (2.0f64 / 9.0 / n as f64).sqrt();
        assert!((equal - 2.0 / 3.0).abs() < 4.0 * sd, "{equal}");
    }

    #[test]
    fn factor_map_is_equivariant_on_small_graphs() {
        for host in [cycle(4).unwrap(), complete(4).unwrap()] {
            let g = &host.graph;
            for seed in 0..10 {
                let f = VertexField::new(seed, g.max_degree(), 3).unwrap();
                let base = factor_map(&host, &f, 0.6, 1, 8.0, 1).unwrap();
                for gamma in automorphisms(g, 12).unwrap() {
                    let moved = factor_map(&host, &f.permuted(g, &gamma).unwrap(), 0.6, 1, 8.0, 1).unwrap();
                    for x in 0..g.vertex_count() {
                        assert_eq!(moved.spins.get(gamma.apply(x)), base.spins.get(x));
                    }
                }
            }
        }
    }

    #[test]
    fn factor_map_on_box_pins_boundary() {
        let host = build_box(2, 4, 2).unwrap();
        let f = VertexField::new(2, 4, 3).unwrap();
        let out = factor_map(&host, &f, 0.4, 3, 16.0, 2).unwrap();
        for &v in host.exhaustion.outer() {
            assert_eq!(out.spins.get(v), 3);
        }
        assert!((out.p - beta_to_p(0.4).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_field_gives_own_spins() {
        let g = cycle(4).unwrap().graph;
        let f = VertexField::new(5, 2, 3).unwrap();
        let s = assign_spins_free(&g, &EdgeConfig::closed(4), &f).unwrap();
        assert_eq!(s.as_slice(), &(0..4).map(|x| f.spin(x)).collect::<Vec<_>>()[..]);
    }
}
