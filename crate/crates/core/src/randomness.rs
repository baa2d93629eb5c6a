//! Seed-addressed randomness for the update clocks.
//!
//! Every random quantity is a pure function of `(seed, scope, index)`. The
//! pair at a key is computed with the Philox4x32-10 counter-based generator:
//! the 64-bit seed is the key, and the 128-bit counter packs
//! `[index_lo, index_hi, id, tag << 24 | slot]`. The four output words are
//! turned into two 53-bit fractions
//!
//! ```text
//! a = (w0 << 32 | w1) >> 11        b = (w2 << 32 | w3) >> 11
//! phi = -ln((a + 0.5) / 2^53)      u = b / 2^53
//! ```
//!
//! so `phi` is the inverse-CDF transform of an open-interval uniform (hence
//! strictly positive and Exp(1)) and `u` is uniform on `[0, 1)`.
//!
//! Because nothing depends on generation order, chains at different
//! parameters, boundary conditions, volumes and window lengths all read the
//! same clocks, which is what makes the grand coupling monotone.

use std::sync::Arc;

use crate::graph::{Graph, Permutation};
use crate::{Error, Result};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Philox4x32 with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = u64::from(PHILOX_M0) * u64::from(c[0]);
        let p1 = u64::from(PHILOX_M1) * u64::from(c[2]);
        c = [
            ((p1 >> 32) as u32) ^ c[1] ^ k[0],
            p1 as u32,
            ((p0 >> 32) as u32) ^ c[3] ^ k[1],
            p0 as u32,
        ];
    }
    c
}

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// What a stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    /// Update clock of a host edge.
    Edge(usize),
    /// Slot-`slot` clock sequence of a vertex.
    VertexSequence { vertex: usize, slot: usize },
    /// Claim uniform of a vertex slot (index = tie-break attempt).
    VertexClaim { vertex: usize, slot: usize },
    /// Component uniform of a vertex (index = tie-break attempt).
    VertexComponent(usize),
    /// Cluster spin of a vertex.
    VertexSpin(usize),
    /// Seeds of independent replicas (index = replica number).
    Replica,
}

impl Scope {
    fn words(self) -> (u32, u32) {
        let (tag, id, slot) = match self {
            Scope::Edge(e) => (1u32, e, 0),
            Scope::VertexSequence { vertex, slot } => (2, vertex, slot),
            Scope::VertexClaim { vertex, slot } => (3, vertex, slot),
            Scope::VertexComponent(v) => (4, v, 0),
            Scope::VertexSpin(v) => (5, v, 0),
            Scope::Replica => (6, 0, 0),
        };
        debug_assert!(id <= u32::MAX as usize && slot < 1 << 24);
        (id as u32, tag << 24 | slot as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub scope: Scope,
    pub index: u64,
}

/// The `(phi, u)` pair at `key`: `phi ~ Exp(1)`, `u ~ Uniform[0, 1)`.
pub fn draw(key: StreamKey) -> (f64, f64) {
    let (id, tagged) = key.scope.words();
    let w = philox4x32(
        [key.index as u32, (key.index >> 32) as u32, id, tagged],
        [key.seed as u32, (key.seed >> 32) as u32],
    );
    let a = ((u64::from(w[0]) << 32) | u64::from(w[1])) >> 11;
    let b = ((u64::from(w[2]) << 32) | u64::from(w[3])) >> 11;
    let phi = -((a as f64 + 0.5) * INV_2_53).ln();
    let u = b as f64 * INV_2_53;
    (phi, u)
}

/// Seed for replica `index` of a run seeded with `seed`. Replicas read
/// disjoint, reproducible randomness.
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    let (id, tagged) = Scope::Replica.words();
    let w = philox4x32(
        [index as u32, (index >> 32) as u32, id, tagged],
        [seed as u32, (seed >> 32) as u32],
    );
    (w[0] as u64) << 32 | w[1] as u64
}

/// Summary statistics of `n` draws over distinct edge keys.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DrawAudit {
    pub draws: usize,
    pub phi_mean: f64,
    /// `(mean − 1)·sqrt(n)`, standard normal under the contract.
    pub phi_mean_z: f64,
    /// Kolmogorov–Smirnov distance of `u` from Uniform[0, 1].
    pub u_ks: f64,
    /// Kolmogorov–Smirnov distance of `phi` from Exp(1).
    pub phi_ks: f64,
    /// Correlation of `u` at consecutive keys.
    pub u_lag_correlation: f64,
    /// Correlation of `phi` and `u` within one key.
    pub phi_u_correlation: f64,
}

/// Draws keys `(seed, Edge(e), k)` for `e < 1000`, `k ≥ 1` until `n` pairs
/// are collected and summarizes them.
pub fn audit_draws(seed: u64, n: usize) -> DrawAudit {
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            draw(StreamKey {
                seed,
                scope: Scope::Edge(i % 1000),
                index: (i / 1000) as u64 + 1,
            })
        })
        .collect();
    let nf = n as f64;
    let phi_mean = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let ks = |mut xs: Vec<f64>, cdf: &dyn Fn(f64) -> f64| {
        xs.sort_by(f64::total_cmp);
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
            })
            .fold(0.0, f64::max)
    };
    let u_ks = ks(pairs.iter().map(|p| p.1).collect(), &|x| x.clamp(0.0, 1.0));
    let phi_ks = ks(pairs.iter().map(|p| p.0).collect(), &|x| 1.0 - (-x).exp());
    let u_lag: Vec<(f64, f64)> = pairs.windows(2).map(|w| (w[0].1, w[1].1)).collect();
    DrawAudit {
        draws: n,
        phi_mean,
        phi_mean_z: (phi_mean - 1.0) * nf.sqrt(),
        u_ks,
        phi_ks,
        u_lag_correlation: correlation(&u_lag),
        phi_u_correlation: correlation(&pairs),
    }
}

fn correlation(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let (mx, my) = xy.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in xy {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// The first `k` clock rings of each edge, as `(edge, time, uniform)` with
/// times measured backwards from 0.
pub fn first_events(streams: &impl EdgeStreams, edges: &[usize], k: u64) -> Vec<UpdateEvent> {
    let mut out = Vec::with_capacity(edges.len() * k as usize);
    for &e in edges {
        let mut tau = 0.0;
        for j in 1..=k {
            let (phi, u) = streams.pair(e, j);
            tau += phi;
            out.push(UpdateEvent {
                edge: e,
                time: -tau,
                uniform: u,
            });
        }
    }
    out
}

/// One clock ring: at `time` (in `(−T, 0]`), `edge` is resampled with `uniform`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateEvent {
    pub edge: usize,
    pub time: f64,
    pub uniform: f64,
}

/// Per-edge sequences of `(gap, uniform)` pairs, indexed from `k = 1`.
pub trait EdgeStreams {
    fn pair(&self, edge: usize, k: u64) -> (f64, f64);
}

/// Edge clocks read directly from the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeededStreams {
    pub seed: u64,
}

impl SeededStreams {
    pub fn new(seed: u64) -> SeededStreams {
        SeededStreams { seed }
    }
}

impl EdgeStreams for SeededStreams {
    fn pair(&self, edge: usize, k: u64) -> (f64, f64) {
        draw(StreamKey {
            seed: self.seed,
            scope: Scope::Edge(edge),
            index: k,
        })
    }
}

/// All clock rings of `edges` with `−τ_k ∈ (−window, 0]`, sorted by time.
///
/// Simultaneous rings on different edges (impossible in exact arithmetic)
/// are ordered by edge id and logged. The result for a shorter window is
/// always a suffix of the result for a longer one.
pub fn events_in_window(streams: &impl EdgeStreams, edges: &[usize], window: f64) -> Vec<UpdateEvent> {
    let mut events = Vec::with_capacity((edges.len() as f64 * window.max(0.0) * 1.2) as usize + 4);
    let mut ks = Vec::with_capacity(events.capacity());
    for &e in edges {
        let mut tau = 0.0;
        let mut k = 1u64;
        loop {
            let (phi, u) = streams.pair(e, k);
            tau += phi;
            if tau >= window {
                break;
            }
            events.push(UpdateEvent {
                edge: e,
                time: -tau,
                uniform: u,
            });
            ks.push(k);
            k += 1;
        }
    }
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let (ea, eb) = (&events[a], &events[b]);
        ea.time
            .total_cmp(&eb.time)
            .then(ea.edge.cmp(&eb.edge))
            .then(ks[b].cmp(&ks[a]))
    });
    let sorted: Vec<UpdateEvent> = order.iter().map(|&i| events[i]).collect();
    for w in sorted.windows(2) {
        if w[0].time == w[1].time && w[0].edge != w[1].edge {
            log::warn!(
                "simultaneous clock rings on edges {} and {} at t = {}; ordered by edge id",
                w[0].edge,
                w[1].edge,
                w[0].time
            );
        }
    }
    sorted
}

/// The suffix of a time-sorted event list with `time > −window`.
pub fn window_suffix(events: &[UpdateEvent], window: f64) -> &[UpdateEvent] {
    let start = events.partition_point(|ev| ev.time <= -window);
    &events[start..]
}

#[derive(Debug)]
struct Relabel {
    // for each viewed vertex: the underlying vertex
    vertex: Vec<usize>,
    // for each viewed vertex and slot: the underlying slot
    slot: Vec<Vec<usize>>,
}

/// The i.i.d. vertex field: per vertex `x` and slot `j`, a clock sequence
/// `(φ^j_k(x), U^j_k(x))`, a claim uniform `U^j_*(x)`, a component uniform
/// `U^*(x)` and a spin `σ(x)`.
///
/// A field can be a relabeled view of another one (see [`VertexField::permuted`]),
/// which is how automorphisms act on it.
#[derive(Clone, Debug)]
pub struct VertexField {
    seed: u64,
    slots: usize,
    q: u32,
    view: Option<Arc<Relabel>>,
}

impl VertexField {
    pub fn new(seed: u64, slots: usize, q: u32) -> Result<VertexField> {
        if q < 2 {
            return Err(Error::InvalidParameter("vertex field needs q >= 2".into()));
        }
        Ok(VertexField {
            seed,
            slots,
            q,
            view: None,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    fn base(&self, x: usize) -> usize {
        self.view.as_ref().map_or(x, |r| r.vertex[x])
    }

    fn base_slot(&self, x: usize, j: usize) -> (usize, usize) {
        match &self.view {
            None => (x, j),
            Some(r) => (r.vertex[x], r.slot[x][j]),
        }
    }

    pub fn sequence(&self, x: usize, slot: usize, k: u64) -> (f64, f64) {
        let (vertex, slot) = self.base_slot(x, slot);
        draw(StreamKey {
            seed: self.seed,
            scope: Scope::VertexSequence { vertex, slot },
            index: k,
        })
    }

    /// Claim uniform of slot `slot` at `x`; `attempt > 0` gives the
    /// tie-break sub-stream.
    pub fn claim(&self, x: usize, slot: usize, attempt: u64) -> f64 {
        let (vertex, slot) = self.base_slot(x, slot);
        draw(StreamKey {
            seed: self.seed,
            scope: Scope::VertexClaim { vertex, slot },
            index: attempt,
        })
        .1
    }

    pub fn component_uniform(&self, x: usize, attempt: u64) -> f64 {
        draw(StreamKey {
            seed: self.seed,
            scope: Scope::VertexComponent(self.base(x)),
            index: attempt,
        })
        .1
    }

    /// Spin in `1..=q`.
    pub fn spin(&self, x: usize) -> u32 {
        let u = draw(StreamKey {
            seed: self.seed,
            scope: Scope::VertexSpin(self.base(x)),
            index: 0,
        })
        .1;
        ((u * f64::from(self.q)) as u32).min(self.q - 1) + 1
    }

    /// The field `θ_γ Y`, i.e. `(θ_γ Y)(x) = Y(γ⁻¹x)`, with slots carried
    /// along the neighbor correspondence induced by `γ`.
    pub fn permuted(&self, graph: &Graph, gamma: &Permutation) -> Result<VertexField> {
        if !gamma.is_automorphism(graph) {
            return Err(Error::InvalidParameter("permutation is not an automorphism".into()));
        }
        let inv = gamma.inverse();
        let n = graph.vertex_count();
        let mut vertex = Vec::with_capacity(n);
        let mut slot = Vec::with_capacity(n);
        for x in 0..n {
            let src = inv.apply(x);
            vertex.push(self.base(src));
            let slots = graph
                .neighbors(x)
                .iter()
                .map(|&(y, _)| {
                    let j = graph
                        .slot_of(src, inv.apply(y))
                        .expect("automorphism maps neighbors to neighbors");
                    self.base_slot(src, j).1
                })
                .collect();
            slot.push(slots);
        }
        Ok(VertexField {
            seed: self.seed,
            slots: self.slots,
            q: self.q,
            view: Some(Arc::new(Relabel { vertex, slot })),
        })
    }
}

/// For each edge, the `(vertex, slot)` whose clock sequence it adopts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeAssignment {
    pub owner: Vec<(usize, usize)>,
}

/// Each edge `{x, y}` adopts the clock sequence of the endpoint slot with the
/// smaller claim uniform. Exact ties fall through to the next sub-stream.
pub fn edge_randomness_from_vertices(graph: &Graph, field: &VertexField) -> Result<EdgeAssignment> {
    if graph.max_degree() > field.slots() {
        return Err(Error::InvalidParameter(format!(
            "vertex field has {} slots but the graph has degree {}",
            field.slots(),
            graph.max_degree()
        )));
    }
    let owner = graph
        .edges()
        .iter()
        .map(|&(x, y)| {
            let jx = graph.slot_of(x, y).expect("edge endpoints are adjacent");
            let jy = graph.slot_of(y, x).expect("edge endpoints are adjacent");
            let mut attempt = 0;
            loop {
                let (cx, cy) = (field.claim(x, jx, attempt), field.claim(y, jy, attempt));
                if cx < cy {
                    break (x, jx);
                }
                if cy < cx {
                    break (y, jy);
                }
                log::warn!("claim tie on edge {{{x},{y}}}; using sub-stream {}", attempt + 1);
                attempt += 1;
            }
        })
        .collect();
    Ok(EdgeAssignment { owner })
}

/// Edge clocks borrowed from the vertex field.
pub struct AssignedStreams<'a> {
    pub field: &'a VertexField,
    pub assignment: &'a EdgeAssignment,
}

impl EdgeStreams for AssignedStreams<'_> {
    fn pair(&self, edge: usize, k: u64) -> (f64, f64) {
        let (x, j) = self.assignment.owner[edge];
        self.field.sequence(x, j, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{automorphisms, cycle};

    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32([0; 4], [0; 2]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn draw_is_deterministic() {
        let key = StreamKey {
            seed: 7,
            scope: Scope::Edge(3),
            index: 11,
        };
        let (a, b) = (draw(key), draw(key));
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        assert_ne!(draw(StreamKey { index: 12, ..key }), a);
        assert_ne!(draw(StreamKey { seed: 8, ..key }), a);
    }

    #[test]
    fn audit_on_moderate_sample() {
        let a = audit_draws(99, 100_000);
        assert!(a.phi_mean_z.abs() < 4.0, "{a:?}");
        assert!(a.u_ks < 0.0055 && a.phi_ks < 0.0055, "{a:?}");
        assert!(a.u_lag_correlation.abs() < 0.01 && a.phi_u_correlation.abs() < 0.01, "{a:?}");
    }

    #[test]
    fn event_count_is_poisson() {
        // 10 edges over a window of 5: Poisson(50) per replica
        let edges: Vec<usize> = (0..10).collect();
        let reps = 400;
        let counts: Vec<f64> = (0..reps)
            .map(|r| events_in_window(&SeededStreams::new(replica_seed(3, r)), &edges, 5.0).len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        assert!((mean - 50.0).abs() < 3.0 * (50.0f64 / reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn replica_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| replica_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(replica_seed(1, 0), replica_seed(2, 0));
    }

    #[test]
    fn first_events_match_window() {
        let s = SeededStreams::new(5);
        let first = first_events(&s, &[2], 3);
        let window = events_in_window(&s, &[2], -first[2].time + 1e-9);
        assert_eq!(window.len(), 3);
        assert_eq!(window[0], first[2]);
        assert_eq!(window[2], first[0]);
    }

    #[test]
    fn tiny_window_is_empty() {
        let s = SeededStreams::new(1);
        assert!(events_in_window(&s, &[0, 1, 2], 1e-12).is_empty());
    }

    #[test]
    fn events_are_sorted_and_inside_window() {
        let s = SeededStreams::new(5);
        let ev = events_in_window(&s, &(0..10).collect::<Vec<_>>(), 5.0);
        assert!(ev.windows(2).all(|w| w[0].time < w[1].time));
        assert!(ev.iter().all(|e| e.time > -5.0 && e.time < 0.0));
    }

    #[test]
    fn window_extension_is_a_suffix() {
        let s = SeededStreams::new(99);
        let edges: Vec<usize> = (0..7).collect();
        let long = events_in_window(&s, &edges, 8.0);
        let short = events_in_window(&s, &edges, 3.0);
        assert_eq!(window_suffix(&long, 3.0), &short[..]);
    }

    #[test]
    fn field_permutation_composes() {
        let g = cycle(4).unwrap().graph;
        let auts = automorphisms(&g, 12).unwrap();
        let f = VertexField::new(3, 2, 3).unwrap();
        for a in &auts {
            for b in &auts {
                let ab = f.permuted(&g, b).unwrap().permuted(&g, a).unwrap();
                let direct = f.permuted(&g, &a.compose(b)).unwrap();
                for x in 0..4 {
                    assert_eq!(ab.spin(x), direct.spin(x));
                    for j in 0..2 {
                        assert_eq!(ab.claim(x, j, 0), direct.claim(x, j, 0));
                        assert_eq!(ab.sequence(x, j, 4), direct.sequence(x, j, 4));
                    }
                }
            }
        }
    }

    #[test]
    fn assignment_uses_smaller_claim() {
        let g = cycle(4).unwrap().graph;
        let f = VertexField::new(11, 2, 2).unwrap();
        let a = edge_randomness_from_vertices(&g, &f).unwrap();
        for (e, &(x, y)) in g.edges().iter().enumerate() {
            let cx = f.claim(x, g.slot_of(x, y).unwrap(), 0);
            let cy = f.claim(y, g.slot_of(y, x).unwrap(), 0);
            let expect = if cx < cy { x } else { y };
            assert_eq!(a.owner[e].0, expect);
        }
        assert_eq!(edge_randomness_from_vertices(&g, &f).unwrap(), a);
        let small = VertexField::new(11, 1, 2).unwrap();
        assert!(edge_randomness_from_vertices(&g, &small).is_err());
    }

    #[test]
    fn assignment_is_equivariant() {
        let g = cycle(4).unwrap().graph;
        let f = VertexField::new(21, 2, 2).unwrap();
        let base = edge_randomness_from_vertices(&g, &f).unwrap();
        let streams = AssignedStreams { field: &f, assignment: &base };
        for gamma in automorphisms(&g, 12).unwrap() {
            let pf = f.permuted(&g, &gamma).unwrap();
            let moved = edge_randomness_from_vertices(&g, &pf).unwrap();
            let moved_streams = AssignedStreams { field: &pf, assignment: &moved };
            let emap = gamma.edge_map(&g);
            for e in 0..g.edge_count() {
                assert_eq!(moved.owner[emap[e]].0, gamma.apply(base.owner[e].0));
                for k in 1..5 {
                    assert_eq!(moved_streams.pair(emap[e], k), streams.pair(e, k));
                }
            }
        }
    }
}
