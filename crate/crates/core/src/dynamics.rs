//! Heat-bath single-edge dynamics for the free and wired rules.
//!
//! An edge `e = {x, y}` hit by an update with uniform `u` becomes
//!
//! ```text
//! open    if u < lo
//! closed  if u >= p
//! open    if lo <= u < p and x, y are joined without e
//! closed  otherwise
//! ```
//!
//! with `lo = p / (p + (1 − p) q)`. "Joined" means an open path in the
//! active edge set; for the wired rule the boundary vertices count as one
//! vertex. Edges outside the active set never change: closed under the free
//! rule, open under the wired rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cftp::ParamPoint;
use crate::exact::{rc_distribution, Distribution, EdgeConfig, Symbols};
use crate::graph::{Graph, Host};
use crate::randomness::{events_in_window, EdgeStreams, UpdateEvent};
use crate::{Error, Result};

/// Boundary condition of a rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Free,
    Wired,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Free => "free",
            BoundaryKind::Wired => "wired",
        })
    }
}

/// Rule kind plus volume index, written `free:2` or `wired:1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleSpec {
    pub kind: BoundaryKind,
    pub volume: usize,
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.volume)
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleSpec> {
        let bad = || Error::InvalidParameter(format!("rule {s:?} is not of the form free:<i> or wired:<i>"));
        let (kind, volume) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind.trim() {
            "free" => BoundaryKind::Free,
            "wired" => BoundaryKind::Wired,
            _ => return Err(bad()),
        };
        let volume: usize = volume.trim().parse().map_err(|_| bad())?;
        if volume == 0 {
            return Err(Error::InvalidParameter("volume indices start at 1".into()));
        }
        Ok(RuleSpec { kind, volume })
    }
}

impl Serialize for RuleSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RuleSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<RuleSpec, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A heat-bath rule bound to a graph: parameters, active edges and (for the
/// wired rule) the boundary vertex set.
#[derive(Clone, Debug)]
pub struct UpdateRule<'g> {
    graph: &'g Graph,
    kind: BoundaryKind,
    volume: Option<usize>,
    param: ParamPoint,
    lo: f64,
    active: Vec<usize>,
    active_mask: Vec<bool>,
    boundary: Vec<usize>,
    boundary_mask: Vec<bool>,
}

impl<'g> UpdateRule<'g> {
    /// The rule for volume `spec.volume` of the host's exhaustion. The wired
    /// boundary is `∂V_i`, or the host's outer face for the last volume.
    pub fn new(host: &'g Host, spec: RuleSpec, param: ParamPoint) -> Result<UpdateRule<'g>> {
        let ex = &host.exhaustion;
        let active = ex.edges(spec.volume)?.to_vec();
        let boundary = match spec.kind {
            BoundaryKind::Free => Vec::new(),
            BoundaryKind::Wired => ex.wired_boundary(spec.volume)?.to_vec(),
        };
        let mut rule = UpdateRule::custom(&host.graph, spec.kind, active, boundary, param)?;
        rule.volume = Some(spec.volume);
        Ok(rule)
    }

    /// A rule with an explicit active edge set and boundary (ignored for the
    /// free rule).
    pub fn custom(
        graph: &'g Graph,
        kind: BoundaryKind,
        active: Vec<usize>,
        boundary: Vec<usize>,
        param: ParamPoint,
    ) -> Result<UpdateRule<'g>> {
        let mut active_mask = vec![false; graph.edge_count()];
        for &e in &active {
            if e >= graph.edge_count() {
                return Err(Error::InvalidParameter(format!("edge {e} is not in the graph")));
            }
            active_mask[e] = true;
        }
        let mut active = active;
        active.sort_unstable();
        active.dedup();
        let boundary = match kind {
            BoundaryKind::Free => Vec::new(),
            BoundaryKind::Wired => boundary,
        };
        let mut boundary_mask = vec![false; graph.vertex_count()];
        for &v in &boundary {
            if v >= graph.vertex_count() {
                return Err(Error::InvalidParameter(format!("boundary vertex {v} is not in the graph")));
            }
            boundary_mask[v] = true;
        }
        Ok(UpdateRule {
            graph,
            kind,
            volume: None,
            param,
            lo: param.lower_threshold(),
            active,
            active_mask,
            boundary,
            boundary_mask,
        })
    }

    /// Every edge active, free boundary.
    pub fn free_on(graph: &'g Graph, param: ParamPoint) -> UpdateRule<'g> {
        UpdateRule::custom(graph, BoundaryKind::Free, (0..graph.edge_count()).collect(), Vec::new(), param)
            .expect("all edges are valid")
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    /// Volume index, if the rule came from an exhaustion.
    pub fn volume(&self) -> Option<usize> {
        self.volume
    }

    pub fn param(&self) -> ParamPoint {
        self.param
    }

    /// `p / (p + (1 − p) q)`, the opening threshold for separated endpoints.
    pub fn lower_threshold(&self) -> f64 {
        self.lo
    }

    pub fn active_edges(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.active_mask.get(e).copied().unwrap_or(false)
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// State of the edges the rule never touches.
    pub fn fixed_state(&self) -> bool {
        self.kind == BoundaryKind::Wired
    }

    /// Active edges closed, the rest at their fixed state.
    pub fn closed_start(&self) -> EdgeConfig {
        self.start(false)
    }

    /// Active edges open, the rest at their fixed state.
    pub fn open_start(&self) -> EdgeConfig {
        self.start(true)
    }

    fn start(&self, active_open: bool) -> EdgeConfig {
        let fixed = self.fixed_state();
        EdgeConfig::from_vec(
            self.active_mask
                .iter()
                .map(|&a| if a { active_open } else { fixed })
                .collect(),
        )
    }

    /// Checks that `config` has the right length and the fixed edges at
    /// their fixed state.
    pub fn check_config(&self, config: &EdgeConfig) -> Result<()> {
        if config.len() != self.graph.edge_count() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} edges, graph has {}",
                config.len(),
                self.graph.edge_count()
            )));
        }
        let fixed = self.fixed_state();
        if let Some(e) = (0..config.len()).find(|&e| !self.active_mask[e] && config.get(e) != fixed) {
            return Err(Error::InvalidParameter(format!(
                "edge {e} is outside the active set and must stay {}",
                if fixed { "open" } else { "closed" }
            )));
        }
        Ok(())
    }
}

/// Open path from `x` to `y` in `config` not using edge `e`.
pub fn connected_without_edge(graph: &Graph, config: &EdgeConfig, x: usize, y: usize, e: usize) -> bool {
    connected_mod_boundary(graph, config, x, y, e, &[])
}

/// Open path from `x` to `y` avoiding `e`, or open paths avoiding `e` from
/// both `x` and `y` to `boundary`.
pub fn connected_mod_boundary(
    graph: &Graph,
    config: &EdgeConfig,
    x: usize,
    y: usize,
    e: usize,
    boundary: &[usize],
) -> bool {
    let reach = |from: usize| {
        let mut seen = vec![false; graph.vertex_count()];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &(w, f) in graph.neighbors(v) {
                if f != e && config.get(f) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let from_x = reach(x);
    if from_x[y] {
        return true;
    }
    let hits = |seen: &[bool]| boundary.iter().any(|&b| seen[b]);
    hits(&from_x) && hits(&reach(y))
}

/// Union-find over vertices, used as a cache of the open clusters.
#[derive(Clone, Debug)]
struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.iter_mut().for_each(|s| *s = 1);
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            let gp = self.parent[self.parent[v] as usize];
            self.parent[v] = gp;
            v = gp as usize;
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

/// Cluster cache: exact while no open edge has closed since the last
/// rebuild; rebuilt lazily once `rebuild_every` updates have passed.
#[derive(Clone, Debug)]
struct ClusterCache {
    uf: UnionFind,
    valid: bool,
    since_rebuild: u64,
    rebuild_every: u64,
}

/// A running chain: current state plus connectivity scratch space.
#[derive(Clone, Debug)]
pub struct Chain<'r, 'g> {
    rule: &'r UpdateRule<'g>,
    state: EdgeConfig,
    seen: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
    cache: Option<ClusterCache>,
}

impl<'r, 'g> Chain<'r, 'g> {
    pub fn new(rule: &'r UpdateRule<'g>, start: EdgeConfig) -> Result<Chain<'r, 'g>> {
        rule.check_config(&start)?;
        let n = rule.graph.vertex_count();
        Ok(Chain {
            rule,
            state: start,
            seen: vec![0; n],
            epoch: 0,
            queue: Vec::with_capacity(n),
            cache: None,
        })
    }

    /// Answers connectivity queries from a union-find where possible,
    /// rebuilding it at most once every `rebuild_every` updates. Results are
    /// identical to the plain search.
    pub fn with_union_find(mut self, rebuild_every: u64) -> Chain<'r, 'g> {
        let mut cache = ClusterCache {
            uf: UnionFind::new(self.rule.graph.vertex_count()),
            valid: false,
            since_rebuild: 0,
            rebuild_every: rebuild_every.max(1),
        };
        self.rebuild(&mut cache);
        self.cache = Some(cache);
        self
    }

    pub fn state(&self) -> &EdgeConfig {
        &self.state
    }

    pub fn into_state(self) -> EdgeConfig {
        self.state
    }

    pub fn rule(&self) -> &'r UpdateRule<'g> {
        self.rule
    }

    fn rebuild(&self, cache: &mut ClusterCache) {
        cache.uf.reset();
        let g = self.rule.graph;
        for &e in &self.rule.active {
            if self.state.get(e) {
                let (x, y) = g.endpoints(e);
                cache.uf.union(x, y);
            }
        }
        if let Some((&first, rest)) = self.rule.boundary.split_first() {
            for &b in rest {
                cache.uf.union(first, b);
            }
        }
        cache.valid = true;
        cache.since_rebuild = 0;
    }

    /// Whether the endpoints of `e` are joined in the active edges other
    /// than `e`, with the boundary contracted.
    pub fn joined(&mut self, e: usize) -> bool {
        if let Some(mut cache) = self.cache.take() {
            if !cache.valid && cache.since_rebuild >= cache.rebuild_every {
                self.rebuild(&mut cache);
            }
            let answer = (cache.valid && !self.state.get(e)).then(|| {
                let (x, y) = self.rule.graph.endpoints(e);
                cache.uf.find(x) == cache.uf.find(y)
            });
            self.cache = Some(cache);
            if let Some(a) = answer {
                return a;
            }
        }
        self.search(e)
    }

    fn search(&mut self, e: usize) -> bool {
        let rule = self.rule;
        let g = rule.graph;
        let (x, y) = g.endpoints(e);
        if self.epoch == u32::MAX {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
        let epoch = self.epoch;
        let mut contracted = false;
        self.queue.clear();
        self.seen[x] = epoch;
        self.queue.push(x);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            if rule.boundary_mask[v] && !contracted {
                if rule.boundary_mask[y] {
                    return true;
                }
                contracted = true;
                for &b in &rule.boundary {
                    if self.seen[b] != epoch {
                        self.seen[b] = epoch;
                        self.queue.push(b);
                    }
                }
            }
            for &(w, f) in g.neighbors(v) {
                if f == e || self.seen[w] == epoch || !rule.active_mask[f] || !self.state.get(f) {
                    continue;
                }
                if w == y {
                    return true;
                }
                self.seen[w] = epoch;
                self.queue.push(w);
            }
        }
        false
    }

    /// Resamples edge `e` with uniform `u`; returns its new state.
    pub fn update(&mut self, e: usize, u: f64) -> Result<bool> {
        if !self.rule.is_active(e) {
            return Err(Error::InvalidParameter(format!("edge {e} is outside the rule's active set")));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidParameter(format!("uniform {u} outside [0, 1]")));
        }
        Ok(self.apply(e, u))
    }

    fn apply(&mut self, e: usize, u: f64) -> bool {
        let rule = self.rule;
        let new = if u < rule.lo {
            true
        } else if u >= rule.param.p {
            false
        } else {
            self.joined(e)
        };
        let old = self.state.get(e);
        if let Some(cache) = self.cache.as_mut() {
            cache.since_rebuild += 1;
            if new && !old && cache.valid {
                let (x, y) = rule.graph.endpoints(e);
                cache.uf.union(x, y);
            } else if old && !new {
                cache.valid = false;
            }
        }
        self.state.set(e, new);
        new
    }

    /// Applies every event in order.
    pub fn run(&mut self, events: &[UpdateEvent]) -> Result<()> {
        if let Some(ev) = events.iter().find(|ev| !self.rule.is_active(ev.edge)) {
            return Err(Error::InvalidParameter(format!(
                "event on edge {} outside the rule's active set",
                ev.edge
            )));
        }
        for ev in events {
            self.apply(ev.edge, ev.uniform);
        }
        Ok(())
    }
}

/// One heat-bath step on a copy of `config`.
pub fn heat_bath_update(config: &EdgeConfig, edge: usize, u: f64, rule: &UpdateRule) -> Result<EdgeConfig> {
    let mut chain = Chain::new(rule, config.clone())?;
    chain.update(edge, u)?;
    Ok(chain.into_state())
}

/// Applies `events` (time-sorted) to a copy of `config`.
pub fn evolve(config: &EdgeConfig, rule: &UpdateRule, events: &[UpdateEvent]) -> Result<EdgeConfig> {
    let mut chain = Chain::new(rule, config.clone())?;
    chain.run(events)?;
    Ok(chain.into_state())
}

/// The exact stationary law of `rule` on its active edges (sites are the
/// host edge ids). Inactive edges are fixed, so they only change the
/// normalization and are dropped.
pub fn stationary_law(rule: &UpdateRule) -> Result<Distribution> {
    let g = rule.graph();
    let active = rule.active_edges();
    let sub = Graph::new(g.vertex_count(), active.iter().map(|&e| g.endpoints(e)))?;
    let boundary = (rule.kind() == BoundaryKind::Wired).then_some(rule.boundary());
    let param = rule.param();
    let law = rc_distribution(&sub, param.p, param.q, boundary)?;
    Distribution::from_weights(active.to_vec(), Symbols::Bits, law.probs().to_vec())
}

/// State of a forward run at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub config: EdgeConfig,
}

/// Result of [`forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardRun {
    pub final_state: EdgeConfig,
    pub snapshots: Vec<Snapshot>,
    /// Per edge, the fraction of `[0, horizon]` spent open.
    pub occupation: Vec<f64>,
    pub updates: usize,
}

impl ForwardRun {
    /// `time,config` rows with the configuration as a bit string.
    pub fn snapshots_csv(&self) -> String {
        let mut out = String::from("time,config\n");
        for s in &self.snapshots {
            out.push_str(&format!("{},{}\n", s.time, s.config));
        }
        out
    }
}

/// Runs the chain forward over `[0, horizon]` from `start`. The clock ring
/// at `τ_k` is the same one the from-the-past runs place at `−τ_k`.
/// Snapshots are taken at multiples of `every` (and at time 0).
pub fn forward(
    rule: &UpdateRule,
    streams: &impl EdgeStreams,
    start: EdgeConfig,
    horizon: f64,
    every: Option<f64>,
) -> Result<ForwardRun> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("the horizon must be positive and finite".into()));
    }
    if let Some(step) = every {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter("the snapshot interval must be positive".into()));
        }
    }
    let mut events = events_in_window(streams, rule.active_edges(), horizon);
    events.reverse();
    let mut chain = Chain::new(rule, start)?;
    let m = rule.graph.edge_count();
    let mut open_time = vec![0.0; m];
    let mut last = vec![0.0; m];
    let mut snapshots = Vec::new();
    let mut next_snap = every.map(|_| 0.0);
    for ev in &events {
        let t = -ev.time;
        while let (Some(s), Some(step)) = (next_snap, every) {
            if s > t {
                break;
            }
            snapshots.push(Snapshot {
                time: s,
                config: chain.state().clone(),
            });
            next_snap = Some(s + step);
        }
        let e = ev.edge;
        if chain.state().get(e) {
            open_time[e] += t - last[e];
        }
        last[e] = t;
        chain.apply(e, ev.uniform);
    }
    while let (Some(s), Some(step)) = (next_snap, every) {
        if s > horizon {
            break;
        }
        snapshots.push(Snapshot {
            time: s,
            config: chain.state().clone(),
        });
        next_snap = Some(s + step);
    }
    let state = chain.into_state();
    let occupation = (0..m)
        .map(|e| {
            let tail = if state.get(e) { horizon - last[e] } else { 0.0 };
            (open_time[e] + tail) / horizon
        })
        .collect();
    Ok(ForwardRun {
        final_state: state,
        snapshots,
        occupation,
        updates: events.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{conditional_edge_prob, rc_distribution};
    use crate::graph::{build_box, complete, cycle, path, small_graphs};
    use crate::randomness::{replica_seed, SeededStreams};

    fn param(p: f64, q: f64) -> ParamPoint {
        ParamPoint::new(p, q).unwrap()
    }

    fn bits(s: &str) -> EdgeConfig {
        EdgeConfig::from_bits(s).unwrap()
    }

    #[test]
    fn rule_spec_parsing() {
        let r: RuleSpec = "wired:3".parse().unwrap();
        assert_eq!(r, RuleSpec { kind: BoundaryKind::Wired, volume: 3 });
        assert_eq!(r.to_string(), "wired:3");
        for bad in ["wired", "free:0", "open:1", "free:x"] {
            assert!(bad.parse::<RuleSpec>().is_err(), "{bad}");
        }
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"wired:3\"");
    }

    #[test]
    fn connectivity_examples() {
        let t = complete(3).unwrap().graph;
        // edges (0,1), (0,2), (1,2)
        assert!(connected_without_edge(&t, &bits("011"), 0, 1, 0));
        assert!(!connected_without_edge(&t, &bits("100"), 0, 1, 0));
        let c = cycle(4).unwrap().graph;
        let e = c.edge_between(0, 1).unwrap();
        let mut all = EdgeConfig::open(4);
        all.set(e, false);
        assert!(connected_without_edge(&c, &all, 0, 1, e));

        let p = path(3).unwrap().graph;
        assert!(!connected_mod_boundary(&p, &bits("00"), 0, 1, 0, &[0, 2]));
        // both endpoints reach the boundary {0, 3} on the path 0-1-2-3
        let p4 = path(4).unwrap().graph;
        assert!(connected_mod_boundary(&p4, &bits("101"), 1, 2, 1, &[0, 3]));
        assert!(!connected_mod_boundary(&p4, &bits("101"), 1, 2, 1, &[]));
        assert_eq!(
            connected_mod_boundary(&t, &bits("011"), 0, 1, 0, &[]),
            connected_without_edge(&t, &bits("011"), 0, 1, 0)
        );
    }

    #[test]
    fn update_examples() {
        let g = path(2).unwrap().graph;
        let rule = UpdateRule::free_on(&g, param(0.5, 2.0));
        let closed = EdgeConfig::closed(1);
        assert!(heat_bath_update(&closed, 0, 0.2, &rule).unwrap().get(0));
        assert!(!heat_bath_update(&closed, 0, 0.4, &rule).unwrap().get(0));
        // tie at the threshold goes to the else branch
        let lo = rule.lower_threshold();
        assert!(!heat_bath_update(&closed, 0, lo, &rule).unwrap().get(0));

        let t = complete(3).unwrap().graph;
        for q in [1.0, 2.0, 9.0] {
            let rule = UpdateRule::free_on(&t, param(0.5, q));
            assert!(heat_bath_update(&bits("011"), 0, 0.4, &rule).unwrap().get(0));
            assert!(!heat_bath_update(&bits("011"), 0, 0.5, &rule).unwrap().get(0));
        }
    }

    #[test]
    fn update_refuses_inactive_edges() {
        let host = build_box(2, 4, 2).unwrap();
        let spec = RuleSpec { kind: BoundaryKind::Free, volume: 1 };
        let rule = UpdateRule::new(&host, spec, param(0.5, 2.0)).unwrap();
        let outside = (0..host.graph.edge_count()).find(|&e| !rule.is_active(e)).unwrap();
        let start = rule.closed_start();
        assert!(heat_bath_update(&start, outside, 0.1, &rule).is_err());
        assert!(heat_bath_update(&start, rule.active_edges()[0], 1.5, &rule).is_err());
        assert!(Chain::new(&rule, EdgeConfig::open(host.graph.edge_count())).is_err());
    }

    #[test]
    fn evolve_examples() {
        let g = path(2).unwrap().graph;
        let rule = UpdateRule::free_on(&g, param(0.5, 2.0));
        let c = EdgeConfig::closed(1);
        assert_eq!(evolve(&c, &rule, &[]).unwrap(), c);
        let ev = UpdateEvent { edge: 0, time: -0.5, uniform: 0.2 };
        assert!(evolve(&c, &rule, &[ev]).unwrap().get(0));
    }

    #[test]
    fn wired_fixed_edges_stay_open() {
        let host = build_box(2, 6, 2).unwrap();
        let spec = RuleSpec { kind: BoundaryKind::Wired, volume: 1 };
        let rule = UpdateRule::new(&host, spec, param(0.3, 2.0)).unwrap();
        let s = SeededStreams::new(4);
        let events = events_in_window(&s, rule.active_edges(), 5.0);
        let out = evolve(&rule.closed_start(), &rule, &events).unwrap();
        for e in 0..host.graph.edge_count() {
            if !rule.is_active(e) {
                assert!(out.get(e));
            }
        }
    }

    #[test]
    fn chain_search_matches_reference_predicates() {
        for g in small_graphs(5) {
            let n = g.edge_count();
            for boundary in [vec![], vec![0], vec![0, g.vertex_count() - 1]] {
                let kind = if boundary.is_empty() { BoundaryKind::Free } else { BoundaryKind::Wired };
                let rule = UpdateRule::custom(&g, kind, (0..n).collect(), boundary.clone(), param(0.5, 2.0)).unwrap();
                for mask in 0..1usize << n {
                    let c = EdgeConfig::from_vec((0..n).map(|s| mask >> s & 1 == 1).collect());
                    let mut chain = Chain::new(&rule, c.clone()).unwrap();
                    for e in 0..n {
                        let (x, y) = g.endpoints(e);
                        let reference = connected_mod_boundary(&g, &c, x, y, e, &boundary);
                        assert_eq!(chain.joined(e), reference);
                    }
                }
            }
        }
    }

    #[test]
    fn union_find_agrees_with_search() {
        let host = build_box(2, 8, 3).unwrap();
        for spec in ["free:3", "wired:2", "wired:3"] {
            let spec: RuleSpec = spec.parse().unwrap();
            for (p, q) in [(0.5, 2.0), (0.7, 4.0), (0.3, 1.0)] {
                let rule = UpdateRule::new(&host, spec, param(p, q)).unwrap();
                let events = events_in_window(&SeededStreams::new(17), rule.active_edges(), 30.0);
                let mut plain = Chain::new(&rule, rule.closed_start()).unwrap();
                let mut fast = Chain::new(&rule, rule.closed_start()).unwrap().with_union_find(7);
                for ev in &events {
                    assert_eq!(plain.joined(ev.edge), fast.joined(ev.edge));
                    plain.update(ev.edge, ev.uniform).unwrap();
                    fast.update(ev.edge, ev.uniform).unwrap();
                    assert_eq!(plain.state(), fast.state());
                }
            }
        }
    }

    #[test]
    fn stationary_law_of_volume_rules() {
        let host = build_box(2, 4, 2).unwrap();
        // every vertex of the 2x2 centre touches the outside: all wired together
        let rule = UpdateRule::new(&host, "wired:1".parse().unwrap(), param(0.4, 3.0)).unwrap();
        let law = stationary_law(&rule).unwrap();
        assert_eq!(law.sites(), rule.active_edges());
        let product = Distribution::product(law.sites().to_vec(), &[0.4; 4]).unwrap();
        assert!(law.tv_distance(&product).unwrap() < 1e-12);
        let free = UpdateRule::new(&host, "free:2".parse().unwrap(), param(0.4, 3.0)).unwrap();
        assert!(stationary_law(&free).is_err(), "24 edges exceed the cap");
    }

    #[test]
    fn stationary_law_is_the_rc_measure() {
        // random-scan kernel on every small graph: pi P = pi, exactly
        for g in small_graphs(4) {
            let n = g.edge_count();
            let boundaries = [vec![], vec![0]];
            for boundary in &boundaries {
                let kind = if boundary.is_empty() { BoundaryKind::Free } else { BoundaryKind::Wired };
                for (p, q) in [(0.3, 2.0), (0.6, 3.0), (0.5, 1.0)] {
                    let rule = UpdateRule::custom(&g, kind, (0..n).collect(), boundary.clone(), param(p, q)).unwrap();
                    let b = (!boundary.is_empty()).then_some(boundary.as_slice());
                    let pi = rc_distribution(&g, p, q, b).unwrap();
                    let mut next = vec![0.0; 1 << n];
                    for i in 0..1usize << n {
                        let c = EdgeConfig::from_vec((0..n).map(|s| i >> (n - 1 - s) & 1 == 1).collect());
                        let mut chain = Chain::new(&rule, c.clone()).unwrap();
                        for e in 0..n {
                            let lo = rule.lower_threshold();
                            let open = if chain.joined(e) { p } else { lo };
                            let bit = 1 << (n - 1 - e);
                            next[i | bit] += pi.prob(i) * open / n as f64;
                            next[i & !bit] += pi.prob(i) * (1.0 - open) / n as f64;
                            let check = conditional_edge_prob(&g, p, q, e, &c, b).unwrap();
                            assert!((open - check).abs() < 1e-12);
                        }
                    }
                    for i in 0..1usize << n {
                        assert!((next[i] - pi.prob(i)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn order_preserved_on_random_pairs() {
        let host = build_box(2, 6, 1).unwrap();
        let rule = UpdateRule::free_on(&host.graph, param(0.55, 3.0));
        let m = host.graph.edge_count();
        for r in 0..20 {
            let s = SeededStreams::new(replica_seed(8, r));
            let events = events_in_window(&s, rule.active_edges(), 4.0);
            let lower = EdgeConfig::from_vec((0..m).map(|e| (e * 7 + r as usize) % 5 == 0).collect());
            let mut upper = lower.clone();
            for e in 0..m {
                if (e + r as usize) % 3 == 0 {
                    upper.set(e, true);
                }
            }
            let a = evolve(&lower, &rule, &events).unwrap();
            let b = evolve(&upper, &rule, &events).unwrap();
            assert!(a.is_below(&b));
        }
    }

    #[test]
    fn triangle_time_average() {
        let t = complete(3).unwrap().graph;
        let rule = UpdateRule::free_on(&t, param(0.5, 2.0));
        let run = forward(&rule, &SeededStreams::new(2024), EdgeConfig::closed(3), 1e4, None).unwrap();
        assert!((run.occupation[0] - 5.0 / 14.0).abs() < 0.01, "{}", run.occupation[0]);
    }

    #[test]
    fn forward_snapshots() {
        let t = complete(3).unwrap().graph;
        let rule = UpdateRule::free_on(&t, param(0.5, 2.0));
        let run = forward(&rule, &SeededStreams::new(1), EdgeConfig::closed(3), 3.0, Some(1.0)).unwrap();
        let times: Vec<f64> = run.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(run.snapshots[0].config, EdgeConfig::closed(3));
        assert!(run.snapshots_csv().starts_with("time,config\n0,000\n"));
    }
}
