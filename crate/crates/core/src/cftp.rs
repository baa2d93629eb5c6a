//! Sampling from the past: monotone coupling from the past on one volume,
//! fixed-window runs, and the grand coupling of many parameters, boundary
//! conditions and volumes driven by one set of clocks.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, BoundaryKind, RuleSpec, UpdateRule};
use crate::exact::EdgeConfig;
use crate::graph::Host;
use crate::randomness::{events_in_window, replica_seed, EdgeStreams, SeededStreams, UpdateEvent};
use crate::{Error, Result};

/// A parameter pair `(p, q)` with `p ∈ [0, 1]`, `q ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub p: f64,
    pub q: f64,
}

impl ParamPoint {
    pub fn new(p: f64, q: f64) -> Result<ParamPoint> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q = {q}: only finite q >= 1 is supported")));
        }
        Ok(ParamPoint { p, q })
    }

    /// `p / (p + (1 − p) q)`, never above `p` and equal to it at `q = 1`.
    pub fn lower_threshold(&self) -> f64 {
        if self.q == 1.0 {
            return self.p;
        }
        (self.p / (self.p + (1.0 - self.p) * self.q)).min(self.p)
    }

    /// The coupling order: `p1 ≤ p2` and `p1/((1−p1)q1) ≤ p2/((1−p2)q2)`.
    ///
    /// The second condition is compared through the computed thresholds,
    /// which is equivalent in exact arithmetic and is exactly what the
    /// update rule uses.
    pub fn precedes(&self, other: &ParamPoint) -> bool {
        self.p <= other.p && self.lower_threshold() <= other.lower_threshold()
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={})", self.p, self.q)
    }
}

/// Initial state of a from-the-past run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    AllClosed,
    AllOpen,
}

impl Start {
    /// All closed for the free rule, all open for the wired rule.
    pub fn proper_for(kind: BoundaryKind) -> Start {
        match kind {
            BoundaryKind::Free => Start::AllClosed,
            BoundaryKind::Wired => Start::AllOpen,
        }
    }
}

/// Runs `rule` from time `−window` to 0 from the given start.
pub fn run_from_past(rule: &UpdateRule, streams: &impl EdgeStreams, window: f64, start: Start) -> Result<EdgeConfig> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("the window must be positive".into()));
    }
    let events = events_in_window(streams, rule.active_edges(), window);
    let init = match start {
        Start::AllClosed => rule.closed_start(),
        Start::AllOpen => rule.open_start(),
    };
    evolve(&init, rule, &events)
}

/// An exact sample and the window at which the sandwich closed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CftpSample {
    pub config: EdgeConfig,
    pub coalesced_at: f64,
}

/// The bounding pair left when the sandwich did not close by `T_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoalescenceFailure {
    pub window: f64,
    pub lower: EdgeConfig,
    pub upper: EdgeConfig,
}

impl CoalescenceFailure {
    pub fn disagreements(&self) -> usize {
        (0..self.lower.len())
            .filter(|&e| self.lower.get(e) != self.upper.get(e))
            .count()
    }
}

impl fmt::Display for CoalescenceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no coalescence within window {}: the bounding chains still differ on {} edges",
            self.window,
            self.disagreements()
        )
    }
}

/// Two configurations that should be ordered but are not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderViolation {
    pub lower: String,
    pub upper: String,
    pub edge: usize,
    pub inequality: Option<Inequality>,
}

impl fmt::Display for OrderViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "order violation: {} should lie below {} but edge {} is open only in the former",
            self.lower, self.upper, self.edge
        )?;
        if let Some(i) = self.inequality {
            write!(f, " ({i})")?;
        }
        Ok(())
    }
}

/// Propp–Wilson with windows 1, 2, 4, … (the last one capped at `t_max`).
/// Every window reuses the clocks of the shorter ones.
pub fn cftp_exact(rule: &UpdateRule, streams: &impl EdgeStreams, t_max: f64) -> Result<CftpSample> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter("T_max must be positive and finite".into()));
    }
    let mut t = 1.0f64;
    loop {
        let window = t.min(t_max);
        let events = events_in_window(streams, rule.active_edges(), window);
        let lower = evolve(&rule.closed_start(), rule, &events)?;
        let upper = evolve(&rule.open_start(), rule, &events)?;
        if let Some(edge) = lower.first_violation(&upper) {
            return Err(Error::OrderViolation(Box::new(OrderViolation {
                lower: format!("lower chain at window {window}"),
                upper: "upper chain".into(),
                edge,
                inequality: None,
            })));
        }
        if lower == upper {
            return Ok(CftpSample {
                config: lower,
                coalesced_at: window,
            });
        }
        if window >= t_max {
            return Err(Error::NoCoalescence(Box::new(CoalescenceFailure { window, lower, upper })));
        }
        t *= 2.0;
    }
}

/// `samples` independent exact samples; replica `r` uses the clocks of
/// `replica_seed(seed, r)`. The output order does not depend on scheduling.
pub fn sample_many(rule: &UpdateRule, seed: u64, samples: usize, t_max: f64) -> Result<Vec<CftpSample>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|r| cftp_exact(rule, &SeededStreams::new(replica_seed(seed, r)), t_max))
        .collect()
}

/// One member of a grand coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingIndex {
    pub param: ParamPoint,
    pub kind: BoundaryKind,
    pub volume: usize,
}

impl CouplingIndex {
    pub fn rule(&self) -> RuleSpec {
        RuleSpec {
            kind: self.kind,
            volume: self.volume,
        }
    }
}

impl fmt::Display for CouplingIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.rule(), self.param)
    }
}

/// The stochastic inequalities witnessed by a grand coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Inequality {
    /// Free measures increase with the volume.
    FreeVolumes,
    /// Free lies below wired at equal parameters.
    FreeBelowWired,
    /// Wired measures decrease with the volume.
    WiredVolumes,
    /// Free measures increase in `p` at fixed `q` on a finite volume.
    FreeInP,
    /// Same, on the largest volume (the stand-in for the limit).
    FreeInPLimit,
    /// Wired measures increase in `p` at fixed `q` on a finite volume.
    WiredInP,
    WiredInPLimit,
    /// Free measures across different `q` under the coupling order.
    GeneralFree,
    GeneralWired,
    /// Free below wired across different parameters.
    GeneralFreeWired,
    /// Any other comparable pair (parameters and volumes both differ).
    Composite,
}

impl Inequality {
    pub const ALL: [Inequality; 11] = [
        Inequality::FreeVolumes,
        Inequality::FreeBelowWired,
        Inequality::WiredVolumes,
        Inequality::FreeInP,
        Inequality::FreeInPLimit,
        Inequality::WiredInP,
        Inequality::WiredInPLimit,
        Inequality::GeneralFree,
        Inequality::GeneralWired,
        Inequality::GeneralFreeWired,
        Inequality::Composite,
    ];
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// If `a` must lie below `b` in every grand coupling on an exhaustion of
/// depth `depth`, the inequality this witnesses.
pub fn expected_order(a: &CouplingIndex, b: &CouplingIndex, depth: usize) -> Option<Inequality> {
    use BoundaryKind::*;
    if a == b || !a.param.precedes(&b.param) {
        return None;
    }
    let same_param = a.param == b.param;
    let same_volume = a.volume == b.volume;
    let same_q = a.param.q == b.param.q;
    let limit = a.volume == depth;
    Some(match (a.kind, b.kind) {
        (Free, Free) if a.volume <= b.volume => match () {
            _ if same_param => Inequality::FreeVolumes,
            _ if same_volume && same_q && limit => Inequality::FreeInPLimit,
            _ if same_volume && same_q => Inequality::FreeInP,
            _ if same_volume => Inequality::GeneralFree,
            _ => Inequality::Composite,
        },
        (Wired, Wired) if a.volume >= b.volume => match () {
            _ if same_param => Inequality::WiredVolumes,
            _ if same_volume && same_q && limit => Inequality::WiredInPLimit,
            _ if same_volume && same_q => Inequality::WiredInP,
            _ if same_volume => Inequality::GeneralWired,
            _ => Inequality::Composite,
        },
        (Free, Wired) => match () {
            _ if same_param => Inequality::FreeBelowWired,
            _ if same_volume => Inequality::GeneralFreeWired,
            _ => Inequality::Composite,
        },
        _ => return None,
    })
}

/// A grand-coupling member's time-0 state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingMember {
    pub index: CouplingIndex,
    pub config: EdgeConfig,
    /// First doubling window at which the bounding chains agreed.
    pub coalesced_at: Option<f64>,
}

/// All members of one grand coupling run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingFamily {
    pub seed: u64,
    pub window: f64,
    pub depth: usize,
    pub members: Vec<CouplingMember>,
}

/// Counts of checked pairs per inequality.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrderReport {
    pub pairs_checked: usize,
    pub by_inequality: BTreeMap<Inequality, usize>,
}

impl OrderReport {
    pub fn merge(&mut self, other: &OrderReport) {
        self.pairs_checked += other.pairs_checked;
        for (k, v) in &other.by_inequality {
            *self.by_inequality.entry(*k).or_default() += v;
        }
    }
}

impl CouplingFamily {
    /// Checks every comparable ordered pair; the first failure is an error.
    pub fn check_orders(&self) -> Result<OrderReport> {
        let mut report = OrderReport::default();
        for a in &self.members {
            for b in &self.members {
                let Some(ineq) = expected_order(&a.index, &b.index, self.depth) else {
                    continue;
                };
                if let Some(edge) = a.config.first_violation(&b.config) {
                    return Err(Error::OrderViolation(Box::new(OrderViolation {
                        lower: a.index.to_string(),
                        upper: b.index.to_string(),
                        edge,
                        inequality: Some(ineq),
                    })));
                }
                report.pairs_checked += 1;
                *report.by_inequality.entry(ineq).or_default() += 1;
            }
        }
        Ok(report)
    }

    /// The JSON report: indices, coalescence windows, the order checks and
    /// optionally the configurations as bit strings.
    pub fn report(&self, orders: &Result<OrderReport>, with_configs: bool) -> serde_json::Value {
        let indices: Vec<serde_json::Value> = self
            .members
            .iter()
            .map(|m| {
                let mut v = serde_json::json!({
                    "p": m.index.param.p,
                    "q": m.index.param.q,
                    "rule": m.index.rule().to_string(),
                    "coalesced_at": m.coalesced_at,
                });
                if with_configs {
                    v["config"] = serde_json::Value::String(m.config.to_bits());
                }
                v
            })
            .collect();
        let (passed, detail) = match orders {
            Ok(r) => (true, serde_json::to_value(r).unwrap_or_default()),
            Err(e) => (false, serde_json::Value::String(e.to_string())),
        };
        serde_json::json!({
            "seed": self.seed,
            "window": self.window,
            "indices": indices,
            "order_checks_passed": passed,
            "order_checks": detail,
        })
    }
}

/// Runs every index in `params × {free, wired} × volumes` on the clocks of
/// `seed` over the window `(−window, 0]` and checks all orderings.
///
/// Each index runs doubling windows up to `window`. If its bounding chains
/// meet, the member is the common state (which is also what any start at
/// `−window` would give); otherwise it is the run from all-closed (free) or
/// all-open (wired).
pub fn grand_coupling(host: &Host, params: &[ParamPoint], volumes: &[usize], window: f64, seed: u64) -> Result<CouplingFamily> {
    let family = grand_coupling_unchecked(host, params, volumes, window, seed)?;
    family.check_orders()?;
    Ok(family)
}

/// [`grand_coupling`] without the order checks.
pub fn grand_coupling_unchecked(
    host: &Host,
    params: &[ParamPoint],
    volumes: &[usize],
    window: f64,
    seed: u64,
) -> Result<CouplingFamily> {
    if params.is_empty() || volumes.is_empty() {
        return Err(Error::InvalidParameter("the index set is empty".into()));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter("the window must be positive and finite".into()));
    }
    let depth = host.exhaustion.depth();
    for &v in volumes {
        host.exhaustion.volume(v)?;
    }
    let mut indices = Vec::new();
    for &param in params {
        for kind in [BoundaryKind::Free, BoundaryKind::Wired] {
            for &volume in volumes {
                indices.push(CouplingIndex { param, kind, volume });
            }
        }
    }
    let members = run_indices(host, &indices, window, seed)?;
    Ok(CouplingFamily {
        seed,
        window,
        depth,
        members,
    })
}

/// Runs the given indices on the clocks of `seed`, as in [`grand_coupling`].
/// Members come back in the order of `indices`.
///
/// Windows double for all pending members together, so rings further back
/// than the longest needed window are never generated.
pub fn run_indices(host: &Host, indices: &[CouplingIndex], window: f64, seed: u64) -> Result<Vec<CouplingMember>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter("the window must be positive and finite".into()));
    }
    let rules: Vec<UpdateRule> = indices
        .iter()
        .map(|index| UpdateRule::new(host, index.rule(), index.param))
        .collect::<Result<_>>()?;
    let all: Vec<usize> = (0..host.graph.edge_count()).collect();
    let mut masks: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for index in indices {
        if !masks.contains_key(&index.volume) {
            let mut mask = vec![false; all.len()];
            for &e in host.exhaustion.edges(index.volume)? {
                mask[e] = true;
            }
            masks.insert(index.volume, mask);
        }
    }
    let streams = SeededStreams::new(seed);
    let mut done: Vec<Option<CouplingMember>> = vec![None; indices.len()];
    let mut t = 1.0f64;
    loop {
        let w = t.min(window);
        let last = w >= window;
        let events = events_in_window(&streams, &all, w);
        // events restricted to each volume's edges, shared by both kinds
        let restricted: BTreeMap<usize, Vec<UpdateEvent>> = masks
            .iter()
            .map(|(&v, mask)| (v, events.iter().filter(|ev| mask[ev.edge]).copied().collect()))
            .collect();
        let pending: Vec<usize> = (0..indices.len()).filter(|&i| done[i].is_none()).collect();
        let results = pending
            .par_iter()
            .map(|&i| {
                let rule = &rules[i];
                let events = &restricted[&indices[i].volume];
                let lower = evolve(&rule.closed_start(), rule, events)?;
                let upper = evolve(&rule.open_start(), rule, events)?;
                let member = |config, coalesced_at| CouplingMember {
                    index: indices[i],
                    config,
                    coalesced_at,
                };
                Ok(if lower == upper {
                    Some(member(lower, Some(w)))
                } else if last {
                    Some(match rule.kind() {
                        BoundaryKind::Free => member(lower, None),
                        BoundaryKind::Wired => member(upper, None),
                    })
                } else {
                    None
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (&i, r) in pending.iter().zip(results) {
            done[i] = r;
        }
        if done.iter().all(Option::is_some) {
            return Ok(done.into_iter().flatten().collect());
        }
        t *= 2.0;
    }
}

/// Which way a sequence must move, coordinatewise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
    Unconstrained,
}

/// Per-edge stabilization of a sequence of configurations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub edges: Vec<usize>,
    /// For each observed edge, the first position after which its value
    /// never changes.
    pub stable_from: Vec<usize>,
    /// Fraction of observed edges already constant over the last two
    /// positions' predecessor, i.e. with `stable_from < len − 1`.
    pub fraction_stabilized: f64,
}

/// Stabilization diagnostic for configurations listed along increasing
/// volumes or windows. A step against `direction` is an error.
pub fn volume_limit_diagnostic(
    sequence: &[EdgeConfig],
    edges: &[usize],
    direction: Direction,
) -> Result<StabilizationReport> {
    if sequence.len() < 2 {
        return Err(Error::InvalidParameter("need at least two configurations".into()));
    }
    for (k, w) in sequence.windows(2).enumerate() {
        let bad = match direction {
            Direction::Nondecreasing => w[0].first_violation(&w[1]),
            Direction::Nonincreasing => w[1].first_violation(&w[0]),
            Direction::Unconstrained => None,
        };
        if let Some(e) = bad {
            return Err(Error::Monotonicity(format!(
                "edge {e} moves against the {direction:?} direction between positions {k} and {}",
                k + 1
            )));
        }
    }
    let last = sequence.len() - 1;
    let stable_from: Vec<usize> = edges
        .iter()
        .map(|&e| {
            let v = sequence[last].get(e);
            let mut k = last;
            while k > 0 && sequence[k - 1].get(e) == v {
                k -= 1;
            }
            k
        })
        .collect();
    let stabilized = stable_from.iter().filter(|&&k| k < last).count();
    Ok(StabilizationReport {
        edges: edges.to_vec(),
        fraction_stabilized: if edges.is_empty() { 1.0 } else { stabilized as f64 / edges.len() as f64 },
        stable_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rc_distribution;
    use crate::graph::{build_box, build_tree, complete, path};

    fn param(p: f64, q: f64) -> ParamPoint {
        ParamPoint::new(p, q).unwrap()
    }

    #[test]
    fn param_point_order() {
        assert!(ParamPoint::new(1.2, 2.0).is_err());
        assert!(ParamPoint::new(0.5, 0.9).is_err());
        assert!((param(0.5, 2.0).lower_threshold() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(param(0.37, 1.0).lower_threshold(), 0.37);
        assert_eq!(param(1.0, 4.0).lower_threshold(), 1.0);
        assert!(param(0.3, 2.0).precedes(&param(0.6, 2.0)));
        assert!(!param(0.6, 2.0).precedes(&param(0.3, 2.0)));
        // larger q at equal p lowers the threshold
        assert!(param(0.5, 4.0).precedes(&param(0.5, 2.0)));
        assert!(!param(0.5, 2.0).precedes(&param(0.5, 4.0)));
        assert!(param(0.5, 2.0).precedes(&param(1.0, 4.0)));
    }

    #[test]
    fn short_window_returns_start() {
        let g = path(2).unwrap().graph;
        let rule = UpdateRule::free_on(&g, param(0.5, 2.0));
        let s = SeededStreams::new(3);
        let out = run_from_past(&rule, &s, 1e-12, Start::AllOpen).unwrap();
        assert_eq!(out, EdgeConfig::open(1));
    }

    #[test]
    fn free_runs_increase_with_the_window() {
        let host = build_box(2, 6, 2).unwrap();
        let rule = UpdateRule::new(&host, "free:2".parse().unwrap(), param(0.5, 2.0)).unwrap();
        for seed in 0..10 {
            let s = SeededStreams::new(seed);
            let mut prev = run_from_past(&rule, &s, 0.5, Start::AllClosed).unwrap();
            for t in [1.0, 2.0, 4.0, 8.0] {
                let next = run_from_past(&rule, &s, t, Start::AllClosed).unwrap();
                assert!(prev.is_below(&next));
                prev = next;
            }
        }
    }

    #[test]
    fn single_edge_coalesces_at_first_event() {
        let g = path(2).unwrap().graph;
        let rule = UpdateRule::free_on(&g, param(0.5, 2.0));
        for seed in 0..50 {
            let s = SeededStreams::new(seed);
            let sample = cftp_exact(&rule, &s, 1024.0).unwrap();
            let first = -events_in_window(&s, &[0], 1e6).last().unwrap().time;
            assert!(sample.coalesced_at > first && (sample.coalesced_at == 1.0 || sample.coalesced_at / 2.0 <= first));
        }
    }

    #[test]
    fn no_coalescence_is_reported() {
        let host = build_box(2, 8, 1).unwrap();
        let rule = UpdateRule::new(&host, "free:1".parse().unwrap(), param(0.5, 2.0)).unwrap();
        match cftp_exact(&rule, &SeededStreams::new(1), 0.25) {
            Err(Error::NoCoalescence(f)) => {
                assert!(f.lower.is_below(&f.upper));
                assert!(f.disagreements() > 0);
                assert_eq!(f.window, 0.25);
            }
            other => panic!("expected a failure report, got {other:?}"),
        }
    }

    #[test]
    fn triangle_small_sample_tv() {
        let t = complete(3).unwrap().graph;
        let rule = UpdateRule::free_on(&t, param(0.5, 2.0));
        let samples = sample_many(&rule, 11, 20_000, 4096.0).unwrap();
        let mut counts = [0u64; 8];
        for s in &samples {
            counts[s.config.index_on(&[0, 1, 2])] += 1;
        }
        let emp = crate::exact::Distribution::empirical(vec![0, 1, 2], crate::exact::Symbols::Bits, &counts).unwrap();
        let exact = rc_distribution(&t, 0.5, 2.0, None).unwrap();
        assert!(emp.tv_distance(&exact).unwrap() < 0.02);
    }

    #[test]
    fn grand_coupling_orders_hold() {
        let host = build_box(2, 6, 3).unwrap();
        let params: Vec<ParamPoint> = [(0.3, 1.0), (0.5, 2.0), (0.6, 2.0), (0.7, 4.0)]
            .iter()
            .map(|&(p, q)| param(p, q))
            .collect();
        for seed in 0..5 {
            let fam = grand_coupling(&host, &params, &[1, 2, 3], 16.0, seed).unwrap();
            assert_eq!(fam.members.len(), 4 * 2 * 3);
            let report = fam.check_orders().unwrap();
            for ineq in [
                Inequality::FreeVolumes,
                Inequality::WiredVolumes,
                Inequality::FreeBelowWired,
                Inequality::FreeInP,
                Inequality::WiredInPLimit,
                Inequality::GeneralFreeWired,
                Inequality::Composite,
            ] {
                assert!(report.by_inequality.get(&ineq).copied().unwrap_or(0) > 0, "{ineq}");
            }
        }
    }

    #[test]
    fn grand_coupling_on_a_tree() {
        let host = build_tree(3, 4, 3).unwrap();
        let params = [param(0.4, 2.0), param(0.8, 2.0)];
        grand_coupling(&host, &params, &[1, 2, 3], 8.0, 5).unwrap();
    }

    #[test]
    fn grand_coupling_is_order_independent() {
        let host = build_box(2, 6, 2).unwrap();
        let a = grand_coupling(&host, &[param(0.4, 2.0), param(0.7, 2.0)], &[1, 2], 8.0, 9).unwrap();
        let b = grand_coupling(&host, &[param(0.7, 2.0), param(0.4, 2.0)], &[2, 1], 8.0, 9).unwrap();
        for m in &a.members {
            let other = b.members.iter().find(|o| o.index == m.index).unwrap();
            assert_eq!(other, m);
        }
    }

    #[test]
    fn coalesced_member_equals_long_run() {
        let host = build_box(2, 5, 2).unwrap();
        let window = 64.0;
        let fam = grand_coupling(&host, &[param(0.3, 2.0)], &[1, 2], window, 21).unwrap();
        let s = SeededStreams::new(21);
        for m in &fam.members {
            let rule = UpdateRule::new(&host, m.index.rule(), m.index.param).unwrap();
            let start = Start::proper_for(m.index.kind);
            assert_eq!(run_from_past(&rule, &s, window, start).unwrap(), m.config);
        }
    }

    #[test]
    fn expected_order_classification() {
        let a = CouplingIndex { param: param(0.3, 2.0), kind: BoundaryKind::Free, volume: 1 };
        let b = CouplingIndex { volume: 2, ..a };
        assert_eq!(expected_order(&a, &b, 2), Some(Inequality::FreeVolumes));
        assert_eq!(expected_order(&b, &a, 2), None);
        let w = CouplingIndex { kind: BoundaryKind::Wired, ..a };
        assert_eq!(expected_order(&a, &w, 2), Some(Inequality::FreeBelowWired));
        assert_eq!(expected_order(&w, &a, 2), None);
        let hi = CouplingIndex { param: param(0.6, 2.0), ..b };
        assert_eq!(expected_order(&b, &hi, 2), Some(Inequality::FreeInPLimit));
        let hq = CouplingIndex { param: param(0.6, 1.0), ..b };
        assert_eq!(expected_order(&b, &hq, 2), Some(Inequality::GeneralFree));
        assert_eq!(expected_order(&a, &hi, 2), Some(Inequality::Composite));
    }

    #[test]
    fn stabilization_examples() {
        let c = EdgeConfig::from_bits("0101").unwrap();
        let r = volume_limit_diagnostic(&[c.clone(), c.clone(), c.clone()], &[0, 1, 2, 3], Direction::Nondecreasing).unwrap();
        assert_eq!(r.stable_from, vec![0; 4]);
        assert_eq!(r.fraction_stabilized, 1.0);

        let seq = ["0000", "0100", "0110", "0110"].map(|b| EdgeConfig::from_bits(b).unwrap());
        let r = volume_limit_diagnostic(&seq, &[0, 1, 2], Direction::Nondecreasing).unwrap();
        assert_eq!(r.stable_from, vec![0, 1, 2]);
        assert!(volume_limit_diagnostic(&seq, &[0], Direction::Nonincreasing).is_err());
        let rev: Vec<EdgeConfig> = seq.iter().rev().cloned().collect();
        assert!(volume_limit_diagnostic(&rev, &[0], Direction::Nonincreasing).is_ok());
        assert!(volume_limit_diagnostic(&rev, &[0], Direction::Nondecreasing).is_err());
    }

    #[test]
    fn grand_report_shape() {
        let host = build_box(2, 4, 2).unwrap();
        let fam = grand_coupling(&host, &[param(0.5, 2.0)], &[1, 2], 4.0, 1).unwrap();
        let orders = fam.check_orders();
        let v = fam.report(&orders, true);
        assert_eq!(v["order_checks_passed"], true);
        assert_eq!(v["indices"].as_array().unwrap().len(), 4);
        assert_eq!(v["indices"][0]["rule"], "free:1");
        assert!(v["indices"][0]["config"].is_string());
    }
}
