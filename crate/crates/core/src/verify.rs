//! The verification suite: each check runs a sampler against the exact
//! oracle (or a closed form) and reports pass/fail with the measured numbers.
//!
//! Checks are numbered 1–10. [`Scale::Full`] uses the sample sizes and
//! tolerances of the acceptance targets; [`Scale::Quick`] divides sample
//! sizes by ten and widens statistical tolerances by `√10` to match.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cftp::{cftp_exact, grand_coupling_unchecked, Inequality, OrderReport, ParamPoint};
use crate::dynamics::{heat_bath_update, BoundaryKind, RuleSpec, UpdateRule};
use crate::exact::{
    check_domination, check_holley, coupling_is_valid, potts_distribution, rc_distribution, Distribution,
    DominationOutcome, EdgeConfig, Symbols,
};
use crate::graph::{
    automorphisms, build_box, build_torus, complete, cycle, generate_group, path, small_graphs, torus_translations,
    Graph, Host,
};
use crate::potts::{assign_spins_free, factor_map, p_to_beta, sample_spins};
use crate::randomness::{audit_draws, events_in_window, replica_seed, window_suffix, SeededStreams, VertexField};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Quick,
    Full,
}

/// Deliberate faults, used to test that failures are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Order checks compare in the wrong direction.
    FlipOrder,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyOptions {
    pub scale: Scale,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            scale: Scale::Full,
            seed: 2024,
            fault: None,
        }
    }
}

impl VerifyOptions {
    fn count(&self, full: usize) -> usize {
        match self.scale {
            Scale::Full => full,
            Scale::Quick => (full / 10).max(1),
        }
    }

    fn tolerance(&self, full: f64) -> f64 {
        match self.scale {
            Scale::Full => full,
            Scale::Quick => full * 10f64.sqrt(),
        }
    }

    fn flipped(&self) -> bool {
        self.fault == Some(Fault::FlipOrder)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub checks: Vec<CheckResult>,
    /// Pairs checked per inequality by the grand-coupling check.
    pub inequalities: BTreeMap<Inequality, usize>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,name,passed,seconds,detail\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{:.3},\"{}\"\n",
                c.id,
                c.name,
                c.passed,
                c.seconds,
                c.detail.replace('"', "'")
            ));
        }
        out
    }
}

pub const CHECK_NAMES: [&str; 10] = [
    "cftp-matches-oracle",
    "single-edge-marginal",
    "percolation-reduction",
    "grand-coupling-orders",
    "kernel-preserves-order",
    "free-spin-assignment",
    "wired-spin-assignment",
    "holley-implies-domination",
    "factor-map-equivariance",
    "randomness-contracts",
];

/// Outcome of one check body: pass flag, human-readable detail, and the
/// inequality counts when relevant.
struct Outcome {
    passed: bool,
    detail: String,
    orders: Option<OrderReport>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Outcome {
        Outcome {
            passed,
            detail,
            orders: None,
        }
    }
}

/// Runs check `id` (1–10).
pub fn run_check(id: u8, opts: &VerifyOptions) -> CheckResult {
    run_check_with_orders(id, opts).0
}

fn run_check_with_orders(id: u8, opts: &VerifyOptions) -> (CheckResult, Option<OrderReport>) {
    let name = CHECK_NAMES.get((id as usize).wrapping_sub(1)).copied().unwrap_or("unknown");
    let start = Instant::now();
    let outcome = match id {
        1 => cftp_matches_oracle(opts),
        2 => single_edge(opts),
        3 => percolation_reduction(opts),
        4 => grand_coupling_orders(opts),
        5 => kernel_preserves_order(opts),
        6 => free_spins(opts),
        7 => wired_spins(opts),
        8 => holley_implies_domination(opts),
        9 => factor_map_equivariance(opts),
        10 => randomness_contracts(opts),
        _ => Ok(Outcome::new(false, format!("no check numbered {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail, orders) = match outcome {
        Ok(o) => (o.passed, o.detail, o.orders),
        Err(e) => (false, format!("error: {e}"), None),
    };
    log::info!("check {id} {name}: {} ({seconds:.1}s) {detail}", if passed { "pass" } else { "FAIL" });
    (
        CheckResult {
            id,
            name,
            passed,
            detail,
            seconds,
        },
        orders,
    )
}

/// Runs the given checks in order.
pub fn run_checks(ids: &[u8], opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    let mut inequalities = BTreeMap::new();
    for &id in ids {
        let (c, orders) = run_check_with_orders(id, opts);
        if let Some(o) = orders {
            inequalities = o.by_inequality;
        }
        checks.push(c);
    }
    VerifyReport {
        options: opts.clone(),
        checks,
        inequalities,
    }
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    run_checks(&(1..=10).collect::<Vec<_>>(), opts)
}

const T_MAX: f64 = 1e6;

/// Empirical law of exact samples of `rule` over all its graph's edges.
fn sampled_edge_law(rule: &UpdateRule, seed: u64, samples: usize) -> Result<Distribution> {
    let n = rule.graph().edge_count();
    let all: Vec<usize> = (0..n).collect();
    let indices: Vec<usize> = (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            cftp_exact(rule, &SeededStreams::new(replica_seed(seed, r)), T_MAX).map(|s| s.config.index_on(&all))
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; 1 << n];
    for i in indices {
        counts[i] += 1;
    }
    Distribution::empirical(all, Symbols::Bits, &counts)
}

fn edge_marginal(d: &Distribution, site: usize) -> f64 {
    d.site_marginal(site, 1)
}

fn cftp_matches_oracle(opts: &VerifyOptions) -> Result<Outcome> {
    let start = Instant::now();
    let host = complete(3)?;
    let param = ParamPoint::new(0.5, 2.0)?;
    let rule = UpdateRule::free_on(&host.graph, param);
    let n = opts.count(100_000);
    let emp = sampled_edge_law(&rule, opts.seed, n)?;
    let exact = rc_distribution(&host.graph, 0.5, 2.0, None)?;
    let tv = emp.tv_distance(&exact)?;
    let marg = edge_marginal(&emp, 0);
    let secs = start.elapsed().as_secs_f64();
    let passed = tv <= opts.tolerance(0.01) && (marg - 5.0 / 14.0).abs() <= opts.tolerance(0.005) && secs < 60.0;
    Ok(Outcome::new(
        passed,
        format!("K3 p=0.5 q=2, {n} samples: TV {tv:.5}, edge marginal {marg:.5} vs 5/14, {secs:.1}s"),
    ))
}

fn single_edge(opts: &VerifyOptions) -> Result<Outcome> {
    let host = path(2)?;
    let rule = UpdateRule::free_on(&host.graph, ParamPoint::new(0.5, 2.0)?);
    let n = opts.count(100_000);
    let emp = sampled_edge_law(&rule, opts.seed ^ 2, n)?;
    let marg = edge_marginal(&emp, 0);
    Ok(Outcome::new(
        (marg - 1.0 / 3.0).abs() <= opts.tolerance(0.005),
        format!("one edge p=0.5 q=2, {n} samples: marginal {marg:.5} vs 1/3"),
    ))
}

fn percolation_reduction(opts: &VerifyOptions) -> Result<Outcome> {
    let host = build_box(2, 8, 1)?;
    let p = 0.5;
    let rule = UpdateRule::new(&host, "free:1".parse()?, ParamPoint::new(p, 1.0)?)?;
    let n = opts.count(10_000);
    let m = host.graph.edge_count();
    let counts = (0..n as u64)
        .into_par_iter()
        .map(|r| cftp_exact(&rule, &SeededStreams::new(replica_seed(opts.seed ^ 3, r)), T_MAX))
        .try_fold(
            || vec![0u64; m],
            |mut acc, s| {
                let s = s?;
                for (e, c) in acc.iter_mut().enumerate() {
                    *c += s.config.get(e) as u64;
                }
                Ok::<_, crate::Error>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let (worst_edge, worst_z) = counts
        .iter()
        .map(|&c| (c as f64 / n as f64 - p).abs() / sigma)
        .enumerate()
        .fold((0, 0.0), |best, (e, z)| if z > best.1 { (e, z) } else { best });
    let outside = counts
        .iter()
        .filter(|&&c| (c as f64 / n as f64 - p).abs() > 3.0 * sigma)
        .count();
    Ok(Outcome::new(
        outside == 0,
        format!(
            "8x8 box q=1 p=0.5, {n} samples, {m} edges: {outside} outside 3 sigma, largest |z| {worst_z:.2} at edge {worst_edge}"
        ),
    ))
}

fn grand_coupling_orders(opts: &VerifyOptions) -> Result<Outcome> {
    let host = build_box(2, 8, 3)?;
    let mut params = Vec::new();
    for p in [0.2, 0.4, 0.6, 0.8] {
        for q in [1.0, 2.0, 4.0] {
            params.push(ParamPoint::new(p, q)?);
        }
    }
    let seeds = opts.count(100);
    let window = 32.0;
    let mut total = OrderReport::default();
    let mut violations = 0usize;
    let mut first = None;
    let mut uncoalesced = 0usize;
    for s in 0..seeds as u64 {
        let family = grand_coupling_unchecked(&host, &params, &[1, 2, 3], window, replica_seed(opts.seed ^ 4, s))?;
        uncoalesced += family.members.iter().filter(|m| m.coalesced_at.is_none()).count();
        if opts.flipped() {
            // compare in the wrong direction: every strict pair must show up
            for a in &family.members {
                for b in &family.members {
                    if crate::cftp::expected_order(&a.index, &b.index, family.depth).is_some()
                        && b.config.first_violation(&a.config).is_some()
                    {
                        violations += 1;
                        first.get_or_insert_with(|| format!("{} above {}", a.index, b.index));
                    }
                }
            }
            continue;
        }
        match family.check_orders() {
            Ok(r) => total.merge(&r),
            Err(e) => {
                violations += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let by: Vec<String> = total.by_inequality.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut detail = format!(
        "8x8 box, depth 3, 12 parameter points, {seeds} seeds, window {window}: {} pairs checked, {violations} violations; {uncoalesced} members did not coalesce by the window; {}",
        total.pairs_checked,
        by.join(" ")
    );
    if let Some(f) = first {
        detail.push_str(&format!("; first: {f}"));
    }
    Ok(Outcome {
        passed: violations == 0,
        detail,
        orders: Some(total),
    })
}

/// Uniforms around the thresholds of `param`, plus the endpoints.
fn threshold_grid(param: ParamPoint) -> Vec<f64> {
    let lo = param.lower_threshold();
    let p = param.p;
    let eps = 1e-9;
    let mut u = vec![0.0, 1.0, 0.5, lo, p, (lo + p) / 2.0, lo - eps, lo + eps, p - eps, p + eps, 1.0 - eps];
    u.retain(|x| (0.0..=1.0).contains(x));
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n).map(|m| (0..n).filter(|v| m >> v & 1 == 1).collect()).collect()
}

fn kernel_preserves_order(opts: &VerifyOptions) -> Result<Outcome> {
    let graphs = small_graphs(4);
    let mut checked = 0u64;
    let mut exceptions = 0u64;
    let mut first = None;
    for g in &graphs {
        let n = g.vertex_count();
        let m = g.edge_count();
        let mut boundaries: Vec<Option<Vec<usize>>> = vec![None];
        let wired = if n <= 5 { subsets(n) } else { vec![vec![], vec![0], vec![0, n - 1]] };
        boundaries.extend(wired.into_iter().map(Some));
        let configs: Vec<EdgeConfig> = (0..1usize << m)
            .map(|i| EdgeConfig::from_vec((0..m).map(|e| i >> e & 1 == 1).collect()))
            .collect();
        for p in [0.0, 0.3, 0.5, 0.7, 1.0] {
            for q in [1.0, 2.0, 4.0] {
                let param = ParamPoint::new(p, q)?;
                let grid = threshold_grid(param);
                for b in &boundaries {
                    let rule = match b {
                        None => UpdateRule::free_on(g, param),
                        Some(b) => UpdateRule::custom(g, BoundaryKind::Wired, (0..m).collect(), b.clone(), param)?,
                    };
                    for lower in &configs {
                        for upper in configs.iter().filter(|c| lower.is_below(c)) {
                            for e in 0..m {
                                for &u in &grid {
                                    let a = heat_bath_update(lower, e, u, &rule)?;
                                    let b = heat_bath_update(upper, e, u, &rule)?;
                                    let ok = if opts.flipped() { b.is_below(&a) } else { a.is_below(&b) };
                                    checked += 1;
                                    if !ok {
                                        exceptions += 1;
                                        first.get_or_insert_with(|| {
                                            format!(
                                                "graph {:?}, p={p} q={q}, {} vs {}, edge {e}, u={u}",
                                                g.edges(),
                                                lower.to_bits(),
                                                upper.to_bits()
                                            )
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut detail = format!("{} graphs, {checked} ordered update pairs: {exceptions} exceptions", graphs.len());
    if let Some(f) = first {
        detail.push_str(&format!("; first: {f}"));
    }
    Ok(Outcome::new(exceptions == 0, detail))
}

/// Largest deviation from `P(σx=σy) = 1/q + (1−1/q)P(x↔y)` over all pairs.
pub fn pair_identity_gap(graph: &Graph, p: f64, q: usize) -> Result<f64> {
    let n = graph.vertex_count();
    let rc = rc_distribution(graph, p, q as f64, None)?;
    let potts = potts_distribution(graph, q, p_to_beta(p)?, None)?;
    let labels: Vec<(Vec<usize>, f64)> = (0..rc.len())
        .map(|i| {
            let c = EdgeConfig::from_vec(rc.values(i).iter().map(|&v| v == 1).collect());
            (graph.components(c.as_slice()).0, rc.prob(i))
        })
        .collect();
    let spins: Vec<(Vec<usize>, f64)> = (0..potts.len()).map(|i| (potts.values(i), potts.prob(i))).collect();
    let qf = q as f64;
    let mut gap: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            let conn: f64 = labels.iter().filter(|(l, _)| l[x] == l[y]).map(|(_, w)| w).sum();
            let same: f64 = spins.iter().filter(|(s, _)| s[x] == s[y]).map(|(_, w)| w).sum();
            gap = gap.max((same - (1.0 / qf + (1.0 - 1.0 / qf) * conn)).abs());
        }
    }
    Ok(gap)
}

fn free_spins(opts: &VerifyOptions) -> Result<Outcome> {
    let host = complete(3)?;
    let g = &host.graph;
    let p = 0.5;
    let n = opts.count(100_000);
    let vertices = [0, 1, 2];
    let mut parts = Vec::new();
    let mut passed = true;
    for q in [2usize, 3] {
        let rule = UpdateRule::free_on(g, ParamPoint::new(p, q as f64)?);
        let idx: Vec<usize> = (0..n as u64)
            .into_par_iter()
            .map(|r| {
                let seed = replica_seed(opts.seed ^ 6, r);
                let rc = cftp_exact(&rule, &SeededStreams::new(seed), T_MAX)?;
                let field = VertexField::new(seed, g.max_degree(), q as u32)?;
                Ok(assign_spins_free(g, &rc.config, &field)?.index_on(&vertices))
            })
            .collect::<Result<_>>()?;
        let mut counts = vec![0u64; q.pow(3)];
        for i in idx {
            counts[i] += 1;
        }
        let emp = Distribution::empirical(vertices.to_vec(), Symbols::Spins(q), &counts)?;
        let exact = potts_distribution(g, q, p_to_beta(p)?, None)?;
        let tv = emp.tv_distance(&exact)?;
        passed &= tv <= opts.tolerance(0.01);
        parts.push(format!("q={q} TV {tv:.5}"));
    }
    let mut gap: f64 = 0.0;
    let graphs = small_graphs(5);
    for g in &graphs {
        for q in [2, 3] {
            for p in [0.3, 0.7] {
                gap = gap.max(pair_identity_gap(g, p, q)?);
            }
        }
    }
    passed &= gap < 1e-12;
    Ok(Outcome::new(
        passed,
        format!(
            "K3 p=0.5, {n} samples: {}; pair identity on {} graphs: largest gap {gap:.2e}",
            parts.join(", "),
            graphs.len()
        ),
    ))
}

fn wired_spins(opts: &VerifyOptions) -> Result<Outcome> {
    let host = build_box(2, 4, 2)?;
    let g = &host.graph;
    let interior = host.exhaustion.volume(1)?.to_vec();
    let outer = host.exhaustion.wired_boundary(2)?.to_vec();
    let p = 0.5;
    let r = 1u32;
    let n = opts.count(100_000);
    let spec: RuleSpec = "wired:2".parse()?;
    let mut parts = Vec::new();
    let mut passed = true;
    for q in [2usize, 3] {
        let rule = UpdateRule::new(&host, spec, ParamPoint::new(p, q as f64)?)?;
        let idx: Vec<usize> = (0..n as u64)
            .into_par_iter()
            .map(|i| Ok(sample_spins(&rule, r, replica_seed(opts.seed ^ 7, i), T_MAX)?.index_on(&interior)))
            .collect::<Result<_>>()?;
        let mut counts = vec![0u64; q.pow(interior.len() as u32)];
        for i in idx {
            counts[i] += 1;
        }
        let emp = Distribution::empirical(interior.clone(), Symbols::Spins(q), &counts)?;
        let exact = potts_distribution(g, q, p_to_beta(p)?, Some((&outer, r as usize)))?;
        let tv = emp.tv_distance(&exact)?;
        passed &= tv <= opts.tolerance(0.02);
        parts.push(format!("q={q} TV {tv:.5}"));
    }
    Ok(Outcome::new(
        passed,
        format!(
            "4x4 box, outer face clamped to {r}, interior {interior:?}, p=0.5, {n} samples: {}",
            parts.join(", ")
        ),
    ))
}

/// Random positive weights on `{0,1}^n` from a seeded stream.
fn random_law(n: usize, seed: u64, stream: u64) -> Result<Distribution> {
    let weights = (0..1u64 << n)
        .map(|i| {
            let (phi, _) = crate::randomness::draw(crate::randomness::StreamKey {
                seed,
                scope: crate::randomness::Scope::Replica,
                index: stream << 16 | i,
            });
            phi + 0.01
        })
        .collect();
    Distribution::from_weights((0..n).collect(), Symbols::Bits, weights)
}

/// Ising-type weights `exp(J·#agreeing neighbours + Σ h_e ξ(e))` on a path
/// of `n` sites; increasing `h` gives a Holley pair.
fn ising_law(n: usize, j: f64, h: &[f64]) -> Result<Distribution> {
    let weights = (0..1usize << n)
        .map(|i| {
            let x: Vec<bool> = (0..n).map(|s| i >> (n - 1 - s) & 1 == 1).collect();
            let agree = x.windows(2).filter(|w| w[0] == w[1]).count() as f64;
            let field: f64 = x.iter().zip(h).filter(|(b, _)| **b).map(|(_, h)| h).sum();
            (j * agree + field).exp()
        })
        .collect();
    Distribution::from_weights((0..n).collect(), Symbols::Bits, weights)
}

fn holley_implies_domination(opts: &VerifyOptions) -> Result<Outcome> {
    let pairs = opts.count(200).max(20);
    let mut laws: Vec<(Distribution, Distribution)> = Vec::new();
    for k in 0..pairs as u64 {
        let n = 1 + (k % 4) as usize;
        if k % 2 == 0 {
            laws.push((random_law(n, opts.seed ^ 8, 2 * k)?, random_law(n, opts.seed ^ 8, 2 * k + 1)?));
        } else {
            let u = |i: u64| {
                crate::randomness::draw(crate::randomness::StreamKey {
                    seed: opts.seed ^ 8,
                    scope: crate::randomness::Scope::Replica,
                    index: 1 << 40 | k << 8 | i,
                })
                .1
            };
            let j = 2.0 * u(0);
            let h: Vec<f64> = (0..n as u64).map(|s| 2.0 * u(1 + s) - 1.0).collect();
            let h2: Vec<f64> = h.iter().enumerate().map(|(s, x)| x + u(10 + s as u64)).collect();
            laws.push((ising_law(n, j, &h)?, ising_law(n, j, &h2)?));
        }
    }
    let mut rc_pairs = 0;
    for g in small_graphs(4) {
        for q in [1.0, 2.0, 4.0] {
            for (p1, p2) in [(0.2, 0.5), (0.5, 0.8), (0.3, 0.3)] {
                laws.push((rc_distribution(&g, p1, q, None)?, rc_distribution(&g, p2, q, None)?));
                rc_pairs += 1;
            }
        }
    }
    let mut holley = 0;
    let mut contradictions = 0;
    let mut first = None;
    for (k, (mu, nu)) in laws.iter().enumerate() {
        if !check_holley(mu, nu)?.holds() {
            continue;
        }
        holley += 1;
        let ok = match check_domination(mu, nu)? {
            DominationOutcome::Dominated { coupling } => coupling_is_valid(mu, nu, &coupling),
            DominationOutcome::NotDominated { .. } => false,
        };
        if !ok {
            contradictions += 1;
            first.get_or_insert(k);
        }
    }
    let mut detail = format!(
        "{pairs} random pairs and {rc_pairs} random-cluster pairs: Holley holds for {holley}, {contradictions} without a certified coupling"
    );
    if let Some(k) = first {
        detail.push_str(&format!("; first at pair {k}"));
    }
    Ok(Outcome::new(contradictions == 0 && holley > 0, detail))
}

fn equivariance_on(host: &Host, group: &[crate::graph::Permutation], seeds: u64, seed: u64, q: u32) -> Result<u64> {
    let g = &host.graph;
    let (beta, r, window) = (0.4, 1, 16.0);
    let failures = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let field = VertexField::new(replica_seed(seed, s), g.max_degree(), q)?;
            let base = factor_map(host, &field, beta, r, window, 1)?;
            let mut bad = 0u64;
            for gamma in group {
                let moved = factor_map(host, &field.permuted(g, gamma)?, beta, r, window, 1)?;
                let edges = gamma.edge_map(g);
                let ok = (0..g.vertex_count()).all(|x| moved.spins.get(gamma.apply(x)) == base.spins.get(x))
                    && (0..g.edge_count()).all(|e| moved.config.get(edges[e]) == base.config.get(e));
                bad += !ok as u64;
            }
            Ok(bad)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(failures.iter().sum())
}

fn factor_map_equivariance(opts: &VerifyOptions) -> Result<Outcome> {
    let seeds = opts.count(100) as u64;
    let c4 = cycle(4)?;
    let c4_group = automorphisms(&c4.graph, 12)?;
    let torus = build_torus(2, 4)?;
    let torus_group = generate_group(&torus_translations(2, 4), 64)?;
    let bad_c4 = equivariance_on(&c4, &c4_group, seeds, opts.seed ^ 9, 3)?;
    let bad_torus = equivariance_on(&torus, &torus_group, seeds, opts.seed ^ 9, 3)?;
    Ok(Outcome::new(
        bad_c4 + bad_torus == 0,
        format!(
            "{seeds} seeds: 4-cycle {} automorphisms, {bad_c4} mismatches; 4x4 torus {} translations, {bad_torus} mismatches",
            c4_group.len(),
            torus_group.len()
        ),
    ))
}

fn randomness_contracts(opts: &VerifyOptions) -> Result<Outcome> {
    let mut problems = Vec::new();
    // window extension keeps the old window as a suffix
    let host = build_box(2, 6, 1)?;
    let edges: Vec<usize> = (0..host.graph.edge_count()).collect();
    for s in 0..20u64 {
        let streams = SeededStreams::new(replica_seed(opts.seed ^ 10, s));
        let mut t = 0.5;
        while t < 64.0 {
            let short = events_in_window(&streams, &edges, t);
            let long = events_in_window(&streams, &edges, 2.0 * t);
            if window_suffix(&long, t) != short.as_slice() {
                problems.push(format!("suffix identity fails at seed {s}, window {t}"));
            }
            t *= 2.0;
        }
    }
    // same seed, same bytes
    let k3 = complete(3)?;
    let rule = UpdateRule::free_on(&k3.graph, ParamPoint::new(0.5, 2.0)?);
    let run = || -> Result<String> {
        let samples = crate::cftp::sample_many(&rule, opts.seed, 200, T_MAX)?;
        Ok(serde_json::to_string(&samples)?)
    };
    if run()? != run()? {
        problems.push("exact samples differ between reruns".into());
    }
    let params = [ParamPoint::new(0.3, 2.0)?, ParamPoint::new(0.6, 2.0)?];
    let boxed = build_box(2, 6, 2)?;
    let a = grand_coupling_unchecked(&boxed, &params, &[1, 2], 8.0, opts.seed)?;
    let b = grand_coupling_unchecked(&boxed, &params, &[1, 2], 8.0, opts.seed)?;
    if serde_json::to_string(&a)? != serde_json::to_string(&b)? {
        problems.push("grand coupling differs between reruns".into());
    }
    // marginals of the draws
    let n = opts.count(1_000_000);
    let audit = audit_draws(opts.seed, n);
    let sq = (n as f64).sqrt();
    let (z_max, ks_max, corr_max) = (3.29, 1.95 / sq, 3.29 / sq);
    if audit.phi_mean_z.abs() > z_max {
        problems.push(format!("exponential mean z = {:.2}", audit.phi_mean_z));
    }
    if audit.u_ks > ks_max || audit.phi_ks > ks_max {
        problems.push(format!("KS distances {:.5} / {:.5} above {ks_max:.5}", audit.u_ks, audit.phi_ks));
    }
    if audit.u_lag_correlation.abs() > corr_max || audit.phi_u_correlation.abs() > corr_max {
        problems.push(format!(
            "correlations {:.5} / {:.5} above {corr_max:.5}",
            audit.u_lag_correlation, audit.phi_u_correlation
        ));
    }
    let detail = format!(
        "suffix identity on 20 seeds, rerun identity, {n} draws: mean z {:.2}, KS u {:.5}, KS exp {:.5}, lag corr {:.5}, cross corr {:.5}{}",
        audit.phi_mean_z,
        audit.u_ks,
        audit.phi_ks,
        audit.u_lag_correlation,
        audit.phi_u_correlation,
        if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join("; ")) }
    );
    Ok(Outcome::new(problems.is_empty(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            scale: Scale::Quick,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn cheap_checks_pass_at_quick_scale() {
        for id in [2, 5, 8, 10] {
            let c = run_check(id, &quick());
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn flipped_order_is_caught() {
        let opts = VerifyOptions {
            fault: Some(Fault::FlipOrder),
            ..quick()
        };
        assert!(!run_check(5, &opts).passed);
    }

    #[test]
    fn unknown_check_fails() {
        assert!(!run_check(11, &quick()).passed);
    }

    #[test]
    fn pair_identity_on_a_triangle() {
        let g = complete(3).unwrap().graph;
        assert!(pair_identity_gap(&g, 0.4, 3).unwrap() < 1e-12);
    }

    #[test]
    fn threshold_grid_is_sorted_and_in_range() {
        let g = threshold_grid(ParamPoint::new(0.5, 2.0).unwrap());
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&(1.0 / 3.0)) && g.contains(&0.5));
    }
}
