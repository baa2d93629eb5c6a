//! Estimators and probes: the threshold gap `Δ_q`, parameter sweeps with
//! cluster observables, spin correlations, and two exploratory probes of
//! open questions (flip gaps under the coupling, and nesting of boundary
//! clusters).
//!
//! "Infinite" is always proxied by the host's outer face: a cluster counts
//! as infinite if one of its open edges touches it.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::cftp::{run_indices, CouplingIndex, ParamPoint};
use crate::dynamics::RuleSpec;
use crate::exact::EdgeConfig;
use crate::graph::{Geometry, Graph, Host};
use crate::potts::SpinConfig;
use crate::randomness::replica_seed;
use crate::{Error, Result};

/// Attached to every report of a probe for an open question.
pub const EXPLORATORY: &str = "EXPLORATORY: empirical evidence only, the question is open";

/// `min{p2 − p1, lo(p2) − lo(p1)}` with `lo(p) = p / (p + (1 − p) q)`.
pub fn delta_q(p1: f64, p2: f64, q: f64) -> Result<f64> {
    let a = ParamPoint::new(p1, q)?;
    let b = ParamPoint::new(p2, q)?;
    if p1 >= p2 {
        return Err(Error::InvalidParameter(format!("need p1 < p2, got {p1} and {p2}")));
    }
    Ok((p2 - p1).min(b.lower_threshold() - a.lower_threshold()))
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Open clusters of the edges in `active`, as vertex labels. Vertices with
/// no active open edge are singletons.
fn clusters_on(graph: &Graph, config: &EdgeConfig, active: &[usize]) -> (Vec<usize>, usize) {
    let mut open = vec![false; graph.edge_count()];
    for &e in active {
        open[e] = config.get(e);
    }
    graph.components(&open)
}

/// One bin of the flip-gap probe: the off-edge states of both chains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlipGapBin {
    pub lower_rest: String,
    pub upper_rest: String,
    pub count: u64,
    pub flips: u64,
    pub estimate: f64,
    pub interval: (f64, f64),
    pub conclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlipGapReport {
    pub banner: &'static str,
    pub lower: ParamPoint,
    pub upper: ParamPoint,
    pub rule: RuleSpec,
    pub edge: usize,
    pub seed: u64,
    pub replicas: usize,
    pub window: f64,
    pub min_count: u64,
    pub delta_q: f64,
    pub bins: Vec<FlipGapBin>,
    /// The conclusive bin with the smallest estimate.
    pub minimum: Option<FlipGapBin>,
}

/// Estimates `P(upper open at e, lower closed at e | off-e states)` from
/// the time-0 states of the coupled chains at `p1 < p2`, over `replicas`
/// clock seeds. Bins with fewer than `min_count` visits are inconclusive.
#[allow(clippy::too_many_arguments)]
pub fn coupled_flip_gap_probe(
    host: &Host,
    rule: RuleSpec,
    p1: f64,
    p2: f64,
    q: f64,
    edge: usize,
    seed: u64,
    replicas: usize,
    window: f64,
    min_count: u64,
) -> Result<FlipGapReport> {
    let gap = delta_q(p1, p2, q)?;
    let active = host.exhaustion.edges(rule.volume)?;
    if !active.contains(&edge) {
        return Err(Error::InvalidParameter(format!("edge {edge} is not updated by {rule}")));
    }
    let lower = ParamPoint::new(p1, q)?;
    let upper = ParamPoint::new(p2, q)?;
    let indices = [lower, upper].map(|param| CouplingIndex {
        param,
        kind: rule.kind,
        volume: rule.volume,
    });
    let rest = |c: &EdgeConfig| -> String {
        active
            .iter()
            .filter(|&&f| f != edge)
            .map(|&f| if c.get(f) { '1' } else { '0' })
            .collect()
    };
    let outcomes = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let m = run_indices(host, &indices, window, replica_seed(seed, r))?;
            let (a, b) = (&m[0].config, &m[1].config);
            Ok(((rest(a), rest(b)), !a.get(edge) && b.get(edge)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for (key, flip) in outcomes {
        let t = tally.entry(key).or_default();
        t.0 += 1;
        t.1 += flip as u64;
    }
    let bins: Vec<FlipGapBin> = tally
        .into_iter()
        .map(|((lower_rest, upper_rest), (count, flips))| FlipGapBin {
            lower_rest,
            upper_rest,
            count,
            flips,
            estimate: flips as f64 / count as f64,
            interval: wilson_interval(flips, count, 1.96),
            conclusive: count >= min_count,
        })
        .collect();
    let minimum = bins
        .iter()
        .filter(|b| b.conclusive)
        .min_by(|a, b| a.estimate.total_cmp(&b.estimate))
        .cloned();
    Ok(FlipGapReport {
        banner: EXPLORATORY,
        lower,
        upper,
        rule,
        edge,
        seed,
        replicas,
        window,
        min_count,
        delta_q: gap,
        bins,
        minimum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub banner: &'static str,
    /// For each boundary-touching cluster of the upper configuration, the
    /// number of boundary-touching clusters of the lower one inside it.
    pub counts: Vec<usize>,
    pub histogram: BTreeMap<usize, usize>,
}

/// Clusters with an open edge incident to `proxy`.
fn proxy_clusters(graph: &Graph, config: &EdgeConfig, proxy: &[bool]) -> (Vec<usize>, BTreeSet<usize>) {
    let (label, _) = graph.components(config.as_slice());
    let touching = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|&(e, &(x, y))| config.get(e) && (proxy[x] || proxy[y]))
        .map(|(_, &(x, _))| label[x])
        .collect();
    (label, touching)
}

/// Counts, for each proxy-infinite cluster of `upper`, the proxy-infinite
/// clusters of `lower` it contains. Requires `lower ≼ upper`.
pub fn simultaneous_cluster_probe(
    graph: &Graph,
    lower: &EdgeConfig,
    upper: &EdgeConfig,
    proxy: &[usize],
) -> Result<ContainmentReport> {
    if lower.len() != graph.edge_count() || upper.len() != graph.edge_count() {
        return Err(Error::InvalidParameter("configurations do not match the graph".into()));
    }
    if let Some(e) = lower.first_violation(upper) {
        return Err(Error::InvalidParameter(format!("configurations are not ordered (edge {e})")));
    }
    let mask = graph.mask(proxy);
    let (lower_label, lower_big) = proxy_clusters(graph, lower, &mask);
    let (upper_label, upper_big) = proxy_clusters(graph, upper, &mask);
    // each lower cluster sits inside one upper cluster; find it via any member
    let mut inside: BTreeMap<usize, BTreeSet<usize>> = upper_big.iter().map(|&c| (c, BTreeSet::new())).collect();
    for v in 0..graph.vertex_count() {
        if lower_big.contains(&lower_label[v]) {
            if let Some(set) = inside.get_mut(&upper_label[v]) {
                set.insert(lower_label[v]);
            }
        }
    }
    let counts: Vec<usize> = inside.values().map(|s| s.len()).collect();
    let mut histogram = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    Ok(ContainmentReport {
        banner: EXPLORATORY,
        counts,
        histogram,
    })
}

/// Sweep settings shared by all grid points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub rule: RuleSpec,
    pub samples: usize,
    pub seed: u64,
    pub t_max: f64,
    /// Vertices for the two-point connectivity matrix.
    pub watch: Vec<usize>,
}

/// Observables at one grid point, averaged over replicas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub param: ParamPoint,
    pub rule: RuleSpec,
    pub samples: usize,
    pub seed: u64,
    pub t_max: f64,
    pub edge_frequencies: Vec<f64>,
    pub edge_density: f64,
    pub edge_density_stderr: f64,
    /// Cluster size → number of clusters, over all samples.
    pub cluster_sizes: BTreeMap<usize, u64>,
    pub largest_cluster_fraction: f64,
    pub largest_cluster_stderr: f64,
    /// Probability that one cluster joins the two faces orthogonal to the
    /// first axis of the volume (boxes only).
    pub spanning_probability: Option<f64>,
    pub spanning_stderr: Option<f64>,
    pub watch: Vec<usize>,
    pub connectivity: Vec<Vec<f64>>,
    /// Replicas whose bounding chains met within `t_max`; the others are
    /// truncated runs.
    pub coalesced: usize,
    pub coalescence_windows: Vec<f64>,
}

/// One `(p, q, rule, volume, observable)` value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub p: f64,
    pub q: f64,
    pub rule: String,
    pub volume: usize,
    pub observable: &'static str,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl RunSummary {
    pub fn rows(&self) -> Vec<SummaryRow> {
        let row = |observable, value, stderr| SummaryRow {
            p: self.param.p,
            q: self.param.q,
            rule: self.rule.to_string(),
            volume: self.rule.volume,
            observable,
            value,
            stderr,
            samples: self.samples,
            seed: self.seed,
        };
        let mut rows = vec![
            row("edge_density", self.edge_density, self.edge_density_stderr),
            row("largest_cluster_fraction", self.largest_cluster_fraction, self.largest_cluster_stderr),
        ];
        if let (Some(v), Some(s)) = (self.spanning_probability, self.spanning_stderr) {
            rows.push(row("spanning_probability", v, s));
        }
        let c = self.coalesced as f64 / self.samples as f64;
        rows.push(row("coalesced_fraction", c, binomial_stderr(c, self.samples)));
        rows
    }
}

struct Observation {
    config: EdgeConfig,
    sizes: Vec<usize>,
    largest: f64,
    spans: Option<bool>,
    joined: Vec<bool>,
    coalesced_at: Option<f64>,
}

/// Face vertex masks of a box volume along the first axis.
fn faces(host: &Host, volume: &[usize]) -> Option<(Vec<bool>, Vec<bool>)> {
    let side = match host.graph.geometry()? {
        Geometry::Box { side, .. } => *side,
        _ => return None,
    };
    let coord = |v: usize| v % side;
    let lo = volume.iter().map(|&v| coord(v)).min()?;
    let hi = volume.iter().map(|&v| coord(v)).max()?;
    let n = host.graph.vertex_count();
    let mut a = vec![false; n];
    let mut b = vec![false; n];
    for &v in volume {
        a[v] = coord(v) == lo;
        b[v] = coord(v) == hi;
    }
    Some((a, b))
}

/// Per grid point observables on `opts.rule`'s volume. All grid points of
/// one replica share clocks, so every observable that is monotone in the
/// configuration must be monotone along the coupling order; a violation is
/// returned as an error.
pub fn sweep_summary(host: &Host, grid: &[ParamPoint], opts: &SweepOptions) -> Result<Vec<RunSummary>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("the parameter grid is empty".into()));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let graph = &host.graph;
    if let Some(&v) = opts.watch.iter().find(|&&v| v >= graph.vertex_count()) {
        return Err(Error::InvalidParameter(format!("watched vertex {v} is not in the graph")));
    }
    let volume = host.exhaustion.volume(opts.rule.volume)?.to_vec();
    let active = host.exhaustion.edges(opts.rule.volume)?.to_vec();
    let face_masks = faces(host, &volume);
    let indices: Vec<CouplingIndex> = grid
        .iter()
        .map(|&param| CouplingIndex {
            param,
            kind: opts.rule.kind,
            volume: opts.rule.volume,
        })
        .collect();

    let observe = |config: EdgeConfig, coalesced_at: Option<f64>| {
        let (label, count) = clusters_on(graph, &config, &active);
        let mut size = vec![0usize; count];
        for &v in &volume {
            size[label[v]] += 1;
        }
        let sizes: Vec<usize> = size.iter().copied().filter(|&s| s > 0).collect();
        let largest = sizes.iter().copied().max().unwrap_or(0) as f64 / volume.len() as f64;
        let spans = face_masks.as_ref().map(|(a, b)| {
            let mut left = vec![false; count];
            for &v in &volume {
                if a[v] {
                    left[label[v]] = true;
                }
            }
            volume.iter().any(|&v| b[v] && left[label[v]])
        });
        let w = &opts.watch;
        let mut joined = Vec::with_capacity(w.len() * w.len());
        for &x in w {
            for &y in w {
                joined.push(label[x] == label[y]);
            }
        }
        Observation {
            config,
            sizes,
            largest,
            spans,
            joined,
            coalesced_at,
        }
    };

    let per_replica = (0..opts.samples as u64)
        .into_par_iter()
        .map(|r| {
            let members = run_indices(host, &indices, opts.t_max, replica_seed(opts.seed, r))?;
            let obs: Vec<Observation> = members.into_iter().map(|m| observe(m.config, m.coalesced_at)).collect();
            for (i, a) in grid.iter().enumerate() {
                for (j, b) in grid.iter().enumerate() {
                    if i == j || !a.precedes(b) {
                        continue;
                    }
                    if let Some(e) = obs[i].config.first_violation(&obs[j].config) {
                        return Err(Error::Monotonicity(format!(
                            "replica {r}: edge {e} open at {a} but closed at {b}"
                        )));
                    }
                    if obs[i].largest > obs[j].largest {
                        return Err(Error::Monotonicity(format!(
                            "replica {r}: largest cluster shrinks from {a} to {b}"
                        )));
                    }
                }
            }
            Ok(obs)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = opts.samples as f64;
    let m = graph.edge_count();
    let k = opts.watch.len();
    let mean_sd = |xs: &mut dyn Iterator<Item = f64>| {
        let (sum, sq) = xs.fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
        let mean = sum / n;
        (mean, ((sq / n - mean * mean).max(0.0) / n).sqrt())
    };
    let summaries = grid
        .iter()
        .enumerate()
        .map(|(i, &param)| {
            let obs = || per_replica.iter().map(move |rep| &rep[i]);
            let mut freq = vec![0.0; m];
            let mut cluster_sizes = BTreeMap::new();
            let mut joined = vec![0usize; k * k];
            let mut windows = Vec::new();
            for o in obs() {
                for (e, f) in freq.iter_mut().enumerate() {
                    if o.config.get(e) {
                        *f += 1.0 / n;
                    }
                }
                for &s in &o.sizes {
                    *cluster_sizes.entry(s).or_insert(0u64) += 1;
                }
                for (slot, &j) in joined.iter_mut().zip(&o.joined) {
                    *slot += j as usize;
                }
                if let Some(t) = o.coalesced_at {
                    windows.push(t);
                }
            }
            let per_active = active.len().max(1) as f64;
            let (density, density_se) =
                mean_sd(&mut obs().map(|o| active.iter().filter(|&&e| o.config.get(e)).count() as f64 / per_active));
            let (largest, largest_se) = mean_sd(&mut obs().map(|o| o.largest));
            let spanning = face_masks
                .as_ref()
                .map(|_| obs().filter(|o| o.spans == Some(true)).count() as f64 / n);
            RunSummary {
                param,
                rule: opts.rule,
                samples: opts.samples,
                seed: opts.seed,
                t_max: opts.t_max,
                edge_frequencies: freq,
                edge_density: density,
                edge_density_stderr: density_se,
                cluster_sizes,
                largest_cluster_fraction: largest,
                largest_cluster_stderr: largest_se,
                spanning_probability: spanning,
                spanning_stderr: spanning.map(|s| binomial_stderr(s, opts.samples)),
                watch: opts.watch.clone(),
                connectivity: joined.chunks(k.max(1)).map(|c| c.iter().map(|&x| x as f64 / n).collect()).collect(),
                coalesced: windows.len(),
                coalescence_windows: windows,
            }
        })
        .collect();
    Ok(summaries)
}

/// Empirical `P(σ_x = σ_y)`.
pub fn potts_correlation(samples: &[SpinConfig], x: usize, y: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("need at least one spin sample".into()));
    }
    if let Some(s) = samples.iter().find(|s| x >= s.len() || y >= s.len()) {
        return Err(Error::InvalidParameter(format!("vertex out of range for {} spins", s.len())));
    }
    Ok(samples.iter().filter(|s| s.get(x) == s.get(y)).count() as f64 / samples.len() as f64)
}

/// `1/q + (1 − 1/q)·P(x ↔ y)` with the connection probability estimated
/// from the edge samples.
pub fn predicted_correlation(graph: &Graph, configs: &[EdgeConfig], x: usize, y: usize, q: f64) -> Result<f64> {
    if configs.is_empty() {
        return Err(Error::InvalidParameter("need at least one edge sample".into()));
    }
    let joined = configs
        .iter()
        .filter(|c| {
            let (label, _) = graph.components(c.as_slice());
            label[x] == label[y]
        })
        .count() as f64
        / configs.len() as f64;
    Ok(1.0 / q + (1.0 - 1.0 / q) * joined)
}
