//! Holley's single-site criterion and Strassen domination on `{0,1}^E`.
//!
//! Domination is decided as a transport problem: mass `μ(ξ)` must be routed
//! from each `ξ` to configurations `η ≽ ξ` so that every `η` receives exactly
//! `μ′(η)`. A max flow of value one is a monotone coupling; otherwise the
//! source side of a minimum cut yields an up-set with `μ(U) > μ′(U)`.

use super::{Distribution, EdgeConfig, Symbols};
use crate::{Error, Result};

/// Largest edge count accepted by [`check_domination`]; the network has
/// `3^|E|` arcs.
pub const DOMINATION_EDGE_CAP: usize = 10;

/// Absolute tolerance on the max-flow value.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

const HOLLEY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum HolleyOutcome {
    Holds,
    /// `μ(X_e = 1 | ξ) > μ′(X_e = 1 | ξ′)` although `ξ ≼ ξ′`. The off-`e`
    /// configurations are reported with edge `e` closed.
    Violation {
        edge: usize,
        xi: EdgeConfig,
        xi_prime: EdgeConfig,
        lower: f64,
        upper: f64,
    },
}

impl HolleyOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, HolleyOutcome::Holds)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DominationOutcome {
    /// `(from, to, mass)` triples with `from ≼ to`, indices as in the
    /// distributions.
    Dominated { coupling: Vec<(usize, usize, f64)> },
    /// An increasing event (as a list of configuration indices) whose
    /// `μ`-mass exceeds its `μ′`-mass.
    NotDominated {
        event: Vec<usize>,
        mass: f64,
        mass_prime: f64,
    },
}

impl DominationOutcome {
    pub fn dominated(&self) -> bool {
        matches!(self, DominationOutcome::Dominated { .. })
    }
}

fn same_binary_space(mu: &Distribution, nu: &Distribution) -> Result<usize> {
    if mu.symbols() != Symbols::Bits || nu.symbols() != Symbols::Bits || mu.sites() != nu.sites() {
        return Err(Error::InvalidParameter(
            "both laws must live on the same {0,1}^E".into(),
        ));
    }
    Ok(mu.sites().len())
}

fn to_config(index: usize, n: usize) -> EdgeConfig {
    EdgeConfig::from_vec((0..n).map(|s| super::bit(index, n, s)).collect())
}

/// Checks the hypothesis of Holley's inequality for every site and every
/// ordered pair of off-site configurations.
pub fn check_holley(mu: &Distribution, mu_prime: &Distribution) -> Result<HolleyOutcome> {
    let n = same_binary_space(mu, mu_prime)?;
    if n > DOMINATION_EDGE_CAP + 4 {
        return Err(Error::CapExceeded {
            what: "edge set",
            size: n as u64,
            cap: (DOMINATION_EDGE_CAP + 4) as u64,
        });
    }
    if mu.probs().iter().chain(mu_prime.probs()).any(|&p| p <= 0.0) {
        return Err(Error::Refused(
            "Holley's criterion needs every configuration to have positive probability".into(),
        ));
    }
    let full = (1usize << n) - 1;
    for s in 0..n {
        let b = 1usize << (n - 1 - s);
        let cond = |d: &Distribution, off: usize| {
            let one = d.prob(off | b);
            one / (one + d.prob(off))
        };
        let lower: Vec<f64> = (0..=full).map(|i| if i & b == 0 { cond(mu, i) } else { 0.0 }).collect();
        let off_mask = full & !b;
        for hi in 0..=full {
            if hi & b != 0 {
                continue;
            }
            let upper = cond(mu_prime, hi);
            // every sub-configuration of `hi` on the off-site positions
            let mut lo = hi;
            loop {
                if lower[lo] > upper + HOLLEY_TOLERANCE {
                    return Ok(HolleyOutcome::Violation {
                        edge: mu.sites()[s],
                        xi: to_config(lo, n),
                        xi_prime: to_config(hi, n),
                        lower: lower[lo],
                        upper,
                    });
                }
                if lo == 0 {
                    break;
                }
                lo = (lo - 1) & hi & off_mask;
            }
        }
    }
    Ok(HolleyOutcome::Holds)
}

/// Decides `μ ≼_D μ′` with the default edge cap.
pub fn check_domination(mu: &Distribution, mu_prime: &Distribution) -> Result<DominationOutcome> {
    check_domination_capped(mu, mu_prime, DOMINATION_EDGE_CAP)
}

pub fn check_domination_capped(mu: &Distribution, mu_prime: &Distribution, cap: usize) -> Result<DominationOutcome> {
    let n = same_binary_space(mu, mu_prime)?;
    if n > cap {
        return Err(Error::CapExceeded {
            what: "edge set",
            size: n as u64,
            cap: cap as u64,
        });
    }
    let m = 1usize << n;
    // nodes: source, left 0..m, right 0..m, sink
    let source = 0;
    let left = |i: usize| 1 + i;
    let right = |i: usize| 1 + m + i;
    let sink = 1 + 2 * m;
    let mut net = FlowNetwork::new(2 * m + 2);
    let unbounded = 2.0;
    let mut middle = Vec::new();
    for i in 0..m {
        net.add_arc(source, left(i), mu.prob(i));
        net.add_arc(right(i), sink, mu_prime.prob(i));
        // supersets of i
        let free = (m - 1) & !i;
        let mut extra = free;
        loop {
            let j = i | extra;
            middle.push((i, j, net.add_arc(left(i), right(j), unbounded)));
            if extra == 0 {
                break;
            }
            extra = (extra - 1) & free;
        }
    }
    let flow = net.max_flow(source, sink);
    if flow >= 1.0 - FEASIBILITY_TOLERANCE {
        let coupling = middle
            .into_iter()
            .filter_map(|(i, j, arc)| {
                let f = net.flow_on(arc);
                (f > 0.0).then_some((i, j, f))
            })
            .collect();
        return Ok(DominationOutcome::Dominated { coupling });
    }

    let mass = |d: &Distribution, event: &[usize]| event.iter().map(|&i| d.prob(i)).sum::<f64>();
    // prefer the simplest witness: a single edge being open
    for s in 0..n {
        let event: Vec<usize> = (0..m).filter(|&i| super::bit(i, n, s)).collect();
        let (a, b) = (mass(mu, &event), mass(mu_prime, &event));
        if a > b + FEASIBILITY_TOLERANCE {
            return Ok(DominationOutcome::NotDominated {
                event,
                mass: a,
                mass_prime: b,
            });
        }
    }
    let reach = net.residual_reachable(source);
    let mut in_event = vec![false; m];
    for i in 0..m {
        if reach[left(i)] {
            let free = (m - 1) & !i;
            let mut extra = free;
            loop {
                in_event[i | extra] = true;
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & free;
            }
        }
    }
    let event: Vec<usize> = (0..m).filter(|&i| in_event[i]).collect();
    let (a, b) = (mass(mu, &event), mass(mu_prime, &event));
    Ok(DominationOutcome::NotDominated {
        event,
        mass: a,
        mass_prime: b,
    })
}

/// Checks that `coupling` has marginals `μ`, `μ′` (within the feasibility
/// tolerance) and is supported on ordered pairs.
pub fn coupling_is_valid(mu: &Distribution, mu_prime: &Distribution, coupling: &[(usize, usize, f64)]) -> bool {
    let m = mu.len();
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for &(i, j, f) in coupling {
        if i & !j != 0 || f < 0.0 {
            return false;
        }
        a[i] += f;
        b[j] += f;
    }
    (0..m).all(|i| {
        (a[i] - mu.prob(i)).abs() <= FEASIBILITY_TOLERANCE
            && (b[i] - mu_prime.prob(i)).abs() <= FEASIBILITY_TOLERANCE
    })
}

struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

/// Dinic's algorithm on real capacities.
struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
    original: Vec<f64>,
}

const FLOW_EPS: f64 = 1e-15;

impl FlowNetwork {
    fn new(nodes: usize) -> FlowNetwork {
        FlowNetwork {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            next: vec![0; nodes],
            original: Vec::new(),
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, rev: id + 1 });
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            rev: id,
        });
        self.original.push(cap);
        self.original.push(0.0);
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }

    fn flow_on(&self, arc: usize) -> f64 {
        self.original[arc] - self.arcs[arc].cap
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.out[v] {
                let arc = &self.arcs[a];
                if arc.cap > FLOW_EPS && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: f64) -> f64 {
        if v == t {
            return pushed;
        }
        while self.next[v] < self.out[v].len() {
            let a = self.out[v][self.next[v]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > FLOW_EPS && self.level[to] == self.level[v] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.arcs[a].cap -= got;
                    let r = self.arcs[a].rev;
                    self.arcs[r].cap += got;
                    return got;
                }
            }
            self.next[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= FLOW_EPS {
                    break;
                }
                total += f;
            }
        }
        total
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &a in &self.out[v] {
                let arc = &self.arcs[a];
                if arc.cap > FLOW_EPS && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}
