use super::{Distribution, Symbols};
use crate::graph::Graph;
use crate::{Error, Result};

/// Default cap on `q^|free vertices|` for [`potts_distribution`].
pub const POTTS_STATE_CAP: u64 = 1 << 20;

/// The Potts Gibbs law `∝ exp(−2β · #{disagreeing edges})` on
/// `{1,…,q}^V`. With `clamp = Some((set, r))` the spins of `set` are fixed
/// to `r` and the law lives on the remaining vertices (ascending ids).
pub fn potts_distribution(graph: &Graph, q: usize, beta: f64, clamp: Option<(&[usize], usize)>) -> Result<Distribution> {
    potts_distribution_capped(graph, q, beta, clamp, POTTS_STATE_CAP)
}

pub fn potts_distribution_capped(
    graph: &Graph,
    q: usize,
    beta: f64,
    clamp: Option<(&[usize], usize)>,
    cap: u64,
) -> Result<Distribution> {
    if q < 2 {
        return Err(Error::InvalidParameter("Potts model needs q >= 2".into()));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    let n = graph.vertex_count();
    // spins stored as 0..q
    let mut fixed: Vec<Option<usize>> = vec![None; n];
    if let Some((set, r)) = clamp {
        if r == 0 || r > q {
            return Err(Error::InvalidParameter(format!("clamp spin {r} outside 1..={q}")));
        }
        for &v in set {
            fixed[v] = Some(r - 1);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let states = (q as u64).checked_pow(free.len() as u32).filter(|&s| s <= cap);
    let Some(states) = states else {
        return Err(Error::CapExceeded {
            what: "Potts state space",
            size: (q as f64).powi(free.len() as i32).min(u64::MAX as f64) as u64,
            cap,
        });
    };
    let mut spins: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let weights = (0..states as usize)
        .map(|i| {
            let mut rest = i;
            for &v in free.iter().rev() {
                spins[v] = rest % q;
                rest /= q;
            }
            let disagree = graph.edges().iter().filter(|&&(x, y)| spins[x] != spins[y]).count();
            (-2.0 * beta * disagree as f64).exp()
        })
        .collect();
    Distribution::from_weights(free, Symbols::Spins(q), weights)
}

/// Conditional law of the spin at `vertex` given all other spins (`spins`
/// holds values in `1..=q`; the entry at `vertex` is ignored).
pub fn dlr_conditional(graph: &Graph, q: usize, beta: f64, vertex: usize, spins: &[usize]) -> Result<Vec<f64>> {
    if q < 2 || spins.len() != graph.vertex_count() {
        return Err(Error::InvalidParameter("need q >= 2 and one spin per vertex".into()));
    }
    if let Some(&s) = spins.iter().find(|&&s| s == 0 || s > q) {
        return Err(Error::InvalidParameter(format!("spin {s} outside 1..={q}")));
    }
    let weights: Vec<f64> = (1..=q)
        .map(|r| {
            let disagree = graph.neighbors(vertex).iter().filter(|&&(y, _)| spins[y] != r).count();
            (-2.0 * beta * disagree as f64).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}
