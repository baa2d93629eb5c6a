//! Non-isomorphic small graphs, for exhaustive checks.

use std::collections::BTreeSet;

use super::Graph;

type EdgeList = Vec<(usize, usize)>;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

// Minimum over edge orders and orientations of the first-appearance
// relabeling. Complete for graphs without isolated vertices.
fn canonical(edges: &EdgeList, perms: &[Vec<usize>]) -> EdgeList {
    let k = edges.len();
    let mut best: Option<EdgeList> = None;
    for order in perms {
        for flips in 0..1usize << k {
            let mut label: Vec<(usize, usize)> = Vec::new();
            let name = |v: usize, label: &mut Vec<(usize, usize)>| match label.iter().find(|(o, _)| *o == v) {
                Some(&(_, n)) => n,
                None => {
                    let n = label.len();
                    label.push((v, n));
                    n
                }
            };
            let mut out: EdgeList = order
                .iter()
                .enumerate()
                .map(|(pos, &i)| {
                    let (a, b) = edges[i];
                    let (a, b) = if flips >> pos & 1 == 1 { (b, a) } else { (a, b) };
                    let (x, y) = (name(a, &mut label), name(b, &mut label));
                    (x.min(y), x.max(y))
                })
                .collect();
            out.sort_unstable();
            if best.as_ref().map_or(true, |b| out < *b) {
                best = Some(out);
            }
        }
    }
    best.unwrap_or_default()
}

/// Every graph with `1..=max_edges` edges and no isolated vertices, one per
/// isomorphism class, ordered by edge count.
pub fn small_graphs(max_edges: usize) -> Vec<Graph> {
    let mut layers: Vec<BTreeSet<EdgeList>> = vec![BTreeSet::from([Vec::new()])];
    for k in 1..=max_edges {
        let perms = permutations(k);
        let mut next = BTreeSet::new();
        for g in &layers[k - 1] {
            let n = g.iter().map(|&(_, b)| b + 1).max().unwrap_or(0);
            let mut candidates = vec![(n, n + 1)];
            for a in 0..n {
                candidates.push((a, n));
                for b in a + 1..n {
                    if !g.contains(&(a, b)) {
                        candidates.push((a, b));
                    }
                }
            }
            for c in candidates {
                let mut h = g.clone();
                h.push(c);
                next.insert(canonical(&h, &perms));
            }
        }
        layers.push(next);
    }
    layers
        .into_iter()
        .skip(1)
        .flatten()
        .map(|edges| {
            let n = edges.iter().map(|&(_, b)| b + 1).max().unwrap_or(0);
            Graph::new(n, edges).expect("canonical edge lists are simple")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_known_sequence() {
        // graphs without isolated vertices by edge count: 1, 2, 5, 11, 26
        let counts: Vec<usize> = (1..=5)
            .map(|k| small_graphs(5).iter().filter(|g| g.edge_count() == k).count())
            .collect();
        assert_eq!(counts, vec![1, 2, 5, 11, 26]);
    }
}
