//! Vertex permutations and brute-force automorphism enumeration.

use std::collections::BTreeSet;

use super::Graph;
use crate::{Error, Result};

pub const DEFAULT_AUTOMORPHISM_CAP: usize = 12;

/// A permutation of `0..n`, stored as the image of each point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Permutation> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Permutation {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&v| self.0[v]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (v, &w) in self.0.iter().enumerate() {
            inv[w] = v;
        }
        Permutation(inv)
    }

    pub fn is_automorphism(&self, graph: &Graph) -> bool {
        self.len() == graph.vertex_count()
            && graph
                .edges()
                .iter()
                .all(|&(u, v)| graph.edge_between(self.apply(u), self.apply(v)).is_some())
    }

    /// The induced map on edge ids. Only meaningful for automorphisms.
    pub fn edge_map(&self, graph: &Graph) -> Vec<usize> {
        graph
            .edges()
            .iter()
            .map(|&(u, v)| {
                graph
                    .edge_between(self.apply(u), self.apply(v))
                    .expect("permutation is not an automorphism")
            })
            .collect()
    }
}

/// Every automorphism of `graph`, in lexicographic order of the image
/// vectors. Refuses graphs with more than `cap` vertices; supply known
/// generators to [`generate_group`] instead.
pub fn automorphisms(graph: &Graph, cap: usize) -> Result<Vec<Permutation>> {
    let n = graph.vertex_count();
    if n > cap {
        return Err(Error::Refused(format!(
            "automorphism enumeration is capped at {cap} vertices (graph has {n}); \
             supply symmetry generators explicitly"
        )));
    }
    let mut out = Vec::new();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(graph, 0, &mut image, &mut used, &mut out);
    Ok(out)
}

fn extend(graph: &Graph, v: usize, image: &mut [usize], used: &mut [bool], out: &mut Vec<Permutation>) {
    let n = graph.vertex_count();
    if v == n {
        out.push(Permutation(image.to_vec()));
        return;
    }
    for w in 0..n {
        if used[w] || graph.degree(w) != graph.degree(v) {
            continue;
        }
        let consistent = (0..v).all(|u| {
            graph.edge_between(u, v).is_some() == graph.edge_between(image[u], w).is_some()
        });
        if !consistent {
            continue;
        }
        image[v] = w;
        used[w] = true;
        extend(graph, v + 1, image, used, out);
        used[w] = false;
    }
    image[v] = usize::MAX;
}

/// Closure of `generators` under composition, sorted. Fails once more than
/// `limit` elements have been found.
pub fn generate_group(generators: &[Permutation], limit: usize) -> Result<Vec<Permutation>> {
    let n = generators.first().map_or(0, Permutation::len);
    if generators.iter().any(|g| g.len() != n) {
        return Err(Error::InvalidParameter("generators act on different sets".into()));
    }
    let mut group = BTreeSet::new();
    let id = Permutation::identity(n);
    group.insert(id.clone());
    let mut frontier = vec![id];
    while let Some(h) = frontier.pop() {
        for g in generators {
            let gh = g.compose(&h);
            if group.insert(gh.clone()) {
                if group.len() > limit {
                    return Err(Error::CapExceeded {
                        what: "generated group",
                        size: group.len() as u64,
                        cap: limit as u64,
                    });
                }
                frontier.push(gh);
            }
        }
    }
    Ok(group.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_torus, complete, cycle, path, torus_translations};

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphisms(&complete(3).unwrap().graph, 12).unwrap().len(), 6);
        assert_eq!(automorphisms(&path(3).unwrap().graph, 12).unwrap().len(), 2);
        assert_eq!(automorphisms(&cycle(4).unwrap().graph, 12).unwrap().len(), 8);
    }

    #[test]
    fn four_cycle_against_all_permutations() {
        // brute force over the 24 permutations of 4 points
        let g = cycle(4).unwrap().graph;
        let mut count = 0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        if let Ok(p) = Permutation::new(vec![a, b, c, d]) {
                            count += p.is_automorphism(&g) as usize;
                        }
                    }
                }
            }
        }
        assert_eq!(count, 8);
    }

    #[test]
    fn automorphisms_form_a_group() {
        let g = cycle(5).unwrap().graph;
        let auts = automorphisms(&g, 12).unwrap();
        assert!(auts.contains(&Permutation::identity(5)));
        for a in &auts {
            assert!(auts.contains(&a.inverse()));
            for b in &auts {
                assert!(auts.contains(&a.compose(b)));
            }
            let mut em = a.edge_map(&g);
            em.sort_unstable();
            assert_eq!(em, (0..g.edge_count()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let t = build_torus(2, 4).unwrap();
        assert!(matches!(automorphisms(&t.graph, 12), Err(Error::Refused(_))));
    }

    #[test]
    fn translations_generate_sixteen() {
        let group = generate_group(&torus_translations(2, 4), 100).unwrap();
        assert_eq!(group.len(), 16);
        assert!(generate_group(&torus_translations(2, 4), 10).is_err());
    }
}
