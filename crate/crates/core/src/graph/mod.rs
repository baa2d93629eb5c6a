//! Finite graphs, exhaustion volumes and boundaries.
//!
//! Edge ids follow the lexicographic order of the sorted endpoint pairs, so a
//! graph built from the same edge list always numbers its edges the same way.

mod build;
mod enumerate;
mod symmetry;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use build::{build_box, build_torus, build_tree, complete, cycle, path, torus_translations};
pub use enumerate::small_graphs;
pub use symmetry::{automorphisms, generate_group, Permutation, DEFAULT_AUTOMORPHISM_CAP};

/// Coordinates of a lattice-like builtin graph, used by observables such as
/// the spanning indicator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Box { dimension: usize, side: usize },
    Torus { dimension: usize, side: usize },
    Tree { degree: usize, depth: usize },
}

/// A finite simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    // (neighbor, edge id), sorted by neighbor
    adjacency: Vec<Vec<(usize, usize)>>,
    max_degree: usize,
    geometry: Option<Geometry>,
}

impl Graph {
    /// Builds a graph, sorting the edge list into canonical order.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{u},{v}}} references a vertex outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {{{},{}}}",
                w[0].0, w[0].1
            )));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (id, &(u, v)) in list.iter().enumerate() {
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        for inc in &mut adjacency {
            inc.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph {
            vertex_count,
            edges: list,
            adjacency,
            max_degree,
            geometry: None,
        })
    }

    pub(crate) fn with_geometry(mut self, geometry: Geometry) -> Graph {
        self.geometry = Some(geometry);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        self.edges[edge]
    }

    /// Incident `(neighbor, edge id)` pairs of `v`, sorted by neighbor.
    /// The position in this list is the neighbor's slot index.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn edge_between(&self, x: usize, y: usize) -> Option<usize> {
        let inc = &self.adjacency[x];
        inc.binary_search_by_key(&y, |&(n, _)| n).ok().map(|i| inc[i].1)
    }

    /// Position of `y` in the neighbor list of `x`.
    pub fn slot_of(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacency[x].binary_search_by_key(&y, |&(n, _)| n).ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertex_count
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::InvalidGraph("sampling requires a connected graph".into()))
        }
    }

    /// Vertices of `subset` with at least one neighbor outside it.
    pub fn inner_boundary(&self, subset: &[usize]) -> Vec<usize> {
        let mask = self.mask(subset);
        let mut out: Vec<usize> = subset
            .iter()
            .copied()
            .filter(|&x| self.adjacency[x].iter().any(|&(y, _)| !mask[y]))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Ids of the edges with both endpoints in `subset`, ascending.
    pub fn induced_edges(&self, subset: &[usize]) -> Vec<usize> {
        let mask = self.mask(subset);
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| mask[u] && mask[v])
            .map(|(id, _)| id)
            .collect()
    }

    /// The subgraph induced by `subset`, with vertices renumbered in
    /// ascending order of their original ids. Returns the subgraph, the
    /// original id of each new vertex, and the original id of each new edge.
    pub fn induced_subgraph(&self, subset: &[usize]) -> (Graph, Vec<usize>, Vec<usize>) {
        let mut verts = subset.to_vec();
        verts.sort_unstable();
        verts.dedup();
        let mut index = vec![usize::MAX; self.vertex_count];
        for (i, &v) in verts.iter().enumerate() {
            index[v] = i;
        }
        let edge_ids = self.induced_edges(&verts);
        let sub = Graph::new(
            verts.len(),
            edge_ids.iter().map(|&e| {
                let (u, v) = self.edges[e];
                (index[u], index[v])
            }),
        )
        .expect("induced subgraph of a simple graph is simple");
        // monotone relabeling keeps the canonical edge order
        (sub, verts, edge_ids)
    }

    pub fn mask(&self, subset: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count];
        for &v in subset {
            mask[v] = true;
        }
        mask
    }

    /// Number of connected components when only edges with `open[e]` are kept.
    pub fn component_count(&self, open: &[bool]) -> usize {
        self.components(open).1
    }

    /// Component label of every vertex (labels are `0..count`, numbered in
    /// order of the smallest vertex of each component) and the count.
    pub fn components(&self, open: &[bool]) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.vertex_count];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.vertex_count {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &(w, e) in &self.adjacency[v] {
                    if open[e] && label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}

/// Nested volumes `V_1 ⊂ … ⊂ V_m = V` with their induced edge sets and
/// inner boundaries, plus the outer face of the truncation.
///
/// The outer face stands in for "infinity": it is the wired boundary of the
/// final volume and the set whose clusters count as infinite in the spin
/// assignment and the cluster probes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exhaustion {
    volumes: Vec<Vec<usize>>,
    edge_sets: Vec<Vec<usize>>,
    boundaries: Vec<Vec<usize>>,
    outer: Vec<usize>,
}

impl Exhaustion {
    /// Volumes are given innermost first; the last one must be the full
    /// vertex set.
    pub fn new(graph: &Graph, volumes: Vec<Vec<usize>>, outer: Vec<usize>) -> Result<Exhaustion> {
        if volumes.is_empty() {
            return Err(Error::InvalidExhaustion("no volumes".into()));
        }
        let mut cleaned = Vec::with_capacity(volumes.len());
        for vol in volumes {
            let mut vol = vol;
            vol.sort_unstable();
            vol.dedup();
            if let Some(&v) = vol.iter().find(|&&v| v >= graph.vertex_count()) {
                return Err(Error::InvalidExhaustion(format!("vertex {v} out of range")));
            }
            cleaned.push(vol);
        }
        for (i, w) in cleaned.windows(2).enumerate() {
            let outer_mask = graph.mask(&w[1]);
            if w[0].len() >= w[1].len() || w[0].iter().any(|&v| !outer_mask[v]) {
                return Err(Error::InvalidExhaustion(format!(
                    "volume {} is not strictly contained in volume {}",
                    i + 1,
                    i + 2
                )));
            }
        }
        if cleaned.last().map(Vec::len) != Some(graph.vertex_count()) {
            return Err(Error::InvalidExhaustion(
                "the last volume must be the full vertex set".into(),
            ));
        }
        let mut outer = outer;
        outer.sort_unstable();
        outer.dedup();
        if let Some(&v) = outer.iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::InvalidExhaustion(format!("outer vertex {v} out of range")));
        }
        let edge_sets = cleaned.iter().map(|v| graph.induced_edges(v)).collect();
        let boundaries = cleaned.iter().map(|v| graph.inner_boundary(v)).collect();
        Ok(Exhaustion {
            volumes: cleaned,
            edge_sets,
            boundaries,
            outer,
        })
    }

    /// A single volume covering the whole graph.
    pub fn trivial(graph: &Graph) -> Exhaustion {
        Exhaustion::new(graph, vec![(0..graph.vertex_count()).collect()], Vec::new())
            .expect("the full vertex set is a valid exhaustion")
    }

    /// Number of volumes `m`.
    pub fn depth(&self) -> usize {
        self.volumes.len()
    }

    fn check(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.volumes.len() {
            Err(Error::InvalidParameter(format!(
                "volume index {i} outside 1..={}",
                self.volumes.len()
            )))
        } else {
            Ok(i - 1)
        }
    }

    /// Vertices of volume `i` (1-based).
    pub fn volume(&self, i: usize) -> Result<&[usize]> {
        Ok(&self.volumes[self.check(i)?])
    }

    /// Edge ids of `E_i = E(V_i)`.
    pub fn edges(&self, i: usize) -> Result<&[usize]> {
        Ok(&self.edge_sets[self.check(i)?])
    }

    /// Inner boundary `∂V_i` inside the host graph.
    pub fn boundary(&self, i: usize) -> Result<&[usize]> {
        Ok(&self.boundaries[self.check(i)?])
    }

    pub fn outer(&self) -> &[usize] {
        &self.outer
    }

    /// The set wired together by the wired rule in volume `i`: `∂V_i` for
    /// proper volumes, the outer face for the final (full) volume.
    pub fn wired_boundary(&self, i: usize) -> Result<&[usize]> {
        let k = self.check(i)?;
        if k + 1 == self.volumes.len() {
            Ok(&self.outer)
        } else {
            Ok(&self.boundaries[k])
        }
    }

    pub fn volumes(&self) -> &[Vec<usize>] {
        &self.volumes
    }
}

/// A host graph together with its exhaustion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Host {
    pub graph: Graph,
    pub exhaustion: Exhaustion,
}

impl Host {
    pub fn new(graph: Graph, exhaustion: Exhaustion) -> Host {
        Host { graph, exhaustion }
    }

    /// Wraps a bare graph with the trivial exhaustion and no outer face.
    pub fn single(graph: Graph) -> Host {
        let exhaustion = Exhaustion::trivial(&graph);
        Host { graph, exhaustion }
    }

    pub fn from_json_str(text: &str) -> Result<Host> {
        let file: GraphFile = serde_json::from_str(text)?;
        file.into_host()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Host> {
        let text = std::fs::read_to_string(path)?;
        Host::from_json_str(&text)
    }

    pub fn to_json(&self) -> GraphFile {
        GraphFile {
            vertices: self.graph.vertex_count(),
            edges: self.graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            volumes: (self.exhaustion.depth() > 1).then(|| self.exhaustion.volumes.clone()),
            outer_boundary: (!self.exhaustion.outer.is_empty()).then(|| self.exhaustion.outer.clone()),
            geometry: self.graph.geometry.clone(),
        }
    }
}

/// On-disk graph format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volumes: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_boundary: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

impl GraphFile {
    pub fn into_host(self) -> Result<Host> {
        let mut graph = Graph::new(self.vertices, self.edges.iter().map(|e| (e[0], e[1])))?;
        graph.geometry = self.geometry;
        let mut volumes = self.volumes.unwrap_or_default();
        if volumes.last().map(Vec::len) != Some(graph.vertex_count()) {
            volumes.push((0..graph.vertex_count()).collect());
        }
        let exhaustion = Exhaustion::new(&graph, volumes, self.outer_boundary.unwrap_or_default())?;
        Ok(Host { graph, exhaustion })
    }
}
