//! Builtin graph families.
//!
//! Boxes are exhausted by centered sub-boxes whose side shrinks by two per
//! level; trees by balls around the root whose radius shrinks by one.

use super::{Exhaustion, Geometry, Graph, Host, Permutation};
use crate::{Error, Result};

fn coords(mut v: usize, dimension: usize, side: usize) -> Vec<usize> {
    let mut c = Vec::with_capacity(dimension);
    for _ in 0..dimension {
        c.push(v % side);
        v /= side;
    }
    c
}

fn checked_volume(dimension: usize, side: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..dimension {
        n = n
            .checked_mul(side)
            .filter(|&n| n <= 1 << 26)
            .ok_or_else(|| Error::InvalidParameter("lattice too large".into()))?;
    }
    Ok(n)
}

/// The box `{0,…,side−1}^dimension` with nearest-neighbor edges and
/// `volumes` centered nested sub-boxes (the last one is the whole box).
pub fn build_box(dimension: usize, side: usize, volumes: usize) -> Result<Host> {
    if dimension == 0 || side < 2 || volumes == 0 {
        return Err(Error::InvalidParameter(
            "box needs dimension >= 1, side >= 2 and volumes >= 1".into(),
        ));
    }
    if side < 2 * (volumes - 1) + 1 {
        return Err(Error::InvalidParameter(format!(
            "{volumes} nested centered volumes do not fit in a box of side {side}"
        )));
    }
    let n = checked_volume(dimension, side)?;
    let mut edges = Vec::with_capacity(n * dimension);
    for v in 0..n {
        let c = coords(v, dimension, side);
        let mut stride = 1;
        for &ck in &c {
            if ck + 1 < side {
                edges.push((v, v + stride));
            }
            stride *= side;
        }
    }
    let graph = Graph::new(n, edges)?.with_geometry(Geometry::Box { dimension, side });
    let vols = (1..=volumes)
        .map(|i| {
            let offset = volumes - i;
            let sub = side - 2 * offset;
            (0..n)
                .filter(|&v| {
                    coords(v, dimension, side)
                        .iter()
                        .all(|&x| x >= offset && x < offset + sub)
                })
                .collect()
        })
        .collect();
    let outer = (0..n)
        .filter(|&v| coords(v, dimension, side).iter().any(|&x| x == 0 || x == side - 1))
        .collect();
    let exhaustion = Exhaustion::new(&graph, vols, outer)?;
    Ok(Host::new(graph, exhaustion))
}

/// The discrete torus `(ℤ/side)^dimension`; a single volume and no outer face.
pub fn build_torus(dimension: usize, side: usize) -> Result<Host> {
    if dimension == 0 || side < 3 {
        return Err(Error::InvalidParameter(
            "torus needs dimension >= 1 and side >= 3".into(),
        ));
    }
    let n = checked_volume(dimension, side)?;
    let mut edges = Vec::with_capacity(n * dimension);
    for v in 0..n {
        let mut stride = 1;
        for ck in coords(v, dimension, side) {
            let w = v - ck * stride + ((ck + 1) % side) * stride;
            edges.push((v, w));
            stride *= side;
        }
    }
    let graph = Graph::new(n, edges)?.with_geometry(Geometry::Torus { dimension, side });
    Ok(Host::single(graph))
}

/// Unit translations of the torus along each axis, as vertex permutations.
pub fn torus_translations(dimension: usize, side: usize) -> Vec<Permutation> {
    let n = side.pow(dimension as u32);
    let mut stride = 1;
    let mut out = Vec::with_capacity(dimension);
    for k in 0..dimension {
        let map = (0..n)
            .map(|v| {
                let ck = coords(v, dimension, side)[k];
                v - ck * stride + ((ck + 1) % side) * stride
            })
            .collect();
        out.push(Permutation::new(map).expect("translation is a bijection"));
        stride *= side;
    }
    out
}

/// Depth-`depth` truncation of the tree in which every vertex has `degree`
/// neighbors (the root has `degree` children, all others `degree − 1`).
/// Volumes are balls around the root; the leaves form the outer face.
pub fn build_tree(degree: usize, depth: usize, volumes: usize) -> Result<Host> {
    if degree < 2 || depth == 0 || volumes == 0 || volumes > depth + 1 {
        return Err(Error::InvalidParameter(
            "tree needs degree >= 2, depth >= 1 and 1 <= volumes <= depth + 1".into(),
        ));
    }
    let mut level = vec![0usize];
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut n = 1usize;
    for d in 1..=depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let children = if v == 0 { degree } else { degree - 1 };
            for _ in 0..children {
                if n >= 1 << 22 {
                    return Err(Error::InvalidParameter("tree too large".into()));
                }
                edges.push((v, n));
                level.push(d);
                next.push(n);
                n += 1;
            }
        }
        frontier = next;
    }
    let graph = Graph::new(n, edges)?.with_geometry(Geometry::Tree { degree, depth });
    let vols = (1..=volumes)
        .map(|i| {
            let radius = depth - (volumes - i);
            (0..n).filter(|&v| level[v] <= radius).collect()
        })
        .collect();
    let exhaustion = Exhaustion::new(&graph, vols, frontier)?;
    Ok(Host::new(graph, exhaustion))
}

pub fn path(n: usize) -> Result<Host> {
    if n == 0 {
        return Err(Error::InvalidParameter("path needs n >= 1".into()));
    }
    Ok(Host::single(Graph::new(n, (1..n).map(|v| (v - 1, v)))?))
}

pub fn cycle(n: usize) -> Result<Host> {
    if n < 3 {
        return Err(Error::InvalidParameter("cycle needs n >= 3".into()));
    }
    Ok(Host::single(Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)))?))
}

pub fn complete(n: usize) -> Result<Host> {
    if n == 0 {
        return Err(Error::InvalidParameter("complete graph needs n >= 1".into()));
    }
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Ok(Host::single(Graph::new(n, edges)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_examples() {
        let line = build_box(1, 3, 1).unwrap();
        assert_eq!(line.graph.vertex_count(), 3);
        assert_eq!(line.graph.edges(), &[(0, 1), (1, 2)]);

        let c4 = build_box(2, 2, 1).unwrap();
        assert_eq!(c4.graph.edge_count(), 4);
        assert!(c4.graph.neighbors(0).len() == 2 && c4.graph.max_degree() == 2);

        let b = build_box(2, 4, 2).unwrap();
        assert_eq!(b.graph.vertex_count(), 16);
        // 4 rows × 3 horizontal + 4 columns × 3 vertical
        assert_eq!(b.graph.edge_count(), 24);
        assert_eq!(b.exhaustion.volume(1).unwrap(), &[5, 6, 9, 10]);
        assert_eq!(b.exhaustion.edges(1).unwrap().len(), 4);
        assert_eq!(b.exhaustion.outer().len(), 12);
    }

    #[test]
    fn box_rejects_non_fitting_volumes() {
        assert!(build_box(2, 4, 3).is_err());
        assert!(build_box(2, 5, 3).is_ok());
        assert!(build_box(0, 4, 1).is_err());
        assert!(build_box(2, 1, 1).is_err());
    }

    #[test]
    fn exhaustion_edges_nest_and_cover() {
        let b = build_box(2, 8, 3).unwrap();
        let ex = &b.exhaustion;
        for i in 1..ex.depth() {
            let inner = ex.edges(i).unwrap();
            let outer = ex.edges(i + 1).unwrap();
            assert!(inner.iter().all(|e| outer.contains(e)));
            assert!(inner.len() < outer.len());
        }
        assert_eq!(ex.edges(3).unwrap().len(), b.graph.edge_count());
        assert!(ex.boundary(3).unwrap().is_empty());
        assert_eq!(ex.wired_boundary(3).unwrap(), ex.outer());
        assert_eq!(ex.wired_boundary(1).unwrap(), ex.boundary(1).unwrap());
    }

    #[test]
    fn torus_is_regular() {
        let t = build_torus(2, 4).unwrap();
        assert_eq!(t.graph.edge_count(), 32);
        assert!((0..16).all(|v| t.graph.degree(v) == 4));
        for g in torus_translations(2, 4) {
            for &(u, v) in t.graph.edges() {
                assert!(t.graph.edge_between(g.apply(u), g.apply(v)).is_some());
            }
        }
    }

    #[test]
    fn tree_shape() {
        let t = build_tree(3, 3, 2).unwrap();
        assert_eq!(t.graph.vertex_count(), 1 + 3 + 6 + 12);
        assert_eq!(t.exhaustion.outer().len(), 12);
        assert_eq!(t.exhaustion.volume(1).unwrap().len(), 10);
        assert!(t.graph.is_connected());
    }

    #[test]
    fn small_families() {
        assert_eq!(cycle(5).unwrap().graph.edge_count(), 5);
        assert_eq!(complete(4).unwrap().graph.edge_count(), 6);
        assert_eq!(path(1).unwrap().graph.edge_count(), 0);
    }
}
