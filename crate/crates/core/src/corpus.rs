//! Built-in test models.

use std::f64::consts::TAU;

use crate::geom::{vec3, Vec3};
use crate::mesh::{CornerRef, HalfEdgeMesh};

pub fn tetrahedron() -> HalfEdgeMesh {
    let p = vec![
        vec3([1.0, 1.0, 1.0]),
        vec3([1.0, -1.0, -1.0]),
        vec3([-1.0, 1.0, -1.0]),
        vec3([-1.0, -1.0, 1.0]),
    ];
    let f = vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 1], vec![1, 3, 2]];
    HalfEdgeMesh::from_polygons(p, &f).expect("tetrahedron is valid")
}

fn cube_polys(offset: Vec3, base: usize) -> (Vec<Vec3>, Vec<Vec<usize>>) {
    let mut p = Vec::with_capacity(8);
    for i in 0..8 {
        let x = (i & 1) as f64;
        let y = ((i >> 1) & 1) as f64;
        let z = ((i >> 2) & 1) as f64;
        p.push(vec3([x, y, z]) + offset);
    }
    let faces = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let f = faces.iter().map(|q| q.iter().map(|&v| v + base).collect()).collect();
    (p, f)
}

/// Unit cube `[0,1]^3`. Vertex `i` sits at `(i & 1, (i >> 1) & 1, (i >> 2) & 1)`.
pub fn cube() -> HalfEdgeMesh {
    let (p, f) = cube_polys(Vec3::zeros(), 0);
    HalfEdgeMesh::from_polygons(p, &f).expect("cube is valid")
}

/// Cube with one edge inserted between its bottom and top faces, which
/// merges them into a single ten-sided face and makes a genus-one surface.
pub fn cube_with_edge() -> HalfEdgeMesh {
    let mut m = cube();
    // Bottom face 0 at vertex 0 and top face 1 at vertex 7: the new edge is a body diagonal.
    m.insert_edge(CornerRef::new(0, 0), CornerRef::new(1, 7))
        .expect("opposite cube faces can be joined");
    m
}

/// Two unit cubes side by side, joined by one edge between their facing faces.
pub fn two_cubes_bridge() -> HalfEdgeMesh {
    let (mut p, mut f) = cube_polys(Vec3::zeros(), 0);
    let (p2, f2) = cube_polys(vec3([2.0, 0.0, 0.0]), 8);
    p.extend(p2);
    f.extend(f2);
    let mut m = HalfEdgeMesh::from_polygons(p, &f).expect("two cubes are valid");
    // Face 5 is x = 1 of the first cube, face 10 is x = 2 of the second one.
    m.insert_edge(CornerRef::new(5, 1), CornerRef::new(10, 8 + 2))
        .expect("facing cube faces can be joined");
    m
}

/// `n` by `m` quad grid wrapped onto a torus; every vertex has valence four.
pub fn torus_grid(n: usize, m: usize) -> HalfEdgeMesh {
    let (big, small) = (2.0, 0.75);
    let mut p = Vec::with_capacity(n * m);
    for i in 0..n {
        let a = TAU * i as f64 / n as f64;
        for j in 0..m {
            let b = TAU * j as f64 / m as f64;
            let r = big + small * b.cos();
            p.push(vec3([r * a.cos(), r * a.sin(), small * b.sin()]));
        }
    }
    let id = |i: usize, j: usize| (i % n) * m + (j % m);
    let mut f = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            f.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    HalfEdgeMesh::from_polygons(p, &f).expect("torus grid is valid")
}

/// The acceptance corpus by name.
pub fn corpus() -> Vec<(&'static str, HalfEdgeMesh)> {
    vec![
        ("tetrahedron", tetrahedron()),
        ("cube", cube()),
        ("cube_edge", cube_with_edge()),
        ("two_cubes", two_cubes_bridge()),
        ("torus_grid", torus_grid(4, 4)),
    ]
}

pub fn by_name(name: &str) -> Option<HalfEdgeMesh> {
    corpus().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}
