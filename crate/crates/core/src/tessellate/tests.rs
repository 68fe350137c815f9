use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::corpus;
use crate::frames::{assign_frames, FrameOptions};
use crate::geom::vec3;
use crate::kernels::{modified_kernels, standard_kernels};
use crate::mesh::load_obj;
use crate::patch::{build_patches, PatchSet};

fn patches(mesh: &HalfEdgeMesh) -> PatchSet {
    let frames = assign_frames(mesh, &FrameOptions::default()).unwrap();
    build_patches(mesh, &frames).unwrap()
}

fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    a * (1.0 - t) + b * t
}

fn de_casteljau(p: [Vec3; 4], t: f64) -> Vec3 {
    let a = [lerp(p[0], p[1], t), lerp(p[1], p[2], t), lerp(p[2], p[3], t)];
    let b = [lerp(a[0], a[1], t), lerp(a[1], a[2], t)];
    lerp(b[0], b[1], t)
}

fn oracle_point(net: &Net, u: f64, v: f64) -> Vec3 {
    let rows: [Vec3; 4] = std::array::from_fn(|i| de_casteljau(net[i], v));
    de_casteljau(rows, u)
}

fn random_net() -> impl Strategy<Value = Net> {
    proptest::collection::vec(-3.0f64..3.0, 48)
        .prop_map(|v| std::array::from_fn(|i| std::array::from_fn(|j| vec3([v[12 * i + 3 * j], v[12 * i + 3 * j + 1], v[12 * i + 3 * j + 2]]))))
}

fn meta(ev: [bool; 4]) -> [CornerMeta; 4] {
    ev.map(|e| if e { CornerMeta { valence: 5, extraordinary: true, ..CornerMeta::regular() } } else { CornerMeta::regular() })
}

#[test]
fn endpoint_derivatives() {
    let net: Net = std::array::from_fn(|i| std::array::from_fn(|j| vec3([i as f64, j as f64, (i * j) as f64 * 0.1 + (i as f64).powi(2)])));
    let e = evaluate_bezier(&net, 0.0, 0.0);
    assert_eq!(e.point, net[0][0]);
    assert_eq!(e.du, (net[1][0] - net[0][0]) * 3.0);
    assert_eq!(e.dv, (net[0][1] - net[0][0]) * 3.0);
    let c = [[vec3([1.0, 2.0, 3.0]); 4]; 4];
    let e = evaluate_bezier(&c, 0.3, 0.8);
    assert!((e.point - c[0][0]).norm() < 1e-15);
    for d in [e.du, e.dv, e.duu, e.dvv, e.duv] {
        assert!(d.norm() < 1e-14);
    }
}

/// Oracle for leaf counts: walk the tree shape directly.
fn count_leaves(ev: [bool; 4], depth: u32) -> usize {
    if depth == 0 || !ev.iter().any(|&e| e) {
        return 1;
    }
    (0..4)
        .map(|q| {
            let child = std::array::from_fn(|c| ev[c] && crate::patch::corner_quadrant(c) == q);
            count_leaves(child, depth - 1)
        })
        .sum()
}

#[test]
fn tree_shapes() {
    let net = [[Vec3::zeros(); 4]; 4];
    let table = modified_kernels();
    assert_eq!(build_patch_tree(&net, &meta([false; 4]), &table, 5).nodes.len(), 1);
    for d in 0..6 {
        let one = build_patch_tree(&net, &meta([true, false, false, false]), &table, d);
        assert_eq!(one.leaves().count(), 3 * d as usize + 1);
        assert_eq!(one.subdivisions(), d as usize);
        let two = build_patch_tree(&net, &meta([true, false, true, false]), &table, d);
        let expect = if d == 0 { 1 } else { 2 * (3 * (d as usize - 1) + 1) + 2 };
        assert_eq!(two.leaves().count(), expect);
        assert_eq!(two.leaves().count(), count_leaves([true, false, true, false], d));
    }
}

#[test]
fn layout_matches_trees() {
    let net = [[Vec3::zeros(); 4]; 4];
    for bits in 0..16u32 {
        let ev: [bool; 4] = std::array::from_fn(|c| bits >> c & 1 == 1);
        for d in 0..4 {
            let tree = build_patch_tree(&net, &meta(ev), &standard_kernels(), d);
            let mut a: Vec<(u32, u32, u32)> = tree.leaves().map(|n| (n.depth, n.x, n.y)).collect();
            let mut b = leaf_layout(ev, d);
            a.sort();
            b.sort();
            assert_eq!(a, b);
            assert_eq!(b.len(), count_leaves(ev, d));
        }
    }
}

#[test]
fn single_regular_patch_grid() {
    let set = patches(&corpus::torus_grid(4, 4));
    let sides = SideIndex::new(&set);
    let opts = TessOptions { max_depth: 0, resolution: 3 };
    let p = &set.patches[0];
    let tree = build_patch_tree(&p.net, &p.corners, &modified_kernels(), 0);
    let chunk = tessellate_patch(&set, &sides, 0, &tree, &opts);
    assert_eq!(chunk.triangles.len(), 8);
    assert_eq!(chunk.positions.len(), 9);
    for &(i, j) in &CORNER_POS {
        assert!(chunk.positions.contains(&p.net[i][j]));
    }
    let mesh = TriMesh { positions: chunk.positions.clone(), normals: chunk.normals.clone(), triangles: chunk.triangles.clone() };
    let text = String::from_utf8(export_obj(&mesh)).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 9);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 8);
}

#[test]
fn closed_outputs_keep_euler_characteristic() {
    let opts = TessOptions { max_depth: 3, resolution: 5 };
    for (name, mesh) in corpus::corpus() {
        let set = patches(&mesh);
        let t = tessellate(&set, &modified_kernels(), &opts).unwrap();
        assert_eq!(t.welded.mesh.euler_characteristic(), mesh.euler_characteristic(), "{name}");
        let he = t.welded.mesh.to_halfedge().unwrap();
        assert_eq!(he.genus(), mesh.genus(), "{name}");
    }
}

#[test]
fn reloaded_obj_keeps_genus() {
    let opts = TessOptions { max_depth: 2, resolution: 3 };
    for mesh in [corpus::tetrahedron(), corpus::cube_with_edge()] {
        let t = tessellate(&patches(&mesh), &modified_kernels(), &opts).unwrap();
        let back = load_obj(&export_obj(&t.welded.mesh)).unwrap();
        back.validate().unwrap();
        assert_eq!(back.genus(), mesh.genus());
    }
}

#[test]
fn shared_vertices_agree_before_welding() {
    let mesh = corpus::cube_with_edge();
    let set = patches(&mesh);
    let opts = TessOptions { max_depth: 4, resolution: 5 };
    let t = tessellate(&set, &modified_kernels(), &opts).unwrap();
    let mut first: HashMap<VertexKey, Vec3> = HashMap::new();
    let mut gap: f64 = 0.0;
    let mut shared = 0;
    for c in &t.chunks {
        for (k, p) in c.keys.iter().zip(&c.positions) {
            if let Some(q) = first.get(k) {
                gap = gap.max((p - q).norm());
                shared += 1;
            } else {
                first.insert(*k, *p);
            }
        }
    }
    assert!(shared > 0);
    assert!(gap <= 1e-12, "{gap}");
}

#[test]
fn no_degenerate_triangles() {
    let t = tessellate(&patches(&corpus::two_cubes_bridge()), &modified_kernels(), &TessOptions { max_depth: 3, resolution: 5 }).unwrap();
    let m = &t.welded.mesh;
    let diag = crate::geom::bbox_diagonal(&m.positions);
    for tri in &m.triangles {
        let [a, b, c] = tri.map(|i| m.positions[i as usize]);
        assert!((b - a).cross(&(c - a)).norm() > 1e-14 * diag * diag);
    }
}

#[test]
fn tessellation_is_deterministic() {
    let set = patches(&corpus::cube_with_edge());
    let opts = TessOptions { max_depth: 3, resolution: 5 };
    let a = tessellate(&set, &modified_kernels(), &opts).unwrap();
    let b = tessellate(&set, &modified_kernels(), &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stats_count_the_hierarchy() {
    let set = patches(&corpus::torus_grid(4, 4));
    let t = tessellate(&set, &modified_kernels(), &TessOptions { max_depth: 0, resolution: 5 }).unwrap();
    assert_eq!(t.stats.subdivisions, 0);
    assert_eq!(t.stats.leaves, set.len());
    let set = patches(&corpus::tetrahedron());
    let t = tessellate(&set, &modified_kernels(), &TessOptions { max_depth: 3, resolution: 5 }).unwrap();
    // Every tetrahedron patch has two diagonal extraordinary corners (face and vertex).
    assert_eq!(t.stats.leaves, 12 * (2 * (3 * 2 + 1) + 2));
    assert_eq!(t.stats.max_depth_reached, 3);
}

#[test]
fn bad_resolution_is_rejected() {
    let set = patches(&corpus::tetrahedron());
    for r in [0, 1, 4, 6] {
        assert!(matches!(tessellate(&set, &modified_kernels(), &TessOptions { max_depth: 1, resolution: r }), Err(TessellationError::Config(_))));
    }
}

#[test]
fn extraordinary_corner_normals_come_from_frames() {
    let mesh = corpus::tetrahedron();
    let frames = assign_frames(&mesh, &FrameOptions::default()).unwrap();
    let set = build_patches(&mesh, &frames).unwrap();
    let t = tessellate(&set, &modified_kernels(), &TessOptions { max_depth: 2, resolution: 3 }).unwrap();
    for (p, chunk) in t.chunks.iter().enumerate() {
        for (c, meta) in set.patches[p].corners.iter().enumerate() {
            let key = VertexKey::Corner(set.corner_vertex[p][c]);
            let i = chunk.keys.iter().position(|k| *k == key).unwrap();
            if meta.extraordinary {
                assert_eq!(chunk.normals[i], frames.get(meta.frame.unwrap()).unwrap().normal);
            }
        }
    }
}

proptest! {
    #[test]
    fn evaluation_matches_de_casteljau(net in random_net(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let e = evaluate_bezier(&net, u, v);
        prop_assert!((e.point - oracle_point(&net, u, v)).norm() < 1e-13);
        let h = 1e-5;
        let du = (oracle_point(&net, u + h, v) - oracle_point(&net, u - h, v)) / (2.0 * h);
        let dv = (oracle_point(&net, u, v + h) - oracle_point(&net, u, v - h)) / (2.0 * h);
        prop_assert!((e.du - du).norm() < 1e-6 && (e.dv - dv).norm() < 1e-6);
        let duv = (oracle_point(&net, u + h, v + h) - oracle_point(&net, u + h, v - h) - oracle_point(&net, u - h, v + h) + oracle_point(&net, u - h, v - h)) / (4.0 * h * h);
        prop_assert!((e.duv - duv).norm() < 1e-3);
    }

    #[test]
    fn standard_tree_reproduces_the_root_polynomial(net in random_net(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let tree = build_patch_tree(&net, &meta([true, false, true, false]), &standard_kernels(), 4);
        let a = tree.evaluate(u, v);
        let b = evaluate_bezier(&net, u, v);
        prop_assert!((a.point - b.point).norm() < 1e-12);
        prop_assert!((a.du - b.du).norm() < 1e-10 && (a.dv - b.dv).norm() < 1e-10);
    }
}
