use std::f64::consts::TAU;

use proptest::prelude::*;

use super::*;
use crate::corpus;
use crate::frames::{assign_frames, FrameOptions};
use crate::geom::vec3;
use crate::kernels::{derive_modified_kernels, modified_kernels, standard_kernels, unadjusted_modified_kernels};
use crate::mesh::HalfEdgeMesh;
use crate::patch::build_patches;

/// Planar fan of `k` sectors around the origin with yellow points on a circle.
fn regular_ring(k: usize, radius: f64) -> Vec<(Net, usize)> {
    let y = |i: usize| {
        let a = TAU * i as f64 / k as f64;
        vec3([radius * a.cos(), radius * a.sin(), 0.0])
    };
    (0..k)
        .map(|i| {
            let out = (y(i) + y(i + 1)) * 0.5;
            let inc = (y(i + k - 1) + y(i)) * 0.5;
            let net = std::array::from_fn(|a| std::array::from_fn(|b| out * a as f64 + inc * b as f64 + (y(i) - out - inc) * (a * b) as f64));
            (net, 0)
        })
        .collect()
}

/// Closed form of the standard-subdivision unbroken-line defect of a regular ring.
fn standard_defect(k: usize) -> f64 {
    let t = TAU / k as f64;
    ((2.0 * t).sin() / (t / 2.0).sin()).abs() / (8.0 + 4.0 * t.cos())
}

fn assembled(mesh: &HalfEdgeMesh) -> PatchSet {
    let frames = assign_frames(mesh, &FrameOptions::default()).unwrap();
    build_patches(mesh, &frames).unwrap()
}

#[test]
fn regular_ring_is_unbroken_and_planar() {
    for k in [3, 4, 5, 10] {
        let r = ring_defects(&regular_ring(k, 2.0));
        assert!(r.unbroken_line < 1e-15 && r.planarity < 1e-15 && r.normal_spread < 1e-15);
        assert!((r.radius - 2.0).abs() < 1e-15);
    }
}

#[test]
fn standard_subdivision_breaks_the_line_except_for_quads() {
    let table = standard_kernels();
    assert!(ring_defects(&subdivide_ring(&regular_ring(4, 1.0), &table)).unbroken_line < 1e-15);
    let d3 = ring_defects(&subdivide_ring(&regular_ring(3, 1.0), &table)).unbroken_line;
    assert!((d3 - 1.0 / 6.0).abs() < 1e-15);
    for k in [5, 6, 8, 10] {
        let d = ring_defects(&subdivide_ring(&regular_ring(k, 1.0), &table)).unbroken_line;
        assert!((d - standard_defect(k)).abs() < 1e-12, "K = {k}");
        assert!(d > 0.0);
    }
}

#[test]
fn modified_subdivision_keeps_the_line() {
    let table = modified_kernels();
    for k in [3, 5, 6, 8, 10] {
        let mut ring = regular_ring(k, 1.0);
        for _ in 0..5 {
            ring = subdivide_ring(&ring, &table);
            let r = ring_defects(&ring);
            assert!(r.unbroken_line <= 1e-12 && r.planarity <= 1e-12, "K = {k}");
        }
    }
}

#[test]
fn perturbation_shows_as_c1_defect() {
    // Two sectors of a planar quad ring share side 0 of the first and side 3 of the second.
    let ring = regular_ring(4, 1.0);
    let (a, b) = (ring[0].0, ring[1].0);
    let base = boundary_defects(&a, 0, &b, 3, 16).unwrap();
    assert!(base.c1 < 1e-12 && base.g1 < 1e-12);
    let mut bumped = a;
    let mut last = 0.0;
    for eps in [1e-4, 2e-4, 4e-4] {
        bumped[2][1].z = eps;
        let d = boundary_defects(&bumped, 0, &b, 3, 16).unwrap();
        assert!(d.c1 > 0.0);
        if last > 0.0 {
            assert!((d.c1 / last - 2.0).abs() < 1e-3);
        }
        last = d.c1;
    }
}

#[test]
fn mismatched_sides_are_rejected() {
    let ring = regular_ring(4, 1.0);
    assert!(matches!(boundary_defects(&ring[0].0, 1, &ring[1].0, 3, 8), Err(AnalysisError::Orientation(_))));
}

#[test]
fn standard_children_meet_c2() {
    let net: Net = std::array::from_fn(|i| std::array::from_fn(|j| vec3([i as f64, j as f64, ((i * 7 + j * 3) % 5) as f64])));
    assert!(child_c2_defect(&net, &standard_kernels(), 16) < 1e-10);
    assert!(child_c2_defect(&net, &derive_modified_kernels().unwrap(), 16) < 1e-9);
    assert!(child_c2_defect(&net, &unadjusted_modified_kernels(), 16) > 1e-6);
}

#[test]
fn torus_has_no_extraordinary_rows() {
    let set = assembled(&corpus::torus_grid(4, 4));
    assert!(extraordinary_fans(&set).is_empty());
    for row in compare_modes(&set, &[1, 2]) {
        assert!(row.c1 <= 1e-12 && row.g1 <= 1e-12);
    }
}

#[test]
fn modified_mode_decays_on_the_tetrahedron() {
    let set = assembled(&corpus::tetrahedron());
    let rows = compare_modes(&set, &[1, 2, 3, 4]);
    let modified: Vec<f64> = rows.iter().filter(|r| r.mode == Some(Mode::Modified)).map(|r| r.c1).collect();
    let standard: Vec<f64> = rows.iter().filter(|r| r.mode == Some(Mode::Standard)).map(|r| r.c1).collect();
    for w in modified.windows(2) {
        assert!(w[1] < w[0], "{modified:?}");
    }
    for (m, s) in modified.iter().zip(&standard) {
        assert!(m < s);
    }
}

#[test]
fn csv_and_json_shapes() {
    let set = assembled(&corpus::tetrahedron());
    let rows = compare_modes(&set, &[1, 2]);
    let csv = rows_to_csv(&rows, &ALL_METRICS);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "depth,mode,c1,g1,c2,normal_spread,unbroken_line,planarity");
    assert!(lines[1].starts_with("1,standard,"));
    let only = rows_to_csv(&rows, &[Metric::G1]);
    assert!(only.starts_with("depth,mode,g1\n"));
    let json = rows_to_json(&rows, &[Metric::C1]);
    assert_eq!(json[3]["mode"], "modified");
    assert!(json[3]["c1"].is_f64());
    assert!("c3".parse::<Metric>().is_err());
}

fn random_net() -> impl Strategy<Value = Net> {
    proptest::collection::vec(-3.0f64..3.0, 48)
        .prop_map(|v| std::array::from_fn(|i| std::array::from_fn(|j| vec3([v[12 * i + 3 * j], v[12 * i + 3 * j + 1], v[12 * i + 3 * j + 2]]))))
}

proptest! {
    #[test]
    fn defects_ignore_rigid_motion_and_scale(net in random_net(), angle in 0.0f64..6.0, s in 0.1f64..10.0) {
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), angle);
        let moved = net.map(|row| row.map(|p| rot * p * s + vec3([1.0, -2.0, 3.0])));
        for table in [modified_kernels(), unadjusted_modified_kernels()] {
            let a = child_c2_defect(&net, &table, 8);
            let b = child_c2_defect(&moved, &table, 8);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
