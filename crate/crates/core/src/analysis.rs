//! Continuity measurements across patch boundaries and around extraordinary corners.
//!
//! All defects are scale-free: derivative mismatches are divided by the
//! derivative magnitudes of the same boundary, ring quantities by the ring radius.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{angle_between, Vec3};
use crate::kernels::{modified_kernels, standard_kernels, subdivide_net, KernelTable, Net};
use crate::patch::{corner_quadrant, corner_view, planarity_residual, side_param, PatchSet};
use crate::tessellate::{build_patch_tree, evaluate_bezier, Eval, PatchTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("AnalysisError: {0}")]
    Orientation(String),
}

/// Anything that evaluates like a bicubic patch over `[0,1]^2`.
pub trait Evaluate {
    fn eval(&self, u: f64, v: f64) -> Eval;
}

impl Evaluate for Net {
    fn eval(&self, u: f64, v: f64) -> Eval {
        evaluate_bezier(self, u, v)
    }
}

impl Evaluate for PatchTree {
    fn eval(&self, u: f64, v: f64) -> Eval {
        self.evaluate(u, v)
    }
}

/// Inward first and second cross derivatives at `t` along side `k`.
fn cross(e: &Eval, k: usize) -> (Vec3, Vec3) {
    match k {
        0 => (e.dv, e.dvv),
        1 => (-e.du, e.duu),
        2 => (-e.dv, e.dvv),
        _ => (e.du, e.duu),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundaryDefect {
    pub samples: usize,
    /// `max |dA + dB| / max(|dA|, |dB|)` over samples, inward cross derivatives.
    pub c1: f64,
    /// Max angle between the two tangent planes, radians.
    pub g1: f64,
    /// `max |ddA - ddB| / max(|ddA|, |ddB|)` over samples.
    pub c2: f64,
}

/// Defects across side `ka` of `a` and side `kb` of `b` at the interior
/// parameters `t = i / n`, `0 < i < n`. The corners are left to [`ring_defects`].
pub fn boundary_defects<A: Evaluate + ?Sized, B: Evaluate + ?Sized>(a: &A, ka: usize, b: &B, kb: usize, n: usize) -> Result<BoundaryDefect, AnalysisError> {
    let at = |s: &dyn Fn(f64, f64) -> Eval, k: usize, t: f64| {
        let (u, v) = side_param(k, t, 0.0);
        s(u, v)
    };
    let ea = |u, v| a.eval(u, v);
    let eb = |u, v| b.eval(u, v);
    // The two copies of the side must run in opposite directions.
    let (a0, a1) = (at(&ea, ka, 0.0).point, at(&ea, ka, 1.0).point);
    let (b0, b1) = (at(&eb, kb, 0.0).point, at(&eb, kb, 1.0).point);
    let scale = (a1 - a0).norm().max(1e-300);
    if (a0 - b1).norm() > 1e-9 * scale || (a1 - b0).norm() > 1e-9 * scale {
        return Err(AnalysisError::Orientation(format!("side {ka} and side {kb} do not meet end to end")));
    }
    let (mut c1_num, mut c1_den, mut c2_num, mut c2_den, mut g1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 1..n {
        let t = i as f64 / n as f64;
        let (x, y) = (at(&ea, ka, t), at(&eb, kb, 1.0 - t));
        let (da, dda) = cross(&x, ka);
        let (db, ddb) = cross(&y, kb);
        c1_num = c1_num.max((da + db).norm());
        c1_den = c1_den.max(da.norm().max(db.norm()));
        c2_num = c2_num.max((dda - ddb).norm());
        c2_den = c2_den.max(dda.norm().max(ddb.norm()));
        let (na, nb) = (x.du.cross(&x.dv), y.du.cross(&y.dv));
        if na.norm() > 0.0 && nb.norm() > 0.0 {
            g1 = g1.max(angle_between(&na, &nb));
        }
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    Ok(BoundaryDefect { samples: n.saturating_sub(1), c1: ratio(c1_num, c1_den), g1, c2: ratio(c2_num, c2_den) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RingDefect {
    pub valence: usize,
    /// Max pairwise angle between the patch normals at the corner.
    pub normal_spread: f64,
    /// Distance of corner, blue and yellow points from their plane, over the ring radius.
    pub planarity: f64,
    /// `max_k |B_k - (Y_k + Y_k+1) / 2|` over the ring radius.
    pub unbroken_line: f64,
    /// Mean distance of the yellow points from the corner.
    pub radius: f64,
}

/// Corner fan given as `(net, corner)` pairs in rotational order: the outgoing
/// side of each entry is the incoming side of the next.
pub fn ring_defects(ring: &[(Net, usize)]) -> RingDefect {
    let k = ring.len();
    let corner = corner_view(&ring[0].0, ring[0].1, 0, 0);
    let yellow: Vec<Vec3> = ring.iter().map(|(n, c)| corner_view(n, *c, 1, 1) - corner).collect();
    let blue: Vec<Vec3> = ring.iter().map(|(n, c)| corner_view(n, *c, 1, 0) - corner).collect();
    let normals: Vec<Vec3> = ring.iter().map(|(n, c)| (corner_view(n, *c, 1, 0) - corner).cross(&(corner_view(n, *c, 0, 1) - corner))).collect();
    let radius = yellow.iter().map(|y| y.norm()).sum::<f64>() / k as f64;
    let mut spread: f64 = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            spread = spread.max(angle_between(&normals[a], &normals[b]));
        }
    }
    let unbroken = (0..k).map(|i| (blue[i] - (yellow[i] + yellow[(i + 1) % k]) * 0.5).norm()).fold(0.0, f64::max);
    let mut points = vec![Vec3::zeros()];
    points.extend(&yellow);
    points.extend(&blue);
    RingDefect { valence: k, normal_spread: spread, planarity: planarity_residual(&points) / radius, unbroken_line: unbroken / radius, radius }
}

/// The ring one subdivision later: every entry replaced by its child that owns the corner.
pub fn subdivide_ring(ring: &[(Net, usize)], table: &KernelTable) -> Vec<(Net, usize)> {
    ring.iter().map(|(net, c)| (subdivide_net(net, table)[corner_quadrant(*c)], *c)).collect()
}

/// Rotationally ordered fans of all extraordinary corners.
pub fn extraordinary_fans(set: &PatchSet) -> Vec<Vec<(usize, usize)>> {
    set.fans
        .iter()
        .filter(|f| f.first().is_some_and(|&(p, c)| set.patches[p].corners[c].extraordinary))
        .map(|f| set.ordered_fan(f[0]))
        .collect()
}

/// Max C2 defect across the two internal boundaries of one subdivision step.
pub fn child_c2_defect(net: &Net, table: &KernelTable, n: usize) -> f64 {
    let kids = subdivide_net(net, table);
    // (child, side) pairs meeting along u = 1/2 and v = 1/2.
    let pairs = [((0, 1), (2, 3)), ((1, 1), (3, 3)), ((0, 2), (1, 0)), ((2, 2), (3, 0))];
    pairs
        .iter()
        .map(|&((qa, ka), (qb, kb))| boundary_defects(&kids[qa], ka, &kids[qb], kb, n).map(|d| d.c2).expect("children meet end to end"))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Modified,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Modified => "modified",
        }
    }

    /// Kernel table applied to extraordinary patches in this mode.
    pub fn table(self) -> KernelTable {
        match self {
            Mode::Standard => standard_kernels(),
            Mode::Modified => modified_kernels(),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Mode::Standard),
            "modified" => Ok(Mode::Modified),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

/// Defects at one depth and mode, maxima over all extraordinary corners and
/// the boundaries that emanate from them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ModeRow {
    pub depth: u32,
    pub mode: Option<Mode>,
    pub c1: f64,
    pub g1: f64,
    pub c2: f64,
    pub normal_spread: f64,
    pub unbroken_line: f64,
    pub planarity: f64,
}

/// Samples per boundary used by [`extraordinary_defects`].
pub const BOUNDARY_SAMPLES: usize = 32;

/// Measure the surface after `depth` subdivision levels of every extraordinary patch.
pub fn extraordinary_defects(set: &PatchSet, table: &KernelTable, depth: u32) -> ModeRow {
    let fans = extraordinary_fans(set);
    let mut involved: Vec<usize> = fans.iter().flatten().flat_map(|&(p, c)| [p, set.patches[p].neighbors[c].patch]).collect();
    involved.sort_unstable();
    involved.dedup();
    let mut trees: Vec<Option<PatchTree>> = vec![None; set.len()];
    for &p in &involved {
        let patch = &set.patches[p];
        trees[p] = Some(build_patch_tree(&patch.net, &patch.corners, table, depth));
    }
    let mut row = ModeRow { depth, ..ModeRow::default() };
    for fan in &fans {
        let mut ring = Vec::with_capacity(fan.len());
        for &(p, c) in fan {
            let link = set.patches[p].neighbors[c];
            let a = trees[p].as_ref().expect("tree built");
            let b = trees[link.patch].as_ref().expect("tree built");
            let d = boundary_defects(a, c, b, link.side, BOUNDARY_SAMPLES).expect("assembled neighbors meet end to end");
            row.c1 = row.c1.max(d.c1);
            row.g1 = row.g1.max(d.g1);
            row.c2 = row.c2.max(d.c2);
            // The leaf at the corner is reached by always descending into the corner's quadrant.
            let mut node = &a.nodes[0];
            while let Some(children) = node.children {
                node = &a.nodes[children[corner_quadrant(c)]];
            }
            ring.push((node.net, c));
        }
        let r = ring_defects(&ring);
        row.normal_spread = row.normal_spread.max(r.normal_spread);
        row.unbroken_line = row.unbroken_line.max(r.unbroken_line);
        row.planarity = row.planarity.max(r.planarity);
    }
    row
}

/// Standard and modified defects for each depth, standard first.
pub fn compare_modes(set: &PatchSet, depths: &[u32]) -> Vec<ModeRow> {
    let tables = [(Mode::Standard, crate::kernels::standard_kernels()), (Mode::Modified, crate::kernels::modified_kernels())];
    let mut rows = Vec::with_capacity(2 * depths.len());
    for &d in depths {
        for (mode, table) in &tables {
            rows.push(ModeRow { mode: Some(*mode), ..extraordinary_defects(set, table, d) });
        }
    }
    rows
}

/// Metric columns of a defect table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    C1,
    G1,
    C2,
    Ring,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "c1" => Ok(Metric::C1),
            "g1" => Ok(Metric::G1),
            "c2" => Ok(Metric::C2),
            "ring" => Ok(Metric::Ring),
            _ => Err(format!("unknown metric `{s}` (expected c1, g1, c2 or ring)")),
        }
    }
}

type Column = (&'static str, fn(&ModeRow) -> f64);

fn columns(metrics: &[Metric]) -> Vec<Column> {
    let mut cols: Vec<Column> = Vec::new();
    for m in metrics {
        match m {
            Metric::C1 => cols.push(("c1", |r| r.c1)),
            Metric::G1 => cols.push(("g1", |r| r.g1)),
            Metric::C2 => cols.push(("c2", |r| r.c2)),
            Metric::Ring => {
                cols.push(("normal_spread", |r| r.normal_spread));
                cols.push(("unbroken_line", |r| r.unbroken_line));
                cols.push(("planarity", |r| r.planarity));
            }
        }
    }
    cols
}

pub fn rows_to_csv(rows: &[ModeRow], metrics: &[Metric]) -> String {
    use std::fmt::Write as _;
    let cols = columns(metrics);
    let mut out = String::from("depth,mode");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.depth, r.mode.map_or("", Mode::name));
        for (_, f) in &cols {
            let _ = write!(out, ",{:e}", f(r));
        }
        out.push('\n');
    }
    out
}

pub fn rows_to_json(rows: &[ModeRow], metrics: &[Metric]) -> serde_json::Value {
    let cols = columns(metrics);
    serde_json::Value::Array(
        rows.iter()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                obj.insert("depth".into(), r.depth.into());
                obj.insert("mode".into(), r.mode.map_or("", Mode::name).into());
                for (name, f) in &cols {
                    obj.insert((*name).into(), f(r).into());
                }
                serde_json::Value::Object(obj)
            })
            .collect(),
    )
}

pub const ALL_METRICS: [Metric; 4] = [Metric::C1, Metric::G1, Metric::C2, Metric::Ring];

#[cfg(test)]
mod tests;
