//! Hierarchical evaluation and crack-free triangulation of a patch set.
//!
//! Regular patches are sampled directly. Extraordinary patches are split
//! recursively; only the child that owns an extraordinary corner keeps
//! splitting. Every patch is triangulated on its own into a [`PatchChunk`]
//! whose vertices carry topological keys (refined-mesh corner, shared side
//! and offset, or patch interior), and chunks are welded by key. Points a
//! neighbor samples on a shared side are inserted into the coarser side's
//! cells, so no T-junctions remain.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{bbox_diagonal, Vec3};
use crate::kernels::{KernelTable, Net};
use crate::mesh::HalfEdgeMesh;
use crate::patch::{subdivide_patch, CornerMeta, PatchSet, CORNER_POS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TessellationError {
    #[error("TessellationError: {0}")]
    Config(String),
    #[error("TessellationError: welded mesh is not a closed manifold ({0})")]
    NonManifold(String),
    #[error("TessellationError: copies of a shared vertex are {gap} apart")]
    WeldGap { gap: f64 },
}

/// Point and partial derivatives of a bicubic patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eval {
    pub point: Vec3,
    pub du: Vec3,
    pub dv: Vec3,
    pub duu: Vec3,
    pub dvv: Vec3,
    pub duv: Vec3,
}

fn bernstein(t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s = 1.0 - t;
    let b = [s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t];
    let d = [-3.0 * s * s, 3.0 * s * s - 6.0 * t * s, 6.0 * t * s - 3.0 * t * t, 3.0 * t * t];
    let dd = [6.0 * s, 18.0 * t - 12.0, 6.0 - 18.0 * t, 6.0 * t];
    (b, d, dd)
}

pub fn evaluate_bezier(net: &Net, u: f64, v: f64) -> Eval {
    let (bu, du, ddu) = bernstein(u);
    let (bv, dv, ddv) = bernstein(v);
    let mut e = Eval { point: Vec3::zeros(), du: Vec3::zeros(), dv: Vec3::zeros(), duu: Vec3::zeros(), dvv: Vec3::zeros(), duv: Vec3::zeros() };
    for i in 0..4 {
        for j in 0..4 {
            let p = net[i][j];
            e.point += p * (bu[i] * bv[j]);
            e.du += p * (du[i] * bv[j]);
            e.dv += p * (bu[i] * dv[j]);
            e.duu += p * (ddu[i] * bv[j]);
            e.dvv += p * (bu[i] * ddv[j]);
            e.duv += p * (du[i] * dv[j]);
        }
    }
    e
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub net: Net,
    pub corners: [CornerMeta; 4],
    pub depth: u32,
    /// Position of the node's square among the `2^depth x 2^depth` squares of the root.
    pub x: u32,
    pub y: u32,
    pub children: Option<[usize; 4]>,
}

/// Subdivision hierarchy of one patch; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchTree {
    pub nodes: Vec<TreeNode>,
}

impl PatchTree {
    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_none())
    }

    pub fn subdivisions(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }

    pub fn depth_reached(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Leaf containing root parameters `(u, v)` and the local parameters in it.
    /// Points on a split line belong to the upper child.
    pub fn locate(&self, u: f64, v: f64) -> (&TreeNode, f64, f64) {
        let (mut node, mut u, mut v) = (&self.nodes[0], u, v);
        while let Some(children) = node.children {
            let a = usize::from(u >= 0.5);
            let b = usize::from(v >= 0.5);
            u = 2.0 * u - a as f64;
            v = 2.0 * v - b as f64;
            node = &self.nodes[children[2 * a + b]];
        }
        (node, u, v)
    }

    /// Evaluate at root parameters with derivatives expressed in root parameters.
    pub fn evaluate(&self, u: f64, v: f64) -> Eval {
        let (leaf, lu, lv) = self.locate(u, v);
        let mut e = evaluate_bezier(&leaf.net, lu, lv);
        let s = f64::from(1u32 << leaf.depth);
        e.du *= s;
        e.dv *= s;
        e.duu *= s * s;
        e.dvv *= s * s;
        e.duv *= s * s;
        e
    }
}

pub fn build_patch_tree(net: &Net, corners: &[CornerMeta; 4], table: &KernelTable, max_depth: u32) -> PatchTree {
    let mut tree = PatchTree { nodes: vec![TreeNode { net: *net, corners: *corners, depth: 0, x: 0, y: 0, children: None }] };
    let mut i = 0;
    while i < tree.nodes.len() {
        let node = &tree.nodes[i];
        if node.depth < max_depth && node.corners.iter().any(|c| c.extraordinary) {
            let (depth, x, y) = (node.depth + 1, node.x, node.y);
            let kids = subdivide_patch(&node.net, &node.corners, table);
            let first = tree.nodes.len();
            for (q, (net, corners)) in kids.into_iter().enumerate() {
                let (a, b) = ((q / 2) as u32, (q % 2) as u32);
                tree.nodes.push(TreeNode { net, corners, depth, x: 2 * x + a, y: 2 * y + b, children: None });
            }
            tree.nodes[i].children = Some([first, first + 1, first + 2, first + 3]);
        }
        i += 1;
    }
    tree
}

/// Leaf squares `(depth, x, y)` of the tree a patch with these extraordinary corners gets.
pub fn leaf_layout(extraordinary: [bool; 4], max_depth: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    let mut stack = vec![(0u32, 0u32, 0u32, extraordinary)];
    while let Some((d, x, y, ev)) = stack.pop() {
        if d < max_depth && ev.iter().any(|&e| e) {
            for q in (0..4).rev() {
                let mut child = [false; 4];
                for c in 0..4 {
                    let (i, j) = CORNER_POS[c];
                    child[c] = ev[c] && 2 * (i / 3) + j / 3 == q;
                }
                stack.push((d + 1, 2 * x + (q / 2) as u32, 2 * y + (q % 2) as u32, child));
            }
        } else {
            out.push((d, x, y));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TessOptions {
    pub max_depth: u32,
    /// Samples per leaf side; `resolution - 1` must be a power of two.
    pub resolution: usize,
}

impl Default for TessOptions {
    fn default() -> Self {
        Self { max_depth: 4, resolution: 5 }
    }
}

impl TessOptions {
    pub fn validate(&self) -> Result<(), TessellationError> {
        let r = self.resolution;
        if r < 2 || !(r - 1).is_power_of_two() {
            return Err(TessellationError::Config(format!("leaf resolution {r} must be 2^k + 1")));
        }
        if self.max_depth > 12 {
            return Err(TessellationError::Config(format!("max depth {} is too large", self.max_depth)));
        }
        Ok(())
    }

    /// Lattice units per patch side. Every sample and every cell centre is on the lattice.
    fn lattice(&self) -> u32 {
        (2 * (self.resolution as u32 - 1)) << self.max_depth
    }
}

/// Topological identity of a tessellation vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKey {
    /// Vertex of the refined quad mesh (a patch corner).
    Corner(usize),
    /// Point on shared boundary `b`, at `offset` lattice units along the side of its first patch.
    Side(usize, u32),
    Interior(usize, u32, u32),
}

/// Triangulation of one patch with local vertex numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchChunk {
    pub keys: Vec<VertexKey>,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub leaves: usize,
    pub subdivisions: usize,
    pub depth_reached: u32,
}

/// Shared-side numbering used for vertex keys.
#[derive(Clone, Debug)]
pub struct SideIndex {
    boundary: Vec<[usize; 4]>,
    first: Vec<[bool; 4]>,
}

impl SideIndex {
    pub fn new(set: &PatchSet) -> Self {
        let mut boundary = vec![[0; 4]; set.len()];
        let mut first = vec![[false; 4]; set.len()];
        for (i, b) in set.boundaries.iter().enumerate() {
            boundary[b.a.0][b.a.1] = i;
            boundary[b.b.0][b.b.1] = i;
            first[b.a.0][b.a.1] = true;
        }
        Self { boundary, first }
    }
}

fn side_point(k: usize, o: u32, l: u32) -> (u32, u32) {
    match k {
        0 => (o, 0),
        1 => (l, o),
        2 => (l - o, l),
        _ => (0, l - o),
    }
}

fn point_side(x: u32, y: u32, l: u32) -> Option<(usize, u32)> {
    if y == 0 {
        Some((0, x))
    } else if x == l {
        Some((1, y))
    } else if y == l {
        Some((2, l - x))
    } else if x == 0 {
        Some((3, l - y))
    } else {
        None
    }
}

fn extraordinary(set: &PatchSet, p: usize) -> [bool; 4] {
    set.patches[p].corners.map(|c| c.extraordinary)
}

/// Triangulate patch `p` given its tree. Depends only on the tree, the patch's
/// corner metadata and the layouts of its four neighbors.
pub fn tessellate_patch(set: &PatchSet, sides: &SideIndex, p: usize, tree: &PatchTree, opts: &TessOptions) -> PatchChunk {
    let l = opts.lattice();
    let r = opts.resolution as u32;
    let step_at = |d: u32| 2u32 << (opts.max_depth - d);
    let leaves: Vec<&TreeNode> = tree.leaves().collect();

    // Every lattice point that is a vertex of some cell, here or across a side.
    let mut used: HashSet<(u32, u32)> = HashSet::new();
    for leaf in &leaves {
        let s = step_at(leaf.depth);
        let (x0, y0) = (leaf.x * (r - 1) * s, leaf.y * (r - 1) * s);
        for a in 0..r {
            for b in 0..r {
                used.insert((x0 + a * s, y0 + b * s));
            }
        }
    }
    let patch = &set.patches[p];
    for (k, link) in patch.neighbors.iter().enumerate() {
        for (d, x, y) in leaf_layout(extraordinary(set, link.patch), opts.max_depth) {
            let s = step_at(d);
            let (x0, y0) = (x * (r - 1) * s, y * (r - 1) * s);
            for a in 0..r {
                for b in 0..r {
                    if let Some((side, o)) = point_side(x0 + a * s, y0 + b * s, l) {
                        if side == link.side {
                            used.insert(side_point(k, l - o, l));
                        }
                    }
                }
            }
        }
    }

    let corner_at = |x: u32, y: u32| CORNER_POS.iter().position(|&(i, j)| (i as u32 / 3 * l, j as u32 / 3 * l) == (x, y));
    let key_of = |x: u32, y: u32| -> VertexKey {
        if let Some(c) = corner_at(x, y) {
            return VertexKey::Corner(set.corner_vertex[p][c]);
        }
        match point_side(x, y, l) {
            Some((k, o)) => {
                let b = sides.boundary[p][k];
                VertexKey::Side(b, if sides.first[p][k] { o } else { l - o })
            }
            None => VertexKey::Interior(p, x, y),
        }
    };

    let mut chunk = PatchChunk {
        keys: Vec::new(),
        positions: Vec::new(),
        normals: Vec::new(),
        triangles: Vec::new(),
        leaves: leaves.len(),
        subdivisions: tree.subdivisions(),
        depth_reached: tree.depth_reached(),
    };
    let mut local: HashMap<(u32, u32), u32> = HashMap::new();
    let mut vertex = |chunk: &mut PatchChunk, leaf: &TreeNode, x: u32, y: u32| -> u32 {
        if let Some(&i) = local.get(&(x, y)) {
            return i;
        }
        let size = f64::from((r - 1) * step_at(leaf.depth));
        let (x0, y0) = (f64::from(leaf.x) * size, f64::from(leaf.y) * size);
        let (u, v) = ((f64::from(x) - x0) / size, (f64::from(y) - y0) / size);
        let e = evaluate_bezier(&leaf.net, u, v);
        let mut n = e.du.cross(&e.dv);
        let ev_corner = corner_at(x, y).map(|c| patch.corners[c]).filter(|m| m.extraordinary);
        if let Some(m) = ev_corner.filter(|m| m.normal.norm() > 0.0) {
            n = m.normal;
        } else if n.norm() > 1e-300 {
            n = n.normalize();
        } else {
            // Degenerate parametrization: fall back to a frame plane normal.
            n = patch.corners.iter().map(|c| c.normal).find(|n| n.norm() > 0.0).unwrap_or_default();
        }
        let i = chunk.keys.len() as u32;
        chunk.keys.push(key_of(x, y));
        chunk.positions.push(e.point);
        chunk.normals.push(n);
        local.insert((x, y), i);
        i
    };

    for leaf in &leaves {
        let s = step_at(leaf.depth);
        let (x0, y0) = (leaf.x * (r - 1) * s, leaf.y * (r - 1) * s);
        for a in 0..r - 1 {
            for b in 0..r - 1 {
                let (cx, cy) = (x0 + a * s, y0 + b * s);
                // Cell boundary, counter-clockwise in (u, v), with any extra points on it.
                let mut ring = Vec::with_capacity(8);
                let walk = [((cx, cy), (1i64, 0i64)), ((cx + s, cy), (0, 1)), ((cx + s, cy + s), (-1, 0)), ((cx, cy + s), (0, -1))];
                for &((sx, sy), (dx, dy)) in &walk {
                    ring.push((sx, sy));
                    let mut t = 2;
                    while t < s {
                        let q = ((i64::from(sx) + dx * i64::from(t)) as u32, (i64::from(sy) + dy * i64::from(t)) as u32);
                        if used.contains(&q) {
                            ring.push(q);
                        }
                        t += 2;
                    }
                }
                let ids: Vec<u32> = ring.iter().map(|&(x, y)| vertex(&mut chunk, leaf, x, y)).collect();
                if ids.len() == 4 {
                    chunk.triangles.push([ids[0], ids[1], ids[2]]);
                    chunk.triangles.push([ids[0], ids[2], ids[3]]);
                } else {
                    let c = vertex(&mut chunk, leaf, cx + s / 2, cy + s / 2);
                    for i in 0..ids.len() {
                        chunk.triangles.push([c, ids[i], ids[(i + 1) % ids.len()]]);
                    }
                }
            }
        }
    }
    chunk
}

/// Triangle mesh output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.positions.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Build a half-edge mesh from the triangles, which checks closedness and orientation.
    pub fn to_halfedge(&self) -> Result<HalfEdgeMesh, TessellationError> {
        let faces: Vec<Vec<usize>> = self.triangles.iter().map(|t| t.iter().map(|&i| i as usize).collect()).collect();
        HalfEdgeMesh::from_polygons(self.positions.clone(), &faces).map_err(|e| TessellationError::NonManifold(e.to_string()))
    }
}

/// Welded mesh plus, for every chunk vertex, its index in the welded mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Welded {
    pub mesh: TriMesh,
    pub vertex_ids: Vec<Vec<u32>>,
}

/// Merge chunks by vertex key. The first copy of a key provides position and
/// normal; other copies must agree within `tol`.
pub fn weld(chunks: &[PatchChunk], tol: f64) -> Result<Welded, TessellationError> {
    let mut index: HashMap<VertexKey, u32> = HashMap::new();
    let mut mesh = TriMesh::default();
    let mut vertex_ids = Vec::with_capacity(chunks.len());
    let mut gap: f64 = 0.0;
    for chunk in chunks {
        let mut ids = Vec::with_capacity(chunk.keys.len());
        for (i, key) in chunk.keys.iter().enumerate() {
            let id = *index.entry(*key).or_insert_with(|| {
                mesh.positions.push(chunk.positions[i]);
                mesh.normals.push(chunk.normals[i]);
                (mesh.positions.len() - 1) as u32
            });
            gap = gap.max((mesh.positions[id as usize] - chunk.positions[i]).norm());
            ids.push(id);
        }
        mesh.triangles.extend(chunk.triangles.iter().map(|t| t.map(|i| ids[i as usize])));
        vertex_ids.push(ids);
    }
    if gap > tol {
        return Err(TessellationError::WeldGap { gap });
    }
    Ok(Welded { mesh, vertex_ids })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TessStats {
    pub patches: usize,
    pub leaves: usize,
    pub subdivisions: usize,
    pub max_depth_reached: u32,
    pub triangles: usize,
    pub vertices: usize,
}

pub fn stats(chunks: &[PatchChunk], mesh: &TriMesh) -> TessStats {
    TessStats {
        patches: chunks.len(),
        leaves: chunks.iter().map(|c| c.leaves).sum(),
        subdivisions: chunks.iter().map(|c| c.subdivisions).sum(),
        max_depth_reached: chunks.iter().map(|c| c.depth_reached).max().unwrap_or(0),
        triangles: mesh.triangles.len(),
        vertices: mesh.positions.len(),
    }
}

/// Patch trees for every patch, in patch order.
pub fn build_trees(set: &PatchSet, table: &KernelTable, max_depth: u32) -> Vec<PatchTree> {
    let one = |p: &crate::patch::BezierPatch| build_patch_tree(&p.net, &p.corners, table, max_depth);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        set.patches.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        set.patches.iter().map(one).collect()
    }
}

/// Chunks for the listed patches.
pub fn tessellate_patches(set: &PatchSet, table: &KernelTable, opts: &TessOptions, patches: &[usize]) -> Vec<PatchChunk> {
    let sides = SideIndex::new(set);
    let one = |&p: &usize| {
        let patch = &set.patches[p];
        let tree = build_patch_tree(&patch.net, &patch.corners, table, opts.max_depth);
        tessellate_patch(set, &sides, p, &tree, opts)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        patches.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        patches.iter().map(one).collect()
    }
}

/// Weld tolerance for a chunk set: `1e-9` of the sample bounding-box diagonal.
pub fn weld_tolerance(chunks: &[PatchChunk]) -> f64 {
    1e-9 * bbox_diagonal(chunks.iter().flat_map(|c| c.positions.iter()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tessellation {
    pub chunks: Vec<PatchChunk>,
    pub welded: Welded,
    pub stats: TessStats,
}

/// Weld chunks and verify that the result is a closed manifold.
pub fn assemble_tessellation(chunks: Vec<PatchChunk>) -> Result<Tessellation, TessellationError> {
    let welded = weld(&chunks, weld_tolerance(&chunks))?;
    welded.mesh.to_halfedge()?;
    let stats = stats(&chunks, &welded.mesh);
    Ok(Tessellation { chunks, welded, stats })
}

pub fn tessellate(set: &PatchSet, table: &KernelTable, opts: &TessOptions) -> Result<Tessellation, TessellationError> {
    opts.validate()?;
    let all: Vec<usize> = (0..set.len()).collect();
    assemble_tessellation(tessellate_patches(set, table, opts, &all))
}

/// Triangles as OBJ text, one-based indices.
pub fn export_obj(mesh: &TriMesh) -> Vec<u8> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for p in &mesh.positions {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for n in &mesh.normals {
        let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}", a = t[0] + 1, b = t[1] + 1, c = t[2] + 1);
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests;
