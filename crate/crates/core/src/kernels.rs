//! Midpoint subdivision kernels for bicubic Bezier nets.
//!
//! A table holds sixteen 4x4 masks for the child in the quadrant of parent
//! corner (0,0); the other quadrants follow by index reflection `m -> 3 - m`.
//! Weights are kept as exact rationals next to their `f64` values.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::geom::Vec3;

pub type Q = Ratio<i128>;
/// A 4x4 Bezier control net, `net[i][j]` with `i` along u and `j` along v.
pub type Net = [[Vec3; 4]; 4];
/// Rational weights over the 16 parent points, `w[i][j]`.
pub type Mask = [[Q; 4]; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("KernelDerivationError: {0}")]
    Derivation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Standard,
    DerivedModified,
    /// Literal table transcribed by hand, used to cross-check the derivation.
    LiteralModified,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    pub provenance: Provenance,
    /// `exact[m][n]` is the mask producing child point `(m, n)` of quadrant 00.
    pub exact: [[Mask; 4]; 4],
    /// Per quadrant `q = 2a + b` (a: upper half in u, b: upper half in v), `f64` masks.
    quadrant: [[[[[f64; 4]; 4]; 4]; 4]; 4],
}

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn zero_mask() -> Mask {
    [[Q::zero(); 4]; 4]
}

fn unit_mask(i: usize, j: usize) -> Mask {
    let mut m = zero_mask();
    m[i][j] = Q::one();
    m
}

fn add(a: &Mask, b: &Mask) -> Mask {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn scale(a: &Mask, s: Q) -> Mask {
    let mut out = *a;
    for row in out.iter_mut() {
        for w in row.iter_mut() {
            *w *= s;
        }
    }
    out
}

fn avg(a: &Mask, b: &Mask) -> Mask {
    scale(&add(a, b), q(1, 2))
}

fn mask_sum(a: &Mask) -> Q {
    a.iter().flatten().fold(Q::zero(), |s, w| s + w)
}

/// Build a mask from integer weights over a common denominator.
fn literal(den: i128, rows: &[&[i128]]) -> Mask {
    let mut m = zero_mask();
    for (i, row) in rows.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            m[i][j] = q(w, den);
        }
    }
    m
}

impl KernelTable {
    pub fn from_exact(provenance: Provenance, exact: [[Mask; 4]; 4]) -> Self {
        let mut quadrant = [[[[[0.0; 4]; 4]; 4]; 4]; 4];
        for (qi, quad) in quadrant.iter_mut().enumerate() {
            let (a, b) = (qi / 2, qi % 2);
            for m in 0..4 {
                for n in 0..4 {
                    let (bm, bn) = (if a == 1 { 3 - m } else { m }, if b == 1 { 3 - n } else { n });
                    for i in 0..4 {
                        for j in 0..4 {
                            let (bi, bj) = (if a == 1 { 3 - i } else { i }, if b == 1 { 3 - j } else { j });
                            let w = exact[bm][bn][bi][bj];
                            quad[m][n][i][j] = *w.numer() as f64 / *w.denom() as f64;
                        }
                    }
                }
            }
        }
        Self { provenance, exact, quadrant }
    }

    /// `f64` weights of child point `(m, n)` in quadrant `quad`.
    pub fn mask(&self, quad: usize, m: usize, n: usize) -> &[[f64; 4]; 4] {
        &self.quadrant[quad][m][n]
    }

    /// Exact weights of child point `(m, n)` in quadrant `quad`.
    pub fn exact_mask(&self, quad: usize, m: usize, n: usize) -> Mask {
        let (a, b) = (quad / 2, quad % 2);
        let (bm, bn) = (if a == 1 { 3 - m } else { m }, if b == 1 { 3 - n } else { n });
        let src = &self.exact[bm][bn];
        let mut out = zero_mask();
        for i in 0..4 {
            for j in 0..4 {
                let (bi, bj) = (if a == 1 { 3 - i } else { i }, if b == 1 { 3 - j } else { j });
                out[i][j] = src[bi][bj];
            }
        }
        out
    }

    /// JSON record: 16 masks with exact decimal strings and `f64` values.
    pub fn to_json(&self) -> serde_json::Value {
        let masks: Vec<serde_json::Value> = (0..4)
            .flat_map(|m| (0..4).map(move |n| (m, n)))
            .map(|(m, n)| {
                let exact: Vec<String> = self.exact[m][n].iter().flatten().map(exact_decimal).collect();
                let values: Vec<f64> = self.quadrant[0][m][n].iter().flatten().copied().collect();
                serde_json::json!({ "m": m, "n": n, "weights": exact, "values": values })
            })
            .collect();
        serde_json::json!({ "provenance": self.provenance, "masks": masks })
    }
}

/// Exact decimal expansion of a rational whose denominator has only factors 2 and 5,
/// otherwise `p/q`.
pub fn exact_decimal(r: &Q) -> String {
    let (mut num, den) = (*r.numer(), *r.denom());
    let neg = num < 0;
    num = num.abs();
    let mut d = den;
    let mut digits = 0u32;
    while d % 2 == 0 || d % 5 == 0 {
        d /= if d % 2 == 0 { 2 } else { 5 };
        digits += 1;
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let scaled = num * 10i128.pow(digits) / den;
    let int = scaled / 10i128.pow(digits);
    let frac = scaled % 10i128.pow(digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        let s = format!("{frac:0width$}", width = digits as usize);
        format!("{sign}{int}.{}", s.trim_end_matches('0'))
    }
}

const ROWS: [[(i128, i128); 4]; 4] = [
    [(1, 1), (0, 1), (0, 1), (0, 1)],
    [(1, 2), (1, 2), (0, 1), (0, 1)],
    [(1, 4), (2, 4), (1, 4), (0, 1)],
    [(1, 8), (3, 8), (3, 8), (1, 8)],
];

/// Tensor-product midpoint de Casteljau masks.
pub fn standard_kernels() -> KernelTable {
    let mut exact = [[zero_mask(); 4]; 4];
    for (m, row_m) in ROWS.iter().enumerate() {
        for (n, row_n) in ROWS.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    exact[m][n][i][j] = q(row_m[i].0, row_m[i].1) * q(row_n[j].0, row_n[j].1);
                }
            }
        }
    }
    KernelTable::from_exact(Provenance::Standard, exact)
}

/// The modified table written out literally (weights over the stated denominators).
pub fn modified_kernels() -> KernelTable {
    let mut exact = standard_kernels().exact;
    exact[1][1] = literal(2, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
    exact[1][2] = literal(8, &[&[2, 1, 1, 0], &[0, 3, 1, 0]]);
    exact[1][3] = literal(8, &[&[1, 1, 1, 1], &[0, 2, 2, 0]]);
    exact[2][1] = literal(8, &[&[2, 0, 0, 0], &[1, 3, 0, 0], &[1, 1, 0, 0]]);
    exact[2][2] = literal(16, &[&[2, 1, 1, 0], &[1, 5, 2, 0], &[1, 2, 1, 0]]);
    exact[2][3] = literal(32, &[&[2, 2, 2, 2], &[1, 7, 7, 1], &[1, 3, 3, 1]]);
    exact[3][1] = literal(8, &[&[1, 0, 0, 0], &[1, 2, 0, 0], &[1, 2, 0, 0], &[1, 0, 0, 0]]);
    exact[3][2] = literal(32, &[&[2, 1, 1, 0], &[2, 7, 3, 0], &[2, 7, 3, 0], &[2, 1, 1, 0]]);
    exact[3][3] = literal(32, &[&[1, 1, 1, 1], &[1, 5, 5, 1], &[1, 5, 5, 1], &[1, 1, 1, 1]]);
    KernelTable::from_exact(Provenance::LiteralModified, exact)
}

/// Symbolic de Casteljau pyramid over the 16 parent points.
///
/// `level[a][b]` is the `(4 - a) x (4 - b)` grid after `a` averaging steps in u
/// and `b` in v. With `scaled_corners`, the four corner entries of the (1,1)
/// grid are replaced by the corner-scaling rule (midpoint of the parent corner
/// and its diagonal neighbor) and every grid with `a, b >= 1` is averaged from
/// that replaced grid.
struct Pyramid {
    level: Vec<Vec<Vec<Vec<Mask>>>>,
}

impl Pyramid {
    fn build(scaled_corners: bool) -> Self {
        let mut level = vec![vec![Vec::new(); 4]; 4];
        level[0][0] = (0..4).map(|i| (0..4).map(|j| unit_mask(i, j)).collect()).collect();
        let step_u = |g: &Vec<Vec<Mask>>| -> Vec<Vec<Mask>> {
            (0..g.len() - 1).map(|i| (0..g[0].len()).map(|j| avg(&g[i][j], &g[i + 1][j])).collect()).collect()
        };
        let step_v = |g: &Vec<Vec<Mask>>| -> Vec<Vec<Mask>> {
            (0..g.len()).map(|i| (0..g[0].len() - 1).map(|j| avg(&g[i][j], &g[i][j + 1])).collect()).collect()
        };
        for a in 1..4 {
            level[a][0] = step_u(&level[a - 1][0]);
        }
        for b in 1..4 {
            level[0][b] = step_v(&level[0][b - 1]);
        }
        let mut g11 = step_u(&level[0][1]);
        if scaled_corners {
            for (ci, cj, di, dj) in [(0, 0, 1, 1), (2, 0, 2, 1), (0, 2, 1, 2), (2, 2, 2, 2)] {
                // Parent corner (3i/2, 3j/2) and its diagonal neighbor, e.g. (P00 + P11) / 2.
                let (pi, pj) = (ci * 3 / 2, cj * 3 / 2);
                g11[ci][cj] = avg(&unit_mask(pi, pj), &unit_mask(di, dj));
            }
        }
        level[1][1] = g11;
        for a in 1..4 {
            for b in 1..4 {
                if (a, b) == (1, 1) {
                    continue;
                }
                level[a][b] = if a > 1 { step_u(&level[a - 1][b]) } else { step_v(&level[a][b - 1]) };
            }
        }
        Self { level }
    }

    /// Child net of quadrant `(qa, qb)` as masks. In the lower half child point
    /// `m` is entry 0 of level `m`; in the upper half it is entry `m` of level `3 - m`.
    fn child(&self, qa: usize, qb: usize) -> [[Mask; 4]; 4] {
        let pick = |half: usize, m: usize| if half == 0 { (m, 0) } else { (3 - m, m) };
        let mut out = [[zero_mask(); 4]; 4];
        for m in 0..4 {
            for n in 0..4 {
                let (a, i) = pick(qa, m);
                let (b, j) = pick(qb, n);
                out[m][n] = self.level[a][b][i][j];
            }
        }
        out
    }
}

/// Linear C0/C1/C2 junction expressions across the two internal child boundaries.
///
/// Each entry is a mask that must vanish identically.
fn junction_constraints(children: &[[[Mask; 4]; 4]; 4]) -> Vec<Mask> {
    let mut out = Vec::new();
    let neg = |a: &Mask| scale(a, q(-1, 1));
    let two = |a: &Mask| scale(a, q(2, 1));
    // Across u = 1/2: child (0,b) rows 1..3 against child (1,b) rows 0..2.
    for b in 0..2 {
        let (lo, hi) = (&children[b], &children[2 + b]);
        for n in 0..4 {
            let l = |m: usize| lo[m][n];
            let h = |m: usize| hi[m][n];
            out.push(add(&l(3), &neg(&h(0))));
            out.push(add(&add(&l(3), &neg(&l(2))), &add(&neg(&h(1)), &h(0))));
            let left = add(&add(&l(1), &neg(&two(&l(2)))), &l(3));
            let right = add(&add(&h(0), &neg(&two(&h(1)))), &h(2));
            out.push(add(&left, &neg(&right)));
        }
    }
    // Across v = 1/2: child (a,0) columns 1..3 against child (a,1) columns 0..2.
    for a in 0..2 {
        let (lo, hi) = (&children[2 * a], &children[2 * a + 1]);
        for m in 0..4 {
            let l = |n: usize| lo[m][n];
            let h = |n: usize| hi[m][n];
            out.push(add(&l(3), &neg(&h(0))));
            out.push(add(&add(&l(3), &neg(&l(2))), &add(&neg(&h(1)), &h(0))));
            let left = add(&add(&l(1), &neg(&two(&l(2)))), &l(3));
            let right = add(&add(&h(0), &neg(&two(&h(1)))), &h(2));
            out.push(add(&left, &neg(&right)));
        }
    }
    out
}

fn children_of(exact: &[[Mask; 4]; 4]) -> [[[Mask; 4]; 4]; 4] {
    let t = KernelTable::from_exact(Provenance::Custom, *exact);
    let mut out = [[[zero_mask(); 4]; 4]; 4];
    for (quad, child) in out.iter_mut().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                child[m][n] = t.exact_mask(quad, m, n);
            }
        }
    }
    out
}

/// Largest absolute coefficient of any junction constraint (0 means exactly C2).
pub fn exact_c2_residual(table: &KernelTable) -> Q {
    junction_constraints(&children_of(&table.exact))
        .iter()
        .flat_map(|c| c.iter().flatten().map(|w| w.abs()).collect::<Vec<_>>())
        .fold(Q::zero(), |a, b| if b > a { b } else { a })
}

/// The interior 2x2 block of the quadrant-00 table: the masks the C2
/// readjustment is allowed to change.
const FREE: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

/// Minimum-norm change of the interior 2x2 masks that makes all junction
/// constraints hold and keeps every mask affine (weights summing to 1).
pub fn readjust_for_c2(exact: &[[Mask; 4]; 4]) -> Result<[[Mask; 4]; 4], KernelError> {
    // Unknown x: 4 free masks x 16 weights. Constraints are affine in x:
    // residual(x) = r0 + A x, with A found by probing unit changes.
    let base = constraint_vector(exact);
    let mut columns = Vec::with_capacity(64);
    for (f, &(m, n)) in FREE.iter().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                let mut probe = *exact;
                probe[m][n][i][j] += Q::one();
                let r = constraint_vector(&probe);
                columns.push((f, i, j, r.iter().zip(&base).map(|(a, b)| a - b).collect::<Vec<_>>()));
            }
        }
    }
    let rows = base.len();
    // Affine rows: the weights of each free mask change by a total of zero.
    let mut a: Vec<Vec<Q>> = (0..rows).map(|r| columns.iter().map(|c| c.3[r]).collect()).collect();
    let mut rhs: Vec<Q> = base.iter().map(|v| -*v).collect();
    for f in 0..4 {
        a.push(columns.iter().map(|c| if c.0 == f { Q::one() } else { Q::zero() }).collect());
        rhs.push(Q::zero());
    }
    let x = min_norm_solve(&a, &rhs).ok_or_else(|| KernelError::Derivation("C2 constraints are infeasible".into()))?;
    let mut out = *exact;
    for (c, dx) in columns.iter().zip(&x) {
        let (m, n) = FREE[c.0];
        out[m][n][c.1][c.2] += *dx;
    }
    Ok(out)
}

fn constraint_vector(exact: &[[Mask; 4]; 4]) -> Vec<Q> {
    junction_constraints(&children_of(exact)).iter().flat_map(|c| c.iter().flatten().copied().collect::<Vec<_>>()).collect()
}

/// Minimum-norm solution of `A x = b` in exact arithmetic, `None` if inconsistent.
///
/// Reduces `A` to an independent row set, then solves `(A A^T) y = b`, `x = A^T y`.
fn min_norm_solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let cols = a.first().map_or(0, |r| r.len());
    // Row echelon form of the augmented system to test consistency and pick independent rows.
    let mut aug: Vec<(Vec<Q>, Q, usize)> = a.iter().zip(b).enumerate().map(|(k, (r, v))| (r.clone(), *v, k)).collect();
    let mut pivot_row = 0;
    for c in 0..cols {
        let Some(p) = (pivot_row..aug.len()).find(|&r| !aug[r].0[c].is_zero()) else {
            continue;
        };
        aug.swap(pivot_row, p);
        let (prow, pv, _) = aug[pivot_row].clone();
        for r in 0..aug.len() {
            if r != pivot_row && !aug[r].0[c].is_zero() {
                let f = aug[r].0[c] / prow[c];
                for k in 0..cols {
                    let d = prow[k] * f;
                    aug[r].0[k] -= d;
                }
                aug[r].1 -= pv * f;
            }
        }
        pivot_row += 1;
    }
    if aug[pivot_row..].iter().any(|(_, v, _)| !v.is_zero()) {
        return None;
    }
    // The first `pivot_row` reduced rows span the row space of A.
    let rows: Vec<(Vec<Q>, Q)> = aug[..pivot_row].iter().map(|(r, v, _)| (r.clone(), *v)).collect();
    let n = rows.len();
    if n == 0 {
        return Some(vec![Q::zero(); cols]);
    }
    let mut gram: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| rows[i].0.iter().zip(&rows[j].0).fold(Q::zero(), |s, (x, y)| s + x * y)).collect())
        .collect();
    let mut y: Vec<Q> = rows.iter().map(|r| r.1).collect();
    // Gauss-Jordan on the (nonsingular) Gram matrix.
    for c in 0..n {
        let p = (c..n).find(|&r| !gram[r][c].is_zero())?;
        gram.swap(c, p);
        y.swap(c, p);
        let piv = gram[c][c];
        for k in 0..n {
            gram[c][k] /= piv;
        }
        y[c] /= piv;
        for r in 0..n {
            if r != c && !gram[r][c].is_zero() {
                let f = gram[r][c];
                for k in 0..n {
                    let d = gram[c][k] * f;
                    gram[r][k] -= d;
                }
                let d = y[c] * f;
                y[r] -= d;
            }
        }
    }
    Some((0..cols).map(|k| rows.iter().zip(&y).fold(Q::zero(), |s, (r, yi)| s + r.0[k] * yi)).collect())
}

/// Derive the modified table: propagate the corner-scaling rule through the
/// pyramid, then readjust the interior 2x2 block for C2 across the internal
/// child boundaries.
pub fn derive_modified_kernels() -> Result<KernelTable, KernelError> {
    let pyramid = Pyramid::build(true);
    let children = [pyramid.child(0, 0), pyramid.child(0, 1), pyramid.child(1, 0), pyramid.child(1, 1)];
    let table = children[0];
    // The table is only meaningful if every quadrant is the reflection of quadrant 00.
    let reflected = children_of(&table);
    if reflected != children {
        return Err(KernelError::Derivation("pyramid children are not reflections of quadrant 00".into()));
    }
    let readjusted = readjust_for_c2(&table)?;
    for row in readjusted.iter().flatten() {
        if mask_sum(row) != Q::one() {
            return Err(KernelError::Derivation("a derived mask is not affine".into()));
        }
    }
    Ok(KernelTable::from_exact(Provenance::DerivedModified, readjusted))
}

/// The negative control: corner scaling and its propagation into the
/// boundary-adjacent masks, but the interior 2x2 block left standard.
pub fn unadjusted_modified_kernels() -> KernelTable {
    let mut exact = Pyramid::build(true).child(0, 0);
    let std = standard_kernels();
    for (m, n) in FREE {
        exact[m][n] = std.exact[m][n];
    }
    KernelTable::from_exact(Provenance::Custom, exact)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskDiff {
    pub m: usize,
    pub n: usize,
    pub max_abs: f64,
}

/// Masks whose weights differ by more than `tol`, in row-major order.
pub fn kernel_diff(a: &KernelTable, b: &KernelTable, tol: f64) -> Vec<MaskDiff> {
    let mut out = Vec::new();
    for m in 0..4 {
        for n in 0..4 {
            let max_abs = a.quadrant[0][m][n]
                .iter()
                .flatten()
                .zip(b.quadrant[0][m][n].iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if max_abs > tol {
                out.push(MaskDiff { m, n, max_abs });
            }
        }
    }
    out
}

/// Apply a table to a net: the four children in quadrant order 00, 01, 10, 11.
pub fn subdivide_net(net: &Net, table: &KernelTable) -> [Net; 4] {
    let mut out = [[[Vec3::zeros(); 4]; 4]; 4];
    for (quad, child) in out.iter_mut().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                let w = table.mask(quad, m, n);
                let mut p = Vec3::zeros();
                for i in 0..4 {
                    for j in 0..4 {
                        if w[i][j] != 0.0 {
                            p += net[i][j] * w[i][j];
                        }
                    }
                }
                child[m][n] = p;
            }
        }
    }
    out
}
