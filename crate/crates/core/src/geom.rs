//! Small geometric helpers shared by the frame, patch and analysis code.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

pub type Vec3 = Vector3<f64>;

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Midpoint written so that `midpoint(a, b)` and `midpoint(b, a)` agree bitwise.
pub fn midpoint(a: &Vec3, b: &Vec3) -> Vec3 {
    (a + b) * 0.5
}

pub fn mean(points: &[Vec3]) -> Vec3 {
    let mut sum = Vec3::zeros();
    for p in points {
        sum += p;
    }
    sum / points.len() as f64
}

/// Length of the axis-aligned bounding box diagonal.
pub fn bbox_diagonal<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    let mut any = false;
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
        any = true;
    }
    if any {
        (hi - lo).norm()
    } else {
        0.0
    }
}

/// Angle between two vectors in radians, robust near 0 and pi.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Least-squares plane through the centroid of `points`.
///
/// Returns the centroid, the unit normal (eigenvector of the smallest
/// covariance eigenvalue) and the three eigenvalues in ascending order.
pub fn fit_plane(points: &[Vec3]) -> (Vec3, Vec3, [f64; 3]) {
    let c = mean(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let normal: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    let values = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    (c, normal.normalize(), values)
}

/// Vector area of a closed polygon (half the sum of consecutive cross products).
pub fn vector_area(points: &[Vec3]) -> Vec3 {
    let c = mean(points);
    let n = points.len();
    let mut a = Vec3::zeros();
    for k in 0..n {
        a += (points[k] - c).cross(&(points[(k + 1) % n] - c));
    }
    a * 0.5
}

/// Rotate `v` about the unit axis `axis` by `angle` radians (Rodrigues).
pub fn rotate_about(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}
