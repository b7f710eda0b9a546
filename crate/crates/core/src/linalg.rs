//! Small fixed-size vector and matrix helpers used throughout the crate.
//!
//! Vectors are plain `[f64; 3]`, matrices row-major `[[f64; 3]; 3]`.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

#[inline]
pub fn mat_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

#[inline]
pub fn mat_scale(a: &Mat3, s: f64) -> Mat3 {
    let mut out = *a;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    out
}

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Cross-product matrix: `cross_matrix(a) * v == a x v`.
#[inline]
pub fn cross_matrix(a: Vec3) -> Mat3 {
    [
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ]
}

/// Outer product `a bᵀ`.
#[inline]
pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i] * b[j];
        }
    }
    out
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Matrix inverse by adjugate; returns `None` when the determinant is tiny.
pub fn inv3(m: &Mat3) -> Option<Mat3> {
    let det = det3(m);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    Some(out)
}

/// Symmetric 3x3 tensor stored as its six independent components.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3 {
        xx: 0.0,
        xy: 0.0,
        xz: 0.0,
        yy: 0.0,
        yz: 0.0,
        zz: 0.0,
    };

    /// Rank-one update `self += s * v vᵀ`.
    #[inline]
    pub fn add_scaled_outer(&mut self, v: Vec3, s: f64) {
        self.xx += s * v[0] * v[0];
        self.xy += s * v[0] * v[1];
        self.xz += s * v[0] * v[2];
        self.yy += s * v[1] * v[1];
        self.yz += s * v[1] * v[2];
        self.zz += s * v[2] * v[2];
    }

    #[inline]
    pub fn to_mat(&self) -> Mat3 {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn from_mat(m: &Mat3) -> Sym3 {
        Sym3 {
            xx: m[0][0],
            xy: 0.5 * (m[0][1] + m[1][0]),
            xz: 0.5 * (m[0][2] + m[2][0]),
            yy: m[1][1],
            yz: 0.5 * (m[1][2] + m[2][1]),
            zz: m[2][2],
        }
    }

    /// Upper-triangle components in (xx, xy, xz, yy, yz, zz) order.
    pub fn upper_triangle(&self) -> [f64; 6] {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz]
    }

    pub fn from_upper_triangle(u: [f64; 6]) -> Sym3 {
        Sym3 {
            xx: u[0],
            xy: u[1],
            xz: u[2],
            yy: u[3],
            yz: u[4],
            zz: u[5],
        }
    }
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending.
///
/// Closed-form trigonometric method; the diagonal case is returned exactly.
pub fn sym3_eigenvalues(m: &Mat3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut eig = [m[0][0], m[1][1], m[2][2]];
        eig.sort_by(f64::total_cmp);
        return eig;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let eig1 = q + 2.0 * p * phi.cos();
    let eig3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let eig2 = 3.0 * q - eig1 - eig3;
    let mut eig = [eig1, eig2, eig3];
    eig.sort_by(f64::total_cmp);
    eig
}

/// Cholesky factor L (lower triangular, `L Lᵀ = m`) of a symmetric positive
/// definite matrix. Returns `None` if the matrix is not positive definite.
pub fn cholesky3(m: &Mat3) -> Option<Mat3> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_matrix_matches_cross_product() {
        let a = [0.3, -1.2, 2.0];
        let v = [1.0, 0.5, -0.25];
        let lhs = mat_vec(&cross_matrix(a), v);
        let rhs = cross(a, v);
        for k in 0..3 {
            assert!((lhs[k] - rhs[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let m = [[2.0, 0.3, -0.1], [0.5, 1.5, 0.2], [-0.3, 0.1, 3.0]];
        let inv = inv3(&m).unwrap();
        for i in 0..3 {
            let row = mat_vec(&inv, [m[0][i], m[1][i], m[2][i]]);
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((row[j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalues_diagonal_exact() {
        let m = [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(sym3_eigenvalues(&m), [1.0, 1.0, 4.0]);
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        let m = [[3.0, 1.0, 0.5], [1.0, 2.0, -0.2], [0.5, -0.2, 1.5]];
        for lambda in sym3_eigenvalues(&m) {
            let shifted = [
                [m[0][0] - lambda, m[0][1], m[0][2]],
                [m[1][0], m[1][1] - lambda, m[1][2]],
                [m[2][0], m[2][1], m[2][2] - lambda],
            ];
            assert!(det3(&shifted).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_roundtrip() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.25], [0.5, -0.25, 2.0]];
        let l = cholesky3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += l[i][k] * l[j][k];
                }
                assert!((s - m[i][j]).abs() < 1e-13);
            }
        }
        let not_pd = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(cholesky3(&not_pd).is_none());
    }
}
