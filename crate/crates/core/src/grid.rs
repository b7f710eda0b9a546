//! Node-based fields on a uniform Cartesian mesh with one ghost layer.
//!
//! A grid of `n` nodes per axis spans the closed interval [0, L] with spacing
//! h = L/(n-1); there are n-1 cells per axis. In periodic directions the node
//! planes at 0 and L alias the same physical location (index period n-1), so
//! grid data must keep those planes equal; deposits are folded across the seam
//! and ghost planes replicate the neighbours one period away.

use crate::config::BoundaryMode;
use crate::error::{Error, Result};
use crate::linalg::{Sym3, Vec3};

/// Value types storable on the grid.
pub trait GridValue: Copy + Default {
    fn acc(&mut self, other: Self);
}

impl GridValue for f64 {
    fn acc(&mut self, other: Self) {
        *self += other;
    }
}

impl GridValue for [f64; 3] {
    fn acc(&mut self, other: Self) {
        self[0] += other[0];
        self[1] += other[1];
        self[2] += other[2];
    }
}

impl GridValue for Sym3 {
    fn acc(&mut self, other: Self) {
        self.xx += other.xx;
        self.xy += other.xy;
        self.xz += other.xz;
        self.yy += other.yy;
        self.yz += other.yz;
        self.zz += other.zz;
    }
}

impl GridValue for [[f64; 3]; 3] {
    fn acc(&mut self, other: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self[i][j] += other[i][j];
            }
        }
    }
}

/// How a ghost plane is filled during a sync.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhostRule {
    /// Wrap with index period n-1 (seam planes alias).
    Periodic,
    /// Mirror the first interior plane: zero centered normal derivative.
    Mirror,
    /// Leave ghost values untouched (externally imposed).
    Keep,
}

/// Node-based storage with one ghost layer per face, x fastest in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: GridValue> Field<T> {
    pub fn zeros(dims: [usize; 3]) -> Field<T> {
        let len = (dims[0] + 2) * (dims[1] + 2) * (dims[2] + 2);
        Field {
            dims,
            data: vec![T::default(); len],
        }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Linear index for node (i, j, k); each index may be -1 or dims (ghosts).
    #[inline]
    fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        debug_assert!(i >= -1 && i <= self.dims[0] as isize);
        debug_assert!(j >= -1 && j <= self.dims[1] as isize);
        debug_assert!(k >= -1 && k <= self.dims[2] as isize);
        let sx = self.dims[0] + 2;
        let sy = self.dims[1] + 2;
        (i + 1) as usize + sx * ((j + 1) as usize + sy * (k + 1) as usize)
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize, k: isize) -> T {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, k: isize, value: T) {
        let idx = self.idx(i, j, k);
        self.data[idx] = value;
    }

    #[inline]
    pub fn add(&mut self, i: isize, j: isize, k: isize, value: T) {
        let idx = self.idx(i, j, k);
        self.data[idx].acc(value);
    }

    /// Raw ghosted storage, x fastest, for serialization.
    pub fn raw(&self) -> &[T] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// Visit every physical node.
    pub fn for_each<F: FnMut(usize, usize, usize)>(&self, mut f: F) {
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    f(i, j, k);
                }
            }
        }
    }

    /// Fill ghost planes according to the per-axis rules. Axes are processed
    /// in order with the transverse ghost range included, so edges and
    /// corners end up consistent.
    pub fn sync_ghosts(&mut self, rules: [GhostRule; 3]) {
        for axis in 0..3 {
            let n = self.dims[axis] as isize;
            let (lo_src, hi_src) = match rules[axis] {
                GhostRule::Periodic => (n - 2, 1),
                GhostRule::Mirror => (1, n - 2),
                GhostRule::Keep => continue,
            };
            let (na, nb) = match axis {
                0 => (self.dims[1], self.dims[2]),
                1 => (self.dims[0], self.dims[2]),
                _ => (self.dims[0], self.dims[1]),
            };
            for b in -1..=(nb as isize) {
                for a in -1..=(na as isize) {
                    let (set_lo, get_lo, set_hi, get_hi) = match axis {
                        0 => ((-1, a, b), (lo_src, a, b), (n, a, b), (hi_src, a, b)),
                        1 => ((a, -1, b), (a, lo_src, b), (a, n, b), (a, hi_src, b)),
                        _ => ((a, b, -1), (a, b, lo_src), (a, b, n), (a, b, hi_src)),
                    };
                    let v = self.get(get_lo.0, get_lo.1, get_lo.2);
                    self.set(set_lo.0, set_lo.1, set_lo.2, v);
                    let v = self.get(get_hi.0, get_hi.1, get_hi.2);
                    self.set(set_hi.0, set_hi.1, set_hi.2, v);
                }
            }
        }
    }

    /// Fold deposited values across periodic seams: the planes at index 0 and
    /// n-1 both receive their combined total, making them bitwise equal.
    pub fn fold_periodic_seams(&mut self, periodic: [bool; 3]) {
        for axis in 0..3 {
            if !periodic[axis] {
                continue;
            }
            let n = self.dims[axis] as isize;
            let (na, nb) = match axis {
                0 => (self.dims[1], self.dims[2]),
                1 => (self.dims[0], self.dims[2]),
                _ => (self.dims[0], self.dims[1]),
            };
            for b in 0..nb as isize {
                for a in 0..na as isize {
                    let (lo, hi) = match axis {
                        0 => ((0, a, b), (n - 1, a, b)),
                        1 => ((a, 0, b), (a, n - 1, b)),
                        _ => ((a, b, 0), (a, b, n - 1)),
                    };
                    let mut v = self.get(lo.0, lo.1, lo.2);
                    v.acc(self.get(hi.0, hi.1, hi.2));
                    self.set(lo.0, lo.1, lo.2, v);
                    self.set(hi.0, hi.1, hi.2, v);
                }
            }
        }
    }

    /// Copy the plane at index 0 onto the aliasing plane at n-1 for each
    /// periodic axis, making analytically initialized data seam-exact.
    pub fn enforce_periodic_seams(&mut self, periodic: [bool; 3]) {
        for axis in 0..3 {
            if !periodic[axis] {
                continue;
            }
            let n = self.dims[axis] as isize;
            let (na, nb) = match axis {
                0 => (self.dims[1], self.dims[2]),
                1 => (self.dims[0], self.dims[2]),
                _ => (self.dims[0], self.dims[1]),
            };
            for b in 0..nb as isize {
                for a in 0..na as isize {
                    let (lo, hi) = match axis {
                        0 => ((0, a, b), (n - 1, a, b)),
                        1 => ((a, 0, b), (a, n - 1, b)),
                        _ => ((a, b, 0), (a, b, n - 1)),
                    };
                    let v = self.get(lo.0, lo.1, lo.2);
                    self.set(hi.0, hi.1, hi.2, v);
                }
            }
        }
    }
}

impl Field<[f64; 3]> {
    /// Seven-point Laplacian per component at every physical node.
    pub fn laplacian(&self, h: Vec3) -> Field<[f64; 3]> {
        let mut out = Field::zeros(self.dims);
        let inv_h2 = [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]), 1.0 / (h[2] * h[2])];
        self.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let c = self.get(i, j, k);
            let mut lap = [0.0; 3];
            let neighbors = [
                (self.get(i - 1, j, k), self.get(i + 1, j, k), inv_h2[0]),
                (self.get(i, j - 1, k), self.get(i, j + 1, k), inv_h2[1]),
                (self.get(i, j, k - 1), self.get(i, j, k + 1), inv_h2[2]),
            ];
            for (lo, hi, w) in neighbors {
                for d in 0..3 {
                    lap[d] += (lo[d] - 2.0 * c[d] + hi[d]) * w;
                }
            }
            out.set(i, j, k, lap);
        });
        out
    }

    /// Central-difference divergence at every physical node.
    pub fn divergence(&self, h: Vec3) -> Field<f64> {
        let mut out = Field::zeros(self.dims);
        self.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let dx = (self.get(i + 1, j, k)[0] - self.get(i - 1, j, k)[0]) / (2.0 * h[0]);
            let dy = (self.get(i, j + 1, k)[1] - self.get(i, j - 1, k)[1]) / (2.0 * h[1]);
            let dz = (self.get(i, j, k + 1)[2] - self.get(i, j, k - 1)[2]) / (2.0 * h[2]);
            out.set(i, j, k, dx + dy + dz);
        });
        out
    }

    /// Central-difference curl at every physical node.
    pub fn curl(&self, h: Vec3) -> Field<[f64; 3]> {
        let mut out = Field::zeros(self.dims);
        self.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let ddx = |d: usize| (self.get(i + 1, j, k)[d] - self.get(i - 1, j, k)[d]) / (2.0 * h[0]);
            let ddy = |d: usize| (self.get(i, j + 1, k)[d] - self.get(i, j - 1, k)[d]) / (2.0 * h[1]);
            let ddz = |d: usize| (self.get(i, j, k + 1)[d] - self.get(i, j, k - 1)[d]) / (2.0 * h[2]);
            out.set(i, j, k, [ddy(2) - ddz(1), ddz(0) - ddx(2), ddx(1) - ddy(0)]);
        });
        out
    }
}

impl Field<f64> {
    /// Central-difference gradient at every physical node.
    pub fn gradient(&self, h: Vec3) -> Field<[f64; 3]> {
        let mut out = Field::zeros(self.dims);
        self.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            out.set(
                i,
                j,
                k,
                [
                    (self.get(i + 1, j, k) - self.get(i - 1, j, k)) / (2.0 * h[0]),
                    (self.get(i, j + 1, k) - self.get(i, j - 1, k)) / (2.0 * h[1]),
                    (self.get(i, j, k + 1) - self.get(i, j, k - 1)) / (2.0 * h[2]),
                ],
            );
        });
        out
    }
}

impl Field<Sym3> {
    /// Central-difference tensor divergence, (div T)_i = sum_j d_j T_ij.
    pub fn divergence(&self, h: Vec3) -> Field<[f64; 3]> {
        let mut out = Field::zeros(self.dims);
        self.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let dx = |f: fn(&Sym3) -> f64| {
                (f(&self.get(i + 1, j, k)) - f(&self.get(i - 1, j, k))) / (2.0 * h[0])
            };
            let dy = |f: fn(&Sym3) -> f64| {
                (f(&self.get(i, j + 1, k)) - f(&self.get(i, j - 1, k))) / (2.0 * h[1])
            };
            let dz = |f: fn(&Sym3) -> f64| {
                (f(&self.get(i, j, k + 1)) - f(&self.get(i, j, k - 1))) / (2.0 * h[2])
            };
            out.set(
                i,
                j,
                k,
                [
                    dx(|t| t.xx) + dy(|t| t.xy) + dz(|t| t.xz),
                    dx(|t| t.xy) + dy(|t| t.yy) + dz(|t| t.yz),
                    dx(|t| t.xz) + dy(|t| t.yz) + dz(|t| t.zz),
                ],
            );
        });
        out
    }
}

/// Electric and magnetic fields on the mesh plus the mesh geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub dims: [usize; 3],
    pub lengths: Vec3,
    pub spacing: Vec3,
    pub boundary_mode: BoundaryMode,
    pub e: Field<[f64; 3]>,
    pub b: Field<[f64; 3]>,
}

impl FieldGrid {
    pub fn new(dims: [usize; 3], lengths: Vec3, boundary_mode: BoundaryMode) -> FieldGrid {
        let spacing = [
            lengths[0] / (dims[0] - 1) as f64,
            lengths[1] / (dims[1] - 1) as f64,
            lengths[2] / (dims[2] - 1) as f64,
        ];
        FieldGrid {
            dims,
            lengths,
            spacing,
            boundary_mode,
            e: Field::zeros(dims),
            b: Field::zeros(dims),
        }
    }

    pub fn periodic_axes(&self) -> [bool; 3] {
        match self.boundary_mode {
            BoundaryMode::Periodic => [true; 3],
            BoundaryMode::OpenInflow => [false; 3],
        }
    }

    pub fn e_rules(&self) -> [GhostRule; 3] {
        match self.boundary_mode {
            BoundaryMode::Periodic => [GhostRule::Periodic; 3],
            BoundaryMode::OpenInflow => [GhostRule::Mirror; 3],
        }
    }

    /// B ghosts in open mode hold the externally imposed field set at
    /// initialization and are never rewritten.
    pub fn b_rules(&self) -> [GhostRule; 3] {
        match self.boundary_mode {
            BoundaryMode::Periodic => [GhostRule::Periodic; 3],
            BoundaryMode::OpenInflow => [GhostRule::Keep; 3],
        }
    }

    /// Ghost rule for gathered moments and derived scalar fields.
    pub fn moment_rules(&self) -> [GhostRule; 3] {
        match self.boundary_mode {
            BoundaryMode::Periodic => [GhostRule::Periodic; 3],
            BoundaryMode::OpenInflow => [GhostRule::Mirror; 3],
        }
    }

    pub fn sync_e(&mut self) {
        let rules = self.e_rules();
        self.e.sync_ghosts(rules);
    }

    pub fn sync_b(&mut self) {
        let rules = self.b_rules();
        self.b.sync_ghosts(rules);
    }

    pub fn node_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Distinct node count per axis: periodic seam planes count once.
    pub fn distinct_dims(&self) -> [usize; 3] {
        let p = self.periodic_axes();
        [
            self.dims[0] - usize::from(p[0]),
            self.dims[1] - usize::from(p[1]),
            self.dims[2] - usize::from(p[2]),
        ]
    }

    /// Locate a position for field sampling. The valid range is the domain
    /// extended by one ghost cell per face. Returns the base node (may be -1)
    /// and the per-axis fraction within the cell.
    pub fn locate_sample(&self, position: Vec3) -> Result<([isize; 3], Vec3)> {
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = position[a] / self.spacing[a];
            let max = (self.dims[a] - 1) as f64;
            if !u.is_finite() || u < -1.0 || u > max + 1.0 {
                return Err(Error::OutOfDomain(position[0], position[1], position[2]));
            }
            let mut i0 = u.floor() as isize;
            // Keep the upper stencil node within the ghost band.
            i0 = i0.clamp(-1, self.dims[a] as isize - 1);
            base[a] = i0;
            frac[a] = u - i0 as f64;
        }
        Ok((base, frac))
    }

    /// Locate a position strictly inside the domain for deposition: the base
    /// node is a physical cell origin, 0 <= base <= n-2.
    pub fn locate_interior(&self, position: Vec3) -> Result<([usize; 3], Vec3)> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = position[a] / self.spacing[a];
            let max = (self.dims[a] - 1) as f64;
            if !u.is_finite() || u < 0.0 || u >= max {
                return Err(Error::OutOfDomain(position[0], position[1], position[2]));
            }
            let i0 = (u.floor() as usize).min(self.dims[a] - 2);
            base[a] = i0;
            frac[a] = u - i0 as f64;
        }
        Ok((base, frac))
    }
}
