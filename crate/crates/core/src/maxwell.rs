//! Implicit electric-field solve and magnetic-field advance.
//!
//! The field update solves
//!   (I + chi) E' - (c dt)^2 (lap E' + grad div(chi E')) = rhs
//! with a matrix-free restarted flexible GMRes whose preconditioner is a
//! fixed small number of plain GMRes sweeps on the same operator. All
//! differential operators are second-order central differences on nodes.

use crate::grid::{Field, FieldGrid};
use crate::linalg::{mat_vec, Vec3};
use crate::moments::{HatMoments, SusceptibilityField, FOUR_PI};

/// Flattened per-node E triples: the Krylov unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector(pub Vec<f64>);

impl FieldVector {
    pub fn zeros(grid: &FieldGrid) -> FieldVector {
        FieldVector(vec![0.0; 3 * grid.dims[0] * grid.dims[1] * grid.dims[2]])
    }

    /// Flatten the physical nodes of a vector field, x fastest, components
    /// contiguous per node.
    pub fn from_field(grid: &FieldGrid, f: &Field<Vec3>) -> FieldVector {
        let mut out = Vec::with_capacity(3 * grid.dims[0] * grid.dims[1] * grid.dims[2]);
        for k in 0..grid.dims[2] as isize {
            for j in 0..grid.dims[1] as isize {
                for i in 0..grid.dims[0] as isize {
                    out.extend_from_slice(&f.get(i, j, k));
                }
            }
        }
        FieldVector(out)
    }

    /// Expand into a ghosted field (ghosts unsynced).
    pub fn to_field(&self, grid: &FieldGrid) -> Field<Vec3> {
        let mut f = Field::zeros(grid.dims);
        let mut n = 0;
        for k in 0..grid.dims[2] as isize {
            for j in 0..grid.dims[1] as isize {
                for i in 0..grid.dims[0] as isize {
                    f.set(i, j, k, [self.0[n], self.0[n + 1], self.0[n + 2]]);
                    n += 3;
                }
            }
        }
        f
    }
}

/// Solve statistics for one field solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub restarts: usize,
}

/// Apply the implicit Maxwell operator to a candidate field.
pub fn apply_maxwell_operator(
    e_candidate: &FieldVector,
    chi: &SusceptibilityField,
    dt: f64,
    c: f64,
    grid: &FieldGrid,
) -> FieldVector {
    let h = grid.spacing;
    let cdt2 = (c * dt) * (c * dt);
    let mut e = e_candidate.to_field(grid);
    e.sync_ghosts(grid.e_rules());

    // chi . E everywhere including ghosts (both operands are ghost-synced)
    let mut g: Field<Vec3> = Field::zeros(grid.dims);
    for (dst, (ev, cv)) in g
        .raw_mut()
        .iter_mut()
        .zip(e.raw().iter().zip(chi.chi.raw()))
    {
        *dst = mat_vec(cv, *ev);
    }

    let lap = e.laplacian(h);
    let mut div_g = g.divergence(h);
    div_g.sync_ghosts(grid.moment_rules());
    let grad_div = div_g.gradient(h);

    let mut out = Field::zeros(grid.dims);
    for k in 0..grid.dims[2] as isize {
        for j in 0..grid.dims[1] as isize {
            for i in 0..grid.dims[0] as isize {
                let ev = e.get(i, j, k);
                let gv = g.get(i, j, k);
                let lv = lap.get(i, j, k);
                let gd = grad_div.get(i, j, k);
                out.set(
                    i,
                    j,
                    k,
                    [
                        ev[0] + gv[0] - cdt2 * (lv[0] + gd[0]),
                        ev[1] + gv[1] - cdt2 * (lv[1] + gd[1]),
                        ev[2] + gv[2] - cdt2 * (lv[2] + gd[2]),
                    ],
                );
            }
        }
    }
    FieldVector::from_field(grid, &out)
}

/// Assemble the right-hand side
/// E + c dt (curl B - 4 pi / c J-hat) - (c dt)^2 grad(4 pi rho-hat).
///
/// E and B ghosts must be in sync.
pub fn build_rhs(grid: &FieldGrid, hat: &HatMoments, dt: f64, c: f64) -> FieldVector {
    let h = grid.spacing;
    let cdt = c * dt;
    let curl_b = grid.b.curl(h);
    let grad_rho = hat.rho_hat.gradient(h);
    let mut out = Field::zeros(grid.dims);
    for k in 0..grid.dims[2] as isize {
        for j in 0..grid.dims[1] as isize {
            for i in 0..grid.dims[0] as isize {
                let ev = grid.e.get(i, j, k);
                let cb = curl_b.get(i, j, k);
                let jh = hat.j_hat.get(i, j, k);
                let gr = grad_rho.get(i, j, k);
                let mut v = [0.0; 3];
                for d in 0..3 {
                    v[d] = ev[d] + cdt * (cb[d] - FOUR_PI / c * jh[d]) - cdt * cdt * FOUR_PI * gr[d];
                }
                out.set(i, j, k, v);
            }
        }
    }
    FieldVector::from_field(grid, &out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One plain GMRes cycle of fixed length from a zero initial guess; returns
/// the least-squares minimizer of ||b - A z|| over the Krylov space.
fn gmres_fixed_steps<F: Fn(&[f64]) -> Vec<f64>>(apply: &F, b: &[f64], steps: usize) -> Vec<f64> {
    let n = b.len();
    let beta = norm2(b);
    if beta == 0.0 || steps == 0 {
        return vec![0.0; n];
    }
    let m = steps;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(b.iter().map(|x| x / beta).collect());
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    g[0] = beta;
    let mut used = 0;
    for j in 0..m {
        let mut w = apply(&basis[j]);
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            hess[i][j] = hij;
            axpy(&mut w, -hij, v);
        }
        let hnext = norm2(&w);
        hess[j + 1][j] = hnext;
        used = j + 1;
        let happy = hnext <= 1e-14 * beta;
        if !happy {
            basis.push(w.iter().map(|x| x / hnext).collect());
        }
        for i in 0..j {
            let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
            hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
            hess[i][j] = t;
        }
        let denom = (hess[j][j] * hess[j][j] + hess[j + 1][j] * hess[j + 1][j]).sqrt();
        if denom == 0.0 {
            cs[j] = 1.0;
            sn[j] = 0.0;
        } else {
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
        }
        hess[j][j] = cs[j] * hess[j][j] + sn[j] * hess[j + 1][j];
        hess[j + 1][j] = 0.0;
        g[j + 1] = -sn[j] * g[j];
        g[j] *= cs[j];
        if happy {
            break;
        }
    }
    // back substitution
    let mut y = vec![0.0; used];
    for i in (0..used).rev() {
        let mut sum = g[i];
        for l in (i + 1)..used {
            sum -= hess[i][l] * y[l];
        }
        y[i] = if hess[i][i] != 0.0 { sum / hess[i][i] } else { 0.0 };
    }
    let mut z = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        axpy(&mut z, *yi, v);
    }
    z
}

/// Restarted flexible GMRes with an inner-GMRes variable preconditioner.
pub fn fgmres<F: Fn(&[f64]) -> Vec<f64>>(
    apply: &F,
    b: &[f64],
    tolerance: f64,
    restart: usize,
    max_iterations: usize,
    inner_iterations: usize,
) -> (Vec<f64>, KrylovReport) {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (
            vec![0.0; n],
            KrylovReport {
                iterations: 0,
                final_residual: 0.0,
                converged: true,
                restarts: 0,
            },
        );
    }
    let mut x = vec![0.0; n];
    let mut total_iters = 0;
    let mut restarts = 0;
    let mut converged = false;

    'outer: loop {
        let ax = apply(&x);
        let mut r: Vec<f64> = b.to_vec();
        axpy(&mut r, -1.0, &ax);
        let beta = norm2(&r);
        if beta / bnorm <= tolerance {
            converged = true;
            break;
        }
        if total_iters >= max_iterations {
            break;
        }

        let m = restart.min(max_iterations - total_iters);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z_basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;

        for j in 0..m {
            // variable preconditioner: a few plain GMRes sweeps on A z = v_j
            let z = gmres_fixed_steps(apply, &basis[j], inner_iterations);
            let mut w = apply(&z);
            z_basis.push(z);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                hess[i][j] = hij;
                axpy(&mut w, -hij, v);
            }
            let hnext = norm2(&w);
            hess[j + 1][j] = hnext;
            used = j + 1;
            let happy = hnext <= 1e-14 * bnorm;
            if !happy {
                basis.push(w.iter().map(|v| v / hnext).collect());
            }
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = (hess[j][j] * hess[j][j] + hess[j + 1][j] * hess[j + 1][j]).sqrt();
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hess[j][j] / denom;
                sn[j] = hess[j + 1][j] / denom;
            }
            hess[j][j] = cs[j] * hess[j][j] + sn[j] * hess[j + 1][j];
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            total_iters += 1;
            let rel = g[j + 1].abs() / bnorm;
            if rel <= tolerance || happy || total_iters >= max_iterations {
                if rel <= tolerance || happy {
                    converged = true;
                }
                // update solution and leave via the outer residual check
                let mut y = vec![0.0; used];
                for i in (0..used).rev() {
                    let mut sum = g[i];
                    for l in (i + 1)..used {
                        sum -= hess[i][l] * y[l];
                    }
                    y[i] = if hess[i][i] != 0.0 { sum / hess[i][i] } else { 0.0 };
                }
                for (yi, z) in y.iter().zip(&z_basis) {
                    axpy(&mut x, *yi, z);
                }
                if converged || total_iters >= max_iterations {
                    break 'outer;
                }
                restarts += 1;
                continue 'outer;
            }
        }
        // cycle exhausted: update solution and restart
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut sum = g[i];
            for l in (i + 1)..used {
                sum -= hess[i][l] * y[l];
            }
            y[i] = if hess[i][i] != 0.0 { sum / hess[i][i] } else { 0.0 };
        }
        for (yi, z) in y.iter().zip(&z_basis) {
            axpy(&mut x, *yi, z);
        }
        restarts += 1;
    }

    let ax = apply(&x);
    let mut r: Vec<f64> = b.to_vec();
    axpy(&mut r, -1.0, &ax);
    let final_residual = norm2(&r) / bnorm;
    let converged = converged && final_residual <= tolerance * 10.0 || final_residual <= tolerance;
    (
        x,
        KrylovReport {
            iterations: total_iters,
            final_residual,
            converged,
            restarts,
        },
    )
}

/// Solve the implicit field equation for E at the new time level.
pub fn solve_fields(
    grid: &FieldGrid,
    chi: &SusceptibilityField,
    rhs: &FieldVector,
    dt: f64,
    c: f64,
    params: &crate::config::SolverParams,
) -> (FieldVector, KrylovReport) {
    let apply = |v: &[f64]| -> Vec<f64> {
        apply_maxwell_operator(&FieldVector(v.to_vec()), chi, dt, c, grid).0
    };
    let (x, report) = fgmres(
        &apply,
        &rhs.0,
        params.tolerance,
        params.restart,
        params.max_iterations,
        params.inner_iterations,
    );
    (FieldVector(x), report)
}

/// Advance the magnetic field: B' = B - c dt curl E. E ghosts must be synced.
pub fn advance_b(
    b: &Field<Vec3>,
    e: &Field<Vec3>,
    spacing: Vec3,
    dt: f64,
    c: f64,
) -> Field<Vec3> {
    let curl_e = e.curl(spacing);
    let mut out = b.clone();
    let dims = b.dims();
    for k in 0..dims[2] as isize {
        for j in 0..dims[1] as isize {
            for i in 0..dims[0] as isize {
                let bv = b.get(i, j, k);
                let ce = curl_e.get(i, j, k);
                out.set(
                    i,
                    j,
                    k,
                    [
                        bv[0] - c * dt * ce[0],
                        bv[1] - c * dt * ce[1],
                        bv[2] - c * dt * ce[2],
                    ],
                );
            }
        }
    }
    out
}

/// Relative charge-field consistency norm ||div E - 4 pi rho|| / ||4 pi rho||
/// over interior nodes. Ghosts of E must be in sync with the caller's intent.
pub fn gauss_residual(grid: &FieldGrid, rho_total: &Field<f64>) -> f64 {
    let div_e = grid.e.divergence(grid.spacing);
    let d = grid.distinct_dims();
    let open = grid.boundary_mode == crate::config::BoundaryMode::OpenInflow;
    let (lo, hi_off) = if open { (1, 1) } else { (0, 0) };
    let mut num = 0.0;
    let mut den = 0.0;
    for k in lo..(d[2] - hi_off) as isize {
        for j in lo..(d[1] - hi_off) as isize {
            for i in lo..(d[0] - hi_off) as isize {
                let source = FOUR_PI * rho_total.get(i, j, k);
                let r = div_e.get(i, j, k) - source;
                num += r * r;
                den += source * source;
            }
        }
    }
    num.sqrt() / den.sqrt().max(1e-30)
}
