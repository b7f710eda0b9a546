//! Fluid moments gathered from particles and the derived implicit sources.
//!
//! Gathering deposits q w {1, v, v v} through the trilinear kernel and divides
//! by the node volume. The susceptibility and corrected sources feed the
//! implicit field equation; the rotation factor shared with the mover lives in
//! [`rotation_tensor`].

use crate::config::SpeciesParams;
use crate::error::{Error, Result};
use crate::grid::{Field, FieldGrid};
use crate::linalg::{
    cross_matrix, mat_add, mat_scale, mat_vec, outer, Mat3, Sym3, Vec3, IDENTITY3,
};
use crate::particle::Particle;

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Trilinear deposition stencil: the eight enclosing nodes and their weights.
#[derive(Debug, Clone, Copy)]
pub struct InterpolationStencil {
    pub nodes: [[usize; 3]; 8],
    pub weights: [f64; 8],
}

/// Build the trilinear stencil for a position strictly inside the domain.
pub fn deposit_stencil(grid: &FieldGrid, position: Vec3) -> Result<InterpolationStencil> {
    let (base, frac) = grid.locate_interior(position)?;
    let wx = [1.0 - frac[0], frac[0]];
    let wy = [1.0 - frac[1], frac[1]];
    let wz = [1.0 - frac[2], frac[2]];
    let mut nodes = [[0usize; 3]; 8];
    let mut weights = [0.0; 8];
    let mut n = 0;
    for (dk, wk) in wz.iter().enumerate() {
        for (dj, wj) in wy.iter().enumerate() {
            for (di, wi) in wx.iter().enumerate() {
                nodes[n] = [base[0] + di, base[1] + dj, base[2] + dk];
                weights[n] = wi * wj * wk;
                n += 1;
            }
        }
    }
    Ok(InterpolationStencil { nodes, weights })
}

/// Moments of a single species on the grid.
#[derive(Debug, Clone)]
pub struct SpeciesMoments {
    /// Charge density (carries the species charge sign).
    pub rho: Field<f64>,
    /// Current density.
    pub j: Field<Vec3>,
    /// Charge-weighted second moment (symmetric).
    pub pi: Field<Sym3>,
}

/// Gathered moments for all species plus species-summed totals.
#[derive(Debug, Clone)]
pub struct Moments {
    pub species: Vec<SpeciesMoments>,
    pub rho_total: Field<f64>,
    pub j_total: Field<Vec3>,
}

/// Gather rho, J, Pi for every species. Ghost/seam contributions are folded
/// per the grid's boundary mode and all outputs are ghost-synced.
pub fn gather_moments(
    grid: &FieldGrid,
    species: &[Vec<Particle>],
    params: &[SpeciesParams],
) -> Result<Moments> {
    assert_eq!(species.len(), params.len());
    let inv_volume = 1.0 / grid.node_volume();
    let periodic = grid.periodic_axes();
    let rules = grid.moment_rules();

    let mut per_species = Vec::with_capacity(species.len());
    for (particles, sp) in species.iter().zip(params) {
        let q = sp.charge();
        let mut rho: Field<f64> = Field::zeros(grid.dims);
        let mut j: Field<Vec3> = Field::zeros(grid.dims);
        let mut pi: Field<Sym3> = Field::zeros(grid.dims);
        for p in particles {
            let stencil = deposit_stencil(grid, p.position)?;
            let qw = q * p.weight * inv_volume;
            for (node, w) in stencil.nodes.iter().zip(stencil.weights) {
                let (i, jn, k) = (node[0] as isize, node[1] as isize, node[2] as isize);
                let s = qw * w;
                rho.add(i, jn, k, s);
                j.add(
                    i,
                    jn,
                    k,
                    [s * p.velocity[0], s * p.velocity[1], s * p.velocity[2]],
                );
                let mut t = Sym3::ZERO;
                t.add_scaled_outer(p.velocity, s);
                pi.add(i, jn, k, t);
            }
        }
        rho.fold_periodic_seams(periodic);
        j.fold_periodic_seams(periodic);
        pi.fold_periodic_seams(periodic);
        rho.sync_ghosts(rules);
        j.sync_ghosts(rules);
        pi.sync_ghosts(rules);
        per_species.push(SpeciesMoments { rho, j, pi });
    }

    let mut rho_total: Field<f64> = Field::zeros(grid.dims);
    let mut j_total: Field<Vec3> = Field::zeros(grid.dims);
    for sm in &per_species {
        for (dst, src) in rho_total.raw_mut().iter_mut().zip(sm.rho.raw()) {
            *dst += *src;
        }
        for (dst, src) in j_total.raw_mut().iter_mut().zip(sm.j.raw()) {
            for d in 0..3 {
                dst[d] += src[d];
            }
        }
    }

    Ok(Moments {
        species: per_species,
        rho_total,
        j_total,
    })
}

/// Total charge represented on the grid, summed over distinct nodes.
pub fn total_charge(grid: &FieldGrid, rho: &Field<f64>) -> f64 {
    let d = grid.distinct_dims();
    let v = grid.node_volume();
    let mut sum = 0.0;
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                sum += rho.get(i as isize, j as isize, k as isize) * v;
            }
        }
    }
    sum
}

/// Implicit magnetization rotation factor.
///
/// R(omega, dt) = [I - (dt/2) [omega]_x + (dt/2)^2 omega omega^T]
///                / (1 + (dt/2)^2 |omega|^2)
///
/// The scalar denominator keeps the grid response consistent with the D
/// factor of the velocity average in the mover; it multiplies both the
/// susceptibility and the corrected current.
pub fn rotation_tensor(omega: Vec3, dt: f64) -> Mat3 {
    let half = 0.5 * dt;
    let omega2 = omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2];
    let denom = 1.0 + half * half * omega2;
    let m = mat_add(
        &mat_add(&IDENTITY3, &mat_scale(&cross_matrix(omega), -half)),
        &mat_scale(&outer(omega, omega), half * half),
    );
    mat_scale(&m, 1.0 / denom)
}

/// Per-node implicit dielectric tensor, summed over species.
#[derive(Debug, Clone)]
pub struct SusceptibilityField {
    pub chi: Field<Mat3>,
}

/// Assemble chi = sum_s (omega_ps dt)^2 / 2 * R_s(Omega_s dt / 2) per node.
pub fn build_susceptibility(
    grid: &FieldGrid,
    moments: &Moments,
    b: &Field<Vec3>,
    dt: f64,
    c: f64,
    params: &[SpeciesParams],
) -> Result<SusceptibilityField> {
    let mut chi: Field<Mat3> = Field::zeros(grid.dims);
    let dims = grid.dims;
    for (sm, sp) in moments.species.iter().zip(params) {
        let qom = sp.charge_over_mass;
        for k in 0..dims[2] as isize {
            for j in 0..dims[1] as isize {
                for i in 0..dims[0] as isize {
                    // omega_ps^2 = 4 pi rho_s q_s / m_s; rho_s carries the
                    // charge sign, so the product is non-negative.
                    let wp2 = FOUR_PI * sm.rho.get(i, j, k) * qom;
                    if wp2 < -1e-9 {
                        return Err(Error::NonFinite("negative squared plasma frequency"));
                    }
                    let wp2 = wp2.max(0.0);
                    let bv = b.get(i, j, k);
                    let omega = [qom * bv[0] / c, qom * bv[1] / c, qom * bv[2] / c];
                    let r = rotation_tensor(omega, dt);
                    let contrib = mat_scale(&r, 0.5 * wp2 * dt * dt);
                    chi.add(i, j, k, contrib);
                }
            }
        }
    }
    chi.sync_ghosts(grid.moment_rules());
    Ok(SusceptibilityField { chi })
}

/// Corrected implicit sources rho-hat, J-hat.
#[derive(Debug, Clone)]
pub struct HatMoments {
    pub rho_hat: Field<f64>,
    pub j_hat: Field<Vec3>,
}

/// J-hat = sum_s R_s (J_s - dt/2 div Pi_s); rho-hat = rho - dt div J-hat.
pub fn build_hat_moments(
    grid: &FieldGrid,
    moments: &Moments,
    b: &Field<Vec3>,
    dt: f64,
    c: f64,
    params: &[SpeciesParams],
) -> HatMoments {
    let h = grid.spacing;
    let rules = grid.moment_rules();
    let mut j_hat: Field<Vec3> = Field::zeros(grid.dims);
    for (sm, sp) in moments.species.iter().zip(params) {
        let qom = sp.charge_over_mass;
        let div_pi = sm.pi.divergence(h);
        for k in 0..grid.dims[2] as isize {
            for j in 0..grid.dims[1] as isize {
                for i in 0..grid.dims[0] as isize {
                    let bv = b.get(i, j, k);
                    let omega = [qom * bv[0] / c, qom * bv[1] / c, qom * bv[2] / c];
                    let r = rotation_tensor(omega, dt);
                    let dp = div_pi.get(i, j, k);
                    let js = sm.j.get(i, j, k);
                    let arg = [
                        js[0] - 0.5 * dt * dp[0],
                        js[1] - 0.5 * dt * dp[1],
                        js[2] - 0.5 * dt * dp[2],
                    ];
                    j_hat.add(i, j, k, mat_vec(&r, arg));
                }
            }
        }
    }
    j_hat.sync_ghosts(rules);

    let div_j_hat = j_hat.divergence(h);
    let mut rho_hat: Field<f64> = Field::zeros(grid.dims);
    for k in 0..grid.dims[2] as isize {
        for j in 0..grid.dims[1] as isize {
            for i in 0..grid.dims[0] as isize {
                rho_hat.set(
                    i,
                    j,
                    k,
                    moments.rho_total.get(i, j, k) - dt * div_j_hat.get(i, j, k),
                );
            }
        }
    }
    rho_hat.sync_ghosts(rules);
    HatMoments { rho_hat, j_hat }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BoundaryMode;
    use crate::rng::Rng;

    fn test_grid(n: usize, mode: BoundaryMode) -> FieldGrid {
        let len = (n - 1) as f64;
        FieldGrid::new([n, n, n], [len, len, len], mode)
    }

    fn ion() -> SpeciesParams {
        SpeciesParams {
            charge_over_mass: 1.0,
            thermal_velocity: [0.1; 3],
            drift_velocity: [0.0; 3],
            particles_per_cell: 1,
            reference_density: 1.0,
        }
    }

    #[test]
    fn stencil_on_node_concentrates_weight() {
        let grid = test_grid(8, BoundaryMode::Periodic);
        let st = deposit_stencil(&grid, [3.0, 2.0, 5.0]).unwrap();
        let mut found = false;
        for (node, w) in st.nodes.iter().zip(st.weights) {
            if *node == [3, 2, 5] {
                assert!((w - 1.0).abs() < 1e-15);
                found = true;
            } else {
                assert!(w.abs() < 1e-15);
            }
        }
        assert!(found);
    }

    #[test]
    fn stencil_at_cell_center_is_uniform() {
        let grid = test_grid(8, BoundaryMode::Periodic);
        let st = deposit_stencil(&grid, [3.5, 2.5, 5.5]).unwrap();
        for w in st.weights {
            assert!((w - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn stencil_weights_sum_to_one_everywhere() {
        let grid = test_grid(9, BoundaryMode::Periodic);
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = [
                rng.uniform_in(0.0, 8.0),
                rng.uniform_in(0.0, 8.0),
                rng.uniform_in(0.0, 8.0),
            ];
            let st = deposit_stencil(&grid, p).unwrap();
            let total: f64 = st.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-15);
            for w in st.weights {
                assert!((0.0..=1.0).contains(&w));
            }
        }
    }

    #[test]
    fn single_particle_on_node_gives_point_density() {
        let grid = test_grid(8, BoundaryMode::Periodic);
        let particles = vec![vec![Particle::new([3.0, 3.0, 3.0], [0.0; 3], 1.0)]];
        let m = gather_moments(&grid, &particles, &[ion()]).unwrap();
        let v = grid.node_volume();
        assert!((m.species[0].rho.get(3, 3, 3) - 1.0 / v).abs() < 1e-14);
        let mut elsewhere = 0.0;
        m.rho_total.for_each(|i, j, k| {
            if (i, j, k) != (3, 3, 3) {
                elsewhere += m.rho_total.get(i as isize, j as isize, k as isize).abs();
            }
        });
        assert_eq!(elsewhere, 0.0);
    }

    #[test]
    fn current_and_pressure_follow_velocity_outer_product() {
        let grid = test_grid(8, BoundaryMode::Periodic);
        let particles = vec![vec![Particle::new([3.25, 3.5, 3.75], [1.0, 0.0, 0.0], 1.0)]];
        let m = gather_moments(&grid, &particles, &[ion()]).unwrap();
        let st = deposit_stencil(&grid, [3.25, 3.5, 3.75]).unwrap();
        for (node, w) in st.nodes.iter().zip(st.weights) {
            let (i, j, k) = (node[0] as isize, node[1] as isize, node[2] as isize);
            let rho = m.species[0].rho.get(i, j, k);
            assert!((rho - w / grid.node_volume()).abs() < 1e-14);
            let jv = m.species[0].j.get(i, j, k);
            assert!((jv[0] - rho).abs() < 1e-14);
            assert_eq!(jv[1], 0.0);
            assert_eq!(jv[2], 0.0);
            let pi = m.species[0].pi.get(i, j, k);
            assert!((pi.xx - rho).abs() < 1e-14);
            assert_eq!(pi.xy, 0.0);
            assert_eq!(pi.yz, 0.0);
        }
    }

    #[test]
    fn global_charge_matches_direct_sum() {
        let grid = test_grid(9, BoundaryMode::Periodic);
        let mut rng = Rng::seed_from_u64(5);
        let mut particles = Vec::new();
        let mut direct = 0.0;
        for _ in 0..100_000 {
            let w = rng.uniform_in(0.5, 1.5);
            direct += w;
            particles.push(Particle::new(
                [
                    rng.uniform_in(0.0, 8.0),
                    rng.uniform_in(0.0, 8.0),
                    rng.uniform_in(0.0, 8.0),
                ],
                [0.0; 3],
                w,
            ));
        }
        let m = gather_moments(&grid, &[particles], &[ion()]).unwrap();
        let grid_charge = total_charge(&grid, &m.rho_total);
        assert!(
            ((grid_charge - direct) / direct).abs() < 1e-12,
            "grid {grid_charge} direct {direct}"
        );
    }

    #[test]
    fn gather_scatter_adjointness() {
        // sum_p w phi(x_p) == sum_g phi_g rho_g V / q for common charge q
        let grid = test_grid(8, BoundaryMode::Periodic);
        let mut rng = Rng::seed_from_u64(17);
        let mut phi: Field<f64> = Field::zeros(grid.dims);
        for k in 0..8 {
            for j in 0..8 {
                for i in 0..8 {
                    phi.set(i, j, k, rng.uniform_in(-1.0, 1.0));
                }
            }
        }
        phi.enforce_periodic_seams([true; 3]);
        let mut particles = Vec::new();
        for _ in 0..5000 {
            particles.push(Particle::new(
                [
                    rng.uniform_in(0.0, 7.0),
                    rng.uniform_in(0.0, 7.0),
                    rng.uniform_in(0.0, 7.0),
                ],
                [0.0; 3],
                rng.uniform_in(0.1, 2.0),
            ));
        }
        let mut lhs = 0.0;
        for p in &particles {
            let st = deposit_stencil(&grid, p.position).unwrap();
            let mut sample = 0.0;
            for (node, w) in st.nodes.iter().zip(st.weights) {
                sample += w * phi.get(node[0] as isize, node[1] as isize, node[2] as isize);
            }
            lhs += p.weight * sample;
        }
        let m = gather_moments(&grid, &[particles], &[ion()]).unwrap();
        // Sum over distinct nodes only: the folded seam plane aliases node 0.
        let d = grid.distinct_dims();
        let mut rhs = 0.0;
        for k in 0..d[2] as isize {
            for j in 0..d[1] as isize {
                for i in 0..d[0] as isize {
                    rhs += phi.get(i, j, k) * m.rho_total.get(i, j, k) * grid.node_volume();
                }
            }
        }
        assert!(((lhs - rhs) / lhs).abs() < 1e-12, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn gather_is_order_insensitive_to_roundoff() {
        let grid = test_grid(8, BoundaryMode::Periodic);
        let mut rng = Rng::seed_from_u64(23);
        let mut particles = Vec::new();
        for _ in 0..10_000 {
            particles.push(Particle::new(
                [
                    rng.uniform_in(0.0, 7.0),
                    rng.uniform_in(0.0, 7.0),
                    rng.uniform_in(0.0, 7.0),
                ],
                [rng.normal(), rng.normal(), rng.normal()],
                rng.uniform_in(0.1, 2.0),
            ));
        }
        let mut reversed = particles.clone();
        reversed.reverse();
        let a = gather_moments(&grid, &[particles], &[ion()]).unwrap();
        let b = gather_moments(&grid, &[reversed], &[ion()]).unwrap();
        let mut max_rel: f64 = 0.0;
        a.rho_total.for_each(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let x = a.rho_total.get(i, j, k);
            let y = b.rho_total.get(i, j, k);
            if x != 0.0 {
                max_rel = max_rel.max(((x - y) / x).abs());
            }
        });
        assert!(max_rel < 1e-12, "max relative deviation {max_rel}");
    }

    #[test]
    fn susceptibility_without_field_is_isotropic() {
        let grid = test_grid(6, BoundaryMode::Periodic);
        let particles = vec![vec![Particle::new([2.0, 2.0, 2.0], [0.0; 3], 3.0)]];
        let m = gather_moments(&grid, &particles, &[ion()]).unwrap();
        let b: Field<Vec3> = Field::zeros(grid.dims);
        let dt = 0.5;
        let chi = build_susceptibility(&grid, &m, &b, dt, 1.0, &[ion()]).unwrap();
        let wp2 = FOUR_PI * m.species[0].rho.get(2, 2, 2) * 1.0;
        let expect = 0.5 * wp2 * dt * dt;
        let t = chi.chi.get(2, 2, 2);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect } else { 0.0 };
                assert!((t[i][j] - want).abs() < 1e-14);
            }
        }
        // no density -> no susceptibility
        let zero = chi.chi.get(4, 4, 4);
        assert_eq!(zero, [[0.0; 3]; 3]);
    }

    #[test]
    fn susceptibility_matches_dense_tensor_oracle() {
        let grid = test_grid(6, BoundaryMode::Periodic);
        let particles = vec![vec![Particle::new([2.1, 2.4, 2.7], [0.0; 3], 2.0)]];
        let sp = ion();
        let m = gather_moments(&grid, &particles, &[sp.clone()]).unwrap();
        let mut b: Field<Vec3> = Field::zeros(grid.dims);
        b.fill([0.0, 0.0, 0.8]);
        let dt = 0.3;
        let c = 2.0;
        let chi = build_susceptibility(&grid, &m, &b, dt, c, &[sp.clone()]).unwrap();
        // hand-assembled per-node tensor
        for node in [[2isize, 2, 2], [3, 2, 3]] {
            let rho = m.species[0].rho.get(node[0], node[1], node[2]);
            let wp2 = FOUR_PI * rho * sp.charge_over_mass;
            let omega = [0.0, 0.0, sp.charge_over_mass * 0.8 / c];
            let half = 0.5 * dt;
            let denom = 1.0 + half * half * (omega[2] * omega[2]);
            let got = chi.chi.get(node[0], node[1], node[2]);
            let s = 0.5 * wp2 * dt * dt / denom;
            let expect = [
                [s, s * half * omega[2], 0.0],
                [-s * half * omega[2], s, 0.0],
                [0.0, 0.0, s * (1.0 + half * half * omega[2] * omega[2])],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (got[i][j] - expect[i][j]).abs() < 1e-13,
                        "({i},{j}): {} vs {}",
                        got[i][j],
                        expect[i][j]
                    );
                }
            }
            // antisymmetric part is the rotation term
            let anti_01 = 0.5 * (got[0][1] - got[1][0]);
            assert!((anti_01 - s * half * omega[2]).abs() < 1e-13);
        }
    }

    #[test]
    fn susceptibility_symmetric_part_is_psd() {
        let mut rng = Rng::seed_from_u64(31);
        for _ in 0..200 {
            let omega = [rng.normal(), rng.normal(), rng.normal()];
            let dt = rng.uniform_in(0.01, 2.0 / crate::linalg::norm(omega).max(1e-6));
            let r = rotation_tensor(omega, dt);
            let mut sym = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    sym[i][j] = 0.5 * (r[i][j] + r[j][i]);
                }
            }
            let eig = crate::linalg::sym3_eigenvalues(&sym);
            assert!(eig[0] > -1e-12, "eigenvalue {:?}", eig);
        }
    }

    #[test]
    fn hat_moments_reduce_to_plain_moments_without_field_and_pressure() {
        let grid = test_grid(6, BoundaryMode::Periodic);
        let n = grid.dims;
        let mut m = Moments {
            species: vec![SpeciesMoments {
                rho: Field::zeros(n),
                j: Field::zeros(n),
                pi: Field::zeros(n),
            }],
            rho_total: Field::zeros(n),
            j_total: Field::zeros(n),
        };
        // uniform J and rho
        m.species[0].j.fill([0.3, -0.1, 0.2]);
        m.species[0].rho.fill(0.7);
        m.rho_total.fill(0.7);
        let b: Field<Vec3> = Field::zeros(n);
        let hat = build_hat_moments(&grid, &m, &b, 0.4, 1.0, &[ion()]);
        hat.j_hat.for_each(|i, j, k| {
            let v = hat.j_hat.get(i as isize, j as isize, k as isize);
            assert!((v[0] - 0.3).abs() < 1e-15);
            assert!((v[1] + 0.1).abs() < 1e-15);
            assert!((v[2] - 0.2).abs() < 1e-15);
        });
        // divergence of a constant is zero -> rho_hat = rho
        hat.rho_hat.for_each(|i, j, k| {
            let v = hat.rho_hat.get(i as isize, j as isize, k as isize);
            assert!((v - 0.7).abs() < 1e-15);
        });
    }

    #[test]
    fn hat_divergence_converges_at_second_order() {
        // J_x = sin(k x): rho_hat = rho - dt * k cos(k x) + O(h^2)
        let run = |nodes: usize| -> f64 {
            let grid = test_grid(nodes, BoundaryMode::Periodic);
            let n = grid.dims;
            let cells = (nodes - 1) as f64;
            let k_mode = std::f64::consts::TAU / cells;
            let mut m = Moments {
                species: vec![SpeciesMoments {
                    rho: Field::zeros(n),
                    j: Field::zeros(n),
                    pi: Field::zeros(n),
                }],
                rho_total: Field::zeros(n),
                j_total: Field::zeros(n),
            };
            for k in 0..nodes {
                for j in 0..nodes {
                    for i in 0..nodes {
                        let x = i as f64;
                        m.species[0].j.set(
                            i as isize,
                            j as isize,
                            k as isize,
                            [(k_mode * x).sin(), 0.0, 0.0],
                        );
                    }
                }
            }
            m.species[0].j.enforce_periodic_seams([true; 3]);
            m.species[0].j.sync_ghosts([crate::grid::GhostRule::Periodic; 3]);
            let b: Field<Vec3> = Field::zeros(n);
            let dt = 1.0;
            let hat = build_hat_moments(&grid, &m, &b, dt, 1.0, &[ion()]);
            let mut max_err: f64 = 0.0;
            for i in 0..nodes - 1 {
                let x = i as f64;
                let analytic = -dt * k_mode * (k_mode * x).cos();
                let got = hat.rho_hat.get(i as isize, 2, 2);
                max_err = max_err.max((got - analytic).abs());
            }
            max_err
        };
        let coarse = run(9);
        let fine = run(17);
        let order = (coarse / fine).log2();
        assert!(order > 1.8, "observed order {order} (coarse {coarse}, fine {fine})");
    }
}
