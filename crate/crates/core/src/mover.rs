//! Relativistic implicit particle mover.
//!
//! The velocity average v-bar is found by fixed-point iteration: each iterate
//! samples the fields at the midpoint position, applies the half electric
//! kick to the proper velocity, and rotates about the local magnetic axis.
//! The rotation uses the Cayley form, so with E = 0 the proper-velocity
//! magnitude is preserved exactly and the per-step rotation angle is
//! 2 atan(|Omega| dt / (2 gamma)).

use crate::config::{BoundaryMode, MoverParams, SpeciesParams};
use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::linalg::{add, cross, dot, norm, scale, sub, Vec3};
use crate::particle::Particle;
use crate::rng::Rng;

/// Fields interpolated at a particle position.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub e: Vec3,
    pub b: Vec3,
}

/// Last-iterate internals of one particle push.
#[derive(Debug, Clone, Copy)]
pub struct MoverScratch {
    pub v_tilde: Vec3,
    pub v_bar: Vec3,
    pub gamma_n: f64,
    pub gamma_np1: f64,
    pub gamma_tilde: f64,
    pub d: f64,
    pub omega: Vec3,
}

/// Outcome of applying the domain boundary to a pushed particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryVerdict {
    /// Inside the domain, unchanged.
    Kept,
    /// Periodic image brought back into the domain.
    Wrapped(Particle),
    /// Crossed an open face and was dropped.
    Removed,
    /// Replaced by a fresh particle (reserved for inflow policies that
    /// recycle instead of remove).
    Reinjected(Particle),
}

/// Trilinear sample of E and B at `position`.
///
/// Valid over the domain extended by one ghost cell per face; ghost planes
/// must be in sync with the boundary mode.
pub fn sample_fields_at(grid: &FieldGrid, position: Vec3) -> Result<FieldSample> {
    let (base, frac) = grid.locate_sample(position)?;
    let wx = [1.0 - frac[0], frac[0]];
    let wy = [1.0 - frac[1], frac[1]];
    let wz = [1.0 - frac[2], frac[2]];
    let mut e = [0.0; 3];
    let mut b = [0.0; 3];
    for dk in 0..2usize {
        for dj in 0..2usize {
            for di in 0..2usize {
                let w = wx[di] * wy[dj] * wz[dk];
                if w == 0.0 {
                    continue;
                }
                let (i, j, k) = (
                    base[0] + di as isize,
                    base[1] + dj as isize,
                    base[2] + dk as isize,
                );
                let ev = grid.e.get(i, j, k);
                let bv = grid.b.get(i, j, k);
                for d in 0..3 {
                    e[d] += w * ev[d];
                    b[d] += w * bv[d];
                }
            }
        }
    }
    Ok(FieldSample { e, b })
}

/// Clamp or wrap a midpoint position into the sampleable range.
fn sample_position(grid: &FieldGrid, mut pos: Vec3) -> Vec3 {
    match grid.boundary_mode {
        BoundaryMode::Periodic => {
            for a in 0..3 {
                pos[a] = wrap_coordinate(pos[a], grid.lengths[a]);
            }
        }
        BoundaryMode::OpenInflow => {
            for a in 0..3 {
                pos[a] = pos[a].clamp(0.0, grid.lengths[a]);
            }
        }
    }
    pos
}

/// Advance one particle by dt and return the updated particle plus the last
/// fixed-point iterate internals and the residual history.
pub fn push_particle_detailed(
    p: &Particle,
    grid: &FieldGrid,
    species: &SpeciesParams,
    dt: f64,
    params: &MoverParams,
    c: f64,
) -> Result<(Particle, MoverScratch, Vec<f64>)> {
    let qom = species.charge_over_mass;
    let gamma_n = p.gamma(c);
    let u_n = scale(p.velocity, gamma_n);

    let mut v_bar = p.velocity;
    let mut gamma_tilde = gamma_n;
    let mut scratch = MoverScratch {
        v_tilde: u_n,
        v_bar,
        gamma_n,
        gamma_np1: gamma_n,
        gamma_tilde,
        d: gamma_tilde,
        omega: [0.0; 3],
    };
    let mut residuals = Vec::new();

    for _ in 0..params.max_iterations {
        let midpoint = sample_position(grid, add(p.position, scale(v_bar, 0.5 * dt)));
        let sample = sample_fields_at(grid, midpoint)?;
        if !sample.e.iter().chain(sample.b.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("interpolated fields"));
        }

        let v_tilde = add(u_n, scale(sample.e, qom * 0.5 * dt));
        let omega = scale(sample.b, qom / c);
        let a = 0.5 * dt / gamma_tilde;
        let t2 = a * a * dot(omega, omega);
        let d = gamma_tilde * (1.0 + t2);
        let rotated = add(
            add(v_tilde, scale(cross(v_tilde, omega), a)),
            scale(omega, a * a * dot(v_tilde, omega)),
        );
        let v_bar_new = scale(rotated, 1.0 / d);

        // refresh gamma estimates from the implied end-of-step velocity
        let u_np1 = sub(scale(v_bar_new, gamma_n + scratch.gamma_np1), u_n);
        let gamma_np1 = (1.0 + dot(u_np1, u_np1) / (c * c)).sqrt();
        gamma_tilde = 0.5 * (gamma_n + gamma_np1);

        let residual = norm(sub(v_bar_new, v_bar));
        residuals.push(residual);
        v_bar = v_bar_new;
        scratch = MoverScratch {
            v_tilde,
            v_bar,
            gamma_n,
            gamma_np1,
            gamma_tilde,
            d,
            omega,
        };
        if residual < params.tolerance {
            break;
        }
    }

    // Scalar consistency pass: gamma at n+1 must match the reconstructed
    // velocity; converges immediately in the non-relativistic limit.
    let mut gamma_np1 = scratch.gamma_np1;
    let mut u_np1 = sub(scale(v_bar, gamma_n + gamma_np1), u_n);
    for _ in 0..16 {
        let next = (1.0 + dot(u_np1, u_np1) / (c * c)).sqrt();
        if (next - gamma_np1).abs() < 1e-15 * next {
            gamma_np1 = next;
            break;
        }
        gamma_np1 = next;
        u_np1 = sub(scale(v_bar, gamma_n + gamma_np1), u_n);
    }
    scratch.gamma_np1 = gamma_np1;
    scratch.gamma_tilde = 0.5 * (gamma_n + gamma_np1);

    let v_np1 = scale(u_np1, 1.0 / gamma_np1);
    let speed = norm(v_np1);
    if !speed.is_finite() {
        return Err(Error::NonFinite("updated velocity"));
    }
    if speed >= c {
        return Err(Error::Superluminal { v: speed, c });
    }

    let position = add(p.position, scale(v_bar, dt));
    Ok((
        Particle::new(position, v_np1, p.weight),
        scratch,
        residuals,
    ))
}

/// Advance one particle by dt. Pure given read-only grid access.
pub fn push_particle(
    p: &Particle,
    grid: &FieldGrid,
    species: &SpeciesParams,
    dt: f64,
    params: &MoverParams,
    c: f64,
) -> Result<Particle> {
    push_particle_detailed(p, grid, species, dt, params, c).map(|(p, _, _)| p)
}

/// Wrap a coordinate into [0, L). Idempotent for in-range values.
pub fn wrap_coordinate(x: f64, l: f64) -> f64 {
    let mut r = x - l * (x / l).floor();
    if r >= l {
        r -= l;
    }
    if r < 0.0 {
        r = 0.0;
    }
    r
}

/// Apply the domain boundary to a just-pushed particle.
///
/// Periodic coordinates wrap modulo the domain length. In open-inflow mode a
/// particle crossing any face is removed; the driver injects the inflow flux
/// separately each cycle.
pub fn apply_particle_bc(
    p: &Particle,
    domain_lengths: Vec3,
    mode: BoundaryMode,
    _rng: &mut Rng,
) -> BoundaryVerdict {
    match mode {
        BoundaryMode::Periodic => {
            let mut q = *p;
            let mut moved = false;
            for a in 0..3 {
                if q.position[a] < 0.0 || q.position[a] >= domain_lengths[a] {
                    q.position[a] = wrap_coordinate(q.position[a], domain_lengths[a]);
                    moved = true;
                }
            }
            if moved {
                BoundaryVerdict::Wrapped(q)
            } else {
                BoundaryVerdict::Kept
            }
        }
        BoundaryMode::OpenInflow => {
            for a in 0..3 {
                if p.position[a] < 0.0 || p.position[a] >= domain_lengths[a] {
                    return BoundaryVerdict::Removed;
                }
            }
            BoundaryVerdict::Kept
        }
    }
}
