use crate::config::SimConfig;
use crate::grid::FieldGrid;
use crate::linalg::Vec3;
use crate::particle::Particle;
use crate::rng::Rng;

/// One diagnostics record per completed cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub cycle: u64,
    /// Electromagnetic energy, sum (E^2 + B^2)/8pi * V over distinct nodes.
    pub field_energy: f64,
    /// Per-species relativistic kinetic energy.
    pub kinetic_energy: Vec<f64>,
    /// Total relativistic momentum over all species.
    pub momentum: Vec3,
    pub particle_counts: Vec<usize>,
    pub gauss_residual: f64,
    pub krylov_iterations: usize,
    pub wall_time_s: f64,
}

/// Full simulation state advanced by the driver.
#[derive(Debug, Clone)]
pub struct SimState {
    pub config: SimConfig,
    pub cycle: u64,
    pub grid: FieldGrid,
    /// Particle storage, one sequence per configured species.
    pub species: Vec<Vec<Particle>>,
    pub rng: Rng,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Per-species particle-count targets used by the control pass
    /// (whole-domain numbers; per-cell targets divide by the cell count).
    pub control_targets: Vec<usize>,
}

impl SimState {
    pub fn particle_count(&self, species: usize) -> usize {
        self.species[species].len()
    }

    pub fn total_particles(&self) -> usize {
        self.species.iter().map(Vec::len).sum()
    }

    /// Capture the control targets from the current census.
    pub fn anchor_control_targets(&mut self) {
        self.control_targets = self.species.iter().map(Vec::len).collect();
        if self.config.control_params.target > 0 {
            for t in self.control_targets.iter_mut() {
                *t = self.config.control_params.target;
            }
        }
    }
}
