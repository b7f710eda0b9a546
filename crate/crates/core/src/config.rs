//! Run configuration: INI-style document parsing and validated settings.
//!
//! The document format is line-oriented: `[section]` headers, lowercase
//! `key = value` pairs, `#` starts a comment. Recognized sections are
//! `[grid]`, `[time]`, `[species.N]`, `[solver]`, `[mover]`, `[control]`,
//! `[compress]` and `[scenario]`.

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Periodic,
    OpenInflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesParams {
    /// q_s / m_s in code units; negative for electrons.
    pub charge_over_mass: f64,
    /// Per-axis thermal spread of the loading Maxwellian.
    pub thermal_velocity: Vec3,
    pub drift_velocity: Vec3,
    pub particles_per_cell: usize,
    /// Density relative to the reference background density.
    pub reference_density: f64,
}

impl SpeciesParams {
    /// Species unit charge: unit magnitude, signed like q/m.
    pub fn charge(&self) -> f64 {
        self.charge_over_mass.signum()
    }

    /// Species mass per unit weight, consistent with unit charge.
    pub fn mass(&self) -> f64 {
        1.0 / self.charge_over_mass.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// Inner GMRes sweeps used as the variable preconditioner.
    pub inner_iterations: usize,
    /// Abort the run on non-convergence instead of warning.
    pub strict: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: 1e-8,
            restart: 20,
            max_iterations: 200,
            inner_iterations: 5,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoverParams {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MoverParams {
    fn default() -> Self {
        MoverParams {
            tolerance: 1e-10,
            max_iterations: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionGranularity {
    WholeDomain,
    PerCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    pub enabled: bool,
    /// Relative band half-width around the target count.
    pub theta: f64,
    /// Target particle count per region; 0 means "use the initial census".
    pub target: usize,
    pub granularity: RegionGranularity,
    /// Velocity-space bins per axis used to pair merge candidates.
    pub velocity_bins: usize,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            enabled: false,
            theta: 0.05,
            target: 0,
            granularity: RegionGranularity::WholeDomain,
            velocity_bins: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressParams {
    /// Velocity-space bins per axis.
    pub bins: usize,
    /// Mixture components per fit.
    pub components: usize,
}

impl Default for CompressParams {
    fn default() -> Self {
        CompressParams {
            bins: 32,
            components: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Uniform {
        /// Optional uniform magnetic field.
        b_uniform: Vec3,
    },
    GemHarris {
        /// Asymptotic in-plane field magnitude.
        b0: f64,
        /// Current sheet half-thickness.
        lambda: f64,
        /// Background density as a fraction of the sheet peak density.
        background_fraction: f64,
        /// Flux perturbation amplitude in units of b0 * length unit.
        perturbation: f64,
    },
    Dipole {
        dipole_moment: Vec3,
        /// Dipole position; None centers it in the domain.
        dipole_center: Option<Vec3>,
        b_uniform: Vec3,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Nodes per axis (cells + 1).
    pub grid_dims: [usize; 3],
    /// Physical domain edge lengths.
    pub domain_lengths: Vec3,
    pub dt: f64,
    pub c: f64,
    pub n_cycles: usize,
    pub species_params: Vec<SpeciesParams>,
    pub boundary_mode: BoundaryMode,
    pub solver_params: SolverParams,
    pub mover_params: MoverParams,
    pub control_params: ControlParams,
    pub compress_params: CompressParams,
    pub scenario: Scenario,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn cell_size(&self) -> Vec3 {
        [
            self.domain_lengths[0] / (self.grid_dims[0] - 1) as f64,
            self.domain_lengths[1] / (self.grid_dims[1] - 1) as f64,
            self.domain_lengths[2] / (self.grid_dims[2] - 1) as f64,
        ]
    }

    pub fn cell_count(&self) -> usize {
        (self.grid_dims[0] - 1) * (self.grid_dims[1] - 1) * (self.grid_dims[2] - 1)
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: &str| Err(Error::ConfigInvalid(msg.to_string()));
        if !(self.dt > 0.0) {
            return err("dt must be positive");
        }
        if !(self.c > 0.0) {
            return err("c must be positive");
        }
        for (axis, &n) in self.grid_dims.iter().enumerate() {
            if n < 4 {
                return Err(Error::ConfigInvalid(format!(
                    "grid nodes must be >= 4 per axis (axis {axis} has {n})"
                )));
            }
        }
        for (axis, &l) in self.domain_lengths.iter().enumerate() {
            if !(l > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "domain lengths must be positive (axis {axis} has {l})"
                )));
            }
        }
        if !(self.control_params.theta > 0.0 && self.control_params.theta < 1.0) {
            return err("control theta must lie strictly between 0 and 1");
        }
        if self.control_params.velocity_bins == 0 {
            return err("control velocity_bins must be >= 1");
        }
        if self.species_params.is_empty() {
            return err("at least one species is required");
        }
        for (i, sp) in self.species_params.iter().enumerate() {
            if sp.particles_per_cell < 1 {
                return Err(Error::ConfigInvalid(format!(
                    "species {i}: particles_per_cell must be >= 1"
                )));
            }
            if sp.charge_over_mass == 0.0 || !sp.charge_over_mass.is_finite() {
                return Err(Error::ConfigInvalid(format!(
                    "species {i}: charge_over_mass must be finite and non-zero"
                )));
            }
            if crate::linalg::norm(sp.drift_velocity) >= self.c {
                return Err(Error::ConfigInvalid(format!(
                    "species {i}: |drift_velocity| must be below c"
                )));
            }
            if !(sp.reference_density > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "species {i}: reference_density must be positive"
                )));
            }
        }
        if self.compress_params.bins < 1 || self.compress_params.components < 1 {
            return err("compress bins and components must be >= 1");
        }
        if self.solver_params.restart == 0 {
            return err("solver restart must be >= 1");
        }
        if self.mover_params.max_iterations == 0 {
            return err("mover max_iterations must be >= 1");
        }
        Ok(())
    }
}

/// Default two-species (ion, electron) parameters used when the document
/// declares no `[species.N]` sections. Mass ratio 25, equal temperatures.
fn default_species() -> Vec<SpeciesParams> {
    vec![
        SpeciesParams {
            charge_over_mass: 1.0,
            thermal_velocity: [0.05; 3],
            drift_velocity: [0.0; 3],
            particles_per_cell: 8,
            reference_density: 1.0,
        },
        SpeciesParams {
            charge_over_mass: -25.0,
            thermal_velocity: [0.25; 3],
            drift_velocity: [0.0; 3],
            particles_per_cell: 8,
            reference_density: 1.0,
        },
    ]
}

struct RawEntry {
    value: String,
    line: usize,
    used: bool,
}

struct RawConfig {
    // section -> key -> entry
    sections: BTreeMap<String, BTreeMap<String, RawEntry>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut sections: BTreeMap<String, BTreeMap<String, RawEntry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::ConfigParse {
                    line: line_no,
                    message: "unterminated section header".to_string(),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        message: "empty section name".to_string(),
                    });
                }
                current = Some(name.to_string());
                sections.entry(name.to_string()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: "empty key".to_string(),
                });
            }
            if key.chars().any(|c| c.is_ascii_uppercase()) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("keys are lowercase snake_case, got '{key}'"),
                });
            }
            let section = current.clone().ok_or_else(|| Error::ConfigParse {
                line: line_no,
                message: format!("key '{key}' outside any section"),
            })?;
            let entries = sections.entry(section).or_default();
            if entries
                .insert(
                    key.to_string(),
                    RawEntry {
                        value: value.to_string(),
                        line: line_no,
                        used: false,
                    },
                )
                .is_some()
            {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(RawConfig { sections })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let entry = self.sections.get_mut(section)?.get_mut(key)?;
        entry.used = true;
        Some((entry.value.clone(), entry.line))
    }

    fn take_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::ConfigParse {
                line,
                message: format!("'{key}' expects a number, got '{v}'"),
            }),
        }
    }

    fn take_usize(&mut self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::ConfigParse {
                    line,
                    message: format!("'{key}' expects a non-negative integer, got '{v}'"),
                }),
        }
    }

    fn take_u64(&mut self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<u64>().map(Some).map_err(|_| Error::ConfigParse {
                line,
                message: format!("'{key}' expects an unsigned integer, got '{v}'"),
            }),
        }
    }

    fn take_bool(&mut self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(Error::ConfigParse {
                    line,
                    message: format!("'{key}' expects true/false, got '{v}'"),
                }),
            },
        }
    }

    fn take_vec3(&mut self, section: &str, key: &str) -> Result<Option<Vec3>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::ConfigParse {
                        line,
                        message: format!("'{key}' expects three comma-separated numbers"),
                    });
                }
                let mut out = [0.0; 3];
                for (slot, part) in out.iter_mut().zip(&parts) {
                    *slot = part.parse::<f64>().map_err(|_| Error::ConfigParse {
                        line,
                        message: format!("'{key}' component '{part}' is not a number"),
                    })?;
                }
                Ok(Some(out))
            }
        }
    }

    fn take_dims(&mut self, section: &str, key: &str) -> Result<Option<[usize; 3]>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::ConfigParse {
                        line,
                        message: format!("'{key}' expects three comma-separated integers"),
                    });
                }
                let mut out = [0usize; 3];
                for (slot, part) in out.iter_mut().zip(&parts) {
                    *slot = part.parse::<usize>().map_err(|_| Error::ConfigParse {
                        line,
                        message: format!("'{key}' component '{part}' is not an integer"),
                    })?;
                }
                Ok(Some(out))
            }
        }
    }

    fn check_unused(&self) -> Result<()> {
        for (section, entries) in &self.sections {
            for (key, entry) in entries {
                if !entry.used {
                    return Err(Error::ConfigParse {
                        line: entry.line,
                        message: format!("unknown key '{key}' in section [{section}]"),
                    });
                }
            }
        }
        Ok(())
    }

    fn species_indices(&self) -> Result<Vec<usize>> {
        let mut indices = Vec::new();
        for name in self.sections.keys() {
            if let Some(idx) = name.strip_prefix("species.") {
                let idx: usize = idx.parse().map_err(|_| {
                    Error::ConfigInvalid(format!("species section '[{name}]' has non-integer index"))
                })?;
                indices.push(idx);
            } else if !matches!(
                name.as_str(),
                "grid" | "time" | "solver" | "mover" | "control" | "compress" | "scenario"
            ) {
                return Err(Error::ConfigInvalid(format!("unknown section [{name}]")));
            }
        }
        indices.sort_unstable();
        for (expect, &got) in indices.iter().enumerate() {
            if expect != got {
                return Err(Error::ConfigInvalid(format!(
                    "species sections must be numbered contiguously from 0; missing species.{expect}"
                )));
            }
        }
        Ok(indices)
    }
}

/// Parse and validate a configuration document.
pub fn load_config(text: &str) -> Result<SimConfig> {
    let mut raw = RawConfig::parse(text)?;

    let grid_dims = raw.take_dims("grid", "nodes")?.unwrap_or([16, 16, 16]);
    let default_lengths = [
        (grid_dims[0].max(2) - 1) as f64,
        (grid_dims[1].max(2) - 1) as f64,
        (grid_dims[2].max(2) - 1) as f64,
    ];
    let domain_lengths = raw.take_vec3("grid", "lengths")?.unwrap_or(default_lengths);
    let boundary_mode = match raw.take("grid", "boundary") {
        None => BoundaryMode::Periodic,
        Some((v, line)) => match v.as_str() {
            "periodic" => BoundaryMode::Periodic,
            "open_inflow" => BoundaryMode::OpenInflow,
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("'boundary' expects periodic|open_inflow, got '{v}'"),
                })
            }
        },
    };

    let dt = raw.take_f64("time", "dt")?.unwrap_or(0.1);
    let c = raw.take_f64("time", "c")?.unwrap_or(1.0);
    let n_cycles = raw.take_usize("time", "cycles")?.unwrap_or(100);

    let mut species_params = Vec::new();
    for idx in raw.species_indices()? {
        let section = format!("species.{idx}");
        let charge_over_mass = raw.take_f64(&section, "charge_over_mass")?.unwrap_or(1.0);
        let thermal_velocity = raw
            .take_vec3(&section, "thermal_velocity")?
            .unwrap_or([0.05; 3]);
        let drift_velocity = raw.take_vec3(&section, "drift_velocity")?.unwrap_or([0.0; 3]);
        let particles_per_cell = raw.take_usize(&section, "particles_per_cell")?.unwrap_or(8);
        let reference_density = raw.take_f64(&section, "reference_density")?.unwrap_or(1.0);
        species_params.push(SpeciesParams {
            charge_over_mass,
            thermal_velocity,
            drift_velocity,
            particles_per_cell,
            reference_density,
        });
    }
    if species_params.is_empty() {
        species_params = default_species();
    }

    let mut solver_params = SolverParams::default();
    if let Some(v) = raw.take_f64("solver", "tolerance")? {
        solver_params.tolerance = v;
    }
    if let Some(v) = raw.take_usize("solver", "restart")? {
        solver_params.restart = v;
    }
    if let Some(v) = raw.take_usize("solver", "max_iterations")? {
        solver_params.max_iterations = v;
    }
    if let Some(v) = raw.take_usize("solver", "inner_iterations")? {
        solver_params.inner_iterations = v;
    }
    if let Some(v) = raw.take_bool("solver", "strict")? {
        solver_params.strict = v;
    }

    let mut mover_params = MoverParams::default();
    if let Some(v) = raw.take_f64("mover", "tolerance")? {
        mover_params.tolerance = v;
    }
    if let Some(v) = raw.take_usize("mover", "max_iterations")? {
        mover_params.max_iterations = v;
    }

    let mut control_params = ControlParams::default();
    if let Some(v) = raw.take_bool("control", "enabled")? {
        control_params.enabled = v;
    }
    if let Some(v) = raw.take_f64("control", "theta")? {
        control_params.theta = v;
    }
    if let Some(v) = raw.take_usize("control", "target")? {
        control_params.target = v;
    }
    if let Some(v) = raw.take_usize("control", "velocity_bins")? {
        control_params.velocity_bins = v;
    }
    if let Some((v, line)) = raw.take("control", "granularity") {
        control_params.granularity = match v.as_str() {
            "whole" => RegionGranularity::WholeDomain,
            "cell" => RegionGranularity::PerCell,
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("'granularity' expects whole|cell, got '{v}'"),
                })
            }
        };
    }

    let mut compress_params = CompressParams::default();
    if let Some(v) = raw.take_usize("compress", "bins")? {
        compress_params.bins = v;
    }
    if let Some(v) = raw.take_usize("compress", "components")? {
        compress_params.components = v;
    }

    let rng_seed = raw.take_u64("scenario", "seed")?.unwrap_or(0x5eed_2026);
    let kind = raw
        .take("scenario", "kind")
        .map(|(v, _)| v)
        .unwrap_or_else(|| "uniform".to_string());
    let scenario = match kind.as_str() {
        "uniform" => Scenario::Uniform {
            b_uniform: raw.take_vec3("scenario", "b_uniform")?.unwrap_or([0.0; 3]),
        },
        "gem_harris" => Scenario::GemHarris {
            b0: raw.take_f64("scenario", "b0")?.unwrap_or(0.1),
            lambda: raw.take_f64("scenario", "lambda")?.unwrap_or(0.5),
            background_fraction: raw
                .take_f64("scenario", "background_fraction")?
                .unwrap_or(0.2),
            perturbation: raw.take_f64("scenario", "perturbation")?.unwrap_or(0.1),
        },
        "dipole" => Scenario::Dipole {
            dipole_moment: raw
                .take_vec3("scenario", "dipole_moment")?
                .unwrap_or([0.0, 0.0, 1.0]),
            dipole_center: raw.take_vec3("scenario", "dipole_center")?,
            b_uniform: raw.take_vec3("scenario", "b_uniform")?.unwrap_or([0.0; 3]),
        },
        _ => {
            return Err(Error::ConfigInvalid(format!(
                "scenario kind '{kind}' is not one of uniform|gem_harris|dipole"
            )))
        }
    };

    raw.check_unused()?;

    let config = SimConfig {
        grid_dims,
        domain_lengths,
        dt,
        c,
        n_cycles,
        species_params,
        boundary_mode,
        solver_params,
        mover_params,
        control_params,
        compress_params,
        scenario,
        rng_seed,
    };
    config.validate()?;
    Ok(config)
}
