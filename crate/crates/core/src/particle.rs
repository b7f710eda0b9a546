use crate::linalg::{dot, Vec3};

/// Computational macro-particle: position, velocity, statistical weight.
///
/// One unit of weight represents one physical particle carrying the species
/// unit charge and mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub weight: f64,
}

impl Particle {
    pub fn new(position: Vec3, velocity: Vec3, weight: f64) -> Particle {
        Particle {
            position,
            velocity,
            weight,
        }
    }

    /// Lorentz factor for the given speed of light.
    #[inline]
    pub fn gamma(&self, c: f64) -> f64 {
        let beta2 = dot(self.velocity, self.velocity) / (c * c);
        1.0 / (1.0 - beta2).sqrt()
    }

    /// Relativistic kinetic energy w m (gamma - 1) c^2.
    #[inline]
    pub fn kinetic_energy(&self, mass: f64, c: f64) -> f64 {
        self.weight * mass * (self.gamma(c) - 1.0) * c * c
    }

    /// Relativistic momentum w m gamma v.
    #[inline]
    pub fn momentum(&self, mass: f64, c: f64) -> Vec3 {
        let s = self.weight * mass * self.gamma(c);
        [
            s * self.velocity[0],
            s * self.velocity[1],
            s * self.velocity[2],
        ]
    }
}
