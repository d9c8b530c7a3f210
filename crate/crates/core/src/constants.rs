//! Physical constants (CODATA 2018 / IAU nominal values) shared by every module.
//!
//! All quantities are SI. Angles are radians everywhere inside the library;
//! degrees appear only at the CLI/CSV boundary.

use serde::{Deserialize, Serialize};

/// Elementary charge [C] (exact in SI since 2019).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Electron rest mass [kg].
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Vacuum permittivity [F/m].
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum [m/s] (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant [J/K] (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// IAU nominal solar radius [m].
pub const SUN_RADIUS: f64 = 6.957e8;
/// Astronomical unit [m] (IAU 2012 exact definition).
pub const ASTRONOMICAL_UNIT: f64 = 1.495_978_707e11;
/// Classical electron radius e^2/(4 pi eps0 m_e c^2) [m].
pub const CLASSICAL_ELECTRON_RADIUS: f64 = 2.817_940_326_204_928_4e-15;

/// Bundle of the constants above, exposed as a value so configurations and
/// diagnostics can carry the exact numbers they were produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub electron_charge: f64,
    pub electron_mass: f64,
    pub vacuum_permittivity: f64,
    pub speed_of_light: f64,
    pub boltzmann: f64,
    pub sun_radius: f64,
    pub classical_electron_radius: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            electron_charge: ELECTRON_CHARGE,
            electron_mass: ELECTRON_MASS,
            vacuum_permittivity: VACUUM_PERMITTIVITY,
            speed_of_light: SPEED_OF_LIGHT,
            boltzmann: BOLTZMANN,
            sun_radius: SUN_RADIUS,
            classical_electron_radius: CLASSICAL_ELECTRON_RADIUS,
        }
    }
}

impl PhysicalConstants {
    /// Classical electron radius recomputed from the other stored constants.
    pub fn derived_classical_electron_radius(&self) -> f64 {
        let e = self.electron_charge;
        let c = self.speed_of_light;
        e * e
            / (4.0
                * std::f64::consts::PI
                * self.vacuum_permittivity
                * self.electron_mass
                * c
                * c)
    }

    /// Internal-consistency check: every value strictly positive and the
    /// stored classical radius agrees with the derived one to 1e-12 relative.
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("electron_charge", self.electron_charge),
            ("electron_mass", self.electron_mass),
            ("vacuum_permittivity", self.vacuum_permittivity),
            ("speed_of_light", self.speed_of_light),
            ("boltzmann", self.boltzmann),
            ("sun_radius", self.sun_radius),
            ("classical_electron_radius", self.classical_electron_radius),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("constant {name} must be strictly positive, got {v}"));
            }
        }
        let derived = self.derived_classical_electron_radius();
        let rel = ((derived - self.classical_electron_radius) / derived).abs();
        if rel > 1e-12 {
            return Err(format!(
                "classical electron radius inconsistent: stored {} vs derived {} (rel {rel:e})",
                self.classical_electron_radius, derived
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq_rel(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn defaults_are_self_consistent() {
        PhysicalConstants::default()
            .validate()
            .expect("CODATA defaults must pass their own consistency check");
    }

    #[test]
    fn classical_radius_matches_derivation() {
        let c = PhysicalConstants::default();
        let derived = c.derived_classical_electron_radius();
        assert!(
            approx_eq_rel(derived, CLASSICAL_ELECTRON_RADIUS, 1e-13),
            "derived r_e = {derived:e}, stored {CLASSICAL_ELECTRON_RADIUS:e}"
        );
    }

    #[test]
    fn negative_constant_is_rejected() {
        let mut c = PhysicalConstants::default();
        c.boltzmann = -1.0;
        assert!(c.validate().is_err(), "negative Boltzmann constant must fail validation");
    }

    #[test]
    fn tampered_classical_radius_is_rejected() {
        let mut c = PhysicalConstants::default();
        c.classical_electron_radius *= 1.0 + 1e-9;
        assert!(c.validate().is_err(), "1e-9 relative drift must exceed the 1e-12 gate");
    }
}
