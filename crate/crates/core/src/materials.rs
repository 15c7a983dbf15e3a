//! Temperature-dependent material models.
//!
//! Every material resolves under both temperature classes. Conductivities and
//! permittivities of the built-in library are the measured values for the
//! 4 K cryo-CMOS stack and their room-temperature counterparts. Copper is a
//! normal conductor in both classes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{EPS0, MU0};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureClass {
    Room,
    Cryogenic,
}

impl TemperatureClass {
    pub const ALL: [TemperatureClass; 2] = [TemperatureClass::Room, TemperatureClass::Cryogenic];

    pub fn label(self) -> &'static str {
        match self {
            TemperatureClass::Room => "room",
            TemperatureClass::Cryogenic => "cryo",
        }
    }
}

impl fmt::Display for TemperatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TemperatureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "room" | "rt" | "300k" => Ok(TemperatureClass::Room),
            "cryo" | "cryogenic" | "4k" => Ok(TemperatureClass::Cryogenic),
            _ => Err(Error::UnknownName {
                kind: "temperature class",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialKind {
    Conductor,
    Dielectric,
    /// Perfect electric conductor. Flagged, never approximated by a large sigma.
    #[serde(rename = "PEC")]
    Pec,
    Vacuum,
}

/// A value that may differ between the two temperature classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByTemperature {
    pub room: f64,
    pub cryogenic: f64,
}

impl ByTemperature {
    pub const fn same(v: f64) -> Self {
        Self {
            room: v,
            cryogenic: v,
        }
    }

    pub const fn new(cryogenic: f64, room: f64) -> Self {
        Self { room, cryogenic }
    }

    pub fn at(&self, temp: TemperatureClass) -> f64 {
        match temp {
            TemperatureClass::Room => self.room,
            TemperatureClass::Cryogenic => self.cryogenic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub kind: MaterialKind,
    /// Conductivity in S/m.
    pub sigma: ByTemperature,
    pub eps_r: ByTemperature,
    #[serde(default = "unit")]
    pub mu_r: f64,
}

fn unit() -> f64 {
    1.0
}

impl Material {
    pub fn new(
        name: &str,
        kind: MaterialKind,
        sigma: ByTemperature,
        eps_r: ByTemperature,
    ) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            kind,
            sigma,
            eps_r,
            mu_r: 1.0,
        };
        m.check()?;
        Ok(m)
    }

    pub fn sigma(&self, temp: TemperatureClass) -> f64 {
        self.sigma.at(temp)
    }

    pub fn eps_r(&self, temp: TemperatureClass) -> f64 {
        self.eps_r.at(temp)
    }

    pub fn is_pec(&self) -> bool {
        self.kind == MaterialKind::Pec
    }

    /// Refractive index used for mesh sizing.
    pub fn index(&self, temp: TemperatureClass) -> f64 {
        (self.eps_r(temp) * self.mu_r).sqrt()
    }

    pub fn check(&self) -> Result<()> {
        for temp in TemperatureClass::ALL {
            let s = self.sigma(temp);
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Domain(format!(
                    "{}: conductivity must be finite and non-negative, got {s}",
                    self.name
                )));
            }
            let e = self.eps_r(temp);
            if !e.is_finite() || e < 1.0 {
                return Err(Error::Domain(format!(
                    "{}: relative permittivity must be >= 1, got {e}",
                    self.name
                )));
            }
        }
        if !self.mu_r.is_finite() || self.mu_r <= 0.0 {
            return Err(Error::Domain(format!(
                "{}: relative permeability must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

/// Named material collection. Built-ins can be overridden by scene files.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLibrary {
    materials: BTreeMap<String, Material>,
}

impl Default for MaterialLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl MaterialLibrary {
    pub fn builtin() -> Self {
        let mut materials = BTreeMap::new();
        for m in builtin_library() {
            materials.insert(m.name.clone(), m);
        }
        Self { materials }
    }

    pub fn lookup(&self, name: &str) -> Result<&Material> {
        self.materials
            .get(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.materials.contains_key(name)
    }

    /// Inserts or replaces a material after checking its invariants.
    pub fn insert(&mut self, material: Material) -> Result<()> {
        material.check()?;
        self.materials.insert(material.name.clone(), material);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.values()
    }
}

/// Cu, Si, SiO2, Vacuum and PEC with their room and cryogenic parameters.
pub fn builtin_library() -> Vec<Material> {
    vec![
        Material {
            name: "Cu".into(),
            kind: MaterialKind::Conductor,
            sigma: ByTemperature::new(2.9e8, 5.9e7),
            eps_r: ByTemperature::same(1.0),
            mu_r: 1.0,
        },
        Material {
            name: "Si".into(),
            kind: MaterialKind::Dielectric,
            sigma: ByTemperature::new(4.26e-7, 4.26e-4),
            eps_r: ByTemperature::new(11.45, 11.75),
            mu_r: 1.0,
        },
        Material {
            name: "SiO2".into(),
            kind: MaterialKind::Dielectric,
            sigma: ByTemperature::same(0.0),
            eps_r: ByTemperature::same(3.9),
            mu_r: 1.0,
        },
        Material {
            name: "Vacuum".into(),
            kind: MaterialKind::Vacuum,
            sigma: ByTemperature::same(0.0),
            eps_r: ByTemperature::same(1.0),
            mu_r: 1.0,
        },
        Material {
            name: "PEC".into(),
            kind: MaterialKind::Pec,
            sigma: ByTemperature::same(0.0),
            eps_r: ByTemperature::same(1.0),
            mu_r: 1.0,
        },
    ]
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive, got {v}")))
    }
}

/// Skin depth `1/sqrt(pi f mu0 mu_r sigma)` in meters.
pub fn skin_depth(sigma: f64, mu_r: f64, f: f64) -> Result<f64> {
    check_positive("conductivity", sigma)?;
    check_positive("frequency", f)?;
    check_positive("relative permeability", mu_r)?;
    Ok(1.0 / (PI * f * MU0 * mu_r * sigma).sqrt())
}

/// Dielectric loss tangent `sigma / (2 pi f eps0 eps_r)`.
pub fn loss_tangent(sigma: f64, eps_r: f64, f: f64) -> Result<f64> {
    check_positive("frequency", f)?;
    if !(eps_r >= 1.0) {
        return Err(Error::Domain(format!(
            "relative permittivity must be >= 1, got {eps_r}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "conductivity must be non-negative, got {sigma}"
        )));
    }
    Ok(sigma / (2.0 * PI * f * EPS0 * eps_r))
}

/// Surface resistance `sqrt(pi f mu0 mu_r / sigma)` in ohms per square.
pub fn surface_resistance(sigma: f64, mu_r: f64, f: f64) -> Result<f64> {
    check_positive("conductivity", sigma)?;
    check_positive("frequency", f)?;
    check_positive("relative permeability", mu_r)?;
    Ok((PI * f * MU0 * mu_r / sigma).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn builtin_values() {
        let lib = MaterialLibrary::builtin();
        let cu = lib.lookup("Cu").unwrap();
        assert_eq!(cu.sigma(TemperatureClass::Cryogenic), 2.9e8);
        assert_eq!(cu.sigma(TemperatureClass::Room), 5.9e7);
        let si = lib.lookup("Si").unwrap();
        assert_eq!(si.sigma(TemperatureClass::Cryogenic), 4.26e-7);
        assert_eq!(si.sigma(TemperatureClass::Room), 4.26e-4);
        assert_eq!(si.eps_r(TemperatureClass::Cryogenic), 11.45);
        assert_eq!(si.eps_r(TemperatureClass::Room), 11.75);
        let ox = lib.lookup("SiO2").unwrap();
        for t in TemperatureClass::ALL {
            assert_eq!(ox.eps_r(t), 3.9);
            let vac = lib.lookup("Vacuum").unwrap();
            assert_eq!(vac.sigma(t), 0.0);
            assert_eq!(vac.eps_r(t), 1.0);
        }
        assert!(lib.lookup("PEC").unwrap().is_pec());
        assert!(lib.iter().all(|m| m.mu_r == 1.0));
        assert!(matches!(lib.lookup("Au"), Err(Error::UnknownMaterial(_))));
    }

    #[test]
    fn rejects_bad_material() {
        let bad = Material::new(
            "x",
            MaterialKind::Dielectric,
            ByTemperature::same(-1.0),
            ByTemperature::same(2.0),
        );
        assert!(bad.is_err());
        let bad = Material::new(
            "y",
            MaterialKind::Dielectric,
            ByTemperature::same(0.0),
            ByTemperature::new(0.5, 2.0),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn temperature_parse() {
        assert_eq!("cryo".parse::<TemperatureClass>().unwrap(), TemperatureClass::Cryogenic);
        assert_eq!("Room".parse::<TemperatureClass>().unwrap(), TemperatureClass::Room);
        assert!("warm".parse::<TemperatureClass>().is_err());
    }

    #[test]
    fn skin_depth_values() {
        assert_relative_eq!(skin_depth(2.9e8, 1.0, 28e9).unwrap(), 1.766e-7, max_relative = 1e-3);
        assert_relative_eq!(skin_depth(5.9e7, 1.0, 28e9).unwrap(), 3.916e-7, max_relative = 1e-3);
        let d1 = skin_depth(1e7, 1.0, 1e9).unwrap();
        let d4 = skin_depth(4e7, 1.0, 1e9).unwrap();
        assert_relative_eq!(d4, d1 / 2.0, max_relative = 1e-14);
        assert!(skin_depth(0.0, 1.0, 1e9).is_err());
        assert!(skin_depth(1e7, 1.0, -1.0).is_err());
    }

    #[test]
    fn loss_tangent_values() {
        assert_relative_eq!(loss_tangent(4.26e-4, 11.75, 28e9).unwrap(), 2.33e-5, max_relative = 2e-3);
        assert_relative_eq!(loss_tangent(4.26e-7, 11.45, 28e9).unwrap(), 2.39e-8, max_relative = 2e-3);
        assert_eq!(loss_tangent(0.0, 3.9, 28e9).unwrap(), 0.0);
        assert!(loss_tangent(1.0, 0.5, 28e9).is_err());
    }

    #[test]
    fn surface_resistance_values() {
        let cryo = surface_resistance(2.9e8, 1.0, 28e9).unwrap();
        let room = surface_resistance(5.9e7, 1.0, 28e9).unwrap();
        assert_relative_eq!(cryo, 1.952e-2, max_relative = 1e-3);
        assert_relative_eq!(room, 4.328e-2, max_relative = 1e-3);
        assert_relative_eq!(cryo / room, (5.9e7f64 / 2.9e8).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(cryo / room, 0.451, max_relative = 1e-3);
    }

    proptest! {
        #[test]
        fn skin_depth_decreasing(sigma in 1e2f64..1e9, f in 1e6f64..1e12, k in 1.001f64..10.0) {
            let d = skin_depth(sigma, 1.0, f).unwrap();
            prop_assert!(skin_depth(sigma * k, 1.0, f).unwrap() < d);
            prop_assert!(skin_depth(sigma, 1.0, f * k).unwrap() < d);
        }

        #[test]
        fn rs_delta_sigma_is_one(sigma in 1e2f64..1e9, f in 1e6f64..1e12, mu in 1.0f64..5.0) {
            let p = surface_resistance(sigma, mu, f).unwrap() * skin_depth(sigma, mu, f).unwrap() * sigma;
            prop_assert!((p - 1.0).abs() < 1e-12);
        }
    }
}
