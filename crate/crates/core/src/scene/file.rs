//! Versioned JSON scene files.
//!
//! ```json
//! { "schema": 1, "units": "um", "name": "...", "temperature": "cryogenic",
//!   "stack": {...}, "primitives": [...], "ports": [...],
//!   "boundary": {"kind": "cpml", "thickness": 8}, "domain_padding": 2500 }
//! ```
//!
//! Lengths (coordinates, thicknesses, radii, padding, refinement cell sizes)
//! are in the declared `units`; material parameters are always SI.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scene;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthUnit {
    #[serde(rename = "m")]
    Meter,
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "um", alias = "µm")]
    Micrometer,
}

impl LengthUnit {
    pub fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Meter => 1.0,
            LengthUnit::Millimeter => 1e-3,
            LengthUnit::Micrometer => 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub schema: u32,
    pub units: LengthUnit,
    #[serde(flatten)]
    pub scene: Scene,
}

pub fn from_json(text: &str) -> Result<Scene> {
    let file: SceneFile = serde_json::from_str(text)?;
    if file.schema != SCHEMA_VERSION {
        return Err(Error::InvalidScene(format!(
            "unsupported scene schema {} (expected {SCHEMA_VERSION})",
            file.schema
        )));
    }
    let mut scene = file.scene;
    if file.units != LengthUnit::Meter {
        scene.scale_lengths(file.units.to_meters());
    }
    Ok(scene)
}

/// Serializes with `"units": "m"` so that parsing restores the scene exactly.
pub fn to_json(scene: &Scene) -> Result<String> {
    let file = SceneFile {
        schema: SCHEMA_VERSION,
        units: LengthUnit::Meter,
        scene: scene.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    from_json(&fs::read_to_string(path)?)
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<()> {
    let mut text = to_json(scene)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::TemperatureClass;
    use crate::scene::{preset_names, build_preset, PresetParams};
    use proptest::prelude::*;

    #[test]
    fn presets_round_trip() {
        for name in preset_names() {
            let s = build_preset(name, &PresetParams::default()).unwrap();
            let back = from_json(&to_json(&s).unwrap()).unwrap();
            assert_eq!(back, s, "{name}");
        }
    }

    #[test]
    fn units_are_applied() {
        let text = r#"{
            "schema": 1, "units": "um", "name": "t", "temperature": "room",
            "primitives": [{"shape": {"type": "box", "min": [0,0,0], "max": [10,20,30]}, "material": "Si"}],
            "ports": [{"id": 1, "start": [0,0,0], "end": [0,0,5], "polarity": 1,
                       "source_resistance": 50, "role": "active"}],
            "domain_padding": 100
        }"#;
        let s = from_json(text).unwrap();
        assert_eq!(s.temperature, TemperatureClass::Room);
        assert!((s.domain_padding - 1e-4).abs() < 1e-18);
        assert!((s.ports[0].end[2] - 5e-6).abs() < 1e-20);
        let b = s.primitives[0].shape.bounds();
        assert!((b.max[2] - 30e-6).abs() < 1e-20);
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = r#"{"schema": 2, "units": "m", "name": "t", "temperature": "room"}"#;
        assert!(matches!(from_json(text), Err(Error::InvalidScene(_))));
        assert!(matches!(from_json("{"), Err(Error::SceneFile(_))));
    }

    proptest! {
        #[test]
        fn onchip_round_trip(si in 1e-4f64..5e-4, l in 1e-3f64..5e-3, gap in 1e-5f64..1e-4) {
            let p = PresetParams { si_thickness: Some(si), length: Some(l), gap: Some(gap), ..Default::default() };
            let s = build_preset("onchip-dipole", &p).unwrap();
            let back = from_json(&to_json(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
