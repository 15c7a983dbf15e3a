use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use fieldforge_core::materials::TemperatureClass;
use fieldforge_core::scene::{
    build_preset, from_json, preset_registry, to_json, validate, PresetParams, Scene, Severity,
};

use super::print_json;
use crate::error::{CliError, CliResult, Status};
use crate::output::sha256_hex;

/// Where a scene comes from: a JSON file or a named preset with overrides.
#[derive(Args, Clone, Debug)]
pub struct SceneSource {
    /// Scene JSON file (schema 1).
    #[arg(long, conflicts_with = "preset")]
    pub scene: Option<PathBuf>,
    /// Built-in preset name (see `scene list`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Preset override: Si thickness (m).
    #[arg(long)]
    pub si_thickness: Option<f64>,
    /// Preset override: dipole length (m).
    #[arg(long)]
    pub length: Option<f64>,
    /// Preset override: feed gap (m).
    #[arg(long)]
    pub gap: Option<f64>,
    /// Preset override: arm and feed-line width (m).
    #[arg(long)]
    pub arm_width: Option<f64>,
    /// Preset override: chip side (m).
    #[arg(long)]
    pub chip_size: Option<f64>,
    /// Preset override: port reference resistance (ohm).
    #[arg(long)]
    pub port_resistance: Option<f64>,
    /// Preset override: cryostat shrink factor.
    #[arg(long)]
    pub scale_down: Option<f64>,
}

impl SceneSource {
    pub fn params(&self, temperature: Option<TemperatureClass>) -> PresetParams {
        PresetParams {
            temperature,
            si_thickness: self.si_thickness,
            length: self.length,
            gap: self.gap,
            arm_width: self.arm_width,
            chip_size: self.chip_size,
            frequency: None,
            scale_down: self.scale_down,
            port_resistance: self.port_resistance,
        }
    }

    /// Loads and validates the scene; returns it with the hash of its source.
    ///
    /// File scenes hash the file bytes; presets hash their canonical JSON.
    pub fn load(&self, temperature: Option<TemperatureClass>) -> CliResult<(Scene, String)> {
        let (scene, hash) = match (&self.scene, &self.preset) {
            (Some(path), _) => {
                let bytes = fs::read(path)?;
                let text = String::from_utf8(bytes.clone()).map_err(|e| CliError {
                    status: Status::Scene,
                    message: format!("{}: {e}", path.display()),
                })?;
                let mut scene = from_json(&text)?;
                if let Some(t) = temperature {
                    scene = scene.with_temperature(t);
                }
                (scene, sha256_hex(&bytes))
            }
            (None, Some(name)) => {
                let scene = build_preset(name, &self.params(temperature))?;
                let hash = sha256_hex(to_json(&scene)?.as_bytes());
                (scene, hash)
            }
            (None, None) => return Err(CliError::usage("give --scene FILE or --preset NAME")),
        };
        Ok((scene.checked()?, hash))
    }
}

#[derive(Args, Debug)]
pub struct SceneArgs {
    #[command(subcommand)]
    pub action: SceneAction,
}

#[derive(Subcommand, Debug)]
pub enum SceneAction {
    /// List the built-in presets.
    List,
    /// Write a preset as a scene file.
    Export {
        #[command(flatten)]
        source: SceneSource,
        /// Temperature class: cryo or room.
        #[arg(long, default_value = "cryo")]
        temp: TemperatureClass,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a scene file and print its diagnostics.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

pub fn run(a: &SceneArgs) -> CliResult<()> {
    match &a.action {
        SceneAction::List => {
            for p in preset_registry() {
                println!("{:<16} {}", p.name(), p.description());
            }
            Ok(())
        }
        SceneAction::Export { source, temp, out } => {
            let (scene, _) = source.load(Some(*temp))?;
            let mut text = to_json(&scene)?;
            text.push('\n');
            match out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        SceneAction::Check { file, json } => {
            let bytes = fs::read(file)?;
            let hash = sha256_hex(&bytes);
            let text = String::from_utf8(bytes).map_err(|e| CliError {
                status: Status::Scene,
                message: format!("{}: {e}", file.display()),
            })?;
            let scene = from_json(&text)?;
            let diags = validate(&scene);
            if *json {
                print_json(&serde_json::json!({
                    "file": file,
                    "hash": hash,
                    "name": scene.name,
                    "diagnostics": diags,
                }))?;
            } else {
                println!("sha256 {hash}");
                for d in &diags {
                    println!("{d}");
                }
                if diags.is_empty() {
                    println!("{}: valid", file.display());
                }
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Err(CliError {
                    status: Status::Scene,
                    message: format!("{} has validation errors", file.display()),
                });
            }
            Ok(())
        }
    }
}
