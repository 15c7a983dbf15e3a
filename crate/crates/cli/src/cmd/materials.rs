use clap::Args;
use serde::Serialize;

use fieldforge_core::materials::{
    builtin_library, loss_tangent, skin_depth, surface_resistance, MaterialKind, TemperatureClass,
};

use super::{print_json, require_positive};
use crate::error::CliResult;

#[derive(Args, Debug)]
pub struct MaterialsArgs {
    /// Frequency for skin depth, surface resistance and loss tangent (Hz).
    #[arg(long, default_value_t = 28e9)]
    pub frequency: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
struct Row {
    name: String,
    kind: MaterialKind,
    temperature: TemperatureClass,
    sigma: f64,
    eps_r: f64,
    skin_depth_m: Option<f64>,
    surface_resistance_ohm: Option<f64>,
    loss_tangent: Option<f64>,
}

pub fn run(a: &MaterialsArgs) -> CliResult<()> {
    require_positive("frequency", a.frequency)?;
    let mut rows = Vec::new();
    for m in builtin_library() {
        for t in [TemperatureClass::Cryogenic, TemperatureClass::Room] {
            let (sigma, eps_r) = (m.sigma(t), m.eps_r(t));
            let conductor = m.kind == MaterialKind::Conductor;
            rows.push(Row {
                name: m.name.clone(),
                kind: m.kind,
                temperature: t,
                sigma,
                eps_r,
                skin_depth_m: if conductor { Some(skin_depth(sigma, m.mu_r, a.frequency)?) } else { None },
                surface_resistance_ohm: if conductor {
                    Some(surface_resistance(sigma, m.mu_r, a.frequency)?)
                } else {
                    None
                },
                loss_tangent: if m.kind == MaterialKind::Dielectric {
                    Some(loss_tangent(sigma, eps_r, a.frequency)?)
                } else {
                    None
                },
            });
        }
    }
    if a.json {
        return print_json(&rows);
    }
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
    println!(
        "{:<8} {:<11} {:<5} {:>11} {:>7} {:>11} {:>11} {:>11}",
        "name", "kind", "temp", "sigma", "eps_r", "skin (m)", "Rs (ohm)", "tan d"
    );
    for r in &rows {
        println!(
            "{:<8} {:<11} {:<5} {:>11.4e} {:>7.3} {:>11} {:>11} {:>11}",
            r.name,
            format!("{:?}", r.kind),
            r.temperature.label(),
            r.sigma,
            r.eps_r,
            opt(r.skin_depth_m),
            opt(r.surface_resistance_ohm),
            opt(r.loss_tangent)
        );
    }
    println!("(parameters at {:.3e} Hz)", a.frequency);
    Ok(())
}
