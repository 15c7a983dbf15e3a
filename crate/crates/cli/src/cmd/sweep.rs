use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use fieldforge_core::materials::TemperatureClass;
use fieldforge_core::scene::Scene;

use super::print_json;
use super::scene::SceneSource;
use super::simulate::{print_summary, simulate_scene, RunSummary, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Failure, Outputs};
use crate::plot::{line_chart, Series};
use crate::OutputArgs;

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SceneSource,
    /// Comma-separated Si thicknesses (m).
    #[arg(long, value_delimiter = ',', required = true)]
    pub thickness: Vec<f64>,
    /// Temperature class: cryo or room.
    #[arg(long, default_value = "cryo")]
    pub temp: TemperatureClass,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct CurveRow {
    si_thickness_m: f64,
    frequency_hz: f64,
    refl_db: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DipRow {
    si_thickness_m: f64,
    dip_frequency_hz: Option<f64>,
    dip_db: Option<f64>,
    efficiency: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary {
    dips: Vec<DipRow>,
    /// Thickness with the deepest dip.
    best_thickness_m: Option<f64>,
    failures: Vec<Failure>,
}

type Finished = (RunSummary, Outputs, Vec<(f64, f64)>);

fn dir_name(t: f64) -> String {
    format!("si_{:.4}mm", t * 1e3)
}

pub fn run(a: &SweepArgs) -> CliResult<()> {
    if a.thickness.is_empty() {
        return Err(CliError::usage("--thickness needs at least one value"));
    }
    a.solver.check()?;
    let mut source = a.source.clone();
    if source.scene.is_none() && source.preset.is_none() {
        source.preset = Some("onchip-dipole".into());
    }
    if source.scene.is_some() {
        return Err(CliError::usage("sweep-thickness works on a preset (--preset)"));
    }
    // Every scene is built before any run so that bad thicknesses fail early.
    let mut scenes: Vec<(f64, Scene, String)> = Vec::new();
    for &t in &a.thickness {
        let s = SceneSource {
            si_thickness: Some(t),
            ..source.clone()
        };
        let (scene, hash) = s.load(Some(a.temp))?;
        scenes.push((t, scene, hash));
    }
    let mut out = Outputs::new(&a.output.out)?;
    let config = serde_json::json!({
        "thicknesses": a.thickness,
        "solver": a.solver.config_for(&scenes[0].1.boundary)?,
    });
    let hash = crate::output::sha256_hex(
        scenes.iter().map(|s| s.2.as_str()).collect::<Vec<_>>().join(",").as_bytes(),
    );
    let pool = a.solver.pool()?;
    let results: Vec<(f64, CliResult<Finished>)> = pool.install(|| {
        scenes
            .par_iter()
            .map(|(t, scene, _)| {
                let r = Outputs::new(&a.output.out.join(dir_name(*t))).and_then(|mut o| {
                    let s = simulate_scene(scene, &a.solver, &mut o)?;
                    let curve = read_curve(&o)?;
                    Ok((s, o, curve))
                });
                (*t, r)
            })
            .collect()
    });
    let mut curves = Vec::new();
    let mut dips = Vec::new();
    let mut series = Vec::new();
    for (t, r) in results {
        match r {
            Ok((s, o, curve)) => {
                out.absorb(&dir_name(t), o);
                dips.push(DipRow {
                    si_thickness_m: t,
                    dip_frequency_hz: s.dip_frequency_hz,
                    dip_db: s.dip_db,
                    efficiency: s.efficiency,
                });
                series.push(Series::new(
                    &format!("Si {:.3} mm", t * 1e3),
                    curve.iter().map(|&(f, db)| (f / 1e9, db)).collect(),
                ));
                curves.extend(curve.into_iter().map(|(f, db)| CurveRow {
                    si_thickness_m: t,
                    frequency_hz: f,
                    refl_db: db,
                }));
                if !a.output.json {
                    print_summary(&s);
                }
            }
            Err(e) => out.failures.push(Failure {
                item: dir_name(t),
                error: e.message,
            }),
        }
    }
    if !curves.is_empty() {
        out.write("thickness_sweep.csv", &csv_rows(&curves)?)?;
        out.write("dips.csv", &csv_rows(&dips)?)?;
        out.write(
            "thickness_sweep.svg",
            line_chart("|Sdd11| versus Si thickness", "frequency (GHz)", "|Sdd11| (dB)", &series).as_bytes(),
        )?;
    }
    let best = dips
        .iter()
        .filter_map(|d| Some((d.si_thickness_m, d.dip_db?)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|d| d.0);
    let failed = !out.failures.is_empty();
    let summary = SweepSummary {
        dips,
        best_thickness_m: best,
        failures: out.failures.clone(),
    };
    out.finish(Some(hash), config, if failed { "partial" } else { "ok" })?;
    if a.output.json {
        print_json(&summary)?;
    } else if let Some(t) = best {
        println!("deepest dip at Si thickness {:.3} mm", t * 1e3);
    }
    if failed {
        return Err(CliError::partial(format!(
            "{} of {} runs failed; see manifest.json",
            summary.failures.len(),
            a.thickness.len()
        )));
    }
    Ok(())
}

/// `(frequency, dB)` pairs back from the run's `s-params.csv`.
fn read_curve(o: &Outputs) -> CliResult<Vec<(f64, f64)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        frequency_hz: f64,
        refl_db: f64,
    }
    let mut r = csv::Reader::from_path(o.root().join("s-params.csv"))?;
    let mut v = Vec::new();
    for row in r.deserialize::<Row>() {
        let row = row?;
        v.push((row.frequency_hz, row.refl_db));
    }
    Ok(v)
}
