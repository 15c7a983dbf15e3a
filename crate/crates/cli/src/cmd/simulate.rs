use clap::{Args, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use fieldforge_core::fdtd::{
    run as run_fdtd, waveform_kind, Drive, Excitation, FieldComponent, NearFieldConfig, SimulationConfig,
    SnapshotRequest, DEFAULT_ENERGY_STOP, DEFAULT_MAX_STEPS,
};
use fieldforge_core::grid::generate;
use fieldforge_core::materials::TemperatureClass;
use fieldforge_core::postproc::{db20, frequency_index, ntff, pattern_cut_csv, port_csv, SweepResult};
use fieldforge_core::scene::{Axis, Boundary, Scene};

use super::print_json;
use super::scene::SceneSource;
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Failure, Outputs};
use crate::plot::{heatmap, line_chart, polar_chart, Series};
use crate::OutputArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TempChoice {
    Cryo,
    Room,
    /// Run both classes and compare.
    Both,
}

/// Solver and sweep settings shared by `simulate` and `sweep-thickness`.
#[derive(Args, Clone, Debug)]
pub struct SolverArgs {
    /// First sweep frequency (Hz).
    #[arg(long, default_value_t = 24e9)]
    pub f_start: f64,
    /// Last sweep frequency (Hz).
    #[arg(long, default_value_t = 32e9)]
    pub f_stop: f64,
    /// Sweep step (Hz).
    #[arg(long, default_value_t = 0.1e9)]
    pub f_step: f64,
    /// Spacing of the frequencies that get far fields and losses (Hz); 0 disables them.
    #[arg(long, default_value_t = 1e9)]
    pub field_step: f64,
    /// Mesh cells per wavelength at the mesh frequency.
    #[arg(long, default_value_t = 15.0)]
    pub resolution: f64,
    /// Frequency the mesh resolves (Hz); defaults to the sweep stop.
    #[arg(long)]
    pub mesh_frequency: Option<f64>,
    /// Excitation centre frequency (Hz).
    #[arg(long, default_value_t = 28e9)]
    pub f_center: f64,
    /// Excitation half-width to the -20 dB points (Hz).
    #[arg(long, default_value_t = 8e9)]
    pub bandwidth: f64,
    /// Excitation waveform: modulated-gaussian or gaussian-derivative.
    #[arg(long, default_value = "modulated-gaussian")]
    pub waveform: String,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    /// Stop when field energy falls below this fraction of its peak.
    #[arg(long, default_value_t = DEFAULT_ENERGY_STOP)]
    pub energy_stop: f64,
    /// Angular step of the far-field grid (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub pattern_step: f64,
    /// Field slice `axis=y,coord=0,step=400,component=ez`; repeatable.
    #[arg(long)]
    pub snapshot: Vec<String>,
    /// Parallel sub-runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl SolverArgs {
    fn frequencies(&self) -> CliResult<(Vec<f64>, Vec<f64>)> {
        if !(self.f_start > 0.0 && self.f_stop >= self.f_start && self.f_step > 0.0) {
            return Err(CliError::usage("need 0 < --f-start <= --f-stop and --f-step > 0"));
        }
        let n = ((self.f_stop - self.f_start) / self.f_step + 1e-9).floor() as usize;
        let freqs: Vec<f64> = (0..=n).map(|k| self.f_start + k as f64 * self.f_step).collect();
        let fields = if self.field_step > 0.0 {
            let m = ((self.f_stop - self.f_start) / self.field_step + 1e-9).floor() as usize;
            (0..=m)
                .map(|k| self.f_start + k as f64 * self.field_step)
                .filter(|&f| frequency_index(&freqs, f).is_some())
                .collect()
        } else {
            Vec::new()
        };
        Ok((freqs, fields))
    }

    fn snapshots(&self) -> CliResult<Vec<SnapshotRequest>> {
        self.snapshot.iter().map(|s| parse_snapshot(s)).collect()
    }

    pub fn check(&self) -> CliResult<()> {
        if !(self.resolution > 0.0) || !(self.pattern_step > 0.0) || self.jobs == 0 {
            return Err(CliError::usage("--resolution, --pattern-step and --jobs must be positive"));
        }
        self.config_for(&Boundary::Pec)?.check()?;
        Ok(())
    }

    pub fn config_for(&self, boundary: &Boundary) -> CliResult<SimulationConfig> {
        let (frequencies, field_frequencies) = self.frequencies()?;
        let open = matches!(boundary, Boundary::Cpml { .. });
        Ok(SimulationConfig {
            frequencies,
            near_field: (open && !field_frequencies.is_empty()).then_some(NearFieldConfig { inset: 3 }),
            record_ohmic: !field_frequencies.is_empty(),
            field_frequencies,
            excitation: Excitation {
                kind: waveform_kind(&self.waveform)?,
                f_center: self.f_center,
                bandwidth: self.bandwidth,
            },
            max_steps: self.max_steps,
            energy_stop: self.energy_stop,
            drive: Drive::Active,
            snapshots: self.snapshots()?,
            ..SimulationConfig::default()
        })
    }

    pub fn mesh_frequency(&self) -> f64 {
        self.mesh_frequency.unwrap_or(self.f_stop)
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))
    }
}

fn parse_snapshot(spec: &str) -> CliResult<SnapshotRequest> {
    let bad = || CliError::usage(format!("bad --snapshot '{spec}' (want axis=y,coord=0,step=400,component=ez)"));
    let mut req = SnapshotRequest {
        step: 0,
        axis: Axis::Z,
        coordinate: 0.0,
        component: FieldComponent::EMag,
    };
    for part in spec.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        match k.trim() {
            "axis" => {
                req.axis = match v.trim() {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    _ => return Err(bad()),
                }
            }
            "coord" => req.coordinate = v.trim().parse().map_err(|_| bad())?,
            "step" => req.step = v.trim().parse().map_err(|_| bad())?,
            "component" => {
                req.component = match v.trim().to_ascii_lowercase().as_str() {
                    "ex" => FieldComponent::Ex,
                    "ey" => FieldComponent::Ey,
                    "ez" => FieldComponent::Ez,
                    "hx" => FieldComponent::Hx,
                    "hy" => FieldComponent::Hy,
                    "hz" => FieldComponent::Hz,
                    "emag" | "|e|" => FieldComponent::EMag,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        }
    }
    Ok(req)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SceneSource,
    /// Material temperature class.
    #[arg(long, value_enum, default_value_t = TempChoice::Cryo)]
    pub temp: TempChoice,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Headline numbers of one simulation.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scene: String,
    pub temperature: TemperatureClass,
    pub cells: u64,
    pub steps: usize,
    pub converged: bool,
    pub dip_frequency_hz: Option<f64>,
    pub dip_db: Option<f64>,
    /// Field frequency nearest the excitation centre.
    pub center_frequency_hz: Option<f64>,
    pub efficiency: Option<f64>,
    pub total_efficiency: Option<f64>,
    pub directivity_dbi: Option<f64>,
    pub realized_gain_dbi: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Serialize)]
struct SRow {
    frequency_hz: f64,
    zin_re: Option<f64>,
    zin_im: Option<f64>,
    refl_re: f64,
    refl_im: f64,
    refl_db: f64,
}

#[derive(Serialize)]
struct EffRow {
    frequency_hz: f64,
    p_accepted_w: f64,
    p_radiated_w: f64,
    p_flux_w: Option<f64>,
    p_ohmic_w: Option<f64>,
    balance_error: Option<f64>,
    efficiency: Option<f64>,
    mismatch: Option<f64>,
    total_efficiency: Option<f64>,
    directivity_dbi: Option<f64>,
    gain_dbi: Option<f64>,
    realized_gain_dbi: Option<f64>,
    max_theta_deg: Option<f64>,
    max_phi_deg: Option<f64>,
}

/// Cell edges around the sample points of a snapshot axis.
fn cell_edges(c: &[f64]) -> Vec<f64> {
    match c.len() {
        0 => Vec::new(),
        1 => vec![c[0] - 0.5, c[0] + 0.5],
        n => {
            let mut e = Vec::with_capacity(n + 1);
            e.push(c[0] - 0.5 * (c[1] - c[0]));
            e.extend(c.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            e.push(c[n - 1] + 0.5 * (c[n - 1] - c[n - 2]));
            e
        }
    }
}

/// Meshes, solves and post-processes one scene into `out`.
pub fn simulate_scene(scene: &Scene, solver: &SolverArgs, out: &mut Outputs) -> CliResult<RunSummary> {
    let config = solver.config_for(&scene.boundary)?;
    let grid = out.time("mesh", || generate(scene, solver.resolution, solver.mesh_frequency()))?;
    let stats = grid.stats();
    info!("{}: {} cells, dt {:e} s", scene.name, stats.cells, stats.dt);
    out.grid.push(serde_json::to_value(&stats)?);
    let run = out.time("solve", || run_fdtd(scene, grid, &config))?;
    let sweep = out.time("postprocess", || SweepResult::from_run(&run, solver.pattern_step))?;

    let srows: Vec<SRow> = sweep
        .rows
        .iter()
        .map(|r| SRow {
            frequency_hz: r.frequency,
            zin_re: r.zin.map(|z| z.re),
            zin_im: r.zin.map(|z| z.im),
            refl_re: r.reflection.re,
            refl_im: r.reflection.im,
            refl_db: db20(r.reflection.norm()),
        })
        .collect();
    out.write("s-params.csv", &csv_rows(&srows)?)?;
    let erows: Vec<EffRow> = sweep
        .rows
        .iter()
        .filter_map(|r| {
            let p_rad = r.p_radiated?;
            let e = r.efficiency.as_ref();
            Some(EffRow {
                frequency_hz: r.frequency,
                p_accepted_w: r.p_accepted,
                p_radiated_w: p_rad,
                p_flux_w: r.p_flux,
                p_ohmic_w: r.p_ohmic,
                balance_error: r.p_ohmic.map(|o| (r.p_accepted - p_rad - o) / r.p_accepted),
                efficiency: e.map(|e| e.efficiency),
                mismatch: e.map(|e| e.mismatch),
                total_efficiency: e.map(|e| e.total_efficiency),
                directivity_dbi: r.directivity_dbi,
                gain_dbi: e.map(|e| e.gain_dbi),
                realized_gain_dbi: e.map(|e| e.realized_gain_dbi),
                max_theta_deg: r.max_direction.map(|d| d.0),
                max_phi_deg: r.max_direction.map(|d| d.1),
            })
        })
        .collect();
    if !erows.is_empty() {
        out.write("efficiency.csv", &csv_rows(&erows)?)?;
    }
    out.write("sweep.csv", sweep.to_csv().as_bytes())?;
    for p in &run.ports {
        out.write(&format!("port{}.csv", p.port_id), port_csv(p).as_bytes())?;
    }
    let mut energy = String::from("step,energy_j\n");
    for (n, w) in &run.energy {
        energy.push_str(&format!("{n},{w:.9e}\n"));
    }
    out.write("energy.csv", energy.as_bytes())?;

    let sdb: Vec<(f64, f64)> = srows.iter().map(|r| (r.frequency_hz / 1e9, r.refl_db)).collect();
    let label = if run.ports.iter().filter(|p| p.weight != 0.0).count() == 2 { "|Sdd11|" } else { "|S11|" };
    out.write(
        "s-params.svg",
        line_chart(
            &format!("{label} ({}, {})", scene.name, scene.temperature),
            "frequency (GHz)",
            &format!("{label} (dB)"),
            &[Series::new(label, sdb)],
        )
        .as_bytes(),
    )?;
    if !erows.is_empty() {
        let ef = |f: fn(&EffRow) -> Option<f64>| -> Vec<(f64, f64)> {
            erows.iter().filter_map(|r| Some((r.frequency_hz / 1e9, f(r)?))).collect()
        };
        out.write(
            "efficiency.svg",
            line_chart(
                &format!("efficiency ({}, {})", scene.name, scene.temperature),
                "frequency (GHz)",
                "efficiency",
                &[
                    Series::new("radiation", ef(|r| r.efficiency)),
                    Series::new("total", ef(|r| r.total_efficiency)),
                ],
            )
            .as_bytes(),
        )?;
    }

    let mut summary = RunSummary {
        scene: scene.name.clone(),
        temperature: scene.temperature,
        cells: stats.cells,
        steps: run.steps,
        converged: run.converged,
        dip_frequency_hz: None,
        dip_db: None,
        center_frequency_hz: None,
        efficiency: None,
        total_efficiency: None,
        directivity_dbi: None,
        realized_gain_dbi: None,
        flags: sweep.flags.clone(),
    };
    if !run.converged {
        summary.flags.push(format!("energy did not decay below {:e} in {} steps", config.energy_stop, run.steps));
    }
    if let Some((f, db)) = sweep.deepest_dip() {
        summary.dip_frequency_hz = Some(f);
        summary.dip_db = Some(db);
    }
    if let Some(nf) = &run.near_field {
        let fi = (0..nf.frequencies.len())
            .min_by(|&a, &b| {
                (nf.frequencies[a] - solver.f_center)
                    .abs()
                    .total_cmp(&(nf.frequencies[b] - solver.f_center).abs())
            })
            .ok_or_else(|| CliError::usage("no field frequency"))?;
        let f = nf.frequencies[fi];
        summary.center_frequency_hz = Some(f);
        let row = frequency_index(&sweep.rows.iter().map(|r| r.frequency).collect::<Vec<_>>(), f)
            .map(|k| &sweep.rows[k]);
        let eff = row.and_then(|r| r.efficiency);
        if let Some(e) = &eff {
            summary.efficiency = Some(e.efficiency);
            summary.total_efficiency = Some(e.total_efficiency);
            summary.realized_gain_dbi = Some(e.realized_gain_dbi);
        }
        summary.directivity_dbi = row.and_then(|r| r.directivity_dbi);
        let ff = ntff(nf, fi, solver.pattern_step)?;
        let e = eff.map_or(1.0, |e| e.efficiency);
        let mut pattern = String::from("phi_deg,");
        let mut cuts = Vec::new();
        for phi in [0.0, 90.0] {
            let csv = pattern_cut_csv(&ff, phi, e);
            let mut lines = csv.lines();
            if cuts.is_empty() {
                pattern.push_str(lines.next().unwrap_or_default());
                pattern.push('\n');
            } else {
                lines.next();
            }
            let mut pts = Vec::new();
            for l in lines {
                pattern.push_str(&format!("{phi},{l}\n"));
                let mut it = l.split(',');
                if let (Some(t), Some(_), Some(g)) = (it.next(), it.next(), it.next()) {
                    if let (Ok(t), Ok(g)) = (t.parse::<f64>(), g.parse::<f64>()) {
                        pts.push((t.to_radians(), g));
                    }
                }
            }
            cuts.push(Series::new(&format!("gain, phi = {phi} deg"), pts));
        }
        out.write("pattern.csv", pattern.as_bytes())?;
        out.write(
            "pattern.svg",
            polar_chart(&format!("gain (dBi) at {:.2} GHz", f / 1e9), &cuts, -30.0).as_bytes(),
        )?;
    }
    for (k, s) in run.snapshots.iter().enumerate() {
        let name = format!("snapshot{k}_{:?}_{:?}_step{}", s.component, s.axis, s.step).to_lowercase();
        out.write(&format!("{name}.csv"), s.to_csv().as_bytes())?;
        out.write(
            &format!("{name}.svg"),
            heatmap(
                &format!("{:?} on {:?} = {:.3e} m, step {}", s.component, s.axis, s.coordinate, s.step),
                &cell_edges(&s.u),
                &cell_edges(&s.v),
                &s.values,
            )
            .as_bytes(),
        )?;
    }
    Ok(summary)
}

pub fn print_summary(s: &RunSummary) {
    println!("{} ({}): {} cells, {} steps{}", s.scene, s.temperature, s.cells, s.steps, if s.converged { "" } else { " (not converged)" });
    if let (Some(f), Some(db)) = (s.dip_frequency_hz, s.dip_db) {
        println!("  deepest reflection dip: {db:.2} dB at {:.3} GHz", f / 1e9);
    }
    if let Some(f) = s.center_frequency_hz {
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "  at {:.3} GHz: efficiency {}, total efficiency {}, directivity {} dBi, realized gain {} dBi",
            f / 1e9,
            show(s.efficiency),
            show(s.total_efficiency),
            show(s.directivity_dbi),
            show(s.realized_gain_dbi)
        );
    }
    for f in &s.flags {
        println!("  warning: {f}");
    }
}

#[derive(Serialize)]
struct Comparison {
    runs: Vec<RunSummary>,
    /// Radiation efficiency under cryogenic parameters exceeds room temperature.
    cryo_more_efficient: Option<bool>,
}

pub fn run(a: &SimulateArgs) -> CliResult<()> {
    a.solver.check()?;
    let temps: Vec<TemperatureClass> = match a.temp {
        TempChoice::Cryo => vec![TemperatureClass::Cryogenic],
        TempChoice::Room => vec![TemperatureClass::Room],
        TempChoice::Both => vec![TemperatureClass::Cryogenic, TemperatureClass::Room],
    };
    let scenes: Vec<(Scene, String)> = temps
        .iter()
        .map(|&t| a.source.load(Some(t)))
        .collect::<CliResult<_>>()?;
    let config = serde_json::to_value(a.solver.config_for(&scenes[0].0.boundary)?)?;
    let mut out = Outputs::new(&a.output.out)?;
    let hash = scenes[0].1.clone();
    if scenes.len() == 1 {
        let summary = simulate_scene(&scenes[0].0, &a.solver, &mut out);
        return finish_single(out, hash, config, summary, a.output.json);
    }
    let pool = a.solver.pool()?;
    let results: Vec<(String, CliResult<(RunSummary, Outputs)>)> = pool.install(|| {
        scenes
            .par_iter()
            .map(|(scene, _)| {
                let label = scene.temperature.label().to_string();
                let r = Outputs::new(&a.output.out.join(&label))
                    .and_then(|mut o| simulate_scene(scene, &a.solver, &mut o).map(|s| (s, o)));
                (label, r)
            })
            .collect()
    });
    let mut runs = Vec::new();
    for (label, r) in results {
        match r {
            Ok((s, o)) => {
                out.absorb(&label, o);
                runs.push(s);
            }
            Err(e) => out.failures.push(Failure {
                item: label,
                error: e.message,
            }),
        }
    }
    let eff = |t: TemperatureClass| runs.iter().find(|r| r.temperature == t).and_then(|r| r.efficiency);
    let cmp = Comparison {
        cryo_more_efficient: match (eff(TemperatureClass::Cryogenic), eff(TemperatureClass::Room)) {
            (Some(c), Some(r)) => Some(c > r),
            _ => None,
        },
        runs,
    };
    out.write("comparison.csv", &csv_rows(&cmp.runs.iter().map(CompareRow::from).collect::<Vec<_>>())?)?;
    let failed = !out.failures.is_empty();
    out.finish(Some(hash), config, if failed { "partial" } else { "ok" })?;
    if a.output.json {
        print_json(&cmp)?;
    } else {
        for r in &cmp.runs {
            print_summary(r);
        }
        if let Some(b) = cmp.cryo_more_efficient {
            println!("efficiency(cryo) > efficiency(room): {b}");
        }
    }
    if failed {
        return Err(CliError::partial("some runs failed; see manifest.json"));
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    temperature: TemperatureClass,
    center_frequency_hz: Option<f64>,
    efficiency: Option<f64>,
    total_efficiency: Option<f64>,
    realized_gain_dbi: Option<f64>,
    dip_frequency_hz: Option<f64>,
    dip_db: Option<f64>,
}

impl From<&RunSummary> for CompareRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            temperature: s.temperature,
            center_frequency_hz: s.center_frequency_hz,
            efficiency: s.efficiency,
            total_efficiency: s.total_efficiency,
            realized_gain_dbi: s.realized_gain_dbi,
            dip_frequency_hz: s.dip_frequency_hz,
            dip_db: s.dip_db,
        }
    }
}

fn finish_single(
    mut out: Outputs,
    hash: String,
    config: serde_json::Value,
    summary: CliResult<RunSummary>,
    json: bool,
) -> CliResult<()> {
    match summary {
        Ok(s) => {
            out.write("summary.json", format!("{}\n", serde_json::to_string_pretty(&s)?).as_bytes())?;
            out.finish(Some(hash), config, "ok")?;
            if json {
                print_json(&s)
            } else {
                print_summary(&s);
                Ok(())
            }
        }
        Err(e) => {
            out.failures.push(Failure {
                item: "simulate".into(),
                error: e.message.clone(),
            });
            out.finish(Some(hash), config, "failed")?;
            Err(e)
        }
    }
}
