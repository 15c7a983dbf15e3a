use clap::Args;
use serde::Serialize;

use fieldforge_core::cavity::{
    attach_q, count_below, cylinder_modes, mode_density, rect_modes, weyl_count, CavityMode, CavityShape,
    CRYOSTAT_RADIUS, CRYOSTAT_SECTION_HEIGHTS, DEFAULT_WALL_SIGMA,
};

use super::{print_json, require_positive};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Outputs};
use crate::plot::histogram;
use crate::OutputArgs;

#[derive(Args, Debug)]
pub struct CavityArgs {
    /// Cylinder radius (m).
    #[arg(long, default_value_t = CRYOSTAT_RADIUS)]
    pub radius: f64,
    /// Comma-separated section heights (m); each is analysed as its own cavity.
    #[arg(long, value_delimiter = ',', default_values_t = CRYOSTAT_SECTION_HEIGHTS.to_vec())]
    pub heights: Vec<f64>,
    /// Rectangular box `a,b,d` (m) instead of cylinders.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub rect: Option<Vec<f64>>,
    /// Frequency of interest (Hz).
    #[arg(long, default_value_t = 28e9)]
    pub focus: f64,
    /// Half-width of the counting window around the focus (Hz).
    #[arg(long, default_value_t = 100e6)]
    pub window: f64,
    /// Width of the histogram around the focus (Hz).
    #[arg(long, default_value_t = 2e9)]
    pub span: f64,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Highest enumerated frequency (Hz); defaults to the top of the histogram.
    #[arg(long)]
    pub f_max: Option<f64>,
    /// Wall conductivity (S/m).
    #[arg(long, default_value_t = DEFAULT_WALL_SIGMA)]
    pub sigma_wall: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct ModeRow {
    family: String,
    m: u32,
    n: u32,
    p: u32,
    frequency_hz: f64,
    degeneracy: u32,
    q: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct SectionReport {
    section: String,
    volume_m3: f64,
    modes_enumerated: usize,
    modes_below_focus: u64,
    weyl_below_focus: f64,
    weyl_ratio: f64,
    focus_hz: f64,
    window_hz: f64,
    modes_in_window: usize,
    weighted_in_window: u64,
    nearest_mode: Option<String>,
    nearest_offset_hz: Option<f64>,
    lowest_mode: Option<String>,
    lowest_frequency_hz: Option<f64>,
    median_q_in_window: Option<f64>,
}

fn report(label: &str, shape: CavityShape, modes: &[CavityMode], a: &CavityArgs) -> CliResult<SectionReport> {
    let d = mode_density(modes, a.focus, a.window)?;
    let below = count_below(modes, a.focus);
    let weyl = weyl_count(shape.volume(), a.focus);
    let mut qs: Vec<f64> = modes
        .iter()
        .filter(|m| (m.frequency - a.focus).abs() <= a.window)
        .filter_map(|m| m.q)
        .collect();
    qs.sort_by(f64::total_cmp);
    Ok(SectionReport {
        section: label.to_string(),
        volume_m3: shape.volume(),
        modes_enumerated: modes.len(),
        modes_below_focus: below,
        weyl_below_focus: weyl,
        weyl_ratio: below as f64 / weyl,
        focus_hz: a.focus,
        window_hz: a.window,
        modes_in_window: d.count,
        weighted_in_window: d.weighted_count,
        nearest_mode: d.nearest_label,
        nearest_offset_hz: d.nearest_offset,
        lowest_mode: modes.first().map(CavityMode::label),
        lowest_frequency_hz: modes.first().map(|m| m.frequency),
        median_q_in_window: qs.get(qs.len() / 2).copied(),
    })
}

pub fn run(a: &CavityArgs) -> CliResult<()> {
    require_positive("focus", a.focus)?;
    require_positive("span", a.span)?;
    require_positive("sigma-wall", a.sigma_wall)?;
    if !(a.window >= 0.0) || a.bins == 0 {
        return Err(CliError::usage("--window must be non-negative and --bins positive"));
    }
    let lo = (a.focus - a.span / 2.0).max(0.0);
    let hi = a.focus + a.span / 2.0;
    let f_max = a.f_max.unwrap_or(hi.max(a.focus + a.window));
    require_positive("f-max", f_max)?;
    let sections: Vec<(String, CavityShape)> = match &a.rect {
        Some(r) => {
            for (name, v) in ["a", "b", "d"].iter().zip(r) {
                require_positive(&format!("rect {name}"), *v)?;
            }
            vec![(
                format!("rect_{:.4}x{:.4}x{:.4}m", r[0], r[1], r[2]),
                CavityShape::Rectangular { a: r[0], b: r[1], d: r[2] },
            )]
        }
        None => {
            require_positive("radius", a.radius)?;
            if a.heights.is_empty() {
                return Err(CliError::usage("--heights needs at least one value"));
            }
            a.heights
                .iter()
                .map(|&h| {
                    require_positive("heights", h)?;
                    Ok((
                        format!("cyl_r{:.3}_h{:.3}m", a.radius, h),
                        CavityShape::Cylinder { radius: a.radius, height: h },
                    ))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let mut out = Outputs::new(&a.output.out)?;
    let mut reports = Vec::new();
    for (label, shape) in &sections {
        let mut modes = out.time(&format!("enumerate {label}"), || match *shape {
            CavityShape::Cylinder { radius, height } => cylinder_modes(radius, height, f_max),
            CavityShape::Rectangular { a, b, d } => rect_modes(a, b, d, f_max),
        })?;
        attach_q(&mut modes, a.sigma_wall)?;
        let rows: Vec<ModeRow> = modes
            .iter()
            .map(|m| ModeRow {
                family: m.family.to_string(),
                m: m.m,
                n: m.n,
                p: m.p,
                frequency_hz: m.frequency,
                degeneracy: m.degeneracy,
                q: m.q,
            })
            .collect();
        out.write(&format!("modes_{label}.csv"), &csv_rows(&rows)?)?;
        let width = (hi - lo) / a.bins as f64;
        let mut bins: Vec<(f64, f64, u64)> =
            (0..a.bins).map(|k| (lo + k as f64 * width, lo + (k + 1) as f64 * width, 0)).collect();
        for m in &modes {
            if m.frequency >= lo && m.frequency < hi {
                let k = (((m.frequency - lo) / width) as usize).min(a.bins - 1);
                bins[k].2 += m.degeneracy as u64;
            }
        }
        let ghz: Vec<(f64, f64, u64)> = bins.iter().map(|b| (b.0 / 1e9, b.1 / 1e9, b.2)).collect();
        out.write(
            &format!("density_{label}.svg"),
            histogram(&format!("mode density, {label}"), "frequency (GHz)", &ghz).as_bytes(),
        )?;
        reports.push(report(label, *shape, &modes, a)?);
    }
    out.write("density.csv", &csv_rows(&reports)?)?;
    out.finish(
        None,
        serde_json::json!({
            "sections": sections.iter().map(|s| &s.1).collect::<Vec<_>>(),
            "f_max": f_max,
            "sigma_wall": a.sigma_wall,
        }),
        "ok",
    )?;
    if a.output.json {
        return print_json(&reports);
    }
    for r in &reports {
        println!("{}: {} modes up to {:.3} GHz", r.section, r.modes_enumerated, f_max / 1e9);
        if let (Some(l), Some(f)) = (&r.lowest_mode, r.lowest_frequency_hz) {
            println!("  lowest mode {l} at {:.6} GHz", f / 1e9);
        }
        println!(
            "  below {:.3} GHz: {} modes (Weyl estimate {:.0}, ratio {:.3})",
            r.focus_hz / 1e9,
            r.modes_below_focus,
            r.weyl_below_focus,
            r.weyl_ratio
        );
        println!(
            "  within ±{:.1} MHz: {} entries ({} with degeneracy); nearest {} at {:+.3} MHz",
            r.window_hz / 1e6,
            r.modes_in_window,
            r.weighted_in_window,
            r.nearest_mode.as_deref().unwrap_or("-"),
            r.nearest_offset_hz.unwrap_or(f64::NAN) / 1e6
        );
        if let Some(q) = r.median_q_in_window {
            println!("  median wall Q in window: {q:.0}");
        }
    }
    Ok(())
}
