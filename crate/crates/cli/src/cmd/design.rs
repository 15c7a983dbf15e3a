use clap::Args;
use serde::Serialize;

use fieldforge_core::design::{
    microstrip_synthesize, s11_from_impedance, thin_dipole_impedance, to_db, DipoleDesign,
};

use super::{print_json, require_positive};
use crate::error::CliResult;
use crate::output::{csv_rows, Outputs};
use crate::OutputArgs;

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Design frequency (Hz).
    #[arg(long)]
    pub f0: f64,
    /// Substrate relative permittivity.
    #[arg(long, default_value_t = 11.45)]
    pub eps_r: f64,
    /// Single-ended feed-line impedance (ohm); the pair targets twice this.
    #[arg(long = "z0", default_value_t = 50.0)]
    pub z0: f64,
    /// Substrate height under the feed lines (m).
    #[arg(long, default_value_t = 0.30e-3)]
    pub h: f64,
    /// Feed gap between the dipole arms (m).
    #[arg(long, default_value_t = 0.03e-3)]
    pub gap: f64,
    /// Metal thickness (m).
    #[arg(long, default_value_t = 3.5e-6)]
    pub trace_thickness: f64,
    /// Points in the reference impedance table over f0 ± 10%.
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct DesignRow {
    f0_hz: f64,
    lambda0_m: f64,
    eps_r: f64,
    eps_eff: f64,
    length_m: f64,
    length_mm: f64,
    line_width_m: f64,
    line_spacing_m: f64,
    line_eps_eff: f64,
    z_odd_ohm: f64,
    z_diff_ohm: f64,
    gap_m: f64,
}

#[derive(Debug, Serialize)]
struct ImpedanceRow {
    frequency_hz: f64,
    zin_re: f64,
    zin_im: f64,
    s11_db: f64,
}

#[derive(Debug, Serialize)]
struct DesignSummary {
    design: DesignRow,
    /// Induced-EMF impedance of the free-space dipole with the same
    /// electrical length, referenced to twice the line impedance.
    reference_impedance: Vec<ImpedanceRow>,
    equivalent_length_m: f64,
    equivalent_radius_m: f64,
}

pub fn run(a: &DesignArgs) -> CliResult<()> {
    for (name, v) in [("f0", a.f0), ("eps-r", a.eps_r), ("z0", a.z0), ("h", a.h), ("gap", a.gap)] {
        require_positive(name, v)?;
    }
    if a.points < 2 {
        return Err(crate::error::CliError::usage("--points must be at least 2"));
    }
    let line = microstrip_synthesize(a.z0, a.eps_r, a.h)?;
    let d = DipoleDesign::analytic(a.f0, a.eps_r, a.gap, line.width, a.trace_thickness)?;
    // A flat strip of width w radiates like a round wire of radius w / 4.
    let scale = d.eps_eff.sqrt();
    let length = d.length * scale;
    let radius = line.width / 4.0;
    let z_ref = line.differential_impedance();
    let mut table = Vec::with_capacity(a.points);
    for k in 0..a.points {
        let f = a.f0 * (0.9 + 0.2 * k as f64 / (a.points - 1) as f64);
        let z = thin_dipole_impedance(length, radius, f)?;
        table.push(ImpedanceRow {
            frequency_hz: f,
            zin_re: z.re,
            zin_im: z.im,
            s11_db: to_db(s11_from_impedance(z, z_ref)?),
        });
    }
    let summary = DesignSummary {
        design: DesignRow {
            f0_hz: d.f0,
            lambda0_m: d.lambda0,
            eps_r: a.eps_r,
            eps_eff: d.eps_eff,
            length_m: d.length,
            length_mm: d.length * 1e3,
            line_width_m: line.width,
            line_spacing_m: line.spacing,
            line_eps_eff: line.eps_eff,
            z_odd_ohm: line.z_odd,
            z_diff_ohm: z_ref,
            gap_m: d.gap,
        },
        reference_impedance: table,
        equivalent_length_m: length,
        equivalent_radius_m: radius,
    };
    let mut out = Outputs::new(&a.output.out)?;
    out.write("design.csv", &csv_rows(std::slice::from_ref(&summary.design))?)?;
    out.write("reference_impedance.csv", &csv_rows(&summary.reference_impedance)?)?;
    out.finish(None, serde_json::to_value(&summary.design)?, "ok")?;
    if a.output.json {
        return print_json(&summary);
    }
    let r = &summary.design;
    println!("f0            {:.6e} Hz", r.f0_hz);
    println!("lambda0       {:.6} mm", r.lambda0_m * 1e3);
    println!("eps_eff       {}", r.eps_eff);
    println!("L             {:.6} mm", r.length_mm);
    println!("W             {:.4} mm", r.line_width_m * 1e3);
    println!("S             {:.4} mm", r.line_spacing_m * 1e3);
    println!("Z_diff        {:.2} ohm", r.z_diff_ohm);
    println!("gap           {:.4} mm", r.gap_m * 1e3);
    println!();
    println!("{:>12} {:>10} {:>10} {:>9}", "f (GHz)", "R (ohm)", "X (ohm)", "S11 (dB)");
    for z in &summary.reference_impedance {
        println!(
            "{:>12.4} {:>10.2} {:>10.2} {:>9.2}",
            z.frequency_hz / 1e9,
            z.zin_re,
            z.zin_im,
            z.s11_db
        );
    }
    Ok(())
}
