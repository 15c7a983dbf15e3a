//! One-dimensional FDTD line (Ez, Hy along x) sharing the 3-D CPML and
//! loss discretization, used to measure boundary reflection and lumped-load
//! behaviour against transmission-line theory.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::cpml::{AxisProfile, CpmlConfig};
use super::waveform::{ModulatedGaussian, Waveform};
use crate::constants::{C0, EPS0, MU0};

#[derive(Debug, Clone)]
pub struct Line1d {
    pub cells: usize,
    pub dx: f64,
    pub cpml_cells: usize,
    pub cpml: CpmlConfig,
    /// Extra conductivity per node (S/m).
    pub sigma: Vec<f64>,
}

impl Line1d {
    pub fn new(cells: usize, dx: f64, cpml_cells: usize, cpml: CpmlConfig) -> Self {
        let n = cells + 2 * cpml_cells;
        Self {
            cells,
            dx,
            cpml_cells,
            cpml,
            sigma: vec![0.0; n + 1],
        }
    }

    pub fn nodes(&self) -> usize {
        self.cells + 2 * self.cpml_cells + 1
    }

    pub fn dt(&self) -> f64 {
        0.99 * self.dx / C0
    }

    /// Runs `steps` with a soft `Ez` source at node `src`; returns the `Ez` history at `probe`.
    pub fn run(&self, src: usize, probe: usize, steps: usize, pulse: &dyn Waveform) -> Vec<f64> {
        let n = self.nodes() - 1;
        let dt = self.dt();
        let lines: Vec<f64> = (0..=n).map(|i| i as f64 * self.dx).collect();
        let prof = AxisProfile::new(&lines, [self.cpml_cells; 2], &self.cpml, dt);
        let mut ez = vec![0.0f64; n + 1];
        let mut hy = vec![0.0f64; n];
        let mut psi_e = vec![0.0f64; n + 1];
        let mut psi_h = vec![0.0f64; n];
        let ca: Vec<f64> = self
            .sigma
            .iter()
            .map(|&s| {
                let r = s * dt / (2.0 * EPS0);
                (1.0 - r) / (1.0 + r)
            })
            .collect();
        let cb: Vec<f64> = self
            .sigma
            .iter()
            .map(|&s| dt / EPS0 / (1.0 + s * dt / (2.0 * EPS0)))
            .collect();
        let ch = dt / MU0;
        let mut out = Vec::with_capacity(steps);
        for step in 0..steps {
            for i in 0..n {
                let d = (ez[i + 1] - ez[i]) / self.dx;
                let p = prof.cell[i];
                psi_h[i] = p.b * psi_h[i] + p.c * d;
                hy[i] += ch * (d / p.kappa + psi_h[i]);
            }
            for i in 1..n {
                let d = (hy[i] - hy[i - 1]) / self.dx;
                let p = prof.node[i];
                psi_e[i] = p.b * psi_e[i] + p.c * d;
                ez[i] = ca[i] * ez[i] + cb[i] * (d / p.kappa + psi_e[i]);
            }
            ez[src] += pulse.value((step as f64 + 1.0) * dt);
            out.push(ez[probe]);
        }
        out
    }
}

pub fn dft(signal: &[f64], dt: f64, f: f64) -> Complex64 {
    signal
        .iter()
        .enumerate()
        .map(|(n, &v)| Complex64::from_polar(v * dt, -2.0 * PI * f * n as f64 * dt))
        .sum()
}

/// Worst reflection (dB) over `freqs` of an `n`-cell CPML at normal incidence.
pub fn cpml_reflection_db(cpml_cells: usize, cfg: CpmlConfig, dx: f64, freqs: &[f64]) -> f64 {
    let pulse = ModulatedGaussian::new(28e9, 4e9);
    let interior = 200;
    let src = cpml_cells + 100;
    let probe = cpml_cells + 150;
    let line = Line1d::new(interior, dx, cpml_cells, cfg);
    let steps = 8000;
    let test = line.run(src, probe, steps, &pulse);
    // Reference: a line long enough that nothing returns within the window.
    let pad = steps;
    let long = Line1d::new(interior + 2 * pad, dx, cpml_cells, cfg);
    let reference = long.run(src + pad, probe + pad, steps, &pulse);
    let refl: Vec<f64> = test.iter().zip(&reference).map(|(a, b)| a - b).collect();
    let dt = line.dt();
    freqs
        .iter()
        .map(|&f| 20.0 * (dft(&refl, dt, f).norm() / dft(&reference, dt, f).norm()).log10())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ETA0;

    fn band() -> Vec<f64> {
        (0..=16).map(|i| 24e9 + 0.5e9 * i as f64).collect()
    }

    #[test]
    fn cpml_eight_cells_below_minus_40_db() {
        let r8 = cpml_reflection_db(8, CpmlConfig::default(), 0.5e-3, &band());
        assert!(r8 < -40.0, "{r8}");
        let r12 = cpml_reflection_db(12, CpmlConfig::default(), 0.5e-3, &band());
        assert!(r12 <= r8, "{r12} vs {r8}");
    }

    #[test]
    fn transparent_cpml_is_vacuum() {
        let pulse = ModulatedGaussian::new(28e9, 4e9);
        let mut a = Line1d::new(100, 0.5e-3, 8, CpmlConfig::transparent());
        let b = Line1d::new(116, 0.5e-3, 0, CpmlConfig::transparent());
        let ta = a.run(50, 70, 2000, &pulse);
        let tb = b.run(50, 70, 2000, &pulse);
        assert_eq!(ta, tb);
        a.cpml.kappa_max = 1.0;
        assert_eq!(a.run(50, 70, 2000, &pulse), tb);
    }

    #[test]
    fn resistive_sheet_matches_line_theory() {
        // Shunt sheet of conductance G on a line of impedance eta0:
        // Gamma = -G eta0 / (2 + G eta0).
        let dx = 0.25e-3;
        let pulse = ModulatedGaussian::new(28e9, 4e9);
        let (cp, n) = (10, 400);
        let sheet = cp + 300;
        let (src, probe) = (cp + 100, cp + 200);
        let g_sheet = 1.0 / 100.0;
        let mut line = Line1d::new(n, dx, cp, CpmlConfig::default());
        line.sigma[sheet] = g_sheet / dx;
        let steps = 6000;
        let with = line.run(src, probe, steps, &pulse);
        let pad = steps;
        let long = Line1d::new(n + 2 * pad, dx, cp, CpmlConfig::default());
        let inc = long.run(src + pad, probe + pad, steps, &pulse);
        let refl: Vec<f64> = with.iter().zip(&inc).map(|(a, b)| a - b).collect();
        let expect = -g_sheet * ETA0 / (2.0 + g_sheet * ETA0);
        let dt = line.dt();
        for f in [26e9, 28e9, 30e9] {
            let gamma = dft(&refl, dt, f) / dft(&inc, dt, f);
            // Reference plane shift from the probe to the sheet and back.
            let k = 2.0 * PI * f / C0;
            let gamma = gamma * Complex64::from_polar(1.0, 2.0 * k * (sheet - probe) as f64 * dx);
            assert!((gamma.norm() - expect.abs()).abs() < 0.02 * expect.abs(), "{f} {gamma}");
        }
    }
}
