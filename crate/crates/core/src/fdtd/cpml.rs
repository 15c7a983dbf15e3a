//! Convolutional PML profiles (complex-frequency-shifted, polynomial grading).

use serde::{Deserialize, Serialize};

use crate::constants::{EPS0, ETA0};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpmlConfig {
    /// Polynomial grading order of sigma and kappa.
    pub order: f64,
    /// Multiplier on `sigma_opt = 0.8 (m + 1) / (eta0 d)`.
    pub sigma_scale: f64,
    pub kappa_max: f64,
    /// Complex frequency shift at the inner interface (S/m), decaying linearly to zero.
    pub alpha_max: f64,
}

impl Default for CpmlConfig {
    fn default() -> Self {
        Self {
            order: 3.0,
            sigma_scale: 1.0,
            kappa_max: 3.0,
            alpha_max: 0.05,
        }
    }
}

impl CpmlConfig {
    /// Identity layer: no stretching, no loss.
    pub fn transparent() -> Self {
        Self {
            order: 3.0,
            sigma_scale: 0.0,
            kappa_max: 1.0,
            alpha_max: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.order >= 1.0 && self.sigma_scale >= 0.0 && self.kappa_max >= 1.0 && self.alpha_max >= 0.0) {
            return Err(Error::Config(format!("invalid CPML parameters {self:?}")));
        }
        Ok(())
    }

    /// Coefficients at fractional depth `rho` (0 at the interface, 1 at the outer wall).
    pub fn coefficients(&self, rho: f64, cell: f64, dt: f64) -> CpmlCoeff {
        let rho = rho.clamp(0.0, 1.0);
        let g = rho.powf(self.order);
        let sigma = self.sigma_scale * 0.8 * (self.order + 1.0) / (ETA0 * cell) * g;
        let kappa = 1.0 + (self.kappa_max - 1.0) * g;
        let alpha = self.alpha_max * (1.0 - rho);
        let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
        let denom = sigma * kappa + alpha * kappa * kappa;
        let c = if denom > 0.0 { sigma / denom * (b - 1.0) } else { 0.0 };
        CpmlCoeff { kappa, b, c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmlCoeff {
    pub kappa: f64,
    pub b: f64,
    pub c: f64,
}

impl CpmlCoeff {
    pub const IDENTITY: CpmlCoeff = CpmlCoeff {
        kappa: 1.0,
        b: 1.0,
        c: 0.0,
    };
}

/// Profiles along one axis: per node (E derivatives) and per cell (H derivatives).
#[derive(Debug, Clone)]
pub struct AxisProfile {
    pub node: Vec<CpmlCoeff>,
    pub cell: Vec<CpmlCoeff>,
    /// Node ranges holding E auxiliaries, low and high side.
    pub node_slabs: [std::ops::Range<usize>; 2],
    /// Cell ranges holding H auxiliaries.
    pub cell_slabs: [std::ops::Range<usize>; 2],
}

impl AxisProfile {
    pub fn new(lines: &[f64], cpml: [usize; 2], cfg: &CpmlConfig, dt: f64) -> Self {
        let n = lines.len() - 1;
        let mut node = vec![CpmlCoeff::IDENTITY; n + 1];
        let mut cell = vec![CpmlCoeff::IDENTITY; n];
        let (l0, l1) = (cpml[0], n - cpml[1]);
        if cpml[0] > 0 {
            let thick = lines[l0] - lines[0];
            let d = thick / cpml[0] as f64;
            for i in 0..l0 {
                node[i] = cfg.coefficients((lines[l0] - lines[i]) / thick, d, dt);
                let mid = 0.5 * (lines[i] + lines[i + 1]);
                cell[i] = cfg.coefficients((lines[l0] - mid) / thick, d, dt);
            }
        }
        if cpml[1] > 0 {
            let thick = lines[n] - lines[l1];
            let d = thick / cpml[1] as f64;
            for i in l1 + 1..=n {
                node[i] = cfg.coefficients((lines[i] - lines[l1]) / thick, d, dt);
            }
            for i in l1..n {
                let mid = 0.5 * (lines[i] + lines[i + 1]);
                cell[i] = cfg.coefficients((mid - lines[l1]) / thick, d, dt);
            }
        }
        let lo_nodes = if cpml[0] > 0 { 1..l0 } else { 0..0 };
        let hi_nodes = if cpml[1] > 0 { l1 + 1..n } else { n..n };
        Self {
            node,
            cell,
            node_slabs: [lo_nodes, hi_nodes],
            cell_slabs: [0..cpml[0], l1..n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transparent_is_identity() {
        let c = CpmlConfig::transparent().coefficients(0.7, 1e-4, 1e-13);
        assert_eq!(c, CpmlCoeff::IDENTITY);
    }

    #[test]
    fn grading_is_monotone() {
        let cfg = CpmlConfig::default();
        let mut last = cfg.coefficients(0.0, 1e-4, 1e-13);
        for i in 1..=10 {
            let c = cfg.coefficients(i as f64 / 10.0, 1e-4, 1e-13);
            assert!(c.kappa >= last.kappa && c.b <= last.b + 1e-15);
            last = c;
        }
    }
}
