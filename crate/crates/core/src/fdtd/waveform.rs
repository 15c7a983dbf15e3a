//! Excitation waveforms.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time signal driving sources, with unit peak amplitude.
pub trait Waveform: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;
    fn value(&self, t: f64) -> f64;
    /// Time after which the signal is negligible (below 1e-9 of peak).
    fn end_time(&self) -> f64;
}

/// `-20 dB` half-width to Gaussian time constant for a modulated pulse.
fn tau_for(bandwidth: f64) -> f64 {
    10f64.ln().sqrt() / (PI * bandwidth)
}

/// Sine-modulated Gaussian `exp(-((t-t0)/tau)^2) sin(2 pi fc (t-t0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedGaussian {
    pub f_center: f64,
    pub tau: f64,
    pub t0: f64,
}

impl ModulatedGaussian {
    /// Spectrum `-20 dB` at `f_center ± bandwidth`.
    pub fn new(f_center: f64, bandwidth: f64) -> Self {
        let tau = tau_for(bandwidth);
        Self {
            f_center,
            tau,
            t0: 4.5 * tau,
        }
    }
}

impl Waveform for ModulatedGaussian {
    fn name(&self) -> &'static str {
        "modulated-gaussian"
    }
    fn value(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.tau;
        (-u * u).exp() * (2.0 * PI * self.f_center * (t - self.t0)).sin()
    }
    fn end_time(&self) -> f64 {
        2.0 * self.t0
    }
}

/// First derivative of a Gaussian, normalized to unit peak; spectral peak at `f_center`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDerivative {
    pub tau: f64,
    pub t0: f64,
}

impl GaussianDerivative {
    pub fn new(f_center: f64) -> Self {
        let tau = 1.0 / (2f64.sqrt() * PI * f_center);
        Self { tau, t0: 4.5 * tau }
    }
}

impl Waveform for GaussianDerivative {
    fn name(&self) -> &'static str {
        "gaussian-derivative"
    }
    fn value(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.tau;
        -(2.0 * std::f64::consts::E).sqrt() * u * (-u * u).exp()
    }
    fn end_time(&self) -> f64 {
        2.0 * self.t0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformKind {
    ModulatedGaussian,
    GaussianDerivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub kind: WaveformKind,
    pub f_center: f64,
    /// Half-width to the `-20 dB` points.
    pub bandwidth: f64,
}

impl Default for Excitation {
    fn default() -> Self {
        Self {
            kind: WaveformKind::ModulatedGaussian,
            f_center: 28e9,
            bandwidth: 8e9,
        }
    }
}

impl Excitation {
    pub fn build(&self) -> Result<Arc<dyn Waveform>> {
        if !(self.f_center > 0.0 && self.bandwidth > 0.0) {
            return Err(Error::Config("excitation needs positive centre and bandwidth".into()));
        }
        Ok(match self.kind {
            WaveformKind::ModulatedGaussian => {
                Arc::new(ModulatedGaussian::new(self.f_center, self.bandwidth))
            }
            WaveformKind::GaussianDerivative => Arc::new(GaussianDerivative::new(self.f_center)),
        })
    }

    pub fn f_max(&self) -> f64 {
        self.f_center + self.bandwidth
    }
}

pub fn waveform_names() -> [&'static str; 2] {
    ["modulated-gaussian", "gaussian-derivative"]
}

pub fn waveform_kind(name: &str) -> Result<WaveformKind> {
    match name {
        "modulated-gaussian" => Ok(WaveformKind::ModulatedGaussian),
        "gaussian-derivative" => Ok(WaveformKind::GaussianDerivative),
        _ => Err(Error::UnknownName {
            kind: "waveform",
            name: name.into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn spectrum(w: &dyn Waveform, f: f64) -> f64 {
        let dt = 1e-13;
        let n = (w.end_time() / dt) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                Complex64::from_polar(w.value(t) * dt, -2.0 * PI * f * t)
            })
            .sum::<Complex64>()
            .norm()
    }

    #[test]
    fn band_edges_at_minus_20_db() {
        let w = ModulatedGaussian::new(28e9, 4e9);
        assert!((w.tau - 1.2075e-10).abs() < 1e-13);
        let peak = spectrum(&w, 28e9);
        for f in [24e9, 32e9] {
            let db = 20.0 * (spectrum(&w, f) / peak).log10();
            assert!((db + 20.0).abs() < 0.2, "{f} {db}");
        }
        assert!(w.value(0.0).abs() < 1e-8 && w.value(w.end_time()).abs() < 1e-8);
    }

    #[test]
    fn derivative_peaks_at_center() {
        let w = GaussianDerivative::new(28e9);
        let s: Vec<f64> = [24e9, 28e9, 32e9].iter().map(|&f| spectrum(&w, f)).collect();
        assert!(s[1] > s[0] && s[1] > s[2]);
        let peak = (0..8000).map(|i| w.value(i as f64 * 1e-14).abs()).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-3);
    }
}
