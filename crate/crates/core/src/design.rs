//! Closed-form design equations for the on-chip dipole and its feed, plus an
//! induced-EMF impedance model of a thin free-space dipole that serves as an
//! independent reference for the time-domain solver.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C0, ETA0};
use crate::error::{Error, Result};
use crate::special::sici;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Reference impedance per single-ended port (ohm).
pub const DEFAULT_PORT_IMPEDANCE: f64 = 50.0;
/// Reference impedance of a differential port pair (ohm).
pub const DEFAULT_DIFFERENTIAL_IMPEDANCE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleDesign {
    pub f0: f64,
    pub lambda0: f64,
    pub eps_eff: f64,
    /// Total dipole length (m).
    pub length: f64,
    /// Feed gap between the arms (m).
    pub gap: f64,
    pub arm_width: f64,
    pub trace_thickness: f64,
}

impl DipoleDesign {
    /// Analytic half-wave design for a dipole on a substrate of permittivity `eps_r`.
    pub fn analytic(f0: f64, eps_r: f64, gap: f64, arm_width: f64, trace_thickness: f64) -> Result<Self> {
        let length = halfwave_dipole_length(f0, eps_r)?;
        if !(gap > 0.0) || !(arm_width > 0.0) {
            return Err(Error::Domain("gap and arm width must be positive".into()));
        }
        Ok(Self {
            f0,
            lambda0: C0 / f0,
            eps_eff: effective_permittivity(eps_r)?,
            length,
            gap,
            arm_width,
            trace_thickness,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrostripDesign {
    pub z0_target: f64,
    /// Line width (m).
    pub width: f64,
    /// Spacing of the edge-coupled pair (m).
    pub spacing: f64,
    /// Substrate height (m).
    pub height: f64,
    pub eps_r: f64,
    /// Quasi-static effective permittivity of the single line.
    pub eps_eff: f64,
    /// Odd-mode impedance of the coupled pair (ohm).
    pub z_odd: f64,
}

impl MicrostripDesign {
    pub fn differential_impedance(&self) -> f64 {
        2.0 * self.z_odd
    }
}

/// `(eps_r + 1) / 2`, the effective permittivity seen by a trace on a substrate.
pub fn effective_permittivity(eps_r: f64) -> Result<f64> {
    if !(eps_r >= 1.0) {
        return Err(Error::Domain(format!(
            "relative permittivity must be >= 1, got {eps_r}"
        )));
    }
    Ok((eps_r + 1.0) / 2.0)
}

/// Resonant length `lambda0 / (2 sqrt(eps_eff))`.
pub fn halfwave_dipole_length(f0: f64, eps_r: f64) -> Result<f64> {
    if !(f0 > 0.0) || !f0.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {f0}")));
    }
    let eps_eff = effective_permittivity(eps_r)?;
    Ok((C0 / f0) / (2.0 * eps_eff.sqrt()))
}

/// Input impedance of a centre-fed thin dipole by the induced-EMF method
/// (sinusoidal current distribution), referred to the feed point.
pub fn thin_dipole_impedance(length: f64, wire_radius: f64, f: f64) -> Result<Complex64> {
    if !(length > 0.0) || !(f > 0.0) || !(wire_radius > 0.0) {
        return Err(Error::Domain(
            "length, radius and frequency must be positive".into(),
        ));
    }
    let limit = length / 20.0;
    if wire_radius >= limit {
        return Err(Error::ThinWire {
            radius: wire_radius,
            limit,
        });
    }
    let k = 2.0 * PI * f / C0;
    let kl = k * length;
    let (si1, ci1) = sici(kl);
    let (si2, ci2) = sici(2.0 * kl);
    let (_, ci_a) = sici(2.0 * k * wire_radius * wire_radius / length);
    let (s, c) = kl.sin_cos();
    // radiation resistance referred to the current maximum
    let r_max = ETA0 / (2.0 * PI)
        * (EULER_GAMMA + kl.ln() - ci1
            + 0.5 * s * (si2 - 2.0 * si1)
            + 0.5 * c * (EULER_GAMMA + (kl / 2.0).ln() + ci2 - 2.0 * ci1));
    let x_max = ETA0 / (4.0 * PI)
        * (2.0 * si1 + c * (2.0 * si1 - si2) - s * (2.0 * ci1 - ci2 - ci_a));
    let feed = (kl / 2.0).sin().powi(2);
    if feed < 1e-12 {
        return Err(Error::Singular(
            "feed point at a current null (length is a multiple of a wavelength)".into(),
        ));
    }
    Ok(Complex64::new(r_max / feed, x_max / feed))
}

/// Quasi-static Hammerstad analysis of a single microstrip:
/// returns `(z0, eps_eff)` for width `w` over height `h`.
pub fn microstrip_analyze(w: f64, h: f64, eps_r: f64) -> Result<(f64, f64)> {
    if !(w > 0.0) || !(h > 0.0) {
        return Err(Error::Domain("width and height must be positive".into()));
    }
    effective_permittivity(eps_r)?;
    let u = w / h;
    let eps_eff = (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 / u).sqrt();
    let z0 = if u <= 1.0 {
        60.0 / eps_eff.sqrt() * (8.0 / u + u / 4.0).ln()
    } else {
        120.0 * PI / (eps_eff.sqrt() * (u + 1.393 + 0.667 * (u + 1.444).ln()))
    };
    Ok((z0, eps_eff))
}

/// Closed-form Wheeler/Hammerstad width estimate `W/h` for a target `z0`.
fn wheeler_width_ratio(z0: f64, eps_r: f64) -> f64 {
    let a = z0 / 60.0 * ((eps_r + 1.0) / 2.0).sqrt()
        + (eps_r - 1.0) / (eps_r + 1.0) * (0.23 + 0.11 / eps_r);
    let narrow = 8.0 * a.exp() / ((2.0 * a).exp() - 2.0);
    if narrow < 2.0 {
        return narrow;
    }
    let b = 377.0 * PI / (2.0 * z0 * eps_r.sqrt());
    2.0 / PI
        * (b - 1.0 - (2.0 * b - 1.0).ln()
            + (eps_r - 1.0) / (2.0 * eps_r) * ((b - 1.0).ln() + 0.39 - 0.61 / eps_r))
}

/// Odd-mode impedance of an edge-coupled pair, `z0 (1 - 0.48 exp(-0.96 S/h))`.
pub fn coupled_odd_impedance(z0_single: f64, spacing: f64, h: f64) -> f64 {
    z0_single * (1.0 - 0.48 * (-0.96 * spacing / h).exp())
}

/// Coupling allowance for the pair: odd-mode impedance within 5% of the single line.
const COUPLING_ALLOWANCE: f64 = 0.05;

/// Synthesizes a microstrip line for `z0_target` and the spacing of an
/// edge-coupled differential pair built from two such lines.
///
/// The width starts from the Wheeler estimate and is refined by bisection on
/// the Hammerstad analysis formula. The spacing is the smallest `S` for which
/// the odd-mode impedance stays within 5% of the single-line impedance, so the
/// differential impedance is close to `2 z0_target`.
pub fn microstrip_synthesize(z0_target: f64, eps_r: f64, h: f64) -> Result<MicrostripDesign> {
    if !(10.0..=250.0).contains(&z0_target) {
        return Err(Error::Domain(format!(
            "target impedance must lie in [10, 250] ohm, got {z0_target}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Domain("substrate height must be positive".into()));
    }
    effective_permittivity(eps_r)?;
    let guess = wheeler_width_ratio(z0_target, eps_r);
    // z0 decreases monotonically with W/h; bracket around the guess.
    let f = |u: f64| -> f64 { microstrip_analyze(u * h, h, eps_r).map(|r| r.0).unwrap_or(f64::NAN) - z0_target };
    let mut lo = guess.max(1e-6) / 4.0;
    let mut hi = guess.max(1e-6) * 4.0;
    for _ in 0..60 {
        if f(lo) > 0.0 {
            break;
        }
        lo /= 2.0;
    }
    for _ in 0..60 {
        if f(hi) < 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(Error::Convergence {
            what: "microstrip width bracket".into(),
            residual: f(guess),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-13 * mid {
            break;
        }
    }
    let u = 0.5 * (lo + hi);
    let residual = f(u);
    if residual.abs() > 1e-6 * z0_target {
        return Err(Error::Convergence {
            what: "microstrip width".into(),
            residual,
        });
    }
    let width = u * h;
    let (z0, eps_eff) = microstrip_analyze(width, h, eps_r)?;
    let spacing = h / 0.96 * (0.48 / COUPLING_ALLOWANCE).ln();
    Ok(MicrostripDesign {
        z0_target,
        width,
        spacing,
        height: h,
        eps_r,
        eps_eff,
        z_odd: coupled_odd_impedance(z0, spacing, h),
    })
}

/// Reflection coefficient `(Zin - Z0) / (Zin + Z0)`.
pub fn s11_from_impedance(zin: Complex64, z0: f64) -> Result<Complex64> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("reference impedance must be positive, got {z0}")));
    }
    let den = zin + z0;
    if den.norm() < 1e-12 * z0 {
        return Err(Error::Singular("Zin = -Z0".into()));
    }
    Ok((zin - z0) / den)
}

/// `20 log10 |gamma|`; `-inf` for a perfect match.
pub fn to_db(gamma: Complex64) -> f64 {
    20.0 * gamma.norm().log10()
}
