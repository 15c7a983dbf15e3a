//! Physical constants shared by every module.

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.8541878128e-12;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.25663706212e-6;
/// Speed of light in vacuum (m/s).
pub const C0: f64 = 2.99792458e8;
/// Wave impedance of free space (ohm), derived from `MU0` and `EPS0`.
pub const ETA0: f64 = 376.730313668;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta0_consistent_with_mu0_eps0() {
        let eta = (MU0 / EPS0).sqrt();
        assert!((eta - ETA0).abs() / ETA0 < 1e-9);
        let c = 1.0 / (MU0 * EPS0).sqrt();
        assert!((c - C0).abs() / C0 < 1e-9);
    }
}
