//! Engineering quantities from recorder output: impedance, S-parameters,
//! far fields, efficiency and gain.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{C0, ETA0};
use crate::error::{Error, Result};
use crate::fdtd::{NearFieldRecord, OhmicRecord, PortRecord, RunOutput};

/// Slack allowed on passivity and energy bounds.
pub const NUMERICAL_SLACK: f64 = 0.02;
/// Relative asymmetry of `S12` and `S21` above which reciprocity is flagged.
pub const RECIPROCITY_TOLERANCE: f64 = 0.01;
/// Currents below this fraction of the record's largest are treated as noise.
const CURRENT_FLOOR: f64 = 1e-9;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `Zin = V / I` per frequency; `None` where the current is below the noise floor.
///
/// `V` is the terminal voltage and `I` the current into the structure, so the
/// source and its series resistance are already outside the ratio.
pub fn port_impedance(record: &PortRecord) -> Vec<Option<Complex64>> {
    let peak = record.i.iter().map(|i| i.norm()).fold(0.0, f64::max);
    record
        .v
        .iter()
        .zip(&record.i)
        .map(|(&v, &i)| {
            if peak == 0.0 || i.norm() <= CURRENT_FLOOR * peak {
                None
            } else {
                Some(v / i)
            }
        })
        .collect()
}

/// Power waves `a = (V + R I) / 2√R`, `b = (V - R I) / 2√R`.
pub fn power_waves(v: Complex64, i: Complex64, r: f64) -> (Complex64, Complex64) {
    let s = 2.0 * r.sqrt();
    ((v + i * r) / s, (v - i * r) / s)
}

/// Reflection coefficient of a load `z` on reference `r`.
pub fn reflection(z: Complex64, r: f64) -> Complex64 {
    (z - r) / (z + r)
}

pub fn db20(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Scattering matrices `s[f][i][j]` over `port_ids` from as many runs as
/// ports, each with a different drive.
///
/// Incident and reflected waves of every port in every run form the columns
/// of `A` and `B`, and `S = B A^-1`, so terminations need not be perfectly
/// matched.
pub fn s_matrix(runs: &[&RunOutput], port_ids: &[u32]) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let n = port_ids.len();
    if runs.len() != n || n == 0 {
        return Err(Error::Config(format!(
            "an S-matrix over {n} ports needs {n} runs, got {}",
            runs.len()
        )));
    }
    let mut recs: Vec<Vec<&PortRecord>> = Vec::new();
    for run in runs {
        let mut col = Vec::new();
        for &id in port_ids {
            col.push(
                run.port(id)
                    .ok_or_else(|| Error::Config(format!("run has no record for port {id}")))?,
            );
        }
        recs.push(col);
    }
    let nf = recs[0][0].v.len();
    let mut out = Vec::with_capacity(nf);
    for f in 0..nf {
        let mut a = vec![vec![c0(); n]; n];
        let mut b = vec![vec![c0(); n]; n];
        for (j, col) in recs.iter().enumerate() {
            for (i, p) in col.iter().enumerate() {
                let (ai, bi) = power_waves(p.v[f], p.i[f], p.resistance);
                a[i][j] = ai;
                b[i][j] = bi;
            }
        }
        let inv = invert(&a).ok_or_else(|| {
            Error::Singular(format!("port drives are not independent at {:e} Hz", recs[0][0].frequencies[f]))
        })?;
        let s: Vec<Vec<Complex64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| b[i][k] * inv[k][j]).sum()).collect())
            .collect();
        out.push(s);
    }
    Ok(out)
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(m: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { c0() }).collect())
        .collect();
    let scale = m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm()))?;
        if a[p][c].norm() <= 1e-12 * scale {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let k = a[r][c];
                for j in 0..n {
                    let (x, y) = (a[c][j], inv[c][j]);
                    a[r][j] -= k * x;
                    inv[r][j] -= k * y;
                }
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedMode {
    pub sdd11: Complex64,
    /// `|S12 - S21|` exceeds the reciprocity tolerance.
    pub nonreciprocal: bool,
}

/// `Sdd11 = (S11 - S12 - S21 + S22) / 2`.
pub fn mixed_mode_sdd11(s: [[Complex64; 2]; 2]) -> MixedMode {
    let scale = s[0][1].norm().max(s[1][0].norm());
    let asym = (s[0][1] - s[1][0]).norm();
    MixedMode {
        sdd11: (s[0][0] - s[0][1] - s[1][0] + s[1][1]) / 2.0,
        nonreciprocal: scale > 1e-12 && asym > RECIPROCITY_TOLERANCE * scale,
    }
}

/// Differential reflection `b_d / a_d` of a pair driven in one run, `pos` being
/// the port whose source has positive weight.
pub fn differential_sdd11(pos: &PortRecord, neg: &PortRecord) -> Vec<Complex64> {
    (0..pos.v.len())
        .map(|f| {
            let (a1, b1) = power_waves(pos.v[f], pos.i[f], pos.resistance);
            let (a2, b2) = power_waves(neg.v[f], neg.i[f], neg.resistance);
            (b1 - b2) / (a1 - a2)
        })
        .collect()
}

/// Differential input impedance `(V1 - V2) / ((I1 - I2) / 2)`.
pub fn differential_impedance(pos: &PortRecord, neg: &PortRecord) -> Vec<Complex64> {
    (0..pos.v.len())
        .map(|f| (pos.v[f] - neg.v[f]) / ((pos.i[f] - neg.i[f]) / 2.0))
        .collect()
}

/// Time-averaged power `Σ Re(V I*) / 2` delivered into the structure by `ports`.
pub fn accepted_power(ports: &[&PortRecord]) -> Vec<f64> {
    let nf = ports.first().map_or(0, |p| p.v.len());
    (0..nf)
        .map(|f| ports.iter().map(|p| 0.5 * (p.v[f] * p.i[f].conj()).re).sum())
        .collect()
}

/// Index of `f` in `list` within a relative tolerance.
pub fn frequency_index(list: &[f64], f: f64) -> Option<usize> {
    list.iter().position(|&x| (x - f).abs() <= 1e-9 * f.abs().max(1.0))
}

/// Net outward Poynting flux `Re ∮ E × H* · n dS / 2` through the recording box.
pub fn poynting_flux(nf: &NearFieldRecord, fi: usize) -> f64 {
    let mut p = 0.0;
    for face in &nf.faces {
        let nv = face.v_centers.len();
        for (iu, du) in face.du.iter().enumerate() {
            for (iv, dv) in face.dv.iter().enumerate() {
                let s = iu * nv + iv;
                let sn = face.e_u[fi][s] * face.h_v[fi][s].conj() - face.e_v[fi][s] * face.h_u[fi][s].conj();
                p += face.normal * 0.5 * sn.re * du * dv;
            }
        }
    }
    p
}

/// Far-zone pattern on a regular `(θ, φ)` grid, θ in `[0, π]`, φ in `[0, 2π]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarField {
    pub frequency: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `r e^{jkr} E_θ`, indexed `[it * phi.len() + ip]`.
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    /// Radiation intensity (W/sr).
    pub intensity: Vec<f64>,
}

impl FarField {
    pub fn index(&self, it: usize, ip: usize) -> usize {
        it * self.phi.len() + ip
    }

    /// `∮ U dΩ` by the trapezoid rule with the `sin θ` weight.
    pub fn radiated_power(&self) -> f64 {
        let (nt, np) = (self.theta.len(), self.phi.len());
        let mut total = 0.0;
        for it in 0..nt {
            let wt = trapezoid_weight(&self.theta, it) * self.theta[it].sin();
            for ip in 0..np {
                total += wt * trapezoid_weight(&self.phi, ip) * self.intensity[self.index(it, ip)];
            }
        }
        total
    }

    /// `(U_max, θ, φ)`.
    pub fn max_intensity(&self) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for it in 0..self.theta.len() {
            for ip in 0..self.phi.len() {
                let u = self.intensity[self.index(it, ip)];
                if u > best.0 {
                    best = (u, self.theta[it], self.phi[ip]);
                }
            }
        }
        best
    }

    /// Peak directivity in dBi and its direction.
    pub fn directivity_dbi(&self) -> (f64, f64, f64) {
        let (u, t, p) = self.max_intensity();
        (10.0 * (4.0 * PI * u / self.radiated_power()).log10(), t, p)
    }

    /// Directivity (linear) toward grid point `(it, ip)`.
    pub fn directivity_at(&self, it: usize, ip: usize) -> f64 {
        4.0 * PI * self.intensity[self.index(it, ip)] / self.radiated_power()
    }
}

fn trapezoid_weight(x: &[f64], i: usize) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let lo = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
    let hi = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
    0.5 * (lo + hi)
}

/// Regular angle grid with `step` degrees, inclusive of both ends.
pub fn angle_grid(max_deg: f64, step_deg: f64) -> Vec<f64> {
    let n = (max_deg / step_deg).round() as usize;
    (0..=n).map(|i| (i as f64 * max_deg / n as f64).to_radians()).collect()
}

/// Near-to-far-field transform of the recorded box at frequency index `fi`.
///
/// Surface currents `J = n × H` and `M = -n × E` radiate into free space
/// around the box.
pub fn ntff(nf: &NearFieldRecord, fi: usize, step_deg: f64) -> Result<FarField> {
    if nf.faces.len() != 6 {
        return Err(Error::Config(format!(
            "near-field surface has {} faces; a closed box needs 6",
            nf.faces.len()
        )));
    }
    if !(step_deg > 0.0 && step_deg <= 90.0) {
        return Err(Error::Config(format!("angular step {step_deg} deg outside (0, 90]")));
    }
    let f = *nf
        .frequencies
        .get(fi)
        .ok_or_else(|| Error::Config(format!("no near-field frequency with index {fi}")))?;
    let k = 2.0 * PI * f / C0;
    let theta = angle_grid(180.0, step_deg);
    let phi = angle_grid(360.0, step_deg);

    // Cartesian J and M per face sample, weighted by the face area.
    struct Src {
        pos: [Vec<f64>; 2],
        axis: usize,
        coord: f64,
        j: [Vec<Complex64>; 3],
        m: [Vec<Complex64>; 3],
    }
    let sources: Vec<Src> = nf
        .faces
        .iter()
        .map(|face| {
            let a = face.axis;
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let n = face.normal;
            let cnt = face.u_centers.len() * face.v_centers.len();
            let mut j = [vec![c0(); cnt], vec![c0(); cnt], vec![c0(); cnt]];
            let mut m = [vec![c0(); cnt], vec![c0(); cnt], vec![c0(); cnt]];
            let nv = face.v_centers.len();
            for (iu, du) in face.du.iter().enumerate() {
                for (iv, dv) in face.dv.iter().enumerate() {
                    let s = iu * nv + iv;
                    let area = du * dv;
                    j[u][s] = -n * face.h_v[fi][s] * area;
                    j[v][s] = n * face.h_u[fi][s] * area;
                    m[u][s] = n * face.e_v[fi][s] * area;
                    m[v][s] = -n * face.e_u[fi][s] * area;
                }
            }
            Src {
                pos: [face.u_centers.clone(), face.v_centers.clone()],
                axis: a,
                coord: face.coord,
                j,
                m,
            }
        })
        .collect();

    let np = phi.len();
    let rows: Vec<Vec<(Complex64, Complex64, f64)>> = theta
        .par_iter()
        .map(|&t| {
            let (st, ct) = t.sin_cos();
            phi.iter()
                .map(|&p| {
                    let (sp, cp) = p.sin_cos();
                    let r = [st * cp, st * sp, ct];
                    let mut nv = [c0(); 3];
                    let mut lv = [c0(); 3];
                    for src in &sources {
                        let a = src.axis;
                        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
                        let base = Complex64::from_polar(1.0, k * r[a] * src.coord);
                        let pu: Vec<Complex64> =
                            src.pos[0].iter().map(|&x| Complex64::from_polar(1.0, k * r[u] * x)).collect();
                        let pv: Vec<Complex64> =
                            src.pos[1].iter().map(|&x| Complex64::from_polar(1.0, k * r[v] * x)).collect();
                        let mut acc = [c0(); 4];
                        for (iu, &eu) in pu.iter().enumerate() {
                            let mut row = [c0(); 4];
                            let off = iu * pv.len();
                            for (iv, &ev) in pv.iter().enumerate() {
                                let s = off + iv;
                                row[0] += src.j[u][s] * ev;
                                row[1] += src.j[v][s] * ev;
                                row[2] += src.m[u][s] * ev;
                                row[3] += src.m[v][s] * ev;
                            }
                            for q in 0..4 {
                                acc[q] += row[q] * eu;
                            }
                        }
                        nv[u] += acc[0] * base;
                        nv[v] += acc[1] * base;
                        lv[u] += acc[2] * base;
                        lv[v] += acc[3] * base;
                    }
                    let n_t = nv[0] * ct * cp + nv[1] * ct * sp - nv[2] * st;
                    let n_p = -nv[0] * sp + nv[1] * cp;
                    let l_t = lv[0] * ct * cp + lv[1] * ct * sp - lv[2] * st;
                    let l_p = -lv[0] * sp + lv[1] * cp;
                    let jk = Complex64::new(0.0, k / (4.0 * PI));
                    let e_t = -jk * (l_p + n_t * ETA0);
                    let e_p = jk * (l_t - n_p * ETA0);
                    let u_int = (e_t.norm_sqr() + e_p.norm_sqr()) / (2.0 * ETA0);
                    (e_t, e_p, u_int)
                })
                .collect()
        })
        .collect();
    let mut e_theta = Vec::with_capacity(theta.len() * np);
    let mut e_phi = Vec::with_capacity(theta.len() * np);
    let mut intensity = Vec::with_capacity(theta.len() * np);
    for row in rows {
        for (a, b, c) in row {
            e_theta.push(a);
            e_phi.push(b);
            intensity.push(c);
        }
    }
    Ok(FarField {
        frequency: f,
        theta,
        phi,
        e_theta,
        e_phi,
        intensity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyGain {
    /// Radiation efficiency `P_rad / P_accepted`.
    pub efficiency: f64,
    /// `1 - |Γ|^2`.
    pub mismatch: f64,
    /// Radiation efficiency times mismatch factor.
    pub total_efficiency: f64,
    pub gain_dbi: f64,
    pub realized_gain_dbi: f64,
}

pub fn efficiency_and_gain(
    p_rad: f64,
    p_accepted: f64,
    directivity_dbi: f64,
    gamma: Complex64,
) -> Result<EfficiencyGain> {
    if !(p_accepted > 0.0) {
        return Err(Error::Domain(format!("accepted power {p_accepted:e} W is not positive")));
    }
    if p_rad > p_accepted * (1.0 + NUMERICAL_SLACK) {
        return Err(Error::EnergyAccounting {
            radiated: p_rad,
            accepted: p_accepted,
        });
    }
    let efficiency = p_rad / p_accepted;
    let mismatch = 1.0 - gamma.norm_sqr();
    let gain_dbi = directivity_dbi + 10.0 * efficiency.log10();
    Ok(EfficiencyGain {
        efficiency,
        mismatch,
        total_efficiency: efficiency * mismatch,
        gain_dbi,
        realized_gain_dbi: gain_dbi + 10.0 * mismatch.log10(),
    })
}

/// One row of a frequency sweep. Power and pattern quantities exist only at
/// the near-field frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub frequency: f64,
    pub zin: Option<Complex64>,
    /// Reflection seen by the drive (`Sdd11` for a differential pair).
    pub reflection: Complex64,
    pub p_accepted: f64,
    pub p_radiated: Option<f64>,
    pub p_flux: Option<f64>,
    pub p_ohmic: Option<f64>,
    pub efficiency: Option<EfficiencyGain>,
    pub directivity_dbi: Option<f64>,
    /// Direction of maximum gain `(θ, φ)` in degrees.
    pub max_direction: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Bound violations and accounting problems, one message each.
    pub flags: Vec<String>,
}

impl SweepResult {
    /// Builds the sweep of a run driven through its active ports: a
    /// differential pair when two ports carry opposite weights, otherwise
    /// the single driven port.
    pub fn from_run(run: &RunOutput, step_deg: f64) -> Result<Self> {
        let driven: Vec<&PortRecord> = run.ports.iter().filter(|p| p.weight != 0.0).collect();
        let (z, gamma): (Vec<Option<Complex64>>, Vec<Complex64>) = match driven[..] {
            [p] => {
                let z = port_impedance(p);
                let g = (0..p.v.len())
                    .map(|f| {
                        let (a, b) = power_waves(p.v[f], p.i[f], p.resistance);
                        b / a
                    })
                    .collect();
                (z, g)
            }
            [p, q] if p.weight * q.weight < 0.0 => {
                let (pos, neg) = if p.weight > 0.0 { (p, q) } else { (q, p) };
                (
                    differential_impedance(pos, neg).into_iter().map(Some).collect(),
                    differential_sdd11(pos, neg),
                )
            }
            _ => {
                return Err(Error::Config(
                    "sweep needs one driven port or a pair driven with opposite signs".into(),
                ))
            }
        };
        let freqs = &driven[0].frequencies;
        let p_acc = accepted_power(&driven);
        let mut flags = Vec::new();
        let mut rows: Vec<SweepRow> = freqs
            .iter()
            .enumerate()
            .map(|(k, &f)| SweepRow {
                frequency: f,
                zin: z[k],
                reflection: gamma[k],
                p_accepted: p_acc[k],
                p_radiated: None,
                p_flux: None,
                p_ohmic: None,
                efficiency: None,
                directivity_dbi: None,
                max_direction: None,
            })
            .collect();
        for row in &rows {
            if row.reflection.norm() > 1.0 + NUMERICAL_SLACK {
                flags.push(format!(
                    "|S| = {:.4} exceeds 1 at {:.4} GHz",
                    row.reflection.norm(),
                    row.frequency / 1e9
                ));
            }
        }
        if let Some(o) = &run.ohmic {
            for row in &mut rows {
                row.p_ohmic = ohmic_at(o, row.frequency);
            }
        }
        if let Some(nf) = &run.near_field {
            for (fi, &f) in nf.frequencies.iter().enumerate() {
                let Some(k) = frequency_index(freqs, f) else {
                    flags.push(format!("near-field frequency {:.4} GHz has no port sample", f / 1e9));
                    continue;
                };
                let ff = ntff(nf, fi, step_deg)?;
                let p_rad = ff.radiated_power();
                let (d, t, p) = ff.directivity_dbi();
                let row = &mut rows[k];
                row.p_radiated = Some(p_rad);
                row.p_flux = Some(poynting_flux(nf, fi));
                row.directivity_dbi = Some(d);
                row.max_direction = Some((t.to_degrees(), p.to_degrees()));
                match efficiency_and_gain(p_rad, row.p_accepted, d, row.reflection) {
                    Ok(e) => row.efficiency = Some(e),
                    Err(e) => flags.push(format!("{:.4} GHz: {e}", f / 1e9)),
                }
            }
        }
        Ok(Self { rows, flags })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "frequency_hz,zin_re,zin_im,refl_re,refl_im,refl_db,p_accepted,p_radiated,p_flux,p_ohmic,\
             efficiency,mismatch,total_efficiency,directivity_dbi,realized_gain_dbi,max_theta_deg,max_phi_deg\n",
        );
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.9e}")).unwrap_or_default();
        for r in &self.rows {
            let e = r.efficiency;
            let _ = writeln!(
                s,
                "{:.6e},{},{},{:.9e},{:.9e},{:.6},{:.9e},{},{},{},{},{},{},{},{},{},{}",
                r.frequency,
                opt(r.zin.map(|z| z.re)),
                opt(r.zin.map(|z| z.im)),
                r.reflection.re,
                r.reflection.im,
                db20(r.reflection.norm()),
                r.p_accepted,
                opt(r.p_radiated),
                opt(r.p_flux),
                opt(r.p_ohmic),
                opt(e.map(|e| e.efficiency)),
                opt(e.map(|e| e.mismatch)),
                opt(e.map(|e| e.total_efficiency)),
                opt(r.directivity_dbi),
                opt(e.map(|e| e.realized_gain_dbi)),
                opt(r.max_direction.map(|d| d.0)),
                opt(r.max_direction.map(|d| d.1)),
            );
        }
        s
    }

    /// Frequency and depth (dB) of the deepest reflection dip.
    pub fn deepest_dip(&self) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.frequency, db20(r.reflection.norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn ohmic_at(o: &OhmicRecord, f: f64) -> Option<f64> {
    frequency_index(&o.frequencies, f).map(|i| o.power[i])
}

/// Port record as CSV: `frequency, Re V, Im V, Re I, Im I`.
pub fn port_csv(p: &PortRecord) -> String {
    let mut s = String::from("frequency_hz,v_re,v_im,i_re,i_im\n");
    for (k, f) in p.frequencies.iter().enumerate() {
        let _ = writeln!(s, "{f:.6e},{:.9e},{:.9e},{:.9e},{:.9e}", p.v[k].re, p.v[k].im, p.i[k].re, p.i[k].im);
    }
    s
}

/// Gain cut in the plane `φ = phi_deg` (nearest grid column) as CSV.
pub fn pattern_cut_csv(ff: &FarField, phi_deg: f64, efficiency: f64) -> String {
    let ip = nearest(&ff.phi, phi_deg.to_radians());
    let mut s = String::from("theta_deg,directivity_dbi,gain_dbi\n");
    for it in 0..ff.theta.len() {
        let d = 10.0 * ff.directivity_at(it, ip).max(1e-30).log10();
        let _ = writeln!(s, "{:.3},{:.6},{:.6}", ff.theta[it].to_degrees(), d, d + 10.0 * efficiency.log10());
    }
    s
}

fn nearest(x: &[f64], v: f64) -> usize {
    x.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
        .map_or(0, |(i, _)| i)
}

/// Frequency of the strongest spectral line of `samples` in `[lo, hi]`.
///
/// The record is Hann-windowed, scanned on a coarse grid and the best bin
/// refined by golden-section search on the DFT magnitude.
pub fn spectral_peak(samples: &[f32], dt: f64, lo: f64, hi: f64) -> Option<f64> {
    let n = samples.len();
    if n < 16 || !(hi > lo && lo > 0.0) {
        return None;
    }
    let windowed: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
            w * v as f64
        })
        .collect();
    let mag = |f: f64| {
        let (s, c) = (2.0 * PI * f * dt).sin_cos();
        let step = Complex64::new(c, -s);
        let mut ph = Complex64::new(1.0, 0.0);
        let mut acc = c0();
        for &x in &windowed {
            acc += ph * x;
            ph *= step;
        }
        acc.norm()
    };
    let bin = 0.25 / (n as f64 * dt);
    let count = (((hi - lo) / bin).ceil() as usize).clamp(8, 20_000);
    let df = (hi - lo) / count as f64;
    let (best, _) = (0..=count)
        .map(|k| (k, mag(lo + k as f64 * df)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let (mut a, mut b) = (lo + (best as f64 - 1.0).max(0.0) * df, lo + (best as f64 + 1.0) * df);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut m1, mut m2) = (mag(x1), mag(x2));
    while b - a > 1e-7 * df.max(1.0) {
        if m1 > m2 {
            b = x2;
            x2 = x1;
            m2 = m1;
            x1 = b - g * (b - a);
            m1 = mag(x1);
        } else {
            a = x1;
            x1 = x2;
            m1 = m2;
            x2 = a + g * (b - a);
            m2 = mag(x2);
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mixed_mode_reductions() {
        let z = mixed_mode_sdd11([[c0(); 2]; 2]);
        assert_eq!(z.sdd11, c0());
        assert!(!z.nonreciprocal);
        let (a, b) = (c(0.3, -0.1), c(0.05, 0.2));
        let m = mixed_mode_sdd11([[a, b], [b, a]]);
        assert_relative_eq!((m.sdd11 - (a - b)).norm(), 0.0, epsilon = 1e-15);
        let m = mixed_mode_sdd11([[a, b], [b * 1.05, a]]);
        assert!(m.nonreciprocal);
    }

    #[test]
    fn power_waves_of_matched_load() {
        // V = R I: nothing reflected.
        let (a, b) = power_waves(c(50.0, 0.0), c(1.0, 0.0), 50.0);
        assert_relative_eq!(b.norm(), 0.0);
        assert_relative_eq!(a.norm_sqr(), 50.0);
        assert_relative_eq!(reflection(c(150.0, 0.0), 50.0).re, 0.5);
    }

    #[test]
    fn peak_of_damped_tone() {
        let dt = 1e-12;
        let f0 = 29.137e9;
        let x: Vec<f32> = (0..20_000)
            .map(|k| {
                let t = k as f64 * dt;
                ((2.0 * PI * f0 * t).sin() * (-t / 5e-9).exp() + 0.3 * (2.0 * PI * 24e9 * t).cos()) as f32
            })
            .collect();
        let f = spectral_peak(&x, dt, 26e9, 32e9).unwrap();
        assert!((f - f0).abs() < 2e6, "{f}");
    }

    #[test]
    fn inverse_of_two_by_two() {
        let m = vec![vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, -1.0), c(3.0, 0.5)]];
        let inv = invert(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e: Complex64 = (0..2).map(|k| m[i][k] * inv[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!((e - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
        assert!(invert(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).is_none());
    }

    #[test]
    fn efficiency_bounds() {
        let e = efficiency_and_gain(0.9, 1.0, 2.0, c0()).unwrap();
        assert_relative_eq!(e.realized_gain_dbi, e.gain_dbi);
        assert_relative_eq!(e.efficiency, 0.9);
        assert!(matches!(
            efficiency_and_gain(1.05, 1.0, 2.0, c0()),
            Err(Error::EnergyAccounting { .. })
        ));
        assert!(efficiency_and_gain(1.0, 0.0, 2.0, c0()).is_err());
    }

    #[test]
    fn angle_grid_ends() {
        let g = angle_grid(180.0, 1.0);
        assert_eq!(g.len(), 181);
        assert_relative_eq!(g[180], PI);
    }
}
