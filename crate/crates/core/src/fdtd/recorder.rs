//! Running DFT recorders.

use num_complex::Complex64;
use serde::Serialize;

use super::{phasor, FieldProbe};
use crate::error::{Error, Result};
use crate::grid::YeeGrid;

/// `X(f) = Σ x(t) e^{-j 2π f t} w` over the recorded samples.
#[derive(Debug, Clone)]
pub struct SpectralAccumulator {
    freqs: Vec<f64>,
    values: Vec<Complex64>,
}

impl SpectralAccumulator {
    pub fn new(freqs: &[f64]) -> Self {
        Self {
            freqs: freqs.to_vec(),
            values: vec![Complex64::new(0.0, 0.0); freqs.len()],
        }
    }

    pub fn add(&mut self, x: f64, t: f64, weight: f64) {
        if x == 0.0 {
            return;
        }
        for (v, &f) in self.values.iter_mut().zip(&self.freqs) {
            *v += phasor(f, t) * (x * weight);
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortRecord {
    pub port_id: u32,
    pub frequencies: Vec<f64>,
    /// Spectrum of the terminal voltage.
    pub v: Vec<Complex64>,
    /// Spectrum of the current delivered into the structure.
    pub i: Vec<Complex64>,
    pub resistance: f64,
    /// Source weight used in this run (0 for a passive termination).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub probe: FieldProbe,
    pub frequencies: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    /// E at every step.
    pub samples: Vec<f32>,
}

pub(crate) struct ProbeSet {
    probes: Vec<(FieldProbe, usize, usize, SpectralAccumulator, Vec<f32>)>,
    freqs: Vec<f64>,
}

impl ProbeSet {
    pub(crate) fn new(grid: &YeeGrid, probes: &[FieldProbe], freqs: &[f64]) -> Result<Self> {
        let n = grid.dims();
        let mut out = Vec::new();
        for p in probes {
            let c = p.axis.index();
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                ijk[a] = if a == c {
                    grid.lines[a]
                        .partition_point(|&x| x <= p.position[a])
                        .saturating_sub(1)
                        .min(n[a] - 1)
                } else {
                    grid.nearest_line(a, p.position[a])
                };
            }
            if (0..3).any(|a| a != c && (ijk[a] == 0 || ijk[a] == n[a])) {
                return Err(Error::Geometry("field probe lies on the outer wall".into()));
            }
            out.push((*p, c, grid.index(ijk[0], ijk[1], ijk[2]), SpectralAccumulator::new(freqs), Vec::new()));
        }
        Ok(Self {
            probes: out,
            freqs: freqs.to_vec(),
        })
    }

    pub(crate) fn record(&mut self, e: &[Vec<f32>; 3], t: f64, dt: f64) {
        for (_, c, idx, acc, s) in &mut self.probes {
            let v = e[*c][*idx];
            acc.add(v as f64, t, dt);
            s.push(v);
        }
    }

    pub(crate) fn finish(self) -> Vec<ProbeRecord> {
        self.probes
            .into_iter()
            .map(|(probe, _, _, acc, samples)| ProbeRecord {
                probe,
                frequencies: self.freqs.clone(),
                spectrum: acc.values,
                samples,
            })
            .collect()
    }
}

/// Tangential field phasors on one face of the recording box, sampled at
/// face centres. Axes `u = (axis + 1) % 3`, `v = (axis + 2) % 3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceRecord {
    pub axis: usize,
    /// Outward normal sign along `axis`.
    pub normal: f64,
    pub coord: f64,
    pub u_centers: Vec<f64>,
    pub v_centers: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    /// Per frequency, samples indexed `iu * v_centers.len() + iv`.
    pub e_u: Vec<Vec<Complex64>>,
    pub e_v: Vec<Vec<Complex64>>,
    pub h_u: Vec<Vec<Complex64>>,
    pub h_v: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearFieldRecord {
    pub frequencies: Vec<f64>,
    pub faces: Vec<FaceRecord>,
    /// Box corners.
    pub min: [f64; 3],
    pub max: [f64; 3],
}

struct FacePlan {
    axis: usize,
    line: usize,
    u0: usize,
    v0: usize,
    nu: usize,
    nv: usize,
    /// Interpolation weights of the cells below and above the plane.
    w_lo: f32,
    w_hi: f32,
}

pub(crate) struct NearFieldSurface {
    freqs: Vec<f64>,
    plans: Vec<FacePlan>,
    records: Vec<FaceRecord>,
    sx: usize,
    sy: usize,
    scratch: Vec<[f32; 4]>,
    min: [f64; 3],
    max: [f64; 3],
}

impl NearFieldSurface {
    pub(crate) fn new(grid: &YeeGrid, inset: usize, freqs: &[f64]) -> Result<Self> {
        let n = grid.dims();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            lo[a] = grid.cpml[a][0] + inset;
            hi[a] = n[a] - grid.cpml[a][1] - inset;
            if lo[a] < 1 || hi[a] <= lo[a] + 1 || hi[a] >= n[a] {
                return Err(Error::Config(format!(
                    "near-field box with inset {inset} does not fit on axis {a}"
                )));
            }
        }
        let d: Vec<Vec<f64>> = (0..3).map(|a| grid.spacing(a)).collect();
        let mut plans = Vec::new();
        let mut records = Vec::new();
        for a in 0..3 {
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            for (line, normal) in [(lo[a], -1.0), (hi[a], 1.0)] {
                let nu = hi[u] - lo[u];
                let nv = hi[v] - lo[v];
                let (dl, dh) = (d[a][line - 1], d[a][line]);
                plans.push(FacePlan {
                    axis: a,
                    line,
                    u0: lo[u],
                    v0: lo[v],
                    nu,
                    nv,
                    w_lo: (dh / (dl + dh)) as f32,
                    w_hi: (dl / (dl + dh)) as f32,
                });
                let centers = |ax: usize, s: usize, m: usize| -> Vec<f64> {
                    (s..s + m).map(|c| 0.5 * (grid.lines[ax][c] + grid.lines[ax][c + 1])).collect()
                };
                let zeros = vec![vec![Complex64::new(0.0, 0.0); nu * nv]; freqs.len()];
                records.push(FaceRecord {
                    axis: a,
                    normal,
                    coord: grid.lines[a][line],
                    u_centers: centers(u, lo[u], nu),
                    v_centers: centers(v, lo[v], nv),
                    du: d[u][lo[u]..hi[u]].to_vec(),
                    dv: d[v][lo[v]..hi[v]].to_vec(),
                    e_u: zeros.clone(),
                    e_v: zeros.clone(),
                    h_u: zeros.clone(),
                    h_v: zeros,
                });
            }
        }
        let n1 = grid.lines[1].len();
        let n2 = grid.lines[2].len();
        Ok(Self {
            freqs: freqs.to_vec(),
            plans,
            records,
            sx: n1 * n2,
            sy: n2,
            scratch: Vec::new(),
            min: [0, 1, 2].map(|a| grid.lines[a][lo[a]]),
            max: [0, 1, 2].map(|a| grid.lines[a][hi[a]]),
        })
    }

    fn stride(&self, a: usize) -> usize {
        match a {
            0 => self.sx,
            1 => self.sy,
            _ => 1,
        }
    }

    pub(crate) fn record(&mut self, e: &[Vec<f32>; 3], h: &[Vec<f32>; 3], t_e: f64, t_h: f64, w: f64) {
        let pe: Vec<Complex64> = self.freqs.iter().map(|&f| phasor(f, t_e) * w).collect();
        let ph: Vec<Complex64> = self.freqs.iter().map(|&f| phasor(f, t_h) * w).collect();
        for fi in 0..self.plans.len() {
            let p = &self.plans[fi];
            let (a, u, v) = (p.axis, (p.axis + 1) % 3, (p.axis + 2) % 3);
            let (sa, su, sv) = (self.stride(a), self.stride(u), self.stride(v));
            let mut scratch = std::mem::take(&mut self.scratch);
            scratch.clear();
            for iu in 0..p.nu {
                for iv in 0..p.nv {
                    let idx = p.line * sa + (p.u0 + iu) * su + (p.v0 + iv) * sv;
                    let eu = 0.5 * (e[u][idx] + e[u][idx + sv]);
                    let ev = 0.5 * (e[v][idx] + e[v][idx + su]);
                    let hu_lo = 0.5 * (h[u][idx - sa] + h[u][idx - sa + su]);
                    let hu_hi = 0.5 * (h[u][idx] + h[u][idx + su]);
                    let hv_lo = 0.5 * (h[v][idx - sa] + h[v][idx - sa + sv]);
                    let hv_hi = 0.5 * (h[v][idx] + h[v][idx + sv]);
                    scratch.push([
                        eu,
                        ev,
                        p.w_lo * hu_lo + p.w_hi * hu_hi,
                        p.w_lo * hv_lo + p.w_hi * hv_hi,
                    ]);
                }
            }
            let r = &mut self.records[fi];
            for k in 0..self.freqs.len() {
                let (ce, chh) = (pe[k], ph[k]);
                let (eu, ev, hu, hv) = (&mut r.e_u[k], &mut r.e_v[k], &mut r.h_u[k], &mut r.h_v[k]);
                for (s, val) in scratch.iter().enumerate() {
                    eu[s] += ce * val[0] as f64;
                    ev[s] += ce * val[1] as f64;
                    hu[s] += chh * val[2] as f64;
                    hv[s] += chh * val[3] as f64;
                }
            }
            self.scratch = scratch;
        }
    }

    pub(crate) fn finish(self) -> NearFieldRecord {
        NearFieldRecord {
            frequencies: self.freqs,
            faces: self.records,
            min: self.min,
            max: self.max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OhmicRecord {
    pub frequencies: Vec<f64>,
    /// Time-averaged dissipated power per unit source spectrum, `Σ σ V |E|^2 / 2`.
    pub power: Vec<f64>,
    pub edges: usize,
}

pub(crate) struct OhmicSurvey {
    edges: Vec<(usize, usize, f64)>,
    freqs: Vec<f64>,
    acc: Vec<Complex64>,
}

impl OhmicSurvey {
    pub(crate) fn new(edges: Vec<(usize, usize, f64)>, freqs: &[f64]) -> Self {
        let acc = vec![Complex64::new(0.0, 0.0); edges.len() * freqs.len()];
        Self {
            edges,
            freqs: freqs.to_vec(),
            acc,
        }
    }

    pub(crate) fn record(&mut self, e: &[Vec<f32>; 3], t: f64, w: f64) {
        let ph: Vec<Complex64> = self.freqs.iter().map(|&f| phasor(f, t) * w).collect();
        let nf = self.freqs.len();
        for (k, &(c, idx, _)) in self.edges.iter().enumerate() {
            let x = e[c][idx] as f64;
            if x == 0.0 {
                continue;
            }
            let row = &mut self.acc[k * nf..(k + 1) * nf];
            for (a, p) in row.iter_mut().zip(&ph) {
                *a += p * x;
            }
        }
    }

    pub(crate) fn finish(self) -> OhmicRecord {
        let nf = self.freqs.len();
        let power = (0..nf)
            .map(|f| {
                self.edges
                    .iter()
                    .enumerate()
                    .map(|(k, &(_, _, w))| w * self.acc[k * nf + f].norm_sqr())
                    .sum()
            })
            .collect();
        OhmicRecord {
            frequencies: self.freqs,
            power,
            edges: self.edges.len(),
        }
    }
}
