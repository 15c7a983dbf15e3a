//! Time-domain solver on the nonuniform Yee grid.
//!
//! Field arrays are `f32`, one value per grid node, indexed by
//! [`YeeGrid::index`]; component `c` of E at node `(i, j, k)` is the edge from
//! that node in direction `c`, and component `c` of H is the face normal to `c`
//! whose lowest corner is that node. Outer tangential E is held at zero (a
//! PEC wall, behind the CPML when one is configured).

pub mod cpml;
pub mod oned;
pub mod recorder;
pub mod snapshot;
pub mod waveform;

use std::sync::Arc;

use log::{debug, info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{EPS0, MU0};
use crate::error::{Error, Result};
use crate::grid::{assign_materials, courant_dt, MaterialMap, YeeGrid};
use crate::scene::{Axis, Scene};

pub use cpml::{AxisProfile, CpmlConfig};
pub use recorder::{
    FaceRecord, NearFieldRecord, OhmicRecord, PortRecord, ProbeRecord, SpectralAccumulator,
};
pub use snapshot::{FieldComponent, Snapshot, SnapshotRequest};
pub use waveform::{waveform_kind, waveform_names, Excitation, Waveform, WaveformKind};

pub const DEFAULT_MAX_STEPS: usize = 200_000;
pub const DEFAULT_ENERGY_STOP: f64 = 1e-5;

/// Which ports carry a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "port")]
pub enum Drive {
    /// Every active port, with its polarity as the source sign; a pair of
    /// opposite polarities is a differential drive.
    Active,
    /// One port with unit weight; all others are resistive terminations.
    Single(u32),
    /// No port sources (soft current sources only).
    None,
}

/// Soft current source on the edge nearest to `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSource {
    pub position: [f64; 3],
    pub axis: Axis,
    /// Peak current (A).
    pub amplitude: f64,
}

/// Records E along `axis` at the edge nearest to `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldProbe {
    pub position: [f64; 3],
    pub axis: Axis,
}

/// Closed recording surface for the far-field transform, `inset` cells inside the CPML.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldConfig {
    pub inset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Port spectra are accumulated here.
    pub frequencies: Vec<f64>,
    /// Near-field and ohmic-loss spectra (a subset is fine; these are costly).
    pub field_frequencies: Vec<f64>,
    pub excitation: Excitation,
    pub max_steps: usize,
    /// Stop once total energy falls below this fraction of its peak.
    pub energy_stop: f64,
    /// Steps between energy evaluations.
    pub energy_interval: usize,
    pub cpml: CpmlConfig,
    pub drive: Drive,
    /// Peak open-circuit source voltage (V).
    pub source_voltage: f64,
    pub sources: Vec<CurrentSource>,
    pub probes: Vec<FieldProbe>,
    pub near_field: Option<NearFieldConfig>,
    pub record_ohmic: bool,
    /// Frequency at which sheet surface resistance is evaluated; defaults to the centre.
    pub sheet_frequency: Option<f64>,
    pub snapshots: Vec<SnapshotRequest>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            frequencies: (0..=80).map(|i| 24e9 + 0.1e9 * i as f64).collect(),
            field_frequencies: (0..=8).map(|i| 24e9 + 1e9 * i as f64).collect(),
            excitation: Excitation::default(),
            max_steps: DEFAULT_MAX_STEPS,
            energy_stop: DEFAULT_ENERGY_STOP,
            energy_interval: 50,
            cpml: CpmlConfig::default(),
            drive: Drive::Active,
            source_voltage: 1.0,
            sources: Vec::new(),
            probes: Vec::new(),
            near_field: None,
            record_ohmic: false,
            sheet_frequency: None,
            snapshots: Vec::new(),
        }
    }
}

impl SimulationConfig {
    pub fn check(&self) -> Result<()> {
        if self.frequencies.iter().chain(&self.field_frequencies).any(|&f| !(f > 0.0)) {
            return Err(Error::Config("sweep frequencies must be positive".into()));
        }
        if !(self.energy_stop >= 0.0 && self.energy_stop < 1.0) {
            return Err(Error::Config("energy stop threshold must lie in [0, 1)".into()));
        }
        if self.max_steps == 0 || self.energy_interval == 0 {
            return Err(Error::Config("max_steps and energy_interval must be positive".into()));
        }
        let e = &self.excitation;
        if e.kind == WaveformKind::ModulatedGaussian {
            let (lo, hi) = (e.f_center - e.bandwidth, e.f_center + e.bandwidth);
            if let Some(f) = self
                .frequencies
                .iter()
                .chain(&self.field_frequencies)
                .find(|&&f| f < lo * (1.0 - 1e-9) || f > hi * (1.0 + 1e-9))
            {
                return Err(Error::Config(format!(
                    "sweep frequency {f:e} Hz lies outside the excitation band [{lo:e}, {hi:e}]"
                )));
            }
        }
        self.cpml.check()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ports: Vec<PortRecord>,
    pub near_field: Option<NearFieldRecord>,
    pub ohmic: Option<OhmicRecord>,
    pub probes: Vec<ProbeRecord>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub dt: f64,
    /// False when `max_steps` was reached before the energy criterion.
    pub converged: bool,
    pub peak_energy: f64,
    /// `(step, energy)` at every evaluation.
    pub energy: Vec<(usize, f64)>,
}

impl RunOutput {
    pub fn port(&self, id: u32) -> Option<&PortRecord> {
        self.ports.iter().find(|p| p.port_id == id)
    }
}

struct PortDrive {
    comp: usize,
    index: usize,
    polarity: f32,
    /// `dl / (R A)`
    g: f64,
    length: f64,
    ijk: [usize; 3],
    weight: f64,
}

struct SoftSource {
    comp: usize,
    index: usize,
    /// Current density per ampere, `1 / A`.
    per_amp: f64,
    amplitude: f64,
}

/// Auxiliary CPML state for one side of one axis.
struct Slab {
    axis: usize,
    nodes: std::ops::Range<usize>,
    cells: std::ops::Range<usize>,
    /// `(b, c / d)` per slab position.
    e_coef: Vec<[f32; 2]>,
    h_coef: Vec<[f32; 2]>,
    /// Indexed in node order over the slab.
    psi_eu: Vec<f32>,
    psi_ev: Vec<f32>,
    psi_hu: Vec<f32>,
    psi_hv: Vec<f32>,
}

/// Geometry helpers shared by the update kernels.
struct Geometry {
    n: [usize; 3],
    sx: usize,
    sy: usize,
    /// `1 / (kappa d)` on cells and on dual cells (nodes), per axis.
    inv_cell: [Vec<f32>; 3],
    inv_node: [Vec<f32>; 3],
    d: [Vec<f64>; 3],
    dd: [Vec<f64>; 3],
}

impl Geometry {
    fn stride(&self, a: usize) -> usize {
        match a {
            0 => self.sx,
            1 => self.sy,
            _ => 1,
        }
    }
}

/// Complete solver state.
pub struct Simulation {
    pub grid: YeeGrid,
    pub materials: MaterialMap,
    pub dt: f64,
    pub e: [Vec<f32>; 3],
    pub h: [Vec<f32>; 3],
    /// Per-edge index into `coef`, which holds `(Ca, Cb)`.
    coef_id: [Vec<u16>; 3],
    coef: Vec<[f32; 2]>,
    /// `eps V / 2` per edge for energy; zero on PEC and fixed edges.
    energy_weight: [Vec<f32>; 3],
    ch: f32,
    geo: Geometry,
    slabs: Vec<Slab>,
    ports: Vec<PortDrive>,
    port_ids: Vec<u32>,
    port_r: Vec<f64>,
    sources: Vec<SoftSource>,
    waveform: Arc<dyn Waveform>,
    sheet_frequency: f64,
    pub step: usize,
}

fn edge_is_interior(ijk: [usize; 3], c: usize, n: [usize; 3]) -> bool {
    (0..3).all(|a| if a == c { ijk[a] < n[a] } else { ijk[a] > 0 && ijk[a] < n[a] })
}

impl Simulation {
    pub fn new(scene: &Scene, grid: YeeGrid, config: &SimulationConfig) -> Result<Self> {
        config.check()?;
        let materials = assign_materials(scene, &grid)?;
        let dt = courant_dt(&grid);
        let n = grid.dims();
        let nodes = grid.node_count();
        let d: [Vec<f64>; 3] = [0, 1, 2].map(|a| grid.spacing(a));
        let dd: [Vec<f64>; 3] = [0, 1, 2].map(|a| grid.dual_spacing(a));
        let profiles = [0, 1, 2].map(|a| AxisProfile::new(&grid.lines[a], grid.cpml[a], &config.cpml, dt));
        let inv_cell = [0, 1, 2].map(|a| {
            d[a].iter()
                .zip(&profiles[a].cell)
                .map(|(&h, p)| (1.0 / (p.kappa * h)) as f32)
                .collect::<Vec<f32>>()
        });
        let inv_node = [0, 1, 2].map(|a| {
            dd[a].iter()
                .zip(&profiles[a].node)
                .map(|(&h, p)| (1.0 / (p.kappa * h)) as f32)
                .collect::<Vec<f32>>()
        });
        let geo = Geometry {
            n,
            sx: (n[1] + 1) * (n[2] + 1),
            sy: n[2] + 1,
            inv_cell,
            inv_node,
            d,
            dd,
        };

        // Extra conductance from sheets and port resistors.
        let mut extra: [Vec<f64>; 3] = [vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]];
        let f_sheet = config.sheet_frequency.unwrap_or(config.excitation.f_center);
        for s in &materials.sheets {
            extra[s.component][s.index] += s.sheet_sigma(f_sheet)?;
        }
        let mut ports = Vec::new();
        let mut port_ids = Vec::new();
        let mut port_r = Vec::new();
        for p in &materials.ports {
            let g = p.length / (p.resistance * p.area);
            extra[p.component][p.index] += g;
            let scene_port = scene.ports.iter().find(|q| q.id == p.port_id).expect("resolved port");
            let weight = match config.drive {
                Drive::Active if p.role == crate::scene::PortRole::Active => scene_port.polarity as f64,
                Drive::Single(id) if id == p.port_id => 1.0,
                _ => 0.0,
            } * config.source_voltage;
            ports.push(PortDrive {
                comp: p.component,
                index: p.index,
                polarity: p.polarity as f32,
                g,
                length: p.length,
                ijk: p.ijk,
                weight,
            });
            port_ids.push(p.port_id);
            port_r.push(p.resistance);
        }
        if let Drive::Single(id) = config.drive {
            if !port_ids.contains(&id) {
                return Err(Error::Config(format!("drive port {id} does not exist")));
            }
        }

        // Entry 0 is the frozen edge (PEC or outer wall).
        let mut coef: Vec<[f32; 2]> = vec![[0.0, 0.0]];
        let mut coef_lookup: std::collections::HashMap<[u32; 2], u16> = Default::default();
        let mut coef_id: [Vec<u16>; 3] = [vec![0; nodes], vec![0; nodes], vec![0; nodes]];
        let mut energy_weight: [Vec<f32>; 3] = [vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]];
        for c in 0..3 {
            for i in 0..=n[0] {
                for j in 0..=n[1] {
                    for k in 0..=n[2] {
                        let ijk = [i, j, k];
                        if !edge_is_interior(ijk, c, n) {
                            continue;
                        }
                        let idx = grid.index(i, j, k);
                        if materials.pec[c][idx] {
                            continue;
                        }
                        let eps = EPS0 * materials.eps_r[c][idx];
                        let sigma = materials.sigma[c][idx] + extra[c][idx];
                        let r = sigma * dt / (2.0 * eps);
                        let pair = [((1.0 - r) / (1.0 + r)) as f32, (dt / eps / (1.0 + r)) as f32];
                        let key = [pair[0].to_bits(), pair[1].to_bits()];
                        let id = match coef_lookup.get(&key) {
                            Some(&id) => id,
                            None => {
                                let id = u16::try_from(coef.len()).map_err(|_| {
                                    Error::Config("more than 65535 distinct edge materials".into())
                                })?;
                                coef.push(pair);
                                coef_lookup.insert(key, id);
                                id
                            }
                        };
                        coef_id[c][idx] = id;
                        let (u, v) = ((c + 1) % 3, (c + 2) % 3);
                        let vol = geo.d[c][ijk[c]] * geo.dd[u][ijk[u]] * geo.dd[v][ijk[v]];
                        energy_weight[c][idx] = (0.5 * eps * vol) as f32;
                    }
                }
            }
        }

        let mut slabs = Vec::new();
        for a in 0..3 {
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let cross = (n[u] + 1) * (n[v] + 1);
            for side in 0..2 {
                let nodes_r = profiles[a].node_slabs[side].clone();
                let cells_r = profiles[a].cell_slabs[side].clone();
                if cells_r.is_empty() {
                    continue;
                }
                let e_coef = nodes_r
                    .clone()
                    .map(|p| {
                        let c = profiles[a].node[p];
                        [c.b as f32, (c.c / geo.dd[a][p]) as f32]
                    })
                    .collect();
                let h_coef = cells_r
                    .clone()
                    .map(|p| {
                        let c = profiles[a].cell[p];
                        [c.b as f32, (c.c / geo.d[a][p]) as f32]
                    })
                    .collect();
                slabs.push(Slab {
                    axis: a,
                    e_coef,
                    h_coef,
                    psi_eu: vec![0.0; nodes_r.len() * cross],
                    psi_ev: vec![0.0; nodes_r.len() * cross],
                    psi_hu: vec![0.0; cells_r.len() * cross],
                    psi_hv: vec![0.0; cells_r.len() * cross],
                    nodes: nodes_r,
                    cells: cells_r,
                });
            }
        }

        let mut sources = Vec::new();
        for s in &config.sources {
            let c = s.axis.index();
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                let l = &grid.lines[a];
                ijk[a] = if a == c {
                    l.partition_point(|&x| x <= s.position[a]).saturating_sub(1).min(n[a] - 1)
                } else {
                    grid.nearest_line(a, s.position[a])
                };
            }
            if !edge_is_interior(ijk, c, n) {
                return Err(Error::Geometry("current source lies on the outer wall".into()));
            }
            let (u, v) = ((c + 1) % 3, (c + 2) % 3);
            let area = geo.dd[u][ijk[u]] * geo.dd[v][ijk[v]];
            sources.push(SoftSource {
                comp: c,
                index: grid.index(ijk[0], ijk[1], ijk[2]),
                per_amp: 1.0 / area,
                amplitude: s.amplitude,
            });
        }

        let waveform = config.excitation.build()?;
        info!(
            "fdtd: {}x{}x{} cells, dt {:.4e} s, {} ports, {} sheet edges",
            n[0],
            n[1],
            n[2],
            dt,
            ports.len(),
            materials.sheets.len()
        );
        Ok(Self {
            e: [vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]],
            h: [vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]],
            coef_id,
            coef,
            energy_weight,
            ch: (dt / MU0) as f32,
            geo,
            slabs,
            ports,
            port_ids,
            port_r,
            sources,
            waveform,
            sheet_frequency: f_sheet,
            grid,
            materials,
            dt,
            step: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// H from n-1/2 to n+1/2 using E at n.
    pub fn update_h(&mut self) {
        let g = &self.geo;
        let [nx, ny, nz] = g.n;
        let (sx, sy) = (g.sx, g.sy);
        let ch = self.ch;
        let [ex, ey, ez] = &self.e;
        let [hx, hy, hz] = &mut self.h;
        let (ixc, iyc) = (&g.inv_cell[0], &g.inv_cell[1]);
        let izc = &g.inv_cell[2][..nz];
        hx.par_chunks_mut(sx)
            .zip(hy.par_chunks_mut(sx))
            .zip(hz.par_chunks_mut(sx))
            .enumerate()
            .for_each(|(i, ((hx, hy), hz))| {
                let o = i * sx;
                for j in 0..=ny {
                    let b = o + j * sy;
                    let l = j * sy;
                    if j < ny {
                        let iy = iyc[j];
                        let hx = &mut hx[l..l + nz];
                        let ez0 = &ez[b..b + nz];
                        let ez1 = &ez[b + sy..b + sy + nz];
                        let ey = &ey[b..b + nz + 1];
                        for k in 0..nz {
                            hx[k] -= ch * ((ez1[k] - ez0[k]) * iy - (ey[k + 1] - ey[k]) * izc[k]);
                        }
                    }
                    if i < nx {
                        let ix = ixc[i];
                        let hy = &mut hy[l..l + nz];
                        let exr = &ex[b..b + nz + 1];
                        let ez0 = &ez[b..b + nz];
                        let ez1 = &ez[b + sx..b + sx + nz];
                        for k in 0..nz {
                            hy[k] -= ch * ((exr[k + 1] - exr[k]) * izc[k] - (ez1[k] - ez0[k]) * ix);
                        }
                        if j < ny {
                            let iy = iyc[j];
                            let hz = &mut hz[l..l + nz + 1];
                            let ey0 = &ey[b..b + nz + 1];
                            let ey1 = &ey[b + sx..b + sx + nz + 1];
                            let ex0 = &ex[b..b + nz + 1];
                            let ex1 = &ex[b + sy..b + sy + nz + 1];
                            for k in 0..=nz {
                                hz[k] -= ch * ((ey1[k] - ey0[k]) * ix - (ex1[k] - ex0[k]) * iy);
                            }
                        }
                    }
                }
            });
        self.cpml_h();
    }

    /// E from n to n+1 using H at n+1/2, then sources at t = (n+1/2) dt.
    pub fn update_e(&mut self) {
        let g = &self.geo;
        let [nx, ny, nz] = g.n;
        let (sx, sy) = (g.sx, g.sy);
        let [hx, hy, hz] = &self.h;
        let [ex, ey, ez] = &mut self.e;
        let [idx_x, idx_y, idx_z] = &self.coef_id;
        let tab = &self.coef[..];
        let (ixn, iyn) = (&g.inv_node[0], &g.inv_node[1]);
        let izn = &g.inv_node[2][..nz];
        ex.par_chunks_mut(sx)
            .zip(ey.par_chunks_mut(sx))
            .zip(ez.par_chunks_mut(sx))
            .enumerate()
            .for_each(|(i, ((ex, ey), ez))| {
                let o = i * sx;
                for j in 0..=ny {
                    let b = o + j * sy;
                    let l = j * sy;
                    if i < nx && j > 0 && j < ny {
                        let iy = iyn[j];
                        let e = &mut ex[l..l + nz];
                        let id = &idx_x[b..b + nz];
                        let hz0 = &hz[b - sy..b - sy + nz];
                        let hz1 = &hz[b..b + nz];
                        let hy = &hy[b..b + nz];
                        for k in 1..nz {
                            let [ca, cb] = tab[id[k] as usize];
                            e[k] = ca * e[k] + cb * ((hz1[k] - hz0[k]) * iy - (hy[k] - hy[k - 1]) * izn[k]);
                        }
                    }
                    if i > 0 && i < nx {
                        let ix = ixn[i];
                        if j < ny {
                            let e = &mut ey[l..l + nz];
                            let id = &idx_y[b..b + nz];
                            let hx = &hx[b..b + nz];
                            let hz0 = &hz[b - sx..b - sx + nz];
                            let hz1 = &hz[b..b + nz];
                            for k in 1..nz {
                                let [ca, cb] = tab[id[k] as usize];
                                e[k] = ca * e[k] + cb * ((hx[k] - hx[k - 1]) * izn[k] - (hz1[k] - hz0[k]) * ix);
                            }
                        }
                        if j > 0 && j < ny {
                            let iy = iyn[j];
                            let e = &mut ez[l..l + nz];
                            let id = &idx_z[b..b + nz];
                            let hy0 = &hy[b - sx..b - sx + nz];
                            let hy1 = &hy[b..b + nz];
                            let hx0 = &hx[b - sy..b - sy + nz];
                            let hx1 = &hx[b..b + nz];
                            for k in 0..nz {
                                let [ca, cb] = tab[id[k] as usize];
                                e[k] = ca * e[k] + cb * ((hy1[k] - hy0[k]) * ix - (hx1[k] - hx0[k]) * iy);
                            }
                        }
                    }
                }
            });
        self.cpml_e();
        let t = (self.step as f64 + 0.5) * self.dt;
        let w = self.waveform.value(t);
        for p in &self.ports {
            if p.weight != 0.0 {
                // J = p Vs / (R A) = p Vs g / dl
                let j = p.polarity as f64 * p.weight * w * p.g / p.length;
                let i = p.index;
                self.e[p.comp][i] -= self.cb(p.comp, i) * j as f32;
            }
        }
        for s in &self.sources {
            let j = s.amplitude * w * s.per_amp;
            self.e[s.comp][s.index] -= self.cb(s.comp, s.index) * j as f32;
        }
        self.step += 1;
    }

    fn cb(&self, c: usize, idx: usize) -> f32 {
        self.coef[self.coef_id[c][idx] as usize][1]
    }

    fn cpml_e(&mut self) {
        let g = &self.geo;
        let n = g.n;
        let (sx, sy) = (g.sx, g.sy);
        let h = &self.h;
        for slab in &mut self.slabs {
            let a = slab.axis;
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let sa = g.stride(a);
            let (eu, ev) = pair_mut(&mut self.e, u, v);
            let (idu, idv) = (&self.coef_id[u], &self.coef_id[v]);
            let (hu, hv) = (&h[u], &h[v]);
            let mut r = [0..n[0] + 1, 0..n[1] + 1, 0..n[2] + 1];
            r[a] = slab.nodes.clone();
            let start = r[a].start;
            let mut q = 0;
            for i in r[0].clone() {
                for j in r[1].clone() {
                    let base = i * sx + j * sy;
                    for k in r[2].clone() {
                        let idx = base + k;
                        let [bc, cc] = slab.e_coef[[i, j, k][a] - start];
                        let pu = bc * slab.psi_eu[q] + cc * (hv[idx] - hv[idx - sa]);
                        let pv = bc * slab.psi_ev[q] + cc * (hu[idx] - hu[idx - sa]);
                        slab.psi_eu[q] = pu;
                        slab.psi_ev[q] = pv;
                        eu[idx] -= self.coef[idu[idx] as usize][1] * pu;
                        ev[idx] += self.coef[idv[idx] as usize][1] * pv;
                        q += 1;
                    }
                }
            }
        }
    }

    fn cpml_h(&mut self) {
        let g = &self.geo;
        let n = g.n;
        let (sx, sy) = (g.sx, g.sy);
        let ch = self.ch;
        let e = &self.e;
        for slab in &mut self.slabs {
            let a = slab.axis;
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let sa = g.stride(a);
            let (hu, hv) = pair_mut(&mut self.h, u, v);
            let (eu, ev) = (&e[u], &e[v]);
            let mut r = [0..n[0] + 1, 0..n[1] + 1, 0..n[2] + 1];
            r[a] = slab.cells.clone();
            let start = r[a].start;
            let mut q = 0;
            for i in r[0].clone() {
                for j in r[1].clone() {
                    let base = i * sx + j * sy;
                    for k in r[2].clone() {
                        let idx = base + k;
                        let [bc, cc] = slab.h_coef[[i, j, k][a] - start];
                        let pu = bc * slab.psi_hu[q] + cc * (ev[idx + sa] - ev[idx]);
                        let pv = bc * slab.psi_hv[q] + cc * (eu[idx + sa] - eu[idx]);
                        slab.psi_hu[q] = pu;
                        slab.psi_hv[q] = pv;
                        hu[idx] += ch * pu;
                        hv[idx] -= ch * pv;
                        q += 1;
                    }
                }
            }
        }
    }

    /// Port voltage `V = -p E dl` at the current E time level.
    pub fn port_voltage(&self, k: usize) -> f64 {
        let p = &self.ports[k];
        -(p.polarity as f64) * self.e[p.comp][p.index] as f64 * p.length
    }

    /// Port current `I = p ∮ H·dl` around the port edge at the current H time level.
    pub fn port_current(&self, k: usize) -> f64 {
        let p = &self.ports[k];
        p.polarity as f64 * self.loop_current(p.comp, p.ijk)
    }

    /// Discrete Ampère loop of H around the E edge `comp` at `ijk`.
    pub fn loop_current(&self, c: usize, ijk: [usize; 3]) -> f64 {
        let (u, v) = ((c + 1) % 3, (c + 2) % 3);
        let g = &self.geo;
        let idx = self.grid.index(ijk[0], ijk[1], ijk[2]);
        let (su, sv) = (g.stride(u), g.stride(v));
        let hu = &self.h[u];
        let hv = &self.h[v];
        // curl_c H = dHv/du - dHu/dv over the dual face.
        let du = g.dd[u][ijk[u]];
        let dv = g.dd[v][ijk[v]];
        ((hv[idx] - hv[idx - su]) as f64) * dv - ((hu[idx] - hu[idx - sv]) as f64) * du
    }

    /// Discrete electromagnetic energy, using H at both half steps around E.
    fn energy_with(&self, h_prev: &[Vec<f32>; 3]) -> f64 {
        let g = &self.geo;
        let n = g.n;
        let mut we = 0.0f64;
        for c in 0..3 {
            // Fixed chunks summed in order keep the result independent of scheduling.
            let parts: Vec<f64> = self.e[c]
                .par_chunks(4096)
                .zip(self.energy_weight[c].par_chunks(4096))
                .map(|(e, w)| e.iter().zip(w).map(|(&e, &w)| (w * e * e) as f64).sum::<f64>())
                .collect();
            we += parts.iter().sum::<f64>();
        }
        let mut wh = 0.0f64;
        for c in 0..3 {
            let (u, v) = ((c + 1) % 3, (c + 2) % 3);
            let hc = &self.h[c];
            let hp = &h_prev[c];
            wh += (0..=n[0])
                .into_par_iter()
                .map(|i| {
                    let mut s = 0.0f64;
                    for j in 0..=n[1] {
                        for k in 0..=n[2] {
                            let ijk = [i, j, k];
                            // H_c lives on faces: node along c, cells along u and v.
                            if ijk[u] >= n[u] || ijk[v] >= n[v] {
                                continue;
                            }
                            let vol = g.dd[c][ijk[c]] * g.d[u][ijk[u]] * g.d[v][ijk[v]];
                            let idx = i * g.sx + j * g.sy + k;
                            s += vol * (hc[idx] as f64) * (hp[idx] as f64);
                        }
                    }
                    s
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum::<f64>();
        }
        we + 0.5 * MU0 * wh
    }

    /// One full step; returns the energy at the E time level the step started from.
    pub fn step_measured(&mut self) -> f64 {
        let h_prev = self.h.clone();
        self.update_h();
        let w = self.energy_with(&h_prev);
        self.update_e();
        w
    }

    pub fn port_ids(&self) -> &[u32] {
        &self.port_ids
    }

    /// Runs to completion with the recorders described by `config`.
    pub fn run(mut self, config: &SimulationConfig) -> Result<RunOutput> {
        let dt = self.dt;
        let f_top = config
            .frequencies
            .iter()
            .chain(&config.field_frequencies)
            .fold(config.excitation.f_max(), |a, &b| a.max(b));
        let decimation = ((1.0 / (20.0 * f_top * dt)).floor() as usize).max(1);
        let mut v_acc: Vec<SpectralAccumulator> =
            self.ports.iter().map(|_| SpectralAccumulator::new(&config.frequencies)).collect();
        let mut i_acc = v_acc.clone();
        let mut probe_state = recorder::ProbeSet::new(&self.grid, &config.probes, &config.frequencies)?;
        let mut near = match config.near_field {
            Some(nf) => Some(recorder::NearFieldSurface::new(
                &self.grid,
                nf.inset,
                &config.field_frequencies,
            )?),
            None => None,
        };
        let mut ohmic = if config.record_ohmic {
            Some(recorder::OhmicSurvey::new(self_edges_lossy(&self), &config.field_frequencies))
        } else {
            None
        };
        let mut snaps: Vec<Snapshot> = Vec::new();
        let mut pending: Vec<&SnapshotRequest> = config.snapshots.iter().collect();
        for r in &pending {
            r.check(&self.grid)?;
        }

        let source_end = self.waveform.end_time();
        let mut peak = 0.0f64;
        let mut history = Vec::new();
        let mut converged = false;
        let mut h_prev: [Vec<f32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        while self.step < config.max_steps {
            let n = self.step;
            let check_energy = n.is_multiple_of(config.energy_interval);
            if check_energy {
                for c in 0..3 {
                    h_prev[c].clone_from(&self.h[c]);
                }
            }
            self.update_h();
            let t_e = n as f64 * dt;
            let t_h = t_e + 0.5 * dt;
            for k in 0..self.ports.len() {
                v_acc[k].add(self.port_voltage(k), t_e, dt);
                i_acc[k].add(self.port_current(k), t_h, dt);
            }
            probe_state.record(&self.e, t_e, dt);
            if n.is_multiple_of(decimation) {
                let w = dt * decimation as f64;
                if let Some(nf) = near.as_mut() {
                    nf.record(&self.e, &self.h, t_e, t_h, w);
                }
                if let Some(o) = ohmic.as_mut() {
                    o.record(&self.e, t_e, w);
                }
            }
            pending.retain(|r| {
                if r.step == n {
                    snaps.push(r.take(&self.grid, &self.e, &self.h));
                    false
                } else {
                    true
                }
            });
            if check_energy {
                let w = self.energy_with(&h_prev);
                if !w.is_finite() {
                    return Err(Error::NonFinite { step: n });
                }
                peak = peak.max(w);
                history.push((n, w));
                if n.is_multiple_of(config.energy_interval * 100) {
                    debug!("step {n}: energy {w:.4e} (peak {peak:.4e})");
                }
                if t_e > source_end && peak > 0.0 && w < config.energy_stop * peak {
                    converged = true;
                    self.update_e();
                    break;
                }
            }
            self.update_e();
        }
        if !converged && config.energy_stop > 0.0 {
            warn!("fdtd: max_steps {} reached before the energy criterion", config.max_steps);
        }
        let steps = self.step;
        let ports = (0..self.ports.len())
            .map(|k| PortRecord {
                port_id: self.port_ids[k],
                frequencies: config.frequencies.clone(),
                v: v_acc[k].values().to_vec(),
                i: i_acc[k].values().to_vec(),
                resistance: self.port_r[k],
                weight: self.ports[k].weight,
            })
            .collect();
        Ok(RunOutput {
            ports,
            near_field: near.map(|n| n.finish()),
            ohmic: ohmic.map(|o| o.finish()),
            probes: probe_state.finish(),
            snapshots: snaps,
            steps,
            dt,
            converged,
            peak_energy: peak,
            energy: history,
        })
    }
}

/// Lossy edges outside the CPML with their `sigma V / 2` weights, ports excluded.
fn self_edges_lossy(sim: &Simulation) -> Vec<(usize, usize, f64)> {
    let m = &sim.materials;
    let g = &sim.geo;
    let grid = &sim.grid;
    let n = g.n;
    let f_sheet = sim.sheet_frequency;
    let mut sheet_sigma: std::collections::HashMap<(usize, usize), f64> = Default::default();
    for s in &m.sheets {
        if let Ok(sig) = s.sheet_sigma(f_sheet) {
            *sheet_sigma.entry((s.component, s.index)).or_default() += sig;
        }
    }
    let inside = |ijk: [usize; 3], c: usize| {
        (0..3).all(|a| {
            let lo = grid.cpml[a][0];
            let hi = n[a] - grid.cpml[a][1];
            if a == c {
                ijk[a] >= lo && ijk[a] < hi
            } else {
                ijk[a] >= lo && ijk[a] <= hi
            }
        })
    };
    let mut out = Vec::new();
    for c in 0..3 {
        let (u, v) = ((c + 1) % 3, (c + 2) % 3);
        for i in 0..=n[0] {
            for j in 0..=n[1] {
                for k in 0..=n[2] {
                    let ijk = [i, j, k];
                    if !edge_is_interior(ijk, c, n) || !inside(ijk, c) {
                        continue;
                    }
                    let idx = grid.index(i, j, k);
                    if m.pec[c][idx] {
                        continue;
                    }
                    let sigma = m.sigma[c][idx] + sheet_sigma.get(&(c, idx)).copied().unwrap_or(0.0);
                    if sigma > 0.0 {
                        let vol = g.d[c][ijk[c]] * g.dd[u][ijk[u]] * g.dd[v][ijk[v]];
                        out.push((c, idx, 0.5 * sigma * vol));
                    }
                }
            }
        }
    }
    out
}

fn pair_mut<T>(arr: &mut [T; 3], u: usize, v: usize) -> (&mut T, &mut T) {
    debug_assert_ne!(u, v);
    let [a, b, c] = arr;
    match (u, v) {
        (0, 1) => (a, b),
        (0, 2) => (a, c),
        (1, 0) => (b, a),
        (1, 2) => (b, c),
        (2, 0) => (c, a),
        _ => (c, b),
    }
}

/// Builds the grid-independent pieces and runs one simulation.
pub fn run(scene: &Scene, grid: YeeGrid, config: &SimulationConfig) -> Result<RunOutput> {
    Simulation::new(scene, grid, config)?.run(config)
}

/// Conjugate-free helper: complex phasor of a real sample at time `t`.
#[inline]
pub(crate) fn phasor(f: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * t)
}
