//! Nonuniform Yee grid generation and per-edge material assignment.
//!
//! Mesh lines are placed independently on each axis. Every material
//! interface, primitive bound and port end becomes a line; between those
//! lines the spacing follows the tightest local limit (wavelength in the
//! densest medium crossing the slab, layer cell counts, refinement regions),
//! relaxed away from small cells so that neighbouring cells never differ by
//! more than the grading ratio.

use std::fmt::Write as _;

use serde::Serialize;

use crate::constants::C0;
use crate::error::{Error, Result};
use crate::materials::{MaterialKind, MaterialLibrary};
use crate::scene::{Axis, Bounds, PortRole, Scene, Shape};

pub const MAX_GRADING: f64 = 1.5;
pub const DEFAULT_CELL_BUDGET: u64 = 60_000_000;
pub const CELL_BUDGET_ENV: &str = "FIELDFORGE_CELL_BUDGET";
pub const COURANT_SAFETY: f64 = 0.99;

/// Slope of the spacing limit away from a constraint; growth ratio 1.4 per cell.
const SMOOTH_SLOPE: f64 = 0.4;

/// Cell budget from `FIELDFORGE_CELL_BUDGET`, or the default of 6e7.
pub fn cell_budget() -> Result<u64> {
    match std::env::var(CELL_BUDGET_ENV) {
        Ok(v) => {
            let parsed = v
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{CELL_BUDGET_ENV}='{v}' is not a number")))?;
            if !(parsed >= 1.0) || !parsed.is_finite() {
                return Err(Error::Config(format!("{CELL_BUDGET_ENV} must be >= 1")));
            }
            Ok(parsed as u64)
        }
        Err(_) => Ok(DEFAULT_CELL_BUDGET),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YeeGrid {
    /// Primary mesh lines per axis, including CPML cells.
    pub lines: [Vec<f64>; 3],
    /// CPML cells at the low and high end of each axis.
    pub cpml: [[usize; 2]; 3],
    /// Physical domain (without CPML).
    pub domain: Bounds,
}

impl YeeGrid {
    pub fn from_lines(lines: [Vec<f64>; 3], cpml: [[usize; 2]; 3]) -> Result<Self> {
        for (a, l) in lines.iter().enumerate() {
            if l.len() < 2 {
                return Err(Error::Geometry(format!("axis {a} needs at least two lines")));
            }
            if l.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Geometry(format!("axis {a} lines not strictly increasing")));
            }
            if cpml[a][0] + cpml[a][1] >= l.len() - 1 {
                return Err(Error::Geometry(format!("axis {a}: CPML fills the whole axis")));
            }
        }
        let mut domain = Bounds::new([0.0; 3], [0.0; 3]);
        for a in 0..3 {
            domain.min[a] = lines[a][cpml[a][0]];
            domain.max[a] = lines[a][lines[a].len() - 1 - cpml[a][1]];
        }
        Ok(Self { lines, cpml, domain })
    }

    /// Cells per axis.
    pub fn dims(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| self.lines[a].len() - 1)
    }

    pub fn cell_count(&self) -> u64 {
        self.dims().iter().map(|&n| n as u64).product()
    }

    /// Number of nodes (`(nx+1)(ny+1)(nz+1)`), the length of every field array.
    pub fn node_count(&self) -> usize {
        self.lines.iter().map(|l| l.len()).product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.lines[1].len() + j) * self.lines[2].len() + k
    }

    pub fn spacing(&self, axis: usize) -> Vec<f64> {
        self.lines[axis].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Dual spacing at each line: half the sum of the adjacent cells.
    pub fn dual_spacing(&self, axis: usize) -> Vec<f64> {
        let d = self.spacing(axis);
        let n = d.len();
        (0..=n)
            .map(|l| {
                let lo = if l > 0 { d[l - 1] } else { 0.0 };
                let hi = if l < n { d[l] } else { 0.0 };
                0.5 * (lo + hi)
            })
            .collect()
    }

    pub fn min_spacing(&self, axis: usize) -> f64 {
        self.spacing(axis).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self, axis: usize) -> f64 {
        self.spacing(axis).into_iter().fold(0.0, f64::max)
    }

    /// Largest ratio between neighbouring cells on any axis.
    pub fn max_grading(&self) -> f64 {
        (0..3)
            .flat_map(|a| {
                self.spacing(a)
                    .windows(2)
                    .map(|w| w[1].max(w[0]) / w[1].min(w[0]))
                    .collect::<Vec<_>>()
            })
            .fold(1.0, f64::max)
    }

    /// Index of the line at `x` within `tol`, if any.
    pub fn line_index(&self, axis: usize, x: f64, tol: f64) -> Option<usize> {
        let l = &self.lines[axis];
        let pos = l.partition_point(|&v| v < x);
        [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&i| i < l.len())
            .min_by(|&a, &b| (l[a] - x).abs().total_cmp(&(l[b] - x).abs()))
            .filter(|&i| (l[i] - x).abs() <= tol)
    }

    /// Index of the line nearest to `x`.
    pub fn nearest_line(&self, axis: usize, x: f64) -> usize {
        let l = &self.lines[axis];
        let pos = l.partition_point(|&v| v < x);
        if pos == 0 {
            0
        } else if pos >= l.len() {
            l.len() - 1
        } else if (x - l[pos - 1]) <= (l[pos] - x) {
            pos - 1
        } else {
            pos
        }
    }

    /// Tolerance for snapping coordinates to lines.
    pub fn snap_tolerance(&self) -> f64 {
        let min = (0..3).map(|a| self.min_spacing(a)).fold(f64::INFINITY, f64::min);
        1e-6 * min
    }

    pub fn stats(&self) -> GridStats {
        let d = self.dims();
        GridStats {
            nx: d[0],
            ny: d[1],
            nz: d[2],
            cells: self.cell_count(),
            min_spacing: [0, 1, 2].map(|a| self.min_spacing(a)),
            max_spacing: [0, 1, 2].map(|a| self.max_spacing(a)),
            max_grading: self.max_grading(),
            dt: courant_dt(self),
            cpml_cells: self.cpml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridStats {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub cells: u64,
    pub min_spacing: [f64; 3],
    pub max_spacing: [f64; 3],
    pub max_grading: f64,
    pub dt: f64,
    pub cpml_cells: [[usize; 2]; 3],
}

impl GridStats {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,x,y,z\n");
        let _ = writeln!(s, "cells_per_axis,{},{},{}", self.nx, self.ny, self.nz);
        let _ = writeln!(
            s,
            "min_spacing_m,{:e},{:e},{:e}",
            self.min_spacing[0], self.min_spacing[1], self.min_spacing[2]
        );
        let _ = writeln!(
            s,
            "max_spacing_m,{:e},{:e},{:e}",
            self.max_spacing[0], self.max_spacing[1], self.max_spacing[2]
        );
        let _ = writeln!(
            s,
            "cpml_cells,{},{},{}",
            self.cpml_cells[0][0] + self.cpml_cells[0][1],
            self.cpml_cells[1][0] + self.cpml_cells[1][1],
            self.cpml_cells[2][0] + self.cpml_cells[2][1]
        );
        let _ = writeln!(s, "total_cells,{},,", self.cells);
        let _ = writeln!(s, "max_grading,{:.6},,", self.max_grading);
        let _ = writeln!(s, "dt_s,{:e},,", self.dt);
        s
    }
}

/// `s_c / (c sqrt(1/dx^2 + 1/dy^2 + 1/dz^2))` with the smallest spacings and `s_c = 0.99`.
pub fn courant_dt(grid: &YeeGrid) -> f64 {
    let s: f64 = (0..3).map(|a| grid.min_spacing(a).powi(-2)).sum();
    COURANT_SAFETY / (C0 * s.sqrt())
}

/// A spacing limit `h` over `[lo, hi]` along one axis.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    h: f64,
}

struct AxisPlan {
    fixed: Vec<f64>,
    pieces: Vec<Piece>,
    /// Intervals that must be exactly one cell (port edges).
    protected: Vec<(f64, f64)>,
}

impl AxisPlan {
    fn limit(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let d = if x < p.lo {
                    p.lo - x
                } else if x > p.hi {
                    x - p.hi
                } else {
                    0.0
                };
                p.h + SMOOTH_SLOPE * d
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds mesh lines for `scene` with `resolution` cells per wavelength at `f_max`.
pub fn generate(scene: &Scene, resolution: f64, f_max: f64) -> Result<YeeGrid> {
    generate_with_budget(scene, resolution, f_max, cell_budget()?)
}

pub fn generate_with_budget(
    scene: &Scene,
    resolution: f64,
    f_max: f64,
    budget: u64,
) -> Result<YeeGrid> {
    if !(resolution >= 10.0) || !resolution.is_finite() {
        return Err(Error::Config(format!(
            "resolution must be at least 10 cells per wavelength, got {resolution}"
        )));
    }
    if !(f_max > 0.0) || !f_max.is_finite() {
        return Err(Error::Config(format!("f_max must be positive, got {f_max}")));
    }
    let lib = scene.material_library()?;
    let domain = scene.domain_bounds()?;
    let h0 = C0 / f_max / resolution;
    let temp = scene.temperature;
    let index_of = |name: &str| -> Result<f64> {
        let m = lib.lookup(name)?;
        Ok(match m.kind {
            // Conductor interiors are not resolved.
            MaterialKind::Pec | MaterialKind::Conductor => 1.0,
            _ => m.index(temp),
        })
    };

    let mut plans: Vec<AxisPlan> = (0..3)
        .map(|a| AxisPlan {
            fixed: vec![domain.min[a], domain.max[a]],
            pieces: vec![Piece {
                lo: domain.min[a],
                hi: domain.max[a],
                h: h0,
            }],
            protected: Vec::new(),
        })
        .collect();

    let add_box = |plans: &mut Vec<AxisPlan>, b: &Bounds, h: f64| {
        for a in 0..3 {
            plans[a].fixed.push(b.min[a]);
            plans[a].fixed.push(b.max[a]);
            plans[a].pieces.push(Piece {
                lo: b.min[a],
                hi: b.max[a],
                h,
            });
        }
    };

    if let Some(st) = &scene.stack {
        let mut n_max: f64 = 1.0;
        for (i, layer) in st.layers.iter().enumerate() {
            let n = index_of(&layer.material)?;
            n_max = n_max.max(n);
            let b = st.layer_bounds(i);
            plans[2].fixed.push(b.min[2]);
            plans[2].fixed.push(b.max[2]);
            let h = (h0 / n).min(layer.thickness / layer.min_cells.max(1) as f64);
            plans[2].pieces.push(Piece {
                lo: b.min[2],
                hi: b.max[2],
                h,
            });
        }
        let b = st.bounds();
        for a in 0..2 {
            plans[a].fixed.push(b.min[a]);
            plans[a].fixed.push(b.max[a]);
            plans[a].pieces.push(Piece {
                lo: b.min[a],
                hi: b.max[a],
                h: h0 / n_max,
            });
        }
    }

    for p in &scene.primitives {
        let b = p.shape.bounds();
        let n = index_of(&p.material)?;
        match &p.shape {
            Shape::Box { .. } | Shape::Sheet { .. } | Shape::Wire { .. } => {
                add_box(&mut plans, &b, h0 / n)
            }
            Shape::Cylinder { axis, center, .. } => {
                add_box(&mut plans, &b, h0 / n);
                let (u, v) = axis.others();
                plans[u.index()].fixed.push(center[0]);
                plans[v.index()].fixed.push(center[1]);
            }
        }
    }

    for r in &scene.refinements {
        if !(r.max_cell > 0.0) {
            return Err(Error::Config("refinement cell size must be positive".into()));
        }
        for a in 0..3 {
            plans[a].pieces.push(Piece {
                lo: r.region.min[a],
                hi: r.region.max[a],
                h: r.max_cell,
            });
        }
    }

    for port in &scene.ports {
        let axis = port
            .axis()
            .ok_or_else(|| Error::Geometry(format!("port {} is not axis-aligned", port.id)))?
            .index();
        for a in 0..3 {
            plans[a].fixed.push(port.start[a]);
            plans[a].fixed.push(port.end[a]);
        }
        let (lo, hi) = (
            port.start[axis].min(port.end[axis]),
            port.start[axis].max(port.end[axis]),
        );
        plans[axis].protected.push((lo, hi));
        plans[axis].pieces.push(Piece { lo, hi, h: hi - lo });
    }

    let cpml = scene.boundary.cpml_cells();
    let mut lines: [Vec<f64>; 3] = Default::default();
    let mut counts = [0u64; 3];
    for a in 0..3 {
        let mut l = mesh_axis(&mut plans[a], domain.min[a], domain.max[a])
            .map_err(|e| Error::Geometry(format!("axis {}: {e}", ["x", "y", "z"][a])))?;
        if cpml > 0 {
            let lo_step = l[1] - l[0];
            let hi_step = l[l.len() - 1] - l[l.len() - 2];
            let mut ext: Vec<f64> = (1..=cpml).rev().map(|c| l[0] - c as f64 * lo_step).collect();
            ext.extend_from_slice(&l);
            let last = *l.last().unwrap();
            ext.extend((1..=cpml).map(|c| last + c as f64 * hi_step));
            l = ext;
        }
        counts[a] = (l.len() - 1) as u64;
        lines[a] = l;
    }
    let cells = counts.iter().product::<u64>();
    if cells > budget {
        return Err(Error::CellBudget { cells, budget });
    }
    YeeGrid::from_lines(lines, [[cpml, cpml]; 3])
}

/// Places lines in every interval between fixed points by integrating the
/// inverse spacing limit.
fn place_lines(
    plan: &AxisPlan,
    fixed: &[f64],
    is_protected: &dyn Fn(f64, f64) -> bool,
) -> (Vec<f64>, Vec<bool>, Vec<bool>) {
    let mut lines = vec![fixed[0]];
    let mut is_fixed = vec![true];
    let mut protected = Vec::new();
    for w in fixed.windows(2) {
        let (a, b) = (w[0], w[1]);
        if is_protected(a, b) {
            protected.push(true);
            lines.push(b);
            is_fixed.push(true);
            continue;
        }
        // Integrate 1/h on samples spaced by a fraction of the local limit, plus piece ends.
        let mut xs = vec![a];
        let mut x = a;
        while x < b {
            x = (x + 0.125 * plan.limit(x)).min(b);
            xs.push(x);
        }
        let mut x = b;
        while x > a {
            x = (x - 0.125 * plan.limit(x)).max(a);
            xs.push(x);
        }
        for p in &plan.pieces {
            for x in [p.lo, p.hi] {
                if x > a && x < b {
                    xs.push(x);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut cum = vec![0.0];
        for s in xs.windows(2) {
            let m = 0.5 * (s[0] + s[1]);
            let f = (1.0 / plan.limit(s[0]) + 4.0 / plan.limit(m) + 1.0 / plan.limit(s[1])) / 6.0;
            cum.push(cum.last().unwrap() + f * (s[1] - s[0]));
        }
        let total = *cum.last().unwrap();
        let n = ((total - 1e-9).ceil() as usize).max(1);
        let mut seg = 0;
        for c in 1..n {
            let target = total * c as f64 / n as f64;
            while cum[seg + 1] < target {
                seg += 1;
            }
            let t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
            lines.push(xs[seg] + t * (xs[seg + 1] - xs[seg]));
            is_fixed.push(false);
            protected.push(false);
        }
        lines.push(b);
        is_fixed.push(true);
        protected.push(false);
    }

    (lines, is_fixed, protected)
}

fn mesh_axis(plan: &mut AxisPlan, lo: f64, hi: f64) -> std::result::Result<Vec<f64>, String> {
    let tol = 1e-12 * (hi - lo).abs().max(f64::MIN_POSITIVE);
    let mut fixed: Vec<f64> = plan
        .fixed
        .iter()
        .copied()
        .filter(|&x| x >= lo - tol && x <= hi + tol)
        .map(|x| x.clamp(lo, hi))
        .collect();
    fixed.sort_by(f64::total_cmp);
    fixed.dedup_by(|a, b| (*a - *b).abs() <= tol);
    plan.pieces.retain(|p| p.hi >= lo && p.lo <= hi);
    // A gap between fixed lines caps the cell size there, and so grades its surroundings.
    for w in fixed.windows(2) {
        plan.pieces.push(Piece {
            lo: w[0],
            hi: w[1],
            h: w[1] - w[0],
        });
    }

    let is_protected =
        |a: f64, b: f64| plan.protected.iter().any(|&(p, q)| (a - p).abs() <= tol && (b - q).abs() <= tol);
    for &(p, q) in &plan.protected {
        if fixed.iter().any(|&x| x > p + tol && x < q - tol) {
            return Err(format!("a mesh line is forced inside the port edge [{p:e}, {q:e}]"));
        }
    }

    // Cells that end up much smaller than their neighbours (short fixed
    // intervals) become limits themselves, and the axis is placed again.
    let (mut lines, mut is_fixed, mut protected) = place_lines(plan, &fixed, &is_protected);
    for _ in 0..20 {
        let d: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
        let mut added = false;
        for i in 0..d.len().saturating_sub(1) {
            if protected[i] || protected[i + 1] {
                continue;
            }
            if d[i].max(d[i + 1]) / d[i].min(d[i + 1]) > MAX_GRADING * (1.0 + 1e-9) {
                let s = if d[i] < d[i + 1] { i } else { i + 1 };
                plan.pieces.push(Piece {
                    lo: lines[s],
                    hi: lines[s + 1],
                    h: d[s],
                });
                added = true;
            }
        }
        if !added {
            break;
        }
        (lines, is_fixed, protected) = place_lines(plan, &fixed, &is_protected);
    }

    // Repair grading: halve the larger cell of an offending pair, or, when the
    // larger one is a port edge, merge the smaller one into its other neighbour.
    let mut merges = 0;
    for _ in 0..100_000 {
        let d: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
        let bad = (0..d.len().saturating_sub(1))
            .find(|&i| d[i].max(d[i + 1]) / d[i].min(d[i + 1]) > MAX_GRADING * (1.0 + 1e-9));
        let Some(i) = bad else {
            return Ok(lines);
        };
        let (big, small) = if d[i] > d[i + 1] { (i, i + 1) } else { (i + 1, i) };
        if protected[big] {
            // Line shared by `small` and the cell on its far side.
            let far_line = if small > big { small + 1 } else { small };
            if is_fixed[far_line] || protected[small] {
                return Err(format!(
                    "port edge of {:e} m is more than {MAX_GRADING} times its neighbouring cell",
                    d[big]
                ));
            }
            merges += 1;
            if merges > 1000 {
                return Err(format!(
                    "port edge of {:e} m is longer than the surrounding mesh allows; \
                     shorten the port or lower the resolution",
                    d[big]
                ));
            }
            lines.remove(far_line);
            is_fixed.remove(far_line);
            protected.remove(small);
            continue;
        }
        lines.insert(big + 1, 0.5 * (lines[big] + lines[big + 1]));
        is_fixed.insert(big + 1, false);
        protected.insert(big, false);
    }
    Err("grading repair did not converge".into())
}

/// Material properties resolved for one temperature class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedMaterial {
    pub name: String,
    pub eps_r: f64,
    pub sigma: f64,
    pub pec: bool,
}

/// An edge lying on a conducting (non-PEC) sheet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SheetEdge {
    pub component: usize,
    pub index: usize,
    /// Bulk conductivity of the sheet metal (S/m).
    pub sigma: f64,
    pub mu_r: f64,
    /// Dual cell size normal to the sheet (m).
    pub normal_dual: f64,
}

impl SheetEdge {
    /// Equivalent volume conductivity `1 / (Rs h)` giving `E = Rs J_s` on the sheet.
    pub fn sheet_sigma(&self, f: f64) -> Result<f64> {
        let rs = crate::materials::surface_resistance(self.sigma, self.mu_r, f)?;
        Ok(1.0 / (rs * self.normal_dual))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortEdge {
    pub port_id: u32,
    pub component: usize,
    pub index: usize,
    /// Node indices of the edge's lower end.
    pub ijk: [usize; 3],
    /// Edge length (m).
    pub length: f64,
    /// Dual face area crossed by the edge current (m^2).
    pub area: f64,
    pub polarity: f64,
    pub resistance: f64,
    pub role: PortRole,
}

/// Per-edge material data on the Yee grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub table: Vec<ResolvedMaterial>,
    /// Material id of every cell, indexed like the nodes of its lower corner.
    pub cell_material: Vec<u16>,
    pub eps_r: [Vec<f64>; 3],
    pub sigma: [Vec<f64>; 3],
    pub pec: [Vec<bool>; 3],
    pub sheets: Vec<SheetEdge>,
    pub ports: Vec<PortEdge>,
}

/// Does cell `c` (centre `m`) lie within `[lo, hi]` along one axis?
fn cell_range(lines: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let centers: Vec<f64> = lines.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let a = centers.partition_point(|&c| c < lo);
    let b = centers.partition_point(|&c| c <= hi);
    a..b.max(a)
}

/// Resolves every cell to one material (priority order, ties to the later
/// entity), then averages permittivity and conductivity onto edges by the
/// volume of the up-to-four cells sharing each edge.
pub fn assign_materials(scene: &Scene, grid: &YeeGrid) -> Result<MaterialMap> {
    let lib: MaterialLibrary = scene.material_library()?;
    let temp = scene.temperature;
    let mut table: Vec<ResolvedMaterial> = Vec::new();
    let mut id_of = |name: &str| -> Result<u16> {
        if let Some(i) = table.iter().position(|m| m.name == name) {
            return Ok(i as u16);
        }
        let m = lib.lookup(name)?;
        if m.mu_r != 1.0 {
            return Err(Error::Config(format!(
                "material '{}' has mu_r = {}; only non-magnetic media are supported",
                m.name, m.mu_r
            )));
        }
        table.push(ResolvedMaterial {
            name: m.name.clone(),
            eps_r: m.eps_r(temp),
            sigma: m.sigma(temp),
            pec: m.is_pec(),
        });
        Ok((table.len() - 1) as u16)
    };

    let dims = grid.dims();
    let [nx, ny, nz] = dims;
    let vacuum = id_of("Vacuum")?;
    let mut cells = vec![vacuum; nx * ny * nz];
    let cell_idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;

    // Cell centres, clamped so CPML cells repeat the outermost interior cell.
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let l = &grid.lines[a];
            let lo = grid.cpml[a][0];
            let hi = l.len() - 2 - grid.cpml[a][1];
            (0..l.len() - 1)
                .map(|c| {
                    let c = c.clamp(lo, hi);
                    0.5 * (l[c] + l[c + 1])
                })
                .collect()
        })
        .collect();
    let range_of = |a: usize, lo: f64, hi: f64| -> std::ops::Range<usize> {
        let c = &centers[a];
        let s = c.partition_point(|&v| v < lo);
        let e = c.partition_point(|&v| v <= hi);
        s..e.max(s)
    };

    // Painting order: (priority, declaration order); the stack precedes primitives.
    struct Paint<'a> {
        priority: i32,
        order: usize,
        bounds: Bounds,
        shape: Option<&'a Shape>,
        material: &'a str,
        label: String,
    }
    let mut paints: Vec<Paint> = Vec::new();
    if let Some(st) = &scene.stack {
        for (i, layer) in st.layers.iter().enumerate() {
            paints.push(Paint {
                priority: st.priority,
                order: i,
                bounds: st.layer_bounds(i),
                shape: None,
                material: &layer.material,
                label: format!("layer {i}"),
            });
        }
    }
    let base = paints.len();
    for (i, p) in scene.primitives.iter().enumerate() {
        if p.shape.is_volume() {
            paints.push(Paint {
                priority: p.priority,
                order: base + i,
                bounds: p.shape.bounds(),
                shape: Some(&p.shape),
                material: &p.material,
                label: p.label(i),
            });
        }
    }
    paints.sort_by_key(|p| (p.priority, p.order));
    for p in &paints {
        let id = id_of(p.material)?;
        let ri = range_of(0, p.bounds.min[0], p.bounds.max[0]);
        let rj = range_of(1, p.bounds.min[1], p.bounds.max[1]);
        let rk = range_of(2, p.bounds.min[2], p.bounds.max[2]);
        let mut painted = 0usize;
        for i in ri.clone() {
            for j in rj.clone() {
                for k in rk.clone() {
                    let inside = match p.shape {
                        Some(s @ Shape::Cylinder { .. }) => {
                            s.contains_point([centers[0][i], centers[1][j], centers[2][k]])
                        }
                        _ => true,
                    };
                    if inside {
                        cells[cell_idx(i, j, k)] = id;
                        painted += 1;
                    }
                }
            }
        }
        if painted == 0 {
            return Err(Error::Geometry(format!("{} covers no mesh cell", p.label)));
        }
    }

    let n = grid.node_count();
    let mut eps_r: [Vec<f64>; 3] = [vec![1.0; n], vec![1.0; n], vec![1.0; n]];
    let mut sigma: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut pec: [Vec<bool>; 3] = [vec![false; n], vec![false; n], vec![false; n]];
    let spacing: Vec<Vec<f64>> = (0..3).map(|a| grid.spacing(a)).collect();
    for c in 0..3 {
        let (u, v) = (Axis::from_index(c).others().0.index(), Axis::from_index(c).others().1.index());
        let nodes = [grid.lines[0].len(), grid.lines[1].len(), grid.lines[2].len()];
        for i in 0..nodes[0] {
            for j in 0..nodes[1] {
                for k in 0..nodes[2] {
                    let ijk = [i, j, k];
                    if ijk[c] >= dims[c] {
                        continue;
                    }
                    let (mut w_sum, mut e_sum, mut s_sum, mut is_pec) = (0.0, 0.0, 0.0, false);
                    for du in [0usize, 1] {
                        for dv in [0usize, 1] {
                            let (Some(cu), Some(cv)) =
                                (ijk[u].checked_sub(du), ijk[v].checked_sub(dv))
                            else {
                                continue;
                            };
                            if cu >= dims[u] || cv >= dims[v] {
                                continue;
                            }
                            let mut cell = ijk;
                            cell[u] = cu;
                            cell[v] = cv;
                            let m = &table[cells[cell_idx(cell[0], cell[1], cell[2])] as usize];
                            let w = spacing[u][cu] * spacing[v][cv];
                            w_sum += w;
                            e_sum += w * m.eps_r;
                            s_sum += w * m.sigma;
                            is_pec |= m.pec;
                        }
                    }
                    let idx = grid.index(i, j, k);
                    eps_r[c][idx] = e_sum / w_sum;
                    sigma[c][idx] = s_sum / w_sum;
                    pec[c][idx] = is_pec;
                }
            }
        }
    }

    let tol = grid.snap_tolerance();
    let mut sheets: Vec<SheetEdge> = Vec::new();
    for (pi, p) in scene.primitives.iter().enumerate() {
        let b = p.shape.bounds();
        let edges: Vec<(usize, [usize; 3])> = match &p.shape {
            Shape::Sheet { .. } => {
                let nrm = p.shape.sheet_normal().expect("validated sheet").index();
                let l = grid.line_index(nrm, b.min[nrm], tol).ok_or_else(|| {
                    Error::Geometry(format!("{} is not on a mesh line", p.label(pi)))
                })?;
                let mut out = Vec::new();
                for c in (0..3).filter(|&c| c != nrm) {
                    let o = 3 - c - nrm;
                    let along = cell_range(&grid.lines[c], b.min[c], b.max[c]);
                    let across: Vec<usize> = (0..grid.lines[o].len())
                        .filter(|&q| {
                            grid.lines[o][q] >= b.min[o] - tol && grid.lines[o][q] <= b.max[o] + tol
                        })
                        .collect();
                    for e in along {
                        for &q in &across {
                            let mut ijk = [0; 3];
                            ijk[nrm] = l;
                            ijk[c] = e;
                            ijk[o] = q;
                            out.push((c, ijk));
                        }
                    }
                }
                out
            }
            Shape::Wire { .. } => {
                let ax = p.shape.wire_axis().expect("validated wire").index();
                let mut ijk = [0; 3];
                for a in (0..3).filter(|&a| a != ax) {
                    ijk[a] = grid.line_index(a, b.min[a], tol).ok_or_else(|| {
                        Error::Geometry(format!("{} is not on a mesh line", p.label(pi)))
                    })?;
                }
                cell_range(&grid.lines[ax], b.min[ax], b.max[ax])
                    .map(|e| {
                        let mut q = ijk;
                        q[ax] = e;
                        (ax, q)
                    })
                    .collect()
            }
            _ => continue,
        };
        if edges.is_empty() {
            return Err(Error::Geometry(format!("{} covers no mesh edge", p.label(pi))));
        }
        let m = lib.lookup(&p.material)?;
        for (c, ijk) in edges {
            let idx = grid.index(ijk[0], ijk[1], ijk[2]);
            if m.is_pec() {
                pec[c][idx] = true;
            } else if matches!(m.kind, MaterialKind::Conductor) && m.sigma(temp) > 0.0 {
                let nrm = p.shape.sheet_normal().map(|a| a.index()).unwrap_or(c);
                let dual = grid.dual_spacing(nrm)[ijk[nrm]];
                // Later sheets replace earlier ones on shared edges.
                sheets.retain(|s| !(s.component == c && s.index == idx));
                sheets.push(SheetEdge {
                    component: c,
                    index: idx,
                    sigma: m.sigma(temp),
                    mu_r: m.mu_r,
                    normal_dual: dual,
                });
            }
        }
    }
    sheets.retain(|s| !pec[s.component][s.index]);
    sheets.sort_by_key(|s| (s.component, s.index));

    let mut ports = Vec::new();
    for port in &scene.ports {
        let c = port.axis().expect("validated port").index();
        let lo = port.start[c].min(port.end[c]);
        let hi = port.start[c].max(port.end[c]);
        let l0 = grid.line_index(c, lo, tol);
        let l1 = grid.line_index(c, hi, tol);
        let (Some(l0), Some(l1)) = (l0, l1) else {
            return Err(Error::Geometry(format!("port {} ends are not on mesh lines", port.id)));
        };
        if l1 != l0 + 1 {
            return Err(Error::Config(format!(
                "port {} spans {} grid edges; a port must be a single edge",
                port.id,
                l1 as i64 - l0 as i64
            )));
        }
        let mut ijk = [0; 3];
        ijk[c] = l0;
        for a in (0..3).filter(|&a| a != c) {
            ijk[a] = grid.line_index(a, port.start[a], tol).ok_or_else(|| {
                Error::Geometry(format!("port {} is not on a mesh line", port.id))
            })?;
        }
        let idx = grid.index(ijk[0], ijk[1], ijk[2]);
        if pec[c][idx] {
            return Err(Error::Config(format!("port {} lies on a PEC edge", port.id)));
        }
        // Orientation: positive terminal at the high end when polarity is +1 and
        // the port runs low to high.
        let forward = port.end[c] > port.start[c];
        let polarity = port.polarity as f64 * if forward { 1.0 } else { -1.0 };
        let (u, v) = (Axis::from_index(c).others().0.index(), Axis::from_index(c).others().1.index());
        let area = grid.dual_spacing(u)[ijk[u]] * grid.dual_spacing(v)[ijk[v]];
        ports.push(PortEdge {
            port_id: port.id,
            component: c,
            index: idx,
            ijk,
            length: hi - lo,
            area,
            polarity,
            resistance: port.source_resistance,
            role: port.role,
        });
    }

    Ok(MaterialMap {
        table,
        cell_material: cells,
        eps_r,
        sigma,
        pec,
        sheets,
        ports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::TemperatureClass;
    use crate::scene::{
        preset_onchip_dipole, Boundary, Layer, LayerStack, OnChipParams, Port, Primitive, Scene,
    };
    use approx::assert_relative_eq;

    fn uniform(n: usize, h: f64) -> Vec<f64> {
        (0..=n).map(|i| i as f64 * h).collect()
    }

    #[test]
    fn courant_values() {
        let g = YeeGrid::from_lines([uniform(10, 1e-4), uniform(10, 1e-4), uniform(10, 1e-4)], [[0; 2]; 3])
            .unwrap();
        assert_relative_eq!(courant_dt(&g), 1.906e-13, max_relative = 5e-4);
        assert_relative_eq!(courant_dt(&g), 0.99 * 1e-4 / (C0 * 3f64.sqrt()), max_relative = 1e-14);
        let fine = YeeGrid::from_lines([uniform(20, 5e-5), uniform(10, 1e-4), uniform(10, 1e-4)], [[0; 2]; 3])
            .unwrap();
        let r = courant_dt(&fine) / courant_dt(&g);
        assert!(r > 0.5 && r < 1.0);
    }

    fn chip(temp: TemperatureClass) -> Scene {
        preset_onchip_dipole(temp, &OnChipParams::default()).unwrap()
    }

    #[test]
    fn onchip_interfaces_on_lines_and_graded() {
        let s = chip(TemperatureClass::Cryogenic);
        let g = generate(&s, 15.0, 32e9).unwrap();
        let tol = 1e-15;
        for z in s.stack.as_ref().unwrap().interfaces() {
            assert!(g.line_index(2, z, tol).is_some(), "interface {z} not on a line");
        }
        assert!(g.max_grading() <= MAX_GRADING + 1e-9);
        // the oxide gets at least two cells
        let z = s.stack.as_ref().unwrap().interfaces();
        let a = g.line_index(2, z[1], tol).unwrap();
        let b = g.line_index(2, z[2], tol).unwrap();
        assert!(b - a >= 2);
        let vol: f64 = {
            let d: Vec<Vec<f64>> = (0..3).map(|a| g.spacing(a)).collect();
            d[0].iter().sum::<f64>() * d[1].iter().sum::<f64>() * d[2].iter().sum::<f64>()
        };
        let full = (0..3)
            .map(|a| g.lines[a].last().unwrap() - g.lines[a][0])
            .product::<f64>();
        assert!((vol - full).abs() <= 1e-9 * full);
    }

    #[test]
    fn halving_spacing_doubles_lines() {
        let mut s = Scene::new("box", TemperatureClass::Room);
        s.domain = Some(Bounds::new([0.0; 3], [0.1, 0.1, 0.1]));
        s.boundary = Boundary::Pec;
        let a = generate(&s, 10.0, 30e9).unwrap();
        let b = generate(&s, 20.0, 30e9).unwrap();
        for ax in 0..3 {
            let (na, nb) = (a.lines[ax].len() - 1, b.lines[ax].len() - 1);
            assert!(nb as f64 >= 1.95 * na as f64, "{na} {nb}");
        }
    }

    #[test]
    fn budget_refusal() {
        let mut s = Scene::new("box", TemperatureClass::Room);
        s.domain = Some(Bounds::new([0.0; 3], [0.3, 0.3, 0.7]));
        s.boundary = Boundary::Pec;
        match generate_with_budget(&s, 15.0, 28e9, DEFAULT_CELL_BUDGET) {
            Err(Error::CellBudget { cells, .. }) => assert!(cells > 150_000_000),
            other => panic!("{other:?}"),
        }
        assert!(generate(&s, 5.0, 28e9).is_err());
    }

    fn slab_scene() -> Scene {
        let mut s = Scene::new("slab", TemperatureClass::Cryogenic);
        s.stack = Some(LayerStack {
            footprint_min: [0.0, 0.0],
            footprint_max: [1e-3, 1e-3],
            z_bottom: 0.0,
            layers: vec![Layer::new("Si", 0.5e-3), Layer::new("SiO2", 0.5e-3)],
            priority: 0,
        });
        s.domain = Some(Bounds::new([0.0; 3], [1e-3; 3]));
        s.boundary = Boundary::Pec;
        s
    }

    #[test]
    fn edge_averaging() {
        let s = slab_scene();
        let g = generate(&s, 10.0, 30e9).unwrap();
        let m = assign_materials(&s, &g).unwrap();
        let kz = g.line_index(2, 0.5e-3, 1e-15).unwrap();
        // x-directed edge on the interface, interior in y, cells of equal height
        let dz = g.spacing(2);
        assert_relative_eq!(dz[kz - 1], dz[kz], max_relative = 1e-9);
        let idx = g.index(1, 1, kz);
        assert_relative_eq!(m.eps_r[0][idx], (11.45 + 3.9) / 2.0, max_relative = 1e-12);
        let inside = g.index(1, 1, 1);
        assert_relative_eq!(m.eps_r[0][inside], 11.45, max_relative = 1e-12);
        assert_relative_eq!(m.sigma[0][inside], 4.26e-7, max_relative = 1e-12);
    }

    #[test]
    fn sheet_pec_dominates() {
        let mut s = slab_scene();
        s.primitives.push(Primitive::new(
            "plate",
            Shape::Sheet {
                min: [0.2e-3, 0.2e-3, 0.5e-3],
                max: [0.8e-3, 0.8e-3, 0.5e-3],
            },
            "PEC",
            1,
        ));
        let g = generate(&s, 10.0, 30e9).unwrap();
        let m = assign_materials(&s, &g).unwrap();
        let kz = g.line_index(2, 0.5e-3, 1e-15).unwrap();
        let i = g.nearest_line(0, 0.5e-3);
        let j = g.nearest_line(1, 0.5e-3);
        assert!(m.pec[0][g.index(i, j, kz)]);
        assert!(m.pec[1][g.index(i, j, kz)]);
        assert!(!m.pec[2][g.index(i, j, kz)]);
        assert!(m.sheets.is_empty());
    }

    #[test]
    fn onchip_materials_and_ports() {
        let s = chip(TemperatureClass::Room);
        let g = generate(&s, 15.0, 32e9).unwrap();
        let m = assign_materials(&s, &g).unwrap();
        assert_eq!(m.ports.len(), 2);
        assert!(!m.sheets.is_empty());
        let sig = m.sheets[0].sheet_sigma(28e9).unwrap();
        assert!(sig > 1e6);
        for p in &m.ports {
            assert_relative_eq!(p.length, 15e-6, max_relative = 1e-9);
            assert_eq!(p.component, 0);
        }
        // Determinism of the whole pipeline.
        let m2 = assign_materials(&s, &generate(&s, 15.0, 32e9).unwrap()).unwrap();
        assert!(m == m2);
    }

    #[test]
    fn port_spanning_several_edges_rejected() {
        let mut s = slab_scene();
        s.ports.push(Port {
            id: 1,
            start: [0.1e-3, 0.5e-3, 0.5e-3],
            end: [0.9e-3, 0.5e-3, 0.5e-3],
            polarity: 1,
            source_resistance: 50.0,
            role: PortRole::Active,
        });
        let g = generate(&s, 10.0, 30e9);
        assert!(g.is_err() || assign_materials(&s, &g.unwrap()).is_err());
    }
}
