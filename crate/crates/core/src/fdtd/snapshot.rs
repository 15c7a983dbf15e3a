//! Planar field slices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::YeeGrid;
use crate::scene::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldComponent {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
    /// `|E|`
    EMag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRequest {
    pub step: usize,
    /// Plane normal.
    pub axis: Axis,
    pub coordinate: f64,
    pub component: FieldComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub step: usize,
    pub axis: Axis,
    /// Coordinate of the mesh line the slice was taken on.
    pub coordinate: f64,
    pub component: FieldComponent,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Row-major, `values[iu * v.len() + iv]`.
    pub values: Vec<f64>,
}

/// Linear interpolation bracket of `x` in ascending `coords`: `(i, w)` such
/// that the value is `(1 - w) f[i] + w f[i + 1]`.
fn bracket(coords: &[f64], x: f64) -> (usize, f64) {
    if coords.len() == 1 {
        return (0, 0.0);
    }
    let p = coords.partition_point(|&c| c <= x).clamp(1, coords.len() - 1);
    let (a, b) = (coords[p - 1], coords[p]);
    (p - 1, ((x - a) / (b - a)).clamp(0.0, 1.0))
}

/// Trilinear sample of a staggered component at `point`.
pub fn sample(grid: &YeeGrid, field: &[f32], electric: bool, comp: usize, point: [f64; 3]) -> f64 {
    let mut br = [(0usize, 0.0f64); 3];
    for a in 0..3 {
        let l = &grid.lines[a];
        // E_c is at cell centres along c; H_c at cell centres across c.
        let centred = if electric { a == comp } else { a != comp };
        if centred {
            let c: Vec<f64> = l.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            br[a] = bracket(&c, point[a]);
        } else {
            br[a] = bracket(l, point[a]);
        }
    }
    let mut s = 0.0;
    for di in 0..2 {
        for dj in 0..2 {
            for dk in 0..2 {
                let w = [(di, 0), (dj, 1), (dk, 2)]
                    .iter()
                    .map(|&(d, a)| if d == 0 { 1.0 - br[a].1 } else { br[a].1 })
                    .product::<f64>();
                if w == 0.0 {
                    continue;
                }
                let ijk = [br[0].0 + di, br[1].0 + dj, br[2].0 + dk];
                if (0..3).any(|a| ijk[a] >= grid.lines[a].len()) {
                    continue;
                }
                s += w * field[grid.index(ijk[0], ijk[1], ijk[2])] as f64;
            }
        }
    }
    s
}

impl SnapshotRequest {
    pub fn check(&self, grid: &YeeGrid) -> Result<()> {
        let a = self.axis.index();
        let l = &grid.lines[a];
        if !(self.coordinate >= l[0] && self.coordinate <= l[l.len() - 1]) {
            return Err(Error::Geometry(format!(
                "snapshot plane {}={:e} lies outside the domain",
                ["x", "y", "z"][a],
                self.coordinate
            )));
        }
        Ok(())
    }

    pub fn take(&self, grid: &YeeGrid, e: &[Vec<f32>; 3], h: &[Vec<f32>; 3]) -> Snapshot {
        let a = self.axis.index();
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        let line = grid.nearest_line(a, self.coordinate);
        let coord = grid.lines[a][line];
        let centers = |ax: usize| -> Vec<f64> {
            grid.lines[ax].windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
        };
        let (cu, cv) = (centers(u), centers(v));
        let mut values = Vec::with_capacity(cu.len() * cv.len());
        for &x in &cu {
            for &y in &cv {
                let mut p = [0.0; 3];
                p[a] = coord;
                p[u] = x;
                p[v] = y;
                let val = match self.component {
                    FieldComponent::Ex => sample(grid, &e[0], true, 0, p),
                    FieldComponent::Ey => sample(grid, &e[1], true, 1, p),
                    FieldComponent::Ez => sample(grid, &e[2], true, 2, p),
                    FieldComponent::Hx => sample(grid, &h[0], false, 0, p),
                    FieldComponent::Hy => sample(grid, &h[1], false, 1, p),
                    FieldComponent::Hz => sample(grid, &h[2], false, 2, p),
                    FieldComponent::EMag => (0..3)
                        .map(|c| sample(grid, &e[c], true, c, p).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                };
                values.push(val);
            }
        }
        Snapshot {
            step: self.step,
            axis: self.axis,
            coordinate: coord,
            component: self.component,
            u: cu,
            v: cv,
            values,
        }
    }
}

impl Snapshot {
    pub fn shape(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    pub fn value(&self, iu: usize, iv: usize) -> f64 {
        self.values[iu * self.v.len() + iv]
    }

    /// Long-format CSV: `u,v,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u_m,v_m,value\n");
        for (iu, &x) in self.u.iter().enumerate() {
            for (iv, &y) in self.v.iter().enumerate() {
                let _ = writeln!(s, "{x:e},{y:e},{:e}", self.value(iu, iv));
            }
        }
        s
    }
}
