//! Declarative scene description: a layered stack, geometric primitives,
//! lumped ports and the outer boundary. All lengths are in meters.

mod file;
mod presets;
mod validate;

pub use file::{from_json, read_scene, to_json, write_scene, LengthUnit, SceneFile, SCHEMA_VERSION};
pub use presets::{
    build_cryostat, build_preset, preset_cryostat, preset_hertzian_dipole, preset_names, preset_onchip_dipole,
    preset_rect_cavity, preset_registry, preset_thin_dipole, CryostatLayout, OnChipParams,
    PresetParams, ScenePreset,
};
pub use validate::{validate, Diagnostic, Severity, Subject};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{Material, MaterialLibrary, TemperatureClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }

    /// The two other axes in cyclic order (`X -> (Y, Z)`).
    pub fn others(self) -> (Axis, Axis) {
        let i = self.index();
        (Axis::from_index(i + 1), Axis::from_index(i + 2))
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.min[a] > self.max[a])
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        let mut b = *self;
        for a in 0..3 {
            b.min[a] = b.min[a].min(other.min[a]);
            b.max[a] = b.max[a].max(other.max[a]);
        }
        b
    }

    pub fn expand(&self, pad: f64) -> Bounds {
        let mut b = *self;
        for a in 0..3 {
            b.min[a] -= pad;
            b.max[a] += pad;
        }
        b
    }

    pub fn size(&self, axis: Axis) -> f64 {
        self.max[axis.index()] - self.min[axis.index()]
    }

    pub fn volume(&self) -> f64 {
        Axis::ALL.iter().map(|&a| self.size(a)).product()
    }

    /// Closed containment with an absolute tolerance.
    pub fn contains(&self, p: [f64; 3], tol: f64) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] - tol && p[a] <= self.max[a] + tol)
    }

    pub fn contains_bounds(&self, other: &Bounds, tol: f64) -> bool {
        self.contains(other.min, tol) && self.contains(other.max, tol)
    }

    /// Overlap with positive measure; flat extents (sheets) count as planes.
    pub fn overlaps(&self, other: &Bounds, tol: f64) -> bool {
        (0..3).all(|a| {
            let lo = self.min[a].max(other.min[a]);
            let hi = self.max[a].min(other.max[a]);
            let flat = self.min[a] == self.max[a] || other.min[a] == other.max[a];
            if flat {
                hi >= lo - tol
            } else {
                hi - lo > tol
            }
        })
    }

    pub fn scaled(&self, s: f64) -> Bounds {
        Bounds {
            min: self.min.map(|v| v * s),
            max: self.max.map(|v| v * s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub material: String,
    pub thickness: f64,
    /// Minimum number of mesh cells across the layer.
    #[serde(default = "two_cells")]
    pub min_cells: u32,
}

fn two_cells() -> u32 {
    2
}

impl Layer {
    pub fn new(material: &str, thickness: f64) -> Self {
        Self {
            name: None,
            material: material.to_string(),
            thickness,
            min_cells: 2,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_min_cells(mut self, n: u32) -> Self {
        self.min_cells = n;
        self
    }
}

/// Horizontal layers stacked upward from `z_bottom` over a rectangular footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    /// `[x_min, y_min]` of the footprint.
    pub footprint_min: [f64; 2],
    /// `[x_max, y_max]` of the footprint.
    pub footprint_max: [f64; 2],
    pub z_bottom: f64,
    /// Layers from bottom to top.
    pub layers: Vec<Layer>,
    /// Priority of the layers relative to primitives.
    #[serde(default)]
    pub priority: i32,
}

impl LayerStack {
    /// z of every interface, bottom first: `layers.len() + 1` values.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = vec![self.z_bottom];
        let mut acc = 0.0;
        for l in &self.layers {
            acc += l.thickness;
            z.push(self.z_bottom + acc);
        }
        z
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    pub fn z_top(&self) -> f64 {
        self.z_bottom + self.total_thickness()
    }

    pub fn layer_bounds(&self, i: usize) -> Bounds {
        let z = self.interfaces();
        Bounds::new(
            [self.footprint_min[0], self.footprint_min[1], z[i]],
            [self.footprint_max[0], self.footprint_max[1], z[i + 1]],
        )
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(
            [self.footprint_min[0], self.footprint_min[1], self.z_bottom],
            [self.footprint_max[0], self.footprint_max[1], self.z_top()],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    /// Zero-thickness rectangle: `min` and `max` agree on exactly one axis.
    Sheet {
        min: [f64; 3],
        max: [f64; 3],
    },
    /// Circular cylinder along `axis`; `center` holds the two other
    /// coordinates in cyclic order, `range` the extent along the axis.
    Cylinder {
        axis: Axis,
        center: [f64; 2],
        radius: f64,
        range: [f64; 2],
    },
    /// Infinitely thin straight conductor along a grid line:
    /// `min` and `max` agree on exactly two axes.
    Wire {
        min: [f64; 3],
        max: [f64; 3],
    },
}

impl Shape {
    pub fn bounds(&self) -> Bounds {
        match self {
            Shape::Box { min, max } | Shape::Sheet { min, max } | Shape::Wire { min, max } => {
                Bounds::new(*min, *max)
            }
            Shape::Cylinder {
                axis,
                center,
                radius,
                range,
            } => {
                let (u, v) = axis.others();
                let mut b = Bounds::new([0.0; 3], [0.0; 3]);
                b.min[axis.index()] = range[0];
                b.max[axis.index()] = range[1];
                b.min[u.index()] = center[0] - radius;
                b.max[u.index()] = center[0] + radius;
                b.min[v.index()] = center[1] - radius;
                b.max[v.index()] = center[1] + radius;
                b
            }
        }
    }

    /// Normal axis of a sheet.
    pub fn sheet_normal(&self) -> Option<Axis> {
        match self {
            Shape::Sheet { min, max } => {
                let flat: Vec<usize> = (0..3).filter(|&a| min[a] == max[a]).collect();
                (flat.len() == 1).then(|| Axis::from_index(flat[0]))
            }
            _ => None,
        }
    }

    /// Direction of a wire.
    pub fn wire_axis(&self) -> Option<Axis> {
        match self {
            Shape::Wire { min, max } => {
                let long: Vec<usize> = (0..3).filter(|&a| min[a] != max[a]).collect();
                (long.len() == 1).then(|| Axis::from_index(long[0]))
            }
            _ => None,
        }
    }

    /// Point membership for volumetric shapes.
    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        match self {
            Shape::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
            Shape::Cylinder {
                axis,
                center,
                radius,
                range,
            } => {
                let (u, v) = axis.others();
                let w = p[axis.index()];
                let du = p[u.index()] - center[0];
                let dv = p[v.index()] - center[1];
                w >= range[0] && w <= range[1] && du * du + dv * dv <= radius * radius
            }
            Shape::Sheet { .. } | Shape::Wire { .. } => false,
        }
    }

    pub fn is_volume(&self) -> bool {
        matches!(self, Shape::Box { .. } | Shape::Cylinder { .. })
    }

    fn scale(&mut self, s: f64) {
        match self {
            Shape::Box { min, max } | Shape::Sheet { min, max } | Shape::Wire { min, max } => {
                *min = min.map(|v| v * s);
                *max = max.map(|v| v * s);
            }
            Shape::Cylinder {
                center,
                radius,
                range,
                ..
            } => {
                *center = center.map(|v| v * s);
                *radius *= s;
                *range = range.map(|v| v * s);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub shape: Shape,
    pub material: String,
    /// Higher priority wins where primitives overlap; ties go to the later one.
    #[serde(default)]
    pub priority: i32,
}

impl Primitive {
    pub fn new(name: &str, shape: Shape, material: &str, priority: i32) -> Self {
        Self {
            name: Some(name.to_string()),
            shape,
            material: material.to_string(),
            priority,
        }
    }

    pub fn label(&self, index: usize) -> String {
        match &self.name {
            Some(n) => format!("primitive {index} ({n})"),
            None => format!("primitive {index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Active,
    Passive,
}

/// Lumped Thevenin port on an axis-aligned segment from `start` to `end`.
///
/// With `polarity = +1` the positive terminal is at `end`; with `-1` it is at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub id: u32,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub polarity: i8,
    pub source_resistance: f64,
    pub role: PortRole,
}

impl Port {
    pub fn axis(&self) -> Option<Axis> {
        let long: Vec<usize> = (0..3).filter(|&a| self.start[a] != self.end[a]).collect();
        (long.len() == 1).then(|| Axis::from_index(long[0]))
    }

    pub fn length(&self) -> f64 {
        (0..3).map(|a| (self.end[a] - self.start[a]).abs()).sum()
    }

    pub fn midpoint(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| 0.5 * (self.start[a] + self.end[a]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    /// Convolutional PML of `thickness` cells backed by a PEC wall.
    Cpml { thickness: usize },
    Pec,
}

impl Boundary {
    pub const MIN_CPML_CELLS: usize = 6;

    pub fn cpml_cells(&self) -> usize {
        match self {
            Boundary::Cpml { thickness } => *thickness,
            Boundary::Pec => 0,
        }
    }
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Cpml { thickness: 8 }
    }
}

/// Local mesh refinement: cells inside `region` are no larger than `max_cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub region: Bounds,
    pub max_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub temperature: TemperatureClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<LayerStack>,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    #[serde(default)]
    pub ports: Vec<Port>,
    #[serde(default)]
    pub boundary: Boundary,
    /// Free space between the geometry and the boundary (ignored when
    /// `domain` is given).
    #[serde(default)]
    pub domain_padding: f64,
    /// Explicit computational domain, excluding any CPML cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Bounds>,
    /// Materials added to or overriding the built-in library.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub materials: Vec<Material>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinements: Vec<Refinement>,
}

impl Scene {
    pub fn new(name: &str, temperature: TemperatureClass) -> Self {
        Self {
            name: name.to_string(),
            temperature,
            stack: None,
            primitives: Vec::new(),
            ports: Vec::new(),
            boundary: Boundary::default(),
            domain_padding: 0.0,
            domain: None,
            materials: Vec::new(),
            refinements: Vec::new(),
        }
    }

    /// Bounding box of the stack and all primitives.
    pub fn geometry_bounds(&self) -> Bounds {
        let mut b = Bounds::empty();
        if let Some(s) = &self.stack {
            b = b.union(&s.bounds());
        }
        for p in &self.primitives {
            b = b.union(&p.shape.bounds());
        }
        b
    }

    /// Computational domain (without CPML).
    pub fn domain_bounds(&self) -> Result<Bounds> {
        if let Some(d) = self.domain {
            return Ok(d);
        }
        let g = self.geometry_bounds();
        if g.is_empty() {
            return Err(Error::InvalidScene(
                "scene has no geometry and no explicit domain".into(),
            ));
        }
        Ok(g.expand(self.domain_padding))
    }

    /// Built-in materials plus the scene's own definitions.
    pub fn material_library(&self) -> Result<MaterialLibrary> {
        let mut lib = MaterialLibrary::builtin();
        for m in &self.materials {
            lib.insert(m.clone())?;
        }
        Ok(lib)
    }

    pub fn active_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.role == PortRole::Active)
    }

    pub fn with_temperature(mut self, temperature: TemperatureClass) -> Self {
        self.temperature = temperature;
        self
    }

    /// Multiplies every length by `s`.
    pub fn scale_lengths(&mut self, s: f64) {
        if let Some(st) = &mut self.stack {
            st.footprint_min = st.footprint_min.map(|v| v * s);
            st.footprint_max = st.footprint_max.map(|v| v * s);
            st.z_bottom *= s;
            for l in &mut st.layers {
                l.thickness *= s;
            }
        }
        for p in &mut self.primitives {
            p.shape.scale(s);
        }
        for p in &mut self.ports {
            p.start = p.start.map(|v| v * s);
            p.end = p.end.map(|v| v * s);
        }
        self.domain_padding *= s;
        self.domain = self.domain.map(|d| d.scaled(s));
        for r in &mut self.refinements {
            r.region = r.region.scaled(s);
            r.max_cell *= s;
        }
    }

    /// Runs [`validate`] and turns any error-severity diagnostic into an error.
    pub fn checked(self) -> Result<Self> {
        let errors: Vec<String> = validate(&self)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidScene(errors.join("; ")))
        }
    }
}
