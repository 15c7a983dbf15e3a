use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{Boundary, PortRole, Scene, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// What a diagnostic refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    Scene,
    Layer(usize),
    Primitive(usize),
    Port(u32),
    Material(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.subject {
            Subject::Scene => write!(f, "{sev}: {}", self.message),
            Subject::Layer(i) => write!(f, "{sev}: layer {i}: {}", self.message),
            Subject::Primitive(i) => write!(f, "{sev}: primitive {i}: {}", self.message),
            Subject::Port(id) => write!(f, "{sev}: port {id}: {}", self.message),
            Subject::Material(m) => write!(f, "{sev}: material {m}: {}", self.message),
        }
    }
}

/// Checks every scene invariant. An empty list means the scene is valid;
/// warnings (such as equal-priority overlaps) are reported but do not block use.
pub fn validate(scene: &Scene) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut err = |subject, message: String| {
        out.push(Diagnostic {
            severity: Severity::Error,
            subject,
            message,
        })
    };

    let lib = match scene.material_library() {
        Ok(l) => Some(l),
        Err(e) => {
            err(Subject::Scene, format!("material definitions: {e}"));
            None
        }
    };
    let known = |name: &str| lib.as_ref().is_none_or(|l| l.contains(name));

    if let Some(st) = &scene.stack {
        if st.layers.is_empty() {
            err(Subject::Scene, "layer stack has no layers".into());
        }
        for a in 0..2 {
            if !(st.footprint_max[a] > st.footprint_min[a]) {
                err(Subject::Scene, "layer stack footprint must have positive extent".into());
                break;
            }
        }
        for (i, l) in st.layers.iter().enumerate() {
            if !(l.thickness > 0.0) || !l.thickness.is_finite() {
                err(Subject::Layer(i), format!("thickness must be positive, got {}", l.thickness));
            }
            if l.min_cells == 0 {
                err(Subject::Layer(i), "min_cells must be at least 1".into());
            }
            if !known(&l.material) {
                err(Subject::Layer(i), format!("unknown material '{}'", l.material));
            }
        }
    }

    for (i, p) in scene.primitives.iter().enumerate() {
        if !known(&p.material) {
            err(Subject::Primitive(i), format!("unknown material '{}'", p.material));
        }
        let b = p.shape.bounds();
        if !(0..3).all(|a| b.min[a].is_finite() && b.max[a].is_finite()) {
            err(Subject::Primitive(i), "non-finite coordinates".into());
            continue;
        }
        match &p.shape {
            Shape::Box { min, max } => {
                if !(0..3).all(|a| max[a] > min[a]) {
                    err(Subject::Primitive(i), "box extents must be positive on every axis".into());
                }
            }
            Shape::Sheet { min, max } => {
                if p.shape.sheet_normal().is_none() || (0..3).any(|a| max[a] < min[a]) {
                    err(
                        Subject::Primitive(i),
                        "sheet must be an axis-aligned rectangle (flat on exactly one axis)".into(),
                    );
                }
            }
            Shape::Wire { min, max } => {
                if p.shape.wire_axis().is_none() || (0..3).any(|a| max[a] < min[a]) {
                    err(Subject::Primitive(i), "wire must be a segment along one axis".into());
                }
                if let Some(l) = &lib {
                    if let Ok(m) = l.lookup(&p.material) {
                        if !m.is_pec() {
                            err(Subject::Primitive(i), "wires must be PEC".into());
                        }
                    }
                }
            }
            Shape::Cylinder { radius, range, .. } => {
                if !(*radius > 0.0) || !(range[1] > range[0]) {
                    err(Subject::Primitive(i), "cylinder radius and length must be positive".into());
                }
            }
        }
    }

    if let Boundary::Cpml { thickness } = scene.boundary {
        if thickness < Boundary::MIN_CPML_CELLS {
            err(
                Subject::Scene,
                format!(
                    "CPML thickness {thickness} is below the minimum of {} cells",
                    Boundary::MIN_CPML_CELLS
                ),
            );
        }
    }
    if !(scene.domain_padding >= 0.0) {
        err(Subject::Scene, "domain padding must be non-negative".into());
    }

    if scene.active_ports().next().is_none() {
        err(Subject::Scene, "at least one active port is required".into());
    }
    let domain = scene.domain_bounds().ok();
    let tol = domain.map_or(0.0, |d| 1e-9 * d.size(super::Axis::X).max(d.size(super::Axis::Z)));
    let mut ids = BTreeSet::new();
    for port in &scene.ports {
        let s = Subject::Port(port.id);
        if !ids.insert(port.id) {
            err(s.clone(), "duplicate port id".into());
        }
        if port.axis().is_none() {
            err(s.clone(), "port must be a segment along exactly one axis".into());
        }
        if port.polarity != 1 && port.polarity != -1 {
            err(s.clone(), format!("polarity must be +1 or -1, got {}", port.polarity));
        }
        if !(port.source_resistance > 0.0) || !port.source_resistance.is_finite() {
            err(s.clone(), "source resistance must be positive".into());
        }
        if let Some(d) = domain {
            if !d.contains(port.start, tol) || !d.contains(port.end, tol) {
                err(s, "port lies outside the computational domain".into());
            }
        }
    }
    let active: Vec<_> = scene.ports.iter().filter(|p| p.role == PortRole::Active).collect();
    let has_pos = active.iter().any(|p| p.polarity == 1);
    let has_neg = active.iter().any(|p| p.polarity == -1);
    if has_pos && has_neg {
        let r0 = active[0].source_resistance;
        if active.iter().any(|p| p.source_resistance != r0) {
            err(
                Subject::Scene,
                "differential ports must share the same source resistance".into(),
            );
        }
    }

    if let Some(d) = domain {
        if let Some(st) = &scene.stack {
            if !d.contains_bounds(&st.bounds(), tol) {
                err(Subject::Scene, "layer stack extends beyond the domain".into());
            }
        }
        for (i, p) in scene.primitives.iter().enumerate() {
            if !d.contains_bounds(&p.shape.bounds(), tol) {
                err(Subject::Primitive(i), "primitive extends beyond the domain".into());
            }
        }
    }

    // Sheets sharing a plane with equal priority: the later one wins.
    for (i, a) in scene.primitives.iter().enumerate() {
        let Some(na) = a.shape.sheet_normal() else {
            continue;
        };
        for (j, b) in scene.primitives.iter().enumerate().skip(i + 1) {
            if b.shape.sheet_normal() != Some(na) || a.priority != b.priority {
                continue;
            }
            if a.material != b.material && a.shape.bounds().overlaps(&b.shape.bounds(), 0.0) {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    subject: Subject::Primitive(j),
                    message: format!(
                        "overlaps primitive {i} with equal priority {}; primitive {j} wins",
                        a.priority
                    ),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::TemperatureClass;
    use crate::scene::{preset_onchip_dipole, OnChipParams, Primitive};

    fn chip() -> Scene {
        preset_onchip_dipole(TemperatureClass::Cryogenic, &OnChipParams::default()).unwrap()
    }

    #[test]
    fn preset_is_clean() {
        assert_eq!(validate(&chip()), vec![]);
    }

    #[test]
    fn port_outside_domain() {
        let mut s = chip();
        s.ports[0].start = [1.0, 0.0, 0.0];
        s.ports[0].end = [1.001, 0.0, 0.0];
        let d = validate(&s);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].subject, Subject::Port(s.ports[0].id));
    }

    #[test]
    fn overlapping_sheets_warn() {
        let mut s = chip();
        let sheet = |m: &str| {
            Primitive::new(
                m,
                Shape::Sheet {
                    min: [-1e-4, -1e-4, 1e-5],
                    max: [1e-4, 1e-4, 1e-5],
                },
                m,
                3,
            )
        };
        s.primitives.push(sheet("Cu"));
        s.primitives.push(sheet("PEC"));
        let d = validate(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!(d[0].subject, Subject::Primitive(s.primitives.len() - 1));
    }

    #[test]
    fn invariant_violations() {
        let mut s = chip();
        s.boundary = Boundary::Cpml { thickness: 4 };
        s.ports.iter_mut().for_each(|p| p.role = PortRole::Passive);
        s.primitives[0].material = "Unobtainium".into();
        let d = validate(&s);
        assert_eq!(d.iter().filter(|d| d.severity == Severity::Error).count(), 3);
    }
}
