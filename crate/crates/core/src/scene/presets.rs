//! Built-in scenes, registered by name.

use crate::constants::C0;
use crate::design::DEFAULT_PORT_IMPEDANCE;
use crate::error::{Error, Result};
use crate::materials::TemperatureClass;

use super::{
    Axis, Boundary, Bounds, Layer, LayerStack, Port, PortRole, Primitive, Refinement, Scene, Shape,
};

/// Geometry of the on-chip differential dipole.
#[derive(Debug, Clone, PartialEq)]
pub struct OnChipParams {
    pub si_thickness: f64,
    /// Tip-to-tip dipole length including the feed gap.
    pub length: f64,
    pub gap: f64,
    pub arm_width: f64,
    pub sio2_thickness: f64,
    pub metal_thickness: f64,
    /// Side of the square chip (Si and SiO2 footprint); grown if the dipole
    /// would come closer than 0.46 mm to its edge.
    pub chip_size: f64,
    pub padding: f64,
    pub cpml_cells: usize,
    pub port_resistance: f64,
    /// Floating ground pads of the GSSG probe footprint beside the feed.
    pub ground_pads: bool,
}

impl Default for OnChipParams {
    fn default() -> Self {
        Self {
            si_thickness: 0.30e-3,
            length: 2.8e-3,
            gap: 0.03e-3,
            arm_width: 20e-6,
            sio2_thickness: 3.823e-6,
            metal_thickness: 3.5e-6,
            chip_size: 3.72e-3,
            padding: 3.0e-3,
            cpml_cells: 8,
            port_resistance: DEFAULT_PORT_IMPEDANCE,
            ground_pads: true,
        }
    }
}

/// Minimum chip margin around the dipole tips.
const CHIP_EDGE_MARGIN: f64 = 0.46e-3;

/// Copper dipole sheets on SiO2 over a Si substrate, fed across the gap by two
/// series ports of opposite polarity sharing the gap midpoint.
///
/// The top of the oxide is `z = 0`; the feed gap is centred on the origin and
/// the dipole lies along x.
pub fn preset_onchip_dipole(temp: TemperatureClass, p: &OnChipParams) -> Result<Scene> {
    if !(1e-4..=5e-4).contains(&p.si_thickness) {
        return Err(Error::Geometry(format!(
            "Si thickness {} m outside [0.1, 0.5] mm",
            p.si_thickness
        )));
    }
    if !(1e-3..=5e-3).contains(&p.length) {
        return Err(Error::Geometry(format!("dipole length {} m outside [1, 5] mm", p.length)));
    }
    if !(p.gap > 0.0 && p.gap < p.length / 2.0) {
        return Err(Error::Geometry(format!("feed gap {} m must be in (0, L/2)", p.gap)));
    }
    if !(p.arm_width > 0.0 && p.sio2_thickness > 0.0 && p.metal_thickness > 0.0) {
        return Err(Error::Geometry("arm width and layer thicknesses must be positive".into()));
    }
    if !(p.chip_size > 0.0) {
        return Err(Error::Geometry("chip size must be positive".into()));
    }
    let chip = p.chip_size.max(p.length + 2.0 * CHIP_EDGE_MARGIN);
    let half = chip / 2.0;
    let mut s = Scene::new("onchip-dipole", temp);
    s.stack = Some(LayerStack {
        footprint_min: [-half, -half],
        footprint_max: [half, half],
        z_bottom: -(p.si_thickness + p.sio2_thickness),
        layers: vec![
            Layer::new("Si", p.si_thickness).named("substrate"),
            Layer::new("SiO2", p.sio2_thickness).named("oxide"),
            // Metal level: the trace itself is a sheet at its bottom face.
            Layer::new("Vacuum", p.metal_thickness)
                .named("M7")
                .with_min_cells(1),
        ],
        priority: 0,
    });
    let (g, l, w) = (p.gap / 2.0, p.length / 2.0, p.arm_width / 2.0);
    s.primitives.push(Primitive::new(
        "arm+",
        Shape::Sheet {
            min: [g, -w, 0.0],
            max: [l, w, 0.0],
        },
        "Cu",
        1,
    ));
    s.primitives.push(Primitive::new(
        "arm-",
        Shape::Sheet {
            min: [-l, -w, 0.0],
            max: [-g, w, 0.0],
        },
        "Cu",
        1,
    ));
    if p.ground_pads {
        // Square pads of side W flanking the signal pads (the arm ends).
        let side = p.arm_width;
        for (name, sx, sy) in [("gnd+", 1.0, 1.0), ("gnd-", -1.0, -1.0)] {
            let x0 = sx * g;
            let x1 = sx * (g + side);
            let y0 = sy * 1.5 * side;
            let y1 = sy * 2.5 * side;
            s.primitives.push(Primitive::new(
                name,
                Shape::Sheet {
                    min: [x0.min(x1), y0.min(y1), 0.0],
                    max: [x0.max(x1), y0.max(y1), 0.0],
                },
                "Cu",
                1,
            ));
        }
    }
    s.ports = differential_feed(p.gap, p.port_resistance);
    s.boundary = Boundary::Cpml {
        thickness: p.cpml_cells,
    };
    s.domain_padding = p.padding;
    Ok(s)
}

/// Two series ports across an x-directed gap centred on the origin.
/// Port 1 drives the `+x` arm, port 2 the `-x` arm.
fn differential_feed(gap: f64, r: f64) -> Vec<Port> {
    vec![
        Port {
            id: 1,
            start: [0.0, 0.0, 0.0],
            end: [gap / 2.0, 0.0, 0.0],
            polarity: 1,
            source_resistance: r,
            role: PortRole::Active,
        },
        Port {
            id: 2,
            start: [-gap / 2.0, 0.0, 0.0],
            end: [0.0, 0.0, 0.0],
            polarity: -1,
            source_resistance: r,
            role: PortRole::Active,
        },
    ]
}

/// Cryostat enclosure: a closed metal cylinder with three horizontal cooling
/// plates, and the on-chip antenna placed above the middle plate.
#[derive(Debug, Clone, PartialEq)]
pub struct CryostatLayout {
    pub radius: f64,
    pub height: f64,
    /// Height of the bottom cooling plate's top face above the floor.
    pub bottom_plate: f64,
    /// Bottom-to-middle plate spacing.
    pub spacing_low: f64,
    /// Middle-to-top plate spacing.
    pub spacing_high: f64,
    pub plate_thickness: f64,
    pub wall_thickness: f64,
    /// Height of the chip above the middle plate.
    pub chip_gap: f64,
    pub wall_material: String,
    /// Enclosure dimensions are divided by this factor; the chip keeps its size.
    pub scale_down: f64,
    pub chip: OnChipParams,
}

impl Default for CryostatLayout {
    fn default() -> Self {
        Self {
            radius: 0.15,
            height: 0.70,
            bottom_plate: 0.20,
            spacing_low: 0.10,
            spacing_high: 0.15,
            plate_thickness: 5e-3,
            wall_thickness: 5e-3,
            chip_gap: 0.06,
            wall_material: "Cu".into(),
            scale_down: 1.0,
            chip: OnChipParams {
                length: 3.06e-3,
                chip_size: 3.72e-3,
                ..OnChipParams::default()
            },
        }
    }
}

impl CryostatLayout {
    /// z of the top faces of the three plates.
    pub fn plate_levels(&self) -> [f64; 3] {
        let s = 1.0 / self.scale_down;
        let b = self.bottom_plate * s;
        [b, b + self.spacing_low * s, b + (self.spacing_low + self.spacing_high) * s]
    }

    pub fn scaled_down(factor: f64) -> Self {
        Self {
            scale_down: factor,
            ..Self::default()
        }
    }
}

pub fn preset_cryostat(
    level_spacing_low: f64,
    level_spacing_high: f64,
) -> Result<Scene> {
    build_cryostat(
        TemperatureClass::Cryogenic,
        &CryostatLayout {
            spacing_low: level_spacing_low,
            spacing_high: level_spacing_high,
            ..CryostatLayout::default()
        },
    )
}

pub fn build_cryostat(temp: TemperatureClass, c: &CryostatLayout) -> Result<Scene> {
    if !(c.spacing_low > 0.0 && c.spacing_high > 0.0) {
        return Err(Error::Geometry("plate spacings must be positive".into()));
    }
    if !(c.radius > 0.0 && c.height > 0.0 && c.scale_down >= 1.0) {
        return Err(Error::Geometry(
            "cryostat radius and height must be positive, scale factor >= 1".into(),
        ));
    }
    if c.bottom_plate + c.spacing_low + c.spacing_high >= c.height {
        return Err(Error::Geometry(format!(
            "plates at {} + {} + {} m do not fit below the height {} m",
            c.bottom_plate, c.spacing_low, c.spacing_high, c.height
        )));
    }
    let k = 1.0 / c.scale_down;
    let (r, h, t, wt) = (c.radius * k, c.height * k, c.plate_thickness * k, c.wall_thickness * k);
    let levels = c.plate_levels();
    let chip_z = levels[1] + c.chip_gap * k;
    if chip_z + c.chip.si_thickness >= levels[2] - t {
        return Err(Error::Geometry("chip does not fit between the plates".into()));
    }
    let chip = preset_onchip_dipole(temp, &c.chip)?;
    let mut s = Scene::new(
        if c.scale_down == 1.0 { "cryostat" } else { "cryostat-scaled" },
        temp,
    );
    let cyl = |radius: f64, z0: f64, z1: f64| Shape::Cylinder {
        axis: Axis::Z,
        center: [0.0, 0.0],
        radius,
        range: [z0, z1],
    };
    s.primitives.push(Primitive::new("shell", cyl(r + wt, -wt, h + wt), &c.wall_material, 0));
    s.primitives.push(Primitive::new("interior", cyl(r, 0.0, h), "Vacuum", 1));
    for (i, z) in levels.iter().enumerate() {
        s.primitives.push(Primitive::new(
            &format!("plate{}", i + 1),
            cyl(r, z - t, *z),
            &c.wall_material,
            2,
        ));
    }
    // Lift the chip so the bottom of its substrate sits `chip_gap` above the middle plate.
    let mut stack = chip.stack.clone().expect("chip preset has a stack");
    let lift = chip_z - stack.z_bottom;
    stack.z_bottom += lift;
    stack.priority = 3;
    s.stack = Some(stack);
    for mut p in chip.primitives {
        if let Shape::Sheet { min, max } = &mut p.shape {
            min[2] += lift;
            max[2] += lift;
        }
        p.priority = 4;
        s.primitives.push(p);
    }
    for mut p in chip.ports {
        p.start[2] += lift;
        p.end[2] += lift;
        s.ports.push(p);
    }
    s.boundary = Boundary::Pec;
    s.domain = Some(Bounds::new([-r - wt, -r - wt, -wt], [r + wt, r + wt, h + wt]));
    Ok(s)
}

/// Centre-fed PEC wire dipole in free space along z, with a one-cell gap.
pub fn preset_thin_dipole(f0: f64, length: f64, gap: f64) -> Result<Scene> {
    if !(f0 > 0.0 && length > 0.0 && gap > 0.0 && gap < length / 2.0) {
        return Err(Error::Geometry(
            "thin dipole needs positive frequency and length and a gap below L/2".into(),
        ));
    }
    let lam = C0 / f0;
    let mut s = Scene::new("thin-dipole", TemperatureClass::Room);
    let (g, l) = (gap / 2.0, length / 2.0);
    s.primitives.push(Primitive::new(
        "arm+",
        Shape::Wire {
            min: [0.0, 0.0, g],
            max: [0.0, 0.0, l],
        },
        "PEC",
        0,
    ));
    s.primitives.push(Primitive::new(
        "arm-",
        Shape::Wire {
            min: [0.0, 0.0, -l],
            max: [0.0, 0.0, -g],
        },
        "PEC",
        0,
    ));
    s.ports.push(Port {
        id: 1,
        start: [0.0, 0.0, -g],
        end: [0.0, 0.0, g],
        polarity: 1,
        source_resistance: DEFAULT_PORT_IMPEDANCE,
        role: PortRole::Active,
    });
    let near = 5.0 * gap;
    s.refinements.push(Refinement {
        region: Bounds::new([-near, -near, -l - near], [near, near, l + near]),
        max_cell: gap,
    });
    s.boundary = Boundary::Cpml { thickness: 8 };
    s.domain_padding = lam / 4.0;
    Ok(s)
}

/// Single driven edge of length `dl` in vacuum: an electrically short current element.
pub fn preset_hertzian_dipole(f0: f64, dl: f64) -> Result<Scene> {
    if !(f0 > 0.0 && dl > 0.0 && dl < C0 / f0 / 10.0) {
        return Err(Error::Geometry("Hertzian dipole must be shorter than lambda/10".into()));
    }
    let lam = C0 / f0;
    let mut s = Scene::new("hertzian-dipole", TemperatureClass::Room);
    s.ports.push(Port {
        id: 1,
        start: [0.0, 0.0, -dl / 2.0],
        end: [0.0, 0.0, dl / 2.0],
        polarity: 1,
        source_resistance: DEFAULT_PORT_IMPEDANCE,
        role: PortRole::Active,
    });
    let near = 2.0 * dl;
    s.refinements.push(Refinement {
        region: Bounds::new([-near; 3], [near; 3]),
        max_cell: dl,
    });
    s.boundary = Boundary::Cpml { thickness: 8 };
    s.domain = Some(Bounds::new([-lam / 3.0; 3], [lam / 3.0; 3]));
    Ok(s)
}

/// Closed PEC box `a x b x d` with a weakly coupled y-directed probe port.
pub fn preset_rect_cavity(a: f64, b: f64, d: f64) -> Result<Scene> {
    if !(a > 0.0 && b > 0.0 && d > 0.0) {
        return Err(Error::Geometry("cavity dimensions must be positive".into()));
    }
    let mut s = Scene::new("rect-cavity", TemperatureClass::Room);
    s.domain = Some(Bounds::new([0.0; 3], [a, b, d]));
    s.boundary = Boundary::Pec;
    // Off-centre so that odd and even modes along x and z are both excited.
    let (x, z) = (0.3 * a, 0.4 * d);
    let dy = b / 32.0;
    s.ports.push(Port {
        id: 1,
        start: [x, 0.5 * b - dy / 2.0, z],
        end: [x, 0.5 * b + dy / 2.0, z],
        polarity: 1,
        source_resistance: 1e4,
        role: PortRole::Active,
    });
    Ok(s)
}

/// Optional overrides shared by all presets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetParams {
    pub temperature: Option<TemperatureClass>,
    pub si_thickness: Option<f64>,
    pub length: Option<f64>,
    pub gap: Option<f64>,
    pub arm_width: Option<f64>,
    pub chip_size: Option<f64>,
    pub frequency: Option<f64>,
    pub scale_down: Option<f64>,
    pub port_resistance: Option<f64>,
}

impl PresetParams {
    fn temperature(&self) -> TemperatureClass {
        self.temperature.unwrap_or(TemperatureClass::Cryogenic)
    }

    fn onchip(&self, base: OnChipParams) -> OnChipParams {
        OnChipParams {
            si_thickness: self.si_thickness.unwrap_or(base.si_thickness),
            length: self.length.unwrap_or(base.length),
            gap: self.gap.unwrap_or(base.gap),
            arm_width: self.arm_width.unwrap_or(base.arm_width),
            chip_size: self.chip_size.unwrap_or(base.chip_size),
            port_resistance: self.port_resistance.unwrap_or(base.port_resistance),
            ..base
        }
    }
}

pub trait ScenePreset: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn build(&self, params: &PresetParams) -> Result<Scene>;
}

struct OnChip;
struct Cryostat;
struct CryostatScaled;
struct ThinDipole;
struct Hertzian;
struct RectCavity;

impl ScenePreset for OnChip {
    fn name(&self) -> &'static str {
        "onchip-dipole"
    }
    fn description(&self) -> &'static str {
        "28 GHz differential Cu dipole on SiO2/Si, open boundaries (L 2.8 mm, gap 0.03 mm, Si 0.30 mm)"
    }
    fn build(&self, p: &PresetParams) -> Result<Scene> {
        preset_onchip_dipole(p.temperature(), &p.onchip(OnChipParams::default()))
    }
}

impl ScenePreset for Cryostat {
    fn name(&self) -> &'static str {
        "cryostat"
    }
    fn description(&self) -> &'static str {
        "full-size cryostat (d 0.30 m, h 0.70 m, plates 0.10/0.15 m apart) with the chip 6 cm above the middle plate"
    }
    fn build(&self, p: &PresetParams) -> Result<Scene> {
        let base = CryostatLayout::default();
        let layout = CryostatLayout {
            chip: p.onchip(base.chip.clone()),
            scale_down: p.scale_down.unwrap_or(1.0),
            ..base
        };
        build_cryostat(p.temperature(), &layout)
    }
}

impl ScenePreset for CryostatScaled {
    fn name(&self) -> &'static str {
        "cryostat-scaled"
    }
    fn description(&self) -> &'static str {
        "cryostat enclosure shrunk tenfold (chip unchanged), small enough to mesh at 28 GHz"
    }
    fn build(&self, p: &PresetParams) -> Result<Scene> {
        let base = CryostatLayout::scaled_down(p.scale_down.unwrap_or(10.0));
        let layout = CryostatLayout {
            chip: p.onchip(base.chip.clone()),
            ..base
        };
        build_cryostat(p.temperature(), &layout)
    }
}

impl ScenePreset for ThinDipole {
    fn name(&self) -> &'static str {
        "thin-dipole"
    }
    fn description(&self) -> &'static str {
        "free-space PEC wire dipole, half a wavelength at 28 GHz, fed across a 0.1 mm gap"
    }
    fn build(&self, p: &PresetParams) -> Result<Scene> {
        let f0 = p.frequency.unwrap_or(28e9);
        let l = p.length.unwrap_or(C0 / f0 / 2.0);
        preset_thin_dipole(f0, l, p.gap.unwrap_or(0.1e-3))
    }
}

impl ScenePreset for Hertzian {
    fn name(&self) -> &'static str {
        "hertzian-dipole"
    }
    fn description(&self) -> &'static str {
        "single driven edge in vacuum (electrically short current element)"
    }
    fn build(&self, p: &PresetParams) -> Result<Scene> {
        let f0 = p.frequency.unwrap_or(28e9);
        preset_hertzian_dipole(f0, p.gap.unwrap_or(C0 / f0 / 40.0))
    }
}

impl ScenePreset for RectCavity {
    fn name(&self) -> &'static str {
        "rect-cavity"
    }
    fn description(&self) -> &'static str {
        "closed 10 x 8 x 6 mm PEC box with a y-directed probe"
    }
    fn build(&self, _p: &PresetParams) -> Result<Scene> {
        preset_rect_cavity(10e-3, 8e-3, 6e-3)
    }
}

pub fn preset_registry() -> Vec<Box<dyn ScenePreset>> {
    vec![
        Box::new(OnChip),
        Box::new(Cryostat),
        Box::new(CryostatScaled),
        Box::new(ThinDipole),
        Box::new(Hertzian),
        Box::new(RectCavity),
    ]
}

pub fn preset_names() -> Vec<&'static str> {
    preset_registry().iter().map(|p| p.name()).collect()
}

pub fn build_preset(name: &str, params: &PresetParams) -> Result<Scene> {
    preset_registry()
        .into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "preset",
            name: name.to_string(),
        })?
        .build(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate;

    #[test]
    fn onchip_defaults() {
        let s = preset_onchip_dipole(TemperatureClass::Cryogenic, &OnChipParams::default()).unwrap();
        let stack = s.stack.as_ref().unwrap();
        assert_eq!(stack.layers.len(), 3);
        let arms = s
            .primitives
            .iter()
            .filter(|p| p.name.as_deref().is_some_and(|n| n.starts_with("arm")))
            .count();
        assert_eq!(arms, 2);
        assert_eq!(s.ports.len(), 2);
        assert_eq!(s.ports[0].polarity, -s.ports[1].polarity);
        assert!((stack.interfaces()[2]).abs() < 1e-18, "oxide top at z = 0");
        assert!(validate(&s).is_empty());
        let tuned = preset_onchip_dipole(
            TemperatureClass::Cryogenic,
            &OnChipParams {
                length: 3.06e-3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(validate(&tuned).is_empty());
        let b = tuned.primitives[0].shape.bounds();
        assert!((b.max[0] - 1.53e-3).abs() < 1e-15);
    }

    #[test]
    fn onchip_bounds_enforced() {
        let t = TemperatureClass::Room;
        for p in [
            OnChipParams { si_thickness: 0.6e-3, ..Default::default() },
            OnChipParams { length: 0.5e-3, ..Default::default() },
            OnChipParams { length: 5.5e-3, ..Default::default() },
        ] {
            assert!(preset_onchip_dipole(t, &p).is_err());
        }
    }

    #[test]
    fn cryostat_layout() {
        let s = preset_cryostat(0.10, 0.15).unwrap();
        assert!(validate(&s).is_empty(), "{:?}", validate(&s));
        let interior = s.primitives.iter().find(|p| p.name.as_deref() == Some("interior")).unwrap();
        match &interior.shape {
            Shape::Cylinder { radius, range, .. } => {
                assert_eq!(*radius, 0.15);
                assert_eq!(range[1] - range[0], 0.70);
            }
            _ => panic!(),
        }
        let l = CryostatLayout::default().plate_levels();
        assert!(((l[1] - l[0]) - 0.10).abs() < 1e-12);
        assert!(((l[2] - l[0]) - 0.25).abs() < 1e-12);
        assert!(preset_cryostat(0.0, 0.15).is_err());
        assert!(preset_cryostat(0.30, 0.30).is_err());
        let small = build_preset("cryostat-scaled", &PresetParams::default()).unwrap();
        assert!(validate(&small).is_empty(), "{:?}", validate(&small));
        assert!((small.domain.unwrap().size(Axis::X) - 0.031).abs() < 1e-12);
    }

    #[test]
    fn registry_lookup() {
        for name in preset_names() {
            let s = build_preset(name, &PresetParams::default()).unwrap();
            assert!(validate(&s).is_empty(), "{name}: {:?}", validate(&s));
        }
        assert!(matches!(
            build_preset("nope", &PresetParams::default()),
            Err(Error::UnknownName { .. })
        ));
    }
}
