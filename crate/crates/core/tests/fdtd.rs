use fieldforge_core::fdtd::*;
use fieldforge_core::grid::generate;
use fieldforge_core::materials::{ByTemperature, Material, MaterialKind, TemperatureClass};
use fieldforge_core::postproc::{s_matrix, port_impedance};
use fieldforge_core::scene::*;

fn vacuum_box(size: f64, boundary: Boundary) -> Scene {
    let mut s = Scene::new("vacuum", TemperatureClass::Room);
    s.domain = Some(Bounds::new([-size / 2.0; 3], [size / 2.0; 3]));
    s.boundary = boundary;
    s
}

fn source_config() -> SimulationConfig {
    SimulationConfig {
        drive: Drive::None,
        sources: vec![CurrentSource {
            position: [0.3e-3, -0.2e-3, 0.1e-3],
            axis: Axis::Z,
            amplitude: 1e-3,
        }],
        frequencies: vec![28e9],
        field_frequencies: vec![],
        ..SimulationConfig::default()
    }
}

#[test]
fn pulse_leaves_empty_grid() {
    let s = vacuum_box(8e-3, Boundary::Cpml { thickness: 8 });
    let g = generate(&s, 15.0, 32e9).unwrap();
    let cfg = SimulationConfig {
        energy_stop: 1e-7,
        max_steps: 20_000,
        ..source_config()
    };
    let out = run(&s, g, &cfg).unwrap();
    assert!(out.converged);
    let last = out.energy.last().unwrap().1;
    assert!(last < 1e-6 * out.peak_energy, "{last:e} vs peak {:e}", out.peak_energy);
}

#[test]
fn sealed_box_conserves_energy() {
    let s = vacuum_box(6e-3, Boundary::Pec);
    let g = generate(&s, 12.0, 32e9).unwrap();
    let cfg = source_config();
    let mut sim = Simulation::new(&s, g, &cfg).unwrap();
    let end = Excitation::default().build().unwrap().end_time();
    while sim.time() <= end {
        sim.step_measured();
    }
    let w0 = sim.step_measured();
    let mut lo = w0;
    let mut hi = w0;
    for _ in 0..10_000 {
        let w = sim.step_measured();
        lo = lo.min(w);
        hi = hi.max(w);
    }
    assert!(w0 > 0.0);
    assert!((hi - lo) / w0 < 1e-3, "drift {:e}", (hi - lo) / w0);
}

#[test]
fn leapfrog_stays_bounded() {
    let s = vacuum_box(4e-3, Boundary::Pec);
    let g = generate(&s, 10.0, 32e9).unwrap();
    let mut sim = Simulation::new(&s, g, &source_config()).unwrap();
    let end = Excitation::default().build().unwrap().end_time();
    while sim.time() <= end {
        sim.step_measured();
    }
    let w0 = sim.step_measured();
    let mut w = w0;
    for n in 0..100_000 {
        if n % 1000 == 0 {
            w = sim.step_measured();
            assert!(w.is_finite() && w < 1.01 * w0, "step {n}: {w:e} vs {w0:e}");
        } else {
            sim.update_h();
            sim.update_e();
        }
    }
    assert!(w > 0.99 * w0);
}

fn short_dipole(polarity: i8) -> Scene {
    let mut s = preset_hertzian_dipole(28e9, 0.5e-3).unwrap();
    s.ports[0].polarity = polarity;
    s
}

fn quick(mut cfg: SimulationConfig) -> SimulationConfig {
    cfg.frequencies = vec![26e9, 28e9, 30e9];
    cfg.field_frequencies = vec![];
    cfg
}

#[test]
fn polarity_flip_negates_voltage() {
    let run_with = |p: i8| {
        let s = short_dipole(p);
        let g = generate(&s, 10.0, 32e9).unwrap();
        run(&s, g, &quick(SimulationConfig::default())).unwrap()
    };
    let a = run_with(1);
    let b = run_with(-1);
    for (x, y) in a.ports[0].v.iter().zip(&b.ports[0].v) {
        assert!((x + y).norm() <= 1e-6 * x.norm(), "{x} {y}");
    }
}

#[test]
fn spectra_scale_with_source() {
    let s = short_dipole(1);
    let go = |v: f64| {
        let g = generate(&s, 10.0, 32e9).unwrap();
        let cfg = SimulationConfig {
            source_voltage: v,
            ..quick(SimulationConfig::default())
        };
        run(&s, g, &cfg).unwrap()
    };
    let a = go(1.0);
    let b = go(3.0);
    for k in 0..3 {
        let (va, vb) = (a.ports[0].v[k], b.ports[0].v[k]);
        assert!((vb - va * 3.0).norm() <= 1e-5 * vb.norm());
        let (ia, ib) = (a.ports[0].i[k], b.ports[0].i[k]);
        assert!((ib - ia * 3.0).norm() <= 1e-5 * ib.norm());
    }
}

#[test]
fn uniform_h_encloses_no_current() {
    let s = short_dipole(1);
    let g = generate(&s, 10.0, 32e9).unwrap();
    let mut sim = Simulation::new(&s, g, &SimulationConfig::default()).unwrap();
    for c in 0..3 {
        sim.h[c].iter_mut().for_each(|h| *h = 0.7);
    }
    assert_eq!(sim.port_current(0), 0.0);
    let n = sim.grid.dims();
    assert_eq!(sim.loop_current(1, [n[0] / 2, n[1] / 2, n[2] / 2]), 0.0);
}

fn two_port_scene() -> Scene {
    let mut s = Scene::new("pair", TemperatureClass::Room);
    for (id, x, len) in [(1u32, -1.5e-3, 0.3e-3), (2, 1.5e-3, 0.3e-3)] {
        s.ports.push(Port {
            id,
            start: [x, 0.0, -len / 2.0],
            end: [x, 0.0, len / 2.0],
            polarity: 1,
            source_resistance: 50.0,
            role: PortRole::Active,
        });
        for (sign, name) in [(1.0, "up"), (-1.0, "down")] {
            let (a, b) = (sign * len / 2.0, sign * 2e-3);
            s.primitives.push(Primitive::new(
                &format!("{name}{id}"),
                Shape::Wire {
                    min: [x, 0.0, a.min(b)],
                    max: [x, 0.0, a.max(b)],
                },
                "PEC",
                1,
            ));
        }
    }
    // An off-axis scatterer so that the geometry has no mirror symmetry.
    s.primitives.push(Primitive::new(
        "block",
        Shape::Box {
            min: [0.2e-3, 0.8e-3, -1.2e-3],
            max: [1.4e-3, 1.6e-3, -0.6e-3],
        },
        "Si",
        0,
    ));
    s.domain = Some(Bounds::new([-5e-3; 3], [5e-3; 3]));
    s
}

#[test]
fn reciprocity_of_two_passive_ports() {
    let s = two_port_scene();
    let go = |id: u32| {
        let g = generate(&s, 12.0, 32e9).unwrap();
        let cfg = SimulationConfig {
            drive: Drive::Single(id),
            energy_stop: 1e-8,
            ..quick(SimulationConfig::default())
        };
        run(&s, g, &cfg).unwrap()
    };
    let a = go(1);
    let b = go(2);
    let sm = s_matrix(&[&a, &b], &[1, 2]).unwrap();
    for m in &sm {
        let (s12, s21) = (m[0][1], m[1][0]);
        assert!((s12 - s21).norm() <= 0.01 * s21.norm(), "{s12} {s21}");
        assert!(m[0][0].norm() <= 1.02 && m[1][1].norm() <= 1.02);
    }
}

/// Two sheet arms across a feed edge.
fn sheet_dipole(material: &str) -> Scene {
    let mut s = Scene::new("sheets", TemperatureClass::Room);
    let (g, l, w) = (0.25e-3, 2.5e-3, 0.5e-3);
    for (name, lo, hi) in [("a", g, l), ("b", -l, -g)] {
        s.primitives.push(Primitive::new(
            name,
            Shape::Sheet {
                min: [lo, -w, 0.0],
                max: [hi, w, 0.0],
            },
            material,
            1,
        ));
    }
    s.ports.push(Port {
        id: 1,
        start: [-g, 0.0, 0.0],
        end: [g, 0.0, 0.0],
        polarity: 1,
        source_resistance: 50.0,
        role: PortRole::Active,
    });
    s.domain_padding = 3e-3;
    s
}

#[test]
fn lossless_sheet_limit_matches_pec() {
    let mut lossy = sheet_dipole("Perfect");
    lossy.materials.push(
        Material::new(
            "Perfect",
            MaterialKind::Conductor,
            ByTemperature::same(1e15),
            ByTemperature::same(1.0),
        )
        .unwrap(),
    );
    let pec = sheet_dipole("PEC");
    let zs: Vec<_> = [lossy, pec]
        .iter()
        .map(|s| {
            let g = generate(s, 10.0, 32e9).unwrap();
            let out = run(s, g, &quick(SimulationConfig::default())).unwrap();
            port_impedance(&out.ports[0])
        })
        .collect();
    for (a, b) in zs[0].iter().zip(&zs[1]) {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a - b).norm() <= 0.01 * b.norm(), "{a} {b}");
    }
}

#[test]
fn snapshot_shape_and_quiet_start() {
    let s = short_dipole(1);
    let g = generate(&s, 10.0, 32e9).unwrap();
    let n = g.dims();
    let cfg = SimulationConfig {
        snapshots: vec![
            SnapshotRequest {
                step: 0,
                axis: Axis::Y,
                coordinate: 0.0,
                component: FieldComponent::EMag,
            },
            SnapshotRequest {
                step: 400,
                axis: Axis::Y,
                coordinate: 0.0,
                component: FieldComponent::Ez,
            },
        ],
        ..quick(SimulationConfig::default())
    };
    let out = run(&s, g, &cfg).unwrap();
    assert_eq!(out.snapshots.len(), 2);
    let first = &out.snapshots[0];
    assert_eq!(first.shape(), (n[2], n[0]));
    assert!(first.values.iter().all(|&v| v == 0.0));
    assert!(out.snapshots[1].values.iter().any(|&v| v != 0.0));
}

#[test]
fn snapshot_outside_domain_is_rejected() {
    let s = short_dipole(1);
    let g = generate(&s, 10.0, 32e9).unwrap();
    let cfg = SimulationConfig {
        snapshots: vec![SnapshotRequest {
            step: 0,
            axis: Axis::X,
            coordinate: 1.0,
            component: FieldComponent::Ex,
        }],
        ..quick(SimulationConfig::default())
    };
    assert!(run(&s, g, &cfg).is_err());
}

#[test]
fn sweep_outside_band_is_rejected() {
    let cfg = SimulationConfig {
        frequencies: vec![40e9],
        ..SimulationConfig::default()
    };
    assert!(cfg.check().is_err());
}
