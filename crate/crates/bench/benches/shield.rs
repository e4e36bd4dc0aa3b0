use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mergeshield_bench::dense_world;
use mergeshield_core::shield::{
    filter_hss, joint_safe_control, solve_qp, AffineConstraint, ConstraintId, Kin,
    ObservedNeighbors, ShieldConfig,
};
use mergeshield_core::world::{plan_motion, ControlTarget};
use mergeshield_core::{build_topology, BehaviorAction, ShieldMode, VehicleId};

fn qp(c: &mut Criterion) {
    let rows = vec![
        AffineConstraint::hard(ConstraintId::Row(0), &[1.0, 0.5], 20.0, 0.0),
        AffineConstraint::hard(ConstraintId::Row(1), &[-1.0, 0.0], 0.0, 0.0),
        AffineConstraint::soft(ConstraintId::Row(2), &[0.3, 1.0], 12.0, 0.0),
        AffineConstraint::soft(ConstraintId::Row(3), &[0.0, -1.0], -3.0, 0.0),
    ];
    c.bench_function("solve_qp 2 vars 4 rows", |b| {
        b.iter(|| solve_qp(black_box(&[25.0, 18.0]), black_box(&rows), 1e6))
    });
}

fn single_filter(c: &mut Criterion) {
    let kin = |id: u32, x: f64, speed: f64| Kin {
        id: VehicleId(id),
        x,
        length: 5.0,
        speed,
        share: 1.0,
        a_min: -5.0,
        a_max: 5.0,
        v_cap: 40.0,
    };
    let cfg = ShieldConfig::default();
    let ego = kin(0, 0.0, 25.0);
    let neighbors = ObservedNeighbors {
        leaders: vec![kin(1, 22.0, 20.0)],
        lateral: Some((Some(kin(2, 30.0, 22.0)), Some(kin(3, -25.0, 26.0)))),
    };
    c.bench_function("filter_hss leader + lateral", |b| {
        b.iter(|| filter_hss(black_box(&ego), black_box(&neighbors), 27.0, &cfg, 0.1))
    });
}

fn joint_pass(c: &mut Criterion) {
    for mode in [ShieldMode::Hss, ShieldMode::Mass] {
        let world = dense_world(11, mode, 7);
        let plans: std::collections::BTreeMap<VehicleId, ControlTarget> = world
            .live()
            .map(|v| {
                let plan = plan_motion(v, BehaviorAction::SpeedUp, &world.road, 2.0);
                (v.id, plan)
            })
            .collect();
        let topology = build_topology(&world);
        c.bench_function(&format!("joint_safe_control 11 vehicles {mode}"), |b| {
            b.iter(|| joint_safe_control(black_box(&world), &topology, &plans))
        });
    }
}

criterion_group!(benches, qp, single_filter, joint_pass);
criterion_main!(benches);
