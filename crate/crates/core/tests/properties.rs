//! Geometric and perception invariants checked against randomized inputs.

use nanorace::arena::{build_arena, in_mission_area, ray_cast, ArenaConfig, ObstacleSpec};
use nanorace::geom::{ray_capsule, Pose2, Vec2};
use nanorace::perception::{sector_labels, sector_soft_probs, SensorGeometry};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn rotate_quarter(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

fn mirror_y(v: Vec2) -> Vec2 {
    Vec2::new(v.x, -v.y)
}

/// Applies an exact point map to every obstacle and gate of the default layout.
fn mapped_config(f: impl Fn(Vec2) -> Vec2) -> ArenaConfig {
    let mut cfg = ArenaConfig::default();
    for o in &mut cfg.obstacles {
        map_spec(o, &f);
    }
    for g in &mut cfg.gates {
        let a = f(Vec2::new(g.params[0], g.params[1]));
        let b = f(Vec2::new(g.params[2], g.params[3]));
        g.params = [a.x, a.y, b.x, b.y];
    }
    cfg
}

fn map_spec(o: &mut ObstacleSpec, f: &impl Fn(Vec2) -> Vec2) {
    let a = f(Vec2::new(o.params[0], o.params[1]));
    o.params[0] = a.x;
    o.params[1] = a.y;
    if o.params.len() == 5 {
        let b = f(Vec2::new(o.params[2], o.params[3]));
        o.params[2] = b.x;
        o.params[3] = b.y;
    }
}

fn in_area() -> impl Strategy<Value = (f64, f64, f64)> {
    (-3.9..3.9f64, -3.9..3.9f64, -3.2..3.2f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn ray_cast_is_monotone_in_range((x, y, yaw) in in_area(), r1 in 0.1..6.0f64, extra in 0.0..6.0f64, aware: bool) {
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let o = Vec2::new(x, y);
        let near = ray_cast(&arena, o, yaw, r1, aware);
        let far = ray_cast(&arena, o, yaw, r1 + extra, aware);
        prop_assert!(far.distance <= near.distance);
        if !near.is_none() {
            prop_assert_eq!(near, far);
            prop_assert!(near.distance <= r1);
        }
        if far.distance <= r1 {
            prop_assert_eq!(near, far);
        }
    }

    #[test]
    fn ray_capsule_is_rotation_and_translation_covariant(
        ox in -3.0..3.0f64, oy in -3.0..3.0f64, heading in -3.2..3.2f64,
        ax in -3.0..3.0f64, ay in -3.0..3.0f64, bx in -3.0..3.0f64, by in -3.0..3.0f64,
        r in 0.01..0.5f64, theta in -3.2..3.2f64, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
    ) {
        let (o, a, b) = (Vec2::new(ox, oy), Vec2::new(ax, ay), Vec2::new(bx, by));
        let dir = Vec2::from_angle(heading);
        let t = Vec2::new(tx, ty);
        let map = |p: Vec2| p.rotate(theta) + t;
        let base = ray_capsule(o, dir, a, b, r);
        let moved = ray_capsule(map(o), dir.rotate(theta), map(a), map(b), r);
        match (base, moved) {
            (Some(d0), Some(d1)) => prop_assert!((d0 - d1).abs() <= 1e-9, "{d0} vs {d1}"),
            (None, None) => {}
            // grazing rays may flip between hit and miss under rounding
            (Some(d), None) | (None, Some(d)) => {
                let closest = nanorace::geom::point_segment_distance(o + dir * d, a, b);
                prop_assert!((closest - r).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn arena_ray_cast_is_quarter_turn_covariant((x, y, yaw) in in_area(), aware: bool) {
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let turned = build_arena(&mapped_config(rotate_quarter)).unwrap();
        let o = Vec2::new(x, y);
        let h0 = ray_cast(&arena, o, yaw, 20.0, aware);
        let h1 = ray_cast(&turned, rotate_quarter(o), yaw + FRAC_PI_2, 20.0, aware);
        prop_assert!((h0.distance - h1.distance).abs() <= 1e-9, "{h0:?} vs {h1:?}");
    }

    #[test]
    fn mission_area_matches_half_planes(x in -6.0..6.0f64, y in -6.0..6.0f64) {
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let h = 4.0;
        let oracle = x >= -h && x <= h && y >= -h && y <= h;
        prop_assert_eq!(in_mission_area(&arena, Vec2::new(x, y)), oracle);
    }

    #[test]
    fn perception_mirrors_with_the_arena((x, y, yaw) in in_area(), aware: bool) {
        let geom = SensorGeometry::default();
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let mirrored = build_arena(&mapped_config(mirror_y)).unwrap();
        let p = sector_soft_probs(&arena, Pose2::new(x, y, yaw), &geom, aware);
        let m = sector_soft_probs(&mirrored, Pose2::new(x, -y, -yaw), &geom, aware).mirrored();
        for (a, b) in p.to_array().iter().zip(m.to_array()) {
            prop_assert!((a - b).abs() <= 1e-9, "{p:?} vs {m:?}");
        }
    }

    #[test]
    fn ground_awareness_is_irrelevant_far_from_the_fence(x in -1.9..1.9f64, y in -1.9..1.9f64, yaw in -3.2..3.2f64) {
        // at least d_max from every mission-area edge, so the fence is out of range
        let geom = SensorGeometry::default();
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let pose = Pose2::new(x, y, yaw);
        prop_assert_eq!(sector_labels(&arena, pose, &geom, false), sector_labels(&arena, pose, &geom, true));
        prop_assert_eq!(sector_soft_probs(&arena, pose, &geom, false), sector_soft_probs(&arena, pose, &geom, true));
    }

    #[test]
    fn soft_probs_are_valid_and_consistent_with_labels((x, y, yaw) in in_area(), aware: bool) {
        let geom = SensorGeometry::default();
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let pose = Pose2::new(x, y, yaw);
        let p = sector_soft_probs(&arena, pose, &geom, aware);
        let labels = sector_labels(&arena, pose, &geom, aware);
        prop_assert!(p.is_valid());
        for (prob, label) in p.to_array().iter().zip(labels) {
            if *prob > 0.0 {
                prop_assert_eq!(label, 1);
            }
        }
    }
}
