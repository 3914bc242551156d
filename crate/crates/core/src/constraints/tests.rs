use nalgebra::{Point3, UnitQuaternion, Vector3};
use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, exact_build};
use crate::relation_graph::ConstraintEdge;
use crate::transforms::RigidPose;

/// Analytic SDF of an axis-aligned box; independent of the mesh path.
fn box_sdf(p: &Point3<f64>, center: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let q = (p.coords - center).abs() - half;
    let outside = q.sup(&Vector3::zeros()).norm();
    let inside = q.max().min(0.0);
    outside + inside
}

fn two_cubes(dx: f64, samples: usize) -> SceneState {
    let b = exact_build(samples, 1);
    fixtures::scene(vec![
        fixtures::cube("a", Vector3::zeros(), &b),
        fixtures::cube("b", Vector3::new(dx, 0.0, 0.0), &exact_build(samples, 2)),
    ])
}

fn cube_over_ground(height: f64) -> SceneState {
    let b = exact_build(2048, 5);
    fixtures::scene(vec![
        fixtures::ground("ground", &b),
        fixtures::cube("box", Vector3::new(0.0, 0.0, 0.5 + height), &b),
    ])
}

#[test]
fn separated_cubes() {
    let s = two_cubes(1.2, 2048);
    let (pen, sep) = directional_contact_cost(&s.objects()[0], &s.objects()[1]).unwrap();
    assert_eq!(pen, 0.0);
    assert!((sep - 0.2).abs() < 1e-12, "{sep}");
    let c = contact_cost(&s, &ConstraintEdge::contact("a", "b")).unwrap();
    assert!((c - 0.4).abs() < 1e-12);
}

#[test]
fn overlapping_cubes_match_analytic_oracle() {
    let s = two_cubes(0.8, 2048);
    let (a, b) = (&s.objects()[0], &s.objects()[1]);
    let (pen, sep) = directional_contact_cost(a, b).unwrap();
    assert_eq!(sep, 0.0);
    assert!(pen > 0.0 && pen <= 0.2);
    let depths: Vec<f64> = b
        .samples()
        .points()
        .iter()
        .map(|p| box_sdf(&b.pose.apply(p), &Vector3::zeros(), &Vector3::repeat(0.5)))
        // Side-face samples sit on a's surface up to rounding.
        .filter(|&d| d < -1e-12)
        .collect();
    let oracle = -depths.iter().sum::<f64>() / depths.len() as f64;
    assert!((pen - oracle).abs() < 1e-12, "{pen} vs {oracle}");
}

#[test]
fn touching_cubes_cost_nothing() {
    let s = two_cubes(1.0, 2048);
    let c = contact_cost(&s, &ConstraintEdge::contact("a", "b")).unwrap();
    assert!(c.abs() < 1e-12, "{c}");
}

#[test]
fn coincident_cubes_have_surface_samples_on_surface() {
    // Every sample of one cube lies on the other's surface, so the
    // penetration depth is zero up to rounding.
    let s = two_cubes(0.0, 2048);
    let c = contact_cost(&s, &ConstraintEdge::contact("a", "b")).unwrap();
    let oracle: f64 = s.objects()[1]
        .samples()
        .points()
        .iter()
        .map(|p| box_sdf(p, &Vector3::zeros(), &Vector3::repeat(0.5)).abs())
        .fold(0.0, f64::max);
    assert!(oracle < 1e-15);
    assert!(c < 1e-12, "{c}");
}

#[test]
fn support_cases() {
    let edge = ConstraintEdge::support("ground", "box");
    assert!(support_cost(&cube_over_ground(0.0), &edge).unwrap() < 1e-12);
    assert!((support_cost(&cube_over_ground(0.3), &edge).unwrap() - 0.3).abs() < 1e-12);
    assert!((support_cost(&cube_over_ground(-0.1), &edge).unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn flat_support_band_mean() {
    // 1 × 1 × 0.1 slab with its bottom face 0.005 above the ground.
    let (h, sigma, thick) = (0.005, 0.01, 0.1);
    let b = exact_build(20_000, 9);
    let slab = fixtures::object(
        "slab",
        crate::geometry::shapes::cuboid(Point3::new(-0.5, -0.5, 0.0), Point3::new(0.5, 0.5, thick)),
        RigidPose::from_translation(Vector3::new(0.0, 0.0, h)),
        false,
        &b,
    );
    let s = fixtures::scene(vec![fixtures::ground("ground", &b), slab]);
    let edge = ConstraintEdge::flat_support("ground", "slab", None);
    let got = flat_support_cost(&s, &edge, sigma).unwrap();
    // Bottom face sits at height h; the side strip between h and σ contributes
    // heights uniform on (h, σ), weighted by area.
    let bottom = 1.0;
    let strip = 4.0 * (sigma - h);
    let oracle = (bottom * h + strip * 0.5 * (h + sigma)) / (bottom + strip);
    assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    assert!((got - h).abs() < 2e-4);
}

#[test]
fn flat_support_flush_uses_side_band() {
    // Flush on the ground the bottom face has D = 0 and is excluded, but side
    // samples just above the ground still fall in the band. Ground SDF above
    // the slab interior is the height z.
    let sigma = 0.01;
    let s = cube_over_ground(0.0);
    let edge = ConstraintEdge::flat_support("ground", "box", None);
    let got = flat_support_cost(&s, &edge, sigma).unwrap();
    let cube = s.get("box").unwrap();
    let band: Vec<f64> = cube
        .samples()
        .points()
        .iter()
        .map(|p| cube.pose.apply(p).z)
        .filter(|&z| z > SURFACE_SNAP * 10.0 && z < sigma)
        .collect();
    assert!(!band.is_empty());
    let oracle = band.iter().sum::<f64>() / band.len() as f64;
    assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
}

#[test]
fn flat_support_falls_back_when_band_empty() {
    let edge = ConstraintEdge::flat_support("ground", "box", None);
    // A band too thin to catch any side sample.
    let flush = flat_support_cost(&cube_over_ground(0.0), &edge, 1e-9).unwrap();
    assert!(flush < 1e-12, "{flush}");
    let far = flat_support_cost(&cube_over_ground(0.3), &edge, 0.01).unwrap();
    assert!((far - 0.3).abs() < 1e-12);
    assert!(matches!(
        flat_support_cost(&cube_over_ground(0.3), &edge, 0.0),
        Err(ConstraintError::InvalidSigma(_))
    ));
}

#[test]
fn total_cost_sums_edges() {
    let b = exact_build(1024, 3);
    let s = fixtures::scene(vec![
        fixtures::ground("ground", &b),
        fixtures::cube("a", Vector3::new(0.0, 0.0, 0.8), &b),
        fixtures::cube("b", Vector3::new(1.2, 0.0, 0.5), &b),
    ]);
    let empty = total_cost(&s, &fixtures::graph(&s, vec![])).unwrap();
    assert_eq!(empty.total, 0.0);
    assert!(empty.edges.is_empty());

    let contact = ConstraintEdge::contact("a", "b");
    let support = ConstraintEdge::support("ground", "a");
    let both = total_cost(&s, &fixtures::graph(&s, vec![support.clone(), contact.clone()])).unwrap();
    let c = contact_cost(&s, &contact).unwrap();
    let sp = support_cost(&s, &support).unwrap();
    assert!((both.total - (c + sp)).abs() < 1e-12);
    // Edges are reported in sorted (from, to, type) order.
    assert_eq!(both.edges[0].edge, contact);
    for e in &both.edges {
        assert!((e.total - (e.penetration_term + e.separation_term + e.band_term)).abs() < 1e-12);
    }
}

#[test]
fn dangling_edge_is_rejected() {
    let s = cube_over_ground(0.1);
    let mut g = fixtures::graph(&s, vec![ConstraintEdge::support("ground", "box")]);
    g.nodes.push(crate::relation_graph::GraphNode::new("ghost", "", false));
    g.edges.push(ConstraintEdge::support("ground", "ghost"));
    assert!(matches!(total_cost(&s, &g), Err(ConstraintError::DanglingEdge(_))));
}

#[test]
fn empty_samples_error() {
    let b = exact_build(0, 0);
    let s = fixtures::scene(vec![fixtures::ground("ground", &b), fixtures::cube("box", Vector3::z(), &b)]);
    let e = support_cost(&s, &ConstraintEdge::support("ground", "box"));
    assert!(matches!(e, Err(ConstraintError::EmptySamples(id)) if id == "box"));
}

#[test]
fn floating_cube_gradient_points_up() {
    let s = cube_over_ground(0.3);
    let g = cost_gradient(&s, &fixtures::graph(&s, vec![ConstraintEdge::support("ground", "box")])).unwrap();
    assert!(g[0].is_zero(), "static ground gets no gradient");
    assert!((g[1].translation - Vector3::z()).norm() < 1e-12, "{:?}", g[1]);
}

#[test]
fn settled_scene_has_zero_gradient() {
    let s = two_cubes(1.0, 512);
    let g = cost_gradient(&s, &fixtures::graph(&s, vec![ConstraintEdge::contact("a", "b")])).unwrap();
    for pg in g {
        assert!(pg.translation.norm() < 1e-12 && pg.rotation.norm() < 1e-12);
    }
}

#[test]
fn doubling_samples_is_stable() {
    for dx in [0.8, 1.2] {
        let edge = ConstraintEdge::contact("a", "b");
        let c1 = contact_cost(&two_cubes(dx, 2048), &edge).unwrap();
        let c2 = contact_cost(&two_cubes(dx, 4096), &edge).unwrap();
        assert!((c1 - c2).abs() < 0.05 * c1.max(c2), "{c1} vs {c2}");
    }
}

fn rotated_pair(angles: [f64; 6], offset: [f64; 3]) -> SceneState {
    let b = exact_build(256, 4);
    let mut a = fixtures::cube("a", Vector3::zeros(), &b);
    let mut c = fixtures::cube("b", Vector3::from(offset), &exact_build(256, 8));
    a.pose = RigidPose::new(UnitQuaternion::from_euler_angles(angles[0], angles[1], angles[2]), a.pose.translation);
    c.pose = RigidPose::new(UnitQuaternion::from_euler_angles(angles[3], angles[4], angles[5]), c.pose.translation);
    fixtures::scene(vec![a, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn costs_are_nonnegative_and_rigidly_invariant(
        angles in prop::array::uniform6(-3.0f64..3.0),
        offset in prop::array::uniform3(-1.2f64..1.2),
        g_axis in prop::array::uniform3(-2.0f64..2.0),
        g_t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let scene = rotated_pair(angles, offset);
        let graph = fixtures::graph(&scene, vec![ConstraintEdge::contact("a", "b")]);
        let base = total_cost(&scene, &graph).unwrap();
        for e in &base.edges {
            prop_assert!(e.penetration_term >= 0.0 && e.separation_term >= 0.0 && e.band_term >= 0.0);
        }
        let g = RigidPose::new(UnitQuaternion::from_scaled_axis(Vector3::from(g_axis)), Vector3::from(g_t));
        let moved = total_cost(&scene.transformed(&g), &graph).unwrap();
        prop_assert!((moved.total - base.total).abs() <= 1e-10, "{} vs {}", moved.total, base.total);
    }
}
