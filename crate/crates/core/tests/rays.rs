use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use translab::geometry::*;
use translab::kernel::MemoryKernel;
use translab::rays::*;

fn annulus(k1: f64, k2: f64, damping: DampingSpec) -> Geometry {
    build_geometry(&GeometryDescriptor {
        outer: CurveSpec::Circle {
            center: Vec2::ZERO,
            radius: 1.0,
        },
        inner: CurveSpec::Circle {
            center: Vec2::ZERO,
            radius: 0.3,
        },
        k1,
        k2,
        damping,
        smoothness_samples: 256,
        allow_interface_damping: false,
    })
    .unwrap()
}

fn radial_shell() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::ZERO,
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.6,
            outer: 0.7,
            ramp: 0.15,
        },
        angular: None,
        profile: Profile::Exponential,
    })
}

fn kernel() -> MemoryKernel {
    MemoryKernel::single(2.5, 0.2).unwrap()
}

fn no_observe(ctx: RayContext) -> RayContext {
    let mut o = ctx.opts;
    o.observe = false;
    ctx.with_options(o)
}

#[test]
fn straight_flight_reaches_outer_boundary() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0), 0.0, Medium::Omega1);
    let res = flow_segment(&ctx, &p, 10.0);
    let FlowStop::Boundary { curve, s } = res.stop else {
        panic!("expected a boundary hit")
    };
    assert_eq!(curve, CurveId::Outer);
    let y = 0.75f64.sqrt();
    assert!((res.segment.end.x - Vec2::new(0.5, y)).norm() < 1e-14);
    assert!((res.segment.end.t - y).abs() < 1e-14);
    assert!((g.outer().point(s) - res.segment.end.x).norm() < 1e-14);
}

#[test]
fn speed_in_inclusion_is_sqrt_k2() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(-0.2, 0.0), Vec2::new(1.0, 0.0), 0.0, Medium::Omega2);
    let res = flow_segment(&ctx, &p, 10.0);
    assert!((res.segment.end.x.x - 0.3).abs() < 1e-14);
    assert!((res.segment.end.t - 0.5 / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn normal_incidence_transmits_straight() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.3, 0.0), Vec2::new(-1.0, 0.0), 0.0, Medium::Omega1);
    let ev = snell_event(&ctx, &p, 0.0).unwrap();
    let tr = ev.find(OutgoingKind::Transmitted).unwrap();
    assert!(tr.point.xi.y.abs() < 1e-15);
    assert!((tr.point.xi.x + 1.0 / 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(tr.point.medium, Medium::Omega2);
}

fn hit_at_angle(ctx: &RayContext, theta: f64) -> BoundaryEvent {
    // point (0.3, 0) with normal (1, 0); incoming from Omega1 at angle theta to the normal
    let dir = Vec2::new(-theta.cos(), theta.sin());
    let p = ctx.phase_point(Vec2::new(0.3, 0.0), dir, 0.0, Medium::Omega1);
    snell_event(ctx, &p, 0.0).unwrap()
}

#[test]
fn critical_angle_is_quarter_turn_for_speed_ratio_two() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    // bracket the glancing band from both sides
    let edge = |hyperbolic_side: bool| {
        let (mut lo, mut hi) = (0.0, FRAC_PI_2 - 1e-3);
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            let fc = hit_at_angle(&ctx, m).far_class.unwrap();
            let below = if hyperbolic_side {
                fc == PhaseClass::Hyperbolic
            } else {
                fc != PhaseClass::Elliptic
            };
            if below {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    };
    let (a, b) = (edge(true), edge(false));
    assert!(a <= FRAC_PI_4 && FRAC_PI_4 <= b);
    assert!((0.5 * (a + b) - FRAC_PI_4).abs() < 1e-12);
    assert!((critical_angle(&ctx, Vec2::new(0.3, 0.0)).unwrap() - FRAC_PI_4).abs() < 1e-15);
    assert!(hit_at_angle(&ctx, FRAC_PI_4 - 1e-6)
        .find(OutgoingKind::Transmitted)
        .is_some());
    assert!(hit_at_angle(&ctx, FRAC_PI_4 + 1e-6)
        .find(OutgoingKind::Transmitted)
        .is_none());
}

#[test]
fn pair_classification_covers_all_five_classes() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let x = Vec2::new(0.0, 0.3);
    let c = |r: f64| classify_interface_pair(&ctx, x, r, TAU).unwrap().label();
    // thresholds: 1/k2 = 0.5 and 1/k1 = 1 for |xi'|^2
    assert_eq!(c(0.5f64.sqrt() * 0.9), "H1xH2");
    assert_eq!(c(0.5f64.sqrt()), "H1xG2");
    assert_eq!(c(0.8f64.sqrt()), "H1xE2");
    assert_eq!(c(1.0), "G1xE2");
    assert_eq!(c(1.1), "E1xE2");
    assert!(matches!(
        classify_interface_pair(&ctx, x, 0.1, 0.0),
        Err(RayError::ZeroTau)
    ));
}

#[test]
fn non_characteristic_input_rejected() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let mut p = ctx.phase_point(Vec2::new(0.3, 0.0), Vec2::new(-1.0, 0.0), 0.0, Medium::Omega1);
    p.xi = p.xi * 1.1;
    assert!(matches!(
        snell_event(&ctx, &p, 0.0),
        Err(RayError::NonCharacteristicInput(_))
    ));
}

#[test]
fn tangential_outer_hit_is_glancing() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 0.0, Medium::Omega1);
    let ev = outer_reflection(&ctx, &p, 0.0).unwrap();
    assert!(ev.glancing);
    assert_eq!(ev.incoming_class, PhaseClass::Glancing);
}

#[test]
fn ray_starting_in_damping_is_observed_immediately() {
    let g = annulus(1.0, 2.0, radial_shell());
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.0, -0.65), Vec2::new(1.0, 0.0), 0.0, Medium::Omega1);
    let budget = Budget {
        max_time: 10.0,
        max_events: 10,
        interface_stop: InterfaceStop::Never,
    };
    let tr = trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect).unwrap();
    assert_eq!(tr.terminated, Termination::EnteredSuppB);
    assert_eq!(tr.end().t, 0.0);
}

#[test]
fn ray_crossing_damping_shell_is_observed() {
    let g = annulus(1.0, 2.0, radial_shell());
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.35, 0.0), Vec2::new(1.0, 0.0), 0.0, Medium::Omega1);
    let budget = Budget {
        max_time: 10.0,
        max_events: 10,
        interface_stop: InterfaceStop::Never,
    };
    let tr = trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect).unwrap();
    assert_eq!(tr.terminated, Termination::EnteredSuppB);
    assert!(tr.end().x.x > 0.45 && tr.end().x.x < 0.75);
}

#[test]
fn reflect_only_trace_is_time_reversible() {
    let g = annulus(1.0, 2.0, radial_shell());
    let k = kernel();
    let ctx = no_observe(RayContext::new(&g, &k));
    let budget = Budget {
        max_time: 6.0,
        max_events: 1000,
        interface_stop: InterfaceStop::Never,
    };
    for (x, th) in [(0.4, 0.3), (0.8, 2.0), (0.5, 1.1)] {
        let p = ctx.phase_point(Vec2::new(x, 0.1), Vec2::from_angle(th), 0.0, Medium::Omega1);
        let fwd = trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect).unwrap();
        assert_eq!(fwd.terminated, Termination::TimeBudget);
        let mut back0 = *fwd.end();
        back0.xi = -back0.xi;
        back0.t = 0.0;
        let back = trace_ray(&ctx, &back0, &budget, BranchPolicy::Reflect).unwrap();
        assert!(back.end().x.dist(p.x) < 1e-7, "{}", back.end().x.dist(p.x));
        assert_eq!(back.events.len(), fwd.events.len());
        let fwd_curves: Vec<_> = fwd.events.iter().map(|e| e.curve).collect();
        let mut back_curves: Vec<_> = back.events.iter().map(|e| e.curve).collect();
        back_curves.reverse();
        assert_eq!(fwd_curves, back_curves);
    }
}

#[test]
fn hamiltonian_and_angular_momentum_preserved_through_shell() {
    let g = annulus(1.0, 2.0, radial_shell());
    let k = kernel();
    let ctx = no_observe(RayContext::new(&g, &k));
    let budget = Budget {
        max_time: 5.0,
        max_events: 1000,
        interface_stop: InterfaceStop::Never,
    };
    let p = ctx.phase_point(Vec2::new(0.35, 0.2), Vec2::from_angle(0.7), 0.0, Medium::Omega1);
    let l0 = p.x.cross(p.xi);
    let tr = trace_ray(&ctx, &p, &budget, BranchPolicy::Transmit).unwrap();
    let mut worst_h: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for seg in &tr.segments {
        for q in [seg.start, seg.end] {
            worst_h = worst_h.max(ctx.hamiltonian(&q).abs());
            worst_l = worst_l.max((q.x.cross(q.xi) - l0).abs() / l0.abs());
        }
    }
    assert!(worst_h < 1e-8, "{worst_h}");
    assert!(worst_l < 1e-8, "{worst_l}");
    assert!(tr.events.len() > 3);
}

#[test]
fn tree_mode_branches_at_transmissible_hits() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.8, 0.0), Vec2::new(-1.0, 0.05), 0.0, Medium::Omega1);
    let budget = Budget {
        max_time: 3.0,
        max_events: 4,
        interface_stop: InterfaceStop::Never,
    };
    let leaves = trace_tree(&ctx, &p, &budget, 64).unwrap();
    assert!(leaves.len() > 2);
    for l in &leaves {
        assert_eq!(l.segments[0].start, p);
    }
}

#[test]
fn export_formats_are_parseable() {
    let g = annulus(1.0, 2.0, DampingSpec::None);
    let k = kernel();
    let ctx = RayContext::new(&g, &k);
    let p = ctx.phase_point(Vec2::new(0.8, 0.0), Vec2::new(-1.0, 0.3), 0.0, Medium::Omega1);
    let budget = Budget {
        max_time: 3.0,
        max_events: 3,
        interface_stop: InterfaceStop::Never,
    };
    let tr = trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect).unwrap();
    let jl = traces_to_jsonl(std::slice::from_ref(&tr)).unwrap();
    let v: serde_json::Value = serde_json::from_str(jl.lines().next().unwrap()).unwrap();
    assert_eq!(v["id"], 0);
    assert_eq!(v["events"].as_array().unwrap().len(), tr.events.len());
    let csv = traces_to_csv(&[tr]).unwrap();
    assert!(csv.starts_with("trace,vertex,x,y,t,flag"));
    assert!(csv.contains(",start"));
}

proptest! {
    #[test]
    fn snell_outcomes_are_characteristic_and_tangentially_continuous(
        phi in 0.0..(2.0 * PI), theta in 0.0..1.55f64, k2 in 1.05..4.0f64, from_inside in any::<bool>()
    ) {
        let g = annulus(1.0, k2, DampingSpec::None);
        let k = kernel();
        let ctx = RayContext::new(&g, &k);
        let s = phi / (2.0 * PI);
        let x = g.inner().point(s);
        let n = g.inner().normal(s);
        let t = n.perp();
        let (medium, inward) = if from_inside { (Medium::Omega2, n) } else { (Medium::Omega1, -n) };
        let dir = inward * theta.cos() + t * theta.sin();
        let p = ctx.phase_point(x, dir, 0.0, medium);
        let ev = snell_event(&ctx, &p, s).unwrap();
        for o in &ev.outgoing {
            if o.kind != OutgoingKind::Gliding {
                prop_assert!(ctx.hamiltonian(&o.point).abs() < 1e-12);
            }
            prop_assert!((o.point.xi.dot(t) - p.xi.dot(t)).abs() < 1e-14);
        }
        if let Some(tr) = ev.find(OutgoingKind::Transmitted) {
            let s1 = p.xi.dot(t).abs() / p.xi.norm();
            let s2 = tr.point.xi.dot(t).abs() / tr.point.xi.norm();
            let (c_in, c_out) = if from_inside { (k2, 1.0) } else { (1.0, k2) };
            prop_assert!((s1 / c_in.sqrt() - s2 / c_out.sqrt()).abs() < 1e-12);
        }
        if from_inside {
            prop_assert!(ev.find(OutgoingKind::Transmitted).is_some());
        }
    }

    #[test]
    fn classification_is_a_partition(r in 0.0..2.0f64, k2 in 1.05..4.0f64) {
        let g = annulus(1.0, k2, DampingSpec::None);
        let k = kernel();
        let ctx = RayContext::new(&g, &k);
        let pair = classify_interface_pair(&ctx, Vec2::new(0.3, 0.0), r, TAU).unwrap();
        let r2 = r * r;
        let expect1 = if (r2 - 1.0).abs() <= 1e-9 { PhaseClass::Glancing } else if r2 < 1.0 { PhaseClass::Hyperbolic } else { PhaseClass::Elliptic };
        prop_assert_eq!(pair.omega1, expect1);
        // with k1 < k2 the Omega2 side is never "more hyperbolic" than Omega1
        prop_assert!(!(pair.omega2 == PhaseClass::Hyperbolic && pair.omega1 != PhaseClass::Hyperbolic));
    }
}

#[test]
fn long_plateau_steps_do_not_skip_the_ramp() {
    // the second chord leaves the damped plateau and grazes the ramp near r = 0.47
    let g = annulus(1.0, 2.0, full_shell());
    let k = kernel();
    let ctx = no_observe(RayContext::new(&g, &k));
    let p = ctx.phase_point(
        Vec2::new(-0.7551878819754871, -0.5022588495332969),
        Vec2::new(-1.4122730396217014, -0.07405985118591323),
        0.0,
        Medium::Omega1,
    );
    let budget = Budget {
        max_time: 4.0,
        max_events: 100,
        interface_stop: InterfaceStop::Never,
    };
    let tr = trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect).unwrap();
    let l0 = p.x.cross(p.xi);
    for seg in &tr.segments {
        assert!(ctx.hamiltonian(&seg.end).abs() < 1e-8);
        assert!((seg.end.x.cross(seg.end.xi) - l0).abs() < 1e-8);
    }
}

fn full_shell() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::ZERO,
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.6,
            outer: 1.1,
            ramp: 0.1,
        },
        angular: None,
        profile: Profile::Exponential,
    })
}
