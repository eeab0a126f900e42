mod common;

use proptest::prelude::*;
use synthnull::error::Error;
use synthnull::hypersurface::{
    causal_leq, gauge_measure_transform, psi_flow, PointOnH, TransversePair,
};
use synthnull::measures::disintegration_check;
use synthnull::ray::{GaugeInterval, Ray, RayDensity, RayId};
use synthnull::smooth::{cone_hypersurface_with, sphere_boundary_hypersurface_with, Congruence};
use synthnull::{corpus, SyntheticNullHypersurface};

use common::*;

fn with_tip() -> SyntheticNullHypersurface {
    let r = bounded(
        "r",
        0.25,
        0.0,
        1.0,
        RayDensity::constant(0.0, 1.0, 1.0).unwrap(),
    );
    let s = Ray::new(
        "s",
        0.5,
        GaugeInterval::future_complete(0.0),
        RayDensity::sample(grid(0.0, 2.0, 4), |t| 1.0 + t).unwrap(),
        None,
    )
    .unwrap();
    let u = bounded(
        "u",
        0.25,
        -1.0,
        1.0,
        RayDensity::constant(-1.0, 1.0, 1.0).unwrap(),
    );
    SyntheticNullHypersurface::new(vec![r, s, u], Some(vec!["r".into(), "s".into()]), None).unwrap()
}

fn point(kind: usize, g: f64) -> PointOnH {
    match kind {
        0 => PointOnH::on("r", g),
        1 => PointOnH::on("s", 3.0 * g),
        2 => PointOnH::on("u", 2.0 * g - 1.0),
        _ => PointOnH::Tip,
    }
}

#[test]
fn causal_examples() {
    let h = with_tip();
    assert!(causal_leq(&PointOnH::on("r", 0.2), &PointOnH::on("r", 0.7), &h).unwrap());
    assert!(!causal_leq(&PointOnH::on("r", 0.2), &PointOnH::on("s", 5.0), &h).unwrap());
    assert!(causal_leq(&PointOnH::Tip, &PointOnH::on("r", 0.1), &h).unwrap());
    assert!(!causal_leq(&PointOnH::Tip, &PointOnH::on("u", 0.1), &h).unwrap());
    assert!(matches!(
        causal_leq(&PointOnH::on("nope", 0.1), &PointOnH::Tip, &h),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn flow_examples() {
    let h = unit_ray();
    let x = PointOnH::on("r", 0.3);
    assert_eq!(psi_flow(&x, 0.5, &h).unwrap(), PointOnH::on("r", 0.8));
    assert_eq!(psi_flow(&x, 0.0, &h).unwrap(), x);
    match psi_flow(&x, 0.9, &h) {
        Err(Error::Domain { range, .. }) => {
            assert!((range.0 + 0.3).abs() < 1e-15 && (range.1 - 0.7).abs() < 1e-15)
        }
        other => panic!("expected a domain error, got {other:?}"),
    }
}

#[test]
fn transform_examples() {
    let h = unit_ray();
    assert_eq!(
        gauge_measure_transform(&h, &TransversePair::identity(&h)).unwrap(),
        h
    );
    let t = gauge_measure_transform(&h, &TransversePair::uniform(&h, 0.0, 2.0).unwrap()).unwrap();
    let r = &t.rays()[0];
    assert_eq!((r.interval.a, r.interval.b), (0.0, 2.0));
    assert_eq!(r.density.values(), &[0.25, 0.25]);
    assert_eq!(r.density.integral(0.0, 2.0), 0.5);
}

#[test]
fn stored_instances_are_normalised() {
    let mut all = vec![
        cone_hypersurface_with(4, 5.0, 16).unwrap(),
        sphere_boundary_hypersurface_with(2.0, 3.0, Congruence::Ingoing, 7).unwrap(),
        sphere_boundary_hypersurface_with(2.0, 3.0, Congruence::Outgoing, 9).unwrap(),
    ];
    for i in 0..50 {
        all.push(corpus::localization_instance(3, i).unwrap().surface);
        all.push(corpus::hawking_instance(3, i).unwrap().surface);
        all.push(corpus::penrose_instance(3, i).unwrap().surface);
    }
    for h in &all {
        assert!((h.total_weight() - 1.0).abs() <= 1e-12);
        assert!(h
            .rays()
            .iter()
            .all(|r| r.density.values().iter().all(|v| *v >= 0.0)));
        assert!(disintegration_check(h).pass);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn causal_order_is_a_partial_order(pts in prop::collection::vec((0usize..4, 0.0f64..1.0), 1..10)) {
        let h = with_tip();
        let ps: Vec<PointOnH> = pts.iter().map(|&(k, g)| point(k, g)).collect();
        let leq = |a: &PointOnH, b: &PointOnH| causal_leq(a, b, &h).unwrap();
        for x in &ps {
            prop_assert!(leq(x, x));
            for y in &ps {
                if leq(x, y) && leq(y, x) {
                    prop_assert_eq!(x, y);
                }
                for z in &ps {
                    if leq(x, y) && leq(y, z) {
                        prop_assert!(leq(x, z));
                    }
                }
            }
        }
    }

    #[test]
    fn flow_composes(g in 0.0f64..1.0, s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let h = unit_ray();
        let x = PointOnH::on("r", g);
        if let (Ok(y), Ok(z)) = (psi_flow(&x, s, &h), psi_flow(&x, s + t, &h)) {
            if let Ok(w) = psi_flow(&y, t, &h) {
                let (PointOnH::OnRay { gauge: a, .. }, PointOnH::OnRay { gauge: b, .. }) = (w, z) else {
                    panic!("flow left the ray")
                };
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn transform_round_trip(seed in 0usize..200, f in -2.0f64..2.0, s in 0.25f64..4.0, df in -1.0f64..1.0) {
        let h = corpus::localization_instance(41, seed).unwrap().surface;
        let ids: Vec<RayId> = h.rays().iter().map(|r| r.id.clone()).collect();
        let tp = TransversePair::new(
            ids.iter().enumerate().map(|(i, id)| (id.clone(), f + df * i as f64)).collect(),
            ids.iter().enumerate().map(|(i, id)| (id.clone(), s * (1.0 + 0.1 * i as f64))).collect(),
        ).unwrap();
        let back = gauge_measure_transform(&gauge_measure_transform(&h, &tp).unwrap(), &tp.inverse()).unwrap();
        for (r, q) in h.rays().iter().zip(back.rays()) {
            prop_assert_eq!(&r.id, &q.id);
            prop_assert_eq!(r.weight, q.weight);
            prop_assert!(close(r.interval.a, q.interval.a) && close(r.interval.b, q.interval.b));
            for (x, y) in r.density.knots().iter().zip(q.density.knots()) {
                prop_assert!(close(*x, *y));
            }
            for (x, y) in r.density.values().iter().zip(q.density.values()) {
                prop_assert!(close(*x, *y));
            }
        }
    }
}
