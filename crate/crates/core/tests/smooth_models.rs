mod common;

use synthnull::geometry::{
    hawking_check, minkowski_content, penrose_check, theta_estimate, CrossSection, DEFAULT_EPS_GRID,
};
use synthnull::hypersurface::{causal_leq, PointOnH};
use synthnull::nec::{cd_check, localization_crosscheck};
use synthnull::smooth::{
    cone_hypersurface_with, integrate_geodesic, sphere_boundary_hypersurface_with, CausalType,
    Congruence, PowerWarp, WarpedProductSpec,
};
use synthnull::Verdict;

fn warp_family() -> Vec<(PowerWarp, f64)> {
    vec![
        (PowerWarp::sqrt(), -1.0),
        (PowerWarp::sqrt(), -2.0),
        (
            PowerWarp {
                scale: 1.0,
                exponent: 0.4,
            },
            -1.0,
        ),
        (
            PowerWarp {
                scale: 0.5,
                exponent: 0.5,
            },
            -0.5,
        ),
    ]
}

#[test]
fn radial_timelike_geodesic_is_affine() {
    let spec =
        WarpedProductSpec::new(PowerWarp::sqrt(), -1.0, 2.0, 0.0, CausalType::Timelike).unwrap();
    let trace = integrate_geodesic(&spec, 1e-3, 100_000).unwrap();
    for x in &trace.samples {
        assert!((x.t - (-1.0 + 2.0 * x.s)).abs() < 1e-12);
        assert_eq!(x.tdot, 2.0);
    }
    assert!((trace.b_estimate - 0.5).abs() < 1e-2);
}

#[test]
fn null_traces_conserve_norm_and_accelerate() {
    for (warp, t0) in warp_family() {
        let spec = WarpedProductSpec::null(warp, t0, 1.0, true).unwrap();
        let trace = integrate_geodesic(&spec, 5e-4, 1_000_000).unwrap();
        assert!(trace.max_scaled_drift <= 1e-8);
        assert!(trace.samples.windows(2).all(|w| w[1].tdot > w[0].tdot));
        let c = spec.rdot0 * warp.scale.powi(2) * (-t0).powf(2.0 * warp.exponent);
        let end = trace.final_sample();
        assert!(end.tdot > 5.0);
        assert!((end.tdot * warp.scale * (-end.t).powf(warp.exponent) - c).abs() <= 1e-6 * c);
        for x in &trace.samples {
            let f = warp.scale * (-x.t).powf(warp.exponent);
            assert!((x.rdot * f * f - c).abs() <= 1e-12 * c.abs());
        }
        assert!(trace.samples.windows(2).all(|w| w[1].r > w[0].r));
    }
}

#[test]
fn end_parameter_converges_at_first_order() {
    for (warp, t0) in warp_family() {
        let spec = WarpedProductSpec::null(warp, t0, 1.0, true).unwrap();
        let b: Vec<f64> = [2e-3, 1e-3, 5e-4]
            .iter()
            .map(|h| integrate_geodesic(&spec, *h, 1_000_000).unwrap().b_estimate)
            .collect();
        let ratio = (b[2] - b[1]).abs() / (b[1] - b[0]).abs();
        assert!((0.2..=0.8).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn cones_localize_in_their_dimension() {
    for n in [3usize, 4, 5] {
        let h = cone_hypersurface_with(n, 4.0, 8).unwrap();
        assert!(h.rays().iter().all(|r| cd_check(r, n as f64).unwrap().pass));
        let loc = localization_crosscheck(&h, n as f64, 200, n as u64).unwrap();
        assert!(loc.agree);
        assert_eq!(loc.search.verdict, Verdict::Pass);
    }
    let h = cone_hypersurface_with(4, 4.0, 8).unwrap();
    let tip = PointOnH::Tip;
    for r in h.rays() {
        assert!(causal_leq(&tip, &PointOnH::on(r.id.clone(), 1.5), &h).unwrap());
    }
}

#[test]
fn sphere_congruences() {
    let inward = sphere_boundary_hypersurface_with(2.0, 0.0, Congruence::Ingoing, 16).unwrap();
    let s = CrossSection::at_start(&inward).unwrap();
    let theta = theta_estimate(&s, &inward, &DEFAULT_EPS_GRID).unwrap();
    assert_eq!(theta.closed_form, -1.0);
    assert!((theta.numeric + 1.0).abs() <= 0.01);
    let rep = penrose_check(&inward, 4.0, &s, theta.closed_form).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!((rep.max_b - 2.0).abs() <= 1e-6 && rep.min_slack.abs() <= 1e-6);

    let outward = sphere_boundary_hypersurface_with(1.0, 2.0, Congruence::Outgoing, 16).unwrap();
    let s0 = CrossSection::at_gauge(&outward, 0.0).unwrap();
    let s1 = CrossSection::at_gauge(&outward, 1.0).unwrap();
    let rep = hawking_check(&s0, &s1, &outward, 4.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!((rep.content_first - 1.0).abs() < 1e-12 && (rep.content_second - 4.0).abs() < 1e-12);

    let mut last = f64::INFINITY;
    for radius in [1.0, 10.0, 100.0, 1000.0] {
        let h = sphere_boundary_hypersurface_with(radius, 1.0, Congruence::Outgoing, 4).unwrap();
        let c = minkowski_content(
            &CrossSection::at_gauge(&h, 1.0).unwrap(),
            &h,
            &DEFAULT_EPS_GRID,
            None,
        )
        .unwrap();
        let gap = c.closed_form - 1.0;
        assert!(gap > 0.0 && gap < last);
        last = gap;
    }
    assert!(last < 3e-3);
}
