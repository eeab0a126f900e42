use proptest::prelude::*;
use synthnull::io::{
    hypersurface_from_str, hypersurface_to_string, measure_from_str, measure_to_string,
    read_sequence, write_sequence,
};
use synthnull::measures::{HMeasure, RayMeasureSlice};
use synthnull::ray::{GaugeInterval, Ray, RayDensity};
use synthnull::smooth::cone_hypersurface_with;
use synthnull::stability::perturbed_cone_sequence;
use synthnull::SyntheticNullHypersurface;

fn surface_strategy() -> impl Strategy<Value = SyntheticNullHypersurface> {
    let ray = (
        -5.0f64..5.0,
        0.1f64..4.0,
        prop::collection::vec(0.0f64..10.0, 2..8),
        prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        any::<bool>(),
    );
    prop::collection::vec((ray, 0.05f64..1.0), 1..4).prop_map(|rays| {
        let total: f64 = rays.iter().map(|r| r.1).sum();
        let k = rays.len();
        let mut acc = 0.0;
        let rays = rays
            .into_iter()
            .enumerate()
            .map(|(i, ((a, len, vals, m, complete), w))| {
                let w = if i + 1 == k { 1.0 - acc } else { w / total };
                acc += w;
                let n = vals.len() - 1;
                let knots = (0..=n)
                    .map(|j| {
                        if j == n {
                            a + len
                        } else {
                            a + len * j as f64 / n as f64
                        }
                    })
                    .collect();
                let interval = if complete {
                    GaugeInterval::future_complete(a)
                } else {
                    GaugeInterval::new(a, a + len, true, i % 2 == 0).unwrap()
                };
                Ray::new(
                    format!("ray-{i}"),
                    w,
                    interval,
                    RayDensity::with_exponent(knots, vals, m).unwrap(),
                    None,
                )
                .unwrap()
            })
            .collect();
        SyntheticNullHypersurface::new(rays, None, Some(4.0)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hypersurfaces_round_trip_bit_exactly(h in surface_strategy()) {
        let text = hypersurface_to_string(&h).unwrap();
        let back = hypersurface_from_str(&text).unwrap();
        prop_assert_eq!(&back, &h);
        prop_assert_eq!(hypersurface_to_string(&back).unwrap(), text);
    }

    #[test]
    fn measures_round_trip_bit_exactly(
        knots in prop::collection::vec(-3.0f64..3.0, 2..6),
        vals in prop::collection::vec(0.0f64..5.0, 5),
        atom in -3.0f64..3.0,
        atom_mass in 0.0f64..1.0,
        tip in 0.0f64..1.0,
    ) {
        let mut knots = knots;
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        prop_assume!(knots.len() >= 2);
        let n = knots.len() - 1;
        let slice = RayMeasureSlice::new("r", knots, vals[..n].to_vec(), vec![(atom, atom_mass)]).unwrap();
        let scale = 1.0 / (slice.mass() + tip);
        prop_assume!(scale.is_finite());
        let slices = vec![
            RayMeasureSlice::new(
                "r",
                slice.knots().to_vec(),
                slice.values().iter().map(|v| v * scale).collect(),
                slice.atoms().iter().map(|(g, m)| (*g, m * scale)).collect(),
            )
            .unwrap(),
        ];
        let Ok(mu) = HMeasure::new_sub_probability(slices, tip * scale) else { return Ok(()) };
        let back = measure_from_str(&measure_to_string(&mu).unwrap()).unwrap();
        prop_assert_eq!(back, mu);
    }
}

#[test]
fn cone_with_tip_and_embedding_round_trips() {
    let h = cone_hypersurface_with(4, 2.0, 5).unwrap();
    assert_eq!(
        hypersurface_from_str(&hypersurface_to_string(&h).unwrap()).unwrap(),
        h
    );
}

#[test]
fn sequences_round_trip_through_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let seq = perturbed_cone_sequence(3, 2.0, 3).unwrap();
    let manifest = write_sequence(dir.path(), &seq).unwrap();
    assert_eq!(read_sequence(&manifest).unwrap(), seq);
}

#[test]
fn unknown_fields_and_bad_syntax_are_located() {
    let err = hypersurface_from_str("{\"rays\": [], \"colour\": 3}")
        .unwrap_err()
        .to_string();
    assert!(err.contains("colour"), "{err}");
    let err = hypersurface_from_str("{\n  \"rays\": [\n    {\"id\": }\n  ]\n}")
        .unwrap_err()
        .to_string();
    assert!(err.contains("line 3"), "{err}");
}
