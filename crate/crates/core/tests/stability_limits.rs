use proptest::prelude::*;
use synthnull::corpus::{localization_instance, InstanceKind};
use synthnull::stability::{
    adversarial_sigma_sequence, constant_sequence, density_perturbation_sequence,
    gauge_warp_sequence, kink_sequence, kuratowski_limsup, limit_nce, perturbed_cone_sequence,
    pushforward_distance, verify_hypotheses,
};
use synthnull::Verdict;

#[test]
fn cone_sequence_converges_at_rate_eps() {
    let seq = perturbed_cone_sequence(5, 3.0, 4).unwrap();
    let d: Vec<f64> = seq
        .steps
        .iter()
        .map(|s| pushforward_distance(&seq.limit, s).unwrap() / s.eps)
        .collect();
    let c = d[0];
    assert!(c > 0.0);
    assert!(d.iter().all(|r| *r <= c * (1.0 + 1e-9)));
    let rep = limit_nce(&seq, 4.0, 100, 1).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.hypotheses.pass);
    assert_eq!(rep.distances.len(), 5);
}

#[test]
fn gates_and_generated_sequences() {
    let inst = localization_instance(8, 0).unwrap();
    assert_eq!(inst.kind, InstanceKind::Concave);
    assert!(
        verify_hypotheses(&constant_sequence(&inst.surface, 4).unwrap())
            .unwrap()
            .pass
    );
    assert!(
        verify_hypotheses(&gauge_warp_sequence(&inst.surface, 4).unwrap())
            .unwrap()
            .pass
    );
    let adv = adversarial_sigma_sequence(&inst.surface, 3).unwrap();
    let rep = limit_nce(&adv, inst.n, 100, 2).unwrap();
    assert_eq!(rep.verdict, Verdict::Inapplicable);
    assert!(rep.limit_search.is_none());
    assert_eq!(
        limit_nce(&kink_sequence(5, 4.0).unwrap(), 4.0, 100, 3)
            .unwrap()
            .verdict,
        Verdict::Pass
    );
}

#[test]
fn limit_never_fails_when_gates_pass() {
    let mut verdicts = [0usize; 2];
    for index in 0..12 {
        let inst = localization_instance(31, index).unwrap();
        let psi = move |t: f64| 0.5 + 0.5 * (t * (index + 1) as f64).sin();
        for seq in [
            constant_sequence(&inst.surface, 3).unwrap(),
            density_perturbation_sequence(&inst.surface, 3, psi).unwrap(),
            gauge_warp_sequence(&inst.surface, 3).unwrap(),
        ] {
            let rep = limit_nce(&seq, inst.n, 200, index as u64).unwrap();
            assert_ne!(
                rep.verdict,
                Verdict::Fail,
                "instance {index}: {:?}",
                rep.reason
            );
            verdicts[usize::from(rep.verdict == Verdict::Pass)] += 1;
        }
    }
    assert!(verdicts[1] > 0 && verdicts[0] > 0);
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kuratowski_limsup_is_monotone(
        sets in prop::collection::vec(prop::collection::vec(point(), 0..4), 1..12),
        extra in prop::collection::vec(prop::collection::vec(point(), 0..3), 12),
        tol in 0.05f64..0.5,
    ) {
        let bigger: Vec<Vec<Vec<f64>>> = sets
            .iter()
            .zip(&extra)
            .map(|(s, e)| s.iter().chain(e).cloned().collect())
            .collect();
        let small = kuratowski_limsup(&sets, tol);
        let large = kuratowski_limsup(&bigger, tol);
        for p in &small {
            prop_assert!(large.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol)));
        }
    }
}
