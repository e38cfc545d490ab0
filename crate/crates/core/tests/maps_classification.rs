//! Which relations each catalog map preserves, on seeded samples.

use effekt_core::function::MonotoneFunction;
use effekt_core::hermitian::CMatrix;
use effekt_core::io::MapJson;
use effekt_core::maps::{check_preserves, classify, is_operator_monotone_sampled, EffectMap, PreservationReport, Relation};
use effekt_core::sampling::{haar_unitary, random_mixed_effect};
use effekt_core::{Effect, Projection, SeededRng, UnitVector};

const TRIALS: usize = 120;

fn unitary(dim: usize) -> CMatrix {
    haar_unitary(&mut SeededRng::for_trial(5, "maps-classification", dim as u64), dim)
}

fn patch() -> EffectMap {
    let e1 = Projection::rank1(&UnitVector::basis(3, 1)).effect().clone();
    let e2 = e1.scale(0.5).unwrap();
    EffectMap::probability_patch(UnitVector::basis(3, 0), e1, e2).unwrap()
}

/// (order_fwd, order_bwd, orthogonality, commutativity, coexistence, mixture, probability)
fn holds(r: &PreservationReport) -> [bool; 7] {
    [
        r.order_fwd.holds,
        r.order_bwd.holds,
        r.orthogonality.holds,
        r.commutativity.holds,
        r.coexistence.holds,
        r.mixture.holds,
        r.probability.holds,
    ]
}

fn assert_profile(map: &EffectMap, dim: usize, expected: [bool; 7]) -> PreservationReport {
    let report = classify(map, 11, TRIALS, dim).unwrap();
    assert_eq!(holds(&report), expected, "{}", map.tag());
    for v in [&report.order_fwd, &report.order_bwd, &report.orthogonality, &report.coexistence, &report.mixture] {
        assert_eq!(v.holds, v.counterexample.is_none());
    }
    report
}

#[test]
fn unitary_and_antiunitary_preserve_everything() {
    for dim in [3, 4] {
        for map in [EffectMap::unitary(unitary(dim)).unwrap(), EffectMap::antiunitary(unitary(dim)).unwrap()] {
            let r = assert_profile(&map, dim, [true; 7]);
            assert!(r.spectrum_defect <= 1e-10);
            assert!(r.inverse_residual <= 1e-10);
            assert!(r.symmetry.is_none());
        }
    }
}

#[test]
fn complement_unitary_reverses_order() {
    let map = EffectMap::complement_unitary(unitary(3)).unwrap();
    let r = assert_profile(&map, 3, [false, false, false, true, true, true, false]);
    let c = r.order_fwd.counterexample.expect("order counterexample");
    assert!(c.replay(&map, Relation::Order).unwrap());
}

#[test]
fn mobius_calculus_keeps_order_but_not_coexistence() {
    let map = EffectMap::calculus(CMatrix::identity(3, 3), MonotoneFunction::Mobius { a: 1.0 }).unwrap();
    let r = assert_profile(&map, 3, [true, true, false, true, false, false, false]);
    let probe = r.symmetry.expect("calculus maps carry a symmetry probe");
    assert!((probe.max_defect - 1.0 / 3.0).abs() <= 1e-9);
    assert!(!probe.holds);
    let half = Effect::scalar(0.5, 3).unwrap();
    let image = map.apply(&half).unwrap();
    assert!(image.matrix().sub(Effect::scalar(2.0 / 3.0, 3).unwrap().matrix()).unwrap().op_norm().unwrap() <= 1e-12);
}

#[test]
fn swap01_keeps_only_coexistence_and_commutativity() {
    let r = assert_profile(&EffectMap::Swap01, 3, [false, false, false, true, true, false, false]);
    assert_eq!(r.dim, 3);
    let swapped = EffectMap::Swap01.apply(&Effect::zero(2)).unwrap();
    assert_eq!(swapped, Effect::identity(2));
}

#[test]
fn probability_patch_keeps_probability() {
    let map = patch();
    let r = assert_profile(&map, 3, [false, false, false, true, true, false, true]);
    assert_eq!(r.probability.max_deviation, 0.0);
}

#[test]
fn counterexamples_replay_for_every_failing_relation() {
    let maps = [EffectMap::Swap01, patch(), EffectMap::complement_unitary(unitary(3)).unwrap()];
    for map in &maps {
        for relation in Relation::ALL {
            let check = check_preserves(map, relation, 3, 80, 3).unwrap();
            for v in [&check.forward, &check.backward] {
                if let Some(c) = &v.counterexample {
                    assert!(c.replay(map, relation).unwrap(), "{} {}", map.tag(), relation.name());
                }
            }
        }
    }
}

#[test]
fn structural_inverse_round_trips() {
    let maps = [
        EffectMap::unitary(unitary(3)).unwrap(),
        EffectMap::antiunitary(unitary(3)).unwrap(),
        EffectMap::complement_unitary(unitary(3)).unwrap(),
        EffectMap::calculus(unitary(3), MonotoneFunction::Power { p: 0.5 }).unwrap(),
        EffectMap::Swap01,
        patch(),
    ];
    let mut rng = SeededRng::for_trial(1, "round-trip", 0);
    for map in &maps {
        for _ in 0..40 {
            let e = random_mixed_effect(&mut rng, 3);
            let back = map.apply_inverse(&map.apply(&e).unwrap()).unwrap();
            assert!(back.matrix().sub(e.matrix()).unwrap().op_norm().unwrap() <= 1e-10, "{}", map.tag());
        }
    }
}

#[test]
fn map_json_round_trip() {
    for map in [EffectMap::antiunitary(unitary(2)).unwrap(), patch(), EffectMap::Swap01] {
        let wire = MapJson::from_map(&map);
        let text = serde_json::to_string(&wire).unwrap();
        let back: MapJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_map().unwrap(), map);
    }
}

#[test]
fn catalog_monotonicity() {
    for f in [MonotoneFunction::Mobius { a: 1.0 }, MonotoneFunction::Power { p: 0.5 }, MonotoneFunction::Identity] {
        let v = is_operator_monotone_sampled(&f, 9, 150, &[2, 3, 4]).unwrap();
        assert!(v.holds(), "{f}");
    }
}
