mod common;

use common::pearson_oracle;
use proptest::prelude::*;
use spt_core::linguistics::{
    distance, geographic_distance, genetic_distance, pearson, LanguageProfile, Metric,
    MetricOptions,
};
use spt_core::Error;

fn features(len: usize) -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::weighted(0.85, 0.0f64..1.0), len)
}

prop_compose! {
    fn profile()(
        code in "[a-z]{3}",
        syntax in features(6),
        phonology in features(4),
        inventory in features(5),
        latitude in -90.0f64..90.0,
        longitude in -180.0f64..180.0,
        family in 0usize..3,
        branch in 0usize..2,
        tokens in 1.0f64..1e6,
    ) -> LanguageProfile {
        LanguageProfile {
            lineage: vec!["root".into(), format!("f{family}"), format!("f{family}b{branch}"), code.clone()],
            code,
            syntax,
            phonology,
            inventory,
            latitude,
            longitude,
            pretrain_tokens: tokens,
        }
    }
}

fn options() -> impl Strategy<Value = MetricOptions> {
    (any::<bool>(), any::<bool>()).prop_map(|(featural_geo_gen, log_data)| MetricOptions {
        featural_geo_gen,
        log_data,
    })
}

/// The feature vector a cosine-based metric reads.
fn relevant(m: Metric, p: &LanguageProfile) -> Vec<Option<f64>> {
    match m {
        Metric::Syn => p.syntax.clone(),
        Metric::Phon => p.phonology.clone(),
        Metric::Inv => p.inventory.clone(),
        _ => p.all_features(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn six_distances_are_symmetric_bounded_and_zero_on_identity(a in profile(), b in profile(), opts in options()) {
        for m in Metric::DISTANCES {
            let ab = distance(m, &a, &b, opts);
            let ba = distance(m, &b, &a, opts);
            match (&ab, &ba) {
                (Ok(x), Ok(y)) => {
                    prop_assert!((x - y).abs() < 1e-12, "{m}: {x} vs {y}");
                    prop_assert!((0.0..=1.0).contains(x), "{m}: {x}");
                }
                (Err(Error::UndefinedDistance(_)), Err(Error::UndefinedDistance(_))) => {}
                other => prop_assert!(false, "{m}: asymmetric outcome {other:?}"),
            }
            let self_d = distance(m, &a, &a, opts);
            match m {
                Metric::Geo | Metric::Gen => prop_assert_eq!(self_d.unwrap(), 0.0),
                _ => {
                    let v = relevant(m, &a);
                    let defined = v.iter().all(Option::is_some) && v.iter().any(|x| *x != Some(0.0));
                    match self_d {
                        Ok(d) => prop_assert_eq!(d, 0.0, "{}", m),
                        Err(Error::UndefinedDistance(_)) => prop_assert!(!defined, "{} undefined on a complete profile", m),
                        Err(e) => prop_assert!(false, "{}: {}", m, e),
                    }
                }
            }
        }
    }

    #[test]
    fn geo_triangle_inequality(a in profile(), b in profile(), c in profile()) {
        let (ab, bc, ac) = (geographic_distance(&a, &b), geographic_distance(&b, &c), geographic_distance(&a, &c));
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn pearson_matches_covariance_oracle(
        xy in (3usize..60).prop_flat_map(|n| (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        ))
    ) {
        let (x, y) = xy;
        let got = pearson(&x, &y).unwrap();
        prop_assert!((got - pearson_oracle(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_affine_invariant(
        x in prop::collection::vec(-10.0f64..10.0, 5..30),
        scale in 0.1f64..10.0,
        offset in -50.0f64..50.0,
    ) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let y: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
        let neg: Vec<f64> = x.iter().map(|v| -scale * v + offset).collect();
        prop_assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-9);
    }
}

#[test]
fn genetic_distance_orders_kinship_on_a_hand_built_tree() {
    let p = |code: &str, path: &[&str]| LanguageProfile {
        code: code.into(),
        syntax: vec![Some(1.0)],
        phonology: vec![Some(1.0)],
        inventory: vec![Some(1.0)],
        latitude: 0.0,
        longitude: 0.0,
        lineage: path.iter().map(|s| s.to_string()).collect(),
        pretrain_tokens: 1.0,
    };
    // proto -> ie -> germanic -> {eng, deu}; proto -> ie -> romance -> fra; proto -> uralic -> fin
    let eng = p("eng", &["proto", "ie", "germanic", "eng"]);
    let deu = p("deu", &["proto", "ie", "germanic", "deu"]);
    let fra = p("fra", &["proto", "ie", "romance", "fra"]);
    let fin = p("fin", &["proto", "uralic", "fin"]);
    let sibling = genetic_distance(&eng, &deu).unwrap();
    let cousin = genetic_distance(&eng, &fra).unwrap();
    let distant = genetic_distance(&eng, &fin).unwrap();
    assert!(sibling < cousin && cousin < distant);
    assert_eq!(sibling, 1.0 - 6.0 / 8.0);
    assert_eq!(distant, 1.0 - 2.0 / 7.0);
}

#[test]
fn pearson_error_cases() {
    assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Contract(_))));
    assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::Contract(_))));
    assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
}
