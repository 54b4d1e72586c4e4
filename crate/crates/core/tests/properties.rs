mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use xsimkit::align::{align, Margin, MarginConfig};
use xsimkit::augment::{
    build_candidates, causality_transforms, detect_entities, detect_numbers, entity_transforms,
    number_transforms, AugmentConfig, Lexicons,
};
use xsimkit::corpus::{parse_candidates, write_candidates_to, Candidate, CandidateSet, TransformCategory};
use xsimkit::ranking::{pairwise_accuracy, split_report, Group, Polarity, Split, SystemRecord};

fn margin_of(i: u8) -> Margin {
    [Margin::Absolute, Margin::Distance, Margin::Ratio][usize::from(i % 3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidate_tsv_round_trips(
        texts in prop::collection::vec("[^\t\n\r]{0,12}", 1..8),
        extra in prop::collection::vec((0usize..8, 0usize..3, "[a-z ,.%0-9]{1,10}"), 0..20),
    ) {
        let n = texts.len();
        let mut c: Vec<Candidate> = texts.iter().enumerate().map(|(i, t)| Candidate::original(format!("{t}#{i}"), i)).collect();
        let mut t: Vec<(usize, TransformCategory, String)> = extra
            .into_iter()
            .map(|(o, k, s)| (o % n, TransformCategory::ALL[k], s))
            .collect();
        t.sort_by_key(|(o, k, _)| (*o, *k));
        for (j, (o, k, s)) in t.into_iter().enumerate() {
            c.push(Candidate::transformed(format!("{s}~{j}"), o, k));
        }
        let set = CandidateSet::from_candidates(c).unwrap();
        let mut bytes = Vec::new();
        write_candidates_to(&set, &mut bytes).unwrap();
        let back = parse_candidates(std::str::from_utf8(&bytes).unwrap()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn ranking_ignores_monotone_rescaling(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -50.0f64..50.0) {
        let records = random_records(&mut rng(seed), 4, 6, false);
        prop_assume!(records.len() >= 2);
        let base = pairwise_accuracy(&records, Polarity::Error);
        let mapped: Vec<SystemRecord> = records
            .iter()
            .map(|r| SystemRecord::new(&r.system_id, &r.direction, (r.proxy * scale + shift).exp(), r.downstream.powi(3) + shift))
            .collect();
        let after = pairwise_accuracy(&mapped, Polarity::Error);
        match (base, after) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!((a.concordant, a.discordant, a.tied), (b.concordant, b.discordant, b.tied));
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn polarity_reversal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let records = random_records(&mut r, 3, 6, false);
        let records: Vec<SystemRecord> = records
            .iter()
            .enumerate()
            .map(|(i, x)| SystemRecord::new(&x.system_id, &x.direction, x.proxy + i as f64 * 1e-3, x.downstream + i as f64 * 1e-3))
            .collect();
        let as_score: Vec<SystemRecord> = records
            .iter()
            .map(|x| SystemRecord::new(&x.system_id, &x.direction, 100.0 - x.proxy, x.downstream))
            .collect();
        if let Ok(a) = pairwise_accuracy(&records, Polarity::Error) {
            let b = pairwise_accuracy(&as_score, Polarity::Score).unwrap();
            prop_assert_eq!(a.tied, 0);
            prop_assert_eq!(a.accuracy, b.accuracy);
            let flipped = pairwise_accuracy(&as_score, Polarity::Error).unwrap();
            prop_assert!((flipped.accuracy - (100.0 - a.accuracy)).abs() < 1e-9);
        }
    }

    /// Holds when each direction has at most one external system; pairs of
    /// two external systems fall in neither split.
    #[test]
    fn splits_partition_pairs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut records = Vec::new();
        for d in 0..r.gen_range(1..5) {
            let n = r.gen_range(2..7);
            let external = r.gen_range(0..=n);
            for s in 0..n {
                let group = if s == external { Group::Across } else { Group::Within };
                records.push(
                    SystemRecord::new(&format!("s{s}"), &format!("d{d}"), f64::from(r.gen_range(0..9u8)), f64::from(r.gen_range(0..9u8)))
                        .with_group(group),
                );
            }
        }
        let total = pairwise_accuracy(&records, Polarity::Error).unwrap().total_pairs;
        let count = |s| split_report(&records, s, Polarity::Error).map_or(0, |x| x.total_pairs);
        prop_assert_eq!(count(Split::Within) + count(Split::Across), total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alignment_ignores_row_scale(seed in any::<u64>(), m in any::<u8>(), scales in prop::collection::vec(0.01f32..100.0, 40)) {
        let mut r = rng(seed);
        let set = random_candidate_set(&mut r, 8, 16);
        let (src, cand) = correlated_instance(&mut r, &set, 8, 1.0);
        let cfg = MarginConfig::new(margin_of(m), 2);
        let base = align(&matrix(&src), &set, &matrix(&cand), &cfg).unwrap();
        // Powers of two scale exactly, so normalized rows are bit-identical.
        let pow2 = |s: f32| 2f32.powi(s.log2().round() as i32);
        let scaled_src: Vec<Vec<f32>> = src.iter().zip(&scales).map(|(row, &s)| row.iter().map(|v| v * pow2(s)).collect()).collect();
        let scaled_cand: Vec<Vec<f32>> = cand.iter().zip(scales.iter().rev()).map(|(row, &s)| row.iter().map(|v| v * pow2(s)).collect()).collect();
        let after = align(&matrix(&scaled_src), &set, &matrix(&scaled_cand), &cfg).unwrap();
        prop_assert_eq!(base.predictions, after.predictions);
    }

    #[test]
    fn alignment_follows_source_permutation(seed in any::<u64>(), m in any::<u8>()) {
        let mut r = rng(seed);
        let n = 10;
        let set = random_candidate_set(&mut r, n, 0);
        let (src, cand) = correlated_instance(&mut r, &set, 12, 0.8);
        let cfg = MarginConfig::new(margin_of(m), 3);
        let base = align(&matrix(&src), &set, &matrix(&cand), &cfg).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let p_src: Vec<Vec<f32>> = perm.iter().map(|&i| src[i].clone()).collect();
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let p_cand: Vec<Vec<f32>> = perm.iter().map(|&i| cand[i].clone()).collect();
        let after = align(&matrix(&p_src), &set, &matrix(&p_cand), &cfg).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            prop_assert_eq!(after.predictions[new].predicted, inverse[base.predictions[old].predicted]);
            prop_assert_eq!(after.predictions[new].error_kind, base.predictions[old].error_kind);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn augmentation_is_deterministic_capped_and_local(seed in any::<u64>(), cap in 1usize..12) {
        let lex = Lexicons::builtin();
        let refs = fuzz_sentences(seed, 12);
        let cfg = AugmentConfig::new(seed, cap, TransformCategory::ALL).unwrap();
        let a = build_candidates(&refs, &lex, &cfg, &[]).unwrap();
        let b = build_candidates(&refs, &lex, &cfg, &[]).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.check_cap(cap).is_ok());
        prop_assert!(a.transformed().iter().all(|c| c.text != refs[c.origin]));
        for (origin, s) in refs.iter().enumerate() {
            let mut rng = cfg.stream(origin, TransformCategory::Causality);
            let mut all = causality_transforms(s, &lex, &cfg, &mut rng);
            let mut rng = cfg.stream(origin, TransformCategory::Entity);
            all.extend(entity_transforms(s, &detect_entities(s, &lex), &lex, &cfg, &mut rng));
            let mut rng = cfg.stream(origin, TransformCategory::Number);
            all.extend(number_transforms(s, &detect_numbers(s), &cfg, &mut rng));
            for t in &all {
                prop_assert!(check_locality(s, t).is_ok(), "{:?}", check_locality(s, t));
            }
        }
    }
}
