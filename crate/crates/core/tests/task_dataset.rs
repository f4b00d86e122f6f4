use std::collections::{HashMap, HashSet};

use compgen::dataset::*;
use compgen::task::*;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chain_eval(prims: &[PrimitiveTable], x: &[TokenId]) -> (TokenId, Vec<TokenId>) {
    // left fold over the chain, written independently of the DAG walker
    let mut acc = prims[0].outputs()[x[0].index() * prims[0].vocab() as usize + x[1].index()];
    let mut mids = Vec::new();
    for (j, t) in prims.iter().enumerate().skip(1) {
        mids.push(TokenId(acc));
        acc = t.outputs()[acc as usize * t.vocab() as usize + x[j + 1].index()];
    }
    (TokenId(acc), mids)
}

#[test]
fn random_table_outputs_look_uniform() {
    let chi = ChiSquared::new(49.0).unwrap();
    let critical = chi.inverse_cdf(0.999);
    for seed in 0..5 {
        let t = make_random_primitive(2, 50, seed).unwrap();
        let mut counts = [0usize; 50];
        for &o in t.outputs() {
            counts[o as usize] += 1;
        }
        let expected = 2500.0 / 50.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(stat < critical, "seed {seed}: chi2 {stat} >= {critical}");
    }
}

#[test]
fn balanced_table_has_equal_classes() {
    for vocab in [3u32, 8, 17] {
        let t = make_balanced_primitive(vocab, 7).unwrap();
        assert!(t.class_sizes().iter().all(|&s| s == vocab as usize));
    }
}

#[test]
fn three_hop_matches_recursive_evaluation_everywhere() {
    let s = TaskKind::THREE_HOP.structure();
    let prims = random_primitives_for(&s, 4, 1.0, 11).unwrap();
    let mut checked = 0;
    for code in 0..256u32 {
        let x = tokens(&[code >> 6 & 3, code >> 4 & 3, code >> 2 & 3, code & 3]);
        let got = evaluate(&s, &prims, &x).unwrap();
        let (out, mids) = chain_eval(&prims, &x);
        assert_eq!(got.output, out);
        assert_eq!(got.intermediates, mids);
        checked += 1;
    }
    assert_eq!(checked, 256);
}

#[test]
fn id_enumeration_matches_filter() {
    let s = TaskKind::TWO_HOP.structure();
    for seed in 0..20 {
        let prims = random_primitives_for(&s, 4, 0.6, seed).unwrap();
        let pool = collect_id_combinations(&s, &prims).unwrap();
        let lazy: Vec<Example> = enumerate_id_combinations(&s, &prims).unwrap().collect();
        assert_eq!(pool, lazy);
        let mut expected = Vec::new();
        for code in 0..64u32 {
            let x = tokens(&[code >> 4, code >> 2 & 3, code & 3]);
            let a = prims[0].index_of(&x[..2]);
            let b = prims[0].apply_index(a);
            if prims[0].is_seen_index(a) && prims[1].is_seen(&[b, x[2]]) {
                expected.push(x);
            }
        }
        let got: Vec<_> = pool.iter().map(|e| e.input.clone()).collect();
        assert_eq!(got, expected, "seed {seed}");
    }
}

#[test]
fn id_pool_size_near_expected_at_vocab_50() {
    let s = TaskKind::TWO_HOP.structure();
    for seed in 1..=3 {
        let prims = random_primitives_for(&s, 50, 0.7, seed).unwrap();
        let n = enumerate_id_combinations(&s, &prims).unwrap().count() as f64;
        let expected = 0.7f64 * 0.7 * 50f64.powi(3);
        assert!((n - expected).abs() <= 0.02 * expected, "seed {seed}: {n}");
    }
}

#[test]
fn training_sample_inclusion_is_uniform() {
    // every pool member is drawn with probability n/|pool|
    let s = TaskKind::TWO_HOP.structure();
    let prims = random_primitives_for(&s, 6, 0.7, 3).unwrap();
    let pool = collect_id_combinations(&s, &prims).unwrap();
    let n = pool.len() / 3;
    let seeds = 1000;
    let mut hits: HashMap<Vec<TokenId>, usize> = HashMap::new();
    for seed in 0..seeds {
        let train = sample_training_set(&pool, n, seed).unwrap();
        assert_eq!(train.len(), n);
        let distinct: HashSet<_> = train.iter().map(|e| &e.input).collect();
        assert_eq!(distinct.len(), n);
        for e in train {
            *hits.entry(e.input).or_default() += 1;
        }
    }
    let p = n as f64 / pool.len() as f64;
    let mean = p * seeds as f64;
    let stat: f64 = pool
        .iter()
        .map(|e| {
            let c = *hits.get(&e.input).unwrap_or(&0) as f64;
            (c - mean).powi(2) / (mean * (1.0 - p))
        })
        .sum();
    // sum of (nearly independent) squared z-scores
    let chi = ChiSquared::new(pool.len() as f64 - 1.0).unwrap();
    assert!(stat < chi.inverse_cdf(0.999), "stat {stat}");
}

#[test]
fn split_membership_matches_brute_force() {
    let s = TaskKind::TWO_HOP.structure();
    for seed in 0..10 {
        let cfg = GenConfig { structure: s.clone(), vocab: 4, p_seen: 0.7, n_train: 12, test_size: 1000, seed };
        let g = generate(&cfg).unwrap();
        let train = &g.train.examples;
        g.train.verify(&s, &g.primitives).unwrap();
        let mut f1_seen = HashSet::new();
        let mut f2_seen = HashSet::new();
        for e in train {
            let b = g.primitives[0].apply(&e.input[..2]);
            f1_seen.insert((e.input[0], e.input[1]));
            f2_seen.insert((b, e.input[2]));
        }
        let train_inputs: HashSet<_> = train.iter().map(|e| e.input.clone()).collect();
        let (mut id, mut ood) = (Vec::new(), Vec::new());
        for code in 0..64u32 {
            let x = tokens(&[code >> 4, code >> 2 & 3, code & 3]);
            if train_inputs.contains(&x) {
                continue;
            }
            let b = g.primitives[0].apply(&x[..2]);
            if f1_seen.contains(&(x[0], x[1])) && f2_seen.contains(&(b, x[2])) {
                id.push(x);
            } else {
                ood.push(x);
            }
        }
        let got_id: Vec<_> = g.tests.id_test.iter().map(|e| e.input.clone()).collect();
        let got_ood: Vec<_> = g.tests.ood_test.iter().map(|e| e.input.clone()).collect();
        assert_eq!(got_id, id, "seed {seed}");
        assert_eq!(got_ood, ood, "seed {seed}");
        verify_examples(&g.tests.id_test, &s, &g.primitives).unwrap();
        verify_examples(&g.tests.ood_test, &s, &g.primitives).unwrap();
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = GenConfig {
        structure: TaskKind::NonTree.structure(),
        vocab: 7,
        p_seen: 0.7,
        n_train: 40,
        test_size: 30,
        seed: 99,
    };
    let a = generate(&cfg).unwrap();
    let b = generate(&cfg).unwrap();
    assert_eq!(a.primitives, b.primitives);
    assert_eq!(a.train, b.train);
    assert_eq!(a.tests, b.tests);
}

#[test]
fn capacity_error_when_pool_is_short() {
    let cfg = GenConfig {
        structure: TaskKind::TWO_HOP.structure(),
        vocab: 3,
        p_seen: 0.5,
        n_train: 1000,
        test_size: 5,
        seed: 0,
    };
    assert!(matches!(generate(&cfg), Err(DatasetError::Capacity { .. })));
}

#[test]
fn text_literals() {
    let e = Example { input: tokens(&[5, 12, 3]), target: TokenId(17), intermediates: tokens(&[9]), split: Split::Train };
    assert_eq!(serialize_example(&e, TextFormat::Plain), "<t_5><t_12><t_3>\t<t_17></a>");
    assert_eq!(serialize_example(&e, TextFormat::Cot), "<t_5><t_12><t_3>\t<t_9><t_17></a>");
    let p = Example { input: tokens(&[5, 12]), target: TokenId(9), intermediates: vec![], split: Split::Train };
    assert_eq!(serialize_example(&p, TextFormat::Partial), "<t_5><t_12>\t<t_9></a>");
    let mut buf = Vec::new();
    write_jsonl(&mut buf, std::slice::from_ref(&e)).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "{\"input\":[5,12,3],\"target\":17,\"intermediates\":[9],\"split\":\"train\"}\n"
    );
}

fn arb_example() -> impl Strategy<Value = (Example, TextFormat)> {
    (2usize..6, 0usize..4, prop::bool::ANY).prop_flat_map(|(n, m, cot)| {
        (
            prop::collection::vec(0u32..100_000, n),
            0u32..100_000,
            prop::collection::vec(0u32..100_000, m),
            prop::sample::select(vec![Split::Train, Split::IdTest, Split::OodTest]),
        )
            .prop_map(move |(x, y, mids, split)| {
                let format = if cot { TextFormat::Cot } else { TextFormat::Plain };
                let intermediates = if cot { tokens(&mids) } else { Vec::new() };
                (Example { input: tokens(&x), target: TokenId(y), intermediates, split }, format)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn text_round_trip((e, format) in arb_example()) {
        let line = serialize_example(&e, format);
        let back = parse_example(&line, format, e.input.len()).unwrap();
        prop_assert_eq!(&back.input, &e.input);
        prop_assert_eq!(back.target, e.target);
        prop_assert_eq!(&back.intermediates, &e.intermediates);
        prop_assert_eq!(serialize_example(&back, format), line);
    }

    #[test]
    fn jsonl_round_trip((e, _) in arb_example()) {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, std::slice::from_ref(&e)).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        prop_assert_eq!(back, vec![e]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seen_mask_count_is_exact(vocab in 2u32..12, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let t = make_random_primitive(2, vocab, seed).unwrap().with_seen_fraction(p, seed).unwrap();
        let size = (vocab * vocab) as usize;
        prop_assert_eq!(t.seen_count(), seen_count_for(p, size));
        prop_assert!(t.outputs().iter().all(|&o| o < vocab));
    }

    #[test]
    fn id_examples_only_use_seen_tuples(seed in any::<u64>(), kind in 0usize..4) {
        let kind = [TaskKind::TWO_HOP, TaskKind::THREE_HOP, TaskKind::ParallelTwoHop, TaskKind::NonTree][kind];
        let s = kind.structure();
        let prims = random_primitives_for(&s, 4, 0.7, seed).unwrap();
        for e in enumerate_id_combinations(&s, &prims).unwrap() {
            let apps = trace(&s, &prims, &e.input).unwrap();
            prop_assert!(apps.iter().zip(&prims).all(|(a, t)| t.is_seen_index(a.domain_index)));
        }
    }
}
