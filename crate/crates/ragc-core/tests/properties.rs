//! Property tests tying the engine, the constructors and the codecs to
//! their independent oracles.

use proptest::prelude::*;

use ragc_core::alphabet::{ingest_bytes, render_bytes};
use ragc_core::bitio::{self, BitStream};
use ragc_core::construct::{construct_mr_repair, construct_repair, construct_rl_mr_repair};
use ragc_core::container::{self};
use ragc_core::encode::pge;
use ragc_core::engine;
use ragc_core::grammar::Rule;
use ragc_core::oracle;

fn small_text(max_len: usize, max_sym: u64) -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(1..=max_sym, 0..max_len)
}

fn small_bytes(max_len: usize, alphabet: u8) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(b'a'..b'a' + alphabet, 0..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_counts_match_scratch_rebuild_after_every_replacement(
        t in small_text(2000, 4),
        seed in any::<u64>(),
    ) {
        let (mut wt, mut idx) = engine::build_index(&t);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
        let mut v = t.iter().copied().max().unwrap_or(0);
        let mut step = seed;
        while let Some((pair, count)) = engine::most_frequent_pair(&wt, &mut idx) {
            if count < 2 {
                break;
            }
            v += 1;
            // Alternate pair replacement and repeat extension pseudo-randomly.
            step = step.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if step % 2 == 0 {
                let spans = engine::pair_occurrences(&wt, &mut idx, pair);
                prop_assert_eq!(spans.len(), count);
                engine::replace_all(&mut wt, &mut idx, &spans, 2, v).unwrap();
            } else {
                let (r, spans) = engine::extend_to_maximal_repeat(&wt, &mut idx, pair);
                prop_assert_eq!(spans.len(), count);
                engine::replace_all(&mut wt, &mut idx, &spans, r.len(), v).unwrap();
            }
            oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
        }
    }

    #[test]
    fn engine_selection_agrees_with_oracle(t in small_text(64, 4)) {
        oracle::cross_check_selection(&t).unwrap();
    }

    #[test]
    fn constructors_round_trip_random_bytes(data in small_bytes(600, 4)) {
        let (t, map) = ingest_bytes(&data);
        for g in [
            construct_repair(&t, &map),
            construct_mr_repair(&t, &map),
            construct_rl_mr_repair(&t, &map),
        ] {
            prop_assert!(g.validate().is_empty());
            prop_assert_eq!(g.expand(), data.clone());
            prop_assert_eq!(oracle::naive_expand(&g), data.clone());
        }
    }

    #[test]
    fn repair_bodies_stay_pairs(data in small_bytes(400, 3)) {
        let (t, map) = ingest_bytes(&data);
        let g = construct_repair(&t, &map);
        for r in &g.rules[g.sigma()..] {
            match r {
                Rule::Sequence(b) => prop_assert_eq!(b.len(), 2),
                other => prop_assert!(false, "unexpected rule {:?}", other),
            }
        }
    }

    #[test]
    fn alphabet_round_trip(data in proptest::collection::vec(any::<u8>(), 0..1000)) {
        let (t, map) = ingest_bytes(&data);
        prop_assert_eq!(render_bytes(&map, &t).unwrap(), data);
    }

    #[test]
    fn gamma_round_trip(values in proptest::collection::vec(1u64..=u64::MAX / 2, 0..64)) {
        let mut s = BitStream::new();
        for &v in &values {
            s.write_gamma(v).unwrap();
        }
        let mut r = s.reader();
        for &v in &values {
            prop_assert_eq!(r.read_gamma().unwrap(), v);
        }
        prop_assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn rle_split_expands_back(t in small_text(300, 5)) {
        let (s, l) = bitio::rle_split(&t);
        prop_assert_eq!(l.iter().sum::<u64>() as usize, t.len());
        let mut back = Vec::new();
        for (&sym, &len) in s.iter().zip(&l) {
            back.extend(std::iter::repeat_n(sym, len as usize));
        }
        prop_assert_eq!(back, t);
    }

    #[test]
    fn pge_round_trips(
        values in proptest::collection::vec(0u64..=1 << 40, 0..200),
        eps in 1u32..=16,
    ) {
        let s = pge::pge_encode(&values, eps).unwrap();
        prop_assert_eq!(pge::pge_decode(&s).unwrap(), values);
    }

    #[test]
    fn containers_round_trip(data in small_bytes(300, 4), eps in 1u8..=12) {
        for (algo, enc) in container::all_combinations() {
            let file = container::compress(&data, algo, enc, eps).unwrap();
            prop_assert_eq!(container::decompress(&file).unwrap(), data.clone());
        }
    }
}

#[test]
fn delimited_text_length_identities_on_random_inputs() {
    use ragc_core::encode::naive::{grammar_to_text, TextStyle};
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for len in [1usize, 3, 10, 100, 400] {
        let data: Vec<u8> = (0..len).map(|_| b'a' + (next() % 3) as u8).collect();
        let (t, map) = ingest_bytes(&data);
        for g in [
            construct_repair(&t, &map),
            construct_mr_repair(&t, &map),
            construct_rl_mr_repair(&t, &map),
        ] {
            let per_rule = grammar_to_text(&g, TextStyle::PerRule).unwrap();
            assert_eq!(
                per_rule.symbols.len() as u64,
                g.size() + g.variable_rule_count() as u64 + 1
            );
            let all_pairs = g.rules[g.sigma()..]
                .iter()
                .all(|r| matches!(r, Rule::Sequence(b) if b.len() == 2));
            if all_pairs {
                let compact = grammar_to_text(&g, TextStyle::PairsCompact).unwrap();
                assert_eq!(compact.symbols.len() as u64, g.size() + 2);
            }
        }
    }
}

#[test]
fn poppt_leaf_bound_holds_on_random_inputs() {
    use ragc_core::encode::poppt::{build_poppt, PopptForm};
    let mut state = 0xD1B54A32D192ED03u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for len in [2usize, 7, 50, 300] {
        let data: Vec<u8> = (0..len).map(|_| b'a' + (next() % 4) as u8).collect();
        let (t, map) = ingest_bytes(&data);
        let sigma = map.sigma() as u64;
        for (g, form) in [
            (construct_repair(&t, &map), PopptForm::Binary),
            (construct_mr_repair(&t, &map), PopptForm::General),
            (construct_rl_mr_repair(&t, &map), PopptForm::General),
        ] {
            // build_poppt itself enforces the bound; double-check here.
            let p = build_poppt(&g, form).unwrap();
            for (i, &label) in p.leaves.iter().enumerate() {
                assert!(label <= i as u64 + 1 + sigma);
            }
        }
    }
}
