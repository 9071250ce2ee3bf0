//! The three grammar constructors built on the replace engine: plain pair
//! replacement, maximal-repeat replacement, and the run-length-aware
//! variant that collapses whole runs when the hottest repeat is `x^2`.

use std::collections::HashMap;

use crate::alphabet::AlphabetMap;
use crate::engine;
use crate::grammar::{Grammar, Rule, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Pairs,
    MaxRepeats,
    RunLength,
}

/// RePair: repeatedly replaces the most frequent pair with a fresh
/// variable until no pair occurs twice. Every produced rule body has
/// length exactly 2.
pub fn construct_repair(text: &[Symbol], alphabet: &AlphabetMap) -> Grammar {
    construct(text, alphabet, Mode::Pairs)
}

/// MR-RePair: like RePair, but each selected pair is first grown to a
/// maximal repeat, trimmed once when its endpoints coincide, and replaced
/// whole.
pub fn construct_mr_repair(text: &[Symbol], alphabet: &AlphabetMap) -> Grammar {
    construct(text, alphabet, Mode::MaxRepeats)
}

/// RL-MR-RePair: MR-RePair extended with run rules. When the selected
/// maximal repeat is `x^2`, every maximal run `x^k` (k >= 2) in the live
/// text is collapsed to a run-rule variable instead, reusing one variable
/// per distinct `(x, k)`.
pub fn construct_rl_mr_repair(text: &[Symbol], alphabet: &AlphabetMap) -> Grammar {
    construct(text, alphabet, Mode::RunLength)
}

fn construct(text: &[Symbol], alphabet: &AlphabetMap, mode: Mode) -> Grammar {
    debug_assert!(text
        .iter()
        .all(|&s| s >= 1 && s <= alphabet.sigma() as Symbol));
    let mut rules: Vec<Rule> = alphabet
        .terminal_bytes()
        .iter()
        .map(|&b| Rule::Terminal(b))
        .collect();
    let mut run_variables: HashMap<(Symbol, u64), Symbol> = HashMap::new();

    let (mut wt, mut idx) = engine::build_index(text);
    while let Some((pair, count)) = engine::most_frequent_pair(&wt, &mut idx) {
        if count < 2 {
            break;
        }
        match mode {
            Mode::Pairs => {
                let spans = engine::pair_occurrences(&wt, &mut idx, pair);
                let v = rules.len() as Symbol + 1;
                rules.push(Rule::Sequence(vec![pair.0, pair.1]));
                engine::replace_all(&mut wt, &mut idx, &spans, 2, v)
                    .expect("pair occurrences are disjoint");
            }
            Mode::MaxRepeats | Mode::RunLength => {
                let (mut repeat, mut spans) = engine::extend_to_maximal_repeat(&wt, &mut idx, pair);
                if mode == Mode::RunLength && repeat.len() == 2 && repeat[0] == repeat[1] {
                    replace_runs(
                        &mut wt,
                        &mut idx,
                        repeat[0],
                        &spans,
                        &mut rules,
                        &mut run_variables,
                    );
                    continue;
                }
                if repeat.len() > 2 && repeat.first() == repeat.last() {
                    // Trim the trailing symbol once so the repeat has
                    // distinct endpoints; applied a single time even if the
                    // endpoints still coincide afterwards.
                    repeat.pop();
                    for span in &mut spans {
                        span.last = wt
                            .prev_live(span.last)
                            .expect("trimmed span keeps length >= 2");
                    }
                }
                let v = rules.len() as Symbol + 1;
                rules.push(Rule::Sequence(repeat.clone()));
                engine::replace_all(&mut wt, &mut idx, &spans, repeat.len(), v)
                    .expect("extended occurrences are disjoint");
            }
        }
    }

    Grammar {
        terminals: alphabet.terminal_bytes().to_vec(),
        rules,
        tau: wt.live_symbols(),
    }
}

fn replace_runs(
    wt: &mut engine::WorkText,
    idx: &mut engine::PairIndex,
    x: Symbol,
    seeds: &[engine::Span],
    rules: &mut Vec<Rule>,
    run_variables: &mut HashMap<(Symbol, u64), Symbol>,
) {
    let runs = engine::maximal_runs(wt, seeds, x);
    debug_assert!(!runs.is_empty());
    for (span, k) in runs {
        // Runs are replaced left to right; a previously seen (x, k) reuses
        // its variable, so equal runs share one rule.
        let v = *run_variables.entry((x, k)).or_insert_with(|| {
            let v = rules.len() as Symbol + 1;
            rules.push(Rule::Run {
                base: x,
                exponent: k,
            });
            v
        });
        engine::replace_all(wt, idx, &[span], k as usize, v).expect("maximal runs are disjoint");
    }
    debug_assert_eq!(idx.pair_count((x, x)), 0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ingest_bytes;
    use crate::oracle;

    fn repair(data: &[u8]) -> Grammar {
        let (t, map) = ingest_bytes(data);
        construct_repair(&t, &map)
    }

    fn mr(data: &[u8]) -> Grammar {
        let (t, map) = ingest_bytes(data);
        construct_mr_repair(&t, &map)
    }

    fn rl(data: &[u8]) -> Grammar {
        let (t, map) = ingest_bytes(data);
        construct_rl_mr_repair(&t, &map)
    }

    fn check(g: &Grammar, data: &[u8]) {
        assert!(g.validate().is_empty(), "violations: {:?}", g.validate());
        assert_eq!(g.expand(), data);
        assert_eq!(oracle::naive_expand(g), data);
    }

    #[test]
    fn repair_abab() {
        let g = repair(b"abab");
        check(&g, b"abab");
        assert_eq!(g.rules[2], Rule::Sequence(vec![1, 2]));
        assert_eq!(g.tau, vec![3, 3]);
        assert_eq!(g.size(), 6);
    }

    #[test]
    fn repair_without_repeats() {
        let g = repair(b"abc");
        check(&g, b"abc");
        assert_eq!(g.variable_rule_count(), 0);
        assert_eq!(g.tau, vec![1, 2, 3]);
        assert_eq!(g.size(), 6);
    }

    #[test]
    fn repair_bodies_are_pairs() {
        for data in [
            &b"abracadabra abracadabra"[..],
            b"mississippi",
            b"aaaaaaaaaaaaaaaaa",
        ] {
            let g = repair(data);
            check(&g, data);
            for r in &g.rules[g.sigma()..] {
                match r {
                    Rule::Sequence(body) => assert_eq!(body.len(), 2),
                    other => panic!("unexpected rule {other:?}"),
                }
            }
        }
    }

    #[test]
    fn mr_replaces_whole_blocks() {
        let g = mr(b"abcabcabc");
        check(&g, b"abcabcabc");
        assert_eq!(g.rules[3], Rule::Sequence(vec![1, 2, 3]));
        assert_eq!(g.tau, vec![4, 4, 4]);
        assert_eq!(g.size(), 9);
    }

    #[test]
    fn mr_trims_equal_endpoints() {
        // The maximal repeat "aba" has equal endpoints and is trimmed to
        // "ab" before replacement.
        let g = mr(b"abaabaaba");
        check(&g, b"abaabaaba");
        assert_eq!(g.rules[2], Rule::Sequence(vec![1, 2]));
    }

    #[test]
    fn mr_on_powers_of_two_halves() {
        let g = mr(b"aaaaaaaa");
        check(&g, b"aaaaaaaa");
        // Successive halvings: 8 -> 4 -> 2, two pair rules plus tau [3,3].
        assert_eq!(g.variable_rule_count(), 2);
        assert_eq!(g.size(), 7);
    }

    #[test]
    fn rl_collapses_unary_input() {
        let g = rl(b"aaaaaaaa");
        check(&g, b"aaaaaaaa");
        assert_eq!(
            g.rules,
            vec![
                Rule::Terminal(b'a'),
                Rule::Run {
                    base: 1,
                    exponent: 8
                }
            ]
        );
        assert_eq!(g.tau, vec![2]);
        assert_eq!(g.size(), 5);
    }

    #[test]
    fn rl_unary_size_is_constant() {
        for n in [4usize, 5, 17, 100, 1000] {
            let data = vec![b'a'; n];
            let g = rl(&data);
            check(&g, &data);
            assert_eq!(g.size(), 5, "size for a^{n}");
        }
    }

    #[test]
    fn rl_distinct_runs_get_distinct_rules() {
        // a^2 b a^4 b a^8 b: three distinct run lengths in one pass.
        let data = b"aabaaaabaaaaaaaab";
        let g = rl(data);
        check(&g, data);
        let run_rules = g
            .rules
            .iter()
            .filter(|r| matches!(r, Rule::Run { .. }))
            .count();
        assert_eq!(run_rules, 3);
    }

    #[test]
    fn rl_deduplicates_equal_runs() {
        let data = b"aaaabaaaab";
        let g = rl(data);
        check(&g, data);
        let run_rules = g
            .rules
            .iter()
            .filter(|r| matches!(r, Rule::Run { .. }))
            .count();
        assert_eq!(run_rules, 1);
    }

    #[test]
    fn constructors_are_deterministic() {
        let data = b"the quick brown fox jumps over the lazy dog the quick brown fox";
        assert_eq!(repair(data), repair(data));
        assert_eq!(mr(data), mr(data));
        assert_eq!(rl(data), rl(data));
    }

    #[test]
    fn empty_and_tiny_inputs() {
        for data in [&b""[..], b"a", b"ab", b"aa"] {
            for g in [repair(data), mr(data), rl(data)] {
                check(&g, data);
            }
        }
    }
}
