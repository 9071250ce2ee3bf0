//! Brute-force oracles used by the test and acceptance suites: exhaustive
//! maximal-repeat enumeration, naive greedy counting, naive recursive
//! expansion, and scratch index rebuilds. These are deliberately naive and
//! share nothing with the engine beyond the `Symbol` type.

use std::collections::HashMap;

use crate::engine::{self, PairIndex, WorkText};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Rule, Symbol};

/// Largest input the exhaustive enumerator accepts.
pub const MAX_ENUM_LEN: usize = 256;

/// One row of the exhaustive repeat report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepeatEntry {
    pub pattern: Vec<Symbol>,
    pub frequency: usize,
    pub left_maximal: bool,
    pub right_maximal: bool,
    pub is_maximal: bool,
}

/// Greedy left-to-right non-overlapping occurrence count of `u` in `t`.
pub fn greedy_count(t: &[Symbol], u: &[Symbol]) -> usize {
    if u.is_empty() || u.len() > t.len() {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i + u.len() <= t.len() {
        if &t[i..i + u.len()] == u {
            count += 1;
            i += u.len();
        } else {
            i += 1;
        }
    }
    count
}

/// Exact greedy non-overlapping pair counts of `t`, computed by direct
/// simulation.
pub fn pair_counts(t: &[Symbol]) -> HashMap<(Symbol, Symbol), usize> {
    let mut counts: HashMap<(Symbol, Symbol), usize> = HashMap::new();
    let mut last_end: HashMap<(Symbol, Symbol), usize> = HashMap::new();
    for i in 0..t.len().saturating_sub(1) {
        let p = (t[i], t[i + 1]);
        if *last_end.get(&p).unwrap_or(&0) <= i {
            *counts.entry(p).or_insert(0) += 1;
            last_end.insert(p, i + 2);
        }
    }
    counts
}

/// Enumerates every substring of length >= 2 that occurs at least twice
/// (greedy non-overlapping counting), with left/right maximality per the
/// one-symbol-extension comparison.
pub fn enumerate_maximal_repeats(t: &[Symbol]) -> Result<Vec<RepeatEntry>> {
    if t.len() > MAX_ENUM_LEN {
        return Err(Error::Domain(format!(
            "oracle enumeration refused for inputs over {MAX_ENUM_LEN} symbols"
        )));
    }
    let mut alphabet: Vec<Symbol> = t.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();

    let mut out = Vec::new();
    for len in 2..=t.len() {
        let mut seen: Vec<&[Symbol]> = Vec::new();
        for start in 0..=t.len() - len {
            let u = &t[start..start + len];
            if seen.contains(&u) {
                continue;
            }
            seen.push(u);
            let freq = greedy_count(t, u);
            if freq < 2 {
                continue;
            }
            let mut left_maximal = true;
            let mut right_maximal = true;
            for &w in &alphabet {
                let mut ext = Vec::with_capacity(len + 1);
                ext.push(w);
                ext.extend_from_slice(u);
                if greedy_count(t, &ext) >= freq {
                    left_maximal = false;
                }
                let mut ext = u.to_vec();
                ext.push(w);
                if greedy_count(t, &ext) >= freq {
                    right_maximal = false;
                }
            }
            out.push(RepeatEntry {
                pattern: u.to_vec(),
                frequency: freq,
                left_maximal,
                right_maximal,
                is_maximal: left_maximal && right_maximal,
            });
        }
    }
    Ok(out)
}

/// Highest frequency over all maximal repeats, if any repeat exists.
pub fn max_maximal_repeat_frequency(t: &[Symbol]) -> Result<Option<usize>> {
    let report = enumerate_maximal_repeats(t)?;
    Ok(report
        .iter()
        .filter(|e| e.is_maximal)
        .map(|e| e.frequency)
        .max())
}

/// Checks that the engine's selected repeat frequency equals the oracle's
/// maximum maximal-repeat frequency on `t`. The selected string itself may
/// differ under ties.
pub fn cross_check_selection(t: &[Symbol]) -> Result<()> {
    let oracle_max = max_maximal_repeat_frequency(t)?;
    let (wt, mut idx) = engine::build_index(t);
    let engine_selection =
        engine::most_frequent_pair(&wt, &mut idx).filter(|&(_, count)| count >= 2);
    match (engine_selection, oracle_max) {
        (None, None) => Ok(()),
        (Some((p, count)), Some(expect)) => {
            let (repeat, spans) = engine::extend_to_maximal_repeat(&wt, &mut idx, p);
            if spans.len() != count {
                return Err(Error::Invariant(format!(
                    "pair {p:?} counted {count} but produced {} occurrences",
                    spans.len()
                )));
            }
            if count != expect {
                return Err(Error::Invariant(format!(
                    "engine selected {repeat:?} at frequency {count}, oracle maximum is {expect}"
                )));
            }
            Ok(())
        }
        (engine_sel, oracle_max) => Err(Error::Invariant(format!(
            "selection disagreement: engine {engine_sel:?}, oracle {oracle_max:?} on {t:?}"
        ))),
    }
}

/// Rebuilds pair counts from the live text by direct simulation and
/// compares them against the differentially-maintained index.
pub fn scratch_rebuild_matches(wt: &WorkText, idx: &PairIndex) -> Result<()> {
    let live = wt.live_symbols();
    let expect = pair_counts(&live);
    let got = idx.counts_snapshot();
    if expect == got {
        return Ok(());
    }
    let mut diffs = Vec::new();
    for (p, &c) in &expect {
        let g = got.get(p).copied().unwrap_or(0);
        if g != c {
            diffs.push(format!("{p:?}: index {g}, scratch {c}"));
        }
    }
    for (p, &g) in &got {
        if !expect.contains_key(p) {
            diffs.push(format!("{p:?}: index {g}, scratch 0"));
        }
    }
    diffs.sort();
    Err(Error::Invariant(format!(
        "index/scratch count mismatch: {}",
        diffs.join("; ")
    )))
}

/// Naive recursive expansion, an independent check of `Grammar::expand`.
pub fn naive_expand(g: &Grammar) -> Vec<u8> {
    fn go(g: &Grammar, s: Symbol, out: &mut Vec<u8>) {
        match g.rule_of(s).expect("valid grammar") {
            Rule::Terminal(b) => out.push(*b),
            Rule::Sequence(body) => {
                for &c in body {
                    go(g, c, out);
                }
            }
            Rule::Run { base, exponent } => {
                for _ in 0..*exponent {
                    go(g, *base, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    for &s in &g.tau {
        go(g, s, &mut out);
    }
    out
}
