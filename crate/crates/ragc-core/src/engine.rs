//! The shared linear-time replacement machinery: a doubly-linked working
//! text with tombstones, a pair-frequency index with sqrt-bucketed counts,
//! maximal-repeat extension, and in-place replacement with differential
//! count updates.
//!
//! Frequency semantics: the count of a pair is its number of greedy
//! left-to-right non-overlapping occurrences. For a pair of distinct
//! symbols that is simply the number of live adjacencies; for an
//! equal-symbol pair `(x, x)` it is the sum of `floor(len / 2)` over the
//! maximal runs of `x`. The index maintains these counts exactly across
//! replacements; `oracle::scratch_rebuild_matches` cross-checks that.

use std::cmp::Reverse;
use std::collections::hash_map::Entry as MapEntry;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::grammar::Symbol;

const NONE: u32 = u32::MAX;
const TOMBSTONE: Symbol = Symbol::MAX;

pub type Pair = (Symbol, Symbol);

/// A live range of the working text, identified by its first and last slot.
/// Slot indices never move, so index order is text order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub first: u32,
    pub last: u32,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    sym: Symbol,
    prev: u32,
    next: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct RunEnd {
    other: u32,
    len: u32,
}

/// The working text: a slot array threaded by prev/next links, with
/// tombstones left where symbols were absorbed. Also tracks the endpoints
/// and lengths of maximal equal-symbol runs (length >= 2), which the count
/// bookkeeping and the run-replacement branch rely on.
pub struct WorkText {
    slots: Vec<Slot>,
    head: u32,
    live: usize,
    runs: HashMap<u32, RunEnd>,
}

impl WorkText {
    fn new(text: &[Symbol]) -> Self {
        assert!(
            text.len() < NONE as usize,
            "working text limited to u32 slot indices"
        );
        let n = text.len();
        let mut slots = Vec::with_capacity(n);
        for (i, &sym) in text.iter().enumerate() {
            debug_assert!(sym != 0 && sym != TOMBSTONE);
            slots.push(Slot {
                sym,
                prev: if i == 0 { NONE } else { (i - 1) as u32 },
                next: if i + 1 == n { NONE } else { (i + 1) as u32 },
            });
        }
        let mut runs = HashMap::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && text[j + 1] == text[i] {
                j += 1;
            }
            if j > i {
                let len = (j - i + 1) as u32;
                runs.insert(
                    i as u32,
                    RunEnd {
                        other: j as u32,
                        len,
                    },
                );
                runs.insert(
                    j as u32,
                    RunEnd {
                        other: i as u32,
                        len,
                    },
                );
            }
            i = j + 1;
        }
        WorkText {
            slots,
            head: if n == 0 { NONE } else { 0 },
            live: n,
            runs,
        }
    }

    pub fn live_len(&self) -> usize {
        self.live
    }

    pub fn is_live(&self, i: u32) -> bool {
        (i as usize) < self.slots.len() && self.slots[i as usize].sym != TOMBSTONE
    }

    fn sym(&self, i: u32) -> Symbol {
        debug_assert!(self.is_live(i));
        self.slots[i as usize].sym
    }

    /// Symbol at a slot, if the slot is live.
    pub fn get(&self, i: u32) -> Option<Symbol> {
        self.is_live(i).then(|| self.sym(i))
    }

    fn prev(&self, i: u32) -> u32 {
        self.slots[i as usize].prev
    }

    fn next(&self, i: u32) -> u32 {
        self.slots[i as usize].next
    }

    /// The live slot preceding `i`, if any.
    pub fn prev_live(&self, i: u32) -> Option<u32> {
        let p = self.prev(i);
        (p != NONE).then_some(p)
    }

    /// The live slot following `i`, if any.
    pub fn next_live(&self, i: u32) -> Option<u32> {
        let n = self.next(i);
        (n != NONE).then_some(n)
    }

    /// The live symbols in text order.
    pub fn live_symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.live);
        let mut i = self.head;
        while i != NONE {
            out.push(self.sym(i));
            i = self.next(i);
        }
        out
    }

    /// Walks left to the first slot of the maximal run containing `i`.
    fn run_start(&self, i: u32) -> u32 {
        let x = self.sym(i);
        let mut s = i;
        loop {
            let p = self.prev(s);
            if p == NONE || self.sym(p) != x {
                return s;
            }
            s = p;
        }
    }
}

struct PairEntry {
    count: usize,
    /// Whether the entry currently sits in its count's bucket.
    attached: bool,
    /// Lower bound on the leftmost live occurrence (run start for equal
    /// pairs). Occurrence sets only shrink once a pair exists, so the true
    /// leftmost only moves right and this cache never has to decrease.
    cached_left: u32,
    /// Candidate occurrence start slots, a min-heap with lazy deletion.
    /// Invariant: every maximal run of length >= 2 of an equal pair, and
    /// every live adjacency of an unequal pair, has at least one live entry.
    occ: BinaryHeap<Reverse<u32>>,
}

/// Pair table plus frequency buckets. Buckets 1..cap-1 hold pairs of that
/// exact count; the top bucket holds every pair of count >= cap, where
/// cap = ceil(sqrt(n + 1)). Buckets are ordered by the cached leftmost
/// occurrence so the tie-break is an ordered-set lookup instead of a scan.
pub struct PairIndex {
    entries: HashMap<Pair, PairEntry>,
    buckets: Vec<std::collections::BTreeSet<(u32, Pair)>>,
    cap: usize,
    /// Highest regular bucket that may be non-empty.
    ceiling: usize,
}

fn ceil_sqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

impl PairIndex {
    fn with_text_len(n: usize) -> Self {
        let cap = ceil_sqrt(n + 1).max(2);
        PairIndex {
            entries: HashMap::new(),
            buckets: vec![std::collections::BTreeSet::new(); cap + 1],
            cap,
            ceiling: 0,
        }
    }

    pub fn pair_count(&self, p: Pair) -> usize {
        self.entries.get(&p).map_or(0, |e| e.count)
    }

    /// Exact counts of all currently occurring pairs, for cross-checking.
    pub fn counts_snapshot(&self) -> HashMap<Pair, usize> {
        self.entries
            .iter()
            .filter(|(_, e)| e.count > 0)
            .map(|(&p, e)| (p, e.count))
            .collect()
    }

    fn detach(&mut self, p: Pair) {
        let cap = self.cap;
        let e = self.entries.get_mut(&p).unwrap();
        if !e.attached {
            return;
        }
        e.attached = false;
        let key = (e.cached_left, p);
        let b = e.count.min(cap);
        let removed = self.buckets[b].remove(&key);
        debug_assert!(removed, "entry missing from its bucket");
    }

    fn attach(&mut self, p: Pair) {
        let cap = self.cap;
        let e = self.entries.get_mut(&p).unwrap();
        debug_assert!(!e.attached);
        let b = e.count.min(cap);
        if b == 0 {
            return;
        }
        e.attached = true;
        let key = (e.cached_left, p);
        self.buckets[b].insert(key);
        if b < self.cap && b > self.ceiling {
            self.ceiling = b;
        }
    }

    fn add(&mut self, p: Pair, delta: usize, hint: Option<u32>) {
        if delta == 0 && hint.is_none() {
            return;
        }
        match self.entries.entry(p) {
            MapEntry::Vacant(v) => {
                v.insert(PairEntry {
                    count: 0,
                    attached: false,
                    cached_left: hint.unwrap_or(NONE),
                    occ: BinaryHeap::new(),
                });
            }
            MapEntry::Occupied(mut o) => {
                // First hints arrive in ascending slot order, so only an
                // entry created without one ever needs this.
                if let Some(h) = hint {
                    if o.get().cached_left == NONE {
                        o.get_mut().cached_left = h;
                    }
                }
            }
        }
        if delta > 0 {
            self.detach(p);
            let e = self.entries.get_mut(&p).unwrap();
            e.count += delta;
            self.attach(p);
        }
        if let Some(h) = hint {
            self.entries.get_mut(&p).unwrap().occ.push(Reverse(h));
        }
    }

    fn sub(&mut self, p: Pair, delta: usize) -> Result<()> {
        if delta == 0 {
            return Ok(());
        }
        let Some(e) = self.entries.get(&p) else {
            return Err(Error::Invariant(format!("count underflow for pair {p:?}")));
        };
        if e.count < delta {
            return Err(Error::Invariant(format!(
                "count underflow for pair {p:?}: {} - {delta}",
                e.count
            )));
        }
        self.detach(p);
        let e = self.entries.get_mut(&p).unwrap();
        e.count -= delta;
        self.attach(p);
        Ok(())
    }

    fn push_hint(&mut self, p: Pair, slot: u32) {
        self.add(p, 0, Some(slot));
    }

    /// Drains the candidate list of a pair, returning the distinct slots in
    /// ascending order. Used when the pair is about to be replaced.
    fn take_hints(&mut self, p: Pair) -> Vec<u32> {
        let Some(e) = self.entries.get_mut(&p) else {
            return Vec::new();
        };
        let mut v: Vec<u32> = e.occ.drain().map(|Reverse(s)| s).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// True when `cached_left` still points at a live occurrence (and, for
    /// equal pairs, at a run start), in which case it equals the leftmost.
    fn cached_left_valid(&self, wt: &WorkText, p: Pair) -> bool {
        let e = &self.entries[&p];
        let s = e.cached_left;
        if s == NONE || !wt.is_live(s) || wt.sym(s) != p.0 {
            return false;
        }
        let n = wt.next(s);
        if n == NONE || wt.sym(n) != p.1 {
            return false;
        }
        if p.0 == p.1 {
            let prev = wt.prev(s);
            if prev != NONE && wt.sym(prev) == p.0 {
                return false;
            }
        }
        true
    }

    /// Leftmost slot at which `p` occurs live, pruning stale candidates and
    /// refreshing the cached bound (repositioning the bucket entry when the
    /// bound moves). For equal pairs this is the start of the leftmost
    /// containing run.
    fn leftmost_occurrence(&mut self, wt: &WorkText, p: Pair) -> Option<u32> {
        if self.cached_left_valid(wt, p) {
            return Some(self.entries[&p].cached_left);
        }
        let e = self.entries.get_mut(&p)?;
        let fresh = loop {
            let &Reverse(s) = e.occ.peek()?;
            let valid = wt.is_live(s) && wt.sym(s) == p.0 && {
                let n = wt.next(s);
                n != NONE && wt.sym(n) == p.1
            };
            if !valid {
                e.occ.pop();
                continue;
            }
            break if p.0 == p.1 { wt.run_start(s) } else { s };
        };
        if fresh != self.entries[&p].cached_left {
            let was_attached = self.entries[&p].attached;
            if was_attached {
                self.detach(p);
            }
            self.entries.get_mut(&p).unwrap().cached_left = fresh;
            if was_attached {
                self.attach(p);
            }
        }
        Some(fresh)
    }
}

/// Builds the working text and an exact pair-frequency index for it.
pub fn build_index(text: &[Symbol]) -> (WorkText, PairIndex) {
    let wt = WorkText::new(text);
    let mut idx = PairIndex::with_text_len(text.len());
    // Unequal adjacencies: every one is a counted occurrence.
    for i in 0..text.len().saturating_sub(1) {
        if text[i] != text[i + 1] {
            idx.add((text[i], text[i + 1]), 1, Some(i as u32));
        }
    }
    // Equal adjacencies: floor(len / 2) per maximal run, occurrences packed
    // from the run start.
    let mut i = 0;
    while i < text.len() {
        let mut j = i;
        while j + 1 < text.len() && text[j + 1] == text[i] {
            j += 1;
        }
        let len = j - i + 1;
        if len >= 2 {
            let p = (text[i], text[i]);
            for k in 0..len / 2 {
                idx.add(p, 1, Some((i + 2 * k) as u32));
            }
        }
        i = j + 1;
    }
    (wt, idx)
}

/// The pair of maximal count, ties broken by the earliest leftmost live
/// occurrence. Returns `None` only when no pair occurs at all.
pub fn most_frequent_pair(wt: &WorkText, idx: &mut PairIndex) -> Option<(Pair, usize)> {
    // The overflow bucket mixes counts, so it is scanned; it holds at most
    // ~sqrt(n) pairs and only the high-frequency passes ever look at it.
    if !idx.buckets[idx.cap].is_empty() {
        let members: Vec<Pair> = idx.buckets[idx.cap].iter().map(|&(_, p)| p).collect();
        let max = members.iter().map(|p| idx.entries[p].count).max().unwrap();
        let candidates: Vec<Pair> = members
            .into_iter()
            .filter(|p| idx.entries[p].count == max)
            .collect();
        let mut best: Option<(u32, Pair)> = None;
        for p in candidates {
            let Some(leftmost) = idx.leftmost_occurrence(wt, p) else {
                debug_assert!(false, "counted pair {p:?} has no live occurrence");
                continue;
            };
            if best.is_none_or(|(bl, _)| leftmost < bl) {
                best = Some((leftmost, p));
            }
        }
        return best.map(|(_, p)| (p, max));
    }
    while idx.ceiling >= 1 && idx.buckets[idx.ceiling].is_empty() {
        idx.ceiling -= 1;
    }
    if idx.ceiling == 0 {
        return None;
    }
    let count = idx.ceiling;
    // Cached bounds never overshoot, so the first entry whose bound renders
    // exact is the true leftmost; stale entries get repositioned rightward
    // by the lookup, and each reposition consumes staleness for good.
    loop {
        let &(key, p) = idx.buckets[count]
            .iter()
            .next()
            .expect("bucket is non-empty");
        let Some(leftmost) = idx.leftmost_occurrence(wt, p) else {
            debug_assert!(false, "counted pair {p:?} has no live occurrence");
            return Some((p, count));
        };
        if leftmost == key {
            return Some((p, count));
        }
        debug_assert!(leftmost > key, "leftmost bound moved backwards");
    }
}

/// The greedy non-overlapping occurrences of `p`, in text order. Consumes
/// the pair's candidate list; the caller is expected to replace the
/// returned spans.
pub fn pair_occurrences(wt: &WorkText, idx: &mut PairIndex, p: Pair) -> Vec<Span> {
    let hints = idx.take_hints(p);
    let mut spans = Vec::new();
    if p.0 != p.1 {
        for s in hints {
            if wt.is_live(s) && wt.sym(s) == p.0 {
                let n = wt.next(s);
                if n != NONE && wt.sym(n) == p.1 {
                    spans.push(Span { first: s, last: n });
                }
            }
        }
    } else {
        // Walk each hinted run once, emitting occurrences packed from the
        // run start.
        let mut covered_until: Option<u32> = None;
        for s in hints {
            if covered_until.is_some_and(|c| s <= c) {
                continue;
            }
            if !(wt.is_live(s) && wt.sym(s) == p.0) {
                continue;
            }
            let n = wt.next(s);
            if n == NONE || wt.sym(n) != p.1 {
                continue;
            }
            let start = wt.run_start(s);
            let meta = wt.runs[&start];
            covered_until = Some(meta.other);
            let mut cur = start;
            for _ in 0..meta.len / 2 {
                let second = wt.next(cur);
                spans.push(Span {
                    first: cur,
                    last: second,
                });
                cur = wt.next(second);
                if cur == NONE {
                    break;
                }
            }
        }
        spans.sort_unstable_by_key(|s| s.first);
    }
    debug_assert_eq!(
        spans.len(),
        idx.pair_count(p),
        "occurrence list out of sync"
    );
    spans
}

/// Grows the pair `p` into a maximal repeat: extends left to saturation and
/// then right, one symbol at a time, accepting a step only when every
/// occurrence has the same adjacent symbol and the extended occurrences
/// stay pairwise disjoint (so the frequency is preserved).
pub fn extend_to_maximal_repeat(
    wt: &WorkText,
    idx: &mut PairIndex,
    p: Pair,
) -> (Vec<Symbol>, Vec<Span>) {
    let mut spans = pair_occurrences(wt, idx, p);
    let mut repeat = std::collections::VecDeque::from([p.0, p.1]);
    if spans.is_empty() {
        return (repeat.into(), spans);
    }
    // Left.
    loop {
        let mut candidate: Option<Symbol> = None;
        let mut ok = true;
        for (i, span) in spans.iter().enumerate() {
            let prev = wt.prev(span.first);
            if prev == NONE {
                ok = false;
                break;
            }
            let sym = wt.sym(prev);
            if *candidate.get_or_insert(sym) != sym {
                ok = false;
                break;
            }
            if i > 0 && prev <= spans[i - 1].last {
                ok = false;
                break;
            }
        }
        if !ok {
            break;
        }
        for span in &mut spans {
            span.first = wt.prev(span.first);
        }
        repeat.push_front(candidate.unwrap());
    }
    // Right.
    loop {
        let mut candidate: Option<Symbol> = None;
        let mut ok = true;
        for (i, span) in spans.iter().enumerate() {
            let next = wt.next(span.last);
            if next == NONE {
                ok = false;
                break;
            }
            let sym = wt.sym(next);
            if *candidate.get_or_insert(sym) != sym {
                ok = false;
                break;
            }
            if i + 1 < spans.len() && next >= spans[i + 1].first {
                ok = false;
                break;
            }
        }
        if !ok {
            break;
        }
        for span in &mut spans {
            span.last = wt.next(span.last);
        }
        repeat.push_back(candidate.unwrap());
    }
    (repeat.into(), spans)
}

/// All maximal runs `x^k` with `k >= 2` in the live text, in text order,
/// with their lengths. `seeds` must hit every such run at least once; the
/// occurrence spans of the pair `(x, x)` do. The caller is expected to
/// replace every returned run.
pub fn maximal_runs(wt: &WorkText, seeds: &[Span], x: Symbol) -> Vec<(Span, u64)> {
    let mut out: Vec<(Span, u64)> = Vec::new();
    let mut covered_until: Option<u32> = None;
    for span in seeds {
        let s = span.first;
        if covered_until.is_some_and(|c| s <= c) {
            continue;
        }
        debug_assert!(wt.is_live(s) && wt.sym(s) == x);
        let start = wt.run_start(s);
        let meta = wt.runs[&start];
        covered_until = Some(meta.other);
        out.push((
            Span {
                first: start,
                last: meta.other,
            },
            meta.len as u64,
        ));
    }
    out.sort_unstable_by_key(|(s, _)| s.first);
    out
}

/// Collapses each occurrence span (all of length `m`, pairwise disjoint,
/// in text order) to the single symbol `v`, updating pair counts, run
/// metadata and candidate lists incrementally.
pub fn replace_all(
    wt: &mut WorkText,
    idx: &mut PairIndex,
    spans: &[Span],
    m: usize,
    v: Symbol,
) -> Result<()> {
    if m < 2 {
        return Err(Error::Invariant(
            "replacement length must be at least 2".into(),
        ));
    }
    for w in spans.windows(2) {
        if w[1].first <= w[0].last {
            return Err(Error::Invariant("overlapping replacement ranges".into()));
        }
    }
    let mut slot_syms: Vec<(u32, Symbol)> = Vec::with_capacity(m);
    for span in spans {
        slot_syms.clear();
        let mut i = span.first;
        loop {
            if !wt.is_live(i) {
                return Err(Error::Invariant(
                    "replacement range touches a dead slot".into(),
                ));
            }
            slot_syms.push((i, wt.sym(i)));
            if i == span.last {
                break;
            }
            i = wt.next(i);
            if i == NONE {
                return Err(Error::Invariant(
                    "replacement range runs past the text".into(),
                ));
            }
        }
        if slot_syms.len() != m {
            return Err(Error::Invariant(format!(
                "replacement range has {} symbols, expected {m}",
                slot_syms.len()
            )));
        }

        let l_idx = wt.prev(span.first);
        let r_idx = wt.next(span.last);
        let l_sym = (l_idx != NONE).then(|| wt.sym(l_idx));
        let r_sym = (r_idx != NONE).then(|| wt.sym(r_idx));
        let first_sym = slot_syms[0].1;
        let last_sym = slot_syms[m - 1].1;

        // Destroyed unequal adjacencies: internal plus the two boundaries.
        for w in slot_syms.windows(2) {
            if w[0].1 != w[1].1 {
                idx.sub((w[0].1, w[1].1), 1)?;
            }
        }
        if let Some(ls) = l_sym {
            if ls != first_sym {
                idx.sub((ls, first_sym), 1)?;
            }
        }
        if let Some(rs) = r_sym {
            if rs != last_sym {
                idx.sub((last_sym, rs), 1)?;
            }
        }

        // Destroyed equal adjacencies, one maximal equal segment at a time.
        // Each segment consumes a complete run, a run prefix, a run suffix,
        // or (never produced by our selection, handled anyway) a run
        // interior.
        let mut seg_start = 0usize;
        while seg_start < m {
            let a = slot_syms[seg_start].1;
            let mut seg_end = seg_start;
            while seg_end + 1 < m && slot_syms[seg_end + 1].1 == a {
                seg_end += 1;
            }
            let c = (seg_end - seg_start + 1) as u32;
            let left_att = seg_start == 0 && l_sym == Some(a);
            let right_att = seg_end == m - 1 && r_sym == Some(a);
            if c >= 2 || left_att || right_att {
                consume_run_segment(
                    wt,
                    idx,
                    a,
                    slot_syms[seg_start].0,
                    slot_syms[seg_end].0,
                    c,
                    left_att.then_some(l_idx),
                    right_att.then_some(r_idx),
                )?;
            }
            seg_start = seg_end + 1;
        }

        // Mutate the text: first slot becomes v, the rest tombstone.
        for &(i, _) in &slot_syms[1..] {
            wt.slots[i as usize].sym = TOMBSTONE;
        }
        wt.slots[span.first as usize].sym = v;
        wt.slots[span.first as usize].next = r_idx;
        if r_idx != NONE {
            wt.slots[r_idx as usize].prev = span.first;
        }
        wt.live -= m - 1;

        // Created adjacencies.
        if let Some(ls) = l_sym {
            if ls == v {
                extend_run_right(wt, idx, v, l_idx, span.first)?;
            } else {
                idx.add((ls, v), 1, Some(l_idx));
            }
        }
        if let Some(rs) = r_sym {
            debug_assert_ne!(rs, v, "fresh variable cannot already follow a span");
            idx.add((v, rs), 1, Some(span.first));
        }
    }
    Ok(())
}

/// Applies the count delta and run-metadata update for a consumed equal
/// segment `[first_slot..last_slot]` of symbol `a` covering `c` slots.
/// `left`/`right` are the in-run neighbors when the containing run extends
/// beyond the consumed segment on that side.
#[allow(clippy::too_many_arguments)]
fn consume_run_segment(
    wt: &mut WorkText,
    idx: &mut PairIndex,
    a: Symbol,
    first_slot: u32,
    last_slot: u32,
    c: u32,
    left: Option<u32>,
    right: Option<u32>,
) -> Result<()> {
    let pair = (a, a);
    let bad = |what: &str| Error::Invariant(format!("run metadata: {what}"));
    match (left, right) {
        (None, None) => {
            if c >= 2 {
                let meta = wt
                    .runs
                    .remove(&first_slot)
                    .ok_or_else(|| bad("missing run"))?;
                if meta.other != last_slot || meta.len != c {
                    return Err(bad("complete-run mismatch"));
                }
                wt.runs.remove(&last_slot);
                idx.sub(pair, (c / 2) as usize)?;
            }
        }
        (Some(l), None) => {
            // Suffix of a longer run; `last_slot` is the run's right end.
            let meta = wt
                .runs
                .remove(&last_slot)
                .ok_or_else(|| bad("missing suffix run"))?;
            let start = meta.other;
            let len = meta.len;
            if len <= c {
                return Err(bad("suffix longer than run"));
            }
            let new_len = len - c;
            idx.sub(pair, (len / 2 - new_len / 2) as usize)?;
            if new_len >= 2 {
                wt.runs.insert(
                    l,
                    RunEnd {
                        other: start,
                        len: new_len,
                    },
                );
                wt.runs.insert(
                    start,
                    RunEnd {
                        other: l,
                        len: new_len,
                    },
                );
            } else {
                wt.runs.remove(&start);
            }
        }
        (None, Some(r)) => {
            // Prefix of a longer run; `first_slot` is the run's left end.
            let meta = wt
                .runs
                .remove(&first_slot)
                .ok_or_else(|| bad("missing prefix run"))?;
            let end = meta.other;
            let len = meta.len;
            if len <= c {
                return Err(bad("prefix longer than run"));
            }
            let new_len = len - c;
            idx.sub(pair, (len / 2 - new_len / 2) as usize)?;
            if new_len >= 2 {
                wt.runs.insert(
                    r,
                    RunEnd {
                        other: end,
                        len: new_len,
                    },
                );
                wt.runs.insert(
                    end,
                    RunEnd {
                        other: r,
                        len: new_len,
                    },
                );
                // The surviving candidates may all lie left of the new
                // start; reseed so the run stays discoverable.
                idx.push_hint(pair, r);
            } else {
                wt.runs.remove(&end);
            }
        }
        (Some(l), Some(r)) => {
            // Interior of a run: split into two.
            let start = wt.run_start(l);
            let meta = wt
                .runs
                .remove(&start)
                .ok_or_else(|| bad("missing split run"))?;
            let end = meta.other;
            let len = meta.len;
            wt.runs.remove(&end);
            let mut left_len = 1u32;
            let mut s = l;
            while s != start {
                s = wt.prev(s);
                left_len += 1;
            }
            if len < left_len + c + 1 {
                return Err(bad("split lengths inconsistent"));
            }
            let right_len = len - left_len - c;
            idx.sub(pair, (len / 2 - left_len / 2 - right_len / 2) as usize)?;
            if left_len >= 2 {
                wt.runs.insert(
                    start,
                    RunEnd {
                        other: l,
                        len: left_len,
                    },
                );
                wt.runs.insert(
                    l,
                    RunEnd {
                        other: start,
                        len: left_len,
                    },
                );
            }
            if right_len >= 2 {
                wt.runs.insert(
                    r,
                    RunEnd {
                        other: end,
                        len: right_len,
                    },
                );
                wt.runs.insert(
                    end,
                    RunEnd {
                        other: r,
                        len: right_len,
                    },
                );
                idx.push_hint(pair, r);
            }
        }
    }
    Ok(())
}

/// Grows a run of the fresh variable `v` by one slot on the right: the new
/// adjacency `(left_end, new_slot)`. New equal adjacencies only ever form
/// this way, because the right-hand side of a replacement is always the
/// fresh symbol.
fn extend_run_right(
    wt: &mut WorkText,
    idx: &mut PairIndex,
    v: Symbol,
    left_end: u32,
    new_slot: u32,
) -> Result<()> {
    let (start, old_len) = match wt.runs.remove(&left_end) {
        Some(meta) => {
            if meta.other > left_end {
                return Err(Error::Invariant(
                    "variable run grew from its interior".into(),
                ));
            }
            (meta.other, meta.len)
        }
        None => (left_end, 1),
    };
    let new_len = old_len + 1;
    wt.runs.insert(
        new_slot,
        RunEnd {
            other: start,
            len: new_len,
        },
    );
    wt.runs.insert(
        start,
        RunEnd {
            other: new_slot,
            len: new_len,
        },
    );
    if new_len % 2 == 0 {
        // One more greedy occurrence, starting at the previous right end.
        idx.add((v, v), 1, Some(left_end));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn spans_of(engine_spans: &[Span]) -> Vec<(u32, u32)> {
        engine_spans.iter().map(|s| (s.first, s.last)).collect()
    }

    #[test]
    fn build_counts_simple() {
        let (_, idx) = build_index(&[1, 2, 1, 2]);
        assert_eq!(idx.pair_count((1, 2)), 2);
        assert_eq!(idx.pair_count((2, 1)), 1);
    }

    #[test]
    fn build_counts_equal_pairs_greedily() {
        let (_, idx) = build_index(&[1, 1, 1, 1, 1]);
        assert_eq!(idx.pair_count((1, 1)), 2);
        let (_, idx) = build_index(&[1, 1, 1, 1]);
        assert_eq!(idx.pair_count((1, 1)), 2);
        let (_, idx) = build_index(&[1, 1, 1]);
        assert_eq!(idx.pair_count((1, 1)), 1);
    }

    #[test]
    fn build_empty() {
        let (wt, mut idx) = build_index(&[]);
        assert_eq!(wt.live_len(), 0);
        assert!(most_frequent_pair(&wt, &mut idx).is_none());
    }

    #[test]
    fn most_frequent_picks_max() {
        let (wt, mut idx) = build_index(&[1, 2, 1, 2]);
        assert_eq!(most_frequent_pair(&wt, &mut idx), Some(((1, 2), 2)));
    }

    #[test]
    fn most_frequent_returns_count_one_pairs() {
        let (wt, mut idx) = build_index(&[1, 2, 3]);
        let (_, count) = most_frequent_pair(&wt, &mut idx).unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn tie_break_is_leftmost() {
        // (2,3) and (3,2) both occur twice; (2,3) occurs first.
        let (wt, mut idx) = build_index(&[1, 2, 3, 2, 3, 2, 1]);
        let (p, count) = most_frequent_pair(&wt, &mut idx).unwrap();
        assert_eq!((p, count), ((2, 3), 2));
    }

    #[test]
    fn extension_grows_to_full_block() {
        // "abcabcabc"
        let t = [1, 2, 3, 1, 2, 3, 1, 2, 3];
        let (wt, mut idx) = build_index(&t);
        let (r, spans) = extend_to_maximal_repeat(&wt, &mut idx, (1, 2));
        assert_eq!(r, vec![1, 2, 3]);
        assert_eq!(spans_of(&spans), vec![(0, 2), (3, 5), (6, 8)]);
    }

    #[test]
    fn extension_rejects_overlap() {
        // "abab": growing (1,2) right would overlap the second occurrence.
        let (wt, mut idx) = build_index(&[1, 2, 1, 2]);
        let (r, spans) = extend_to_maximal_repeat(&wt, &mut idx, (1, 2));
        assert_eq!(r, vec![1, 2]);
        assert_eq!(spans.len(), 2);
    }

    #[test]
    fn extension_keeps_equal_pair_whole() {
        // "aaaa": occurrences of (1,1) cannot grow without overlap.
        let (wt, mut idx) = build_index(&[1, 1, 1, 1]);
        let (r, spans) = extend_to_maximal_repeat(&wt, &mut idx, (1, 1));
        assert_eq!(r, vec![1, 1]);
        assert_eq!(spans_of(&spans), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn extension_accepts_aligned_runs() {
        // runs of exactly three: "aaab aaab" extends (a,a) to "aaab".
        let t = [1, 1, 1, 2, 1, 1, 1, 2];
        let (wt, mut idx) = build_index(&t);
        let (r, spans) = extend_to_maximal_repeat(&wt, &mut idx, (1, 1));
        assert_eq!(r, vec![1, 1, 1, 2]);
        assert_eq!(spans_of(&spans), vec![(0, 3), (4, 7)]);
    }

    #[test]
    fn replace_whole_blocks() {
        let t = [1, 2, 3, 1, 2, 3];
        let (mut wt, mut idx) = build_index(&t);
        let spans = [Span { first: 0, last: 2 }, Span { first: 3, last: 5 }];
        replace_all(&mut wt, &mut idx, &spans, 3, 4).unwrap();
        assert_eq!(wt.live_symbols(), vec![4, 4]);
        assert_eq!(idx.pair_count((4, 4)), 1);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }

    #[test]
    fn replace_single_pair() {
        let (mut wt, mut idx) = build_index(&[1, 1]);
        replace_all(&mut wt, &mut idx, &[Span { first: 0, last: 1 }], 2, 2).unwrap();
        assert_eq!(wt.live_symbols(), vec![2]);
    }

    #[test]
    fn replace_with_remainder() {
        let (mut wt, mut idx) = build_index(&[1, 2, 1, 2, 1]);
        let spans = pair_occurrences(&wt, &mut idx, (1, 2));
        replace_all(&mut wt, &mut idx, &spans, 2, 3).unwrap();
        assert_eq!(wt.live_symbols(), vec![3, 3, 1]);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }

    #[test]
    fn replace_rejects_overlap() {
        let (mut wt, mut idx) = build_index(&[1, 1, 1]);
        let spans = [Span { first: 0, last: 1 }, Span { first: 1, last: 2 }];
        let err = replace_all(&mut wt, &mut idx, &spans, 2, 2).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn maximal_runs_found_and_replaced() {
        // a^2 b a^4: runs of 1 at lengths 2 and 4.
        let t = [1, 1, 2, 1, 1, 1, 1];
        let (mut wt, mut idx) = build_index(&t);
        let seeds = pair_occurrences(&wt, &mut idx, (1, 1));
        let runs = maximal_runs(&wt, &seeds, 1);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0], (Span { first: 0, last: 1 }, 2));
        assert_eq!(runs[1], (Span { first: 3, last: 6 }, 4));
        for (span, len) in runs {
            let v = 3 + len; // arbitrary distinct variables
            replace_all(&mut wt, &mut idx, &[span], len as usize, v).unwrap();
        }
        assert_eq!(wt.live_symbols(), vec![5, 2, 7]);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }

    #[test]
    fn differential_counts_survive_run_boundary_cases() {
        // Replace (2,1) inside text with long a-runs on both sides.
        let t = [1, 1, 1, 1, 2, 1, 1, 1, 2, 1, 1];
        let (mut wt, mut idx) = build_index(&t);
        let spans = pair_occurrences(&wt, &mut idx, (2, 1));
        assert_eq!(spans.len(), 2);
        replace_all(&mut wt, &mut idx, &spans, 2, 9).unwrap();
        assert_eq!(wt.live_symbols(), vec![1, 1, 1, 1, 9, 1, 1, 9, 1]);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }

    #[test]
    fn partially_consumed_runs_stay_discoverable() {
        // "b a^7 c b a^3 c": the repeat grows to [2,1,1,1]; replacing it
        // consumes a prefix of the long run and all of the short one. The
        // surviving run must still be found when (1,1) is selected next.
        let t = [2, 1, 1, 1, 1, 1, 1, 1, 3, 2, 1, 1, 1, 3];
        let (mut wt, mut idx) = build_index(&t);
        assert_eq!(idx.pair_count((1, 1)), 4);
        let (r, spans) = extend_to_maximal_repeat(&wt, &mut idx, (2, 1));
        assert_eq!(r, vec![2, 1, 1, 1]);
        replace_all(&mut wt, &mut idx, &spans, 4, 4).unwrap();
        assert_eq!(wt.live_symbols(), vec![4, 1, 1, 1, 1, 3, 4, 3]);
        assert_eq!(idx.pair_count((1, 1)), 2);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
        let spans = pair_occurrences(&wt, &mut idx, (1, 1));
        assert_eq!(spans.len(), 2);
        replace_all(&mut wt, &mut idx, &spans, 2, 5).unwrap();
        assert_eq!(wt.live_symbols(), vec![4, 5, 5, 3, 4, 3]);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }

    #[test]
    fn adjacent_replacements_form_variable_runs() {
        let t = [1, 2, 1, 2, 1, 2, 1, 2];
        let (mut wt, mut idx) = build_index(&t);
        let spans = pair_occurrences(&wt, &mut idx, (1, 2));
        replace_all(&mut wt, &mut idx, &spans, 2, 3).unwrap();
        assert_eq!(wt.live_symbols(), vec![3, 3, 3, 3]);
        assert_eq!(idx.pair_count((3, 3)), 2);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
        // And the fresh runs are themselves replaceable.
        let spans = pair_occurrences(&wt, &mut idx, (3, 3));
        assert_eq!(spans.len(), 2);
        replace_all(&mut wt, &mut idx, &spans, 2, 4).unwrap();
        assert_eq!(wt.live_symbols(), vec![4, 4]);
        oracle::scratch_rebuild_matches(&wt, &idx).unwrap();
    }
}
