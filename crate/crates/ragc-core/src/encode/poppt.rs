//! Post-order partial parse tree encoding. The parse tree is expanded
//! depth-first from the start symbol, pruning below the second and later
//! occurrence of every variable; internal nodes are numbered in post-order
//! and the tree is emitted as a shape bit sequence plus the leaf-label
//! text `U`.
//!
//! Leaf labels: terminal `i` stays `i`, a pruned variable becomes
//! `sigma + p` where `p` is the post-order number of its expanded node,
//! and a run-rule marker becomes 0. Every label therefore satisfies
//! `U[i] <= i + sigma`, which the increasing-bit-length coding of `U`
//! relies on; the bound is asserted on every encode.
//!
//! Two shape forms exist. The binary form (pair bodies only) spends one
//! bit per node: 0 for a leaf, 1 for an internal node; the start body is
//! first decomposed into a left-leaning chain of pair rules whose
//! variables never reach `U`. The general form writes `c` zeros and a one
//! for a node with `c` children, closed by a single trailing zero.
//! Run rules become internal nodes over a marker leaf and the base, with
//! exponents carried in a gamma-coded side sequence in post-order.

use std::collections::HashMap;

use crate::bitio::{bit_width, BitReader, BitStream};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Rule, Symbol, RUN_MARKER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PopptForm {
    /// One bit per node; requires an SLP-shaped grammar.
    Binary,
    /// Arbitrary arities, any grammar including run rules.
    General,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poppt {
    /// Tree shape bits, including the general form's trailing zero.
    pub shape: BitStream,
    /// Leaf labels in left-to-right order.
    pub leaves: Vec<Symbol>,
    pub internal_count: usize,
    /// Run-rule exponents in post-order of their nodes.
    pub run_exponents: Vec<u64>,
}

#[derive(Clone, Copy)]
enum Kid {
    Marker,
    Sym(Symbol),
    /// Binary-form chain node covering the start body prefix `0..=i`.
    Chain(usize),
}

enum FrameLabel {
    Start,
    Chain,
    Var(Symbol),
}

struct Frame {
    kids: Vec<Kid>,
    next: usize,
    label: FrameLabel,
}

pub fn build_poppt(g: &Grammar, form: PopptForm) -> Result<Poppt> {
    let sigma = g.sigma() as Symbol;
    if matches!(form, PopptForm::Binary) {
        let all_pairs = g.rules[g.sigma()..]
            .iter()
            .all(|r| matches!(r, Rule::Sequence(b) if b.len() == 2));
        if !all_pairs {
            return Err(Error::Unsupported(
                "binary tree form requires all rule bodies to be pairs".into(),
            ));
        }
    }
    if g.tau.is_empty() {
        return Err(Error::Domain(
            "cannot build a parse tree for an empty start body".into(),
        ));
    }

    let mut shape = BitStream::new();
    let mut leaves: Vec<Symbol> = Vec::new();
    let mut run_exponents: Vec<u64> = Vec::new();
    let mut postorder = 0usize;
    let mut post: HashMap<Symbol, usize> = HashMap::new();
    let mut stack: Vec<Frame> = Vec::new();

    let emit_leaf =
        |shape: &mut BitStream, leaves: &mut Vec<Symbol>, label: Symbol| -> Result<()> {
            match form {
                PopptForm::Binary => shape.push_bit(false),
                PopptForm::General => shape.push_bit(true),
            }
            leaves.push(label);
            if label > sigma + leaves.len() as Symbol {
                return Err(Error::Invariant(format!(
                    "leaf label {label} exceeds its position bound {}",
                    sigma + leaves.len() as Symbol
                )));
            }
            Ok(())
        };

    let chain_kids = |i: usize| -> Vec<Kid> {
        if i == 1 {
            vec![Kid::Sym(g.tau[0]), Kid::Sym(g.tau[1])]
        } else {
            vec![Kid::Chain(i - 1), Kid::Sym(g.tau[i])]
        }
    };

    match form {
        PopptForm::General => stack.push(Frame {
            kids: g.tau.iter().map(|&s| Kid::Sym(s)).collect(),
            next: 0,
            label: FrameLabel::Start,
        }),
        PopptForm::Binary => {
            if g.tau.len() >= 2 {
                stack.push(Frame {
                    kids: chain_kids(g.tau.len() - 1),
                    next: 0,
                    label: FrameLabel::Chain,
                });
            } else {
                let s = g.tau[0];
                if s <= sigma {
                    emit_leaf(&mut shape, &mut leaves, s)?;
                } else {
                    stack.push(frame_for(g, s)?);
                }
            }
        }
    }

    while let Some(top) = stack.last_mut() {
        if top.next < top.kids.len() {
            let kid = top.kids[top.next];
            top.next += 1;
            match kid {
                Kid::Marker => emit_leaf(&mut shape, &mut leaves, RUN_MARKER)?,
                Kid::Sym(s) if s <= sigma => emit_leaf(&mut shape, &mut leaves, s)?,
                Kid::Sym(s) => {
                    if let Some(&p) = post.get(&s) {
                        emit_leaf(&mut shape, &mut leaves, sigma + p as Symbol)?;
                    } else {
                        stack.push(frame_for(g, s)?);
                    }
                }
                Kid::Chain(i) => {
                    stack.push(Frame {
                        kids: chain_kids(i),
                        next: 0,
                        label: FrameLabel::Chain,
                    });
                }
            }
        } else {
            let frame = stack.pop().unwrap();
            match form {
                PopptForm::Binary => shape.push_bit(true),
                PopptForm::General => {
                    for _ in 0..frame.kids.len() {
                        shape.push_bit(false);
                    }
                    shape.push_bit(true);
                }
            }
            postorder += 1;
            if let FrameLabel::Var(v) = frame.label {
                post.insert(v, postorder);
                if let Some(Rule::Run { exponent, .. }) = g.rule_of(v) {
                    run_exponents.push(*exponent);
                }
            }
        }
    }
    if matches!(form, PopptForm::General) {
        shape.push_bit(false); // closes the super node
    }
    Ok(Poppt {
        shape,
        leaves,
        internal_count: postorder,
        run_exponents,
    })
}

fn frame_for(g: &Grammar, v: Symbol) -> Result<Frame> {
    match g.rule_of(v) {
        Some(Rule::Sequence(body)) => Ok(Frame {
            kids: body.iter().map(|&s| Kid::Sym(s)).collect(),
            next: 0,
            label: FrameLabel::Var(v),
        }),
        Some(Rule::Run { base, .. }) => Ok(Frame {
            kids: vec![Kid::Marker, Kid::Sym(*base)],
            next: 0,
            label: FrameLabel::Var(v),
        }),
        _ => Err(Error::Invariant(format!(
            "symbol {v} has no expandable rule"
        ))),
    }
}

/// Increasing bit length coding of the leaf labels: position `i`
/// (1-based) is written in `bit_width(i + sigma)` bits, which the label
/// bound makes lossless.
pub fn encode_u_ible(u: &[Symbol], sigma: usize) -> Result<BitStream> {
    let mut out = BitStream::new();
    for (i, &label) in u.iter().enumerate() {
        let bound = (i + 1 + sigma) as u64;
        if label > bound {
            return Err(Error::Invariant(format!(
                "leaf label {label} exceeds its position bound {bound}"
            )));
        }
        out.push_bits(label, bit_width(bound));
    }
    Ok(out)
}

pub fn decode_u_ible(r: &mut BitReader<'_>, count: usize, sigma: usize) -> Result<Vec<Symbol>> {
    (0..count)
        .map(|i| r.read_bits(bit_width((i + 1 + sigma) as u64)))
        .collect()
}

/// Leaf labels through the packed gamma coder; neighboring labels tend to
/// be close in value, which is the case PGE is built for.
pub fn encode_u_pge(u: &[Symbol], epsilon: u32) -> Result<BitStream> {
    super::pge::pge_encode(u, epsilon)
}

/// Rebuilds a grammar from the tree streams. Variables come back numbered
/// in post-order, so expansion equality rather than id equality is the
/// round-trip contract; the grammar size is preserved.
pub fn decode_poppt(
    shape: &BitStream,
    leaves: &[Symbol],
    run_exponents: &[u64],
    terminals: &[u8],
    form: PopptForm,
    tau_len: usize,
) -> Result<Grammar> {
    let sigma = terminals.len() as Symbol;
    if tau_len == 0 {
        return Err(Error::corrupt(0, "start body cannot be empty"));
    }
    let (mut internal_rules, tau) = match form {
        PopptForm::Binary => decode_binary(shape, leaves, run_exponents, sigma, tau_len)?,
        PopptForm::General => decode_general(shape, leaves, run_exponents, sigma, tau_len)?,
    };
    let mut rules: Vec<Rule> = terminals.iter().map(|&b| Rule::Terminal(b)).collect();
    rules.append(&mut internal_rules);
    let g = Grammar {
        terminals: terminals.to_vec(),
        rules,
        tau,
    };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(Error::corrupt(
            0,
            format!("decoded grammar invalid: {}", violations[0]),
        ));
    }
    Ok(g)
}

fn decode_binary(
    shape: &BitStream,
    leaves: &[Symbol],
    run_exponents: &[u64],
    sigma: Symbol,
    tau_len: usize,
) -> Result<(Vec<Rule>, Vec<Symbol>)> {
    if !run_exponents.is_empty() {
        return Err(Error::corrupt(0, "binary tree form cannot carry run rules"));
    }
    let mut r = shape.reader();
    let mut stack: Vec<Symbol> = Vec::new();
    let mut bodies: Vec<[Symbol; 2]> = Vec::new();
    let mut u = leaves.iter();
    while r.remaining() > 0 {
        if !r.read_bit()? {
            let &label = u
                .next()
                .ok_or_else(|| Error::corrupt(r.pos(), "leaf labels exhausted"))?;
            if label == RUN_MARKER || label > sigma + bodies.len() as Symbol {
                return Err(Error::corrupt(
                    r.pos(),
                    format!("invalid leaf label {label}"),
                ));
            }
            stack.push(label);
        } else {
            let right = stack.pop();
            let left = stack.pop();
            let (Some(left), Some(right)) = (left, right) else {
                return Err(Error::corrupt(r.pos(), "tree shape underflows its stack"));
            };
            bodies.push([left, right]);
            stack.push(sigma + bodies.len() as Symbol);
        }
    }
    if u.next().is_some() {
        return Err(Error::corrupt(r.pos(), "unused leaf labels"));
    }
    if stack.len() != 1 {
        return Err(Error::corrupt(r.pos(), "tree shape leaves extra nodes"));
    }
    let root = stack[0];

    // Undo the start-body chain: the top tau_len - 1 nodes of the left
    // spine are synthetic and disappear again.
    let mut chain: std::collections::HashSet<Symbol> = std::collections::HashSet::new();
    let mut tau = Vec::with_capacity(tau_len);
    if tau_len == 1 {
        tau.push(root);
    } else {
        let mut rev = Vec::with_capacity(tau_len);
        let mut cur = root;
        for step in 0..tau_len - 1 {
            if cur <= sigma {
                return Err(Error::corrupt(
                    0,
                    "start chain shorter than the stored length",
                ));
            }
            let body = bodies[(cur - sigma - 1) as usize];
            if !chain.insert(cur) {
                return Err(Error::corrupt(0, "start chain loops"));
            }
            rev.push(body[1]);
            cur = body[0];
            if step == tau_len - 2 {
                rev.push(cur);
            }
        }
        rev.reverse();
        tau = rev;
    }

    // Compact ids over the surviving nodes.
    let mut remap: HashMap<Symbol, Symbol> = HashMap::new();
    let mut kept = 0 as Symbol;
    for i in 0..bodies.len() {
        let old = sigma + i as Symbol + 1;
        if !chain.contains(&old) {
            kept += 1;
            remap.insert(old, sigma + kept);
        }
    }
    let map_sym = |s: Symbol| -> Result<Symbol> {
        if s <= sigma {
            Ok(s)
        } else {
            remap
                .get(&s)
                .copied()
                .ok_or_else(|| Error::corrupt(0, "body references a synthetic chain node"))
        }
    };
    let mut rules = Vec::with_capacity(bodies.len() - chain.len());
    for (i, &[l, rgt]) in bodies.iter().enumerate() {
        let old = sigma + i as Symbol + 1;
        if chain.contains(&old) {
            continue;
        }
        rules.push(Rule::Sequence(vec![map_sym(l)?, map_sym(rgt)?]));
    }
    let tau = tau.into_iter().map(map_sym).collect::<Result<Vec<_>>>()?;
    Ok((rules, tau))
}

fn decode_general(
    shape: &BitStream,
    leaves: &[Symbol],
    run_exponents: &[u64],
    sigma: Symbol,
    tau_len: usize,
) -> Result<(Vec<Rule>, Vec<Symbol>)> {
    let mut r = shape.reader();
    let mut stack: Vec<Symbol> = Vec::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut u = leaves.iter();
    let mut exps = run_exponents.iter();
    loop {
        let mut zeros = 0usize;
        let closed = loop {
            match r.read_bit() {
                Ok(true) => break false,
                Ok(false) => zeros += 1,
                Err(_) => break true,
            }
        };
        if closed {
            if zeros == 1 && stack.len() == 1 {
                break;
            }
            return Err(Error::corrupt(
                r.pos(),
                "tree shape ends without its closing zero",
            ));
        }
        if zeros == 0 {
            let &label = u
                .next()
                .ok_or_else(|| Error::corrupt(r.pos(), "leaf labels exhausted"))?;
            if label > sigma + rules.len() as Symbol {
                return Err(Error::corrupt(
                    r.pos(),
                    format!("invalid leaf label {label}"),
                ));
            }
            stack.push(label);
        } else {
            if stack.len() < zeros {
                return Err(Error::corrupt(r.pos(), "tree shape underflows its stack"));
            }
            let children = stack.split_off(stack.len() - zeros);
            if children[0] == RUN_MARKER {
                if children.len() != 2 || children[1] == RUN_MARKER {
                    return Err(Error::corrupt(r.pos(), "malformed run node"));
                }
                let &k = exps
                    .next()
                    .ok_or_else(|| Error::corrupt(r.pos(), "run exponents exhausted"))?;
                rules.push(Rule::Run {
                    base: children[1],
                    exponent: k,
                });
            } else {
                if children.contains(&RUN_MARKER) {
                    return Err(Error::corrupt(r.pos(), "marker leaf outside a run node"));
                }
                rules.push(Rule::Sequence(children));
            }
            stack.push(sigma + rules.len() as Symbol);
        }
    }
    if u.next().is_some() || exps.next().is_some() {
        return Err(Error::corrupt(r.pos(), "unused leaf labels or exponents"));
    }
    // The final node is the start node; its body is the start rule.
    let root_rule = rules
        .pop()
        .ok_or_else(|| Error::corrupt(r.pos(), "empty tree"))?;
    let Rule::Sequence(tau) = root_rule else {
        return Err(Error::corrupt(r.pos(), "start node cannot be a run node"));
    };
    if tau.len() != tau_len {
        return Err(Error::corrupt(r.pos(), "start body length mismatch"));
    }
    Ok((rules, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::ingest_bytes;
    use crate::construct::{construct_mr_repair, construct_repair, construct_rl_mr_repair};

    fn pair_grammar() -> Grammar {
        Grammar {
            terminals: vec![b'a', b'b'],
            rules: vec![
                Rule::Terminal(b'a'),
                Rule::Terminal(b'b'),
                Rule::Sequence(vec![1, 2]),
            ],
            tau: vec![3, 3],
        }
    }

    #[test]
    fn binary_worked_vector() {
        let p = build_poppt(&pair_grammar(), PopptForm::Binary).unwrap();
        assert_eq!(p.shape.to_bit_string(), "00101");
        assert_eq!(p.leaves, vec![1, 2, 3]);
        assert_eq!(p.internal_count, 2);
        assert!(p.run_exponents.is_empty());
    }

    #[test]
    fn general_worked_vector() {
        let p = build_poppt(&pair_grammar(), PopptForm::General).unwrap();
        assert_eq!(p.shape.to_bit_string(), "1100110010");
        assert_eq!(p.leaves, vec![1, 2, 3]);
    }

    #[test]
    fn run_rule_tree() {
        let g = Grammar {
            terminals: vec![b'a'],
            rules: vec![
                Rule::Terminal(b'a'),
                Rule::Run {
                    base: 1,
                    exponent: 8,
                },
            ],
            tau: vec![2],
        };
        let p = build_poppt(&g, PopptForm::General).unwrap();
        assert_eq!(p.leaves, vec![0, 1]);
        assert_eq!(p.run_exponents, vec![8]);
        let back = decode_poppt(
            &p.shape,
            &p.leaves,
            &p.run_exponents,
            &g.terminals,
            PopptForm::General,
            1,
        )
        .unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn binary_decode_inverts_worked_vector() {
        let shape = BitStream::from_bit_string("00101");
        let g = decode_poppt(&shape, &[1, 2, 3], &[], b"ab", PopptForm::Binary, 2).unwrap();
        assert_eq!(g, pair_grammar());
    }

    #[test]
    fn general_decode_inverts_worked_vector() {
        let shape = BitStream::from_bit_string("1100110010");
        let g = decode_poppt(&shape, &[1, 2, 3], &[], b"ab", PopptForm::General, 2).unwrap();
        assert_eq!(g, pair_grammar());
    }

    #[test]
    fn short_leaf_text_is_corrupt() {
        let shape = BitStream::from_bit_string("1100110010");
        let err = decode_poppt(&shape, &[1, 2], &[], b"ab", PopptForm::General, 2).unwrap_err();
        assert!(err.is_corrupt());
    }

    #[test]
    fn binary_form_rejects_non_slp() {
        let (t, map) = ingest_bytes(b"abcabcabc");
        let g = construct_mr_repair(&t, &map);
        assert!(matches!(
            build_poppt(&g, PopptForm::Binary),
            Err(Error::Unsupported(_))
        ));
        let (t, map) = ingest_bytes(b"aaaa");
        let g = construct_rl_mr_repair(&t, &map);
        assert!(matches!(
            build_poppt(&g, PopptForm::Binary),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ible_widths() {
        let s = encode_u_ible(&[1, 2, 3], 2).unwrap();
        // widths: bit_width(3), bit_width(4), bit_width(5) = 2, 3, 3.
        assert_eq!(s.len_bits(), 8);
        let back = decode_u_ible(&mut s.reader(), 3, 2).unwrap();
        assert_eq!(back, vec![1, 2, 3]);
        assert!(encode_u_ible(&[], 7).unwrap().is_empty());
    }

    #[test]
    fn ible_rejects_bound_violations() {
        assert!(matches!(encode_u_ible(&[9], 2), Err(Error::Invariant(_))));
    }

    fn round_trip(g: &Grammar, form: PopptForm) {
        let p = build_poppt(g, form).unwrap();
        let back = decode_poppt(
            &p.shape,
            &p.leaves,
            &p.run_exponents,
            &g.terminals,
            form,
            g.tau.len(),
        )
        .unwrap();
        assert!(back.validate().is_empty());
        assert_eq!(back.expand(), g.expand(), "expansion equality for {form:?}");
        assert_eq!(back.size(), g.size(), "size preservation for {form:?}");
    }

    #[test]
    fn round_trips_constructor_outputs() {
        for data in [
            &b"abab"[..],
            b"a",
            b"abcabcabc",
            b"aaaaaaaa",
            b"aabaaaabaaaaaaaab",
            b"the banana the banana the banana!",
        ] {
            let (t, map) = ingest_bytes(data);
            round_trip(&construct_repair(&t, &map), PopptForm::Binary);
            round_trip(&construct_repair(&t, &map), PopptForm::General);
            round_trip(&construct_mr_repair(&t, &map), PopptForm::General);
            round_trip(&construct_rl_mr_repair(&t, &map), PopptForm::General);
        }
    }

    #[test]
    fn shape_length_identities() {
        let (t, map) = ingest_bytes(b"xyzxyzxyxyzxyz");
        let g = construct_mr_repair(&t, &map);
        let p = build_poppt(&g, PopptForm::General).unwrap();
        // One 1 per node plus zeros summing to node count - 1, plus the
        // trailing super-node zero.
        let nodes = p.internal_count + p.leaves.len();
        assert_eq!(p.shape.len_bits(), 2 * nodes);

        let g = construct_repair(&t, &map);
        let p = build_poppt(&g, PopptForm::Binary).unwrap();
        assert_eq!(p.shape.len_bits(), p.internal_count + p.leaves.len());
    }

    #[test]
    fn run_base_expands_at_first_occurrence_under_run_node() {
        // (ab)^4 via RL: pair rule absorbed entirely into a run rule, so the
        // pair variable's first expansion happens inside the run node.
        let (t, map) = ingest_bytes(b"abababab");
        let g = construct_rl_mr_repair(&t, &map);
        assert!(g.rules.iter().any(|r| matches!(r, Rule::Run { .. })));
        round_trip(&g, PopptForm::General);
    }
}
