//! The grammar data model shared by all constructors and codecs, its size
//! metric, validity rules, and expansion back to text.
//!
//! Symbols are dense integer ids: 0 is reserved as the run-rule marker used
//! by serializers, 1..=sigma are terminals in ascending byte order, and
//! variables follow in creation order. The start rule body is kept separate
//! as `tau`; the start symbol is `sigma + d + 1`.

use std::io::Write;

/// A grammar symbol id. 0 never denotes a terminal or variable.
pub type Symbol = u64;

/// Reserved marker symbol used when a run rule body is written as a plain
/// symbol sequence.
pub const RUN_MARKER: Symbol = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// A terminal rule `v -> a` for one byte of the input alphabet.
    Terminal(u8),
    /// A sequence rule `v -> s1 s2 ... sm`.
    Sequence(Vec<Symbol>),
    /// A run rule `v -> base^exponent`.
    Run { base: Symbol, exponent: u64 },
}

impl Rule {
    /// Size contribution: 1 for a terminal, body length for a sequence,
    /// and 3 for a run rule.
    pub fn size(&self) -> u64 {
        match self {
            Rule::Terminal(_) => 1,
            Rule::Sequence(body) => body.len() as u64,
            Rule::Run { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    /// Occurring input bytes in ascending order; byte `terminals[i]` belongs
    /// to terminal symbol `i + 1`.
    pub terminals: Vec<u8>,
    /// One rule per variable: `rules[i]` is the rule of symbol `i + 1`. The
    /// first `sigma` entries are the terminal rules.
    pub rules: Vec<Rule>,
    /// Body of the start rule.
    pub tau: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Terminal rules must be exactly the first `sigma` entries and match
    /// the terminal table.
    TerminalLayout(String),
    /// A body symbol does not precede the rule that uses it.
    Ordering { rule: Symbol, refers: Symbol },
    /// A symbol outside `1..=sigma+d` appeared in a body or in tau.
    OutOfRange { context: String, symbol: Symbol },
    /// A sequence body with fewer than two symbols.
    ShortSequence { rule: Symbol, len: usize },
    /// A run rule with exponent zero.
    RunExponentZero { rule: Symbol },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TerminalLayout(d) => write!(f, "terminal layout: {d}"),
            Violation::Ordering { rule, refers } => {
                write!(
                    f,
                    "rule {rule} references {refers}, which does not precede it"
                )
            }
            Violation::OutOfRange { context, symbol } => {
                write!(f, "symbol {symbol} out of range in {context}")
            }
            Violation::ShortSequence { rule, len } => {
                write!(f, "rule {rule} has a sequence body of length {len}")
            }
            Violation::RunExponentZero { rule } => {
                write!(f, "rule {rule} has run exponent 0")
            }
        }
    }
}

impl Grammar {
    /// Number of terminals.
    pub fn sigma(&self) -> usize {
        self.terminals.len()
    }

    /// Number of variable (non-terminal) rules, excluding the start rule.
    pub fn variable_rule_count(&self) -> usize {
        self.rules.len() - self.sigma()
    }

    /// The start symbol id, `sigma + d + 1`.
    pub fn start_symbol(&self) -> Symbol {
        self.rules.len() as Symbol + 1
    }

    pub fn rule_of(&self, v: Symbol) -> Option<&Rule> {
        if v == 0 {
            return None;
        }
        self.rules.get(v as usize - 1)
    }

    /// Total size of the variable rule bodies, run rules counting 3.
    pub fn sum_alpha(&self) -> u64 {
        self.rules[self.sigma()..].iter().map(Rule::size).sum()
    }

    /// Grammar size: sigma + sum of variable rule sizes + |tau|.
    pub fn size(&self) -> u64 {
        self.sigma() as u64 + self.sum_alpha() + self.tau.len() as u64
    }

    /// Checks every structural constraint and reports all violations found.
    /// An empty result means the grammar is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let sigma = self.sigma();

        if self.terminals.windows(2).any(|w| w[0] >= w[1]) {
            out.push(Violation::TerminalLayout(
                "terminal bytes must be strictly ascending".into(),
            ));
        }
        for (i, rule) in self.rules.iter().enumerate() {
            let id = i as Symbol + 1;
            let is_terminal_slot = i < sigma;
            match rule {
                Rule::Terminal(b) => {
                    if !is_terminal_slot {
                        out.push(Violation::TerminalLayout(format!(
                            "terminal rule at variable position {id}"
                        )));
                    } else if self.terminals[i] != *b {
                        out.push(Violation::TerminalLayout(format!(
                            "rule {id} maps to byte {b} but the terminal table has {}",
                            self.terminals[i]
                        )));
                    }
                }
                Rule::Sequence(body) => {
                    if is_terminal_slot {
                        out.push(Violation::TerminalLayout(format!(
                            "non-terminal rule in terminal position {id}"
                        )));
                    }
                    if body.len() < 2 {
                        out.push(Violation::ShortSequence {
                            rule: id,
                            len: body.len(),
                        });
                    }
                    for &s in body {
                        if s == 0 || s as usize > self.rules.len() {
                            out.push(Violation::OutOfRange {
                                context: format!("rule {id}"),
                                symbol: s,
                            });
                        } else if s >= id {
                            out.push(Violation::Ordering {
                                rule: id,
                                refers: s,
                            });
                        }
                    }
                }
                Rule::Run { base, exponent } => {
                    if is_terminal_slot {
                        out.push(Violation::TerminalLayout(format!(
                            "non-terminal rule in terminal position {id}"
                        )));
                    }
                    if *exponent == 0 {
                        out.push(Violation::RunExponentZero { rule: id });
                    }
                    if *base == 0 || *base as usize > self.rules.len() {
                        out.push(Violation::OutOfRange {
                            context: format!("rule {id}"),
                            symbol: *base,
                        });
                    } else if *base >= id {
                        out.push(Violation::Ordering {
                            rule: id,
                            refers: *base,
                        });
                    }
                }
            }
        }
        for &s in &self.tau {
            if s == 0 || s as usize > self.rules.len() {
                out.push(Violation::OutOfRange {
                    context: "tau".into(),
                    symbol: s,
                });
            }
        }
        out
    }

    /// Expands the grammar to the text it generates.
    pub fn expand(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.expand_into(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    /// Streams the generated text into `sink` without materializing
    /// intermediate expansions; returns the number of bytes produced.
    ///
    /// Uses an explicit stack of `(symbol, pending repetitions)` frames, so
    /// the stack depth is bounded by the grammar height and run rules cost
    /// one frame regardless of their exponent.
    pub fn expand_into<W: Write>(&self, sink: &mut W) -> std::io::Result<u64> {
        let mut buf = Vec::with_capacity(64 * 1024);
        let mut written = 0u64;
        let mut stack: Vec<(Symbol, u64)> = self.tau.iter().rev().map(|&s| (s, 1)).collect();
        while let Some((sym, count)) = stack.pop() {
            if count > 1 {
                stack.push((sym, count - 1));
            }
            match self.rule_of(sym).expect("expand requires a valid grammar") {
                Rule::Terminal(b) => {
                    buf.push(*b);
                    if buf.len() == buf.capacity() {
                        sink.write_all(&buf)?;
                        written += buf.len() as u64;
                        buf.clear();
                    }
                }
                Rule::Sequence(body) => {
                    stack.extend(body.iter().rev().map(|&s| (s, 1)));
                }
                Rule::Run { base, exponent } => {
                    stack.push((*base, *exponent));
                }
            }
        }
        sink.write_all(&buf)?;
        written += buf.len() as u64;
        Ok(written)
    }
}
