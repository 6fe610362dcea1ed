//! Patterns: partitions of the step set, kept as restricted growth strings.
//!
//! Step `i` carries block label `b[i]`, with `b[0] = 0` and
//! `b[i] <= 1 + max(b[..i])`. Two steps share a block iff they share a user.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, WspError};
use crate::instance::{Constraint, Plan, StepId};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    rgs: Vec<usize>,
    block_count: usize,
}

impl Pattern {
    /// The empty prefix, before any step is placed.
    pub fn empty() -> Self {
        Pattern {
            rgs: Vec::new(),
            block_count: 0,
        }
    }

    /// Validates a restricted growth string.
    pub fn from_rgs(rgs: Vec<usize>) -> Result<Self> {
        let mut next = 0;
        for (i, &b) in rgs.iter().enumerate() {
            if b > next {
                return Err(WspError::InvalidPattern(format!(
                    "label {b} at position {i} skips label {next}"
                )));
            }
            if b == next {
                next += 1;
            }
        }
        Ok(Pattern {
            rgs,
            block_count: next,
        })
    }

    /// Canonical labelling of arbitrary labels by first occurrence.
    pub fn canonical<T: PartialEq>(labels: &[T]) -> Self {
        let mut seen: Vec<&T> = Vec::new();
        let rgs = labels
            .iter()
            .map(|l| match seen.iter().position(|s| *s == l) {
                Some(i) => i,
                None => {
                    seen.push(l);
                    seen.len() - 1
                }
            })
            .collect();
        Pattern {
            rgs,
            block_count: seen.len(),
        }
    }

    pub fn rgs(&self) -> &[usize] {
        &self.rgs
    }

    pub fn k(&self) -> usize {
        self.rgs.len()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_of(&self, s: StepId) -> usize {
        self.rgs[s.0]
    }

    pub fn same_block(&self, a: StepId, b: StepId) -> bool {
        self.rgs[a.0] == self.rgs[b.0]
    }

    /// Number of distinct blocks met by `scope`.
    pub fn blocks_touched(&self, scope: &[StepId]) -> usize {
        let mut labels: Vec<usize> = scope.iter().map(|s| self.rgs[s.0]).collect();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    /// The partition induced on `scope`, in scope order.
    pub fn restrict(&self, scope: &[StepId]) -> Pattern {
        let labels: Vec<usize> = scope.iter().map(|s| self.rgs[s.0]).collect();
        Pattern::canonical(&labels)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for b in &self.rgs {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

impl FromStr for Pattern {
    type Err = WspError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Pattern::empty());
        }
        let rgs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| WspError::InvalidPattern(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Pattern::from_rgs(rgs)
    }
}

/// The pattern of a plan: steps share a block iff they share a user.
pub fn pattern_of(plan: &Plan) -> Pattern {
    Pattern::canonical(plan.users())
}

/// Reconstructs the blocks as step lists, ordered by label.
pub fn blocks(p: &Pattern) -> Vec<Vec<StepId>> {
    let mut out = vec![Vec::new(); p.block_count];
    for (s, &b) in p.rgs.iter().enumerate() {
        out[b].push(StepId(s));
    }
    out
}

/// Places one more step, either in an existing block or in a new one.
pub fn extend(prefix: &Pattern, choice: usize) -> Result<Pattern> {
    if choice > prefix.block_count {
        return Err(WspError::InvalidChoice {
            choice,
            block_count: prefix.block_count,
        });
    }
    let mut rgs = prefix.rgs.clone();
    rgs.push(choice);
    Ok(Pattern {
        rgs,
        block_count: prefix.block_count.max(choice + 1),
    })
}

/// Pattern-level satisfaction of a user-independent constraint; `None` for
/// constraints whose satisfaction depends on user identities.
pub fn satisfies(p: &Pattern, c: &Constraint) -> Option<bool> {
    match c {
        Constraint::Sod { s1, s2 } => Some(!p.same_block(*s1, *s2)),
        Constraint::Bod { s1, s2 } => Some(p.same_block(*s1, *s2)),
        Constraint::AtMost { r, scope } => Some(p.blocks_touched(scope) <= *r),
        Constraint::AtLeast { r, scope } => Some(p.blocks_touched(scope) >= *r),
        _ => None,
    }
}

/// Bell number `B_k` via the Bell triangle, for `k <= 30`.
pub fn bell(k: usize) -> Result<u128> {
    if k > 30 {
        return Err(WspError::BellOutOfRange(k));
    }
    let mut row: Vec<u128> = vec![1];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    Ok(row[0])
}

/// All patterns over `k` steps in lexicographic RGS order.
pub fn enumerate_patterns(k: usize) -> PatternIter {
    PatternIter::new(k, &Pattern::empty())
}

/// Lexicographic enumeration of the completions of a fixed prefix.
///
/// Clones continue independently; disjoint prefixes split the pattern space
/// into ranges that can be handed to separate workers.
#[derive(Clone, Debug)]
pub struct PatternIter {
    k: usize,
    fixed: usize,
    // Current string and the running maximum of `rgs[..=i]`.
    rgs: Vec<usize>,
    max_upto: Vec<usize>,
    started: bool,
    done: bool,
}

impl PatternIter {
    /// Enumerates every pattern over `k` steps that starts with `prefix`.
    pub fn new(k: usize, prefix: &Pattern) -> Self {
        let fixed = prefix.k();
        let done = k == 0 || fixed > k;
        let mut rgs = prefix.rgs.clone();
        rgs.resize(k.max(fixed), 0);
        let mut it = PatternIter {
            k,
            fixed,
            rgs,
            max_upto: vec![0; k.max(fixed)],
            started: false,
            done,
        };
        it.refresh_max(0);
        it
    }

    fn refresh_max(&mut self, from: usize) {
        for i in from..self.rgs.len() {
            let prev = if i == 0 { 0 } else { self.max_upto[i - 1] };
            self.max_upto[i] = prev.max(self.rgs[i]);
        }
    }

    fn advance(&mut self) -> bool {
        let lowest = self.fixed.max(1);
        let mut i = self.k;
        while i > lowest {
            i -= 1;
            if self.rgs[i] <= self.max_upto[i - 1] {
                self.rgs[i] += 1;
                for r in &mut self.rgs[i + 1..] {
                    *r = 0;
                }
                self.refresh_max(i);
                return true;
            }
        }
        false
    }
}

impl Iterator for PatternIter {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.done {
            return None;
        }
        if self.started {
            if !self.advance() {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        Some(Pattern {
            rgs: self.rgs.clone(),
            block_count: self.max_upto.last().map_or(0, |m| m + 1),
        })
    }
}
