//! CNF output. Cardinality rows go through a sequential counter; only the
//! overflow clauses of a counter carry the row's guard.

use std::io::Write;

use crate::error::{Result, WspError};

use super::{BooleanModel, Cmp, Lit, Row};

/// A CNF over the model's variables followed by counter auxiliaries.
/// Literals use the DIMACS convention: variable `i` is `i + 1`, negation is
/// the sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub vars: usize,
    pub clauses: Vec<Vec<i64>>,
    counters: Vec<Counter>,
}

// Auxiliary `first + i * r + j` is true iff at least `j + 1` of `lits[..=i]` hold.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Counter {
    lits: Vec<Lit>,
    r: usize,
    first: usize,
}

impl Cnf {
    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.vars
            && self.clauses.iter().all(|c| {
                c.iter()
                    .any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0))
            })
    }

    /// Extends a model assignment with the canonical counter values.
    pub fn extend(&self, model_assignment: &[bool]) -> Vec<bool> {
        let mut out = model_assignment.to_vec();
        out.resize(self.vars, false);
        for c in &self.counters {
            let mut count = 0;
            for (i, l) in c.lits.iter().enumerate().take(c.lits.len() - 1) {
                count += usize::from(l.value(&out));
                for j in 0..c.r {
                    out[c.first + i * c.r + j] = count > j;
                }
            }
        }
        out
    }
}

fn dimacs(l: Lit) -> i64 {
    let v = l.var as i64 + 1;
    if l.negated {
        -v
    } else {
        v
    }
}

struct CnfBuilder {
    vars: usize,
    clauses: Vec<Vec<i64>>,
    counters: Vec<Counter>,
}

impl CnfBuilder {
    fn clause(&mut self, lits: impl IntoIterator<Item = Lit>, guard: Option<Lit>) {
        let mut c: Vec<i64> = lits.into_iter().map(dimacs).collect();
        if let Some(g) = guard {
            c.push(dimacs(g.negate()));
        }
        self.clauses.push(c);
    }

    fn at_most(&mut self, lits: &[Lit], r: usize, guard: Option<Lit>) {
        let m = lits.len();
        if r >= m {
            return;
        }
        if r == 0 {
            for &l in lits {
                self.clause([l.negate()], guard);
            }
            return;
        }
        if r + 1 == m {
            self.clause(lits.iter().map(|l| l.negate()), guard);
            return;
        }
        let first = self.vars;
        self.vars += (m - 1) * r;
        let s = |i: usize, j: usize| Lit::pos(first + i * r + j);
        for (i, &x) in lits.iter().enumerate() {
            if i + 1 < m {
                self.clause([x.negate(), s(i, 0)], None);
            }
            if i == 0 {
                continue;
            }
            if i + 1 < m {
                for j in 0..r {
                    self.clause([s(i - 1, j).negate(), s(i, j)], None);
                }
                for j in 1..r {
                    self.clause([x.negate(), s(i - 1, j - 1).negate(), s(i, j)], None);
                }
            }
            self.clause([x.negate(), s(i - 1, r - 1).negate()], guard);
        }
        self.counters.push(Counter {
            lits: lits.to_vec(),
            r,
            first,
        });
    }

    fn at_least(&mut self, lits: &[Lit], r: i64, guard: Option<Lit>) {
        let m = lits.len() as i64;
        if r <= 0 {
            return;
        }
        if r > m {
            self.clause([], guard);
            return;
        }
        let negated: Vec<Lit> = lits.iter().map(|l| l.negate()).collect();
        self.at_most(&negated, (m - r) as usize, guard);
    }

    fn row(&mut self, row: &Row) -> Result<()> {
        let mut lits = Vec::with_capacity(row.terms.len());
        let mut rhs = row.rhs;
        for t in &row.terms {
            match t.coef {
                1 => lits.push(t.lit),
                // -l = !l - 1
                -1 => {
                    lits.push(t.lit.negate());
                    rhs += 1;
                }
                c => {
                    return Err(WspError::Format(format!(
                        "coefficient {c} has no clausal translation"
                    )))
                }
            }
        }
        if matches!(row.cmp, Cmp::Ge | Cmp::Eq) {
            self.at_least(&lits, rhs, row.guard);
        }
        if matches!(row.cmp, Cmp::Le | Cmp::Eq) {
            if rhs < 0 {
                self.clause([], row.guard);
            } else {
                self.at_most(&lits, rhs as usize, row.guard);
            }
        }
        Ok(())
    }
}

pub fn to_cnf(model: &BooleanModel) -> Result<Cnf> {
    let mut b = CnfBuilder {
        vars: model.var_count(),
        clauses: Vec::new(),
        counters: Vec::new(),
    };
    for row in model.rows() {
        b.row(row)?;
    }
    Ok(Cnf {
        vars: b.vars,
        clauses: b.clauses,
        counters: b.counters,
    })
}

pub fn emit_dimacs(model: &BooleanModel, sink: &mut dyn Write) -> Result<()> {
    let cnf = to_cnf(model)?;
    writeln!(sink, "p cnf {} {}", cnf.vars, cnf.clauses.len())?;
    for c in &cnf.clauses {
        let mut line = String::new();
        for l in c {
            line.push_str(&l.to_string());
            line.push(' ');
        }
        line.push('0');
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// One `name index` line per model variable, 1-based.
pub fn emit_var_map(model: &BooleanModel, sink: &mut dyn Write) -> Result<()> {
    for v in 0..model.var_count() {
        writeln!(sink, "{} {}", model.name(v), v + 1)?;
    }
    Ok(())
}
