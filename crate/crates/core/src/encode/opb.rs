//! OPB (pseudo-Boolean competition) output. Variable `i` is written `x<i+1>`.

use std::io::Write;

use crate::error::{Result, WspError};

use super::{BooleanModel, LinearRow};

pub fn emit_opb(model: &BooleanModel, sink: &mut dyn Write) -> Result<()> {
    let rows = model.to_linear();
    writeln!(
        sink,
        "* #variable= {} #constraint= {}",
        model.var_count(),
        rows.len()
    )?;
    for row in &rows {
        let mut line = String::new();
        for &(coef, var) in &row.terms {
            line.push_str(&format!("{coef:+} x{} ", var + 1));
        }
        line.push_str(if row.is_eq { "= " } else { ">= " });
        line.push_str(&format!("{} ;", row.rhs));
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// Parses the subset of OPB that [`emit_opb`] writes. Returns the declared
/// variable count and the rows.
pub fn parse_opb(text: &str) -> Result<(usize, Vec<LinearRow>)> {
    let bad = |line: &str, why: &str| WspError::Format(format!("OPB line {line:?}: {why}"));
    let mut vars = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('*') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            if let Some(i) = words.iter().position(|w| *w == "#variable=") {
                let v = words.get(i + 1).and_then(|w| w.parse().ok());
                vars = Some(v.ok_or_else(|| bad(line, "bad variable count"))?);
            }
            continue;
        }
        let body = line
            .strip_suffix(';')
            .ok_or_else(|| bad(line, "missing ';'"))?;
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let op = tokens
            .iter()
            .position(|t| *t == ">=" || *t == "=")
            .ok_or_else(|| bad(line, "missing comparison"))?;
        if tokens.len() != op + 2 || op % 2 != 0 {
            return Err(bad(line, "malformed terms"));
        }
        let mut terms = Vec::new();
        for pair in tokens[..op].chunks(2) {
            let coef: i64 = pair[0].parse().map_err(|_| bad(line, "bad coefficient"))?;
            let var: usize = pair[1]
                .strip_prefix('x')
                .and_then(|v| v.parse().ok())
                .filter(|&v: &usize| v >= 1)
                .ok_or_else(|| bad(line, "bad variable"))?;
            terms.push((coef, var - 1));
        }
        let rhs = tokens[op + 1]
            .parse()
            .map_err(|_| bad(line, "bad right-hand side"))?;
        rows.push(LinearRow {
            terms,
            is_eq: tokens[op] == "=",
            rhs,
        });
    }
    let vars = vars.ok_or_else(|| WspError::Format("OPB header missing".into()))?;
    Ok((vars, rows))
}
