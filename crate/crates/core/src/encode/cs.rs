//! Constraint-satisfaction formulation: `y_s` ranges over the users of step
//! `s`; group and selector variables are 0/1.

use std::io::Write;

use serde::Serialize;

use crate::error::{Result, WspError};
use crate::instance::{Constraint, Instance, Plan, StepId, UserId};
use crate::patterns::pattern_of;

use super::boolean::{binomial, family_functions, subsets};
use super::VarRole;

const SUBSET_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CsVar {
    pub name: String,
    pub domain: Vec<usize>,
}

/// Variables are referred to by index. A guard is a 0/1 variable that must
/// be 1 for the constraint to apply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "args", rename_all = "snake_case")]
pub enum CsConstraint {
    Equal { a: usize, b: usize },
    NotEqual { a: usize, b: usize },
    /// At least two of the variables take the same value.
    SomeEqual { vars: Vec<usize> },
    AtMostDistinct { vars: Vec<usize>, r: usize, guard: Option<usize> },
    AtLeastDistinct { vars: Vec<usize>, r: usize, guard: Option<usize> },
    /// Some variable is 1.
    AtLeastOne { vars: Vec<usize> },
    /// Exactly one variable is 1.
    ExactlyOne { vars: Vec<usize> },
    ForbidIf { guard: usize, var: usize, values: Vec<usize> },
}

impl CsConstraint {
    pub fn holds(&self, values: &[usize]) -> bool {
        let distinct = |vars: &[usize]| {
            let mut v: Vec<usize> = vars.iter().map(|&i| values[i]).collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        let on = |g: &Option<usize>| g.is_none_or(|g| values[g] == 1);
        match self {
            CsConstraint::Equal { a, b } => values[*a] == values[*b],
            CsConstraint::NotEqual { a, b } => values[*a] != values[*b],
            CsConstraint::SomeEqual { vars } => distinct(vars) < vars.len(),
            CsConstraint::AtMostDistinct { vars, r, guard } => !on(guard) || distinct(vars) <= *r,
            CsConstraint::AtLeastDistinct { vars, r, guard } => !on(guard) || distinct(vars) >= *r,
            CsConstraint::AtLeastOne { vars } => vars.iter().any(|&v| values[v] == 1),
            CsConstraint::ExactlyOne { vars } => vars.iter().filter(|&&v| values[v] == 1).count() == 1,
            CsConstraint::ForbidIf { guard, var, values: vs } => {
                values[*guard] != 1 || !vs.contains(&values[*var])
            }
        }
    }
}

/// Variables `0..k` are the steps; auxiliaries follow.
#[derive(Clone, Debug, Serialize)]
pub struct CsModel {
    pub vars: Vec<CsVar>,
    pub constraints: Vec<CsConstraint>,
    #[serde(skip)]
    instance: Instance,
    #[serde(skip)]
    aux: Vec<VarRole>,
}

impl CsModel {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn is_satisfied(&self, values: &[usize]) -> bool {
        values.len() == self.vars.len()
            && values
                .iter()
                .zip(&self.vars)
                .all(|(v, var)| var.domain.contains(v))
            && self.constraints.iter().all(|c| c.holds(values))
    }

    /// The values a plan induces; auxiliaries follow their defining
    /// conditions and selectors pick the first authorising function.
    pub fn induced(&self, plan: &Plan) -> Result<Vec<usize>> {
        let inst = &self.instance;
        inst.check_plan(plan)?;
        let users = plan.users();
        let mut out: Vec<usize> = users.iter().map(|u| u.0).collect();
        for (s, &u) in out.iter().enumerate() {
            if !self.vars[s].domain.contains(&u) {
                return Err(WspError::Decode(format!("user {u} is outside the domain of step {s}")));
            }
        }
        let pattern = pattern_of(plan);
        for role in &self.aux {
            let value = match *role {
                VarRole::Group { constraint, index } => match &inst.constraints()[constraint] {
                    Constraint::Sual { scope, h, .. } => (pattern.blocks_touched(scope) <= *h) == (index == 0),
                    other => unreachable!("no groups for {other}"),
                },
                VarRole::Selector { constraint, index } => {
                    family_functions(inst, constraint)
                        .iter()
                        .position(|f| f.authorises(users))
                        == Some(index)
                }
                other => unreachable!("no CS auxiliary {other}"),
            };
            out.push(usize::from(value));
        }
        Ok(out)
    }

    fn add_aux(&mut self, role: VarRole) -> usize {
        self.vars.push(CsVar {
            name: role.to_string(),
            domain: vec![0, 1],
        });
        self.aux.push(role);
        self.vars.len() - 1
    }
}

pub fn encode_cs(inst: &Instance) -> Result<CsModel> {
    let mut m = CsModel {
        vars: (0..inst.k())
            .map(|s| CsVar {
                name: format!("y_{s}"),
                domain: inst.auth().users(StepId(s)).to_vec(),
            })
            .collect(),
        constraints: Vec::new(),
        instance: inst.clone(),
        aux: Vec::new(),
    };
    let steps = |scope: &[StepId]| -> Vec<usize> {
        let mut v: Vec<usize> = scope.iter().map(|s| s.0).collect();
        v.sort_unstable();
        v
    };
    for (ci, c) in inst.constraints().iter().enumerate() {
        match c {
            Constraint::Sod { s1, s2 } => m.constraints.push(CsConstraint::NotEqual { a: s1.0, b: s2.0 }),
            Constraint::Bod { s1, s2 } => m.constraints.push(CsConstraint::Equal { a: s1.0, b: s2.0 }),
            Constraint::AtMost { r, scope } => {
                let vars = steps(scope);
                if binomial(vars.len(), r + 1) <= SUBSET_LIMIT as u128 {
                    for subset in subsets(&vars, r + 1) {
                        m.constraints.push(CsConstraint::SomeEqual { vars: subset });
                    }
                } else {
                    m.constraints.push(CsConstraint::AtMostDistinct {
                        vars,
                        r: *r,
                        guard: None,
                    });
                }
            }
            Constraint::AtLeast { r, scope } => m.constraints.push(CsConstraint::AtLeastDistinct {
                vars: steps(scope),
                r: *r,
                guard: None,
            }),
            Constraint::Sual { scope, h, supers } => {
                let g0 = m.add_aux(VarRole::Group {
                    constraint: ci,
                    index: 0,
                });
                let g1 = m.add_aux(VarRole::Group {
                    constraint: ci,
                    index: 1,
                });
                let vars = steps(scope);
                m.constraints.push(CsConstraint::ExactlyOne { vars: vec![g0, g1] });
                m.constraints.push(CsConstraint::AtMostDistinct {
                    vars: vars.clone(),
                    r: *h,
                    guard: Some(g0),
                });
                m.constraints.push(CsConstraint::AtLeastDistinct {
                    vars: vars.clone(),
                    r: h + 1,
                    guard: Some(g1),
                });
                for s in vars {
                    let values: Vec<usize> = inst
                        .auth()
                        .users(StepId(s))
                        .iter()
                        .filter(|&u| !supers.contains(u))
                        .collect();
                    if !values.is_empty() {
                        m.constraints.push(CsConstraint::ForbidIf { guard: g0, var: s, values });
                    }
                }
            }
            Constraint::Wl { .. } | Constraint::Ada { .. } => {
                let mut selectors = Vec::new();
                for (j, f) in family_functions(inst, ci).iter().enumerate() {
                    let a = m.add_aux(VarRole::Selector {
                        constraint: ci,
                        index: j,
                    });
                    selectors.push(a);
                    for s in 0..inst.k() {
                        let values: Vec<usize> = inst
                            .auth()
                            .users(StepId(s))
                            .iter()
                            .filter(|&u| !f.users(StepId(s)).contains(u))
                            .collect();
                        if !values.is_empty() {
                            m.constraints.push(CsConstraint::ForbidIf { guard: a, var: s, values });
                        }
                    }
                }
                m.constraints.push(CsConstraint::AtLeastOne { vars: selectors });
            }
            Constraint::Custom(_) => {
                return Err(WspError::Unsupported {
                    constraint: c.to_string(),
                    reason: "only catalogue constraints have a CS encoding".into(),
                })
            }
        }
    }
    Ok(m)
}

/// Reads the plan off the step variables.
pub fn decode_cs(values: &[usize], model: &CsModel) -> Result<Plan> {
    let k = model.instance.k();
    if values.len() != model.vars.len() {
        return Err(WspError::Decode(format!(
            "{} values for {} variables",
            values.len(),
            model.vars.len()
        )));
    }
    for (s, &u) in values[..k].iter().enumerate() {
        if !model.vars[s].domain.contains(&u) {
            return Err(WspError::Decode(format!("user {u} is outside the domain of step {s}")));
        }
    }
    Ok(Plan::new(values[..k].iter().map(|&u| UserId(u)).collect()))
}

pub fn emit_cs_json(model: &CsModel, sink: &mut dyn Write) -> Result<()> {
    serde_json::to_writer(&mut *sink, model)?;
    writeln!(sink)?;
    Ok(())
}
