//! JSON instance and plan files.
//!
//! Field order is fixed by the struct definitions, so serialising the same
//! value always produces the same bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WspError};
use crate::instance::{AuthorisationFunction, Constraint, Instance, Plan, StepId, UserSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintRecord {
    Sod {
        s1: usize,
        s2: usize,
    },
    Bod {
        s1: usize,
        s2: usize,
    },
    AtMost {
        r: usize,
        scope: Vec<usize>,
    },
    AtLeast {
        r: usize,
        scope: Vec<usize>,
    },
    Sual {
        scope: Vec<usize>,
        h: usize,
        supers: Vec<usize>,
    },
    Wl {
        scope: Vec<usize>,
        teams: Vec<Vec<usize>>,
    },
    /// If `s1` gets a user from `u1`, `s2` must get one from `u2`.
    Ada {
        s1: usize,
        s2: usize,
        u1: Vec<usize>,
        u2: Vec<usize>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regenerations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_names: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub k: usize,
    pub n: usize,
    pub auth: Vec<Vec<usize>>,
    pub constraints: Vec<ConstraintRecord>,
    #[serde(default)]
    pub meta: Meta,
}

fn steps(scope: &[StepId]) -> Vec<usize> {
    scope.iter().map(|s| s.0).collect()
}

fn step_ids(scope: &[usize]) -> Vec<StepId> {
    scope.iter().copied().map(StepId).collect()
}

fn users(n: usize, list: &[usize]) -> Result<UserSet> {
    UserSet::from_indices(n, list.iter().copied())
}

impl ConstraintRecord {
    pub fn from_constraint(c: &Constraint) -> Result<Self> {
        Ok(match c {
            Constraint::Sod { s1, s2 } => ConstraintRecord::Sod { s1: s1.0, s2: s2.0 },
            Constraint::Bod { s1, s2 } => ConstraintRecord::Bod { s1: s1.0, s2: s2.0 },
            Constraint::AtMost { r, scope } => ConstraintRecord::AtMost {
                r: *r,
                scope: steps(scope),
            },
            Constraint::AtLeast { r, scope } => ConstraintRecord::AtLeast {
                r: *r,
                scope: steps(scope),
            },
            Constraint::Sual { scope, h, supers } => ConstraintRecord::Sual {
                scope: steps(scope),
                h: *h,
                supers: supers.to_vec(),
            },
            Constraint::Wl { scope, teams } => ConstraintRecord::Wl {
                scope: steps(scope),
                teams: teams.iter().map(UserSet::to_vec).collect(),
            },
            Constraint::Ada {
                s1,
                s2,
                trigger,
                required,
            } => ConstraintRecord::Ada {
                s1: s1.0,
                s2: s2.0,
                u1: trigger.to_vec(),
                u2: required.to_vec(),
            },
            Constraint::Custom(custom) => {
                return Err(WspError::Unsupported {
                    constraint: custom.name.clone(),
                    reason: "custom predicates cannot be written to a file".into(),
                })
            }
        })
    }

    pub fn to_constraint(&self, n: usize) -> Result<Constraint> {
        Ok(match self {
            ConstraintRecord::Sod { s1, s2 } => Constraint::Sod {
                s1: StepId(*s1),
                s2: StepId(*s2),
            },
            ConstraintRecord::Bod { s1, s2 } => Constraint::Bod {
                s1: StepId(*s1),
                s2: StepId(*s2),
            },
            ConstraintRecord::AtMost { r, scope } => Constraint::AtMost {
                r: *r,
                scope: step_ids(scope),
            },
            ConstraintRecord::AtLeast { r, scope } => Constraint::AtLeast {
                r: *r,
                scope: step_ids(scope),
            },
            ConstraintRecord::Sual { scope, h, supers } => Constraint::Sual {
                scope: step_ids(scope),
                h: *h,
                supers: users(n, supers)?,
            },
            ConstraintRecord::Wl { scope, teams } => Constraint::Wl {
                scope: step_ids(scope),
                teams: teams.iter().map(|t| users(n, t)).collect::<Result<_>>()?,
            },
            ConstraintRecord::Ada { s1, s2, u1, u2 } => Constraint::Ada {
                s1: StepId(*s1),
                s2: StepId(*s2),
                trigger: users(n, u1)?,
                required: users(n, u2)?,
            },
        })
    }
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, meta: Meta) -> Result<Self> {
        Ok(InstanceFile {
            k: inst.k(),
            n: inst.n(),
            auth: inst.auth().sets().iter().map(UserSet::to_vec).collect(),
            constraints: inst
                .constraints()
                .iter()
                .map(ConstraintRecord::from_constraint)
                .collect::<Result<_>>()?,
            meta,
        })
    }

    /// Validates every index and constraint field.
    pub fn to_instance(&self) -> Result<Instance> {
        if self.auth.len() != self.k {
            return Err(WspError::AuthorisationLength {
                expected: self.k,
                found: self.auth.len(),
            });
        }
        for (field, names, expected) in [
            ("step_names", &self.meta.step_names, self.k),
            ("user_names", &self.meta.user_names, self.n),
        ] {
            if let Some(names) = names {
                if names.len() != expected {
                    return Err(WspError::Format(format!(
                        "{field} has {} entries, expected {expected}",
                        names.len()
                    )));
                }
            }
        }
        let auth = AuthorisationFunction::from_lists(self.n, &self.auth)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| c.to_constraint(self.n))
            .collect::<Result<_>>()?;
        Instance::new(self.k, self.n, auth, constraints)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Compact JSON followed by a newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plain data serialises");
        s.push('\n');
        s
    }

    pub fn step_name(&self, s: StepId) -> String {
        self.meta
            .step_names
            .as_ref()
            .and_then(|names| names.get(s.0).cloned())
            .unwrap_or_else(|| s.to_string())
    }

    pub fn user_name(&self, u: usize) -> String {
        self.meta
            .user_names
            .as_ref()
            .and_then(|names| names.get(u).cloned())
            .unwrap_or_else(|| format!("u{u}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub assignment: Vec<usize>,
}

impl PlanFile {
    pub fn from_plan(plan: &Plan) -> Self {
        PlanFile {
            assignment: plan.indices(),
        }
    }

    pub fn to_plan(&self) -> Plan {
        Plan::from_indices(&self.assignment)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, running_example, Mix};
    use crate::instance::CustomConstraint;

    #[test]
    fn round_trip_every_kind() {
        for mix in Mix::ALL {
            for seed in 0..20 {
                let inst = random_instance(seed, 5, 6, mix);
                let file = InstanceFile::from_instance(&inst, Meta::default()).unwrap();
                let text = file.to_json();
                let back = InstanceFile::parse(&text).unwrap();
                assert_eq!(back, file);
                let again = back.to_instance().unwrap();
                assert_eq!(format!("{again:?}"), format!("{inst:?}"));
            }
        }
    }

    #[test]
    fn wire_format() {
        let text = r#"{"k":2,"n":3,"auth":[[0,1],[2]],"constraints":[
            {"kind":"sod","s1":0,"s2":1},
            {"kind":"ada","s1":0,"s2":1,"u1":[0],"u2":[2]}]}"#;
        let inst = InstanceFile::parse(text).unwrap().to_instance().unwrap();
        assert_eq!(inst.constraints().len(), 2);
        assert_eq!(
            InstanceFile::from_instance(&inst, Meta::default()).unwrap().to_json(),
            "{\"k\":2,\"n\":3,\"auth\":[[0,1],[2]],\"constraints\":[{\"kind\":\"sod\",\"s1\":0,\"s2\":1},\
             {\"kind\":\"ada\",\"s1\":0,\"s2\":1,\"u1\":[0],\"u2\":[2]}],\"meta\":{}}\n"
        );
    }

    #[test]
    fn invalid_files_are_rejected() {
        let bad = [
            r#"{"k":2,"n":3,"auth":[[0]],"constraints":[]}"#,
            r#"{"k":1,"n":3,"auth":[[3]],"constraints":[]}"#,
            r#"{"k":2,"n":3,"auth":[[0],[1]],"constraints":[{"kind":"sod","s1":0,"s2":5}]}"#,
            r#"{"k":2,"n":3,"auth":[[0],[1]],"constraints":[{"kind":"bogus"}]}"#,
            r#"{"k":2,"n":3,"auth":[[0],[1]],"constraints":[],"extra":1}"#,
            r#"{"k":2,"n":3,"auth":[[0],[1]],"constraints":[],"meta":{"step_names":["a"]}}"#,
        ];
        for text in bad {
            let parsed = InstanceFile::parse(text).and_then(|f| f.to_instance());
            assert!(parsed.is_err(), "{text}");
        }
    }

    #[test]
    fn custom_constraints_cannot_be_saved() {
        let inst = running_example();
        let c = Constraint::Custom(CustomConstraint::new("x", vec![StepId(0), StepId(1)], |_| true));
        let inst = inst.with_constraints(vec![c]).unwrap();
        assert!(InstanceFile::from_instance(&inst, Meta::default()).is_err());
    }

    #[test]
    fn plan_files() {
        let plan = Plan::from_indices(&[0, 1, 0, 3, 2, 4]);
        let file = PlanFile::from_plan(&plan);
        assert_eq!(file.to_json(), "{\"assignment\":[0,1,0,3,2,4]}\n");
        assert_eq!(PlanFile::parse(&file.to_json()).unwrap().to_plan(), plan);
        assert!(PlanFile::parse("{\"assignment\":[0,1").is_err());
    }
}
