//! Instance file I/O.
//!
//! An instance is a small TOML document naming the agents and houses, giving
//! each agent's ordered preference list (by house name), and optionally the
//! first agent's utilities and a target utility:
//!
//! ```toml
//! agents = ["a1", "a2"]
//! houses = ["h1", "h2"]
//! target = "21/4"
//!
//! [prefs]
//! a1 = ["h1", "h2"]
//! a2 = ["h2", "h1"]
//!
//! [utilities]
//! h1 = 7
//! h2 = "7/2"
//! ```
//!
//! Rationals are written canonically: a bare integer when the denominator is
//! one, otherwise a `"p/q"` string with positive `q` and `gcd(p, q) = 1`.
//! Utilities may cover only some houses; preference lists of every agent but
//! the first must be complete.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssignmentProblem, UtilityFunction};
use crate::rational::{format_rational, parse_rational, Rational};

/// A rational as it appears in TOML: a bare integer or a `"p/q"` string.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum TomlRational {
    Int(i64),
    Text(String),
}

impl TomlRational {
    /// Canonical form of `r` for serialization.
    pub fn from_rational(r: &Rational) -> Self {
        match r.is_integer().then(|| r.numer().to_i64()).flatten() {
            Some(i) => TomlRational::Int(i),
            None => TomlRational::Text(format_rational(r)),
        }
    }

    /// Parses back into an exact rational.
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            TomlRational::Int(i) => Ok(crate::rational::int(*i)),
            TomlRational::Text(s) => parse_rational(s),
        }
    }
}

/// The on-disk shape of an assignment problem instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub agents: Vec<String>,
    pub houses: Vec<String>,
    /// Optional target expected utility (used by the satisfiability gadget).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TomlRational>,
    /// Preference lists by agent name, each an ordered list of house names.
    pub prefs: BTreeMap<String, Vec<String>>,
    /// First agent's utilities by house name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utilities: Option<BTreeMap<String, TomlRational>>,
}

impl InstanceFile {
    /// Captures a problem (and optionally the first agent's utilities and a
    /// target) in file form.
    pub fn from_problem(
        problem: &AssignmentProblem,
        utilities: Option<&UtilityFunction>,
        target: Option<&Rational>,
    ) -> Self {
        let prefs = (0..problem.n())
            .map(|a| {
                let names = problem
                    .pref(a)
                    .iter()
                    .map(|&h| problem.house_name(h).to_string())
                    .collect();
                (problem.agent_name(a).to_string(), names)
            })
            .collect();
        let utilities = utilities.map(|u| {
            u.values()
                .iter()
                .enumerate()
                .filter_map(|(h, v)| {
                    v.as_ref().map(|v| {
                        (
                            problem.house_name(h).to_string(),
                            TomlRational::from_rational(v),
                        )
                    })
                })
                .collect()
        });
        InstanceFile {
            agents: problem.agent_names().to_vec(),
            houses: problem.house_names().to_vec(),
            target: target.map(TomlRational::from_rational),
            prefs,
            utilities,
        }
    }

    /// Parses the TOML text form.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("instance file: {e}")))
    }

    /// Serializes to TOML text.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Internal(format!("toml: {e}")))
    }

    /// Reads and parses `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes and writes to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_toml()?)?)
    }

    /// Resolves names to ids and validates, producing the in-memory problem
    /// plus the optional utilities and target.
    pub fn to_problem(
        &self,
    ) -> Result<(AssignmentProblem, Option<UtilityFunction>, Option<Rational>)> {
        let mut house_id = BTreeMap::new();
        for (h, name) in self.houses.iter().enumerate() {
            if house_id.insert(name.as_str(), h).is_some() {
                return Err(Error::Input(format!("duplicate house name {name:?}")));
            }
        }
        for name in self.prefs.keys() {
            if !self.agents.contains(name) {
                return Err(Error::Input(format!(
                    "preference list for unknown agent {name:?}"
                )));
            }
        }
        let prefs = self
            .agents
            .iter()
            .map(|agent| {
                let list = self.prefs.get(agent).ok_or_else(|| {
                    Error::Input(format!("agent {agent:?} has no preference list"))
                })?;
                list.iter()
                    .map(|name| {
                        house_id.get(name.as_str()).copied().ok_or_else(|| {
                            Error::Input(format!(
                                "agent {agent:?} ranks unknown house {name:?}"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let problem =
            AssignmentProblem::new(self.agents.clone(), self.houses.clone(), prefs)?;
        let utilities = self
            .utilities
            .as_ref()
            .map(|map| -> Result<UtilityFunction> {
                let mut values = vec![None; self.houses.len()];
                for (name, value) in map {
                    let &h = house_id.get(name.as_str()).ok_or_else(|| {
                        Error::Input(format!("utility for unknown house {name:?}"))
                    })?;
                    values[h] = Some(value.to_rational()?);
                }
                Ok(UtilityFunction::new(values))
            })
            .transpose()?;
        let target = self.target.as_ref().map(|t| t.to_rational()).transpose()?;
        Ok((problem, utilities, target))
    }
}
