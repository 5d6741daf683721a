// SPDX-License-Identifier: MIT
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    Observational,
    Abundance,
    Activity,
    MechanismSet,
}

impl InterventionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InterventionKind::Observational => "observational",
            InterventionKind::Abundance => "abundance",
            InterventionKind::Activity => "activity",
            InterventionKind::MechanismSet => "mechanism_set",
        }
    }
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterventionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "observational" | "none" => Ok(InterventionKind::Observational),
            "abundance" => Ok(InterventionKind::Abundance),
            "activity" => Ok(InterventionKind::Activity),
            "mechanism_set" | "mechanism-set" | "mechanisms" => Ok(InterventionKind::MechanismSet),
            other => Err(Error::InvalidDesign(format!(
                "unknown intervention kind `{other}`"
            ))),
        }
    }
}

/// What an experimental condition did to the system.
///
/// `Abundance(i)` forces the level of compound `i` (its own mechanism changes).
/// `Activity(i)` changes how `i` acts on its children (their mechanisms change).
/// `MechanismSet(s)` changes the mechanisms of every compound in `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Intervention {
    Observational,
    Abundance(usize),
    Activity(usize),
    MechanismSet(Vec<usize>),
}

impl Intervention {
    /// Builds an intervention from a kind and target list, enforcing target cardinality.
    pub fn new(kind: InterventionKind, targets: &[usize]) -> Result<Self> {
        match (kind, targets) {
            (InterventionKind::Observational, []) => Ok(Intervention::Observational),
            (InterventionKind::Abundance, [t]) => Ok(Intervention::Abundance(*t)),
            (InterventionKind::Activity, [t]) => Ok(Intervention::Activity(*t)),
            (InterventionKind::MechanismSet, ts) if !ts.is_empty() => {
                let mut v = ts.to_vec();
                v.sort_unstable();
                v.dedup();
                Ok(Intervention::MechanismSet(v))
            }
            (kind, ts) => Err(Error::InvalidDesign(format!(
                "{kind} intervention cannot have {} target(s)",
                ts.len()
            ))),
        }
    }

    pub fn kind(&self) -> InterventionKind {
        match self {
            Intervention::Observational => InterventionKind::Observational,
            Intervention::Abundance(_) => InterventionKind::Abundance,
            Intervention::Activity(_) => InterventionKind::Activity,
            Intervention::MechanismSet(_) => InterventionKind::MechanismSet,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Intervention::Observational => Vec::new(),
            Intervention::Abundance(t) | Intervention::Activity(t) => vec![*t],
            Intervention::MechanismSet(s) => s.clone(),
        }
    }

    pub fn is_observational(&self) -> bool {
        matches!(self, Intervention::Observational)
    }
}

/// Ordered list of experimental conditions with human-readable names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    conditions: Vec<Intervention>,
    names: Vec<String>,
}

impl ExperimentDesign {
    pub fn new(conditions: Vec<Intervention>, names: Vec<String>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::InvalidDesign("a design needs at least one condition".into()));
        }
        if conditions.len() != names.len() {
            return Err(Error::InvalidDesign(format!(
                "{} conditions but {} names",
                conditions.len(),
                names.len()
            )));
        }
        if conditions
            .iter()
            .any(|c| matches!(c, Intervention::MechanismSet(s) if s.is_empty()))
        {
            return Err(Error::InvalidDesign("mechanism set with no targets".into()));
        }
        if !conditions[0].is_observational() {
            log::warn!("first condition `{}` is not observational", names[0]);
        }
        Ok(Self { conditions, names })
    }

    /// Names the conditions `c1, c2, ...`.
    pub fn unnamed(conditions: Vec<Intervention>) -> Result<Self> {
        let names = (1..=conditions.len()).map(|c| format!("c{c}")).collect();
        Self::new(conditions, names)
    }

    pub fn observational(k: usize) -> Result<Self> {
        Self::unnamed(vec![Intervention::Observational; k])
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn conditions(&self) -> &[Intervention] {
        &self.conditions
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Checks every target against a compound count.
    pub fn validate_for(&self, d: usize) -> Result<()> {
        for iv in &self.conditions {
            if let Some(&t) = iv.targets().iter().find(|&&t| t >= d) {
                return Err(Error::IndexOutOfRange { index: t, d });
            }
        }
        Ok(())
    }

    /// Applies a compound relabeling (`i` becomes `perm[i]`) to every target.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let conditions = self
            .conditions
            .iter()
            .map(|iv| match iv {
                Intervention::Observational => Intervention::Observational,
                Intervention::Abundance(t) => Intervention::Abundance(perm[*t]),
                Intervention::Activity(t) => Intervention::Activity(perm[*t]),
                Intervention::MechanismSet(s) => {
                    let mut v: Vec<usize> = s.iter().map(|&t| perm[t]).collect();
                    v.sort_unstable();
                    Intervention::MechanismSet(v)
                }
            })
            .collect();
        Self {
            conditions,
            names: self.names.clone(),
        }
    }
}
