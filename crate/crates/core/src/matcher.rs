//! Binary parameter matching functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ParameterDesc;
use crate::ontology::Ontology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    /// Syntactic: byte-identical parameter names.
    Equal,
    /// Identical concepts.
    Exact,
    /// Provided concept strictly more specific than the required one.
    PlugIn,
    /// Provided concept strictly more general than the required one.
    Subsume,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 4] = [Self::Equal, Self::Exact, Self::PlugIn, Self::Subsume];

    pub fn is_semantic(self) -> bool {
        self != Self::Equal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::Exact => "exact",
            Self::PlugIn => "plugin",
            Self::Subsume => "subsume",
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("matcher `{0}` needs an ontology")]
    MissingOntology(MatcherKind),
    #[error("unknown matcher `{0}` (expected equal, exact, plugin or subsume)")]
    UnknownKind(String),
}

impl FromStr for MatcherKind {
    type Err = MatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "equal" | "eq" => Ok(Self::Equal),
            "exact" | "ex" => Ok(Self::Exact),
            "plugin" | "plug-in" | "pg" => Ok(Self::PlugIn),
            "subsume" | "sb" => Ok(Self::Subsume),
            _ => Err(MatchError::UnknownKind(s.to_string())),
        }
    }
}

/// A matching function bound to its ontology.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'o> {
    kind: MatcherKind,
    onto: &'o Ontology,
    reflexive: bool,
}

static EMPTY: std::sync::LazyLock<Ontology> = std::sync::LazyLock::new(Ontology::empty);

impl<'o> Matcher<'o> {
    /// PlugIn and Subsume need a hierarchy; Equal ignores it and Exact only
    /// compares IRIs, so both accept `None`.
    pub fn new(
        kind: MatcherKind,
        onto: Option<&'o Ontology>,
        reflexive_subsumption: bool,
    ) -> Result<Self, MatchError> {
        let onto = match (kind, onto) {
            (MatcherKind::PlugIn | MatcherKind::Subsume, None) => {
                return Err(MatchError::MissingOntology(kind))
            }
            (_, Some(o)) => o,
            (_, None) => &EMPTY,
        };
        Ok(Self {
            kind,
            onto,
            reflexive: reflexive_subsumption,
        })
    }

    pub fn kind(&self) -> MatcherKind {
        self.kind
    }

    pub fn ontology(&self) -> &'o Ontology {
        self.onto
    }

    pub fn reflexive(&self) -> bool {
        self.reflexive
    }

    /// Whether `provided` (an output) satisfies `required` (an input).
    pub fn matches(&self, provided: &ParameterDesc, required: &ParameterDesc) -> bool {
        if self.kind == MatcherKind::Equal {
            return provided.name == required.name;
        }
        let (Some(p), Some(r)) = (&provided.concept, &required.concept) else {
            return false;
        };
        match self.kind {
            MatcherKind::Equal => unreachable!(),
            MatcherKind::Exact => p == r,
            MatcherKind::PlugIn => (self.reflexive && p == r) || self.onto.is_strict_subclass(p, r),
            MatcherKind::Subsume => {
                (self.reflexive && p == r) || self.onto.is_strict_subclass(r, p)
            }
        }
    }
}

/// One-shot form of [`Matcher::matches`] with strict subsumption.
pub fn match_params(
    kind: MatcherKind,
    provided: &ParameterDesc,
    required: &ParameterDesc,
    onto: Option<&Ontology>,
) -> Result<bool, MatchError> {
    if kind.is_semantic() && onto.is_none() {
        return Err(MatchError::MissingOntology(kind));
    }
    Ok(Matcher::new(kind, onto, false)?.matches(provided, required))
}
