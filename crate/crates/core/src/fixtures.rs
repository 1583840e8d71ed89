//! Named distributions and predicates, generated in code.
//!
//! The JSON files under `fixtures/` are produced by [`write_all`] and checked
//! against it by the test suite.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::csp::Predicate;
use crate::distributions::JointDistribution;
use crate::error::{Error, Result, DOMAIN};
use crate::io::distribution_to_json;
use crate::patterns::{pattern_distribution, PatternFamily};

/// Names accepted by [`distribution`].
pub const DISTRIBUTIONS: &[&str] = &[
    "ap3_full_p3",
    "ap3_full_p5",
    "ap3_somewhat_p3",
    "ap3_somewhat_p5",
    "ap3_restricted_p3",
    "ap3_restricted_p5",
    "dhj3",
    "full_support_3x3x3",
];

/// Names accepted by [`predicates`].
pub const PREDICATE_SETS: &[&str] = &["sat3", "lin3_p2", "lin3_p3", "lin3_p5"];

pub fn distribution(name: &str) -> Result<JointDistribution> {
    let unknown = || Error::domain(DOMAIN, format!("unknown fixture {name:?}; known: {}", DISTRIBUTIONS.join(", ")));
    match name {
        "dhj3" => pattern_distribution(PatternFamily::CombLine(3), 3),
        "full_support_3x3x3" => JointDistribution::full_support(vec![3; 3]),
        _ => {
            let (family, p) = name.rsplit_once("_p").ok_or_else(unknown)?;
            let p: usize = p.parse().map_err(|_| unknown())?;
            let family = match family {
                "ap3_full" => PatternFamily::Ap3Full,
                "ap3_somewhat" => PatternFamily::Ap3Somewhat,
                "ap3_restricted" => PatternFamily::Ap3Restricted,
                _ => return Err(unknown()),
            };
            if !DISTRIBUTIONS.contains(&name) {
                return Err(unknown());
            }
            pattern_distribution(family, p)
        }
    }
}

/// The eight 3-SAT clauses, or every 3-Lin predicate `ax + by + cz = d` over
/// `F_p` with nonzero `a, b, c`.
pub fn predicates(name: &str) -> Result<Vec<Predicate>> {
    match name {
        "sat3" => Ok((0..8)
            .map(|m| Predicate::sat3([m & 1 == 1, m & 2 == 2, m & 4 == 4]))
            .collect()),
        _ => {
            let p: usize = name
                .strip_prefix("lin3_p")
                .and_then(|p| p.parse().ok())
                .filter(|_| PREDICATE_SETS.contains(&name))
                .ok_or_else(|| Error::domain(DOMAIN, format!("unknown predicate set {name:?}; known: {}", PREDICATE_SETS.join(", "))))?;
            let mut out = Vec::new();
            for a in 1..p {
                for b in 1..p {
                    for c in 1..p {
                        for d in 0..p {
                            out.push(Predicate::lin3(p, a, b, c, d)?);
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// `{ "arity": k, "alphabet": m, "tables": ["0110…", …] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSetJson {
    pub arity: usize,
    pub alphabet: usize,
    pub tables: Vec<String>,
}

impl PredicateSetJson {
    pub fn from_predicates(ps: &[Predicate]) -> Self {
        PredicateSetJson {
            arity: ps.first().map_or(0, Predicate::arity),
            alphabet: ps.first().map_or(0, Predicate::alphabet),
            tables: ps.iter().map(Predicate::to_bitstring).collect(),
        }
    }

    pub fn to_predicates(&self) -> Result<Vec<Predicate>> {
        self.tables
            .iter()
            .map(|t| Predicate::from_bitstring(self.arity, self.alphabet, t))
            .collect()
    }
}

/// Every fixture as `(file name, JSON)`.
pub fn all() -> Result<Vec<(String, Value)>> {
    let mut out = Vec::new();
    for name in DISTRIBUTIONS {
        out.push((format!("{name}.json"), distribution_to_json(&distribution(name)?)));
    }
    for name in PREDICATE_SETS {
        let set = PredicateSetJson::from_predicates(&predicates(name)?);
        out.push((format!("{name}.json"), serde_json::to_value(set).expect("predicate set serializes")));
    }
    Ok(out)
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("fixture serializes");
    s.push('\n');
    s
}

pub fn write_all(dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::domain(DOMAIN, format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for (name, v) in all()? {
        let path = dir.join(&name);
        std::fs::write(&path, render(&v)).map_err(|e| Error::domain(DOMAIN, format!("{}: {e}", path.display())))?;
        names.push(name);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in DISTRIBUTIONS {
            distribution(name).unwrap();
        }
        assert_eq!(distribution("ap3_full_p3").unwrap().support_size(), 9);
        assert_eq!(distribution("dhj3").unwrap().support_size(), 4);
        assert!(distribution("ap3_full_p7").is_err());
        assert!(distribution("nope").is_err());
        assert_eq!(predicates("sat3").unwrap().len(), 8);
        assert_eq!(predicates("lin3_p3").unwrap().len(), 24);
        assert!(predicates("lin3_p4").is_err());
    }

    #[test]
    fn predicate_sets_round_trip() {
        let ps = predicates("lin3_p2").unwrap();
        assert_eq!(PredicateSetJson::from_predicates(&ps).to_predicates().unwrap(), ps);
    }
}
