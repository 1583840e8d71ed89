//! Constraint satisfaction: predicates, instances, exact values, 3-Lin by
//! Gaussian elimination, dictatorship tests and multiplayer games.

mod dictator;
mod game;
mod linear;

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::distributions::JointDistribution;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, PARSE, SIZE_CAP};
use crate::indexing::ProductSpace;
use crate::rational::{self, Prob};
use crate::rng::par_map;

pub use dictator::{dictatorship_test_eval, indicator, influence, influences, SymbolFunction, DICTATOR_EXACT_CAP};
pub use game::{coloring_game, game_value, repeat_game, Game, GameEdge, GameValue};
pub use linear::{gauss_solve_3lin, Equation, Lin3System};

/// Brute-force enumerations are refused above this many assignments.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

pub(crate) fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `P: Σᵏ → {0, 1}` stored as a truth table in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    arity: usize,
    alphabet: usize,
    table: Vec<bool>,
}

impl Predicate {
    pub fn new(arity: usize, alphabet: usize, table: Vec<bool>) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::domain(DOMAIN, "empty alphabet"));
        }
        let size = ProductSpace::uniform(alphabet, arity)?.total_size();
        if table.len() != size {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("truth table has {} entries, expected {alphabet}^{arity} = {size}", table.len()),
            ));
        }
        Ok(Predicate { arity, alphabet, table })
    }

    pub fn from_fn(arity: usize, alphabet: usize, f: impl Fn(&[usize]) -> bool) -> Result<Self> {
        let space = ProductSpace::uniform(alphabet, arity)?;
        Self::new(arity, alphabet, space.points().map(|x| f(&x)).collect())
    }

    /// The 3-SAT clause `ℓ₁ ∨ ℓ₂ ∨ ℓ₃` where literal `i` is `xᵢ` or, when
    /// `negated[i]`, `¬xᵢ`.
    pub fn sat3(negated: [bool; 3]) -> Self {
        Self::from_fn(3, 2, |x| (0..3).any(|i| (x[i] == 1) != negated[i])).expect("valid clause")
    }

    /// `a·x + b·y + c·z = d` over `F_p`.
    pub fn lin3(p: usize, a: usize, b: usize, c: usize, d: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::domain(DOMAIN, format!("3-Lin needs a prime field, got {p}")));
        }
        Self::from_fn(3, p, |x| (a * x[0] + b * x[1] + c * x[2]) % p == d % p)
    }

    pub fn always_true(arity: usize, alphabet: usize) -> Result<Self> {
        Self::from_fn(arity, alphabet, |_| true)
    }

    pub fn not_equal(alphabet: usize) -> Result<Self> {
        Self::from_fn(2, alphabet, |x| x[0] != x[1])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub(crate) fn rank(&self, x: impl IntoIterator<Item = usize>) -> usize {
        x.into_iter().fold(0, |acc, s| acc * self.alphabet + s)
    }

    pub fn eval(&self, x: &[usize]) -> Result<bool> {
        if x.len() != self.arity || x.iter().any(|&s| s >= self.alphabet) {
            return Err(Error::domain(DOMAIN, format!("{x:?} is not a point of [{}]^{}", self.alphabet, self.arity)));
        }
        Ok(self.table[self.rank(x.iter().copied())])
    }

    pub fn accepting(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    /// `Pr_{x∼μ}[P(x) = 1]`, exactly.
    pub fn acceptance_probability(&self, mu: &JointDistribution) -> Result<Prob> {
        self.check_distribution(mu)?;
        Ok(mu
            .atoms()
            .iter()
            .filter(|a| self.table[self.rank(a.tuple.iter().copied())])
            .fold(Prob::zero(), |acc, a| acc + &a.p))
    }

    pub(crate) fn check_distribution(&self, mu: &JointDistribution) -> Result<()> {
        if mu.arity() != self.arity || mu.alphabets().iter().any(|&m| m != self.alphabet) {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!(
                    "distribution over {:?} does not match a {}-ary predicate over {} symbols",
                    mu.alphabets(),
                    self.arity,
                    self.alphabet
                ),
            ));
        }
        Ok(())
    }

    pub fn to_bitstring(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(arity: usize, alphabet: usize, bits: &str) -> Result<Self> {
        let table = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::domain(PARSE, format!("truth table character {c:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(arity, alphabet, table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub vars: Vec<usize>,
    /// Index into the instance's predicate list.
    pub predicate: usize,
}

/// Variables over a common alphabet with a list of predicate constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct CspInstance {
    vars: usize,
    alphabet: usize,
    predicates: Vec<Predicate>,
    constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(vars: usize, alphabet: usize) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::domain(DOMAIN, "empty alphabet"));
        }
        Ok(CspInstance {
            vars,
            alphabet,
            predicates: Vec::new(),
            constraints: Vec::new(),
        })
    }

    /// Register `p`, reusing an identical predicate if one is present.
    pub fn add_predicate(&mut self, p: Predicate) -> Result<usize> {
        if p.alphabet != self.alphabet {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("predicate over {} symbols in an instance over {}", p.alphabet, self.alphabet),
            ));
        }
        if let Some(i) = self.predicates.iter().position(|q| *q == p) {
            return Ok(i);
        }
        self.predicates.push(p);
        Ok(self.predicates.len() - 1)
    }

    pub fn add_constraint(&mut self, vars: Vec<usize>, predicate: usize) -> Result<()> {
        let p = self
            .predicates
            .get(predicate)
            .ok_or_else(|| Error::domain(DOMAIN, format!("unknown predicate {predicate}")))?;
        if vars.len() != p.arity {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("{} variables for a {}-ary predicate", vars.len(), p.arity),
            ));
        }
        if let Some(&v) = vars.iter().find(|&&v| v >= self.vars) {
            return Err(Error::domain(DOMAIN, format!("variable {v} out of range for {} variables", self.vars)));
        }
        self.constraints.push(Constraint { vars, predicate });
        Ok(())
    }

    pub fn push(&mut self, vars: Vec<usize>, p: Predicate) -> Result<()> {
        let i = self.add_predicate(p)?;
        self.add_constraint(vars, i)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn satisfied(&self, assignment: &[usize]) -> Result<usize> {
        if assignment.len() != self.vars || assignment.iter().any(|&s| s >= self.alphabet) {
            return Err(Error::domain(DOMAIN, format!("not an assignment of {} variables", self.vars)));
        }
        Ok(self.count_satisfied(assignment))
    }

    fn count_satisfied(&self, a: &[usize]) -> usize {
        self.constraints
            .iter()
            .filter(|c| {
                let p = &self.predicates[c.predicate];
                p.table[p.rank(c.vars.iter().map(|&v| a[v]))]
            })
            .count()
    }

    /// Fraction of constraints satisfied by `assignment`; 1 for an empty instance.
    pub fn value_of(&self, assignment: &[usize]) -> Result<Prob> {
        let s = self.satisfied(assignment)?;
        Ok(self.fraction(s))
    }

    fn fraction(&self, satisfied: usize) -> Prob {
        if self.constraints.is_empty() {
            rational::one()
        } else {
            rational::ratio(satisfied as i64, self.constraints.len() as i64)
        }
    }

    pub fn to_json(&self) -> CspJson {
        CspJson {
            vars: self.vars,
            alphabet: self.alphabet,
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintJson {
                    vars: c.vars.clone(),
                    table: self.predicates[c.predicate].to_bitstring(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &CspJson) -> Result<Self> {
        let mut inst = CspInstance::new(j.vars, j.alphabet)?;
        for c in &j.constraints {
            inst.push(c.vars.clone(), Predicate::from_bitstring(c.vars.len(), j.alphabet, &c.table)?)?;
        }
        Ok(inst)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let j: CspJson = serde_json::from_str(text).map_err(|e| Error::domain(PARSE, e.to_string()))?;
        Self::from_json(&j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub vars: Vec<usize>,
    /// Truth table over `Σ^{|vars|}` in lexicographic order, as `0`/`1` characters.
    pub table: String,
}

/// `{ "vars": n, "alphabet": m, "constraints": [ { "vars": [...], "table": "0110..." } ] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspJson {
    pub vars: usize,
    pub alphabet: usize,
    pub constraints: Vec<ConstraintJson>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspValue {
    pub value: Prob,
    pub satisfied: usize,
    pub constraints: usize,
    /// The lexicographically first optimal assignment.
    pub assignment: Vec<usize>,
}

impl Serialize for CspValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("CspValue", 5)?;
        st.serialize_field("value", &rational::format(&self.value))?;
        st.serialize_field("value_f64", &rational::to_f64(&self.value))?;
        st.serialize_field("satisfied", &self.satisfied)?;
        st.serialize_field("constraints", &self.constraints)?;
        st.serialize_field("assignment", &self.assignment)?;
        st.end()
    }
}

/// `val(I) = max_A val_I(A)` by exhaustive search over `Σ^vars`.
///
/// An instance without constraints has value 1.
pub fn csp_value_bruteforce(inst: &CspInstance, threads: usize) -> Result<CspValue> {
    let total = (inst.alphabet as f64).powi(inst.vars as i32);
    if total > BRUTE_FORCE_CAP {
        return Err(Error::domain(
            SIZE_CAP,
            format!(
                "{total:.3e} assignments exceed the brute-force cap {BRUTE_FORCE_CAP:e}; use a heuristic such as random_assignment_value"
            ),
        ));
    }
    let total = total as usize;
    let m = inst.alphabet;
    let chunks = threads.max(1) * 4;
    let size = total.div_ceil(chunks).max(1);
    let parts = par_map(total.div_ceil(size), threads, |c| {
        let lo = c * size;
        let hi = (lo + size).min(total);
        let mut a = vec![0usize; inst.vars];
        let mut rest = lo;
        for v in (0..inst.vars).rev() {
            a[v] = rest % m;
            rest /= m;
        }
        let mut best = (0usize, lo);
        let mut first = true;
        for idx in lo..hi {
            let s = inst.count_satisfied(&a);
            if first || s > best.0 {
                best = (s, idx);
                first = false;
            }
            for v in (0..inst.vars).rev() {
                a[v] += 1;
                if a[v] < m {
                    break;
                }
                a[v] = 0;
            }
        }
        best
    });
    let (satisfied, idx) = parts.into_iter().fold((0, 0), |acc, p| if p.0 > acc.0 { p } else { acc });
    let mut assignment = vec![0; inst.vars];
    let mut rest = idx;
    for v in (0..inst.vars).rev() {
        assignment[v] = rest % m;
        rest /= m;
    }
    Ok(CspValue {
        value: inst.fraction(satisfied),
        satisfied,
        constraints: inst.constraints.len(),
        assignment,
    })
}

/// Expected value of a uniformly random assignment: the average over
/// constraints of `|P⁻¹(1)| / |Σ|ᵏ`. An instance without constraints has value 1.
pub fn random_assignment_value(inst: &CspInstance) -> Prob {
    if inst.constraints.is_empty() {
        return rational::one();
    }
    let mut cache = BTreeMap::new();
    let sum = inst.constraints.iter().fold(Prob::zero(), |acc, c| {
        let r = cache
            .entry(c.predicate)
            .or_insert_with(|| {
                let p = &inst.predicates[c.predicate];
                rational::ratio(p.accepting() as i64, p.table.len() as i64)
            })
            .clone();
        acc + r
    });
    sum / rational::ratio(inst.constraints.len() as i64, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapVerdict {
    /// Value at least the completeness threshold `c`.
    Completeness,
    /// Value at most the soundness threshold `s`.
    Soundness,
    Between,
}

/// Place a value relative to the thresholds of a gap problem `gap-CSP[c, s]`.
pub fn classify_gap(value: &Prob, c: &Prob, s: &Prob) -> Result<GapVerdict> {
    if s > c {
        return Err(Error::domain(DOMAIN, "soundness threshold above completeness threshold"));
    }
    Ok(if value >= c {
        GapVerdict::Completeness
    } else if value <= s {
        GapVerdict::Soundness
    } else {
        GapVerdict::Between
    })
}
