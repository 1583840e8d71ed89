//! JSON schemas for distributions, function tables, witnesses and point sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{FunctionTable, ProductMeasure};
use crate::distributions::{Atom, JointDistribution, SupportPolicy};
use crate::embeddings::{EmbeddingWitness, FiniteAbelianGroup, TargetGroup};
use crate::error::{Error, Result, PARSE};
use crate::indexing::ProductSpace;
use crate::rational;

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::domain(PARSE, e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub tuple: Vec<usize>,
    pub p: String,
}

/// `{ "alphabets": [m₁,…,m_k], "atoms": [ { "tuple": [...], "p": "num/den" } ] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub alphabets: Vec<usize>,
    pub atoms: Vec<AtomJson>,
}

impl From<&JointDistribution> for DistributionJson {
    fn from(mu: &JointDistribution) -> Self {
        DistributionJson {
            alphabets: mu.alphabets().to_vec(),
            atoms: mu
                .atoms()
                .iter()
                .map(|a| AtomJson {
                    tuple: a.tuple.clone(),
                    p: rational::format(&a.p),
                })
                .collect(),
        }
    }
}

impl DistributionJson {
    pub fn to_distribution(&self, policy: SupportPolicy) -> Result<JointDistribution> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Ok(Atom::new(a.tuple.clone(), rational::parse(&a.p)?)))
            .collect::<Result<Vec<_>>>()?;
        JointDistribution::with_policy(self.alphabets.clone(), atoms, policy)
    }
}

pub fn distribution_to_json(mu: &JointDistribution) -> Value {
    serde_json::to_value(DistributionJson::from(mu)).expect("distribution serializes")
}

pub fn distribution_from_str(text: &str, policy: SupportPolicy) -> Result<JointDistribution> {
    let parsed: DistributionJson = serde_json::from_str(text).map_err(parse_error)?;
    parsed.to_distribution(policy)
}

/// `{ "radices": [...], "measure": [[rationals]…], "values": [[re,im]…] }` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionTableJson {
    pub radices: Vec<usize>,
    pub measure: Vec<Vec<String>>,
    pub values: Vec<[f64; 2]>,
}

impl From<&FunctionTable> for FunctionTableJson {
    fn from(f: &FunctionTable) -> Self {
        FunctionTableJson {
            radices: f.space().radices().to_vec(),
            measure: (0..f.arity())
                .map(|i| f.measure().exact(i).iter().map(rational::format).collect())
                .collect(),
            values: f.values().iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

impl FunctionTableJson {
    pub fn to_table(&self) -> Result<FunctionTable> {
        let space = ProductSpace::new(self.radices.clone())?;
        let exact = self
            .measure
            .iter()
            .map(|nu| nu.iter().map(|p| rational::parse(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let measure = ProductMeasure::new(exact)?;
        let values = self.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        FunctionTable::new(space, values, measure)
    }
}

pub fn table_to_json(f: &FunctionTable) -> Value {
    serde_json::to_value(FunctionTableJson::from(f)).expect("table serializes")
}

pub fn table_from_str(text: &str) -> Result<FunctionTable> {
    let parsed: FunctionTableJson = serde_json::from_str(text).map_err(parse_error)?;
    parsed.to_table()
}

/// `{ "group": [d₁,…] | "Z", "sigma": [[v per symbol] per coordinate] }`.
pub fn witness_from_str(text: &str) -> Result<EmbeddingWitness> {
    let v: Value = serde_json::from_str(text).map_err(parse_error)?;
    witness_from_value(&v)
}

pub fn witness_from_value(v: &Value) -> Result<EmbeddingWitness> {
    let bad = |what: &str| Error::domain(PARSE, format!("witness JSON: {what}"));
    let group = match v.get("group") {
        Some(Value::String(s)) if s == "Z" => TargetGroup::Integers,
        Some(Value::Array(orders)) => TargetGroup::Finite(FiniteAbelianGroup::new(
            orders
                .iter()
                .map(|o| o.as_u64().ok_or_else(|| bad("group orders must be integers")))
                .collect::<Result<Vec<_>>>()?,
        )?),
        _ => return Err(bad("\"group\" must be \"Z\" or a list of orders")),
    };
    let sigma = v.get("sigma").and_then(Value::as_array).ok_or_else(|| bad("missing \"sigma\""))?;
    let element = |e: &Value| -> Result<Vec<i64>> {
        match e {
            Value::Number(n) => n.as_i64().map(|x| vec![x]).ok_or_else(|| bad("values must be integers")),
            Value::Array(parts) => parts
                .iter()
                .map(|p| p.as_i64().ok_or_else(|| bad("values must be integers")))
                .collect(),
            _ => Err(bad("values must be integers or integer lists")),
        }
    };
    let sigma = sigma
        .iter()
        .map(|coord| {
            coord
                .as_array()
                .ok_or_else(|| bad("each coordinate map must be a list"))?
                .iter()
                .map(element)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingWitness::new(group, sigma)
}

/// Bitmask with bit `i` set when point `i` is a member, as a hexadecimal number.
pub fn mask_to_hex(mask: &[u64], size: usize) -> String {
    let digits = size.div_ceil(4).max(1);
    (0..digits)
        .rev()
        .map(|d| {
            let bit = d * 4;
            let nibble = (mask.get(bit / 64).copied().unwrap_or(0) >> (bit % 64)) & 0xf;
            char::from_digit(nibble as u32, 16).expect("nibble is a hex digit")
        })
        .collect()
}

pub fn mask_from_hex(text: &str, size: usize) -> Result<Vec<u64>> {
    let text = text.trim().trim_start_matches("0x");
    let mut mask = vec![0u64; size.div_ceil(64).max(1)];
    for (d, ch) in text.chars().rev().enumerate() {
        let nibble = ch
            .to_digit(16)
            .ok_or_else(|| Error::domain(PARSE, format!("not a hexadecimal digit: {ch:?}")))? as u64;
        for b in 0..4 {
            if nibble >> b & 1 == 1 {
                let bit = d * 4 + b;
                if bit >= size {
                    return Err(Error::domain(PARSE, format!("point {bit} outside a space of {size} points")));
                }
                mask[bit / 64] |= 1 << (bit % 64);
            }
        }
    }
    Ok(mask)
}
