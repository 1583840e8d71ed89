use num_traits::Zero;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use super::kwise_correlation;
use crate::analysis::{FunctionTable, ProductMeasure};
use crate::distributions::{Atom, JointDistribution, SupportPolicy};
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN};
use crate::estimate::{ComplexEstimate, Options};
use crate::indexing::ProductSpace;
use crate::rational::{self, Prob};

/// Both sides of `|E_μ[f₁f₂f₃f₄]|² ≤ E_{μ'}[F₁F₂F₃]` with the paired distribution.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// Distribution over pairs: symbol `(x, x')` of coordinate `i` is encoded as `x·|Σᵢ| + x'`.
    pub paired: JointDistribution,
    pub lifted: Vec<FunctionTable>,
    pub lhs: ComplexEstimate,
    pub lhs_sq: f64,
    pub rhs: ComplexEstimate,
    /// Mass of the equal-pair tuples `((x,x),(y,y),(z,z))`.
    pub diagonal_mass: Prob,
    /// Smallest atom probability of the original distribution.
    pub alpha: Prob,
}

impl Reduction {
    /// `lhs² − rhs`; positive values violate the inequality.
    pub fn violation(&self) -> f64 {
        self.lhs_sq - self.rhs.value.re
    }
}

impl Serialize for Reduction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Reduction", 7)?;
        st.serialize_field("lhs", &self.lhs)?;
        st.serialize_field("lhs_sq", &self.lhs_sq)?;
        st.serialize_field("rhs", &self.rhs)?;
        st.serialize_field("violation", &self.violation())?;
        st.serialize_field("diagonal_mass", &rational::format(&self.diagonal_mass))?;
        st.serialize_field("alpha", &rational::format(&self.alpha))?;
        st.serialize_field("paired_distribution", &crate::io::distribution_to_json(&self.paired))?;
        st.end()
    }
}

/// Sample `(x,y,z,w) ∼ μ`, then `(x',y',z',w') ∼ μ` given `w' = w`, and keep
/// `((x,x'),(y,y'),(z,z'))`.
pub fn paired_distribution(mu: &JointDistribution) -> Result<JointDistribution> {
    if mu.arity() != 4 {
        return Err(Error::domain(ARITY_MISMATCH, format!("pairing needs a 4-ary distribution, got arity {}", mu.arity())));
    }
    let last = mu.marginal_probs(3);
    if let Some(s) = last.iter().position(Zero::is_zero) {
        return Err(Error::domain(DOMAIN, format!("symbol {s} of the last coordinate has zero probability")));
    }
    let m = mu.alphabets();
    let mut atoms = Vec::new();
    for a in mu.atoms() {
        for b in mu.atoms().iter().filter(|b| b.tuple[3] == a.tuple[3]) {
            let tuple = (0..3).map(|i| a.tuple[i] * m[i] + b.tuple[i]).collect();
            atoms.push(Atom::new(tuple, &a.p * &b.p / &last[a.tuple[3]]));
        }
    }
    JointDistribution::with_policy((0..3).map(|i| m[i] * m[i]).collect(), atoms, SupportPolicy::Allow)
}

/// `F(x, x') = f(x)·conj f(x')` on `(Σ²)ⁿ`.
fn lift(f: &FunctionTable, measure: ProductMeasure) -> Result<FunctionTable> {
    let n = f.arity();
    let m: Vec<usize> = f.space().radices().to_vec();
    let space = ProductSpace::new(m.iter().map(|r| r * r).collect())?;
    let values = space
        .points()
        .map(|u| {
            let x: Vec<usize> = (0..n).map(|j| u[j] / m[j]).collect();
            let y: Vec<usize> = (0..n).map(|j| u[j] % m[j]).collect();
            let fx = f.values()[f.space().index_of(&x).expect("point in range")];
            let fy = f.values()[f.space().index_of(&y).expect("point in range")];
            fx * fy.conj()
        })
        .collect();
    FunctionTable::new(space, values, measure)
}

pub fn reduce_arity_4_to_3(mu: &JointDistribution, fs: [&FunctionTable; 4], opts: &Options) -> Result<Reduction> {
    let paired = paired_distribution(mu)?;
    let lhs = kwise_correlation(mu, &fs, opts)?;
    let n = fs[0].arity();
    let marginals = paired.marginal_measure();
    let lifted = (0..3)
        .map(|i| lift(fs[i], ProductMeasure::power(marginals.exact(i), n)?))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&FunctionTable> = lifted.iter().collect();
    let rhs = kwise_correlation(&paired, &refs, opts)?;
    let m = mu.alphabets();
    let diagonal_mass = paired
        .atoms()
        .iter()
        .filter(|a| (0..3).all(|i| a.tuple[i] / m[i] == a.tuple[i] % m[i]))
        .fold(rational::zero(), |acc, a| acc + &a.p);
    Ok(Reduction {
        paired,
        lifted,
        lhs_sq: lhs.value.norm_sqr(),
        lhs,
        rhs,
        diagonal_mass,
        alpha: mu.min_atom_probability(),
    })
}

#[cfg(test)]
fn real_part(v: num_complex::Complex64, tol: f64) -> Result<f64> {
    if v.im.abs() > tol {
        return Err(Error::internal(format!("expected a real value, got {v}")));
    }
    Ok(v.re)
}
