//! Abelian and `(ℤ,+)`-embeddings of a support, by exact integer linear algebra.
//!
//! An embedding is a choice of maps `σ_i : Σ_i → A` with `σ₁(x₁)+…+σ_k(x_k) = 0`
//! on every atom, not all constant. Fixing `σ_i(0) = 0` for every coordinate
//! but the first picks one representative per class of embeddings modulo the
//! constant solutions, so the nontrivial embeddings into `A` are exactly the
//! nonzero `A`-points of the kernel of the reduced constraint matrix. Its Smith
//! normal form then describes every target group at once.

mod snf;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

pub use snf::{determinant, identity, matmul, smith_normal_form, IntMatrix, SmithForm};

use crate::distributions::JointDistribution;
use crate::error::{Error, Result, ARITY_MISMATCH, INFINITE_EMBEDDING};

/// `ℤ_{d₁} × … × ℤ_{d_r}`; the empty list is the trivial group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct FiniteAbelianGroup {
    orders: Vec<u64>,
}

impl FiniteAbelianGroup {
    pub fn new(orders: Vec<u64>) -> Result<Self> {
        if orders.iter().any(|&d| d < 2) {
            return Err(Error::domain(crate::error::DOMAIN, format!("cyclic orders must be at least 2: {orders:?}")));
        }
        Ok(FiniteAbelianGroup { orders })
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { orders: vec![] }
    }

    pub fn cyclic(d: u64) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    /// Group order, saturating at `u64::MAX`.
    pub fn order(&self) -> u64 {
        self.orders.iter().fold(1u64, |acc, &d| acc.saturating_mul(d))
    }

    pub fn add(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        self.reduce(&a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>())
    }

    pub fn reduce(&self, a: &[i64]) -> Vec<i64> {
        a.iter().zip(&self.orders).map(|(&x, &d)| x.rem_euclid(d as i64)).collect()
    }

    pub fn is_zero(&self, a: &[i64]) -> bool {
        self.reduce(a).iter().all(|&x| x == 0)
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.orders.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.orders.iter().map(|d| format!("Z_{d}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetGroup {
    Integers,
    Finite(FiniteAbelianGroup),
}

impl TargetGroup {
    pub fn element_len(&self) -> usize {
        match self {
            TargetGroup::Integers => 1,
            TargetGroup::Finite(g) => g.orders.len(),
        }
    }

    fn normalize(&self, a: &[i64]) -> Vec<i64> {
        match self {
            TargetGroup::Integers => a.to_vec(),
            TargetGroup::Finite(g) => g.reduce(a),
        }
    }
}

/// Maps `σ_i : Σ_i → A`; group elements are coordinate vectors of the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingWitness {
    group: TargetGroup,
    sigma: Vec<Vec<Vec<i64>>>,
}

impl EmbeddingWitness {
    pub fn new(group: TargetGroup, sigma: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        let len = group.element_len();
        if sigma.iter().flatten().any(|e| e.len() != len) {
            return Err(Error::domain(ARITY_MISMATCH, format!("group elements must have {len} components")));
        }
        let sigma = sigma
            .into_iter()
            .map(|s| s.iter().map(|e| group.normalize(e)).collect())
            .collect();
        Ok(EmbeddingWitness { group, sigma })
    }

    /// A witness into a cyclic group (or `ℤ`) with scalar values.
    pub fn scalar(group: TargetGroup, sigma: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(group, sigma.into_iter().map(|s| s.into_iter().map(|v| vec![v]).collect()).collect())
    }

    pub fn group(&self) -> &TargetGroup {
        &self.group
    }

    pub fn sigma(&self) -> &[Vec<Vec<i64>>] {
        &self.sigma
    }

    /// Values of a cyclic or integer witness as scalars.
    pub fn scalar_sigma(&self) -> Option<Vec<Vec<i64>>> {
        (self.group.element_len() == 1).then(|| self.sigma.iter().map(|s| s.iter().map(|e| e[0]).collect()).collect())
    }

    pub fn alphabets(&self) -> Vec<usize> {
        self.sigma.iter().map(Vec::len).collect()
    }

    fn is_zero(&self, a: &[i64]) -> bool {
        match &self.group {
            TargetGroup::Integers => a.iter().all(|&x| x == 0),
            TargetGroup::Finite(g) => g.is_zero(a),
        }
    }

    fn sum(&self, tuple: &[usize]) -> Vec<i64> {
        let mut acc = vec![0i64; self.group.element_len()];
        for (i, &s) in tuple.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(&self.sigma[i][s]) {
                *a += v;
            }
            acc = self.group.normalize(&acc);
        }
        acc
    }

    pub fn is_constant(&self, coord: usize) -> bool {
        let s = &self.sigma[coord];
        s.iter().all(|e| e == &s[0])
    }

    /// Translate the first non-constant map so its smallest value is 0, compensating on another coordinate.
    fn normalized(mut self) -> Self {
        let k = self.sigma.len();
        let Some(i) = (0..k).find(|&i| !self.is_constant(i)) else { return self };
        let shift = self.sigma[i].iter().min().cloned().expect("alphabets are nonempty");
        if k < 2 {
            return self;
        }
        let other = if i + 1 < k { k - 1 } else { 0 };
        for e in self.sigma[i].iter_mut() {
            *e = self.group.normalize(&e.iter().zip(&shift).map(|(a, b)| a - b).collect::<Vec<_>>());
        }
        for e in self.sigma[other].iter_mut() {
            *e = self.group.normalize(&e.iter().zip(&shift).map(|(a, b)| a + b).collect::<Vec<_>>());
        }
        self
    }
}

impl Serialize for EmbeddingWitness {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("EmbeddingWitness", 2)?;
        match &self.group {
            TargetGroup::Integers => st.serialize_field("group", "Z")?,
            TargetGroup::Finite(g) => st.serialize_field("group", g.orders())?,
        }
        match self.scalar_sigma() {
            Some(s) => st.serialize_field("sigma", &s)?,
            None => st.serialize_field("sigma", &self.sigma)?,
        }
        st.end()
    }
}

/// One row per support atom, one column per `(coordinate, symbol)`; row `s` has a 1 in each column `(i, s_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    pub rows: Vec<Vec<i64>>,
    pub columns: Vec<(usize, usize)>,
}

impl ConstraintMatrix {
    pub fn to_big(&self) -> IntMatrix {
        self.rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }
}

fn build_matrix(mu: &JointDistribution, columns: Vec<(usize, usize)>) -> ConstraintMatrix {
    let alphabets = mu.alphabets();
    let mut position = vec![vec![None; 0]; alphabets.len()];
    for (i, &m) in alphabets.iter().enumerate() {
        position[i] = vec![None; m];
    }
    for (c, &(i, s)) in columns.iter().enumerate() {
        position[i][s] = Some(c);
    }
    let rows = mu
        .support()
        .map(|t| {
            let mut row = vec![0i64; columns.len()];
            for (i, &s) in t.iter().enumerate() {
                if let Some(c) = position[i][s] {
                    row[c] += 1;
                }
            }
            row
        })
        .collect();
    ConstraintMatrix { rows, columns }
}

/// The full system, with `Σ|Σ_i|` columns.
pub fn constraint_matrix(mu: &JointDistribution) -> ConstraintMatrix {
    let columns = mu
        .alphabets()
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| (0..m).map(move |s| (i, s)))
        .collect();
    build_matrix(mu, columns)
}

/// The system with columns `(i, 0)` removed for every `i ≥ 1`.
pub fn reduced_constraint_matrix(mu: &JointDistribution) -> ConstraintMatrix {
    let columns = mu
        .alphabets()
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| (0..m).filter(move |&s| i == 0 || s != 0).map(move |s| (i, s)))
        .collect();
    build_matrix(mu, columns)
}

/// The solutions of the reduced system over every Abelian group, via `U·M·V = D`.
///
/// Embeddings into `A` correspond to homomorphisms `⊕_j ℤ_{d_j} ⊕ ℤ^{free} → A`;
/// column `c` of the system is sent to row `c` of `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionModule {
    pub alphabets: Vec<usize>,
    pub columns: Vec<(usize, usize)>,
    pub smith: SmithForm,
    pub rank: usize,
}

impl SolutionModule {
    /// Elementary divisors greater than 1, with the index of their generator.
    pub fn torsion(&self) -> Vec<(usize, BigInt)> {
        self.smith
            .divisors()
            .into_iter()
            .enumerate()
            .filter(|(_, d)| !d.is_one())
            .collect()
    }

    pub fn free_rank(&self) -> usize {
        self.columns.len() - self.rank
    }

    /// Map `(i, s) ↦ generator coordinate j` of `V`, zero on the removed columns.
    fn generator_map(&self, j: usize) -> Vec<Vec<BigInt>> {
        let mut sigma: Vec<Vec<BigInt>> = self.alphabets.iter().map(|&m| vec![BigInt::zero(); m]).collect();
        for (c, &(i, s)) in self.columns.iter().enumerate() {
            sigma[i][s] = self.smith.v[c][j].clone();
        }
        sigma
    }

    fn to_i64(values: Vec<Vec<BigInt>>) -> Result<Vec<Vec<i64>>> {
        values
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|v| v.to_i64().ok_or_else(|| Error::internal("embedding value exceeds 64 bits")))
                    .collect()
            })
            .collect()
    }

    /// A `ℤ`-valued solution `Σ_t Bᵗ g_t` over the free generators `g_t`, with
    /// `B` larger than twice every generator value, so two symbols get equal
    /// values only if every `ℤ`-solution agrees on them. Generators that would
    /// overflow 64 bits are left out.
    pub fn z_witness(&self) -> Result<Option<EmbeddingWitness>> {
        if self.free_rank() == 0 {
            return Ok(None);
        }
        let gens: Vec<Vec<Vec<BigInt>>> = (self.rank..self.columns.len()).map(|j| self.generator_map(j)).collect();
        let bound = gens.iter().flatten().flatten().map(|v| v.abs()).max().unwrap_or_else(BigInt::zero);
        let base = bound * 2 + 1;
        let limit = BigInt::from(1u64 << 40);
        let mut sigma = gens[0].clone();
        let mut weight = BigInt::one();
        for g in &gens[1..] {
            weight *= &base;
            let next: Vec<Vec<BigInt>> = sigma
                .iter()
                .zip(g)
                .map(|(s, t)| s.iter().zip(t).map(|(a, b)| a + &weight * b).collect())
                .collect();
            if next.iter().flatten().any(|v| v.abs() > limit) {
                break;
            }
            sigma = next;
        }
        let sigma = Self::to_i64(sigma)?;
        Ok(Some(EmbeddingWitness::scalar(TargetGroup::Integers, sigma)?.normalized()))
    }

    /// A `ℤ_{d_j}`-valued solution from the first torsion generator.
    pub fn torsion_witness(&self) -> Result<Option<EmbeddingWitness>> {
        let Some((j, d)) = self.torsion().into_iter().next() else { return Ok(None) };
        let sigma = self
            .generator_map(j)
            .into_iter()
            .map(|s| s.into_iter().map(|v| v.mod_floor(&d)).collect())
            .collect();
        let d64 = d.to_u64().ok_or_else(|| Error::internal("elementary divisor exceeds 64 bits"))?;
        let witness = EmbeddingWitness::scalar(TargetGroup::Finite(FiniteAbelianGroup::cyclic(d64)?), Self::to_i64(sigma)?)?;
        Ok(Some(witness.normalized()))
    }

    /// The finite part `⊕ ℤ_{d_j}` over elementary divisors `d_j > 1`.
    pub fn torsion_group(&self) -> Result<FiniteAbelianGroup> {
        let orders = self
            .torsion()
            .into_iter()
            .map(|(_, d)| d.to_u64().ok_or_else(|| Error::internal("elementary divisor exceeds 64 bits")))
            .collect::<Result<Vec<_>>>()?;
        FiniteAbelianGroup::new(orders)
    }

    /// The embedding into the torsion group through which every finite embedding factors.
    pub fn universal_embedding(&self) -> Result<Option<EmbeddingWitness>> {
        let group = self.torsion_group()?;
        if group.is_trivial() {
            return Ok(None);
        }
        let gens: Vec<Vec<Vec<BigInt>>> = self.torsion().iter().map(|(j, _)| self.generator_map(*j)).collect();
        let sigma = self
            .alphabets
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                (0..m)
                    .map(|s| gens.iter().map(|g| g[i][s].to_i64().unwrap_or(0)).collect::<Vec<i64>>())
                    .collect()
            })
            .collect();
        if gens.iter().flatten().flatten().any(|v| v.to_i64().is_none()) {
            return Err(Error::internal("embedding value exceeds 64 bits"));
        }
        EmbeddingWitness::new(TargetGroup::Finite(group), sigma).map(Some)
    }
}

pub fn solution_module(mu: &JointDistribution) -> Result<SolutionModule> {
    mu.require_full_support()?;
    let m = reduced_constraint_matrix(mu);
    let smith = smith_normal_form(&m.to_big());
    let rank = smith.rank();
    Ok(SolutionModule {
        alphabets: mu.alphabets().to_vec(),
        columns: m.columns,
        smith,
        rank,
    })
}

/// An integer-valued embedding, if the support admits one.
pub fn detect_z_embedding(mu: &JointDistribution) -> Result<Option<EmbeddingWitness>> {
    let w = solution_module(mu)?.z_witness()?;
    certify(mu, w)
}

/// An embedding into a finite cyclic group, if the support admits any Abelian embedding.
pub fn detect_abelian_embedding(mu: &JointDistribution) -> Result<Option<EmbeddingWitness>> {
    let module = solution_module(mu)?;
    if let Some(w) = module.torsion_witness()? {
        return certify(mu, Some(w));
    }
    let Some(z) = module.z_witness()? else { return Ok(None) };
    let sigma = z.scalar_sigma().expect("integer witnesses are scalar");
    let bound = sigma.iter().flatten().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    let p = next_prime(2 * bound + 1);
    let reduced = EmbeddingWitness::scalar(TargetGroup::Finite(FiniteAbelianGroup::cyclic(p)?), sigma)?.normalized();
    certify(mu, Some(reduced))
}

fn certify(mu: &JointDistribution, w: Option<EmbeddingWitness>) -> Result<Option<EmbeddingWitness>> {
    match w {
        Some(w) if !verify_witness(mu, &w)? => Err(Error::internal("detector produced a witness that fails verification")),
        other => Ok(other),
    }
}

fn next_prime(from: u64) -> u64 {
    let is_prime = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
    (from.max(2)..).find(|&n| is_prime(n)).expect("primes are unbounded")
}

/// The finite group through which all embeddings factor; requires no `ℤ`-embedding.
pub fn canonical_group(mu: &JointDistribution) -> Result<FiniteAbelianGroup> {
    let module = solution_module(mu)?;
    if module.free_rank() > 0 {
        return Err(Error::domain(
            INFINITE_EMBEDDING,
            "the support admits (Z,+)-embeddings, so no finite group captures all embeddings",
        ));
    }
    module.torsion_group()
}

/// True iff every atom sums to zero and not every map is constant.
pub fn verify_witness(mu: &JointDistribution, w: &EmbeddingWitness) -> Result<bool> {
    if w.alphabets() != mu.alphabets() {
        return Err(Error::domain(
            ARITY_MISMATCH,
            format!("witness alphabets {:?} do not match {:?}", w.alphabets(), mu.alphabets()),
        ));
    }
    if (0..w.sigma.len()).all(|i| w.is_constant(i)) {
        return Ok(false);
    }
    Ok(mu.support().all(|t| w.is_zero(&w.sum(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Atom, JointDistribution};
    use crate::rational::ratio;

    fn ap(p: usize, steps: &[usize]) -> JointDistribution {
        let tuples = (0..p)
            .flat_map(|x| steps.iter().map(move |&a| vec![x, (x + a) % p, (x + 2 * a) % p]))
            .collect();
        JointDistribution::uniform_on(vec![p; 3], tuples).unwrap()
    }

    #[test]
    fn constraint_matrix_shape() {
        let mu = ap(3, &[0, 1, 2]);
        let m = constraint_matrix(&mu);
        assert_eq!(m.rows.len(), 9);
        assert_eq!(m.columns.len(), 9);
        assert!(m.rows.iter().all(|r| r.iter().sum::<i64>() == 3));
        assert_eq!(reduced_constraint_matrix(&mu).columns.len(), 7);
    }

    #[test]
    fn ap3_embeds_into_z3() {
        let mu = ap(3, &[0, 1, 2]);
        assert!(detect_z_embedding(&mu).unwrap().is_none());
        let w = detect_abelian_embedding(&mu).unwrap().unwrap();
        assert_eq!(w.group(), &TargetGroup::Finite(FiniteAbelianGroup::cyclic(3).unwrap()));
        // Equivalent to x, −2y, z: after removing constants, a nonzero multiple of it.
        let s = w.scalar_sigma().unwrap();
        let reference = [vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]];
        let gauge = |v: &Vec<i64>| v.iter().map(|x| (x - v[0]).rem_euclid(3)).collect::<Vec<_>>();
        let c = gauge(&s[0])[1];
        assert_ne!(c, 0);
        for (mine, r) in s.iter().zip(&reference) {
            let scaled: Vec<i64> = gauge(r).iter().map(|x| (x * c).rem_euclid(3)).collect();
            assert_eq!(gauge(mine), scaled);
        }
        let group = canonical_group(&mu).unwrap();
        assert!(group.orders().iter().any(|d| d % 3 == 0));
    }

    #[test]
    fn paper_witness_verifies_and_corruption_fails() {
        let mu = ap(3, &[0, 1, 2]);
        let g = TargetGroup::Finite(FiniteAbelianGroup::cyclic(3).unwrap());
        let w = EmbeddingWitness::scalar(g.clone(), vec![vec![0, 1, 2], vec![0, -2, -4], vec![0, 1, 2]]).unwrap();
        assert!(verify_witness(&mu, &w).unwrap());
        let zero = EmbeddingWitness::scalar(g.clone(), vec![vec![0; 3]; 3]).unwrap();
        assert!(!verify_witness(&mu, &zero).unwrap());
        let bumped = EmbeddingWitness::scalar(g, vec![vec![0, 1, 2], vec![0, -2, -3], vec![0, 1, 2]]).unwrap();
        assert!(!verify_witness(&mu, &bumped).unwrap());
    }

    #[test]
    fn restricted_and_somewhat_restricted() {
        for p in [3, 5, 7] {
            let restricted = ap(p, &[0, 1]);
            let z = detect_z_embedding(&restricted).unwrap().unwrap();
            assert_eq!(z.group(), &TargetGroup::Integers);
            assert!(detect_abelian_embedding(&restricted).unwrap().is_some());
            assert_eq!(canonical_group(&restricted).unwrap_err().code(), INFINITE_EMBEDDING);
            if p > 3 {
                let somewhat = ap(p, &[0, 1, 2]);
                assert!(detect_z_embedding(&somewhat).unwrap().is_none());
                assert!(detect_abelian_embedding(&somewhat).unwrap().is_some());
            }
        }
    }

    #[test]
    fn full_support_has_nothing() {
        for (m, k) in [(2, 3), (3, 3), (2, 4)] {
            let mu = JointDistribution::full_support(vec![m; k]).unwrap();
            assert!(detect_z_embedding(&mu).unwrap().is_none());
            assert!(detect_abelian_embedding(&mu).unwrap().is_none());
            assert!(canonical_group(&mu).unwrap().is_trivial());
        }
    }

    #[test]
    fn diagonal_identity_witness() {
        let m = 3;
        let mu = JointDistribution::uniform_on(vec![m; 3], (0..m).map(|x| vec![x; 3]).collect()).unwrap();
        let g = TargetGroup::Finite(FiniteAbelianGroup::cyclic(m as u64).unwrap());
        let w = EmbeddingWitness::scalar(g, vec![vec![0, 1, 2], vec![0, -1, -2], vec![0; 3]]).unwrap();
        assert!(verify_witness(&mu, &w).unwrap());
        assert!(detect_abelian_embedding(&mu).unwrap().is_some());
    }

    #[test]
    fn universal_embedding_verifies() {
        let mu = ap(5, &[0, 1, 2]);
        let module = solution_module(&mu).unwrap();
        assert_eq!(module.free_rank(), 0);
        let u = module.universal_embedding().unwrap().unwrap();
        assert!(verify_witness(&mu, &u).unwrap());
    }

    #[test]
    fn partial_support_rejected() {
        let mu = JointDistribution::with_policy(
            vec![2, 2],
            vec![Atom::new(vec![0, 0], ratio(1, 1))],
            crate::distributions::SupportPolicy::Allow,
        )
        .unwrap();
        assert!(detect_abelian_embedding(&mu).unwrap_err().is_domain());
    }

    #[test]
    fn witness_json_shape() {
        let w = EmbeddingWitness::scalar(TargetGroup::Integers, vec![vec![0, 1], vec![0, -1]]).unwrap();
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"group":"Z","sigma":[[0,1],[0,-1]]}"#);
    }
}
