//! Joint distributions over `Σ₁ × … × Σ_k` with exact probabilities, their
//! marginals, and the connectivity hierarchy of their supports.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::analysis::ProductMeasure;
use crate::embeddings::{detect_abelian_embedding, detect_z_embedding, EmbeddingWitness};
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN};
use crate::indexing::ProductSpace;
use crate::rational::{self, Prob};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub tuple: Vec<usize>,
    pub p: Prob,
}

impl Atom {
    pub fn new(tuple: Vec<usize>, p: Prob) -> Self {
        Atom { tuple, p }
    }
}

/// What to do with alphabet symbols that carry no marginal mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportPolicy {
    #[default]
    Reject,
    /// Relabel each coordinate onto the symbols that occur, in increasing order.
    Shrink,
    /// Keep the alphabets as given; embedding and degree computations will refuse the result.
    Allow,
}

/// A probability distribution given by its atoms, with atoms merged and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    alphabets: Vec<usize>,
    atoms: Vec<Atom>,
    weights: Vec<f64>,
    marginals: Vec<Vec<Prob>>,
}

impl JointDistribution {
    pub fn new(alphabets: Vec<usize>, atoms: Vec<Atom>) -> Result<Self> {
        Self::with_policy(alphabets, atoms, SupportPolicy::Reject)
    }

    pub fn with_policy(alphabets: Vec<usize>, atoms: Vec<Atom>, policy: SupportPolicy) -> Result<Self> {
        if alphabets.is_empty() {
            return Err(Error::domain(DOMAIN, "a distribution needs at least one coordinate"));
        }
        if let Some(i) = alphabets.iter().position(|&m| m == 0) {
            return Err(Error::domain(DOMAIN, format!("alphabet {i} is empty")));
        }
        let k = alphabets.len();
        let mut merged: BTreeMap<Vec<usize>, Prob> = BTreeMap::new();
        for atom in atoms {
            if atom.tuple.len() != k {
                return Err(Error::domain(
                    ARITY_MISMATCH,
                    format!("atom {:?} has arity {} but the distribution has {k}", atom.tuple, atom.tuple.len()),
                ));
            }
            if let Some((i, &s)) = atom.tuple.iter().enumerate().find(|(i, &s)| s >= alphabets[*i]) {
                return Err(Error::domain(
                    DOMAIN,
                    format!("symbol {s} outside alphabet {i} of size {}", alphabets[i]),
                ));
            }
            if !atom.p.is_positive() {
                return Err(Error::domain(
                    DOMAIN,
                    format!("atom {:?} has non-positive probability {}", atom.tuple, rational::format(&atom.p)),
                ));
            }
            *merged.entry(atom.tuple).or_insert_with(Prob::zero) += atom.p;
        }
        let total: Prob = merged.values().sum();
        if !total.is_one() {
            return Err(Error::domain(
                DOMAIN,
                format!("probabilities sum to {} instead of 1", rational::format(&total)),
            ));
        }
        let mut alphabets = alphabets;
        let mut atoms: Vec<Atom> = merged.into_iter().map(|(tuple, p)| Atom { tuple, p }).collect();
        let used = used_symbols(&alphabets, &atoms);
        let missing: Vec<(usize, usize)> = used
            .iter()
            .enumerate()
            .flat_map(|(i, u)| u.iter().enumerate().filter(|(_, &x)| !x).map(move |(s, _)| (i, s)))
            .collect();
        if !missing.is_empty() {
            match policy {
                SupportPolicy::Reject => {
                    let (i, s) = missing[0];
                    return Err(Error::domain(
                        DOMAIN,
                        format!("symbol {s} of coordinate {i} has zero marginal probability"),
                    ));
                }
                SupportPolicy::Allow => {}
                SupportPolicy::Shrink => {
                    let relabel: Vec<Vec<usize>> = used
                        .iter()
                        .map(|u| {
                            let mut next = 0;
                            u.iter()
                                .map(|&x| {
                                    let label = next;
                                    if x {
                                        next += 1;
                                    }
                                    label
                                })
                                .collect()
                        })
                        .collect();
                    alphabets = used.iter().map(|u| u.iter().filter(|&&x| x).count()).collect();
                    for atom in &mut atoms {
                        for (i, s) in atom.tuple.iter_mut().enumerate() {
                            *s = relabel[i][*s];
                        }
                    }
                }
            }
        }
        let weights = atoms.iter().map(|a| rational::to_f64(&a.p)).collect();
        let marginals = (0..k)
            .map(|i| {
                let mut m = vec![Prob::zero(); alphabets[i]];
                for a in &atoms {
                    m[a.tuple[i]] += &a.p;
                }
                m
            })
            .collect();
        Ok(JointDistribution {
            alphabets,
            atoms,
            weights,
            marginals,
        })
    }

    /// Uniform distribution on the given distinct tuples.
    pub fn uniform_on(alphabets: Vec<usize>, tuples: Vec<Vec<usize>>) -> Result<Self> {
        Self::uniform_on_with(alphabets, tuples, SupportPolicy::Reject)
    }

    pub fn uniform_on_with(alphabets: Vec<usize>, tuples: Vec<Vec<usize>>, policy: SupportPolicy) -> Result<Self> {
        if tuples.is_empty() {
            return Err(Error::domain(DOMAIN, "empty support"));
        }
        let mut sorted = tuples.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != tuples.len() {
            return Err(Error::domain(DOMAIN, "support tuples must be distinct"));
        }
        let p = rational::ratio(1, tuples.len() as i64);
        Self::with_policy(alphabets, tuples.into_iter().map(|t| Atom::new(t, p.clone())).collect(), policy)
    }

    /// The full product `ν₁ ⊗ … ⊗ ν_k` (zero-mass points omitted).
    pub fn product(measure: &ProductMeasure) -> Result<Self> {
        let space = ProductSpace::new(measure.radices())?;
        let atoms = space
            .points()
            .map(|x| {
                let p: Prob = x.iter().enumerate().map(|(i, &s)| measure.exact(i)[s].clone()).product();
                Atom::new(x, p)
            })
            .filter(|a| a.p.is_positive())
            .collect();
        Self::with_policy(measure.radices(), atoms, SupportPolicy::Allow)
    }

    /// A random distribution: each tuple joins the support with probability
    /// `density`, then each symbol missing from its marginal gets one random
    /// tuple. Weights are random integers in `1..=weight_max`, normalized.
    pub fn random(alphabets: Vec<usize>, density: f64, weight_max: u32, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) || weight_max == 0 {
            return Err(Error::domain(DOMAIN, format!("density {density} or weight bound {weight_max} out of range")));
        }
        let space = ProductSpace::new(alphabets.clone())?;
        let mut r = rng::rng(seed);
        let mut chosen: Vec<bool> = (0..space.total_size()).map(|_| r.gen_bool(density)).collect();
        for (i, &m) in alphabets.iter().enumerate() {
            for s in 0..m {
                if !(0..space.total_size()).any(|x| chosen[x] && space.digit(x, i) == s) {
                    let mut t: Vec<usize> = alphabets.iter().map(|&mj| r.gen_range(0..mj)).collect();
                    t[i] = s;
                    chosen[space.index_of(&t)?] = true;
                }
            }
        }
        let raw: Vec<(Vec<usize>, i64)> = (0..space.total_size())
            .filter(|&x| chosen[x])
            .map(|x| (space.point_unchecked(x), i64::from(r.gen_range(1..=weight_max))))
            .collect();
        let total: i64 = raw.iter().map(|(_, w)| w).sum();
        let atoms = raw.into_iter().map(|(t, w)| Atom::new(t, rational::ratio(w, total))).collect();
        Self::new(alphabets, atoms)
    }

    /// Uniform distribution on all of `Σ₁ × … × Σ_k`.
    pub fn full_support(alphabets: Vec<usize>) -> Result<Self> {
        let space = ProductSpace::new(alphabets.clone())?;
        Self::uniform_on(alphabets, space.points().collect())
    }

    pub fn arity(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.atoms.iter().map(|a| a.tuple.as_slice())
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    /// Atom probabilities as floats, aligned with [`atoms`](Self::atoms).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probability(&self, tuple: &[usize]) -> Prob {
        self.atoms
            .binary_search_by(|a| a.tuple.as_slice().cmp(tuple))
            .map(|i| self.atoms[i].p.clone())
            .unwrap_or_else(|_| Prob::zero())
    }

    /// `μ_i` as a probability vector over `Σ_i`.
    pub fn marginal_probs(&self, coord: usize) -> &[Prob] {
        &self.marginals[coord]
    }

    /// `μ₁ ⊗ … ⊗ μ_k`.
    pub fn marginal_measure(&self) -> ProductMeasure {
        ProductMeasure::new(self.marginals.clone()).expect("marginals are probability vectors")
    }

    pub fn has_full_marginal_support(&self) -> bool {
        self.marginals.iter().all(|m| m.iter().all(|p| p.is_positive()))
    }

    pub(crate) fn require_full_support(&self) -> Result<()> {
        if self.has_full_marginal_support() {
            Ok(())
        } else {
            Err(Error::domain(
                DOMAIN,
                "some alphabet symbol has zero marginal probability; shrink the alphabets first",
            ))
        }
    }

    /// Smallest atom probability.
    pub fn min_atom_probability(&self) -> Prob {
        self.atoms.iter().map(|a| a.p.clone()).min().expect("distributions have atoms")
    }

    /// `supp(μ_{i,j})` as an incidence matrix over `Σ_i × Σ_j`.
    pub fn pair_support(&self, i: usize, j: usize) -> Vec<Vec<bool>> {
        let mut s = vec![vec![false; self.alphabets[j]]; self.alphabets[i]];
        for a in &self.atoms {
            s[a.tuple[i]][a.tuple[j]] = true;
        }
        s
    }

    /// Exact marginal on `coords`, in the given order.
    pub fn marginal(&self, coords: &[usize]) -> Result<JointDistribution> {
        if coords.is_empty() {
            return Err(Error::domain(DOMAIN, "marginal needs at least one coordinate"));
        }
        let mut seen = vec![false; self.arity()];
        for &c in coords {
            if c >= self.arity() || seen[c] {
                return Err(Error::domain(
                    DOMAIN,
                    format!("coordinate list {coords:?} is not a set of indices below {}", self.arity()),
                ));
            }
            seen[c] = true;
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(coords.iter().map(|&c| a.tuple[c]).collect(), a.p.clone()))
            .collect();
        Self::with_policy(coords.iter().map(|&c| self.alphabets[c]).collect(), atoms, SupportPolicy::Allow)
    }

    /// Draw atom indices with their probabilities.
    pub fn sampler(&self) -> AtomSampler<'_> {
        AtomSampler {
            dist: self,
            cumulative: rng::cumulative(&self.weights),
        }
    }
}

pub struct AtomSampler<'a> {
    dist: &'a JointDistribution,
    cumulative: Vec<f64>,
}

impl<'a> AtomSampler<'a> {
    pub fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> &'a [usize] {
        &self.dist.atoms[rng::sample_cumulative(r, &self.cumulative)].tuple
    }
}

fn used_symbols(alphabets: &[usize], atoms: &[Atom]) -> Vec<Vec<bool>> {
    let mut used: Vec<Vec<bool>> = alphabets.iter().map(|&m| vec![false; m]).collect();
    for a in atoms {
        for (i, &s) in a.tuple.iter().enumerate() {
            used[i][s] = true;
        }
    }
    used
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Groups of elements, ordered by smallest member.
    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Support atoms grouped by component.
    pub components: Vec<Vec<Vec<usize>>>,
}

/// Connectivity of the graph on `supp(μ)` joining atoms that differ in exactly one coordinate.
pub fn is_connected(mu: &JointDistribution) -> Connectivity {
    let n = mu.atoms.len();
    let mut uf = UnionFind::new(n);
    for i in 0..mu.arity() {
        let mut first: HashMap<Vec<usize>, usize> = HashMap::new();
        for (idx, a) in mu.atoms.iter().enumerate() {
            let mut key = a.tuple.clone();
            key[i] = usize::MAX;
            match first.get(&key) {
                Some(&other) => uf.union(idx, other),
                None => {
                    first.insert(key, idx);
                }
            }
        }
    }
    let components: Vec<Vec<Vec<usize>>> = uf
        .groups()
        .into_iter()
        .map(|g| g.into_iter().map(|idx| mu.atoms[idx].tuple.clone()).collect())
        .collect();
    Connectivity {
        connected: components.len() == 1,
        components,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairComponents {
    pub i: usize,
    pub j: usize,
    /// Each component as (symbols of `Σ_i`, symbols of `Σ_j`).
    pub components: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairwiseConnectivity {
    pub connected: bool,
    pub pairs: Vec<PairComponents>,
}

/// For every `i < j`, connectivity of the bipartite graph `(Σ_i, Σ_j, supp(μ_{i,j}))`.
pub fn is_pairwise_connected(mu: &JointDistribution) -> PairwiseConnectivity {
    let k = mu.arity();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let (mi, mj) = (mu.alphabets[i], mu.alphabets[j]);
            let mut uf = UnionFind::new(mi + mj);
            for a in &mu.atoms {
                uf.union(a.tuple[i], mi + a.tuple[j]);
            }
            let components = uf
                .groups()
                .into_iter()
                .map(|g| {
                    let left = g.iter().filter(|&&v| v < mi).copied().collect();
                    let right = g.iter().filter(|&&v| v >= mi).map(|&v| v - mi).collect();
                    (left, right)
                })
                .collect();
            pairs.push(PairComponents { i, j, components });
        }
    }
    PairwiseConnectivity {
        connected: pairs.iter().all(|p| p.components.len() == 1),
        pairs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub is_connected: bool,
    pub has_abelian_embedding: bool,
    pub has_z_embedding: bool,
    pub is_pairwise_connected: bool,
    pub component_count: usize,
    pub abelian_witness: Option<EmbeddingWitness>,
    pub z_witness: Option<EmbeddingWitness>,
}

/// All four flags of the hierarchy, with witnesses for the positive embedding flags.
pub fn classify(mu: &JointDistribution) -> Result<ConnectivityReport> {
    let conn = is_connected(mu);
    let pairwise = is_pairwise_connected(mu);
    let z_witness = detect_z_embedding(mu)?;
    let abelian_witness = detect_abelian_embedding(mu)?;
    let report = ConnectivityReport {
        is_connected: conn.connected,
        has_abelian_embedding: abelian_witness.is_some(),
        has_z_embedding: z_witness.is_some(),
        is_pairwise_connected: pairwise.connected,
        component_count: conn.components.len(),
        abelian_witness,
        z_witness,
    };
    if report.is_connected && report.has_abelian_embedding {
        return Err(Error::internal("connected support reported with an Abelian embedding"));
    }
    if !report.has_abelian_embedding && !report.is_pairwise_connected {
        return Err(Error::internal("support without Abelian embeddings reported as not pairwise-connected"));
    }
    if report.has_z_embedding && !report.has_abelian_embedding {
        return Err(Error::internal("Z-embedding found without a finite Abelian embedding"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ap3(p: usize) -> JointDistribution {
        let tuples = (0..p)
            .flat_map(|x| (0..p).map(move |a| vec![x, (x + a) % p, (x + 2 * a) % p]))
            .collect();
        JointDistribution::uniform_on(vec![p; 3], tuples).unwrap()
    }

    #[test]
    fn construction_rules() {
        let bad_sum = JointDistribution::new(vec![2], vec![Atom::new(vec![0], ratio(1, 2))]);
        assert!(bad_sum.is_err());
        let missing = JointDistribution::new(vec![3], vec![Atom::new(vec![0], ratio(1, 2)), Atom::new(vec![2], ratio(1, 2))]);
        assert!(missing.unwrap_err().is_domain());
        let shrunk = JointDistribution::with_policy(
            vec![3, 2],
            vec![Atom::new(vec![0, 1], ratio(1, 2)), Atom::new(vec![2, 0], ratio(1, 2))],
            SupportPolicy::Shrink,
        )
        .unwrap();
        assert_eq!(shrunk.alphabets(), &[2, 2]);
        assert_eq!(shrunk.probability(&[1, 0]), ratio(1, 2));
        let merged = JointDistribution::new(
            vec![2],
            vec![
                Atom::new(vec![1], ratio(1, 4)),
                Atom::new(vec![0], ratio(1, 2)),
                Atom::new(vec![1], ratio(1, 4)),
            ],
        )
        .unwrap();
        assert_eq!(merged.support_size(), 2);
        assert_eq!(merged.probability(&[1]), ratio(1, 2));
        assert!(JointDistribution::new(vec![2], vec![Atom::new(vec![0], ratio(0, 1)), Atom::new(vec![1], ratio(1, 1))]).is_err());
    }

    #[test]
    fn marginals_of_ap3() {
        let mu = ap3(3);
        let m1 = mu.marginal(&[0]).unwrap();
        assert_eq!(m1.support_size(), 3);
        assert!(m1.atoms().iter().all(|a| a.p == ratio(1, 3)));
        let m12 = mu.marginal(&[0, 1]).unwrap();
        assert_eq!(m12.support_size(), 9);
        assert!(m12.atoms().iter().all(|a| a.p == ratio(1, 9)));
        assert!(mu.marginal(&[]).is_err());
        assert!(mu.marginal(&[0, 0]).is_err());
        assert!(mu.marginal(&[3]).is_err());
    }

    #[test]
    fn product_marginal_recovers_factor() {
        let m = ProductMeasure::new(vec![vec![ratio(1, 3), ratio(2, 3)], vec![ratio(1, 4), ratio(3, 4)]]).unwrap();
        let mu = JointDistribution::product(&m).unwrap();
        let m1 = mu.marginal(&[0]).unwrap();
        assert_eq!(m1.marginal_probs(0), m.exact(0));
    }

    #[test]
    fn marginal_nesting_commutes() {
        let mu = ap3(5);
        let direct = mu.marginal(&[2]).unwrap();
        let nested = mu.marginal(&[1, 2]).unwrap().marginal(&[1]).unwrap();
        assert_eq!(direct, nested);
        let twice = direct.marginal(&[0]).unwrap();
        assert_eq!(direct, twice);
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&JointDistribution::full_support(vec![2; 3]).unwrap()).connected);
        let diag = JointDistribution::uniform_on(vec![2; 3], vec![vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        let c = is_connected(&diag);
        assert!(!c.connected);
        assert_eq!(c.components.len(), 2);
        // Any two coordinates of an AP determine the third, so no two atoms are adjacent.
        let ap = is_connected(&ap3(3));
        assert!(!ap.connected);
        assert_eq!(ap.components.len(), 9);
    }

    #[test]
    fn pairwise_examples() {
        assert!(is_pairwise_connected(&ap3(3)).connected);
        let dhj = JointDistribution::uniform_on(
            vec![3; 3],
            vec![vec![0, 0, 0], vec![1, 1, 1], vec![2, 2, 2], vec![0, 1, 2]],
        )
        .unwrap();
        assert!(!is_pairwise_connected(&dhj).connected);
        let diag = JointDistribution::uniform_on(vec![3; 3], (0..3).map(|x| vec![x; 3]).collect()).unwrap();
        let pc = is_pairwise_connected(&diag);
        assert!(!pc.connected);
        assert!(pc.pairs.iter().all(|p| p.components.len() == 3));
    }

    #[test]
    fn sampler_frequencies() {
        let mu = JointDistribution::new(
            vec![2],
            vec![Atom::new(vec![0], ratio(1, 4)), Atom::new(vec![1], ratio(3, 4))],
        )
        .unwrap();
        let s = mu.sampler();
        let mut r = rng::rng(5);
        let ones = (0..20000).filter(|_| s.sample(&mut r)[0] == 1).count();
        assert!((ones as f64 / 20000.0 - 0.75).abs() < 0.02);
    }

    #[test]
    fn random_distributions_have_full_marginals() {
        for seed in 0..20 {
            let mu = JointDistribution::random(vec![3, 2, 3], 0.2, 4, seed).unwrap();
            assert!(mu.has_full_marginal_support());
            assert_eq!(mu, JointDistribution::random(vec![3, 2, 3], 0.2, 4, seed).unwrap());
        }
        assert_eq!(JointDistribution::random(vec![2, 2], 1.0, 1, 0).unwrap().support_size(), 4);
    }
}
