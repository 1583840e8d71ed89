//! k-wise correlations, product-type function families, and the searches and
//! probes built on them.

mod gap;
mod probe;
mod reduction;
mod search;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::{FunctionTable, ProductMeasure};
use crate::distributions::JointDistribution;
use crate::embeddings::{verify_witness, EmbeddingWitness, TargetGroup};
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, SIZE_CAP};
use crate::estimate::{self, ComplexEstimate, Mode, Options};
use crate::indexing::ProductSpace;
use crate::rng::{par_map, SeededRng};

pub use gap::{trilinear_gap_estimate, GapConfig, GapReport};
pub use probe::{local_inverse_probe, noise_functions, ProbeConfig, ProbeReport, ProbeTrial};
pub use reduction::{reduce_arity_4_to_3, Reduction};
pub use search::{
    product_correlation_search, structured_correlation_search, Certificate, CorrelationReport, FactorConstraint,
    RestartSummary, SearchConfig,
};

/// `Auto` evaluates exactly while `|supp μ|ⁿ` stays below this.
pub const KWISE_EXACT_AUTO_CAP: f64 = 1e7;
/// Hard limit for an explicitly requested exact sum.
pub const KWISE_EXACT_HARD_CAP: f64 = 1e10;

fn check_functions(mu: &JointDistribution, fs: &[&FunctionTable]) -> Result<usize> {
    let k = mu.arity();
    if fs.len() != k {
        return Err(Error::domain(ARITY_MISMATCH, format!("{} functions for a {k}-ary distribution", fs.len())));
    }
    let n = fs.first().map_or(0, |f| f.arity());
    for (i, f) in fs.iter().enumerate() {
        let m = mu.alphabets()[i];
        if f.arity() != n || f.space().radices().iter().any(|&r| r != m) {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("function {i} lives on {:?}, expected {n} coordinates over an alphabet of {m}", f.space().radices()),
            ));
        }
    }
    Ok(n)
}

/// `E_{(x₁,…,x_k)∼μ^{⊗n}}[f₁(x₁)⋯f_k(x_k)]`.
pub fn kwise_correlation(mu: &JointDistribution, fs: &[&FunctionTable], opts: &Options) -> Result<ComplexEstimate> {
    let n = check_functions(mu, fs)?;
    let work = (mu.support_size() as f64).powi(n as i32);
    let sampled = match opts.mode {
        Mode::Auto if work <= KWISE_EXACT_AUTO_CAP => None,
        Mode::Auto => Some((estimate::DEFAULT_SAMPLES, opts.fallback_seed)),
        Mode::Exact if work > KWISE_EXACT_HARD_CAP => {
            return Err(Error::domain(
                SIZE_CAP,
                format!("exact k-wise sum needs {work:.3e} terms, above {KWISE_EXACT_HARD_CAP:e}"),
            ))
        }
        Mode::Exact => None,
        Mode::MonteCarlo { samples, seed } => Some((samples, seed)),
    };
    let strides: Vec<Vec<usize>> = fs.iter().map(|f| (0..n).map(|j| f.space().stride(j)).collect()).collect();
    let atoms: Vec<&[usize]> = mu.support().collect();
    match sampled {
        None => Ok(ComplexEstimate::exact(exact_sum(fs, &strides, &atoms, mu.weights(), n, opts.threads))),
        Some((samples, seed)) => {
            let sampler = mu.sampler();
            Ok(estimate::monte_carlo(samples, seed, opts.threads, |r: &mut SeededRng| {
                let mut idx = vec![0usize; fs.len()];
                for j in 0..n {
                    let t = sampler.sample(r);
                    for (i, s) in idx.iter_mut().enumerate() {
                        *s += t[i] * strides[i][j];
                    }
                }
                fs.iter().zip(&idx).map(|(f, &s)| f.values()[s]).product()
            }))
        }
    }
}

fn exact_sum(
    fs: &[&FunctionTable],
    strides: &[Vec<usize>],
    atoms: &[&[usize]],
    weights: &[f64],
    n: usize,
    threads: usize,
) -> Complex64 {
    let s = atoms.len();
    let depth = n.min(2);
    let prefixes = s.pow(depth as u32);
    let k = fs.len();
    let parts = par_map(prefixes, threads, |p| {
        let mut idx = vec![0usize; k];
        let mut w = 1.0;
        let mut rest = p;
        for j in (0..depth).rev() {
            let a = rest % s;
            rest /= s;
            w *= weights[a];
            for i in 0..k {
                idx[i] += atoms[a][i] * strides[i][j];
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        descend(fs, strides, atoms, weights, depth, n, &mut idx, w, &mut acc);
        acc
    });
    parts.into_iter().sum()
}

#[allow(clippy::too_many_arguments)]
fn descend(
    fs: &[&FunctionTable],
    strides: &[Vec<usize>],
    atoms: &[&[usize]],
    weights: &[f64],
    j: usize,
    n: usize,
    idx: &mut [usize],
    w: f64,
    acc: &mut Complex64,
) {
    if j == n {
        let v: Complex64 = fs.iter().zip(idx.iter()).map(|(f, &s)| f.values()[s]).product();
        *acc += v * w;
        return;
    }
    for (a, &p) in atoms.iter().zip(weights) {
        for i in 0..idx.len() {
            idx[i] += a[i] * strides[i][j];
        }
        descend(fs, strides, atoms, weights, j + 1, n, idx, w * p, acc);
        for i in 0..idx.len() {
            idx[i] -= a[i] * strides[i][j];
        }
    }
}

/// `P(x) = ∏ᵢ Pᵢ(xᵢ)` with its base product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction {
    factors: Vec<Vec<Complex64>>,
    measure: ProductMeasure,
}

impl ProductFunction {
    pub fn new(factors: Vec<Vec<Complex64>>, measure: ProductMeasure) -> Result<Self> {
        let radices: Vec<usize> = factors.iter().map(Vec::len).collect();
        if radices != measure.radices() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("factor sizes {radices:?} do not match measure alphabets {:?}", measure.radices()),
            ));
        }
        Ok(ProductFunction { factors, measure })
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.measure
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn radices(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    pub fn evaluate(&self, x: &[usize]) -> Result<Complex64> {
        if x.len() != self.arity() {
            return Err(Error::domain(ARITY_MISMATCH, format!("point of length {} for arity {}", x.len(), self.arity())));
        }
        x.iter()
            .zip(&self.factors)
            .enumerate()
            .map(|(i, (&s, p))| {
                p.get(s)
                    .copied()
                    .ok_or_else(|| Error::domain(DOMAIN, format!("symbol {s} outside alphabet of coordinate {i}")))
            })
            .product()
    }

    /// `‖Pᵢ‖₂` under the `i`-th marginal.
    pub fn factor_norms(&self) -> Vec<f64> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.iter()
                    .zip(self.measure.weights(i))
                    .map(|(v, &w)| w * v.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn norm2(&self) -> f64 {
        self.factor_norms().iter().product()
    }

    pub fn sup_norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|p| p.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .product()
    }

    pub fn to_table(&self) -> Result<FunctionTable> {
        let space = ProductSpace::new(self.radices())?;
        let mut values = vec![Complex64::new(1.0, 0.0)];
        for p in &self.factors {
            values = values.iter().flat_map(|&v| p.iter().map(move |&q| v * q)).collect();
        }
        FunctionTable::new(space, values, self.measure.clone())
    }
}

/// `∏_{|T|=k'} P_T(x_T)` over all `k'`-subsets `T` of the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinatorialProduct {
    radices: Vec<usize>,
    order: usize,
    factors: BTreeMap<Vec<usize>, Vec<Complex64>>,
}

impl CombinatorialProduct {
    pub fn new(radices: Vec<usize>, order: usize) -> Result<Self> {
        if order > radices.len() {
            return Err(Error::domain(DOMAIN, format!("order {order} exceeds arity {}", radices.len())));
        }
        Ok(CombinatorialProduct {
            radices,
            order,
            factors: BTreeMap::new(),
        })
    }

    /// A single-coordinate family with the factors of `p`.
    pub fn from_product(p: &ProductFunction) -> Self {
        CombinatorialProduct {
            radices: p.radices(),
            order: 1,
            factors: p.factors.iter().enumerate().map(|(i, f)| (vec![i], f.clone())).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// All `k'`-subsets in lexicographic order.
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        fn grow(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for c in start..n {
                cur.push(c);
                grow(n, k, c + 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        grow(self.radices.len(), self.order, 0, &mut Vec::new(), &mut out);
        out
    }

    /// Set `P_T`, a table on `∏_{t∈T} Σ_t` in lexicographic order.
    pub fn set_factor(&mut self, subset: Vec<usize>, table: Vec<Complex64>) -> Result<()> {
        if subset.len() != self.order || subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(DOMAIN, format!("{subset:?} is not an increasing {}-subset", self.order)));
        }
        if subset.iter().any(|&t| t >= self.radices.len()) {
            return Err(Error::domain(ARITY_MISMATCH, format!("{subset:?} is outside arity {}", self.radices.len())));
        }
        let size: usize = subset.iter().map(|&t| self.radices[t]).product();
        if table.len() != size {
            return Err(Error::domain(ARITY_MISMATCH, format!("factor on {subset:?} needs {size} entries, got {}", table.len())));
        }
        self.factors.insert(subset, table);
        Ok(())
    }

    pub fn evaluate(&self, x: &[usize]) -> Result<Complex64> {
        if x.len() != self.radices.len() || x.iter().zip(&self.radices).any(|(&s, &m)| s >= m) {
            return Err(Error::domain(DOMAIN, format!("{x:?} is not a point of {:?}", self.radices)));
        }
        let mut acc = Complex64::new(1.0, 0.0);
        for t in self.subsets() {
            let table = self
                .factors
                .get(&t)
                .ok_or_else(|| Error::domain(DOMAIN, format!("no factor for coordinates {t:?}")))?;
            let idx = t.iter().fold(0, |acc, &c| acc * self.radices[c] + x[c]);
            acc *= table[idx];
        }
        Ok(acc)
    }
}

/// A character of the witness group.
#[derive(Debug, Clone, PartialEq)]
pub enum Character {
    /// `a ↦ exp(2πi Σₜ rₜaₜ/dₜ)` on `⊕ ℤ_{dₜ}`.
    Finite(Vec<i64>),
    /// `a ↦ exp(2πi θ a)` on `ℤ`, with `θ ∈ (0, 1)`.
    Real(f64),
}

impl Character {
    fn check(&self, group: &TargetGroup) -> Result<()> {
        match (self, group) {
            (Character::Finite(r), TargetGroup::Finite(g)) => {
                if r.len() != g.orders().len() {
                    return Err(Error::domain(
                        ARITY_MISMATCH,
                        format!("character {r:?} does not match group {g}"),
                    ));
                }
                if r.iter().zip(g.orders()).all(|(&x, &d)| x.rem_euclid(d as i64) == 0) {
                    return Err(Error::domain(DOMAIN, format!("character {r:?} is trivial on {g}")));
                }
                Ok(())
            }
            (Character::Real(theta), TargetGroup::Integers) => {
                if *theta > 0.0 && *theta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::domain(DOMAIN, format!("frequency {theta} outside (0, 1)")))
                }
            }
            _ => Err(Error::domain(DOMAIN, "character kind does not match the witness group")),
        }
    }

    fn eval(&self, group: &TargetGroup, a: &[i64]) -> Complex64 {
        let phase = match (self, group) {
            (Character::Finite(r), TargetGroup::Finite(g)) => r
                .iter()
                .zip(a)
                .zip(g.orders())
                .map(|((&x, &y), &d)| ((x * y).rem_euclid(d as i64)) as f64 / d as f64)
                .sum::<f64>(),
            (Character::Real(theta), _) => theta * a[0] as f64,
            _ => unreachable!("checked against the group"),
        };
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    }
}

/// Characters tried by [`default_characters`].
pub const CHARACTER_CANDIDATES: usize = 4096;

/// One nontrivial character, repeated for every coordinate: the one maximizing
/// the smallest variance `1 − |E_{μᵢ} χ(σᵢ)|²` over the non-constant maps `σᵢ`,
/// so that every counterexample function carries its mass on high degrees.
///
/// Finite groups try their first [`CHARACTER_CANDIDATES`] nontrivial
/// characters in lexicographic order. `ℤ` tries the frequency `1/√n` (at most
/// `1/√2`) and then `j/1024`. Ties keep the earlier candidate.
pub fn default_characters(mu: &JointDistribution, w: &EmbeddingWitness, n: usize) -> Vec<Character> {
    let marginals = mu.marginal_measure();
    let spread = |chi: &Character| -> f64 {
        (0..w.sigma().len())
            .filter(|&i| !w.is_constant(i))
            .map(|i| {
                let mean: Complex64 = w.sigma()[i]
                    .iter()
                    .zip(marginals.weights(i))
                    .map(|(a, &p)| chi.eval(w.group(), a) * p)
                    .sum();
                1.0 - mean.norm_sqr()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let candidates: Vec<Character> = match w.group() {
        TargetGroup::Finite(g) => {
            let space = ProductSpace::new(g.orders().iter().map(|&d| d as usize).collect()).expect("group orders are at least 2");
            space
                .points()
                .skip(1)
                .take(CHARACTER_CANDIDATES)
                .map(|r| Character::Finite(r.iter().map(|&x| x as i64).collect()))
                .collect()
        }
        TargetGroup::Integers => std::iter::once(1.0 / (n.max(2) as f64).sqrt())
            .chain((1..1024).map(|j| j as f64 / 1024.0))
            .map(Character::Real)
            .collect(),
    };
    let mut best: Option<(f64, Character)> = None;
    for chi in candidates {
        let v = spread(&chi);
        if best.as_ref().map_or(true, |(b, _)| v > b + 1e-12) {
            best = Some((v, chi));
        }
    }
    let c = best.map(|(_, c)| c).expect("every group here has a nontrivial character");
    vec![c; n]
}

/// The functions `fᵢ(x) = ∏ⱼ χⱼ(σᵢ(xⱼ))`, each on `Σᵢⁿ` with base measure
/// `μᵢ^{⊗n}`; their k-wise correlation is 1 on every support point.
pub fn build_counterexample_products(
    mu: &JointDistribution,
    w: &EmbeddingWitness,
    characters: &[Character],
) -> Result<Vec<ProductFunction>> {
    if !verify_witness(mu, w)? {
        return Err(Error::domain(DOMAIN, "witness is not an embedding of this distribution"));
    }
    for c in characters {
        c.check(w.group())?;
    }
    let marginals = mu.marginal_measure();
    (0..mu.arity())
        .map(|i| {
            let factors = characters
                .iter()
                .map(|chi| w.sigma()[i].iter().map(|a| chi.eval(w.group(), a)).collect())
                .collect();
            let nu = marginals.exact(i).to_vec();
            ProductFunction::new(factors, ProductMeasure::power(&nu, characters.len())?)
        })
        .collect()
}

pub fn build_counterexample(
    mu: &JointDistribution,
    w: &EmbeddingWitness,
    characters: &[Character],
) -> Result<Vec<FunctionTable>> {
    build_counterexample_products(mu, w, characters)?
        .iter()
        .map(ProductFunction::to_table)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::degree_mass;
    use crate::distributions::Atom;
    use crate::embeddings::{detect_abelian_embedding, detect_z_embedding, FiniteAbelianGroup};
    use crate::rational::ratio;
    use crate::rng::{self, Rng};

    fn ap(p: usize, steps: &[usize]) -> JointDistribution {
        let tuples = (0..p)
            .flat_map(|x| steps.iter().map(move |&a| vec![x, (x + a) % p, (x + 2 * a) % p]))
            .collect();
        JointDistribution::uniform_on(vec![p; 3], tuples).unwrap()
    }

    fn random_table(space: ProductSpace, measure: ProductMeasure, seed: u64) -> FunctionTable {
        let mut r = rng::rng(seed);
        FunctionTable::from_fn(space, measure, |_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).unwrap()
    }

    /// Brute force over every tuple of `n` support atoms.
    fn oracle(mu: &JointDistribution, fs: &[&FunctionTable]) -> Complex64 {
        let n = fs[0].arity();
        let s = mu.support_size();
        let mut total = Complex64::new(0.0, 0.0);
        for code in 0..s.pow(n as u32) {
            let mut rest = code;
            let mut pts = vec![vec![0; n]; mu.arity()];
            let mut w = 1.0;
            for j in 0..n {
                let a = &mu.atoms()[rest % s];
                rest /= s;
                w *= rational::to_f64(&a.p);
                for (i, pt) in pts.iter_mut().enumerate() {
                    pt[j] = a.tuple[i];
                }
            }
            let v: Complex64 = fs.iter().zip(&pts).map(|(f, x)| f.value(x).unwrap()).product();
            total += v * w;
        }
        total
    }

    use crate::rational;

    #[test]
    fn constants_give_one_and_mean_zero_gives_zero() {
        let mu = ap(3, &[0, 1, 2]);
        let space = ProductSpace::uniform(3, 3).unwrap();
        let one = FunctionTable::constant(space.clone(), ProductMeasure::uniform(&[3; 3]), Complex64::new(1.0, 0.0)).unwrap();
        let v = kwise_correlation(&mu, &[&one, &one, &one], &Options::default()).unwrap();
        assert!((v.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let f = random_table(space, ProductMeasure::uniform(&[3; 3]), 4);
        let centered = f.map(|x| x - f.expectation());
        let v = kwise_correlation(&mu, &[&centered, &one, &one], &Options::default()).unwrap();
        assert!(v.value.norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force_and_sampling() {
        let mu = JointDistribution::new(
            vec![2, 3, 2],
            vec![
                Atom::new(vec![0, 0, 1], ratio(1, 2)),
                Atom::new(vec![1, 2, 0], ratio(1, 3)),
                Atom::new(vec![1, 1, 1], ratio(1, 6)),
            ],
        )
        .unwrap();
        let m = mu.marginal_measure();
        let fs: Vec<FunctionTable> = (0..3)
            .map(|i| {
                let r = mu.alphabets()[i];
                let nu = m.exact(i).to_vec();
                random_table(ProductSpace::uniform(r, 3).unwrap(), ProductMeasure::power(&nu, 3).unwrap(), 10 + i as u64)
            })
            .collect();
        let refs: Vec<&FunctionTable> = fs.iter().collect();
        let exact = kwise_correlation(&mu, &refs, &Options::exact().with_threads(3)).unwrap();
        assert!((exact.value - oracle(&mu, &refs)).norm() < 1e-12);
        let bound: f64 = fs.iter().map(FunctionTable::sup_norm).product();
        assert!(exact.value.norm() <= bound + 1e-12);
        let mc = kwise_correlation(&mu, &refs, &Options::monte_carlo(100_000, 7)).unwrap();
        assert!((mc.value - exact.value).norm() < 5.0 * mc.stderr + 1e-9);
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let mu = ap(3, &[1]);
        let f = random_table(ProductSpace::uniform(2, 2).unwrap(), ProductMeasure::uniform(&[2, 2]), 1);
        let err = kwise_correlation(&mu, &[&f, &f, &f], &Options::default()).unwrap_err();
        assert_eq!(err.code(), ARITY_MISMATCH);
        assert!(kwise_correlation(&mu, &[&f], &Options::default()).is_err());
    }

    #[test]
    fn ap_counterexample_has_unit_correlation() {
        let mu = ap(3, &[0, 1, 2]);
        let w = detect_abelian_embedding(&mu).unwrap().unwrap();
        let fs = build_counterexample(&mu, &w, &default_characters(&mu, &w, 4)).unwrap();
        let refs: Vec<&FunctionTable> = fs.iter().collect();
        let v = kwise_correlation(&mu, &refs, &Options::exact()).unwrap();
        assert!((v.value.norm() - 1.0).abs() < 1e-12);
        for f in &fs {
            assert!(f.values().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn integer_counterexample_is_high_degree() {
        let mu = ap(5, &[0, 1]);
        let w = detect_z_embedding(&mu).unwrap().expect("restricted progressions embed in Z");
        let n = 8;
        let ps = build_counterexample_products(&mu, &w, &default_characters(&mu, &w, n)).unwrap();
        let fs: Vec<FunctionTable> = ps.iter().map(|p| p.to_table().unwrap()).collect();
        let refs: Vec<&FunctionTable> = fs.iter().collect();
        let v = kwise_correlation(&mu, &refs, &Options::exact().with_threads(4)).unwrap();
        assert!((v.value.norm() - 1.0).abs() < 1e-9);
        for (i, f) in fs.iter().enumerate() {
            if !w.is_constant(i) {
                let (low, _) = degree_mass(f, 2).unwrap();
                assert!(low / f.norm2_sq() < 0.1, "coordinate {i}: {low}");
            }
        }
    }

    #[test]
    fn trivial_characters_are_rejected() {
        let mu = ap(3, &[0, 1, 2]);
        let w = detect_abelian_embedding(&mu).unwrap().unwrap();
        let err = build_counterexample(&mu, &w, &[Character::Finite(vec![3])]).unwrap_err();
        assert!(err.is_domain());
        assert!(build_counterexample(&mu, &w, &[Character::Real(0.3)]).is_err());
        let z = detect_z_embedding(&ap(5, &[0, 1])).unwrap().unwrap();
        assert!(build_counterexample(&ap(5, &[0, 1]), &z, &[Character::Real(1.0)]).is_err());
        let bogus = EmbeddingWitness::scalar(
            TargetGroup::Finite(FiniteAbelianGroup::cyclic(3).unwrap()),
            vec![vec![0, 1, 1], vec![0, 0, 0], vec![0, 0, 0]],
        )
        .unwrap();
        assert!(build_counterexample(&mu, &bogus, &[Character::Finite(vec![1])]).is_err());
    }

    #[test]
    fn product_function_norms_and_table() {
        let m = ProductMeasure::new(vec![vec![ratio(1, 4), ratio(3, 4)], vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)]]).unwrap();
        let p = ProductFunction::new(
            vec![
                vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
                vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.5)],
            ],
            m,
        )
        .unwrap();
        let t = p.to_table().unwrap();
        assert!((t.norm2() - p.norm2()).abs() < 1e-12);
        for x in t.space().points() {
            assert_eq!(t.value(&x).unwrap(), p.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn combinatorial_products() {
        let mut r = rng::rng(5);
        let mut rand_vec = |len: usize| -> Vec<Complex64> {
            (0..len).map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect()
        };
        let mut c = CombinatorialProduct::new(vec![2, 3, 2], 2).unwrap();
        let p01 = rand_vec(6);
        let p02 = rand_vec(4);
        let p12 = rand_vec(6);
        c.set_factor(vec![0, 1], p01.clone()).unwrap();
        c.set_factor(vec![0, 2], p02.clone()).unwrap();
        assert!(c.evaluate(&[1, 2, 0]).unwrap_err().is_domain());
        c.set_factor(vec![1, 2], p12.clone()).unwrap();
        for x in ProductSpace::new(vec![2, 3, 2]).unwrap().points() {
            let direct = p01[x[0] * 3 + x[1]] * p02[x[0] * 2 + x[2]] * p12[x[1] * 2 + x[2]];
            assert!((c.evaluate(&x).unwrap() - direct).norm() < 1e-15);
        }
        assert!(c.set_factor(vec![1, 0], p01).is_err());

        let p = ProductFunction::new(vec![rand_vec(2), rand_vec(3)], ProductMeasure::uniform(&[2, 3])).unwrap();
        let cp = CombinatorialProduct::from_product(&p);
        for x in ProductSpace::new(vec![2, 3]).unwrap().points() {
            assert_eq!(cp.evaluate(&x).unwrap(), p.evaluate(&x).unwrap());
        }
        let mut ones = CombinatorialProduct::new(vec![2, 2, 2], 2).unwrap();
        for t in ones.subsets() {
            ones.set_factor(t, vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        }
        assert_eq!(ones.evaluate(&[1, 0, 1]).unwrap(), Complex64::new(1.0, 0.0));
    }
}
