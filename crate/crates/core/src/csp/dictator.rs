use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Predicate;
use crate::analysis::{FunctionTable, ProductMeasure};
use crate::distributions::JointDistribution;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, PARSE, SIZE_CAP};
use crate::estimate::{self, Estimate, Mode, Options, DEFAULT_SAMPLES};
use crate::indexing::ProductSpace;
use crate::rng::{self, par_map, Rng, SeededRng};

/// Exact dictatorship-test evaluation is allowed while `|supp μ|ⁿ` stays below this.
pub const DICTATOR_EXACT_CAP: f64 = 1e7;

/// `f: Σⁿ → Σ` as a table of labels in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolFunction {
    pub alphabet: usize,
    pub n: usize,
    pub labels: Vec<usize>,
}

impl SymbolFunction {
    pub fn new(alphabet: usize, n: usize, labels: Vec<usize>) -> Result<Self> {
        let size = ProductSpace::uniform(alphabet, n)?.total_size();
        if labels.len() != size {
            return Err(Error::domain(ARITY_MISMATCH, format!("{} labels for {alphabet}^{n} points", labels.len())));
        }
        if let Some(&s) = labels.iter().find(|&&s| s >= alphabet) {
            return Err(Error::domain(DOMAIN, format!("label {s} outside an alphabet of {alphabet}")));
        }
        Ok(SymbolFunction { alphabet, n, labels })
    }

    pub fn from_fn(alphabet: usize, n: usize, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let space = ProductSpace::uniform(alphabet, n)?;
        Self::new(alphabet, n, space.points().map(|x| f(&x)).collect())
    }

    pub fn dictator(alphabet: usize, n: usize, coord: usize) -> Result<Self> {
        if coord >= n {
            return Err(Error::domain(DOMAIN, format!("coordinate {coord} out of range for n = {n}")));
        }
        Self::from_fn(alphabet, n, |x| x[coord])
    }

    pub fn constant(alphabet: usize, n: usize, symbol: usize) -> Result<Self> {
        Self::from_fn(alphabet, n, |_| symbol)
    }

    pub fn random(alphabet: usize, n: usize, seed: u64) -> Result<Self> {
        let mut r = rng::rng(seed);
        let size = ProductSpace::uniform(alphabet, n)?.total_size();
        Self::new(alphabet, n, (0..size).map(|_| r.gen_range(0..alphabet)).collect())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: SymbolFunction = serde_json::from_str(text).map_err(|e| Error::domain(PARSE, e.to_string()))?;
        Self::new(f.alphabet, f.n, f.labels)
    }

    pub fn space(&self) -> ProductSpace {
        ProductSpace::uniform(self.alphabet, self.n).expect("validated at construction")
    }
}

/// The Boolean indicator `1_{f(x) = a}` under the base measure `nu`.
pub fn indicator(f: &SymbolFunction, a: usize, nu: &ProductMeasure) -> Result<FunctionTable> {
    let values = f.labels.iter().map(|&s| Complex64::new(f64::from(u8::from(s == a)), 0.0)).collect();
    FunctionTable::new(f.space(), values, nu.clone())
}

/// `E_{(x₁,…,x_k)∼μ^{⊗n}}[P(f(x₁),…,f(x_k))]`, where `xᵢ` collects coordinate
/// `i` of each of the `n` independent draws.
pub fn dictatorship_test_eval(mu: &JointDistribution, pred: &Predicate, f: &SymbolFunction, opts: &Options) -> Result<Estimate> {
    pred.check_distribution(mu)?;
    if f.alphabet != pred.alphabet() {
        return Err(Error::domain(
            ARITY_MISMATCH,
            format!("labels over {} symbols for a predicate over {}", f.alphabet, pred.alphabet()),
        ));
    }
    let n = f.n;
    let k = mu.arity();
    let work = (mu.support_size() as f64).powi(n as i32);
    let sampled = match opts.mode {
        Mode::Auto if work <= DICTATOR_EXACT_CAP => None,
        Mode::Auto => Some((DEFAULT_SAMPLES, opts.fallback_seed)),
        Mode::Exact if work > DICTATOR_EXACT_CAP => {
            return Err(Error::domain(
                SIZE_CAP,
                format!("exact evaluation needs {work:.3e} terms, above {DICTATOR_EXACT_CAP:e}; use Monte Carlo"),
            ))
        }
        Mode::Exact => None,
        Mode::MonteCarlo { samples, seed } => Some((samples, seed)),
    };
    let space = f.space();
    let strides: Vec<usize> = (0..n).map(|j| space.stride(j)).collect();
    let atoms: Vec<&[usize]> = mu.support().collect();
    let weights = mu.weights();
    let leaf = |idx: &[usize]| -> bool { pred.table()[pred.rank(idx.iter().map(|&s| f.labels[s]))] };
    match sampled {
        None => {
            let s = atoms.len();
            let depth = n.min(2);
            let parts = par_map(s.pow(depth as u32), opts.threads, |p| {
                let mut idx = vec![0usize; k];
                let mut w = 1.0;
                let mut rest = p;
                for j in (0..depth).rev() {
                    let a = rest % s;
                    rest /= s;
                    w *= weights[a];
                    for i in 0..k {
                        idx[i] += atoms[a][i] * strides[j];
                    }
                }
                let mut acc = 0.0;
                descend(&atoms, weights, &strides, depth, &mut idx, w, &leaf, &mut acc);
                acc
            });
            Ok(Estimate::exact(parts.into_iter().sum()))
        }
        Some((samples, seed)) => {
            let sampler = mu.sampler();
            let est = estimate::monte_carlo(samples, seed, opts.threads, |r: &mut SeededRng| {
                let mut idx = vec![0usize; k];
                for &stride in &strides {
                    let t = sampler.sample(r);
                    for (i, s) in idx.iter_mut().enumerate() {
                        *s += t[i] * stride;
                    }
                }
                Complex64::new(f64::from(u8::from(leaf(&idx))), 0.0)
            });
            Ok(est.map_real(|z| z.re))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn descend(
    atoms: &[&[usize]],
    weights: &[f64],
    strides: &[usize],
    j: usize,
    idx: &mut [usize],
    w: f64,
    leaf: &impl Fn(&[usize]) -> bool,
    acc: &mut f64,
) {
    if j == strides.len() {
        if leaf(idx) {
            *acc += w;
        }
        return;
    }
    for (a, &p) in atoms.iter().zip(weights) {
        for (i, s) in idx.iter_mut().enumerate() {
            *s += a[i] * strides[j];
        }
        descend(atoms, weights, strides, j + 1, idx, w * p, leaf, acc);
        for (i, s) in idx.iter_mut().enumerate() {
            *s -= a[i] * strides[j];
        }
    }
}

const INFLUENCE_TOL: f64 = 1e-12;

/// `Pr[f(x) ≠ f(x')]` where `x'` resamples coordinate `i` of `x` from the base
/// measure. Computed from the two-point definition and checked against
/// `2(‖f‖² − ‖E_i f‖²)`.
pub fn influence(f: &FunctionTable, i: usize) -> Result<f64> {
    let n = f.arity();
    if i >= n {
        return Err(Error::domain(DOMAIN, format!("coordinate {i} out of range for n = {n}")));
    }
    if !f.measure().has_full_support() {
        return Err(Error::domain(DOMAIN, "influence needs a full-support base measure"));
    }
    if f.values().iter().any(|v| v.im != 0.0 || (v.re != 0.0 && v.re != 1.0)) {
        return Err(Error::domain(DOMAIN, "influence needs a Boolean (0/1-valued) table"));
    }
    let space = f.space();
    let nu = f.measure().weights(i);
    let m = space.radix(i);
    let stride = space.stride(i);
    let w = f.measure().point_weights(space);
    let vals = f.values();
    let (mut two_point, mut averaged) = (0.0, 0.0);
    for base in (0..space.total_size()).filter(|&x| space.digit(x, i) == 0) {
        // Weight of the other coordinates: the point weight with coordinate i at 0, divided by ν_i(0).
        let rest = w[base] / nu[0];
        let mut cond = 0.0;
        for a in 0..m {
            let fa = vals[base + a * stride].re;
            cond += nu[a] * fa;
            for b in 0..m {
                if fa != vals[base + b * stride].re {
                    two_point += rest * nu[a] * nu[b];
                }
            }
        }
        averaged += rest * cond * cond;
    }
    let via_variance = 2.0 * (f.norm2_sq() - averaged);
    if (two_point - via_variance).abs() > INFLUENCE_TOL {
        return Err(Error::internal(format!(
            "influence paths disagree: two-point {two_point} vs variance {via_variance}"
        )));
    }
    Ok(two_point)
}

pub fn influences(f: &FunctionTable) -> Result<Vec<f64>> {
    (0..f.arity()).map(|i| influence(f, i)).collect()
}
