use num_complex::Complex64;
use serde::Serialize;

use super::search::{product_correlation_search, SearchConfig};
use super::{check_functions, kwise_correlation};

use crate::analysis::{FunctionTable, ProductMeasure};
use crate::distributions::{is_pairwise_connected, JointDistribution};
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN};
use crate::estimate::{ComplexEstimate, Options};
use crate::indexing::{restrict, sample_subset_with, ProductSpace, Restriction};
use crate::rng::{self, cumulative, par_map, sample_cumulative, Rng};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Inclusion probability of each free coordinate, and the success threshold.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Restarts of the product search run on each restriction.
    pub restarts: usize,
    pub sweep_cap: usize,
    pub threads: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            delta: 0.2,
            trials: 200,
            seed: 0,
            restarts: 4,
            sweep_cap: 500,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTrial {
    pub free: Vec<usize>,
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub success_rate: f64,
    pub successes: usize,
    pub trials: usize,
    pub delta: f64,
    /// Counts of restriction values in bins of width `1/20` over `[0, 1]`; the
    /// last bin also takes values above 1.
    pub histogram: Vec<usize>,
    pub values: Vec<f64>,
    pub mean_free: f64,
    pub correlation: ComplexEstimate,
    pub pairwise_connected: bool,
    pub warning: Option<String>,
    pub details: Vec<ProbeTrial>,
}

/// Empirical probability over `I ⊆_δ [n]` and `x̃ ∼ μ₁` on the complement that
/// `f` restricted to `x̃` has product correlation at least `δ`.
pub fn local_inverse_probe(mu: &JointDistribution, fs: [&FunctionTable; 3], cfg: &ProbeConfig) -> Result<ProbeReport> {
    if mu.arity() != 3 {
        return Err(Error::domain(ARITY_MISMATCH, format!("the probe needs arity 3, got {}", mu.arity())));
    }
    if !(cfg.delta > 0.0 && cfg.delta <= 1.0) {
        return Err(Error::domain(DOMAIN, format!("delta {} outside (0, 1]", cfg.delta)));
    }
    let n = check_functions(mu, &fs)?;
    let f = fs[0];
    if !f.measure().has_full_support() {
        return Err(Error::domain(DOMAIN, "the probed function needs a full-support base measure"));
    }
    let pairwise = is_pairwise_connected(mu).connected;
    let warning = (!pairwise).then(|| "distribution is not pairwise-connected; the local inverse theorem does not apply".to_string());
    let correlation = kwise_correlation(mu, &fs, &Options::default().with_threads(cfg.threads))?;
    let marginal = cumulative(&mu.marginal_measure().weights(0).to_vec());
    let details = par_map(cfg.trials, cfg.threads, |t| -> Result<ProbeTrial> {
        let mut r = rng::stream(cfg.seed, t as u64);
        let free = sample_subset_with(n, cfg.delta, &mut r)?;
        let fixed = (0..n - free.len()).map(|_| sample_cumulative(&mut r, &marginal)).collect();
        let restricted = restrict(f, &Restriction::new(f.space(), free.clone(), fixed)?)?;
        let search = SearchConfig {
            restarts: cfg.restarts,
            sweep_cap: cfg.sweep_cap,
            seed: r.gen(),
            threads: 1,
            ..SearchConfig::default()
        };
        let rep = product_correlation_search(&restricted, &search)?;
        Ok(ProbeTrial {
            free: free.members(),
            value: rep.magnitude(),
            converged: rep.converged(),
        })
    });
    let details = details.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = details.iter().map(|d| d.value).collect();
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for &v in &values {
        histogram[((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    let successes = values.iter().filter(|&&v| v >= cfg.delta).count();
    let trials = details.len();
    Ok(ProbeReport {
        success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        successes,
        trials,
        delta: cfg.delta,
        histogram,
        mean_free: if trials == 0 { 0.0 } else { details.iter().map(|d| d.free.len() as f64).sum::<f64>() / trials as f64 },
        values,
        correlation,
        pairwise_connected: pairwise,
        warning,
        details,
    })
}

/// `k` tables of i.i.d. real noise uniform on `[−1, 1]`, table `i` on `Σᵢⁿ`
/// under the `i`-th marginal of `μ`.
pub fn noise_functions(mu: &JointDistribution, n: usize, seed: u64) -> Result<Vec<FunctionTable>> {
    let marginals = mu.marginal_measure();
    (0..mu.arity())
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let space = ProductSpace::uniform(mu.alphabets()[i], n)?;
            let values = (0..space.total_size()).map(|_| Complex64::new(r.gen_range(-1.0..=1.0), 0.0)).collect();
            FunctionTable::new(space, values, ProductMeasure::power(marginals.exact(i), n)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{build_counterexample, default_characters, ProductFunction};
    use crate::embeddings::detect_abelian_embedding;

    fn ap(p: usize, steps: &[usize]) -> JointDistribution {
        let tuples = (0..p)
            .flat_map(|x| steps.iter().map(move |&a| vec![x, (x + a) % p, (x + 2 * a) % p]))
            .collect();
        JointDistribution::uniform_on(vec![p; 3], tuples).unwrap()
    }

    #[test]
    fn product_functions_always_succeed() {
        let mu = ap(3, &[0, 1, 2]);
        let n = 5;
        let factors = (0..n)
            .map(|j| (0..3).map(|a| Complex64::from_polar(1.0, (a * j) as f64)).collect())
            .collect();
        let f = ProductFunction::new(factors, ProductMeasure::uniform(&[3; 5])).unwrap().to_table().unwrap();
        let rep = local_inverse_probe(&mu, [&f, &f, &f], &ProbeConfig { trials: 30, seed: 4, ..ProbeConfig::default() }).unwrap();
        assert_eq!(rep.successes, 30);
        assert_eq!(rep.histogram.iter().sum::<usize>(), 30);
        assert!(rep.pairwise_connected && rep.warning.is_none());
    }

    #[test]
    fn counterexample_probe_is_deterministic() {
        let mu = ap(3, &[0, 1, 2]);
        let w = detect_abelian_embedding(&mu).unwrap().unwrap();
        let fs = build_counterexample(&mu, &w, &default_characters(&mu, &w, 4)).unwrap();
        let cfg = ProbeConfig { trials: 10, seed: 9, ..ProbeConfig::default() };
        let a = local_inverse_probe(&mu, [&fs[0], &fs[1], &fs[2]], &cfg).unwrap();
        let b = local_inverse_probe(&mu, [&fs[0], &fs[1], &fs[2]], &ProbeConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a, b);
        assert!((a.correlation.value.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_is_bounded_and_seeded() {
        let mu = ap(3, &[0, 1, 2]);
        let fs = noise_functions(&mu, 3, 5).unwrap();
        assert_eq!(fs, noise_functions(&mu, 3, 5).unwrap());
        assert!(fs.iter().all(|f| f.sup_norm() <= 1.0 && f.values().iter().all(|v| v.im == 0.0)));
        assert_ne!(fs[0], fs[1]);
    }
}
