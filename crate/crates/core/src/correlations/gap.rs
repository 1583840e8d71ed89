use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::json;

use super::search::RestartSummary;
use crate::distributions::JointDistribution;
use crate::error::{Error, Result, ARITY_MISMATCH};
use crate::rng::{self, par_map, Rng, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapConfig {
    pub restarts: usize,
    pub sweep_cap: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            restarts: 20,
            sweep_cap: 500,
            tolerance: 1e-12,
            seed: 0,
            threads: 1,
        }
    }
}

impl GapConfig {
    pub fn seeded(seed: u64) -> Self {
        GapConfig {
            seed,
            ..Self::default()
        }
    }
}

/// Feasibility tolerance for the bounded, mean-zero constraints.
const FEASIBILITY_TOL: f64 = 1e-9;
const FEASIBILITY_ROUNDS: usize = 100;

/// `λ̂ = 1 − max |E_μ[u v w]|` over the best functions found.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub lambda_hat: f64,
    pub best: Complex64,
    /// The three 1-bounded mean-zero univariate functions achieving `best`.
    pub functions: Vec<Vec<Complex64>>,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

impl GapReport {
    pub fn restart_spread(&self) -> f64 {
        let vals: Vec<f64> = self.restarts.iter().map(|r| r.value).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

impl Serialize for GapReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let functions: Vec<_> = self
            .functions
            .iter()
            .map(|f| f.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>())
            .collect();
        let mut st = serializer.serialize_struct("GapReport", 6)?;
        st.serialize_field("lambda_hat", &self.lambda_hat)?;
        st.serialize_field("best", &[self.best.re, self.best.im])?;
        st.serialize_field("functions", &functions)?;
        st.serialize_field("best_restart", &self.best_restart)?;
        st.serialize_field("restart_spread", &self.restart_spread())?;
        st.serialize_field("restarts", &self.restarts)?;
        st.end()
    }
}

fn mean(u: &[Complex64], nu: &[f64]) -> Complex64 {
    u.iter().zip(nu).map(|(x, &p)| x * p).sum()
}

fn sup(u: &[Complex64]) -> f64 {
    u.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn project_mean(u: &mut [Complex64], nu: &[f64]) {
    let m = mean(u, nu);
    for x in u.iter_mut() {
        *x -= m;
    }
}

/// Alternate clamping to the unit disc and removing the mean, then finish with
/// a mean projection and a rescale so both constraints hold exactly.
pub(crate) fn make_feasible(mut u: Vec<Complex64>, nu: &[f64]) -> Vec<Complex64> {
    for _ in 0..FEASIBILITY_ROUNDS {
        for x in u.iter_mut() {
            let r = x.norm();
            if r > 1.0 {
                *x /= r;
            }
        }
        project_mean(&mut u, nu);
        if sup(&u) <= 1.0 + FEASIBILITY_TOL {
            break;
        }
    }
    project_mean(&mut u, nu);
    let s = sup(&u).max(1.0);
    u.iter().map(|x| x / s).collect()
}

struct Trilinear<'a> {
    atoms: Vec<&'a [usize]>,
    weights: &'a [f64],
    marginals: Vec<Vec<f64>>,
}

impl<'a> Trilinear<'a> {
    fn value(&self, fs: &[Vec<Complex64>]) -> Complex64 {
        self.atoms
            .iter()
            .zip(self.weights)
            .map(|(t, &p)| fs[0][t[0]] * fs[1][t[1]] * fs[2][t[2]] * p)
            .sum()
    }

    /// `r(a) = E_μ[∏_{j≠i} f_j | x_i = a]`.
    fn conditional(&self, fs: &[Vec<Complex64>], i: usize) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.marginals[i].len()];
        for (t, &p) in self.atoms.iter().zip(self.weights) {
            let others: Complex64 = (0..3).filter(|&j| j != i).map(|j| fs[j][t[j]]).product();
            c[t[i]] += others * p;
        }
        c.iter().zip(&self.marginals[i]).map(|(x, &m)| x / m).collect()
    }

    fn random_start(&self, r: &mut SeededRng) -> Vec<Vec<Complex64>> {
        self.marginals
            .iter()
            .map(|nu| {
                let raw = nu.iter().map(|_| Complex64::from_polar(1.0, r.gen_range(0.0..std::f64::consts::TAU))).collect();
                make_feasible(raw, nu)
            })
            .collect()
    }

    /// Replace `f_i` by the best of a few closed-form feasible candidates, never
    /// lowering `|E_μ[uvw]|`.
    fn update(&self, fs: &mut [Vec<Complex64>], i: usize) {
        let nu = &self.marginals[i];
        let r = self.conditional(fs, i);
        let score = |u: &[Complex64]| mean(&u.iter().zip(&r).map(|(a, b)| a * b).collect::<Vec<_>>(), nu).norm();
        let mut aligned: Vec<Complex64> = r.iter().map(|x| x.conj()).collect();
        project_mean(&mut aligned, nu);
        let s = sup(&aligned);
        let mut candidates = Vec::new();
        if s > 0.0 {
            candidates.push(aligned.iter().map(|x| x / s).collect::<Vec<_>>());
            candidates.push(make_feasible(aligned.clone(), nu));
        }
        let phases: Vec<Complex64> =
            r.iter().map(|x| if x.norm() > 0.0 { x.conj() / x.norm() } else { Complex64::new(0.0, 0.0) }).collect();
        candidates.push(make_feasible(phases, nu));
        let mut best = score(&fs[i]);
        for c in candidates {
            let v = score(&c);
            if v > best {
                best = v;
                fs[i] = c;
            }
        }
    }
}

/// Estimate the trilinear gap `λ` of a 3-ary distribution: one minus the best
/// `|E_μ[u(x)v(y)w(z)]|` found over 1-bounded, mean-zero univariate `u, v, w`.
///
/// The search can miss the optimum, so `λ̂` is an upper estimate of `λ`.
pub fn trilinear_gap_estimate(mu: &JointDistribution, cfg: &GapConfig) -> Result<GapReport> {
    if mu.arity() != 3 {
        return Err(Error::domain(ARITY_MISMATCH, format!("trilinear gap needs arity 3, got {}", mu.arity())));
    }
    mu.require_full_support()?;
    let m = mu.marginal_measure();
    let tri = Trilinear {
        atoms: mu.support().collect(),
        weights: mu.weights(),
        marginals: (0..3).map(|i| m.weights(i).to_vec()).collect(),
    };
    let runs = par_map(cfg.restarts.max(1), cfg.threads, |r| {
        let mut rng = rng::stream(cfg.seed, r as u64);
        let mut fs = tri.random_start(&mut rng);
        let mut value = tri.value(&fs).norm();
        let mut sweeps = 0;
        let mut converged = false;
        while !converged && sweeps < cfg.sweep_cap {
            for i in 0..3 {
                tri.update(&mut fs, i);
            }
            let next = tri.value(&fs).norm();
            sweeps += 1;
            converged = next - value <= cfg.tolerance * next.max(1.0);
            value = next.max(value);
        }
        (fs, RestartSummary { value, sweeps, converged })
    });
    let mut best_restart = 0;
    for (i, (_, s)) in runs.iter().enumerate() {
        if s.value > runs[best_restart].1.value {
            best_restart = i;
        }
    }
    let functions = runs[best_restart].0.clone();
    let best = tri.value(&functions);
    Ok(GapReport {
        lambda_hat: 1.0 - best.norm(),
        best,
        functions,
        best_restart,
        restarts: runs.into_iter().map(|(_, s)| s).collect(),
    })
}
