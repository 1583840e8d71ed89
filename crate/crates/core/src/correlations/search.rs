use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::{json, Value};

use super::ProductFunction;
use crate::analysis::{contract_coordinate, low_degree_projection, FunctionTable};
use crate::error::{Error, Result, DOMAIN};
use crate::io::table_to_json;
use crate::rng::{self, par_map, Rng, SeededRng};

/// Constraint placed on every univariate factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorConstraint {
    /// `‖Pᵢ‖₂ = 1` under the `i`-th marginal, so `‖P‖₂ = 1`.
    #[default]
    UnitNorm,
    /// `|Pᵢ| ≤ 1` pointwise.
    OneBounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub sweep_cap: usize,
    /// A restart stops once a full sweep improves the value by at most this
    /// (relative to `max(1, value)`).
    pub tolerance: f64,
    pub seed: u64,
    pub threads: usize,
    pub constraint: FactorConstraint,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 20,
            sweep_cap: 500,
            tolerance: 1e-12,
            seed: 0,
            threads: 1,
            constraint: FactorConstraint::UnitNorm,
        }
    }
}

impl SearchConfig {
    pub fn seeded(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..Self::default()
        }
    }
}

/// Slack allowed when checking that an update did not lower the objective.
const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Product(ProductFunction),
    Structured {
        low_degree: FunctionTable,
        product: ProductFunction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestartSummary {
    pub value: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Best value found with the functions achieving it; a lower bound on the
/// true maximum over the family.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub value: Complex64,
    pub certificate: Certificate,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub constraint: FactorConstraint,
}

impl CorrelationReport {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    pub fn converged(&self) -> bool {
        self.restarts[self.best_restart].converged
    }

    pub fn sweeps(&self) -> usize {
        self.restarts[self.best_restart].sweeps
    }

    /// `⟨f, P⟩` or `⟨f, L·P⟩` recomputed from the certificate.
    pub fn reevaluate(&self, f: &FunctionTable) -> Result<Complex64> {
        match &self.certificate {
            Certificate::Product(p) => f.inner(&p.to_table()?),
            Certificate::Structured { low_degree, product } => f.inner(&low_degree.mul(&product.to_table()?)?),
        }
    }
}

fn complex_list(v: &[Complex64]) -> Value {
    Value::Array(v.iter().map(|c| json!([c.re, c.im])).collect())
}

fn product_json(p: &ProductFunction) -> Value {
    json!({
        "factors": p.factors().iter().map(|f| complex_list(f)).collect::<Vec<_>>(),
        "table": p.to_table().map(|t| table_to_json(&t)).unwrap_or(Value::Null),
    })
}

impl Serialize for CorrelationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let certificate = match &self.certificate {
            Certificate::Product(p) => json!({ "kind": "product", "product": product_json(p) }),
            Certificate::Structured { low_degree, product } => json!({
                "kind": "low-degree-times-product",
                "low_degree": table_to_json(low_degree),
                "product": product_json(product),
            }),
        };
        let mut st = serializer.serialize_struct("CorrelationReport", 8)?;
        st.serialize_field("value", &[self.value.re, self.value.im])?;
        st.serialize_field("magnitude", &self.magnitude())?;
        st.serialize_field("converged", &self.converged())?;
        st.serialize_field("sweeps", &self.sweeps())?;
        st.serialize_field("best_restart", &self.best_restart)?;
        st.serialize_field("constraint", &self.constraint)?;
        st.serialize_field("restarts", &self.restarts)?;
        st.serialize_field("certificate", &certificate)?;
        st.end()
    }
}

fn check_table(f: &FunctionTable) -> Result<()> {
    if !f.measure().has_full_support() {
        return Err(Error::domain(DOMAIN, "correlation search needs a full-support base measure"));
    }
    Ok(())
}

/// Alternating maximization of `|⟨g, P⟩|` over the factors of `P`.
struct Sweeper<'a> {
    g: &'a FunctionTable,
    weights: Vec<Vec<f64>>,
    constraint: FactorConstraint,
}

impl<'a> Sweeper<'a> {
    fn new(g: &'a FunctionTable, constraint: FactorConstraint) -> Self {
        Sweeper {
            g,
            weights: (0..g.arity()).map(|i| g.measure().weights(i).to_vec()).collect(),
            constraint,
        }
    }

    fn random_factors(&self, r: &mut SeededRng) -> Vec<Vec<Complex64>> {
        self.weights
            .iter()
            .map(|w| {
                let raw: Vec<Complex64> = w
                    .iter()
                    .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
                    .collect();
                self.normalize(&raw, w).unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); w.len()])
            })
            .collect()
    }

    fn normalize(&self, c: &[Complex64], w: &[f64]) -> Option<Vec<Complex64>> {
        match self.constraint {
            FactorConstraint::UnitNorm => {
                let norm = c.iter().zip(w).map(|(v, &p)| p * v.norm_sqr()).sum::<f64>().sqrt();
                (norm > 0.0).then(|| c.iter().map(|v| v / norm).collect())
            }
            FactorConstraint::OneBounded => {
                (c.iter().any(|v| v.norm() > 0.0))
                    .then(|| c.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) }).collect())
            }
        }
    }

    /// `cᵢ(a) = E_{x₋ᵢ}[g(a, x₋ᵢ) ∏_{j≠i} conj Pⱼ(xⱼ)]`.
    fn conditional(&self, factors: &[Vec<Complex64>], i: usize) -> Vec<Complex64> {
        let mut space = self.g.space().clone();
        let mut values = self.g.values().to_vec();
        for (j, p) in factors.iter().enumerate() {
            if j == i {
                continue;
            }
            let row: Vec<Complex64> = p.iter().zip(&self.weights[j]).map(|(v, &w)| v.conj() * w).collect();
            let (s, v) = contract_coordinate(&space, &values, j, &[row]);
            space = s;
            values = v;
        }
        values
    }

    fn value_from(&self, c: &[Complex64], p: &[Complex64], i: usize) -> Complex64 {
        c.iter().zip(p).zip(&self.weights[i]).map(|((&x, q), &w)| x * q.conj() * w).sum()
    }

    /// One pass over all coordinates; returns the objective after the pass.
    fn sweep(&self, factors: &mut [Vec<Complex64>], mut current: f64) -> Result<f64> {
        for i in 0..factors.len() {
            let c = self.conditional(factors, i);
            if let Some(p) = self.normalize(&c, &self.weights[i]) {
                factors[i] = p;
            }
            let next = self.value_from(&c, &factors[i], i).norm();
            if next < current - MONOTONE_SLACK * current.max(1.0) {
                return Err(Error::internal(format!(
                    "alternating update lowered the objective from {current} to {next} at coordinate {i}"
                )));
            }
            current = next;
        }
        Ok(current)
    }

    fn objective(&self, factors: &[Vec<Complex64>]) -> f64 {
        if factors.is_empty() {
            return self.g.values()[0].norm();
        }
        let c = self.conditional(factors, 0);
        self.value_from(&c, &factors[0], 0).norm()
    }
}

fn pick_best(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Seeded restarts of alternating maximization of `|⟨f, P⟩|` over product
/// functions `P` satisfying the configured factor constraint.
pub fn product_correlation_search(f: &FunctionTable, cfg: &SearchConfig) -> Result<CorrelationReport> {
    check_table(f)?;
    let sweeper = Sweeper::new(f, cfg.constraint);
    let runs = par_map(cfg.restarts.max(1), cfg.threads, |r| -> Result<(Vec<Vec<Complex64>>, RestartSummary)> {
        let mut rng = rng::stream(cfg.seed, r as u64);
        let mut factors = sweeper.random_factors(&mut rng);
        let mut value = sweeper.objective(&factors);
        let mut sweeps = 0;
        let mut converged = f.arity() == 0;
        while !converged && sweeps < cfg.sweep_cap {
            let next = sweeper.sweep(&mut factors, value)?;
            sweeps += 1;
            converged = next - value <= cfg.tolerance * next.max(1.0);
            value = next;
        }
        Ok((factors, RestartSummary { value, sweeps, converged }))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let best = pick_best(&runs.iter().map(|(_, s)| s.value).collect::<Vec<_>>());
    let product = ProductFunction::new(runs[best].0.clone(), f.measure().clone())?;
    let value = f.inner(&product.to_table()?)?;
    Ok(CorrelationReport {
        value,
        certificate: Certificate::Product(product),
        best_restart: best,
        restarts: runs.into_iter().map(|(_, s)| s).collect(),
        constraint: cfg.constraint,
    })
}

/// Unit-norm low-degree part of `g`, or the constant 1 when it vanishes.
fn best_low_degree(g: &FunctionTable, d: usize) -> Result<FunctionTable> {
    let l = low_degree_projection(g, d)?;
    let norm = l.norm2();
    if norm > 0.0 {
        Ok(l.scale(Complex64::new(1.0 / norm, 0.0)))
    } else {
        Ok(g.map(|_| Complex64::new(1.0, 0.0)))
    }
}

/// Seeded restarts of alternating maximization of `|⟨f, L·P⟩|` over unit-norm
/// `L` of degree at most `d` and product functions `P`.
pub fn structured_correlation_search(f: &FunctionTable, d: usize, cfg: &SearchConfig) -> Result<CorrelationReport> {
    check_table(f)?;
    let template = Sweeper::new(f, cfg.constraint);
    let runs = par_map(
        cfg.restarts.max(1),
        cfg.threads,
        |r| -> Result<(FunctionTable, Vec<Vec<Complex64>>, RestartSummary)> {
            let mut rng = rng::stream(cfg.seed, r as u64);
            let mut factors = template.random_factors(&mut rng);
            let mut value: f64 = 0.0;
            let mut low = f.map(|_| Complex64::new(1.0, 0.0));
            let mut sweeps = 0;
            let mut converged = false;
            while !converged && sweeps < cfg.sweep_cap {
                let p = ProductFunction::new(factors.clone(), f.measure().clone())?.to_table()?;
                low = best_low_degree(&f.mul(&p.conj())?, d)?;
                let after_low = f.inner(&low.mul(&p)?)?.norm();
                if after_low < value - MONOTONE_SLACK * value.max(1.0) {
                    return Err(Error::internal(format!(
                        "low-degree update lowered the objective from {value} to {after_low}"
                    )));
                }
                let g = f.mul(&low.conj())?;
                let next = Sweeper::new(&g, cfg.constraint).sweep(&mut factors, after_low)?;
                sweeps += 1;
                converged = next - value <= cfg.tolerance * next.max(1.0);
                value = next;
            }
            Ok((low, factors, RestartSummary { value, sweeps, converged }))
        },
    );
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let best = pick_best(&runs.iter().map(|(_, _, s)| s.value).collect::<Vec<_>>());
    let low_degree = runs[best].0.clone();
    let product = ProductFunction::new(runs[best].1.clone(), f.measure().clone())?;
    let value = f.inner(&low_degree.mul(&product.to_table()?)?)?;
    Ok(CorrelationReport {
        value,
        certificate: Certificate::Structured { low_degree, product },
        best_restart: best,
        restarts: runs.into_iter().map(|(_, _, s)| s).collect(),
        constraint: cfg.constraint,
    })
}
