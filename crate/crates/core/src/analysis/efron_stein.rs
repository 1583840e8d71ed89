use num_complex::Complex64;

use super::{contract_coordinate, FunctionTable, ProductMeasure};
use crate::error::{Error, Result, DOMAIN};
use crate::indexing::CoordinateSubset;

/// Components `f^{=S}` for every `S ⊆ [n]`, indexed by bitmask (bit `i` ↔ coordinate `i`).
#[derive(Debug, Clone)]
pub struct EfronSteinDecomposition {
    components: Vec<FunctionTable>,
}

impl EfronSteinDecomposition {
    pub fn arity(&self) -> usize {
        self.components[0].arity()
    }

    pub fn components(&self) -> &[FunctionTable] {
        &self.components
    }

    pub fn component_by_mask(&self, mask: usize) -> &FunctionTable {
        &self.components[mask]
    }

    pub fn component(&self, subset: &CoordinateSubset) -> &FunctionTable {
        let mask = subset.members().iter().fold(0usize, |m, &i| m | (1 << i));
        &self.components[mask]
    }

    /// `‖f^{=S}‖₂²` summed per level `|S|`.
    pub fn level_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.arity() + 1];
        for (mask, comp) in self.components.iter().enumerate() {
            w[mask.count_ones() as usize] += comp.norm2_sq();
        }
        w
    }

    pub fn reconstruct(&self) -> FunctionTable {
        let mut acc = self.components[0].clone();
        for comp in &self.components[1..] {
            acc = acc.add(comp).expect("components share a space");
        }
        acc
    }
}

fn require_full_support(measure: &ProductMeasure) -> Result<()> {
    if measure.has_full_support() {
        Ok(())
    } else {
        Err(Error::domain(
            DOMAIN,
            "base measure assigns probability 0 to some symbol; degree decomposition needs full support",
        ))
    }
}

fn expectation_matrix(nu: &[f64], complement: bool) -> Vec<Vec<Complex64>> {
    (0..nu.len())
        .map(|a| {
            nu.iter()
                .enumerate()
                .map(|(b, &p)| {
                    let e = if complement { -p } else { p };
                    let id = if complement && a == b { 1.0 } else { 0.0 };
                    Complex64::new(id + e, 0.0)
                })
                .collect()
        })
        .collect()
}

/// `f^{=S} = ∏_{i∈S}(I − E_i) ∏_{i∉S} E_i f` for every `S`.
pub fn efron_stein(f: &FunctionTable) -> Result<EfronSteinDecomposition> {
    require_full_support(f.measure())?;
    let n = f.arity();
    let space = f.space();
    let mut layer: Vec<Vec<Complex64>> = vec![f.values().to_vec()];
    for i in 0..n {
        let nu = f.measure().weights(i);
        let keep = expectation_matrix(nu, false);
        let diff = expectation_matrix(nu, true);
        let mut next = Vec::with_capacity(layer.len() * 2);
        for v in &layer {
            next.push(contract_coordinate(space, v, i, &keep).1);
            next.push(contract_coordinate(space, v, i, &diff).1);
        }
        layer = next;
    }
    // Leaf order has coordinate 0 as the most significant branch; re-index by bitmask.
    let mut components = vec![None; 1 << n];
    for (leaf, v) in layer.into_iter().enumerate() {
        let mask = (0..n).fold(0usize, |m, i| m | (((leaf >> (n - 1 - i)) & 1) << i));
        components[mask] = Some(f.with_values(v)?);
    }
    Ok(EfronSteinDecomposition {
        components: components.into_iter().map(|c| c.expect("every mask is a leaf")).collect(),
    })
}

/// Rows `φ_k` orthonormal in `L²(ν)` with `φ₀ = 1`.
fn orthonormal_basis(nu: &[f64]) -> Vec<Vec<f64>> {
    let m = nu.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).zip(nu).map(|((a, b), p)| a * b * p).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0; m]];
    for k in 1..m {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    basis
}

struct BasisCoefficients {
    coefficients: Vec<Complex64>,
    levels: Vec<usize>,
    inverse: Vec<Vec<Vec<Complex64>>>,
}

fn basis_coefficients(f: &FunctionTable) -> Result<BasisCoefficients> {
    require_full_support(f.measure())?;
    let space = f.space().clone();
    let mut values = f.values().to_vec();
    let mut inverse = Vec::with_capacity(space.arity());
    for i in 0..space.arity() {
        let nu = f.measure().weights(i);
        let basis = orthonormal_basis(nu);
        let forward: Vec<Vec<Complex64>> = basis
            .iter()
            .map(|phi| phi.iter().zip(nu).map(|(v, p)| Complex64::new(v * p, 0.0)).collect())
            .collect();
        let m = nu.len();
        inverse.push(
            (0..m)
                .map(|a| (0..m).map(|k| Complex64::new(basis[k][a], 0.0)).collect())
                .collect(),
        );
        values = contract_coordinate(&space, &values, i, &forward).1;
    }
    let levels = (0..space.total_size())
        .map(|idx| (0..space.arity()).filter(|&i| space.digit(idx, i) != 0).count())
        .collect();
    Ok(BasisCoefficients {
        coefficients: values,
        levels,
        inverse,
    })
}

/// `Σ_{|S|=k} ‖f^{=S}‖₂²` for `k = 0..=n`.
pub fn level_weights(f: &FunctionTable) -> Result<Vec<f64>> {
    let b = basis_coefficients(f)?;
    let mut w = vec![0.0; f.arity() + 1];
    for (c, &lvl) in b.coefficients.iter().zip(&b.levels) {
        w[lvl] += c.norm_sqr();
    }
    Ok(w)
}

/// `(Σ_{|S|≤d} ‖f^{=S}‖₂², remainder of ‖f‖₂²)`.
pub fn degree_mass(f: &FunctionTable, d: usize) -> Result<(f64, f64)> {
    let w = level_weights(f)?;
    let low: f64 = w.iter().take(d + 1).sum();
    Ok((low, (f.norm2_sq() - low).max(0.0)))
}

/// `f^{≤d} = Σ_{|S|≤d} f^{=S}`.
pub fn low_degree_projection(f: &FunctionTable, d: usize) -> Result<FunctionTable> {
    let b = basis_coefficients(f)?;
    let space = f.space();
    let mut values: Vec<Complex64> = b
        .coefficients
        .iter()
        .zip(&b.levels)
        .map(|(&c, &lvl)| if lvl <= d { c } else { Complex64::new(0.0, 0.0) })
        .collect();
    for (i, inv) in b.inverse.iter().enumerate() {
        values = contract_coordinate(space, &values, i, inv).1;
    }
    f.with_values(values)
}

/// `max |⟨f, L⟩|` over unit-norm `L` of degree at most `d`, i.e. `‖f^{≤d}‖₂`.
pub fn low_degree_correlation(f: &FunctionTable, d: usize) -> Result<f64> {
    Ok(degree_mass(f, d)?.0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::c;
    use crate::indexing::ProductSpace;
    use crate::rng::{self, Rng};

    fn random_table(radices: Vec<usize>, measure: ProductMeasure, seed: u64) -> FunctionTable {
        let mut r = rng::rng(seed);
        let s = ProductSpace::new(radices).unwrap();
        let v = (0..s.total_size())
            .map(|_| c(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5))
            .collect();
        FunctionTable::new(s, v, measure).unwrap()
    }

    fn skewed3() -> ProductMeasure {
        ProductMeasure::from_f64_exact(&[vec![0.5, 0.25, 0.25], vec![0.125, 0.375, 0.5], vec![0.75, 0.25, 0.0]])
            .unwrap()
    }

    /// Oracle: `E[f | x_T]` by direct summation over the coordinates outside `T`.
    fn conditional(f: &FunctionTable, t_mask: usize) -> Vec<Complex64> {
        let s = f.space();
        let n = s.arity();
        let mut out = vec![c(0.0, 0.0); s.total_size()];
        for x in 0..s.total_size() {
            for y in 0..s.total_size() {
                let agrees = (0..n).all(|i| t_mask >> i & 1 == 0 || s.digit(x, i) == s.digit(y, i));
                if !agrees {
                    continue;
                }
                let w: f64 = (0..n)
                    .filter(|i| t_mask >> i & 1 == 0)
                    .map(|i| f.measure().weights(i)[s.digit(y, i)])
                    .product();
                out[x] += f.values()[y] * w;
            }
        }
        out
    }

    #[test]
    fn matches_inclusion_exclusion_oracle() {
        let m = ProductMeasure::from_f64_exact(&[vec![0.5, 0.25, 0.25], vec![0.125, 0.875], vec![0.5, 0.5]]).unwrap();
        let f = random_table(vec![3, 2, 2], m, 3);
        let es = efron_stein(&f).unwrap();
        for s_mask in 0usize..8 {
            let mut expected = vec![c(0.0, 0.0); f.space().total_size()];
            for t in 0usize..8 {
                if t & !s_mask != 0 {
                    continue;
                }
                let sign = if (s_mask & !t).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                for (e, v) in expected.iter_mut().zip(conditional(&f, t)) {
                    *e += v * sign;
                }
            }
            let got = es.component_by_mask(s_mask).values();
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_and_reconstructs() {
        let m = ProductMeasure::from_f64_exact(&[vec![0.5, 0.25, 0.25], vec![0.125, 0.375, 0.5], vec![0.75, 0.25]])
            .unwrap();
        let f = random_table(vec![3, 3, 2], m, 9);
        let es = efron_stein(&f).unwrap();
        assert!(es.reconstruct().max_abs_diff(&f) < 1e-10);
        for a in 0..8 {
            for b in (a + 1)..8 {
                let ip = es.component_by_mask(a).inner(es.component_by_mask(b)).unwrap();
                assert!(ip.norm() < 1e-10);
            }
        }
        let total: f64 = es.level_weights().iter().sum();
        assert!((total - f.norm2_sq()).abs() < 1e-10);
        let via_basis = level_weights(&f).unwrap();
        for (x, y) in via_basis.iter().zip(es.level_weights()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_probability_rejected() {
        let f = random_table(vec![3, 3, 3], skewed3(), 1);
        assert!(efron_stein(&f).unwrap_err().is_domain());
        assert!(degree_mass(&f, 1).unwrap_err().is_domain());
    }

    #[test]
    fn constant_and_dictator() {
        let s = ProductSpace::uniform(3, 2).unwrap();
        let m = ProductMeasure::uniform(s.radices());
        let one = FunctionTable::constant(s.clone(), m.clone(), c(2.0, 0.0)).unwrap();
        let es = efron_stein(&one).unwrap();
        assert!((1..4).all(|k| es.component_by_mask(k).is_zero(1e-12)));
        let dict = FunctionTable::from_fn(s, m, |x| c([1.0, -1.0, 0.0][x[0]], 0.0)).unwrap();
        let es = efron_stein(&dict).unwrap();
        for k in [0, 2, 3] {
            assert!(es.component_by_mask(k).is_zero(1e-12));
        }
        assert!(es.component_by_mask(1).max_abs_diff(&dict) < 1e-12);
        let (_, high) = degree_mass(&dict, 1).unwrap();
        assert!(high < 1e-12);
    }

    #[test]
    fn parity_is_top_level() {
        let s = ProductSpace::uniform(2, 3).unwrap();
        let f = FunctionTable::from_fn(s.clone(), ProductMeasure::uniform(s.radices()), |x| {
            c(if x.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .unwrap();
        let (low, high) = degree_mass(&f, 2).unwrap();
        assert!(low < 1e-12 && (high - 1.0).abs() < 1e-12);
        assert!(low_degree_correlation(&f, 2).unwrap() < 1e-6);
    }

    #[test]
    fn projection_of_low_degree_is_identity() {
        let m = ProductMeasure::from_f64_exact(&[vec![0.25, 0.75], vec![0.5, 0.5], vec![0.375, 0.625]]).unwrap();
        let f = random_table(vec![2, 2, 2], m, 5);
        let es = efron_stein(&f).unwrap();
        let mut low = es.component_by_mask(0).clone();
        for mask in 1..8usize {
            if mask.count_ones() <= 1 {
                low = low.add(es.component_by_mask(mask)).unwrap();
            }
        }
        let p = low_degree_projection(&f, 1).unwrap();
        assert!(p.max_abs_diff(&low) < 1e-12);
        assert!((low_degree_correlation(&low, 1).unwrap() - low.norm2()).abs() < 1e-12);
    }

    #[test]
    fn correlation_matches_grid_search() {
        // Unit-norm degree ≤ 1 functions on {0,1}², uniform: L = a·1 + b·φ(x₁) + c·φ(x₂), a²+b²+c²=1.
        let s = ProductSpace::uniform(2, 2).unwrap();
        let f = FunctionTable::uniform(s.clone(), vec![c(0.3, 0.0), c(-0.8, 0.0), c(0.5, 0.0), c(0.9, 0.0)]).unwrap();
        let chi = |b: usize| if b == 0 { 1.0 } else { -1.0 };
        let steps = 400;
        let mut best: f64 = 0.0;
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..(2 * steps) {
                let phi = std::f64::consts::PI * j as f64 / steps as f64;
                let (a, b, cc) = (theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin());
                let l = FunctionTable::from_fn(s.clone(), ProductMeasure::uniform(s.radices()), |x| {
                    c(a + b * chi(x[0]) + cc * chi(x[1]), 0.0)
                })
                .unwrap();
                best = best.max(f.inner(&l).unwrap().norm());
            }
        }
        assert!((low_degree_correlation(&f, 1).unwrap() - best).abs() < 1e-3);
    }
}
