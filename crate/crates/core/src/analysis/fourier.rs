use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{contract_coordinate, FunctionTable, ProductMeasure};
use crate::error::{Error, Result, DOMAIN};
use crate::indexing::ProductSpace;

/// Coefficients `f̂(α) = E_x[f(x) · conj χ_α(x)]` indexed by `α` in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    space: ProductSpace,
    coefficients: Vec<Complex64>,
}

impl FourierSpectrum {
    pub fn orders(&self) -> &[usize] {
        self.space.radices()
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, alpha: &[usize]) -> Result<Complex64> {
        Ok(self.coefficients[self.space.index_of(alpha)?])
    }

    /// `Σ_α |f̂(α)|²`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Rank of `k·α` for the character of rank `alpha_index`.
    pub fn scaled_index(&self, alpha_index: usize, k: i64) -> usize {
        (0..self.space.arity()).fold(0, |acc, i| {
            let m = self.space.radix(i) as i64;
            let a = self.space.digit(alpha_index, i) as i64;
            acc + ((k * a).rem_euclid(m) as usize) * self.space.stride(i)
        })
    }
}

fn dft_matrix(m: usize, sign: f64, scale: f64) -> Vec<Vec<Complex64>> {
    (0..m)
        .map(|k| {
            (0..m)
                .map(|x| Complex64::from_polar(scale, sign * TAU * ((k * x) % m) as f64 / m as f64))
                .collect()
        })
        .collect()
}

/// Fourier transform over `ℤ_{m₁} × … × ℤ_{mₙ}`; requires the uniform measure.
pub fn fourier_transform(f: &FunctionTable) -> Result<FourierSpectrum> {
    if !f.measure().is_uniform() {
        return Err(Error::domain(
            DOMAIN,
            "Fourier transform requires the uniform measure; use the Efron-Stein decomposition instead",
        ));
    }
    let mut space = f.space().clone();
    let mut values = f.values().to_vec();
    for i in 0..space.arity() {
        let m = space.radix(i);
        let (s, v) = contract_coordinate(&space, &values, i, &dft_matrix(m, -1.0, 1.0 / m as f64));
        space = s;
        values = v;
    }
    Ok(FourierSpectrum {
        space,
        coefficients: values,
    })
}

/// `f(x) = Σ_α f̂(α) χ_α(x)`.
pub fn inverse_fourier(spectrum: &FourierSpectrum) -> Result<FunctionTable> {
    let mut space = spectrum.space.clone();
    let mut values = spectrum.coefficients.clone();
    for i in 0..space.arity() {
        let m = space.radix(i);
        let (s, v) = contract_coordinate(&space, &values, i, &dft_matrix(m, 1.0, 1.0));
        space = s;
        values = v;
    }
    let measure = ProductMeasure::uniform(space.radices());
    FunctionTable::new(space, values, measure)
}

/// `χ_α(x) = exp(2πi Σ_i x_i α_i / m_i)` with the uniform measure.
pub fn character(space: &ProductSpace, alpha: &[usize]) -> Result<FunctionTable> {
    space.index_of(alpha)?;
    let radices = space.radices().to_vec();
    FunctionTable::from_fn(space.clone(), ProductMeasure::uniform(&radices), |x| {
        let phase: f64 = x
            .iter()
            .zip(alpha)
            .zip(&radices)
            .map(|((&xi, &ai), &m)| ((xi * ai) % m) as f64 / m as f64)
            .sum();
        Complex64::from_polar(1.0, TAU * phase)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Rng};

    fn random_uniform(radices: Vec<usize>, seed: u64) -> FunctionTable {
        let mut r = rng::rng(seed);
        let s = ProductSpace::new(radices).unwrap();
        let v = (0..s.total_size())
            .map(|_| Complex64::new(r.gen::<f64>() * 2.0 - 1.0, r.gen::<f64>() * 2.0 - 1.0))
            .collect();
        FunctionTable::uniform(s, v).unwrap()
    }

    #[test]
    fn constant_is_point_mass() {
        let s = ProductSpace::uniform(3, 2).unwrap();
        let f = FunctionTable::uniform(s, vec![Complex64::new(1.0, 0.0); 9]).unwrap();
        let spec = fourier_transform(&f).unwrap();
        assert!((spec.coefficients()[0] - 1.0).norm() < 1e-12);
        assert!(spec.coefficients()[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn character_is_indicator() {
        let s = ProductSpace::new(vec![3, 4]).unwrap();
        let beta = [2, 1];
        let spec = fourier_transform(&character(&s, &beta).unwrap()).unwrap();
        let b = s.index_of(&beta).unwrap();
        for (i, c) in spec.coefficients().iter().enumerate() {
            let expected = if i == b { 1.0 } else { 0.0 };
            assert!((c - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_against_direct_double_sum() {
        let f = random_uniform(vec![3, 3], 4);
        let s = f.space().clone();
        // Oracle: naive double sum per coefficient.
        let n = s.total_size() as f64;
        let mut energy = 0.0;
        for a in 0..s.total_size() {
            let alpha = s.point_of(a).unwrap();
            let coeff: Complex64 = s
                .points()
                .zip(f.values())
                .map(|(x, &v)| {
                    let ph = (x[0] * alpha[0] + x[1] * alpha[1]) as f64 / 3.0;
                    v * Complex64::from_polar(1.0, -TAU * ph)
                })
                .sum::<Complex64>()
                / n;
            energy += coeff.norm_sqr();
        }
        let spec = fourier_transform(&f).unwrap();
        assert!((spec.energy() - energy).abs() < 1e-12);
        assert!((spec.energy() - f.norm2_sq()).abs() < 1e-12);
    }

    #[test]
    fn inversion_is_exact() {
        let f = random_uniform(vec![5, 2, 3], 8);
        let g = inverse_fourier(&fourier_transform(&f).unwrap()).unwrap();
        assert!(f.max_abs_diff(&g) < 1e-12);
    }

    #[test]
    fn non_uniform_measure_rejected() {
        let s = ProductSpace::uniform(2, 1).unwrap();
        let m = ProductMeasure::from_f64_exact(&[vec![0.25, 0.75]]).unwrap();
        let f = FunctionTable::new(s, vec![Complex64::new(1.0, 0.0); 2], m).unwrap();
        assert!(fourier_transform(&f).unwrap_err().is_domain());
    }

    #[test]
    fn scaled_index_negates() {
        let f = random_uniform(vec![5, 5], 1);
        let spec = fourier_transform(&f).unwrap();
        let s = spec.space().clone();
        let a = s.index_of(&[1, 3]).unwrap();
        assert_eq!(s.point_of(spec.scaled_index(a, -2)).unwrap(), vec![3, 4]);
    }
}
