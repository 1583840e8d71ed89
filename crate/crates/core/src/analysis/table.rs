use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN};
use crate::indexing::ProductSpace;
use crate::rational::{self, Prob};

/// Per-coordinate distributions `ν₁ ⊗ … ⊗ νₙ`, exact with a float mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    exact: Vec<Vec<Prob>>,
    weights: Vec<Vec<f64>>,
}

impl ProductMeasure {
    pub fn new(exact: Vec<Vec<Prob>>) -> Result<Self> {
        for (i, nu) in exact.iter().enumerate() {
            if nu.is_empty() {
                return Err(Error::domain(DOMAIN, format!("coordinate {i} has an empty alphabet")));
            }
            if nu.iter().any(rational::is_negative) {
                return Err(Error::domain(DOMAIN, format!("coordinate {i} has a negative probability")));
            }
            let total: Prob = nu.iter().sum();
            if !total.is_one() {
                return Err(Error::domain(
                    DOMAIN,
                    format!("coordinate {i} sums to {} instead of 1", rational::format(&total)),
                ));
            }
        }
        let weights = exact.iter().map(|nu| nu.iter().map(rational::to_f64).collect()).collect();
        Ok(ProductMeasure { exact, weights })
    }

    pub fn uniform(radices: &[usize]) -> Self {
        let exact: Vec<Vec<Prob>> = radices
            .iter()
            .map(|&m| vec![rational::ratio(1, m as i64); m])
            .collect();
        let weights = radices.iter().map(|&m| vec![1.0 / m as f64; m]).collect();
        ProductMeasure { exact, weights }
    }

    /// The same distribution `ν` on each of `n` coordinates.
    pub fn power(nu: &[Prob], n: usize) -> Result<Self> {
        Self::new(vec![nu.to_vec(); n])
    }

    /// Convenience for tests and examples: exact rationals equal to the given floats.
    pub fn from_f64_exact(weights: &[Vec<f64>]) -> Result<Self> {
        let exact = weights
            .iter()
            .map(|nu| nu.iter().map(|&w| rational::from_f64(w)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(exact)
    }

    pub fn arity(&self) -> usize {
        self.exact.len()
    }

    pub fn radices(&self) -> Vec<usize> {
        self.exact.iter().map(Vec::len).collect()
    }

    pub fn exact(&self, coord: usize) -> &[Prob] {
        &self.exact[coord]
    }

    pub fn weights(&self, coord: usize) -> &[f64] {
        &self.weights[coord]
    }

    pub fn is_uniform(&self) -> bool {
        self.exact.iter().all(|nu| nu.iter().all(|p| *p == nu[0]))
    }

    pub fn has_full_support(&self) -> bool {
        self.exact.iter().all(|nu| nu.iter().all(|p| !p.is_zero()))
    }

    /// Measure on the coordinates `coords`, in the given order.
    pub fn select(&self, coords: &[usize]) -> ProductMeasure {
        ProductMeasure {
            exact: coords.iter().map(|&c| self.exact[c].clone()).collect(),
            weights: coords.iter().map(|&c| self.weights[c].clone()).collect(),
        }
    }

    /// Weight of every point of `space`, in rank order.
    pub fn point_weights(&self, space: &ProductSpace) -> Vec<f64> {
        let mut w = vec![1.0f64; 1];
        for i in 0..space.arity() {
            let nu = &self.weights[i];
            w = w.iter().flat_map(|&a| nu.iter().map(move |&b| a * b)).collect();
        }
        w
    }
}

/// Dense complex function on a product space with its base product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    space: ProductSpace,
    values: Vec<Complex64>,
    measure: ProductMeasure,
}

impl FunctionTable {
    pub fn new(space: ProductSpace, values: Vec<Complex64>, measure: ProductMeasure) -> Result<Self> {
        if values.len() != space.total_size() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("{} values for a space of {} points", values.len(), space.total_size()),
            ));
        }
        if measure.radices() != space.radices() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("measure alphabets {:?} do not match space {:?}", measure.radices(), space.radices()),
            ));
        }
        Ok(FunctionTable { space, values, measure })
    }

    pub fn uniform(space: ProductSpace, values: Vec<Complex64>) -> Result<Self> {
        let measure = ProductMeasure::uniform(space.radices());
        Self::new(space, values, measure)
    }

    pub fn from_fn<F: FnMut(&[usize]) -> Complex64>(
        space: ProductSpace,
        measure: ProductMeasure,
        mut f: F,
    ) -> Result<Self> {
        let values = space.points().map(|p| f(&p)).collect();
        Self::new(space, values, measure)
    }

    pub fn constant(space: ProductSpace, measure: ProductMeasure, c: Complex64) -> Result<Self> {
        let values = vec![c; space.total_size()];
        Self::new(space, values, measure)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.measure
    }

    pub fn arity(&self) -> usize {
        self.space.arity()
    }

    pub fn value(&self, point: &[usize]) -> Result<Complex64> {
        Ok(self.values[self.space.index_of(point)?])
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.space.clone(), values, self.measure.clone())
    }

    pub fn with_measure(&self, measure: ProductMeasure) -> Result<Self> {
        Self::new(self.space.clone(), self.values.clone(), measure)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        FunctionTable {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            measure: self.measure.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(FunctionTable {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            measure: self.measure.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("spaces {:?} and {:?} differ", self.space.radices(), other.space.radices()),
            ));
        }
        if self.measure != other.measure {
            return Err(Error::domain(ARITY_MISMATCH, "base measures differ"));
        }
        Ok(())
    }

    /// `E_ν[f]`.
    pub fn expectation(&self) -> Complex64 {
        let w = self.measure.point_weights(&self.space);
        self.values.iter().zip(&w).map(|(&v, &p)| v * p).sum()
    }

    /// `⟨f, g⟩ = E_ν[f · conj g]`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let w = self.measure.point_weights(&self.space);
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((&a, &b), &p)| a * b.conj() * p)
            .sum())
    }

    pub fn norm2_sq(&self) -> f64 {
        let w = self.measure.point_weights(&self.space);
        self.values.iter().zip(&w).map(|(v, &p)| v.norm_sqr() * p).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.sup_norm() <= tol
    }
}

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
