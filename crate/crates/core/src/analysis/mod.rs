//! Harmonic analysis on product spaces.
//!
//! Fourier transforms over `ℤ_{m₁} × … × ℤ_{mₙ}` (uniform measure only),
//! Efron–Stein decompositions under arbitrary full-support product measures,
//! the noise operator `T_{1−ε,ν}`, and degree-based projections.

mod efron_stein;
mod fourier;
mod noise;
mod table;

pub use efron_stein::{
    degree_mass, efron_stein, level_weights, low_degree_correlation, low_degree_projection, EfronSteinDecomposition,
};
pub use fourier::{character, fourier_transform, inverse_fourier, FourierSpectrum};
pub use noise::{make_high_degree, noise_apply};
pub use table::{FunctionTable, ProductMeasure};

#[cfg(test)]
pub(crate) use table::c;

use num_complex::Complex64;

use crate::error::{Error, Result, DOMAIN};
use crate::indexing::ProductSpace;

/// Apply a linear map on a single coordinate.
///
/// `matrix[out][in]` maps symbol `in` of coordinate `coord` to symbol `out`;
/// the output lives on `space` with the radix of `coord` replaced by
/// `matrix.len()`.
pub(crate) fn contract_coordinate(
    space: &ProductSpace,
    values: &[Complex64],
    coord: usize,
    matrix: &[Vec<Complex64>],
) -> (ProductSpace, Vec<Complex64>) {
    let m_in = space.radix(coord);
    let m_out = matrix.len();
    let mut radices = space.radices().to_vec();
    radices[coord] = m_out;
    let out_space = ProductSpace::new(radices).expect("contracted space is no larger than its input");
    let inner = space.stride(coord);
    let outer = space.total_size() / (inner * m_in);
    let mut out = vec![Complex64::new(0.0, 0.0); out_space.total_size()];
    for hi in 0..outer {
        for lo in 0..inner {
            let base_in = hi * m_in * inner + lo;
            let base_out = hi * m_out * inner + lo;
            for (o, row) in matrix.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, &w) in row.iter().enumerate() {
                    acc += w * values[base_in + a * inner];
                }
                out[base_out + o * inner] = acc;
            }
        }
    }
    (out_space, out)
}

/// The set `A` as its normalized indicator `1_A − ν(A)`.
///
/// `members` is a membership flag for each point of `space` in rank order.
pub fn normalized_indicator(space: &ProductSpace, members: &[bool], measure: &ProductMeasure) -> Result<FunctionTable> {
    if members.len() != space.total_size() {
        return Err(Error::domain(
            DOMAIN,
            format!("membership list has {} entries for {} points", members.len(), space.total_size()),
        ));
    }
    let w = measure.point_weights(space);
    let density: f64 = members.iter().zip(&w).filter(|(&m, _)| m).map(|(_, &p)| p).sum();
    let values = members
        .iter()
        .map(|&m| Complex64::new(if m { 1.0 - density } else { -density }, 0.0))
        .collect();
    FunctionTable::new(space.clone(), values, measure.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_indicator_edge_cases() {
        let s = ProductSpace::uniform(3, 2).unwrap();
        let m = ProductMeasure::uniform(s.radices());
        let empty = normalized_indicator(&s, &[false; 9], &m).unwrap();
        assert!(empty.is_zero(0.0));
        let full = normalized_indicator(&s, &[true; 9], &m).unwrap();
        assert!(full.is_zero(1e-15));
        assert!(normalized_indicator(&s, &[true; 4], &m).is_err());
    }

    #[test]
    fn normalized_indicator_half_set() {
        // 4 of 9 points of F₃² (closest to half); mean zero, two values.
        let s = ProductSpace::uniform(3, 2).unwrap();
        let m = ProductMeasure::uniform(s.radices());
        let members: Vec<bool> = (0..9).map(|i| i % 2 == 0 && i < 8).collect();
        let f = normalized_indicator(&s, &members, &m).unwrap();
        let mu = 4.0 / 9.0;
        assert!(f.expectation().norm() < 1e-15);
        for (v, &inside) in f.values().iter().zip(&members) {
            let expected = if inside { 1.0 - mu } else { -mu };
            assert!((v.re - expected).abs() < 1e-15 && v.im == 0.0);
        }
        assert!(f.sup_norm() <= 1.0);
    }
}
