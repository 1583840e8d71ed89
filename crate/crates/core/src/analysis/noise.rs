use num_complex::Complex64;

use super::{contract_coordinate, FunctionTable, ProductMeasure};
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN};

/// `T_{1−ε} f`: each coordinate survives with probability `1−ε`, else is resampled from `ν`.
pub fn noise_apply(f: &FunctionTable, eps: f64, nu: &ProductMeasure) -> Result<FunctionTable> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::domain(DOMAIN, format!("noise rate {eps} outside [0, 1]")));
    }
    if nu.radices() != f.space().radices() {
        return Err(Error::domain(ARITY_MISMATCH, "noise measure does not match the function's alphabets"));
    }
    let space = f.space();
    let mut values = f.values().to_vec();
    for i in 0..space.arity() {
        let w = nu.weights(i);
        let matrix: Vec<Vec<Complex64>> = (0..w.len())
            .map(|a| {
                w.iter()
                    .enumerate()
                    .map(|(b, &p)| Complex64::new(eps * p + if a == b { 1.0 - eps } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        values = contract_coordinate(space, &values, i, &matrix).1;
    }
    f.with_values(values)
}

/// `g − T_{1−ε/d} g` under the base measure of `g`.
pub fn make_high_degree(g: &FunctionTable, eps: f64, d: usize) -> Result<FunctionTable> {
    if d == 0 || !(eps > 0.0 && eps <= d as f64) {
        return Err(Error::domain(DOMAIN, format!("need 0 < eps <= d, got eps = {eps}, d = {d}")));
    }
    let smoothed = noise_apply(g, eps / d as f64, g.measure())?;
    g.sub(&smoothed)
}
