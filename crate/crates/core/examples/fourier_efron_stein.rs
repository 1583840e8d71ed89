//! Fourier spectrum of a set indicator over F_3^3, and the Efron–Stein levels
//! of the same function under a skewed product measure.

use kwise::analysis::{degree_mass, efron_stein, fourier_transform, normalized_indicator, ProductMeasure};
use kwise::patterns::PointSet;
use kwise::rational::ratio;

fn main() -> kwise::Result<()> {
    let a = PointSet::random(3, 3, 0.4, 7)?;
    let uniform = ProductMeasure::uniform(a.space().radices());
    let f = normalized_indicator(a.space(), &a.flags(), &uniform)?;

    let spec = fourier_transform(&f)?;
    let mut top: Vec<(usize, f64)> = spec.coefficients().iter().map(|c| c.norm()).enumerate().collect();
    top.sort_by(|x, y| y.1.total_cmp(&x.1));
    println!("|A| = {}, energy {:.6} = ||f||^2 {:.6}", a.len(), spec.energy(), f.norm2_sq());
    for (alpha, size) in top.iter().take(4) {
        println!("  |f^({:?})| = {size:.4}", a.space().point_of(*alpha)?);
    }

    let skewed = ProductMeasure::power(&[ratio(1, 2), ratio(1, 3), ratio(1, 6)], 3)?;
    let g = f.with_measure(skewed)?;
    let d = efron_stein(&g)?;
    println!("level weights under (1/2, 1/3, 1/6)^3: {:?}", d.level_weights());
    let (low, high) = degree_mass(&g, 1)?;
    println!("mass on degree <= 1: {low:.4}, above: {high:.4}");
    println!("reconstruction error {:.1e}", d.reconstruct().max_abs_diff(&g));
    Ok(())
}
