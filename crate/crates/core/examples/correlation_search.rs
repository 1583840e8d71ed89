//! Product and structured correlation searches, and the trilinear gap of a
//! few distributions.

use kwise::analysis::ProductMeasure;
use kwise::correlations::{product_correlation_search, structured_correlation_search, trilinear_gap_estimate, GapConfig, SearchConfig};
use kwise::correlations::ProductFunction;
use kwise::fixtures;
use num_complex::Complex64;

fn main() -> kwise::Result<()> {
    let m = ProductMeasure::uniform(&[3, 3, 3]);
    let factors = vec![
        vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.5)],
        vec![Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)],
        vec![Complex64::new(1.0, 0.0); 3],
    ];
    let f = ProductFunction::new(factors, m)?.to_table()?;
    let unit = f.scale(Complex64::new(1.0 / f.norm2(), 0.0));

    let cfg = SearchConfig { restarts: 8, ..SearchConfig::seeded(5) };
    let p = product_correlation_search(&unit, &cfg)?;
    println!("product search on a normalized product: {:.6} after {} sweeps", p.magnitude(), p.sweeps());
    let s = structured_correlation_search(&unit, 1, &cfg)?;
    println!("structured search (degree 1): {:.6}", s.magnitude());

    for name in ["ap3_full_p3", "ap3_somewhat_p3", "full_support_3x3x3", "dhj3"] {
        let mu = fixtures::distribution(name)?;
        let gap = trilinear_gap_estimate(&mu, &GapConfig { restarts: 6, ..GapConfig::seeded(9) })?;
        println!("{name:<20} gap estimate {:.4} (best |E uvw| = {:.4})", gap.lambda_hat, gap.best.norm());
    }
    Ok(())
}
