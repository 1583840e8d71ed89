//! Functions built from an embedding witness correlate perfectly under the
//! distribution while carrying almost no low-degree mass.

use kwise::analysis::{degree_mass, FunctionTable};
use kwise::correlations::{build_counterexample, default_characters, kwise_correlation};
use kwise::embeddings::detect_abelian_embedding;
use kwise::estimate::Options;
use kwise::fixtures;

fn main() -> kwise::Result<()> {
    for name in ["ap3_full_p3", "ap3_somewhat_p3", "dhj3"] {
        let mu = fixtures::distribution(name)?;
        let w = detect_abelian_embedding(&mu)?.expect("these supports embed");
        for n in [2, 4, 6] {
            let fs = build_counterexample(&mu, &w, &default_characters(&mu, &w, n))?;
            let refs: Vec<&FunctionTable> = fs.iter().collect();
            let corr = kwise_correlation(&mu, &refs, &Options::exact())?;
            let low: Vec<String> = fs
                .iter()
                .map(|f| Ok(format!("{:.3}", degree_mass(f, 2)?.0 / f.norm2_sq())))
                .collect::<kwise::Result<_>>()?;
            println!("{name:<16} n={n}: |corr| = {:.12}, degree<=2 fractions [{}]", corr.value.norm(), low.join(", "));
        }
    }
    Ok(())
}
