//! Random restrictions of a counterexample triple against noise: how often
//! the restricted function still correlates with a product.

use kwise::correlations::{build_counterexample, default_characters, local_inverse_probe, noise_functions, ProbeConfig};
use kwise::embeddings::detect_abelian_embedding;
use kwise::fixtures;
use kwise::rng;

fn main() -> kwise::Result<()> {
    let mu = fixtures::distribution("ap3_somewhat_p3")?;
    let n = 8;
    let w = detect_abelian_embedding(&mu)?.expect("progressions embed into Z_3");
    let cex = build_counterexample(&mu, &w, &default_characters(&mu, &w, n))?;
    let noise = noise_functions(&mu, n, 11)?;
    let cfg = ProbeConfig { seed: 1111, threads: rng::default_threads(), ..ProbeConfig::default() };
    for (name, fs) in [("counterexample", &cex), ("noise", &noise)] {
        let rep = local_inverse_probe(&mu, [&fs[0], &fs[1], &fs[2]], &cfg)?;
        println!(
            "{name:>14}: success {:.3} over {} trials, mean free coordinates {:.2}, |corr| {:.3}",
            rep.success_rate,
            rep.trials,
            rep.mean_free,
            rep.correlation.value.norm()
        );
        println!("{:>14}  histogram {:?}", "", rep.histogram);
    }
    Ok(())
}
