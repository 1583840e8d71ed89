//! Classify the bundled distributions: connectivity, Abelian and integer
//! embeddings, pairwise connectivity.

use kwise::distributions::classify;
use kwise::embeddings::solution_module;
use kwise::fixtures;

fn main() -> kwise::Result<()> {
    println!("{:<22} {:>9} {:>8} {:>4} {:>9}  witness", "distribution", "connected", "abelian", "Z", "pairwise");
    for name in fixtures::DISTRIBUTIONS {
        let mu = fixtures::distribution(name)?;
        let c = classify(&mu)?;
        let witness = match (&c.abelian_witness, &c.z_witness) {
            (_, Some(z)) => format!("Z: {:?}", z.sigma()),
            (Some(w), None) => format!("{:?}: {:?}", w.group(), w.sigma()),
            (None, None) => "-".into(),
        };
        println!(
            "{:<22} {:>9} {:>8} {:>4} {:>9}  {witness}",
            name, c.is_connected, c.has_abelian_embedding, c.has_z_embedding, c.is_pairwise_connected
        );
    }

    let module = solution_module(&fixtures::distribution("ap3_restricted_p5")?)?;
    println!("\nrestricted progressions over F_5: free rank {}, torsion {:?}", module.free_rank(), module.torsion());
    Ok(())
}
