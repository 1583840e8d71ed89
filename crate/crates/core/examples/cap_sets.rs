//! Progression-free sets in F_3^n, combinatorial lines, and the
//! density-increment loop.

use kwise::patterns::{count_patterns, max_pattern_free, meshulam_run, pattern_instances, PatternFamily, PointSet, SearchMethod};

fn main() -> kwise::Result<()> {
    for n in 1..=3 {
        let best = max_pattern_free(3, n, PatternFamily::Ap3Full, SearchMethod::BranchAndBound, 50_000_000)?;
        println!(
            "F_3^{n}: largest progression-free set {} ({} nodes, complete {}), e.g. {:?}",
            best.size,
            best.nodes,
            best.complete,
            best.witness.members()
        );
    }
    for n in 1..=5 {
        println!("lines in [3]^{n}: {}", pattern_instances(3, n, PatternFamily::CombLine(3))?.len());
    }

    let a = PointSet::random(3, 5, 0.5, 3)?;
    println!("random set of density {:.3} has {} progressions", a.density_f64(), count_patterns(&a, PatternFamily::Ap3Full)?);
    let run = meshulam_run(&a)?;
    println!("density increment: {} steps, outcome {:?}", run.steps.len(), run.outcome);
    Ok(())
}
