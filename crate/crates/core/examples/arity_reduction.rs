//! The 4-to-3 arity reduction on a random 4-ary distribution: both sides of
//! the inequality and the mass on the diagonal.

use std::f64::consts::PI;

use num_complex::Complex64;

use kwise::analysis::{FunctionTable, ProductMeasure};
use kwise::correlations::reduce_arity_4_to_3;
use kwise::distributions::JointDistribution;
use kwise::estimate::Options;
use kwise::indexing::ProductSpace;
use kwise::rational;
use kwise::rng::{self, Rng};

fn main() -> kwise::Result<()> {
    let mu = JointDistribution::random(vec![2, 3, 2, 3], 0.3, 6, 42)?;
    let n = 2;
    let marg = mu.marginal_measure();
    let mut r = rng::rng(43);
    let fs: Vec<FunctionTable> = (0..4)
        .map(|i| {
            let space = ProductSpace::uniform(mu.alphabets()[i], n)?;
            let measure = ProductMeasure::power(marg.exact(i), n)?;
            FunctionTable::from_fn(space, measure, |_| Complex64::from_polar(1.0, 2.0 * PI * r.gen::<f64>()))
        })
        .collect::<kwise::Result<_>>()?;
    let red = reduce_arity_4_to_3(&mu, [&fs[0], &fs[1], &fs[2], &fs[3]], &Options::exact())?;
    println!("support {} atoms, paired support {} atoms", mu.support_size(), red.paired.support_size());
    println!("|E f1 f2 f3 f4|^2 = {:.6e} <= {:.6e}", red.lhs_sq, red.rhs.value.re);
    println!(
        "diagonal mass {} >= alpha^2 = {}",
        rational::format(&red.diagonal_mass),
        rational::format(&(&red.alpha * &red.alpha))
    );
    Ok(())
}
