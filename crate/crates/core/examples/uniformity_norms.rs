//! Gowers, box and swap norms of a character and of random noise, with the
//! swap form computed both ways.

use std::f64::consts::PI;

use num_complex::Complex64;

use kwise::analysis::{FunctionTable, ProductMeasure};
use kwise::estimate::Options;
use kwise::indexing::{CoordinateSubset, ProductSpace};
use kwise::norms::{box_norm, gowers_norm, swap_form, swap_norm, swap_norm_with, swap_via_exchange};
use kwise::rng::{self, Rng};

fn main() -> kwise::Result<()> {
    let space = ProductSpace::uniform(3, 3)?;
    let m = ProductMeasure::uniform(space.radices());
    let chi = FunctionTable::from_fn(space.clone(), m.clone(), |x| {
        Complex64::from_polar(1.0, 2.0 * PI * (x[0] + 2 * x[2]) as f64 / 3.0)
    })?;
    let mut r = rng::rng(1);
    let noise = FunctionTable::from_fn(space, m, |_| Complex64::new(r.gen_range(-1.0..1.0), 0.0))?;

    let split = CoordinateSubset::from_members(3, &[0])?;
    for (name, f) in [("character", &chi), ("noise", &noise)] {
        println!(
            "{name:>9}: U2 {:.4}  U3 {:.4}  box[0|12] {:.4}  swap {:.4}",
            gowers_norm(f, 2)?,
            gowers_norm(f, 3)?,
            box_norm(f, &split)?,
            swap_norm(f)?
        );
    }

    let q = [&noise, &chi, &noise, &chi];
    println!("swap form by splits {:.3e}, by exchange {:.3e}", swap_form(q)?, swap_via_exchange(q)?);
    let mc = swap_norm_with(&noise, &Options::monte_carlo(200_000, 3))?;
    println!("sampled swap norm of noise {:.4} +/- {:.4}", mc.value, mc.stderr);
    Ok(())
}
