//! Linear equations mod p, random 3-SAT, a dictatorship test and a repeated
//! two-player game.

use kwise::analysis::ProductMeasure;
use kwise::csp::{
    coloring_game, csp_value_bruteforce, dictatorship_test_eval, game_value, gauss_solve_3lin, indicator, influences,
    random_assignment_value, repeat_game, CspInstance, Lin3System, Predicate, SymbolFunction,
};
use kwise::estimate::Options;
use kwise::fixtures;
use kwise::rational;
use kwise::rng::{self, Rng};

fn main() -> kwise::Result<()> {
    let sys = Lin3System::parse(3, None, "1 1 1 0 0 1 2\n1 2 1 1 1 2 3\n2 1 1 2 0 3 4\n")?;
    println!("3-Lin over F_3: Gaussian elimination {:?}", gauss_solve_3lin(&sys)?);
    let value = csp_value_bruteforce(&sys.to_instance()?, 1)?;
    println!("  exhaustive value {}", rational::format(&value.value));

    let mut r = rng::rng(8);
    let mut sat = CspInstance::new(8, 2)?;
    for _ in 0..30 {
        let mut vars: Vec<usize> = (0..8).collect();
        for i in 0..3 {
            let j = r.gen_range(i..8);
            vars.swap(i, j);
        }
        sat.push(vars[..3].to_vec(), Predicate::sat3([r.gen(), r.gen(), r.gen()]))?;
    }
    let v = csp_value_bruteforce(&sat, 1)?;
    println!(
        "random 3-SAT, 8 vars, 30 clauses: value {} (random assignment {})",
        rational::format(&v.value),
        rational::format(&random_assignment_value(&sat))
    );

    let mu = fixtures::distribution("ap3_full_p3")?;
    let pred = fixtures::predicates("lin3_p3")?[3].clone();
    let n = 4;
    for (name, f) in [
        ("dictator 2", SymbolFunction::dictator(3, n, 2)?),
        ("constant 0", SymbolFunction::constant(3, n, 0)?),
        ("random", SymbolFunction::random(3, n, 5)?),
    ] {
        let acc = dictatorship_test_eval(&mu, &pred, &f, &Options::exact())?;
        let nu = ProductMeasure::power(mu.marginal_probs(0), n)?;
        let inf = influences(&indicator(&f, 0, &nu)?)?;
        println!("{name:>10}: acceptance {:.4}, influences of [f = 0] {:.3?}", acc.value, inf);
    }

    let g = coloring_game(3, &[(0, 1), (1, 2), (0, 2)], 2)?;
    let v1 = game_value(&g, 1)?;
    let v2 = game_value(&repeat_game(&g, 2)?, 1)?;
    println!("triangle coloring game: value {}, repeated twice {}", rational::format(&v1.value), rational::format(&v2.value));
    Ok(())
}
