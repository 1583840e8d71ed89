//! Quick invariant suites behind the CLI's `--selftest` flag.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{efron_stein, fourier_transform, inverse_fourier, FunctionTable, ProductMeasure};
use crate::correlations::{
    build_counterexample, default_characters, kwise_correlation, reduce_arity_4_to_3, trilinear_gap_estimate, GapConfig,
};
use crate::csp::{
    csp_value_bruteforce, dictatorship_test_eval, game_value, gauss_solve_3lin, indicator, influence, random_assignment_value,
    repeat_game, Equation, Game, Lin3System, Predicate, SymbolFunction,
};
use crate::distributions::{classify, JointDistribution};
use crate::embeddings::{detect_abelian_embedding, verify_witness};
use crate::error::Result;
use crate::estimate::Options;
use crate::fixtures;
use crate::indexing::ProductSpace;
use crate::norms::{gowers_norm, swap_form, swap_norm, swap_via_exchange};
use crate::patterns::{count_patterns, count_patterns_by_pairs, fourier_3ap_check, meshulam_run, pattern_instances, PatternFamily, PointSet, RunOutcome};
use crate::rational;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Suite names: `embeddings`, `analysis`, `norms`, `correlations`, `patterns`, `csp`.
pub const SUITES: &[&str] = &["embeddings", "analysis", "norms", "correlations", "patterns", "csp"];

pub fn run(suite: &str) -> Option<SelftestReport> {
    let (name, checks): (&'static str, Vec<(&'static str, fn() -> Result<(bool, String)>)>) = match suite {
        "embeddings" => ("embeddings", vec![("fixtures", embed_fixtures), ("implication-chain", implication_chain)]),
        "analysis" => ("analysis", vec![("fourier-round-trip", fourier_round_trip), ("efron-stein", efron_stein_check)]),
        "norms" => ("norms", vec![("swap-two-paths", swap_paths), ("norm-basics", norm_basics)]),
        "correlations" => (
            "correlations",
            vec![("counterexample", counterexample), ("reduction", reduction), ("gap", gap)],
        ),
        "patterns" => ("patterns", vec![("fourier-identity", fourier_identity), ("counting", counting), ("meshulam", meshulam)]),
        "csp" => (
            "csp",
            vec![("gauss-vs-brute-force", gauss_vs_brute), ("dictators", dictators), ("games", games)],
        ),
        _ => return None,
    };
    let checks: Vec<Check> = checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect();
    Some(SelftestReport {
        suite: name,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn random_table(radices: Vec<usize>, seed: u64) -> Result<FunctionTable> {
    let mut r = rng::rng(seed);
    let space = ProductSpace::new(radices)?;
    let v = (0..space.total_size())
        .map(|_| Complex64::from_polar(r.gen::<f64>(), r.gen::<f64>() * std::f64::consts::TAU))
        .collect();
    FunctionTable::uniform(space, v)
}

fn embed_fixtures() -> Result<(bool, String)> {
    let mut ok = true;
    for (name, abelian, z, pairwise) in [
        ("ap3_full_p3", true, false, true),
        ("ap3_somewhat_p5", true, false, true),
        ("ap3_restricted_p3", true, true, true),
        ("full_support_3x3x3", false, false, true),
        ("dhj3", true, true, false),
    ] {
        let r = classify(&fixtures::distribution(name)?)?;
        ok &= r.has_abelian_embedding == abelian && r.has_z_embedding == z && r.is_pairwise_connected == pairwise;
    }
    Ok((ok, "five fixtures classified".into()))
}

fn implication_chain() -> Result<(bool, String)> {
    for seed in 0..60 {
        let mu = JointDistribution::random(vec![2, 3, 2], 0.3, 3, seed)?;
        classify(&mu)?;
        if let Some(w) = detect_abelian_embedding(&mu)? {
            if !verify_witness(&mu, &w)? {
                return Ok((false, format!("witness fails on seed {seed}")));
            }
        }
    }
    Ok((true, "60 random distributions".into()))
}

fn fourier_round_trip() -> Result<(bool, String)> {
    let f = random_table(vec![3, 5, 2], 1)?;
    let spec = fourier_transform(&f)?;
    let back = inverse_fourier(&spec)?;
    let err = back.max_abs_diff(&f).max((spec.energy() - f.norm2_sq()).abs());
    Ok((err < 1e-10, format!("max error {err:e}")))
}

fn efron_stein_check() -> Result<(bool, String)> {
    let nu = ProductMeasure::from_f64_exact(&[vec![0.5, 0.25, 0.25], vec![0.75, 0.25]])?;
    let f = random_table(vec![3, 2], 2)?.with_measure(nu)?;
    let d = efron_stein(&f)?;
    let err = d.reconstruct().max_abs_diff(&f).max((d.level_weights().iter().sum::<f64>() - f.norm2_sq()).abs());
    Ok((err < 1e-10, format!("max error {err:e}")))
}

fn swap_paths() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let fs: Vec<FunctionTable> = (0..4).map(|j| random_table(vec![3, 2, 3], 10 * seed + j)).collect::<Result<_>>()?;
        let a = swap_form([&fs[0], &fs[1], &fs[2], &fs[3]])?;
        let b = swap_via_exchange([&fs[0], &fs[1], &fs[2], &fs[3]])?;
        worst = worst.max((a - b).norm());
    }
    Ok((worst <= 1e-12, format!("max difference {worst:e}")))
}

fn norm_basics() -> Result<(bool, String)> {
    let f = random_table(vec![5], 3)?;
    let e1 = (swap_norm(&f)? - f.norm2()).abs();
    let k = FunctionTable::constant(ProductSpace::uniform(3, 2)?, ProductMeasure::uniform(&[3, 3]), Complex64::new(0.6, 0.0))?;
    let e2 = (gowers_norm(&k, 2)? - 0.6).abs();
    Ok((e1 < 1e-12 && e2 < 1e-12, format!("swap at n = 1 off by {e1:e}, U² of a constant off by {e2:e}")))
}

fn counterexample() -> Result<(bool, String)> {
    let mu = fixtures::distribution("ap3_full_p3")?;
    let w = detect_abelian_embedding(&mu)?.expect("the progression support embeds");
    let fs = build_counterexample(&mu, &w, &default_characters(&mu, &w, 4))?;
    let v = kwise_correlation(&mu, &[&fs[0], &fs[1], &fs[2]], &Options::exact())?;
    Ok(((v.value.norm() - 1.0).abs() < 1e-12, format!("|correlation| = {}", v.value.norm())))
}

fn reduction() -> Result<(bool, String)> {
    let mut worst = f64::MIN;
    for seed in 0..10 {
        let mu = JointDistribution::random(vec![2; 4], 0.5, 3, seed)?;
        let fs: Vec<FunctionTable> = (0..4)
            .map(|i| Ok(random_table(vec![2; 2], 40 * seed + i)?.with_measure(ProductMeasure::power(mu.marginal_probs(i as usize), 2)?)?))
            .collect::<Result<_>>()?;
        match reduce_arity_4_to_3(&mu, [&fs[0], &fs[1], &fs[2], &fs[3]], &Options::exact()) {
            Ok(r) => worst = worst.max(r.violation()),
            Err(e) if e.is_domain() => continue,
            Err(e) => return Err(e),
        }
    }
    Ok((worst <= 1e-10, format!("largest violation {worst:e}")))
}

fn gap() -> Result<(bool, String)> {
    let rep = trilinear_gap_estimate(&JointDistribution::full_support(vec![2, 3, 2])?, &GapConfig { restarts: 4, ..GapConfig::seeded(1) })?;
    Ok(((rep.lambda_hat - 1.0).abs() < 1e-12, format!("product distribution gap {}", rep.lambda_hat)))
}

fn fourier_identity() -> Result<(bool, String)> {
    for seed in 0..20 {
        let a = PointSet::random(3, 2, 0.5, seed)?;
        fourier_3ap_check(&a)?;
    }
    Ok((true, "20 random sets".into()))
}

fn counting() -> Result<(bool, String)> {
    let mut ok = true;
    for seed in 0..10 {
        let a = PointSet::random(5, 2, 0.4, seed)?;
        ok &= count_patterns(&a, PatternFamily::Ap3Full)? == count_patterns_by_pairs(&a, PatternFamily::Ap3Full)?;
    }
    for n in 1..=4 {
        ok &= pattern_instances(3, n, PatternFamily::CombLine(3))?.len() == 4usize.pow(n as u32) - 3usize.pow(n as u32);
    }
    Ok((ok, "pair completion and line counts".into()))
}

fn meshulam() -> Result<(bool, String)> {
    let a = PointSet::random(3, 4, 0.9, 7)?;
    let run = meshulam_run(&a)?;
    let monotone = run.trace.windows(2).all(|w| w[1].density >= w[0].density - 1e-12);
    let found = matches!(run.outcome, RunOutcome::Progression { .. });
    Ok((monotone && found, format!("{} steps", run.steps.len())))
}

fn gauss_vs_brute() -> Result<(bool, String)> {
    let mut r = rng::rng(11);
    for t in 0..30 {
        let p = [2, 3, 5][t % 3];
        let vars = 1 + t % 5;
        let eqs = (0..1 + t % 6)
            .map(|_| Equation {
                coeffs: [r.gen_range(0..p), r.gen_range(0..p), r.gen_range(0..p)],
                rhs: r.gen_range(0..p),
                vars: [r.gen_range(0..vars), r.gen_range(0..vars), r.gen_range(0..vars)],
            })
            .collect();
        let sys = Lin3System::new(p, vars, eqs)?;
        let sat = gauss_solve_3lin(&sys)?.is_some();
        let full = csp_value_bruteforce(&sys.to_instance()?, 1)?.value == rational::one();
        if sat != full {
            return Ok((false, format!("disagreement on system {t}")));
        }
    }
    let inst = Lin3System::parse(3, None, "1 1 1 0 0 1 2\n")?.to_instance()?;
    let ok = random_assignment_value(&inst) == rational::ratio(1, 3);
    Ok((ok, "30 random systems".into()))
}

fn dictators() -> Result<(bool, String)> {
    let mu = fixtures::distribution("ap3_full_p3")?;
    let pred = Predicate::lin3(3, 1, 1, 1, 0)?;
    let expect = rational::to_f64(&pred.acceptance_probability(&mu)?);
    let mut ok = true;
    for i in 0..3 {
        let f = SymbolFunction::dictator(3, 3, i)?;
        ok &= (dictatorship_test_eval(&mu, &pred, &f, &Options::exact())?.value - expect).abs() < 1e-12;
        let fa = indicator(&f, 0, &ProductMeasure::uniform(&[3; 3]))?;
        ok &= (influence(&fa, i)? - 4.0 / 9.0).abs() < 1e-12;
    }
    Ok((ok, format!("acceptance {expect}")))
}

fn games() -> Result<(bool, String)> {
    let mut g = Game::new(vec![2, 2], vec![2, 2])?;
    g.add_edge_fn(vec![0, 0], |l| l[0] == l[1])?;
    g.add_edge_fn(vec![0, 1], |l| l[0] != l[1])?;
    g.add_edge_fn(vec![1, 0], |l| l[0] == l[1])?;
    g.add_edge_fn(vec![1, 1], |l| l[0] == l[1])?;
    let v = game_value(&g, 1)?.value;
    let v2 = game_value(&repeat_game(&g, 2)?, 1)?.value;
    Ok((v2 >= &v * &v, format!("val = {}, val of the square = {}", rational::format(&v), rational::format(&v2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for s in SUITES {
            let r = run(s).unwrap();
            assert!(r.passed, "{r:?}");
        }
        assert!(run("nope").is_none());
    }
}
