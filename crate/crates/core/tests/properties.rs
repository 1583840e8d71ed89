use num_complex::Complex64;
use proptest::prelude::*;

use kwise::analysis::{efron_stein, fourier_transform, inverse_fourier, FunctionTable, ProductMeasure};
use kwise::correlations::kwise_correlation;
use kwise::csp::{csp_value_bruteforce, gauss_solve_3lin, Equation, Lin3System, Predicate};
use kwise::distributions::{classify, JointDistribution, SupportPolicy};
use kwise::embeddings::{detect_abelian_embedding, detect_z_embedding, verify_witness};
use kwise::estimate::Options;
use kwise::indexing::ProductSpace;
use kwise::io::{distribution_from_str, distribution_to_json};
use kwise::norms::{swap_form, swap_via_exchange};
use kwise::patterns::PointSet;
use kwise::rational;

fn radices(max_arity: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 1..=max_arity)
}

fn space_and_values(max_arity: usize) -> impl Strategy<Value = (ProductSpace, Vec<Complex64>)> {
    radices(max_arity).prop_flat_map(|r| {
        let space = ProductSpace::new(r).unwrap();
        let size = space.total_size();
        (Just(space), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), size))
    })
}

fn weights(m: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..6, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_and_point_round_trip(r in radices(5), pick in any::<prop::sample::Index>()) {
        let space = ProductSpace::new(r).unwrap();
        let i = pick.index(space.total_size());
        let x = space.point_of(i).unwrap();
        prop_assert_eq!(space.index_of(&x).unwrap(), i);
    }

    #[test]
    fn fourier_inverts_and_preserves_energy((space, values) in space_and_values(3)) {
        let f = FunctionTable::uniform(space, values).unwrap();
        let spec = fourier_transform(&f).unwrap();
        prop_assert!(inverse_fourier(&spec).unwrap().max_abs_diff(&f) < 1e-12);
        prop_assert!((spec.energy() - f.norm2_sq()).abs() < 1e-12);
    }

    #[test]
    fn efron_stein_reconstructs_under_skewed_measures(
        (space, values) in space_and_values(3),
        w in weights(3),
    ) {
        let r = space.radices().to_vec();
        let exact: Vec<Vec<_>> = r
            .iter()
            .map(|&m| {
                let total: u32 = w[..m].iter().sum();
                w[..m].iter().map(|&x| rational::ratio(x as i64, total as i64)).collect()
            })
            .collect();
        let f = FunctionTable::new(space, values, ProductMeasure::new(exact).unwrap()).unwrap();
        let d = efron_stein(&f).unwrap();
        prop_assert!(d.reconstruct().max_abs_diff(&f) < 1e-12);
        let total: f64 = d.level_weights().iter().sum();
        prop_assert!((total - f.norm2_sq()).abs() < 1e-10);
    }

    #[test]
    fn correlation_is_bounded_by_sup_norms(seed in any::<u64>(), n in 1usize..=3) {
        let mu = JointDistribution::random(vec![2, 3, 2], 0.4, 5, seed).unwrap();
        let marg = mu.marginal_measure();
        let fs: Vec<FunctionTable> = (0..3)
            .map(|i| {
                let m = mu.alphabets()[i];
                let space = ProductSpace::uniform(m, n).unwrap();
                FunctionTable::from_fn(space, ProductMeasure::power(marg.exact(i), n).unwrap(), |x| {
                    Complex64::from_polar(1.0 / (1 + x[0]) as f64, (x.iter().sum::<usize>() as u64 ^ seed) as f64)
                })
                .unwrap()
            })
            .collect();
        let refs: Vec<&FunctionTable> = fs.iter().collect();
        let c = kwise_correlation(&mu, &refs, &Options::exact()).unwrap();
        let bound: f64 = fs.iter().map(FunctionTable::sup_norm).product();
        prop_assert!(c.value.norm() <= bound + 1e-12);
    }

    #[test]
    fn distributions_survive_json(seed in any::<u64>(), k in 2usize..=4) {
        let mu = JointDistribution::random(vec![3; k], 0.3, 9, seed).unwrap();
        let text = distribution_to_json(&mu).to_string();
        prop_assert_eq!(distribution_from_str(&text, SupportPolicy::Reject).unwrap(), mu);
    }

    #[test]
    fn detected_witnesses_verify_and_respect_the_chain(seed in any::<u64>(), k in 2usize..=4, density in 0.05f64..0.9) {
        let mu = JointDistribution::random(vec![3; k], density, 4, seed).unwrap();
        if let Some(w) = detect_abelian_embedding(&mu).unwrap() {
            prop_assert!(verify_witness(&mu, &w).unwrap());
        }
        if let Some(w) = detect_z_embedding(&mu).unwrap() {
            prop_assert!(verify_witness(&mu, &w).unwrap());
            prop_assert!(detect_abelian_embedding(&mu).unwrap().is_some());
        }
        let c = classify(&mu).unwrap();
        prop_assert!(!c.is_connected || !c.has_abelian_embedding);
        prop_assert!(c.has_abelian_embedding || c.is_pairwise_connected);
    }

    #[test]
    fn swap_paths_agree((space, values) in space_and_values(2), rot in 1usize..17) {
        let f = FunctionTable::uniform(space.clone(), values.clone()).unwrap();
        let g = FunctionTable::uniform(space, values.iter().cycle().skip(rot).take(values.len()).copied().collect()).unwrap();
        let q = [&f, &g, &g, &f];
        prop_assert!((swap_form(q).unwrap() - swap_via_exchange(q).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn predicates_survive_bitstrings(table in prop::collection::vec(any::<bool>(), 27)) {
        let p = Predicate::new(3, 3, table).unwrap();
        prop_assert_eq!(Predicate::from_bitstring(3, 3, &p.to_bitstring()).unwrap(), p);
    }

    #[test]
    fn gauss_matches_brute_force(
        p in prop::sample::select(vec![2usize, 3, 5]),
        rows in prop::collection::vec((1usize..5, 1usize..5, 1usize..5, 0usize..5, 0usize..5, 0usize..5, 0usize..5), 1..7),
    ) {
        let vars = 5;
        let eqs: Vec<Equation> = rows
            .iter()
            .filter(|r| r.4 != r.5 && r.5 != r.6 && r.4 != r.6)
            .map(|&(a, b, c, d, i, j, k)| Equation { coeffs: [1 + (a - 1) % (p - 1), 1 + (b - 1) % (p - 1), 1 + (c - 1) % (p - 1)], rhs: d % p, vars: [i, j, k] })
            .collect();
        let sys = Lin3System::new(p, vars, eqs).unwrap();
        let gauss = gauss_solve_3lin(&sys).unwrap();
        let brute = csp_value_bruteforce(&sys.to_instance().unwrap(), 1).unwrap();
        prop_assert_eq!(gauss.is_some(), brute.value == rational::one());
        if let Some(x) = gauss {
            prop_assert!(sys.satisfies(&x));
        }
    }

    #[test]
    fn point_sets_survive_hex(seed in any::<u64>(), n in 1usize..=4, density in 0.0f64..=1.0) {
        let a = PointSet::random(3, n, density, seed).unwrap();
        prop_assert_eq!(PointSet::from_hex(3, n, &a.to_hex()).unwrap(), a);
    }

    #[test]
    fn rationals_survive_text(num in -1000i64..1000, den in 1i64..1000) {
        let q = rational::ratio(num, den);
        prop_assert_eq!(rational::parse(&rational::format(&q)).unwrap(), q);
    }
}
