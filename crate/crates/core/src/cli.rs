//! The `kwise` command-line interface.
//!
//! Every command prints one JSON document wrapping its result with the seed,
//! the crate version and a SHA-256 hash of the configuration and inputs.
//! Exit codes: 0 on success, 2 on domain errors (including usage errors),
//! 1 on internal-consistency failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{degree_mass, efron_stein, fourier_transform, FunctionTable, ProductMeasure};
use crate::correlations::{
    build_counterexample, default_characters, kwise_correlation, local_inverse_probe, noise_functions, product_correlation_search,
    reduce_arity_4_to_3, structured_correlation_search, trilinear_gap_estimate, Character, FactorConstraint, GapConfig, ProbeConfig,
    SearchConfig,
};
use crate::csp::{
    classify_gap, csp_value_bruteforce, dictatorship_test_eval, game_value, gauss_solve_3lin, indicator, influences,
    random_assignment_value, repeat_game, CspInstance, Game, Lin3System, Predicate, SymbolFunction,
};
use crate::distributions::{classify, is_connected, is_pairwise_connected, JointDistribution, SupportPolicy};
use crate::embeddings::{canonical_group, detect_abelian_embedding, detect_z_embedding, solution_module, EmbeddingWitness};
use crate::error::{Error, Result, DOMAIN, IO, MISSING_SEED, USAGE};
use crate::estimate::{Estimate, Options};
use crate::fixtures;
use crate::indexing::{CoordinateSubset, ProductSpace};
use crate::io::{distribution_from_str, table_from_str, table_to_json, witness_from_str};
use crate::norms::{box_form_with, gowers_norm_with, swap_norm_with, swap_via_exchange};
use crate::patterns::{
    ap_free_average, count_patterns, count_patterns_by_pairs, fourier_3ap_check, max_pattern_free, meshulam_run, pattern_instances,
    PatternFamily, PointSet, SearchMethod,
};
use crate::rational;
use crate::selftest;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kwise", version, about = "k-wise correlations, Abelian embeddings, uniformity norms, patterns and CSPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Seed for every randomized step; required by randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluate expectations exactly (the default).
    #[arg(long, global = true, conflicts_with = "mc")]
    pub exact: bool,
    /// Estimate expectations from N Monte Carlo samples.
    #[arg(long, global = true, value_name = "N")]
    pub mc: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Convergence tolerance for the iterative searches.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Run the invariant suite of the command's module instead.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub selftest: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Gowers,
    Box,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapMethod {
    Matrix,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchKind {
    Product,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintArg {
    UnitNorm,
    OneBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Exhaustive,
    BranchAndBound,
}

fn parse_family(s: &str) -> std::result::Result<PatternFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Detect Abelian and (Z,+)-embeddings of a distribution's support.
    EmbedCheck {
        /// Distribution JSON file or fixture name.
        #[arg(long)]
        dist: Option<String>,
    },
    /// Connectivity, embeddings and pairwise connectivity of a distribution.
    Classify {
        #[arg(long)]
        dist: Option<String>,
    },
    /// Fourier coefficients of a function table (uniform measure).
    Fourier {
        #[arg(long = "fn")]
        function: Option<String>,
    },
    /// Efron–Stein level weights of a function table.
    Decompose {
        #[arg(long = "fn")]
        function: Option<String>,
        /// Also report the mass on degrees up to this.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Gowers, box or swap norm of a function table.
    Norm {
        #[arg(long = "fn")]
        function: Option<String>,
        #[arg(long, value_enum, default_value = "swap")]
        kind: NormKind,
        /// Order of the Gowers norm.
        #[arg(long, default_value_t = 2)]
        s: usize,
        /// Coordinates of the box split, comma separated.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
        /// Swap norm path: average of box forms, or the exchange distribution.
        #[arg(long, value_enum)]
        method: Option<SwapMethod>,
    },
    /// k-wise correlation of k tables, or a product/structured correlation search on one.
    Correlate {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long = "fn")]
        functions: Vec<String>,
        #[arg(long, value_enum)]
        search: Option<SearchKind>,
        /// Degree of the low-degree part in a structured search.
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        sweep_cap: usize,
        #[arg(long, value_enum, default_value = "unit-norm")]
        constraint: ConstraintArg,
    },
    /// Build the character counterexample from an embedding witness.
    Counterexample {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Witness JSON file; detected from the distribution when absent.
        #[arg(long)]
        witness: Option<String>,
        /// Frequency of the real characters used for (Z,+)-witnesses.
        #[arg(long)]
        theta: Option<f64>,
        /// Include the function tables in the output.
        #[arg(long)]
        tables: bool,
    },
    /// The 4-to-3 arity reduction inequality for four tables.
    Reduce43 {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long = "fn")]
        functions: Vec<String>,
    },
    /// Estimate the trilinear gap of a 3-ary distribution.
    Gap3 {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        sweep_cap: usize,
    },
    /// Local inverse probe on random restrictions of the first table.
    Probe {
        #[arg(long)]
        dist: Option<String>,
        /// Three tables; without them a counterexample (or noise) triple on --n coordinates is used.
        #[arg(long = "fn")]
        functions: Vec<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Use i.i.d. uniform real noise on [-1, 1] instead of the counterexample.
        #[arg(long)]
        noise: bool,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Count pattern instances in a set, or search for the largest pattern-free set.
    Patterns {
        #[arg(long, value_parser = parse_family, default_value = "ap3-full")]
        family: PatternFamily,
        /// Alphabet size (a prime for progressions, k for combinatorial lines).
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[arg(long)]
        n: Option<usize>,
        /// Point set as a hex bitmask or a JSON list of point ranks.
        #[arg(long)]
        set: Option<String>,
        /// Draw a random set with this density instead.
        #[arg(long)]
        density: Option<f64>,
        /// Search for the largest pattern-free set.
        #[arg(long)]
        max_free: bool,
        #[arg(long, value_enum, default_value = "branch-and-bound")]
        method: MethodArg,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Run the density-increment loop until a 3-term progression is found.
    Meshulam {
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        density: Option<f64>,
    },
    /// Number of combinatorial lines in {0,…,k−1}ⁿ.
    Lines {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Also count by enumerating the lines.
        #[arg(long)]
        enumerate: bool,
    },
    /// Exact value of a CSP instance, with Gaussian elimination for 3-Lin systems.
    Csp {
        /// Instance JSON file.
        #[arg(long)]
        instance: Option<String>,
        /// 3-Lin system in the compact `a b c d i j k` form.
        #[arg(long)]
        lin3: Option<String>,
        /// Field size for --lin3.
        #[arg(long)]
        p: Option<usize>,
        /// Completeness threshold, as a rational.
        #[arg(long)]
        completeness: Option<String>,
        /// Soundness threshold, as a rational.
        #[arg(long)]
        soundness: Option<String>,
    },
    /// Acceptance probability of a dictatorship test, with influences.
    DictTest {
        #[arg(long)]
        dist: Option<String>,
        /// Predicate truth table as a 0/1 string over Σᵏ.
        #[arg(long)]
        pred: Option<String>,
        /// Predicate fixture set (sat3, lin3_p2, ...) and index into it.
        #[arg(long)]
        pred_set: Option<String>,
        #[arg(long, default_value_t = 0)]
        pred_index: usize,
        /// Labeling JSON `{ "alphabet", "n", "labels" }`.
        #[arg(long = "fn")]
        function: Option<String>,
        #[arg(long)]
        dictator: Option<usize>,
        #[arg(long)]
        constant: Option<usize>,
        #[arg(long)]
        random: bool,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Value of a multiplayer game and of its repetition.
    Game {
        #[arg(long)]
        game: Option<String>,
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Write the bundled fixtures as JSON files.
    Fixtures {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EmbedCheck { .. } => "embed-check",
            Command::Classify { .. } => "classify",
            Command::Fourier { .. } => "fourier",
            Command::Decompose { .. } => "decompose",
            Command::Norm { .. } => "norm",
            Command::Correlate { .. } => "correlate",
            Command::Counterexample { .. } => "counterexample",
            Command::Reduce43 { .. } => "reduce43",
            Command::Gap3 { .. } => "gap3",
            Command::Probe { .. } => "probe",
            Command::Patterns { .. } => "patterns",
            Command::Meshulam { .. } => "meshulam",
            Command::Lines { .. } => "lines",
            Command::Csp { .. } => "csp",
            Command::DictTest { .. } => "dict-test",
            Command::Game { .. } => "game",
            Command::Fixtures { .. } => "fixtures",
        }
    }

    fn suite(&self) -> &'static str {
        match self {
            Command::EmbedCheck { .. } | Command::Classify { .. } | Command::Fixtures { .. } => "embeddings",
            Command::Fourier { .. } | Command::Decompose { .. } => "analysis",
            Command::Norm { .. } => "norms",
            Command::Correlate { .. }
            | Command::Counterexample { .. }
            | Command::Reduce43 { .. }
            | Command::Gap3 { .. }
            | Command::Probe { .. } => "correlations",
            Command::Patterns { .. } | Command::Meshulam { .. } | Command::Lines { .. } => "patterns",
            Command::Csp { .. } | Command::DictTest { .. } | Command::Game { .. } => "csp",
        }
    }
}

struct Ctx<'a> {
    global: &'a Global,
    threads: usize,
    inputs: Vec<(String, String)>,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn need<'v, T>(v: &'v Option<T>, flag: &str) -> Result<&'v T> {
    v.as_ref().ok_or_else(|| Error::domain(USAGE, format!("{flag} is required")))
}

impl Ctx<'_> {
    fn read(&mut self, path: &str) -> Result<String> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::domain(IO, format!("{path}: {e}")))?;
        self.inputs.push((path.to_string(), hex_digest(text.as_bytes())));
        Ok(text)
    }

    /// A distribution file, or a bundled fixture name (with or without `.json`).
    fn dist(&mut self, arg: &Option<String>) -> Result<JointDistribution> {
        let arg = need(arg, "--dist")?;
        if Path::new(arg).exists() {
            let text = self.read(arg)?;
            return distribution_from_str(&text, SupportPolicy::Reject);
        }
        let name = arg.trim_end_matches(".json");
        let name = Path::new(name).file_name().and_then(|s| s.to_str()).unwrap_or(name);
        let mu = fixtures::distribution(name)
            .map_err(|_| Error::domain(IO, format!("{arg} is neither a readable file nor a fixture name")))?;
        self.inputs.push((format!("fixture:{name}"), String::new()));
        Ok(mu)
    }

    fn table(&mut self, path: &str) -> Result<FunctionTable> {
        let text = self.read(path)?;
        table_from_str(&text)
    }

    fn tables(&mut self, paths: &[String], count: usize) -> Result<Vec<FunctionTable>> {
        if paths.len() != count {
            return Err(Error::domain(USAGE, format!("expected {count} --fn tables, got {}", paths.len())));
        }
        paths.iter().map(|p| self.table(p)).collect()
    }

    fn seed(&self, why: &str) -> Result<u64> {
        self.global
            .seed
            .ok_or_else(|| Error::domain(MISSING_SEED, format!("{why} is randomized; pass --seed")))
    }

    fn options(&self) -> Result<Options> {
        let base = match self.global.mc {
            Some(n) => Options::monte_carlo(n, self.seed("Monte Carlo estimation")?),
            None => Options::exact(),
        };
        Ok(base.with_threads(self.threads))
    }

    fn point_set(&mut self, q: usize, n: usize, set: &Option<String>, density: Option<f64>) -> Result<PointSet> {
        match (set, density) {
            (Some(s), None) => {
                let s = s.trim();
                if s.starts_with('[') {
                    let members: Vec<usize> =
                        serde_json::from_str(s).map_err(|e| Error::domain(crate::error::PARSE, e.to_string()))?;
                    PointSet::from_indices(q, n, &members)
                } else {
                    PointSet::from_hex(q, n, s)
                }
            }
            (None, Some(d)) => PointSet::random(q, n, d, self.seed("a random set")?),
            _ => Err(Error::domain(USAGE, "pass exactly one of --set and --density")),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn execute(cmd: &Command, ctx: &mut Ctx) -> Result<Value> {
    let threads = ctx.threads;
    match cmd {
        Command::EmbedCheck { dist } => {
            let mu = ctx.dist(dist)?;
            let abelian = detect_abelian_embedding(&mu)?;
            let z = detect_z_embedding(&mu)?;
            let module = solution_module(&mu)?;
            Ok(json!({
                "abelian": abelian.is_some(),
                "z": z.is_some(),
                "witness": abelian,
                "z_witness": z,
                "canonical_group": match &z {
                    Some(_) => None,
                    None => Some(canonical_group(&mu)?.orders().to_vec()),
                },
                "free_rank": module.free_rank(),
            }))
        }
        Command::Classify { dist } => {
            let mu = ctx.dist(dist)?;
            let report = classify(&mu)?;
            let mut v = to_value(&report);
            v["components"] = to_value(&is_connected(&mu).components);
            v["pairs"] = to_value(&is_pairwise_connected(&mu).pairs);
            Ok(v)
        }
        Command::Fourier { function } => {
            let f = ctx.table(need(function, "--fn")?)?;
            let spec = fourier_transform(&f)?;
            Ok(json!({
                "orders": spec.orders(),
                "energy": spec.energy(),
                "coefficients": spec.coefficients().iter().map(|&z| complex(z)).collect::<Vec<_>>(),
            }))
        }
        Command::Decompose { function, degree } => {
            let f = ctx.table(need(function, "--fn")?)?;
            let d = efron_stein(&f)?;
            let mut v = json!({ "level_weights": d.level_weights(), "norm2_sq": f.norm2_sq() });
            if let Some(deg) = degree {
                let (low, high) = degree_mass(&f, *deg)?;
                v["degree_mass"] = json!({ "degree": deg, "low": low, "high": high });
            }
            Ok(v)
        }
        Command::Norm {
            function,
            kind,
            s,
            subset,
            method,
        } => {
            let f = ctx.table(need(function, "--fn")?)?;
            let opts = ctx.options()?;
            let est: Estimate = match kind {
                NormKind::Gowers => gowers_norm_with(&f, *s, &opts)?,
                NormKind::Box => {
                    let set = CoordinateSubset::from_members(f.arity(), subset)?;
                    box_form_with([&f, &f, &f, &f], &set, &opts)?.map_real(|z| z.re.max(0.0).powf(0.25))
                }
                NormKind::Swap => match method {
                    Some(SwapMethod::Exchange) => {
                        if ctx.global.mc.is_some() {
                            return Err(Error::domain(USAGE, "the exchange path is exact only"));
                        }
                        Estimate::exact(swap_via_exchange([&f, &f, &f, &f])?.re.max(0.0).powf(0.25))
                    }
                    _ => swap_norm_with(&f, &opts)?,
                },
            };
            Ok(to_value(&est))
        }
        Command::Correlate {
            dist,
            functions,
            search,
            degree,
            restarts,
            sweep_cap,
            constraint,
        } => match search {
            None => {
                let mu = ctx.dist(dist)?;
                let fs = ctx.tables(functions, mu.arity())?;
                let refs: Vec<&FunctionTable> = fs.iter().collect();
                Ok(to_value(&kwise_correlation(&mu, &refs, &ctx.options()?)?))
            }
            Some(kind) => {
                let f = ctx.tables(functions, 1)?.remove(0);
                let cfg = SearchConfig {
                    restarts: *restarts,
                    sweep_cap: *sweep_cap,
                    tolerance: ctx.global.tolerance.unwrap_or(SearchConfig::default().tolerance),
                    seed: ctx.seed("a correlation search")?,
                    threads,
                    constraint: match constraint {
                        ConstraintArg::UnitNorm => FactorConstraint::UnitNorm,
                        ConstraintArg::OneBounded => FactorConstraint::OneBounded,
                    },
                };
                let rep = match kind {
                    SearchKind::Product => product_correlation_search(&f, &cfg)?,
                    SearchKind::Structured => structured_correlation_search(&f, *degree, &cfg)?,
                };
                Ok(to_value(&rep))
            }
        },
        Command::Counterexample {
            dist,
            n,
            witness,
            theta,
            tables,
        } => {
            let mu = ctx.dist(dist)?;
            let w: EmbeddingWitness = match witness {
                Some(path) => witness_from_str(&ctx.read(path)?)?,
                None => detect_abelian_embedding(&mu)?
                    .ok_or_else(|| Error::domain(DOMAIN, "the distribution admits no Abelian embedding"))?,
            };
            let chars = match theta {
                Some(t) => vec![Character::Real(*t); *n],
                None => default_characters(&mu, &w, *n),
            };
            let fs = build_counterexample(&mu, &w, &chars)?;
            let refs: Vec<&FunctionTable> = fs.iter().collect();
            let corr = kwise_correlation(&mu, &refs, &ctx.options()?)?;
            let low: Vec<f64> = fs
                .iter()
                .map(|f| Ok(degree_mass(f, 2)?.0 / f.norm2_sq()))
                .collect::<Result<_>>()?;
            let mut v = json!({
                "witness": w,
                "n": n,
                "correlation": corr,
                "modulus": corr.value.norm(),
                "degree_le_2_fraction": low,
            });
            if *tables {
                v["functions"] = Value::Array(fs.iter().map(table_to_json).collect());
            }
            Ok(v)
        }
        Command::Reduce43 { dist, functions } => {
            let mu = ctx.dist(dist)?;
            let fs = ctx.tables(functions, 4)?;
            let r = reduce_arity_4_to_3(&mu, [&fs[0], &fs[1], &fs[2], &fs[3]], &ctx.options()?)?;
            Ok(to_value(&r))
        }
        Command::Gap3 {
            dist,
            restarts,
            sweep_cap,
        } => {
            let mu = ctx.dist(dist)?;
            let cfg = GapConfig {
                restarts: *restarts,
                sweep_cap: *sweep_cap,
                tolerance: ctx.global.tolerance.unwrap_or(GapConfig::default().tolerance),
                seed: ctx.seed("the gap search")?,
                threads,
            };
            Ok(to_value(&trilinear_gap_estimate(&mu, &cfg)?))
        }
        Command::Probe {
            dist,
            functions,
            n,
            noise,
            delta,
            trials,
            restarts,
        } => {
            let mu = ctx.dist(dist)?;
            let seed = ctx.seed("the probe")?;
            let fs = if functions.is_empty() {
                let n = *need(n, "--n (or three --fn tables)")?;
                if *noise {
                    noise_functions(&mu, n, seed)?
                } else {
                    let w = detect_abelian_embedding(&mu)?
                        .ok_or_else(|| Error::domain(DOMAIN, "the distribution admits no Abelian embedding"))?;
                    build_counterexample(&mu, &w, &default_characters(&mu, &w, n))?
                }
            } else {
                ctx.tables(functions, 3)?
            };
            if fs.len() != 3 {
                return Err(Error::domain(DOMAIN, "the probe needs a 3-ary distribution"));
            }
            let cfg = ProbeConfig {
                delta: *delta,
                trials: *trials,
                seed,
                restarts: *restarts,
                threads,
                ..ProbeConfig::default()
            };
            Ok(to_value(&local_inverse_probe(&mu, [&fs[0], &fs[1], &fs[2]], &cfg)?))
        }
        Command::Patterns {
            family,
            p,
            n,
            set,
            density,
            max_free,
            method,
            budget,
        } => {
            let n = need(n, "--n")?;
            if *max_free {
                let m = match method {
                    MethodArg::Exhaustive => SearchMethod::Exhaustive,
                    MethodArg::BranchAndBound => SearchMethod::BranchAndBound,
                };
                return Ok(to_value(&max_pattern_free(*p, *n, *family, m, *budget)?));
            }
            let a = ctx.point_set(*p, *n, set, *density)?;
            let count = count_patterns(&a, *family)?;
            let by_pairs = count_patterns_by_pairs(&a, *family)?;
            if count != by_pairs {
                return Err(Error::internal(format!("pattern counts disagree: {count} vs {by_pairs}")));
            }
            let mut v = json!({
                "set": a.to_hex(),
                "size": a.len(),
                "density": rational::format(&a.density()),
                "instances": count,
                "total_instances": pattern_instances(*p, *n, *family)?.len(),
            });
            if family.is_progression() {
                let (lhs, rhs) = fourier_3ap_check(&a)?;
                v["fourier_identity"] = json!({ "lhs": lhs, "rhs": rhs });
                v["ap_free_average"] = json!(ap_free_average(&a));
            }
            Ok(v)
        }
        Command::Meshulam { p, n, set, density } => {
            let n = need(n, "--n")?;
            let a = ctx.point_set(*p, *n, set, *density)?;
            let mut v = to_value(&meshulam_run(&a)?);
            v["set"] = json!(a.to_hex());
            Ok(v)
        }
        Command::Lines { n, k, enumerate } => {
            let n = need(n, "--n")?;
            let total = ProductSpace::uniform(k + 1, *n)?.total_size() - ProductSpace::uniform(*k, *n)?.total_size();
            let mut v = json!({ "total_lines": total, "n": n, "k": k });
            if *enumerate {
                let counted = pattern_instances(*k, *n, PatternFamily::CombLine(*k))?.len();
                if counted != total {
                    return Err(Error::internal(format!("enumerated {counted} lines, expected {total}")));
                }
                v["enumerated"] = json!(counted);
            }
            Ok(v)
        }
        Command::Csp {
            instance,
            lin3,
            p,
            completeness,
            soundness,
        } => {
            let (inst, system) = match (instance, lin3) {
                (Some(path), None) => (CspInstance::from_json_str(&ctx.read(path)?)?, None),
                (None, Some(path)) => {
                    let sys = Lin3System::parse(*need(p, "--p")?, None, &ctx.read(path)?)?;
                    (sys.to_instance()?, Some(sys))
                }
                _ => return Err(Error::domain(USAGE, "pass exactly one of --instance and --lin3")),
            };
            let value = csp_value_bruteforce(&inst, threads)?;
            let mut v = json!({
                "value": value,
                "random_assignment_value": rational::format(&random_assignment_value(&inst)),
                "constraints": inst.constraints().len(),
                "vars": inst.vars(),
            });
            if let Some(sys) = system {
                let sol = gauss_solve_3lin(&sys)?;
                if sol.is_some() != (value.value == rational::one()) {
                    return Err(Error::internal("Gaussian elimination disagrees with the exhaustive value"));
                }
                v["gauss"] = json!({ "consistent": sol.is_some(), "assignment": sol });
            }
            if let (Some(c), Some(s)) = (completeness, soundness) {
                v["verdict"] = to_value(&classify_gap(&value.value, &rational::parse(c)?, &rational::parse(s)?)?);
            }
            Ok(v)
        }
        Command::DictTest {
            dist,
            pred,
            pred_set,
            pred_index,
            function,
            dictator,
            constant,
            random,
            n,
        } => {
            let mu = ctx.dist(dist)?;
            let m = mu.alphabets()[0];
            let predicate = match (pred, pred_set) {
                (Some(bits), None) => Predicate::from_bitstring(mu.arity(), m, bits)?,
                (None, Some(name)) => fixtures::predicates(name)?
                    .get(*pred_index)
                    .cloned()
                    .ok_or_else(|| Error::domain(DOMAIN, format!("{name} has no predicate {pred_index}")))?,
                _ => return Err(Error::domain(USAGE, "pass exactly one of --pred and --pred-set")),
            };
            let f = match (function, dictator, constant, random) {
                (Some(path), None, None, false) => SymbolFunction::from_json_str(&ctx.read(path)?)?,
                (None, Some(i), None, false) => SymbolFunction::dictator(m, *need(n, "--n")?, *i)?,
                (None, None, Some(s), false) => SymbolFunction::constant(m, *need(n, "--n")?, *s)?,
                (None, None, None, true) => SymbolFunction::random(m, *need(n, "--n")?, ctx.seed("a random labeling")?)?,
                _ => return Err(Error::domain(USAGE, "pass exactly one of --fn, --dictator, --constant and --random")),
            };
            let acceptance = dictatorship_test_eval(&mu, &predicate, &f, &ctx.options()?)?;
            let nu = ProductMeasure::power(mu.marginal_probs(0), f.n)?;
            let infl = (0..m)
                .map(|a| influences(&indicator(&f, a, &nu)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({
                "acceptance": acceptance,
                "predicate_probability": rational::format(&predicate.acceptance_probability(&mu)?),
                "influences": infl,
            }))
        }
        Command::Game { game, repeat } => {
            let g = Game::from_json_str(&ctx.read(need(game, "--game")?)?)?;
            let v = game_value(&g, threads)?;
            let mut out = json!({ "value": v, "players": g.players(), "edges": g.edges().len() });
            if let Some(r) = repeat {
                let gr = repeat_game(&g, *r)?;
                let vr = game_value(&gr, threads)?;
                let power = (0..*r).fold(rational::one(), |acc, _| acc * &v.value);
                out["repeated"] = json!({
                    "n": r,
                    "value": vr,
                    "base_value_power": rational::format(&power),
                    "at_least_power": vr.value >= power,
                });
            }
            Ok(out)
        }
        Command::Fixtures { dir } => {
            let dir = need(dir, "--dir")?;
            Ok(json!({ "written": fixtures::write_all(dir)? }))
        }
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON renders");
    s.push('\n');
    s
}

fn error_json(e: &Error) -> Value {
    let detail = match e {
        Error::Domain { detail, .. } => detail.clone(),
        Error::Internal(d) => d.clone(),
    };
    json!({ "error": e.code(), "detail": detail })
}

/// Parse `args` (including the program name), run the command and write its
/// output; returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            let _ = write!(stdout, "{}", render(&json!({ "error": USAGE, "detail": e.to_string().trim() })));
            return 2;
        }
    };
    if cli.global.selftest {
        let report = selftest::run(cli.command.suite()).expect("every command maps to a suite");
        let _ = write!(stdout, "{}", render(&to_value(&report)));
        return if report.passed { 0 } else { 1 };
    }
    let mut ctx = Ctx {
        global: &cli.global,
        threads: cli.global.threads.unwrap_or(1).max(1),
        inputs: Vec::new(),
    };
    let result = execute(&cli.command, &mut ctx);
    match result {
        Ok(result) => {
            let config = json!({
                "command": cli.command.name(),
                "arguments": to_value(&cli.command),
                "global": to_value(&cli.global),
                "inputs": ctx.inputs,
            });
            let envelope = json!({
                "command": cli.command.name(),
                "seed": cli.global.seed,
                "version": env!("CARGO_PKG_VERSION"),
                "config_hash": hex_digest(config.to_string().as_bytes()),
                "result": result,
            });
            let text = render(&envelope);
            match &cli.global.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        let err = Error::domain(IO, format!("{}: {e}", path.display()));
                        let _ = write!(stdout, "{}", render(&error_json(&err)));
                        return 2;
                    }
                }
                None => {
                    let _ = write!(stdout, "{text}");
                }
            }
            0
        }
        Err(e) => {
            let _ = write!(stdout, "{}", render(&error_json(&e)));
            if e.is_domain() {
                2
            } else {
                1
            }
        }
    }
}

/// Run with the process arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
