//! Three-term progressions and combinatorial lines: pattern distributions,
//! counting, pattern-free set search and the density-increment loop.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{fourier_transform, normalized_indicator, ProductMeasure};
use crate::distributions::JointDistribution;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, SIZE_CAP};
use crate::indexing::ProductSpace;
use crate::io::{mask_from_hex, mask_to_hex};
use crate::rational::{self, Prob};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternFamily {
    /// `(x, x+a, x+2a)` with `a ≠ 0` anywhere in `F_pⁿ`.
    Ap3Full,
    /// `a ∈ {0,1,2}ⁿ ∖ {0}`.
    Ap3Somewhat,
    /// `a ∈ {0,1}ⁿ ∖ {0}`.
    Ap3Restricted,
    /// Combinatorial lines in `{0,…,k−1}ⁿ`.
    CombLine(usize),
}

impl PatternFamily {
    pub fn is_progression(self) -> bool {
        !matches!(self, PatternFamily::CombLine(_))
    }

    /// Points per instance.
    pub fn length(self) -> usize {
        match self {
            PatternFamily::CombLine(k) => k,
            _ => 3,
        }
    }

    fn step_allowed(self, a: &[usize]) -> bool {
        let cap = match self {
            PatternFamily::Ap3Full => usize::MAX,
            PatternFamily::Ap3Somewhat => 2,
            PatternFamily::Ap3Restricted => 1,
            PatternFamily::CombLine(_) => return false,
        };
        a.iter().any(|&x| x != 0) && a.iter().all(|&x| x <= cap)
    }

    /// Check that `q` is a valid alphabet size for the family.
    pub fn check_alphabet(self, q: usize) -> Result<()> {
        match self {
            PatternFamily::CombLine(k) if k < 2 => Err(Error::domain(DOMAIN, "combinatorial lines need k >= 2")),
            PatternFamily::CombLine(k) if k != q => Err(Error::domain(
                ARITY_MISMATCH,
                format!("lines of length {k} live in an alphabet of size {k}, not {q}"),
            )),
            PatternFamily::CombLine(_) => Ok(()),
            _ if !is_odd_prime(q) => Err(Error::domain(DOMAIN, format!("progressions need an odd prime field, got {q}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternFamily::Ap3Full => write!(f, "ap3-full"),
            PatternFamily::Ap3Somewhat => write!(f, "ap3-somewhat"),
            PatternFamily::Ap3Restricted => write!(f, "ap3-restricted"),
            PatternFamily::CombLine(k) => write!(f, "comb-line-{k}"),
        }
    }
}

impl std::str::FromStr for PatternFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ap3-full" | "ap3_full" => Ok(PatternFamily::Ap3Full),
            "ap3-somewhat" | "ap3_somewhat" => Ok(PatternFamily::Ap3Somewhat),
            "ap3-restricted" | "ap3_restricted" => Ok(PatternFamily::Ap3Restricted),
            _ => s
                .strip_prefix("comb-line-")
                .or_else(|| s.strip_prefix("comb_line_"))
                .and_then(|k| k.parse().ok())
                .map(PatternFamily::CombLine)
                .ok_or_else(|| Error::domain(crate::error::PARSE, format!("unknown pattern family {s:?}"))),
        }
    }
}

pub(crate) fn is_odd_prime(p: usize) -> bool {
    p >= 3 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// The single-coordinate distribution whose tensor powers generate the pattern.
///
/// Lines of length `k` give the uniform distribution on the `k` constant
/// tuples and `(0, 1, …, k−1)`; it is not pairwise-connected.
pub fn pattern_distribution(family: PatternFamily, p: usize) -> Result<JointDistribution> {
    family.check_alphabet(p)?;
    let tuples: Vec<Vec<usize>> = match family {
        PatternFamily::CombLine(k) => (0..k).map(|c| vec![c; k]).chain(std::iter::once((0..k).collect())).collect(),
        _ => {
            let steps: Vec<usize> = (0..p).filter(|&a| a == 0 || family.step_allowed(&[a])).collect();
            (0..p)
                .flat_map(|x| steps.iter().map(move |&a| vec![x, (x + a) % p, (x + 2 * a) % p]))
                .collect()
        }
    };
    let k = tuples[0].len();
    JointDistribution::uniform_on(vec![p; k], tuples)
}

/// A subset of `{0,…,q−1}ⁿ` stored as a bitmask over point ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    q: usize,
    space: ProductSpace,
    bits: Vec<u64>,
}

impl PointSet {
    pub fn empty(q: usize, n: usize) -> Result<Self> {
        let space = ProductSpace::uniform(q, n)?;
        let words = space.total_size().div_ceil(64).max(1);
        Ok(PointSet {
            q,
            space,
            bits: vec![0; words],
        })
    }

    pub fn full(q: usize, n: usize) -> Result<Self> {
        let mut s = Self::empty(q, n)?;
        for i in 0..s.space.total_size() {
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_indices(q: usize, n: usize, members: &[usize]) -> Result<Self> {
        let mut s = Self::empty(q, n)?;
        for &i in members {
            if i >= s.space.total_size() {
                return Err(Error::domain(DOMAIN, format!("point {i} outside a space of {} points", s.space.total_size())));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_points(q: usize, n: usize, points: &[Vec<usize>]) -> Result<Self> {
        let space = ProductSpace::uniform(q, n)?;
        let idx = points.iter().map(|x| space.index_of(x)).collect::<Result<Vec<_>>>()?;
        Self::from_indices(q, n, &idx)
    }

    pub fn from_flags(q: usize, n: usize, flags: &[bool]) -> Result<Self> {
        let mut s = Self::empty(q, n)?;
        if flags.len() != s.space.total_size() {
            return Err(Error::domain(ARITY_MISMATCH, format!("{} flags for {} points", flags.len(), s.space.total_size())));
        }
        for (i, _) in flags.iter().enumerate().filter(|(_, &b)| b) {
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_hex(q: usize, n: usize, text: &str) -> Result<Self> {
        let space = ProductSpace::uniform(q, n)?;
        let bits = mask_from_hex(text, space.total_size())?;
        Ok(PointSet { q, space, bits })
    }

    /// Each point kept independently with probability `density`.
    pub fn random(q: usize, n: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::domain(DOMAIN, format!("density {density} outside [0, 1]")));
        }
        let mut r = rng::rng(seed);
        let mut s = Self::empty(q, n)?;
        for i in 0..s.space.total_size() {
            if r.gen::<f64>() < density {
                s.insert(i);
            }
        }
        Ok(s)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn alphabet(&self) -> usize {
        self.q
    }

    pub fn dimension(&self) -> usize {
        self.space.arity()
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.space.total_size() && self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits[i / 64] &= !(1 << (i % 64));
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.space.total_size()).filter(|&i| self.contains(i)).collect()
    }

    pub fn flags(&self) -> Vec<bool> {
        (0..self.space.total_size()).map(|i| self.contains(i)).collect()
    }

    /// `|A| / |space|`, exactly.
    pub fn density(&self) -> Prob {
        rational::ratio(self.len() as i64, self.space.total_size() as i64)
    }

    pub fn density_f64(&self) -> f64 {
        self.len() as f64 / self.space.total_size() as f64
    }

    pub fn to_hex(&self) -> String {
        mask_to_hex(&self.bits, self.space.total_size())
    }
}

fn check_ambient(a: &PointSet, family: PatternFamily) -> Result<()> {
    family.check_alphabet(a.q)
}

/// Digitwise `x + t·a` in `F_pⁿ`.
fn shift(space: &ProductSpace, x: usize, a: &[usize], t: usize) -> usize {
    let p = space.radices().first().copied().unwrap_or(1);
    (0..space.arity()).fold(0, |acc, j| acc + ((space.digit(x, j) + t * a[j]) % p) * space.stride(j))
}

/// Every instance as a list of point ranks, in lexicographic order of the
/// generating data (`(x, a)` for progressions, the template for lines).
pub fn pattern_instances(q: usize, n: usize, family: PatternFamily) -> Result<Vec<Vec<usize>>> {
    family.check_alphabet(q)?;
    let space = ProductSpace::uniform(q, n)?;
    let mut out = Vec::new();
    match family {
        PatternFamily::CombLine(k) => {
            let templates = ProductSpace::uniform(k + 1, n)?;
            for t in templates.points() {
                if t.iter().all(|&c| c < k) {
                    continue;
                }
                out.push(
                    (0..k)
                        .map(|s| (0..n).fold(0, |acc, j| acc + if t[j] == k { s } else { t[j] } * space.stride(j)))
                        .collect(),
                );
            }
        }
        _ => {
            let steps: Vec<Vec<usize>> = space.points().filter(|a| family.step_allowed(a)).collect();
            for x in 0..space.total_size() {
                for a in &steps {
                    out.push((0..3).map(|t| shift(&space, x, a, t)).collect());
                }
            }
        }
    }
    Ok(out)
}

/// Instances fully inside `A`, counted by enumerating every instance.
pub fn count_patterns(a: &PointSet, family: PatternFamily) -> Result<u64> {
    check_ambient(a, family)?;
    Ok(pattern_instances(a.alphabet(), a.dimension(), family)?
        .iter()
        .filter(|inst| inst.iter().all(|&i| a.contains(i)))
        .count() as u64)
}

/// The same count by scanning ordered pairs of members and completing them.
pub fn count_patterns_by_pairs(a: &PointSet, family: PatternFamily) -> Result<u64> {
    check_ambient(a, family)?;
    let space = a.space();
    let n = space.arity();
    let members = a.members();
    let mut count = 0;
    for &x in &members {
        for &y in &members {
            if x == y {
                continue;
            }
            if complete_pair(space, family, x, y, n).is_some_and(|rest| rest.iter().all(|&z| a.contains(z))) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Points after the first two of the unique instance starting `x, y`, if any.
fn complete_pair(space: &ProductSpace, family: PatternFamily, x: usize, y: usize, n: usize) -> Option<Vec<usize>> {
    match family {
        PatternFamily::CombLine(k) => {
            let mut wild = Vec::new();
            for j in 0..n {
                match (space.digit(x, j), space.digit(y, j)) {
                    (u, v) if u == v => {}
                    (0, 1) => wild.push(j),
                    _ => return None,
                }
            }
            if wild.is_empty() {
                return None;
            }
            Some(
                (2..k)
                    .map(|s| wild.iter().fold(x, |acc, &j| acc + s * space.stride(j)))
                    .collect(),
            )
        }
        _ => {
            let p = space.radix(0);
            let step: Vec<usize> = (0..n).map(|j| (space.digit(y, j) + p - space.digit(x, j)) % p).collect();
            family.step_allowed(&step).then(|| vec![shift(space, y, &step, 1)])
        }
    }
}

/// `(E_{x,a}[f_A(x)f_A(x+a)f_A(x+2a)], Σ_α f̂_A(α)² f̂_A(−2α))` with `a` ranging over
/// all of `F_pⁿ`, including 0.
pub fn fourier_3ap_check(a: &PointSet) -> Result<(f64, f64)> {
    check_ambient(a, PatternFamily::Ap3Full)?;
    let space = a.space().clone();
    let measure = ProductMeasure::uniform(space.radices());
    let f = normalized_indicator(&space, &a.flags(), &measure)?;
    let v = f.values();
    let total = space.total_size();
    let n = space.arity();
    let mut lhs = 0.0;
    for x in 0..total {
        for step in 0..total {
            let d: Vec<usize> = (0..n).map(|j| space.digit(step, j)).collect();
            lhs += v[x].re * v[shift(&space, x, &d, 1)].re * v[shift(&space, x, &d, 2)].re;
        }
    }
    lhs /= (total * total) as f64;
    let spec = fourier_transform(&f)?;
    let c = spec.coefficients();
    let rhs: Complex64 = (0..total).map(|al| c[al] * c[al] * c[spec.scaled_index(al, -2)]).sum();
    if rhs.im.abs() > 1e-10 || (lhs - rhs.re).abs() > 1e-10 {
        return Err(Error::internal(format!("progression identity fails: direct {lhs}, Fourier {rhs}")));
    }
    Ok((lhs, rhs.re))
}

/// `−μ³ + μ·p^{−n}`, the value of the progression average for a set whose
/// only progressions are trivial.
pub fn ap_free_average(a: &PointSet) -> f64 {
    let mu = a.density_f64();
    -mu.powi(3) + mu / a.space().total_size() as f64
}

/// First progression `(x, x+a, x+2a)`, `a ≠ 0`, inside `A` in lexicographic order of `(x, x+a)`.
pub fn find_progression(a: &PointSet) -> Result<Option<[usize; 3]>> {
    check_ambient(a, PatternFamily::Ap3Full)?;
    let members = a.members();
    let n = a.dimension();
    for &x in &members {
        for &y in &members {
            if x == y {
                continue;
            }
            if let Some(rest) = complete_pair(a.space(), PatternFamily::Ap3Full, x, y, n) {
                if a.contains(rest[0]) {
                    return Ok(Some([x, y, rest[0]]));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    /// Normal vector `α ≠ 0`.
    pub normal: Vec<usize>,
    /// The coset `{x : x·α = c}`.
    pub offset: usize,
    /// `|f̂_A(α)|`.
    pub coefficient: f64,
    pub density_before: f64,
    pub density_after: f64,
    /// Whether `μ(A) ≥ 2p^{−n/2}`.
    pub hypothesis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepOutcome {
    Progression { points: [Vec<usize>; 3] },
    Hyperplane(Hyperplane),
}

fn dot(space: &ProductSpace, x: usize, alpha: &[usize]) -> usize {
    let p = space.radix(0);
    (0..space.arity()).map(|j| space.digit(x, j) * alpha[j]).sum::<usize>() % p
}

/// One density-increment step: a progression if `A` has one, otherwise the
/// densest coset of the hyperplane orthogonal to the largest Fourier
/// coefficient (lexicographically smallest `α` and then smallest `c` on ties).
pub fn meshulam_step(a: &PointSet) -> Result<StepOutcome> {
    if a.dimension() == 0 {
        return Err(Error::domain(DOMAIN, "the density-increment step needs n >= 1"));
    }
    if let Some(ap) = find_progression(a)? {
        let space = a.space();
        return Ok(StepOutcome::Progression {
            points: ap.map(|i| space.point_of(i).expect("member rank in range")),
        });
    }
    let space = a.space();
    let p = space.radix(0);
    let n = space.arity();
    let f = normalized_indicator(space, &a.flags(), &ProductMeasure::uniform(space.radices()))?;
    let spec = fourier_transform(&f)?;
    let coeffs = spec.coefficients();
    let mut best = 1;
    for al in 2..coeffs.len() {
        if coeffs[al].norm() > coeffs[best].norm() * (1.0 + 1e-12) + 1e-15 {
            best = al;
        }
    }
    let normal = space.point_of(best)?;
    let mut counts = vec![0usize; p];
    for x in a.members() {
        counts[dot(space, x, &normal)] += 1;
    }
    let offset = (0..p).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
    let coset = space.total_size() / p;
    let density_before = a.density_f64();
    let density_after = counts[offset] as f64 / coset as f64;
    let hypothesis = density_before >= 2.0 * (p as f64).powf(-(n as f64) / 2.0);
    if hypothesis && density_after < density_before {
        return Err(Error::internal(format!(
            "hyperplane step lowered the density from {density_before} to {density_after}"
        )));
    }
    Ok(StepOutcome::Hyperplane(Hyperplane {
        normal,
        offset,
        coefficient: coeffs[best].norm(),
        density_before,
        density_after,
        hypothesis,
    }))
}

/// `x = M·y + b` over `F_p`, mapping the current coordinates to the original ones.
#[derive(Debug, Clone)]
struct AffineMap {
    matrix: Vec<Vec<usize>>,
    offset: Vec<usize>,
    p: usize,
}

impl AffineMap {
    fn identity(n: usize, p: usize) -> Self {
        AffineMap {
            matrix: (0..n).map(|i| (0..n).map(|j| usize::from(i == j)).collect()).collect(),
            offset: vec![0; n],
            p,
        }
    }

    fn apply(&self, y: &[usize]) -> Vec<usize> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, &b)| (row.iter().zip(y).map(|(m, v)| m * v).sum::<usize>() + b) % self.p)
            .collect()
    }

    /// `self ∘ inner`.
    fn compose(&self, inner: &AffineMap) -> AffineMap {
        let cols = inner.matrix.first().map_or(0, Vec::len);
        let matrix = self
            .matrix
            .iter()
            .map(|row| {
                (0..cols)
                    .map(|j| row.iter().zip(&inner.matrix).map(|(a, r)| a * r[j]).sum::<usize>() % self.p)
                    .collect()
            })
            .collect();
        let offset = self.apply(&inner.offset);
        AffineMap { matrix, offset, p: self.p }
    }
}

fn inverse_mod(a: usize, p: usize) -> usize {
    (1..p).find(|&b| a * b % p == 1).expect("nonzero elements of a prime field are invertible")
}

/// Parametrize `{x : x·α = c}` by `F_p^{n−1}`, solving for the first coordinate with `α_t ≠ 0`.
fn coset_chart(alpha: &[usize], c: usize, p: usize) -> AffineMap {
    let n = alpha.len();
    let t = alpha.iter().position(|&v| v != 0).expect("normal vector is nonzero");
    let inv = inverse_mod(alpha[t], p);
    let free: Vec<usize> = (0..n).filter(|&j| j != t).collect();
    let mut matrix = vec![vec![0; n - 1]; n];
    for (col, &j) in free.iter().enumerate() {
        matrix[j][col] = 1;
        matrix[t][col] = (p - alpha[j] % p) * inv % p;
    }
    let mut offset = vec![0; n];
    offset[t] = c * inv % p;
    AffineMap { matrix, offset, p }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub density: f64,
    pub codim: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunOutcome {
    /// A progression of the original set, verified by membership.
    Progression { points: [Vec<usize>; 3], iteration: usize },
    /// The density fell below `2p^{−n/2}` before a progression was found.
    HypothesisFailed { iteration: usize },
    /// Every coordinate was used up.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshulamRun {
    pub trace: Vec<TraceEntry>,
    pub steps: Vec<StepOutcome>,
    pub outcome: RunOutcome,
}

/// Iterate [`meshulam_step`] on the restriction to the chosen coset until a
/// progression is found, the density hypothesis fails or `n = 0`.
pub fn meshulam_run(a: &PointSet) -> Result<MeshulamRun> {
    check_ambient(a, PatternFamily::Ap3Full)?;
    let p = a.alphabet();
    let mut current = a.clone();
    let mut chart = AffineMap::identity(a.dimension(), p);
    let mut trace = vec![TraceEntry {
        density: current.density_f64(),
        codim: 0,
        size: current.len(),
    }];
    let mut steps = Vec::new();
    loop {
        let iteration = steps.len();
        if current.dimension() == 0 {
            return Ok(MeshulamRun { trace, steps, outcome: RunOutcome::Exhausted });
        }
        let step = meshulam_step(&current)?;
        steps.push(step.clone());
        match step {
            StepOutcome::Progression { points } => {
                let original = points.clone().map(|y| chart.apply(&y));
                let ranks = original
                    .iter()
                    .map(|x| a.space().index_of(x))
                    .collect::<Result<Vec<_>>>()?;
                let distinct = ranks[0] != ranks[1] && ranks[1] != ranks[2] && ranks[0] != ranks[2];
                let progression = (0..a.dimension()).all(|j| (original[0][j] + original[2][j]) % p == 2 * original[1][j] % p);
                if !(distinct && progression && ranks.iter().all(|&r| a.contains(r))) {
                    return Err(Error::internal(format!("mapped progression {original:?} is not a progression of the set")));
                }
                return Ok(MeshulamRun {
                    trace,
                    steps,
                    outcome: RunOutcome::Progression { points: original, iteration },
                });
            }
            StepOutcome::Hyperplane(h) => {
                if !h.hypothesis {
                    return Ok(MeshulamRun { trace, steps, outcome: RunOutcome::HypothesisFailed { iteration } });
                }
                let local = coset_chart(&h.normal, h.offset, p);
                let m = current.dimension() - 1;
                let sub_space = ProductSpace::uniform(p, m)?;
                let mut next = PointSet::empty(p, m)?;
                for (i, y) in sub_space.points().enumerate() {
                    if current.contains(current.space().index_of(&local.apply(&y))?) {
                        next.insert(i);
                    }
                }
                chart = chart.compose(&local);
                current = next;
                trace.push(TraceEntry {
                    density: current.density_f64(),
                    codim: a.dimension() - m,
                    size: current.len(),
                });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Exhaustive,
    BranchAndBound,
}

/// Exhaustive search is refused beyond this many subsets.
pub const EXHAUSTIVE_LOG2_CAP: usize = 27;

#[derive(Debug, Clone, PartialEq)]
pub struct FreeSetResult {
    pub size: usize,
    pub witness: PointSet,
    /// `false` when the node budget ran out, making `size` a lower bound.
    pub complete: bool,
    pub nodes: u64,
}

impl Serialize for FreeSetResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("FreeSetResult", 5)?;
        st.serialize_field("size", &self.size)?;
        st.serialize_field("complete", &self.complete)?;
        st.serialize_field("nodes", &self.nodes)?;
        st.serialize_field("witness_hex", &self.witness.to_hex())?;
        st.serialize_field("witness", &self.witness.members())?;
        st.end()
    }
}

/// Distinct point sets of the instances, deduplicated.
fn instance_sets(q: usize, n: usize, family: PatternFamily) -> Result<Vec<Vec<usize>>> {
    let mut sets: Vec<Vec<usize>> = pattern_instances(q, n, family)?
        .into_iter()
        .map(|mut i| {
            i.sort_unstable();
            i.dedup();
            i
        })
        .collect();
    sets.sort();
    sets.dedup();
    Ok(sets)
}

/// Largest subset of `{0,…,q−1}ⁿ` containing no instance of `family`.
pub fn max_pattern_free(q: usize, n: usize, family: PatternFamily, method: SearchMethod, budget: u64) -> Result<FreeSetResult> {
    let sets = instance_sets(q, n, family)?;
    let total = ProductSpace::uniform(q, n)?.total_size();
    let result = match method {
        SearchMethod::Exhaustive => {
            if total > EXHAUSTIVE_LOG2_CAP {
                return Err(Error::domain(SIZE_CAP, format!("exhaustive search over 2^{total} subsets exceeds 2^{EXHAUSTIVE_LOG2_CAP}")));
            }
            let masks: Vec<u32> = sets.iter().map(|s| s.iter().fold(0u32, |m, &i| m | 1 << i)).collect();
            let mut best = 0u32;
            for mask in 0..(1u64 << total) {
                let mask = mask as u32;
                if mask.count_ones() > best.count_ones() && masks.iter().all(|&m| mask & m != m) {
                    best = mask;
                }
            }
            let members: Vec<usize> = (0..total).filter(|&i| best >> i & 1 == 1).collect();
            FreeSetResult {
                size: members.len(),
                witness: PointSet::from_indices(q, n, &members)?,
                complete: true,
                nodes: 1u64 << total,
            }
        }
        SearchMethod::BranchAndBound => {
            let mut closing: Vec<Vec<Vec<usize>>> = vec![Vec::new(); total];
            for s in &sets {
                let (&last, rest) = s.split_last().expect("instances are nonempty");
                closing[last].push(rest.to_vec());
            }
            let mut search = BranchAndBound {
                closing: &closing,
                chosen: vec![false; total],
                size: 0,
                best: Vec::new(),
                nodes: 0,
                budget,
                truncated: false,
            };
            search.descend(0);
            FreeSetResult {
                size: search.best.len(),
                witness: PointSet::from_indices(q, n, &search.best)?,
                complete: !search.truncated,
                nodes: search.nodes,
            }
        }
    };
    let witness_instances = sets
        .iter()
        .filter(|s| s.iter().all(|&i| result.witness.contains(i)))
        .count();
    if witness_instances != 0 {
        return Err(Error::internal("pattern-free search returned a set containing a pattern"));
    }
    Ok(result)
}

struct BranchAndBound<'a> {
    /// Instances whose largest point is the index, minus that point.
    closing: &'a [Vec<Vec<usize>>],
    chosen: Vec<bool>,
    size: usize,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    truncated: bool,
}

impl BranchAndBound<'_> {
    fn descend(&mut self, i: usize) {
        let total = self.chosen.len();
        if self.size > self.best.len() {
            self.best = (0..total).filter(|&j| self.chosen[j]).collect();
        }
        if i == total || self.size + (total - i) <= self.best.len() {
            return;
        }
        if self.nodes >= self.budget {
            self.truncated = true;
            return;
        }
        self.nodes += 1;
        if !self.closing[i].iter().any(|rest| rest.iter().all(|&j| self.chosen[j])) {
            self.chosen[i] = true;
            self.size += 1;
            self.descend(i + 1);
            self.size -= 1;
            self.chosen[i] = false;
        }
        self.descend(i + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::is_pairwise_connected;
    use crate::embeddings::{detect_abelian_embedding, detect_z_embedding};

    #[test]
    fn pattern_distributions_have_expected_embeddings() {
        let somewhat = pattern_distribution(PatternFamily::Ap3Somewhat, 3).unwrap();
        assert!(detect_abelian_embedding(&somewhat).unwrap().is_some());
        let restricted = pattern_distribution(PatternFamily::Ap3Restricted, 3).unwrap();
        assert!(detect_z_embedding(&restricted).unwrap().is_some());
        let lines = pattern_distribution(PatternFamily::CombLine(3), 3).unwrap();
        assert_eq!(lines.support_size(), 4);
        assert!(!is_pairwise_connected(&lines).connected);
        assert_eq!(pattern_distribution(PatternFamily::Ap3Full, 5).unwrap().support_size(), 25);
        assert!(pattern_distribution(PatternFamily::Ap3Full, 4).is_err());
    }

    #[test]
    fn counts_on_small_spaces() {
        assert_eq!(count_patterns(&PointSet::empty(3, 2).unwrap(), PatternFamily::Ap3Full).unwrap(), 0);
        assert_eq!(count_patterns(&PointSet::full(3, 1).unwrap(), PatternFamily::Ap3Full).unwrap(), 6);
        for n in 1..=4 {
            let full = PointSet::full(3, n).unwrap();
            let lines = count_patterns(&full, PatternFamily::CombLine(3)).unwrap();
            assert_eq!(lines, 4u64.pow(n as u32) - 3u64.pow(n as u32));
            assert_eq!(count_patterns_by_pairs(&full, PatternFamily::CombLine(3)).unwrap(), lines);
        }
    }

    #[test]
    fn two_counting_paths_agree() {
        for seed in 0..20 {
            for (q, family) in [
                (3, PatternFamily::Ap3Full),
                (5, PatternFamily::Ap3Somewhat),
                (5, PatternFamily::Ap3Restricted),
                (3, PatternFamily::CombLine(3)),
                (4, PatternFamily::CombLine(4)),
            ] {
                let a = PointSet::random(q, 3, 0.5, seed).unwrap();
                assert_eq!(count_patterns(&a, family).unwrap(), count_patterns_by_pairs(&a, family).unwrap());
            }
        }
    }

    #[test]
    fn fourier_identity_and_ap_free_value() {
        let (l, r) = fourier_3ap_check(&PointSet::empty(3, 2).unwrap()).unwrap();
        assert!(l.abs() < 1e-15 && r.abs() < 1e-15);
        for seed in 0..10 {
            let a = PointSet::random(5, 2, 0.4, seed).unwrap();
            let (l, r) = fourier_3ap_check(&a).unwrap();
            assert!((l - r).abs() < 1e-12);
        }
        let cap = PointSet::from_points(3, 2, &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(count_patterns(&cap, PatternFamily::Ap3Full).unwrap(), 0);
        let (l, _) = fourier_3ap_check(&cap).unwrap();
        assert!((l - ap_free_average(&cap)).abs() < 1e-12);
    }

    #[test]
    fn meshulam_on_full_and_cap_sets() {
        let full = PointSet::full(3, 2).unwrap();
        assert!(matches!(meshulam_step(&full).unwrap(), StepOutcome::Progression { .. }));
        let run = meshulam_run(&full).unwrap();
        assert!(matches!(run.outcome, RunOutcome::Progression { iteration: 0, .. }));

        let cap = PointSet::from_points(3, 2, &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        let StepOutcome::Hyperplane(h) = meshulam_step(&cap).unwrap() else { panic!("cap set has no progression") };
        assert!(h.density_after >= h.density_before);
        let run = meshulam_run(&cap).unwrap();
        assert!(!matches!(run.outcome, RunOutcome::Progression { .. }));
        assert!(run.trace.windows(2).all(|w| w[1].density >= w[0].density));
        assert!(meshulam_step(&PointSet::full(3, 0).unwrap()).is_err());
    }

    #[test]
    fn meshulam_runs_find_verified_progressions() {
        for seed in 0..10 {
            let a = PointSet::random(3, 5, 0.35, 900 + seed).unwrap();
            let run = meshulam_run(&a).unwrap();
            assert!(run.trace.windows(2).all(|w| w[1].density >= w[0].density));
            if let RunOutcome::Progression { points, .. } = &run.outcome {
                for x in points {
                    assert!(a.contains(a.space().index_of(x).unwrap()));
                }
            }
        }
    }

    #[test]
    fn every_four_point_cap_set_steps_to_a_denser_coset() {
        let mut seen = 0;
        for mask in 0u32..512 {
            if mask.count_ones() != 4 {
                continue;
            }
            let a = PointSet::from_indices(3, 2, &(0..9).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>()).unwrap();
            if count_patterns(&a, PatternFamily::Ap3Full).unwrap() != 0 {
                continue;
            }
            seen += 1;
            let StepOutcome::Hyperplane(h) = meshulam_step(&a).unwrap() else { panic!("cap set has no progression") };
            assert!(h.density_after >= h.density_before);
        }
        assert!(seen > 0);
    }

    #[test]
    fn branch_and_bound_finds_the_cube_cap() {
        let bb = max_pattern_free(3, 3, PatternFamily::Ap3Full, SearchMethod::BranchAndBound, u64::MAX).unwrap();
        assert_eq!(bb.size, 9);
        assert!(bb.complete);
    }

    #[test]
    fn coset_chart_parametrizes_the_coset() {
        let chart = coset_chart(&[0, 2, 1], 1, 3);
        let sub = ProductSpace::uniform(3, 2).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for y in sub.points() {
            let x = chart.apply(&y);
            assert_eq!((2 * x[1] + x[2]) % 3, 1);
            seen.insert(x);
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn maximum_free_sets() {
        for (n, want) in [(1, 2), (2, 4)] {
            let ex = max_pattern_free(3, n, PatternFamily::Ap3Full, SearchMethod::Exhaustive, 0).unwrap();
            let bb = max_pattern_free(3, n, PatternFamily::Ap3Full, SearchMethod::BranchAndBound, u64::MAX).unwrap();
            assert_eq!((ex.size, bb.size), (want, want));
            assert!(bb.complete);
        }
        let lines = max_pattern_free(3, 1, PatternFamily::CombLine(3), SearchMethod::Exhaustive, 0).unwrap();
        assert_eq!(lines.size, 2);
        let cut = max_pattern_free(3, 2, PatternFamily::Ap3Full, SearchMethod::BranchAndBound, 3).unwrap();
        assert!(!cut.complete && cut.size <= 4);
        assert!(max_pattern_free(3, 4, PatternFamily::Ap3Full, SearchMethod::Exhaustive, 0).is_err());
    }

    #[test]
    fn hex_roundtrip() {
        let a = PointSet::random(3, 3, 0.5, 1).unwrap();
        assert_eq!(PointSet::from_hex(3, 3, &a.to_hex()).unwrap(), a);
        assert_eq!("comb-line-4".parse::<PatternFamily>().unwrap(), PatternFamily::CombLine(4));
    }
}
