//! Gowers uniformity norms, box forms and swap forms.
//!
//! All forms here are over the uniform measure. Box and swap forms are
//! computed two ways: by reshaping into a matrix over the `(Σ^I, Σ^Ī)` split,
//! and by applying the per-coordinate exchange operator to a tensor.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::FunctionTable;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, SIZE_CAP};
use crate::estimate::{monte_carlo, ComplexEstimate, Estimate, Method, Options};
use crate::indexing::{CoordinateSubset, ProductSpace};
use crate::rng::{par_map, Rng};

const INNER_TOLERANCE: f64 = 1e-10;
const MAX_SUBSET_ENUMERATION: usize = 12;
const MAX_EXCHANGE_ENTRIES: usize = 1 << 24;

fn require_uniform(fs: &[&FunctionTable]) -> Result<()> {
    for f in fs {
        if !f.measure().is_uniform() {
            return Err(Error::domain(DOMAIN, "uniformity norms are defined for the uniform measure only"));
        }
        if f.space() != fs[0].space() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("spaces {:?} and {:?} differ", fs[0].space().radices(), f.space().radices()),
            ));
        }
    }
    Ok(())
}

struct Digits {
    radices: Vec<usize>,
    strides: Vec<usize>,
    digits: Vec<Vec<usize>>,
}

impl Digits {
    fn new(space: &ProductSpace) -> Self {
        Digits {
            radices: space.radices().to_vec(),
            strides: (0..space.arity()).map(|i| space.stride(i)).collect(),
            digits: (0..space.total_size()).map(|x| space.point_unchecked(x)).collect(),
        }
    }

    fn add(&self, a: usize, b: usize) -> usize {
        let (da, db) = (&self.digits[a], &self.digits[b]);
        (0..self.radices.len())
            .map(|i| ((da[i] + db[i]) % self.radices[i]) * self.strides[i])
            .sum()
    }
}

fn cube_product(values: &[Complex64], corners: &[(usize, bool)], digits: &Digits, x: usize) -> Complex64 {
    corners.iter().fold(Complex64::new(1.0, 0.0), |acc, &(o, odd)| {
        let v = values[digits.add(x, o)];
        acc * if odd { v.conj() } else { v }
    })
}

/// `(offset, |w| odd)` for each `w ∈ {0,1}^s`.
fn corners(digits: &Digits, h: &[usize]) -> Vec<(usize, bool)> {
    (0..1usize << h.len())
        .map(|w| {
            let o = (0..h.len()).filter(|i| w >> i & 1 == 1).fold(0, |acc, i| digits.add(acc, h[i]));
            (o, w.count_ones() % 2 == 1)
        })
        .collect()
}

/// `‖f‖_{U^s}`, exactly when feasible.
pub fn gowers_norm(f: &FunctionTable, s: usize) -> Result<f64> {
    Ok(gowers_norm_with(f, s, &Options::default())?.value)
}

/// `‖f‖_{U^s} = (E_{x,h} ∏_w C^{|w|} f(x + w·h))^{1/2^s}` over `ℤ_{m₁} × … × ℤ_{mₙ}`.
pub fn gowers_norm_with(f: &FunctionTable, s: usize, opts: &Options) -> Result<Estimate> {
    require_uniform(&[f])?;
    if s == 0 {
        return Err(Error::domain(DOMAIN, "the U^s norm needs s >= 1"));
    }
    let n_points = f.space().total_size();
    let digits = Digits::new(f.space());
    let values = f.values();
    let work = (n_points as f64).powi(s as i32 + 1) * (1u64 << s) as f64;
    let inner = match opts.plan(work) {
        None => {
            let h_count = n_points.checked_pow(s as u32).ok_or_else(|| Error::domain(SIZE_CAP, "U^s sum too large"))?;
            let partial = par_map(n_points, opts.threads, |h1| {
                let mut acc = Complex64::new(0.0, 0.0);
                for rest in 0..h_count / n_points {
                    let mut h = vec![h1];
                    let mut r = rest;
                    for _ in 1..s {
                        h.push(r % n_points);
                        r /= n_points;
                    }
                    let cs = corners(&digits, &h);
                    for x in 0..n_points {
                        acc += cube_product(values, &cs, &digits, x);
                    }
                }
                acc
            });
            let total: Complex64 = partial.into_iter().sum();
            let mean = total / (n_points as f64).powi(s as i32 + 1);
            if mean.im.abs() > INNER_TOLERANCE || mean.re < -INNER_TOLERANCE {
                return Err(Error::internal(format!("U^{s} inner average {mean} is not a nonnegative real")));
            }
            ComplexEstimate::exact(Complex64::new(mean.re.max(0.0), 0.0))
        }
        Some((samples, seed)) => monte_carlo(samples, seed, opts.threads, |r| {
            let x = r.gen_range(0..n_points);
            let h: Vec<usize> = (0..s).map(|_| r.gen_range(0..n_points)).collect();
            cube_product(values, &corners(&digits, &h), &digits, x)
        }),
    };
    Ok(root(inner, 1 << s))
}

fn root(inner: ComplexEstimate, q: u32) -> Estimate {
    let v = inner.value.re.max(0.0);
    let qf = q as f64;
    let value = v.powf(1.0 / qf);
    let stderr = match inner.method {
        Method::ExactSum => 0.0,
        Method::MonteCarlo if v > 0.0 => inner.stderr * value / (qf * v),
        Method::MonteCarlo => inner.stderr.powf(1.0 / qf),
    };
    Estimate {
        value,
        method: inner.method,
        samples: inner.samples,
        stderr,
    }
}

/// Index of `(x, y) ∈ Σ^I × Σ^Ī` in the full space, stored row-major.
struct Split {
    rows: usize,
    cols: usize,
    index: Vec<usize>,
}

impl Split {
    fn new(space: &ProductSpace, subset: &CoordinateSubset) -> Result<Self> {
        if subset.arity() != space.arity() {
            return Err(Error::domain(ARITY_MISMATCH, "coordinate subset arity differs from the space"));
        }
        let rows = space.subspace(subset)?.total_size();
        let cols = space.subspace(&subset.complement())?.total_size();
        let mut index = vec![0; rows * cols];
        for z in 0..space.total_size() {
            let (mut x, mut y) = (0, 0);
            for i in 0..space.arity() {
                let d = space.digit(z, i);
                if subset.contains(i) {
                    x = x * space.radix(i) + d;
                } else {
                    y = y * space.radix(i) + d;
                }
            }
            index[x * cols + y] = z;
        }
        Ok(Split { rows, cols, index })
    }

    fn matrix(&self, f: &FunctionTable) -> Vec<Complex64> {
        self.index.iter().map(|&z| f.values()[z]).collect()
    }

    fn work(&self) -> f64 {
        let (r, c) = (self.rows as f64, self.cols as f64);
        r * c * r.min(c)
    }
}

fn box_exact(split: &Split, fs: [&FunctionTable; 4]) -> Complex64 {
    let (r, c) = (split.rows, split.cols);
    let [m1, m2, m3, m4] = fs.map(|f| split.matrix(f));
    let mut total = Complex64::new(0.0, 0.0);
    if r <= c {
        // Σ_{x,x'} [Σ_y f₁(x,y)·conj f₄(x',y)] · [Σ_{y'} f₂(x',y')·conj f₃(x,y')]
        for x in 0..r {
            for xp in 0..r {
                let mut a = Complex64::new(0.0, 0.0);
                let mut b = Complex64::new(0.0, 0.0);
                for y in 0..c {
                    a += m1[x * c + y] * m4[xp * c + y].conj();
                    b += m2[xp * c + y] * m3[x * c + y].conj();
                }
                total += a * b;
            }
        }
    } else {
        // Σ_{y,y'} [Σ_x f₁(x,y)·conj f₃(x,y')] · [Σ_{x'} f₂(x',y')·conj f₄(x',y)]
        for y in 0..c {
            for yp in 0..c {
                let mut a = Complex64::new(0.0, 0.0);
                let mut b = Complex64::new(0.0, 0.0);
                for x in 0..r {
                    a += m1[x * c + y] * m3[x * c + yp].conj();
                    b += m2[x * c + yp] * m4[x * c + y].conj();
                }
                total += a * b;
            }
        }
    }
    total / ((r * r * c * c) as f64)
}

/// `E_{x,x'∈Σ^I, y,y'∈Σ^Ī}[f₁(x,y) f₂(x',y') conj f₃(x,y') conj f₄(x',y)]`.
pub fn box_form(fs: [&FunctionTable; 4], subset: &CoordinateSubset) -> Result<Complex64> {
    Ok(box_form_with(fs, subset, &Options::default())?.value)
}

pub fn box_form_with(fs: [&FunctionTable; 4], subset: &CoordinateSubset, opts: &Options) -> Result<ComplexEstimate> {
    require_uniform(&fs)?;
    let split = Split::new(fs[0].space(), subset)?;
    Ok(match opts.plan(split.work()) {
        None => ComplexEstimate::exact(box_exact(&split, fs)),
        Some((samples, seed)) => {
            let (r, c) = (split.rows, split.cols);
            monte_carlo(samples, seed, opts.threads, |g| {
                let (x, xp) = (g.gen_range(0..r), g.gen_range(0..r));
                let (y, yp) = (g.gen_range(0..c), g.gen_range(0..c));
                let at = |f: &FunctionTable, a: usize, b: usize| f.values()[split.index[a * c + b]];
                at(fs[0], x, y) * at(fs[1], xp, yp) * at(fs[2], x, yp).conj() * at(fs[3], xp, y).conj()
            })
        }
    })
}

/// `box_I(f)`, the fourth root of `box_I(f,f,f,f)`.
pub fn box_norm(f: &FunctionTable, subset: &CoordinateSubset) -> Result<f64> {
    let v = box_form([f, f, f, f], subset)?;
    Ok(v.re.max(0.0).powf(0.25))
}

/// `E_{I⊆_{1/2}[n]} box_I(f₁,f₂,f₃,f₄)`.
pub fn swap_form(fs: [&FunctionTable; 4]) -> Result<Complex64> {
    Ok(swap_form_with(fs, &Options::default())?.value)
}

pub fn swap_form_with(fs: [&FunctionTable; 4], opts: &Options) -> Result<ComplexEstimate> {
    require_uniform(&fs)?;
    let space = fs[0].space();
    let n = space.arity();
    let splits_work = |n: usize| -> Result<f64> {
        let mut w = 0.0;
        for bits in 0..1u64 << n {
            w += Split::new(space, &CoordinateSubset::from_bits(n, bits))?.work();
        }
        Ok(w)
    };
    let plan = if n <= MAX_SUBSET_ENUMERATION {
        opts.plan(splits_work(n)?)
    } else {
        opts.plan(f64::INFINITY)
    };
    match plan {
        None if n > MAX_SUBSET_ENUMERATION => Err(Error::domain(
            SIZE_CAP,
            format!("exact swap form enumerates 2^n subsets; n = {n} exceeds {MAX_SUBSET_ENUMERATION}"),
        )),
        None => {
            let parts = par_map(1 << n, opts.threads, |bits| {
                Split::new(space, &CoordinateSubset::from_bits(n, bits as u64)).map(|s| box_exact(&s, fs))
            });
            let total = parts.into_iter().collect::<Result<Vec<_>>>()?.into_iter().sum::<Complex64>();
            Ok(ComplexEstimate::exact(total / (1u64 << n) as f64))
        }
        Some((samples, seed)) => {
            let size = space.total_size();
            let digits = Digits::new(space);
            Ok(monte_carlo(samples, seed, opts.threads, |g| {
                let x = g.gen_range(0..size);
                let y = g.gen_range(0..size);
                let (mut u, mut v) = (0, 0);
                for i in 0..n {
                    let (a, b) = (digits.digits[x][i], digits.digits[y][i]);
                    let (a, b) = if g.gen::<bool>() { (a, b) } else { (b, a) };
                    u += a * digits.strides[i];
                    v += b * digits.strides[i];
                }
                fs[0].values()[x] * fs[1].values()[y] * fs[2].values()[u].conj() * fs[3].values()[v].conj()
            }))
        }
    }
}

/// `swap(f,f,f,f)^{1/4}`.
pub fn swap_norm(f: &FunctionTable) -> Result<f64> {
    Ok(swap_norm_with(f, &Options::default())?.value)
}

pub fn swap_norm_with(f: &FunctionTable, opts: &Options) -> Result<Estimate> {
    let form = swap_form_with([f, f, f, f], opts)?;
    if form.method == Method::ExactSum && (form.value.im.abs() > INNER_TOLERANCE || form.value.re < -INNER_TOLERANCE) {
        return Err(Error::internal(format!("swap form {} of a single function is not a nonnegative real", form.value)));
    }
    Ok(root(form, 4))
}

/// `E_{x,y} E_{(u,v)∼x⟷y}[f₁(x) f₂(y) conj f₃(u) conj f₄(v)]`, exchanging each coordinate with probability 1/2.
pub fn swap_via_exchange(fs: [&FunctionTable; 4]) -> Result<Complex64> {
    require_uniform(&fs)?;
    let space = fs[0].space();
    let size = space.total_size();
    if size.saturating_mul(size) > MAX_EXCHANGE_ENTRIES {
        return Err(Error::domain(
            SIZE_CAP,
            format!("exchange tensor needs {size}^2 entries, above {MAX_EXCHANGE_ENTRIES}"),
        ));
    }
    let digits = Digits::new(space);
    let (f3, f4) = (fs[2].values(), fs[3].values());
    let mut t: Vec<Complex64> = (0..size * size).map(|k| f3[k / size].conj() * f4[k % size].conj()).collect();
    for i in 0..space.arity() {
        let stride = digits.strides[i];
        let mut next = vec![Complex64::new(0.0, 0.0); size * size];
        for u in 0..size {
            let du = digits.digits[u][i];
            for v in 0..size {
                let dv = digits.digits[v][i];
                let su = u + dv * stride - du * stride;
                let sv = v + du * stride - dv * stride;
                next[u * size + v] = 0.5 * (t[u * size + v] + t[su * size + sv]);
            }
        }
        t = next;
    }
    let (f1, f2) = (fs[0].values(), fs[1].values());
    let mut total = Complex64::new(0.0, 0.0);
    for x in 0..size {
        for y in 0..size {
            total += f1[x] * f2[y] * t[x * size + y];
        }
    }
    Ok(total / (size * size) as f64)
}

/// Factors `g(x) = f(x, y')`, `h(y) = f(x', y)` for the anchor `(x', y')` maximizing `|⟨f, g·h⟩|`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxInverse {
    #[serde(skip)]
    pub g: FunctionTable,
    #[serde(skip)]
    pub h: FunctionTable,
    /// Anchor point `x'` on `Σ^I` and `y'` on `Σ^Ī`.
    pub anchor: (Vec<usize>, Vec<usize>),
    pub correlation: f64,
    pub box_form: f64,
}

/// For 1-bounded `f`, `box_I(f)⁴ ≤ correlation`.
pub fn box_inverse_extract(f: &FunctionTable, subset: &CoordinateSubset) -> Result<BoxInverse> {
    require_uniform(&[f])?;
    let space = f.space();
    let split = Split::new(space, subset)?;
    let (r, c) = (split.rows, split.cols);
    let m = split.matrix(f);
    // K[x][x'] = Σ_y f(x,y)·conj f(x',y); ⟨f, g·h⟩ = (1/rc) Σ_x conj f(x,y')·K[x][x'].
    let mut k = vec![Complex64::new(0.0, 0.0); r * r];
    for x in 0..r {
        for xp in 0..r {
            k[x * r + xp] = (0..c).map(|y| m[x * c + y] * m[xp * c + y].conj()).sum();
        }
    }
    let mut best = (0, 0, -1.0);
    for xp in 0..r {
        for yp in 0..c {
            let ip: Complex64 = (0..r).map(|x| m[x * c + yp].conj() * k[x * r + xp]).sum::<Complex64>() / (r * c) as f64;
            if ip.norm() > best.2 + 1e-15 {
                best = (xp, yp, ip.norm());
            }
        }
    }
    let (xp, yp, correlation) = best;
    let sub_i = space.subspace(subset)?;
    let sub_o = space.subspace(&subset.complement())?;
    let g = FunctionTable::uniform(sub_i.clone(), (0..r).map(|x| m[x * c + yp]).collect())?;
    let h = FunctionTable::uniform(sub_o.clone(), (0..c).map(|y| m[xp * c + y]).collect())?;
    let form = box_exact(&split, [f, f, f, f]).re;
    Ok(BoxInverse {
        g,
        h,
        anchor: (sub_i.point_unchecked(xp), sub_o.point_unchecked(yp)),
        correlation,
        box_form: form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{c, character, fourier_transform, ProductMeasure};
    use crate::rng;

    fn random_bounded(radices: Vec<usize>, seed: u64) -> FunctionTable {
        let mut r = rng::rng(seed);
        let s = ProductSpace::new(radices).unwrap();
        let v = (0..s.total_size())
            .map(|_| Complex64::from_polar(r.gen::<f64>(), r.gen::<f64>() * std::f64::consts::TAU))
            .collect();
        FunctionTable::uniform(s, v).unwrap()
    }

    #[test]
    fn gowers_basics() {
        let s = ProductSpace::uniform(3, 2).unwrap();
        let k = FunctionTable::constant(s.clone(), ProductMeasure::uniform(s.radices()), c(-0.7, 0.0)).unwrap();
        for deg in 1..=3 {
            assert!((gowers_norm(&k, deg).unwrap() - 0.7).abs() < 1e-12);
        }
        let f = random_bounded(vec![3, 3], 2);
        assert!((gowers_norm(&f, 1).unwrap() - f.expectation().norm()).abs() < 1e-12);
        let chi = character(&s, &[1, 2]).unwrap();
        assert!((gowers_norm(&chi, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u2_matches_fourier() {
        let f = random_bounded(vec![3, 3], 5);
        let l4: f64 = fourier_transform(&f).unwrap().coefficients().iter().map(|c| c.norm_sqr().powi(2)).sum();
        assert!((gowers_norm(&f, 2).unwrap() - l4.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn gowers_monotone_in_s() {
        for seed in 0..5 {
            let f = random_bounded(vec![3, 3], seed);
            let norms: Vec<f64> = (1..=3).map(|s| gowers_norm(&f, s).unwrap()).collect();
            assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-9));
        }
    }

    #[test]
    fn gowers_monte_carlo_close() {
        let f = random_bounded(vec![3, 3], 6);
        let exact = gowers_norm(&f, 2).unwrap();
        let mc = gowers_norm_with(&f, 2, &Options::monte_carlo(400_000, 1)).unwrap();
        assert_eq!(mc.method, Method::MonteCarlo);
        assert!((mc.value - exact).abs() < 0.05);
    }

    #[test]
    fn box_decouples_on_empty_split() {
        let fs: Vec<FunctionTable> = (0..4).map(|s| random_bounded(vec![2, 3], s)).collect();
        let empty = CoordinateSubset::empty(2);
        let v = box_form([&fs[0], &fs[1], &fs[2], &fs[3]], &empty).unwrap();
        let expected = fs[0].inner(&fs[3]).unwrap() * fs[1].inner(&fs[2]).unwrap();
        assert!((v - expected).norm() < 1e-12);
    }

    #[test]
    fn box_matches_direct_sum() {
        let fs: Vec<FunctionTable> = (0..4).map(|s| random_bounded(vec![2, 3, 2], 10 + s)).collect();
        let space = fs[0].space().clone();
        for bits in 0..8u64 {
            let subset = CoordinateSubset::from_bits(3, bits);
            // Oracle: sum over all (z, z') with combinations by coordinate.
            let mut total = Complex64::new(0.0, 0.0);
            for z in space.points() {
                for zp in space.points() {
                    let mix = |first: &Vec<usize>, second: &Vec<usize>| -> usize {
                        let p: Vec<usize> = (0..3).map(|i| if subset.contains(i) { first[i] } else { second[i] }).collect();
                        space.index_of(&p).unwrap()
                    };
                    let p1 = space.index_of(&z).unwrap();
                    let p2 = space.index_of(&zp).unwrap();
                    total += fs[0].values()[p1]
                        * fs[1].values()[p2]
                        * fs[2].values()[mix(&z, &zp)].conj()
                        * fs[3].values()[mix(&zp, &z)].conj();
                }
            }
            let expected = total / (space.total_size() * space.total_size()) as f64;
            let got = box_form([&fs[0], &fs[1], &fs[2], &fs[3]], &subset).unwrap();
            assert!((got - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_paths_agree() {
        for seed in 0..10 {
            let fs: Vec<FunctionTable> = (0..4).map(|s| random_bounded(vec![3, 2, 3], seed * 4 + s)).collect();
            let q = [&fs[0], &fs[1], &fs[2], &fs[3]];
            let a = swap_form(q).unwrap();
            let b = swap_via_exchange(q).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_norm_small_cases() {
        let f = random_bounded(vec![4], 3);
        assert!((swap_norm(&f).unwrap() - f.norm2()).abs() < 1e-12);
        let s = ProductSpace::uniform(3, 3).unwrap();
        let g = FunctionTable::from_fn(s.clone(), ProductMeasure::uniform(s.radices()), |x| {
            x.iter().enumerate().fold(c(1.0, 0.0), |acc, (i, &xi)| {
                acc * Complex64::from_polar(1.0, 0.3 * (i + 1) as f64 * xi as f64 + 0.1 * (xi * xi) as f64)
            })
        })
        .unwrap();
        assert!((swap_norm(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_monte_carlo_close() {
        let f = random_bounded(vec![3, 3, 3], 8);
        let exact = swap_form([&f, &f, &f, &f]).unwrap();
        let mc = swap_form_with([&f, &f, &f, &f], &Options::monte_carlo(400_000, 2)).unwrap();
        assert!((mc.value - exact).norm() < 6.0 * mc.stderr + 1e-3);
    }

    #[test]
    fn box_inverse_guarantee() {
        for seed in 0..5 {
            let f = random_bounded(vec![2, 2, 2, 2], 30 + seed);
            let subset = CoordinateSubset::from_bits(4, 0b0101);
            let inv = box_inverse_extract(&f, &subset).unwrap();
            assert!(inv.correlation >= inv.box_form - 1e-10);
            assert!(inv.box_form >= -1e-12);
            assert!((inv.box_form - box_norm(&f, &subset).unwrap().powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn box_inverse_of_product_is_one() {
        let s = ProductSpace::uniform(3, 2).unwrap();
        let f = FunctionTable::from_fn(s.clone(), ProductMeasure::uniform(s.radices()), |x| {
            Complex64::from_polar(1.0, 0.7 * x[0] as f64) * Complex64::from_polar(1.0, -1.3 * (x[1] * x[1]) as f64)
        })
        .unwrap();
        let inv = box_inverse_extract(&f, &CoordinateSubset::from_bits(2, 0b01)).unwrap();
        assert!((inv.correlation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_uniform_rejected() {
        let s = ProductSpace::uniform(2, 1).unwrap();
        let m = ProductMeasure::from_f64_exact(&[vec![0.25, 0.75]]).unwrap();
        let f = FunctionTable::new(s, vec![c(1.0, 0.0); 2], m).unwrap();
        assert!(gowers_norm(&f, 2).unwrap_err().is_domain());
        assert!(swap_norm(&f).unwrap_err().is_domain());
    }
}
