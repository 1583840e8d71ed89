//! Mixed-radix addressing of product spaces `Σ₁ × … × Σₙ`.
//!
//! Points are ranked lexicographically with the first coordinate most
//! significant. Every table and file format in the crate uses this layout.

use crate::analysis::FunctionTable;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, SIZE_CAP};
use crate::rng::{self, Rng};

/// Largest table the crate will allocate.
pub const MAX_TOTAL_SIZE: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ProductSpace {
    pub fn new(radices: Vec<usize>) -> Result<Self> {
        if let Some(i) = radices.iter().position(|&m| m == 0) {
            return Err(Error::domain(DOMAIN, format!("radix of coordinate {i} is zero")));
        }
        let mut strides = vec![1; radices.len()];
        let mut total: usize = 1;
        for i in (0..radices.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(radices[i])
                .filter(|&t| t <= MAX_TOTAL_SIZE)
                .ok_or_else(|| {
                    Error::domain(SIZE_CAP, format!("product space {radices:?} exceeds {MAX_TOTAL_SIZE} points"))
                })?;
        }
        Ok(ProductSpace {
            radices,
            strides,
            total,
        })
    }

    /// `Σⁿ` with `|Σ| = m`.
    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    pub fn arity(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn radix(&self, coord: usize) -> usize {
        self.radices[coord]
    }

    pub fn stride(&self, coord: usize) -> usize {
        self.strides[coord]
    }

    pub fn total_size(&self) -> usize {
        self.total
    }

    pub fn index_of(&self, point: &[usize]) -> Result<usize> {
        if point.len() != self.arity() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("point has {} coordinates, space has {}", point.len(), self.arity()),
            ));
        }
        let mut idx = 0;
        for (i, (&s, &m)) in point.iter().zip(&self.radices).enumerate() {
            if s >= m {
                return Err(Error::domain(
                    DOMAIN,
                    format!("symbol {s} out of range for coordinate {i} of radix {m}"),
                ));
            }
            idx += s * self.strides[i];
        }
        Ok(idx)
    }

    pub fn point_of(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.total {
            return Err(Error::domain(
                DOMAIN,
                format!("index {index} out of range for {} points", self.total),
            ));
        }
        Ok(self.point_unchecked(index))
    }

    pub(crate) fn point_unchecked(&self, index: usize) -> Vec<usize> {
        (0..self.arity()).map(|i| self.digit(index, i)).collect()
    }

    /// Symbol at `coord` of the point with rank `index`.
    #[inline]
    pub fn digit(&self, index: usize, coord: usize) -> usize {
        (index / self.strides[coord]) % self.radices[coord]
    }

    /// Rank of the point obtained by overwriting coordinate `coord`.
    #[inline]
    pub fn with_digit(&self, index: usize, coord: usize, symbol: usize) -> usize {
        let old = self.digit(index, coord);
        index - old * self.strides[coord] + symbol * self.strides[coord]
    }

    /// All points in rank order.
    pub fn points(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total).map(move |i| self.point_unchecked(i))
    }

    /// The space restricted to the coordinates in `subset`, in increasing order.
    pub fn subspace(&self, subset: &CoordinateSubset) -> Result<ProductSpace> {
        ProductSpace::new(subset.members().iter().map(|&i| self.radices[i]).collect())
    }
}

/// A subset `I ⊆ {0, …, n−1}` stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoordinateSubset {
    mask: Vec<bool>,
}

impl CoordinateSubset {
    pub fn new(mask: Vec<bool>) -> Self {
        CoordinateSubset { mask }
    }

    pub fn from_members(arity: usize, members: &[usize]) -> Result<Self> {
        let mut mask = vec![false; arity];
        for &i in members {
            if i >= arity {
                return Err(Error::domain(DOMAIN, format!("coordinate {i} outside arity {arity}")));
            }
            mask[i] = true;
        }
        Ok(CoordinateSubset { mask })
    }

    /// Subset whose members are the set bits of `bits`.
    pub fn from_bits(arity: usize, bits: u64) -> Self {
        CoordinateSubset {
            mask: (0..arity).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn full(arity: usize) -> Self {
        CoordinateSubset { mask: vec![true; arity] }
    }

    pub fn empty(arity: usize) -> Self {
        CoordinateSubset { mask: vec![false; arity] }
    }

    pub fn arity(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, coord: usize) -> bool {
        self.mask.get(coord).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn complement(&self) -> Self {
        CoordinateSubset {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }
}

/// Include each of `n` coordinates independently with probability `delta`.
pub fn sample_subset(n: usize, delta: f64, seed: u64) -> Result<CoordinateSubset> {
    let mut r = rng::rng(seed);
    sample_subset_with(n, delta, &mut r)
}

pub(crate) fn sample_subset_with<R: Rng + ?Sized>(n: usize, delta: f64, r: &mut R) -> Result<CoordinateSubset> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::domain(DOMAIN, format!("inclusion probability {delta} outside [0, 1]")));
    }
    Ok(CoordinateSubset {
        mask: (0..n).map(|_| r.gen::<f64>() < delta).collect(),
    })
}

/// Free coordinates `I` together with values fixed on `Ī`.
///
/// `fixed[t]` is the symbol of the `t`-th coordinate of `Ī` in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    free: CoordinateSubset,
    fixed: Vec<usize>,
}

impl Restriction {
    pub fn new(space: &ProductSpace, free: CoordinateSubset, fixed: Vec<usize>) -> Result<Self> {
        if free.arity() != space.arity() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("subset arity {} does not match space arity {}", free.arity(), space.arity()),
            ));
        }
        let fixed_coords = free.complement().members();
        if fixed_coords.len() != fixed.len() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("{} fixed values for {} fixed coordinates", fixed.len(), fixed_coords.len()),
            ));
        }
        for (&c, &s) in fixed_coords.iter().zip(&fixed) {
            if s >= space.radix(c) {
                return Err(Error::domain(DOMAIN, format!("fixed symbol {s} outside alphabet of coordinate {c}")));
            }
        }
        Ok(Restriction { free, fixed })
    }

    pub fn free(&self) -> &CoordinateSubset {
        &self.free
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn arity(&self) -> usize {
        self.free.arity()
    }
}

/// The table of `f` with the coordinates of `Ī` fixed, living on `Σ^I` with the
/// induced product measure.
pub fn restrict(f: &FunctionTable, r: &Restriction) -> Result<FunctionTable> {
    let space = f.space();
    if r.arity() != space.arity() {
        return Err(Error::domain(
            ARITY_MISMATCH,
            format!("restriction arity {} does not match table arity {}", r.arity(), space.arity()),
        ));
    }
    let free = r.free.members();
    let fixed_coords = r.free.complement().members();
    let base: usize = fixed_coords
        .iter()
        .zip(&r.fixed)
        .map(|(&c, &s)| s * space.stride(c))
        .sum();
    let sub = space.subspace(&r.free)?;
    let values = (0..sub.total_size())
        .map(|j| {
            let idx = free
                .iter()
                .enumerate()
                .fold(base, |acc, (t, &c)| acc + sub.digit(j, t) * space.stride(c));
            f.values()[idx]
        })
        .collect();
    let measure = f.measure().select(&free);
    FunctionTable::new(sub, values, measure)
}
