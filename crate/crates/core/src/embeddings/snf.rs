use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

/// `U · M · V = D` with `U`, `V` unimodular and `D` diagonal, `d₁ | d₂ | …`, `dᵢ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    /// Nonzero diagonal entries, in order.
    pub fn divisors(&self) -> Vec<BigInt> {
        (0..self.d.len().min(self.d.first().map_or(0, Vec::len)))
            .map(|i| self.d[i][i].clone())
            .filter(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.divisors().len()
    }
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn matmul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * &brow[j]).sum())
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

fn row_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    let src = m[source].clone();
    for (t, s) in m[target].iter_mut().zip(&src) {
        *t -= q * s;
    }
}

fn col_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let s = row[source].clone();
        row[target] -= q * s;
    }
}

fn swap_cols(m: &mut IntMatrix, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a = m.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    for t in 0..rows.min(cols) {
        let mut pivot = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && pivot.map_or(true, |(pi, pj): (usize, usize)| a[i][j].abs() < a[pi][pj].abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut a, t, pj);
        swap_cols(&mut v, t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = &a[i][t] / &a[t][t];
                    row_axpy(&mut a, i, t, &q);
                    row_axpy(&mut u, i, t, &q);
                    clean &= a[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = &a[t][j] / &a[t][t];
                    col_axpy(&mut a, j, t, &q);
                    col_axpy(&mut v, j, t, &q);
                    clean &= a[t][j].is_zero();
                }
            }
            if !clean {
                let mut best = (t, t);
                for i in t + 1..rows {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                    u.swap(t, best.0);
                }
                if best.1 != t {
                    swap_cols(&mut a, t, best.1);
                    swap_cols(&mut v, t, best.1);
                }
                continue;
            }
            let offender = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    row_axpy(&mut a, t, i, &minus_one);
                    row_axpy(&mut u, t, i, &minus_one);
                }
                None => break,
            }
        }
        if a[t][t].is_negative() {
            for x in a[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
        }
    }
    SmithForm { u, d: a, v }
}
