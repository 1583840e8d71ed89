use serde::{Deserialize, Serialize};

use super::{is_prime, CspInstance, Predicate};
use crate::error::{Error, Result, DOMAIN, PARSE};

/// `a·x_i + b·x_j + c·x_k = d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equation {
    pub coeffs: [usize; 3],
    pub rhs: usize,
    pub vars: [usize; 3],
}

/// A system of 3-variable linear equations over `F_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lin3System {
    pub p: usize,
    pub vars: usize,
    pub equations: Vec<Equation>,
}

impl Lin3System {
    pub fn new(p: usize, vars: usize, equations: Vec<Equation>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::domain(DOMAIN, format!("3-Lin needs a prime field, got {p}")));
        }
        if let Some(e) = equations.iter().find(|e| e.vars.iter().any(|&v| v >= vars)) {
            return Err(Error::domain(DOMAIN, format!("equation {e:?} uses a variable outside 0..{vars}")));
        }
        let equations = equations
            .into_iter()
            .map(|e| Equation {
                coeffs: e.coeffs.map(|a| a % p),
                rhs: e.rhs % p,
                vars: e.vars,
            })
            .collect();
        Ok(Lin3System { p, vars, equations })
    }

    /// Parse the compact form: one equation per line as `a b c d i j k`.
    /// Blank lines and lines starting with `#` are skipped. Without an explicit
    /// `vars`, the count is one more than the largest index used.
    pub fn parse(p: usize, vars: Option<usize>, text: &str) -> Result<Self> {
        let mut equations = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::domain(PARSE, format!("line {}: {e}", n + 1)))?;
            if nums.len() != 7 {
                return Err(Error::domain(PARSE, format!("line {}: expected 7 integers `a b c d i j k`", n + 1)));
            }
            equations.push(Equation {
                coeffs: [nums[0], nums[1], nums[2]],
                rhs: nums[3],
                vars: [nums[4], nums[5], nums[6]],
            });
        }
        let used = equations.iter().flat_map(|e| e.vars).max().map_or(0, |v| v + 1);
        Self::new(p, vars.unwrap_or(used).max(used), equations)
    }

    pub fn to_compact(&self) -> String {
        self.equations
            .iter()
            .map(|e| {
                format!(
                    "{} {} {} {} {} {} {}\n",
                    e.coeffs[0], e.coeffs[1], e.coeffs[2], e.rhs, e.vars[0], e.vars[1], e.vars[2]
                )
            })
            .collect()
    }

    pub fn satisfies(&self, x: &[usize]) -> bool {
        self.equations.iter().all(|e| {
            let lhs: usize = (0..3).map(|t| e.coeffs[t] * x[e.vars[t]]).sum();
            lhs % self.p == e.rhs
        })
    }

    pub fn to_instance(&self) -> Result<CspInstance> {
        let mut inst = CspInstance::new(self.vars, self.p)?;
        for e in &self.equations {
            let pred = Predicate::lin3(self.p, e.coeffs[0], e.coeffs[1], e.coeffs[2], e.rhs)?;
            inst.push(e.vars.to_vec(), pred)?;
        }
        Ok(inst)
    }
}

fn inverse(a: usize, p: usize) -> usize {
    let mut r = 1;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// A satisfying assignment if the system is consistent, with free variables
/// set to 0; `None` otherwise.
pub fn gauss_solve_3lin(sys: &Lin3System) -> Result<Option<Vec<usize>>> {
    let p = sys.p;
    if !is_prime(p) {
        return Err(Error::domain(DOMAIN, format!("3-Lin needs a prime field, got {p}")));
    }
    let n = sys.vars;
    let mut rows: Vec<Vec<usize>> = sys
        .equations
        .iter()
        .map(|e| {
            let mut row = vec![0; n + 1];
            for t in 0..3 {
                row[e.vars[t]] = (row[e.vars[t]] + e.coeffs[t]) % p;
            }
            row[n] = e.rhs % p;
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(k) = (r..rows.len()).find(|&k| rows[k][col] != 0) else {
            continue;
        };
        rows.swap(r, k);
        let inv = inverse(rows[r][col], p);
        for v in rows[r].iter_mut() {
            *v = *v * inv % p;
        }
        let pivot = rows[r].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != r && row[col] != 0 {
                let f = row[col];
                for (v, &q) in row.iter_mut().zip(&pivot) {
                    *v = (*v + (p - f) * q) % p;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|row| row[n] != 0) {
        return Ok(None);
    }
    let mut x = vec![0; n];
    for (row, &col) in rows.iter().zip(&pivots) {
        x[col] = row[n];
    }
    if !sys.satisfies(&x) {
        return Err(Error::internal("Gaussian elimination produced an assignment violating an equation"));
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::csp_value_bruteforce;
    use crate::rational;
    use crate::rng::{self, Rng};

    fn random_system(p: usize, vars: usize, eqs: usize, seed: u64) -> Lin3System {
        let mut r = rng::rng(seed);
        let equations = (0..eqs)
            .map(|_| Equation {
                coeffs: [r.gen_range(0..p), r.gen_range(0..p), r.gen_range(0..p)],
                rhs: r.gen_range(0..p),
                vars: [r.gen_range(0..vars), r.gen_range(0..vars), r.gen_range(0..vars)],
            })
            .collect();
        Lin3System::new(p, vars, equations).unwrap()
    }

    #[test]
    fn contradiction_has_no_solution() {
        let sys = Lin3System::parse(2, None, "1 1 0 0 0 1 2\n1 1 0 1 0 1 2\n").unwrap();
        assert_eq!(gauss_solve_3lin(&sys).unwrap(), None);
    }

    #[test]
    fn empty_system_gives_zeros() {
        let sys = Lin3System::new(3, 4, Vec::new()).unwrap();
        assert_eq!(gauss_solve_3lin(&sys).unwrap(), Some(vec![0; 4]));
    }

    #[test]
    fn composite_modulus_is_rejected() {
        assert!(Lin3System::new(6, 2, Vec::new()).unwrap_err().is_domain());
        assert!(Lin3System::parse(2, None, "1 1 1\n").is_err());
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut consistent = 0;
        for seed in 0..120 {
            let p = [2, 3, 5][seed as usize % 3];
            let vars = 1 + seed as usize % 6;
            let sys = random_system(p, vars, 1 + seed as usize % 7, seed);
            let solved = gauss_solve_3lin(&sys).unwrap();
            let value = csp_value_bruteforce(&sys.to_instance().unwrap(), 1).unwrap().value;
            assert_eq!(solved.is_some(), value == rational::one(), "seed {seed}");
            if let Some(x) = solved {
                assert!(sys.satisfies(&x));
                consistent += 1;
            }
        }
        assert!(consistent > 10 && consistent < 110);
    }

    #[test]
    fn compact_round_trip() {
        let sys = random_system(5, 6, 8, 2);
        assert_eq!(Lin3System::parse(5, Some(6), &sys.to_compact()).unwrap(), sys);
    }
}
