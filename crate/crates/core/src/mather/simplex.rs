//! Dense two-phase simplex for `min c.x` subject to `A x = b`, `x >= 0`.
//!
//! Sized for desk-scale problems (a few thousand columns, tens of rows).
//! Pricing is Dantzig's rule, falling back to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

/// Optimal vertex of a linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; the last row holds reduced
    /// costs, the last column the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + s];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + s];
            if f != 0.0 {
                for (j, pj) in pivot_row.iter().enumerate() {
                    self.t[i * w + j] -= f * pj;
                }
            }
        }
        self.basis[r] = s;
    }

    /// Runs simplex iterations over the columns `0..allowed`.
    fn optimize(&mut self, allowed: usize, max_iter: usize, used: &mut usize) -> Result<()> {
        let mut degenerate = 0;
        loop {
            let obj = self.rows;
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -EPS;
            for j in 0..allowed {
                let d = self.at(obj, j);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(s) = enter else { return Ok(()) };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, s);
                if a > EPS {
                    let q = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => q < ratio - EPS || (q <= ratio + EPS && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        ratio = q;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::LpError("objective is unbounded below".into()));
            };
            degenerate = if ratio <= EPS { degenerate + 1 } else { 0 };
            self.pivot(r, s);
            *used += 1;
            if *used >= max_iter {
                return Err(Error::LpError(format!("no optimum after {max_iter} pivots")));
            }
        }
    }
}

/// Solves `min c.x` subject to `A x = b`, `x >= 0`.
///
/// Errors: `Infeasible` when phase one leaves positive artificial mass,
/// `LpError` on unboundedness, malformed input or pivot exhaustion.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::LpError("constraint matrix has inconsistent shape".into()));
    }
    if c.iter().chain(b).chain(a.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::LpError("non-finite coefficient".into()));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * w + j] = sign * a[i][j];
        }
        t[i * w + n + i] = 1.0;
        t[i * w + cols] = sign * b[i];
    }
    // phase one: minimize the sum of artificials
    for j in 0..=cols {
        if j >= n && j < cols {
            continue;
        }
        t[m * w + j] = -(0..m).map(|i| t[i * w + j]).sum::<f64>();
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis: (n..n + m).collect(),
    };
    let max_iter = 50 * (n + m) + 1000;
    let mut used = 0;
    tab.optimize(cols, max_iter, &mut used)?;
    let infeasibility = -tab.rhs(m);
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Err(Error::Infeasible(format!(
            "phase one leaves residual {infeasibility:e}"
        )));
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }
    // phase two costs
    for j in 0..=cols {
        let cj = if j < n { c[j] } else { 0.0 };
        let mut d = cj;
        for i in 0..m {
            let bj = tab.basis[i];
            let cb = if bj < n { c[bj] } else { 0.0 };
            d -= cb * tab.at(i, j);
        }
        tab.t[m * w + j] = d;
    }
    tab.optimize(n, max_iter, &mut used)?;
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        value,
        iterations: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let c = [-1.0, -1.0, 0.0, 0.0];
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let sol = minimize(&c, &a, &[4.0, 6.0]).unwrap();
        assert!((sol.value + 2.8).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12 && (sol.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert!(matches!(minimize(&[1.0, 1.0], &a, &[-1.0]), Err(Error::Infeasible(_))));
        let a = vec![vec![1.0, -1.0]];
        assert!(matches!(minimize(&[0.0, -1.0], &a, &[1.0]), Err(Error::LpError(_))));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 0.0, -1.0]];
        let sol = minimize(&[3.0, 1.0, 2.0], &a, &[1.0, 2.0, 0.0]).unwrap();
        // x = y-free: x0 = x2, x0 + x1 + x2 = 1; cheapest is all mass on x1
        assert!((sol.value - 1.0).abs() < 1e-12);
    }
}
