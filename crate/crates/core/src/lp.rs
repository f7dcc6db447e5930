//! Max-margin linear program for open polyhedral cones.
//!
//! Given rows `a_k`, solves
//!
//! ```text
//! maximize t  subject to  ⟨a_k, y⟩ ≥ t  for all k,   ‖y‖_∞ ≤ 1
//! ```
//!
//! with a dense tableau simplex. Writing `y = y⁺ − y⁻` with `0 ≤ y^± ≤ 1`
//! makes every right-hand side nonnegative, so the all-slack basis is feasible
//! and no phase one is needed. Instances here are tiny (a handful of
//! variables, at most a few hundred rows).

use nalgebra::DVector;

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct MarginSolution {
    /// `min_k ⟨a_k, y⟩` at the returned point; `+∞` when there are no rows.
    pub margin: f64,
    pub point: DVector<f64>,
}

pub(crate) fn max_margin(rows: &[DVector<f64>], dim: usize) -> Result<MarginSolution> {
    if rows.is_empty() {
        return Ok(MarginSolution {
            margin: f64::INFINITY,
            point: DVector::zeros(dim),
        });
    }
    let n_vars = 2 * dim + 1;
    let n_rows = rows.len() + 2 * dim;
    let width = n_vars + n_rows + 1;
    let rhs_col = width - 1;
    let mut tab = vec![0.0; (n_rows + 1) * width];
    let at = |r: usize, c: usize| r * width + c;

    for (k, a) in rows.iter().enumerate() {
        tab[at(k, 0)] = 1.0;
        for j in 0..dim {
            tab[at(k, 1 + j)] = -a[j];
            tab[at(k, 1 + dim + j)] = a[j];
        }
        tab[at(k, n_vars + k)] = 1.0;
    }
    for j in 0..2 * dim {
        let r = rows.len() + j;
        tab[at(r, 1 + j)] = 1.0;
        tab[at(r, n_vars + r)] = 1.0;
        tab[at(r, rhs_col)] = 1.0;
    }
    // objective row holds −c
    tab[at(n_rows, 0)] = -1.0;

    let mut basis: Vec<usize> = (0..n_rows).map(|r| n_vars + r).collect();
    let max_iterations = 100 * (n_rows + n_vars) + 1000;
    let mut degenerate = 0;

    for iteration in 0.. {
        if iteration >= max_iterations {
            return Err(Error::LpNumericalFailure { iterations: iteration });
        }
        let bland = degenerate >= DEGENERATE_STREAK;
        let entering = {
            let obj = &tab[at(n_rows, 0)..at(n_rows, rhs_col)];
            if bland {
                obj.iter().position(|&c| c < -PIVOT_EPS)
            } else {
                obj.iter()
                    .enumerate()
                    .filter(|(_, &c)| c < -PIVOT_EPS)
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, _)| j)
            }
        };
        let Some(col) = entering else { break };

        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..n_rows {
            let a = tab[at(r, col)];
            if a > PIVOT_EPS {
                let ratio = tab[at(r, rhs_col)] / a;
                let better = match leaving {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[r] < basis[lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
        }
        let Some((row, ratio)) = leaving else {
            // t is bounded by any single row, so an unbounded ray is numerical trouble.
            return Err(Error::LpNumericalFailure { iterations: iteration });
        };
        degenerate = if ratio <= PIVOT_EPS { degenerate + 1 } else { 0 };

        let pivot = tab[at(row, col)];
        for c in 0..width {
            tab[at(row, c)] /= pivot;
        }
        for r in 0..=n_rows {
            if r == row {
                continue;
            }
            let factor = tab[at(r, col)];
            if factor != 0.0 {
                for c in 0..width {
                    tab[at(r, c)] -= factor * tab[at(row, c)];
                }
            }
        }
        basis[row] = col;
    }

    let mut vars = vec![0.0; n_vars];
    for (r, &b) in basis.iter().enumerate() {
        if b < n_vars {
            vars[b] = tab[at(r, rhs_col)];
        }
    }
    let point = DVector::from_fn(dim, |j, _| {
        (vars[1 + j] - vars[1 + dim + j]).clamp(-1.0, 1.0)
    });
    let margin = rows
        .iter()
        .map(|a| a.dot(&point))
        .fold(f64::INFINITY, f64::min);
    Ok(MarginSolution { margin, point })
}
