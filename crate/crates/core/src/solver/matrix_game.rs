//! One-shot zero-sum matrix games solved as a linear program.
//!
//! The payoff is shifted to be strictly positive, then the column player's
//! program `max Σy' s.t. A y' ≤ 1, y' ≥ 0` is solved with a dense primal
//! simplex from the slack basis. Bland's rule picks both the entering and the
//! leaving variable, so the method cannot cycle. The row player's mixture is
//! read off the reduced costs of the slack columns.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Payoff matrix; the row player maximizes.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame<T> {
    pub payoff: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution<T> {
    pub value: T,
    pub row: Vec<T>,
    pub col: Vec<T>,
}

impl<T: Scalar> MatrixGame<T> {
    pub fn new(payoff: Matrix<T>) -> Self {
        Self { payoff }
    }

    /// Largest payoff the row player can secure with a pure action.
    pub fn pure_maxmin(&self) -> T {
        let m = &self.payoff;
        (0..m.rows())
            .map(|r| m.row(r).iter().copied().fold(T::infinity(), T::min))
            .fold(T::neg_infinity(), T::max)
    }

    /// Smallest payoff the column player can hold the row player to with a pure action.
    pub fn pure_minmax(&self) -> T {
        let m = &self.payoff;
        (0..m.cols())
            .map(|c| (0..m.rows()).map(|r| m[(r, c)]).fold(T::neg_infinity(), T::max))
            .fold(T::infinity(), T::min)
    }
}

pub const DEFAULT_TOL: f64 = 1e-9;

/// Value and optimal mixtures. Fails with `NumericalFailure` if the simplex
/// does not terminate or its output misses the `tol` optimality check.
pub fn matrix_game_value<T: Scalar>(game: &MatrixGame<T>, tol: T) -> Result<MatrixGameSolution<T>> {
    let m = &game.payoff;
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty matrix game".into()));
    }
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite payoff entry".into()));
    }
    let sol = match pure_saddle(m) {
        Some(sol) => sol,
        None if rows == 2 && cols == 2 => mixed_2x2(m),
        None => simplex(m)?,
    };
    check_optimality(m, &sol, tol)?;
    Ok(sol)
}

/// Value only, skipping the optimality certificate; the hot path of the
/// Shapley iterations.
pub(crate) fn matrix_game_value_fast<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    if let Some(sol) = pure_saddle(m) {
        return Ok(sol.value);
    }
    if m.rows() == 2 && m.cols() == 2 {
        return Ok(mixed_2x2(m).value);
    }
    Ok(simplex(m)?.value)
}

fn unit<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[k] = T::one();
    v
}

fn pure_saddle<T: Scalar>(m: &Matrix<T>) -> Option<MatrixGameSolution<T>> {
    let (rows, cols) = (m.rows(), m.cols());
    let (mut best_row, mut maxmin) = (0, T::neg_infinity());
    for r in 0..rows {
        let worst = m.row(r).iter().copied().fold(T::infinity(), T::min);
        if worst > maxmin {
            maxmin = worst;
            best_row = r;
        }
    }
    let (mut best_col, mut minmax) = (0, T::infinity());
    for c in 0..cols {
        let best = (0..rows).map(|r| m[(r, c)]).fold(T::neg_infinity(), T::max);
        if best < minmax {
            minmax = best;
            best_col = c;
        }
    }
    (maxmin == minmax).then(|| MatrixGameSolution {
        value: maxmin,
        row: unit(rows, best_row),
        col: unit(cols, best_col),
    })
}

/// Closed form for a 2×2 game without a pure saddle point.
fn mixed_2x2<T: Scalar>(m: &Matrix<T>) -> MatrixGameSolution<T> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    // Offsets from `a` keep the cancellation relative to the entry spread.
    let (b0, c0, d0) = (b - a, c - a, d - a);
    let den = d0 - b0 - c0;
    let x = (d - c) / den;
    let y = (d - b) / den;
    MatrixGameSolution {
        value: a - b0 * c0 / den,
        row: vec![x, T::one() - x],
        col: vec![y, T::one() - y],
    }
}

fn simplex<T: Scalar>(m: &Matrix<T>) -> Result<MatrixGameSolution<T>> {
    let (rows, cols) = (m.rows(), m.cols());
    let shift = T::one() - m.min_entry();
    let width = cols + rows + 1;
    let rhs = width - 1;
    // Constraint rows then the objective row (reduced costs), row-major.
    let mut tab = vec![T::zero(); (rows + 1) * width];
    for r in 0..rows {
        for c in 0..cols {
            tab[r * width + c] = m[(r, c)] + shift;
        }
        tab[r * width + cols + r] = T::one();
        tab[r * width + rhs] = T::one();
    }
    let obj = rows * width;
    for c in 0..cols {
        tab[obj + c] = -T::one();
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    let eps = T::epsilon() * T::lit(1e3);
    let max_iter = 50 * (rows + cols) + 1000;

    let mut iter = 0;
    while let Some(enter) = (0..cols + rows).find(|&c| tab[obj + c] < -eps) {
        iter += 1;
        if iter > max_iter {
            return Err(Error::NumericalFailure(format!(
                "simplex exceeded {max_iter} pivots on a {rows}x{cols} game"
            )));
        }
        let mut leave: Option<(usize, T)> = None;
        for r in 0..rows {
            let a = tab[r * width + enter];
            if a > eps {
                let ratio = tab[r * width + rhs] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio || (ratio == lratio && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((pr, _)) = leave else {
            // Unbounded cannot happen with a positive matrix.
            return Err(Error::NumericalFailure("unbounded simplex ray".into()));
        };
        let pivot = tab[pr * width + enter];
        for c in 0..width {
            tab[pr * width + c] /= pivot;
        }
        for r in 0..=rows {
            if r == pr {
                continue;
            }
            let factor = tab[r * width + enter];
            if factor == T::zero() {
                continue;
            }
            for c in 0..width {
                let delta = factor * tab[pr * width + c];
                tab[r * width + c] -= delta;
            }
        }
        basis[pr] = enter;
    }

    let total = tab[obj + rhs];
    if !(total > T::zero()) {
        return Err(Error::NumericalFailure("degenerate simplex optimum".into()));
    }
    let shifted_value = T::one() / total;
    let mut col = vec![T::zero(); cols];
    for (r, &b) in basis.iter().enumerate() {
        if b < cols {
            col[b] = tab[r * width + rhs] * shifted_value;
        }
    }
    let mut row: Vec<T> = (0..rows)
        .map(|r| (tab[obj + cols + r] * shifted_value).max(T::zero()))
        .collect();
    normalize(&mut row);
    normalize(&mut col);
    Ok(MatrixGameSolution {
        value: shifted_value - shift,
        row,
        col,
    })
}

fn normalize<T: Scalar>(v: &mut [T]) {
    for x in v.iter_mut() {
        *x = x.max(T::zero());
    }
    let s: T = v.iter().copied().sum();
    if s > T::zero() {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

fn check_optimality<T: Scalar>(m: &Matrix<T>, sol: &MatrixGameSolution<T>, tol: T) -> Result<()> {
    let guaranteed = (0..m.cols())
        .map(|c| (0..m.rows()).map(|r| sol.row[r] * m[(r, c)]).sum::<T>())
        .fold(T::infinity(), T::min);
    let conceded = (0..m.rows())
        .map(|r| m.row(r).iter().zip(&sol.col).map(|(&a, &y)| a * y).sum::<T>())
        .fold(T::neg_infinity(), T::max);
    if guaranteed < sol.value - tol || conceded > sol.value + tol {
        return Err(Error::NumericalFailure(format!(
            "matrix game certificate off: guarantees {guaranteed}, concedes {conceded}, value {}",
            sol.value
        )));
    }
    Ok(())
}
