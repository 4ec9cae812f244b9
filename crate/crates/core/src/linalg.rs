//! Dense Gauss-Jordan elimination over any [`Scalar`].

use crate::scalar::Scalar;

/// Reduced row echelon form of a matrix, pivoting only within the first
/// `pivot_cols` columns (later columns ride along as right-hand sides).
#[derive(Clone, Debug)]
pub struct Rref<S: Scalar> {
    pub rows: Vec<Vec<S>>,
    /// Pivot column of each nonzero row, in order.
    pub pivots: Vec<usize>,
}

pub fn rref<S: Scalar>(mut a: Vec<Vec<S>>, pivot_cols: usize) -> Rref<S> {
    let scale = a
        .iter()
        .flatten()
        .fold(S::zero(), |m, v| if v.abs() > m { v.abs() } else { m });
    let nrows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == nrows {
            break;
        }
        // Floats pivot on the largest entry; exact arithmetic takes the first
        // nonzero one, which keeps sparse rows sparse.
        let best = if S::MODE == "f64" {
            (r..nrows)
                .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
                .unwrap()
        } else {
            (r..nrows).find(|&i| !a[i][c].is_zero()).unwrap_or(r)
        };
        if a[best][c].negligible(&scale) {
            continue;
        }
        a.swap(r, best);
        let p = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        for i in 0..nrows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            let (pivot_row, row) = if i < r {
                let (lo, hi) = a.split_at_mut(r);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = a.split_at_mut(i);
                (&lo[r], &mut hi[0])
            };
            for (v, pv) in row.iter_mut().zip(pivot_row) {
                if !pv.is_zero() {
                    *v = v.sub_mul(&f, pv);
                }
            }
            row[c] = S::zero();
        }
        pivots.push(c);
        r += 1;
    }
    Rref { rows: a, pivots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn solves_square_system_exactly() {
        let a = vec![vec![q(2), q(1), q(5)], vec![q(1), q(3), q(10)]];
        let r = rref(a, 2);
        assert_eq!(r.pivots, vec![0, 1]);
        assert_eq!(r.rows[0][2], q(1));
        assert_eq!(r.rows[1][2], q(3));
    }

    #[test]
    fn detects_rank_deficiency() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        assert_eq!(rref(a, 3).pivots, vec![0]);
    }
}
