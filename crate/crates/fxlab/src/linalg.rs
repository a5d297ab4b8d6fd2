//! Dense Gaussian elimination with partial pivoting.
//!
//! Shared by the exact configuration-chain solver and the weak-selection
//! systems. Pivoting picks the largest magnitude in the column, ties going to
//! the lowest row, so solves are reproducible bit for bit.

/// Solves `A x = b` in place for a dense row-major `n x n` matrix. On
/// success `b` holds the solution; `a` is destroyed either way.
pub(crate) fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Result<(), Singular> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = a[col * n + col].abs();
        for row in (col + 1)..n {
            let cand = a[row * n + col].abs();
            if cand > pivot_abs {
                pivot_abs = cand;
                pivot_row = row;
            }
        }
        if pivot_abs == 0.0 {
            return Err(Singular);
        }
        if pivot_row != col {
            for k in col..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            let (pivot_slice, row_slice) = {
                let (lo, hi) = a.split_at_mut(row * n);
                (&lo[col * n..col * n + n], &mut hi[..n])
            };
            for k in (col + 1)..n {
                row_slice[k] -= factor * pivot_slice[k];
            }
            b[row] -= factor * b[col];
        }
    }

    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular;
