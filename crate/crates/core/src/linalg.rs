//! Dense Gaussian elimination for the tiny systems the planners build.

/// Solves `a · x = b` by elimination with partial pivoting followed by one
/// round of iterative refinement. Returns `None` when a pivot is below
/// `pivot_tol` relative to the largest entry of its column block.
pub fn solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N], pivot_tol: f64) -> Option<[f64; N]> {
    let mut x = eliminate(a, b, pivot_tol)?;
    let mut r = [0.0; N];
    for i in 0..N {
        let mut acc = b[i];
        for j in 0..N {
            acc -= a[i][j] * x[j];
        }
        r[i] = acc;
    }
    let dx = eliminate(a, &r, pivot_tol)?;
    for i in 0..N {
        x[i] += dx[i];
    }
    Some(x)
}

fn eliminate<const N: usize>(a: &[[f64; N]; N], b: &[f64; N], pivot_tol: f64) -> Option<[f64; N]> {
    let mut m = *a;
    let mut rhs = *b;
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let pivot_row = (col..N)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() <= pivot_tol * scale {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            let pivot = m[col];
            for (dst, src) in m[row][col..].iter_mut().zip(&pivot[col..]) {
                *dst -= f * src;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
