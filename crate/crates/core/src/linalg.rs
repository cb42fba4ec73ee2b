//! Small dense LU with partial pivoting, on caller-provided row-major storage.

/// Factors the `n x n` row-major matrix `a` in place (`L` unit lower, `U`
/// upper) and records row swaps in `piv`. Returns the smallest `|U_kk|`.
/// A zero pivot leaves the remaining columns unreduced.
pub fn lu_in_place(a: &mut [f64], n: usize, piv: &mut [usize]) -> f64 {
    debug_assert!(a.len() >= n * n && piv.len() >= n);
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        piv[k] = p;
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
        }
        min_pivot = min_pivot.min(best);
        if best == 0.0 {
            continue;
        }
        let d = a[k * n + k];
        for r in k + 1..n {
            let l = a[r * n + k] / d;
            a[r * n + k] = l;
            if l != 0.0 {
                for c in k + 1..n {
                    a[r * n + c] -= l * a[k * n + c];
                }
            }
        }
    }
    if n == 0 {
        min_pivot = f64::INFINITY;
    }
    min_pivot
}

/// Solves with factors from [`lu_in_place`], overwriting `b`.
pub fn lu_solve(lu: &[f64], n: usize, piv: &[usize], b: &mut [f64]) {
    for k in 0..n {
        b.swap(k, piv[k]);
    }
    for r in 1..n {
        let mut s = b[r];
        for c in 0..r {
            s -= lu[r * n + c] * b[c];
        }
        b[r] = s;
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= lu[r * n + c] * b[c];
        }
        b[r] = s / lu[r * n + r];
    }
}

/// Infinity norm of the inverse from its LU factors, column by column.
pub fn inverse_norm_inf(lu: &[f64], n: usize, piv: &[usize]) -> f64 {
    let mut rows = [0.0f64; 8];
    assert!(n <= rows.len(), "inverse_norm_inf is for small blocks");
    let mut e = [0.0f64; 8];
    for j in 0..n {
        e[..n].fill(0.0);
        e[j] = 1.0;
        lu_solve(lu, n, piv, &mut e[..n]);
        for i in 0..n {
            rows[i] += e[i].abs();
        }
    }
    rows[..n].iter().fold(0.0, |a: f64, &b| a.max(b))
}

/// Owned factorisation for the ODE Newton path.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl DenseLu {
    pub fn factor(mut a: Vec<f64>, n: usize) -> Self {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0; n];
        let min_pivot = lu_in_place(&mut a, n, &mut piv);
        Self {
            n,
            a,
            piv,
            min_pivot,
        }
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &mut [f64]) {
        lu_solve(&self.a, self.n, &self.piv, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        // zero leading entry forces a swap
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|r| (0..3).map(|c| a[r * 3 + c] * x[c]).sum()).collect();
        let lu = DenseLu::factor(a, 3);
        lu.solve(&mut b);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_norm_of_diagonal() {
        let mut a = vec![2.0, 0.0, 0.0, 0.25];
        let mut piv = [0; 2];
        let mp = lu_in_place(&mut a, 2, &mut piv);
        assert_eq!(mp, 0.25);
        assert_eq!(inverse_norm_inf(&a, 2, &piv), 4.0);
    }

    #[test]
    fn singular_reports_zero_pivot() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut piv = [0; 2];
        assert_eq!(lu_in_place(&mut a, 2, &mut piv), 0.0);
    }
}
