//! Internal dense linear-algebra helpers shared across modules.
//!
//! Symmetric eigendecomposition is delegated to `faer`; everything else is
//! small-matrix arithmetic implemented directly on `ndarray` storage so that
//! results are deterministic across runs on one platform.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
///
/// Eigenvector signs are fixed by making each column's largest-magnitude
/// entry positive (first such entry on ties), so output is deterministic.
pub(crate) fn sym_eigen_desc(a: &ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::dim("sym_eigen_desc", "square matrix", format!("{}x{}", d, a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigendecomposition input".into()));
    }
    // Spectra with a large exactly-degenerate cluster near zero (for
    // instance the Gram matrix of exactly low-rank data) can stall the
    // iteration, and a failed attempt only errors out after exhausting its
    // full iteration budget. Shifting the diagonal up front leaves the
    // eigenvectors unchanged, moves any such cluster away from zero so it
    // deflates immediately, and is subtracted back out of the eigenvalues
    // below (exactly, up to one rounding of `lambda + c`).
    let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    let attempt = |c: f64| {
        faer::Mat::from_fn(d, d, |i, j| a[[i, j]] + if i == j { c } else { 0.0 })
            .self_adjoint_eigen(faer::Side::Lower)
            .map(|e| (e, c))
    };
    let (evd, shift) = attempt(1e-3 * scale)
        .or_else(|_| attempt(scale))
        .or_else(|_| attempt(0.0))
        .map_err(|e| Error::NoConvergence(format!("symmetric eigendecomposition: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = Array1::from_iter(idx.iter().map(|&i| s[i] - shift));
    let mut vecs = Array2::zeros((d, d));
    for (col, &src) in idx.iter().enumerate() {
        for row in 0..d {
            vecs[[row, col]] = u[(row, src)];
        }
    }
    fix_column_signs(&mut vecs);
    Ok((vals, vecs))
}

/// Flip each column's sign so its largest-magnitude entry is positive.
/// Ties pick the first entry attaining the maximum.
pub(crate) fn fix_column_signs(v: &mut Array2<f64>) {
    let (n, k) = (v.nrows(), v.ncols());
    for j in 0..k {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..n {
            let a = v[[i, j]].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if v[[best, j]] < 0.0 {
            for i in 0..n {
                v[[i, j]] = -v[[i, j]];
            }
        }
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration with a fixed deterministic start and iteration count.
pub(crate) fn top_eigenvalue_psd(a: &ArrayView2<f64>, iters: usize) -> f64 {
    let d = a.nrows();
    if d == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    for _ in 0..iters {
        let w = a.dot(&v);
        let nw = norm2(&w);
        if nw < 1e-300 {
            return 0.0;
        }
        v = w / nw;
    }
    v.dot(&a.dot(&v))
}

pub(crate) fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub(crate) fn fro(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Thin QR orthonormalization (modified Gram-Schmidt with a second pass),
/// returning the Q factor with sign-fixed columns.
///
/// Errors if a column collapses to (numerical) zero, i.e. the input is
/// rank-deficient beyond repair.
pub(crate) fn qr_orthonormal(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, k) = (a.nrows(), a.ncols());
    if k > n {
        return Err(Error::dim("qr_orthonormal", "ncols <= nrows", format!("{}x{}", n, k)));
    }
    let mut q = a.to_owned();
    for j in 0..k {
        let scale = q.column(j).iter().map(|x| x.abs()).fold(0.0f64, f64::max).max(1.0);
        // two orthogonalization passes for numerical stability
        for _pass in 0..2 {
            for i in 0..j {
                let dot = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                let mut cj = q.column_mut(j);
                cj.scaled_add(-dot, &qi);
            }
        }
        let nrm = q.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm <= 1e-12 * scale {
            return Err(Error::NoConvergence(format!(
                "rank-deficient input to QR orthonormalization at column {j}"
            )));
        }
        q.column_mut(j).mapv_inplace(|x| x / nrm);
    }
    fix_column_signs(&mut q);
    Ok(q)
}

/// Cholesky factorization of a small symmetric positive-definite matrix.
/// Returns the lower factor L with A = L L^T.
fn cholesky(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NoConvergence(format!(
                        "matrix not positive definite (pivot {sum:.3e} at {i})"
                    )));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve A X = B for symmetric positive-definite A via Cholesky.
pub(crate) fn solve_spd(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::dim(
            "solve_spd",
            format!("{n}x{n} and {n}xk"),
            format!("{}x{} and {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols()),
        ));
    }
    let l = cholesky(a)?;
    let k = b.ncols();
    let mut x = b.to_owned();
    // forward substitution L Y = B
    for col in 0..k {
        for i in 0..n {
            let mut sum = x[[i, col]];
            for j in 0..i {
                sum -= l[[i, j]] * x[[j, col]];
            }
            x[[i, col]] = sum / l[[i, i]];
        }
    }
    // back substitution L^T X = Y
    for col in 0..k {
        for i in (0..n).rev() {
            let mut sum = x[[i, col]];
            for j in i + 1..n {
                sum -= l[[j, i]] * x[[j, col]];
            }
            x[[i, col]] = sum / l[[i, i]];
        }
    }
    Ok(x)
}

/// Extreme eigenvalues (max, min) of a small symmetric matrix, for condition
/// checks.
pub(crate) fn sym_extreme_eigenvalues(a: &ArrayView2<f64>) -> Result<(f64, f64)> {
    let (vals, _) = sym_eigen_desc(a)?;
    let n = vals.len();
    if n == 0 {
        return Err(Error::dim("sym_extreme_eigenvalues", "non-empty", "0x0"));
    }
    Ok((vals[0], vals[n - 1]))
}

/// Minimum-cost perfect assignment on a square cost matrix (rows to columns)
/// by dynamic programming over column subsets. Intended for small sizes
/// (clustering label alignment); cost is O(g * 2^g).
pub(crate) fn min_cost_assignment(cost: &ArrayView2<f64>) -> Result<(Vec<usize>, f64)> {
    let g = cost.nrows();
    if g != cost.ncols() {
        return Err(Error::dim("min_cost_assignment", "square matrix", format!("{}x{}", g, cost.ncols())));
    }
    if g == 0 {
        return Ok((vec![], 0.0));
    }
    if g > 20 {
        return Err(Error::InvalidConfig(format!("assignment size {g} too large for subset DP")));
    }
    let full = 1usize << g;
    let mut dp = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 1..full {
        let row = (mask as u32).count_ones() as usize - 1;
        let mut best = f64::INFINITY;
        let mut best_c = usize::MAX;
        for c in 0..g {
            if mask & (1 << c) != 0 {
                let prev = dp[mask & !(1 << c)];
                let cand = prev + cost[[row, c]];
                if cand < best {
                    best = cand;
                    best_c = c;
                }
            }
        }
        dp[mask] = best;
        choice[mask] = best_c;
    }
    let mut perm = vec![0usize; g];
    let mut mask = full - 1;
    while mask != 0 {
        let row = (mask as u32).count_ones() as usize - 1;
        let c = choice[mask];
        perm[row] = c;
        mask &= !(1 << c);
    }
    Ok((perm, dp[full - 1]))
}

/// Orthogonal polar factor `U Vᵀ` from the singular value decomposition of a
/// square matrix; this is the rotation nearest to `c` in Frobenius norm.
pub(crate) fn polar_orthogonal(c: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let r = c.nrows();
    if c.ncols() != r {
        return Err(Error::dim("polar_orthogonal", format!("{r}x{r}"), format!("{r}x{}", c.ncols())));
    }
    let m = faer::Mat::from_fn(r, r, |i, j| c[[i, j]]);
    let svd = m
        .svd()
        .map_err(|_| Error::NoConvergence("singular value decomposition".into()))?;
    let u = svd.U();
    let v = svd.V();
    let mut o = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            o[[i, j]] = (0..r).map(|k| u[(i, k)] * v[(j, k)]).sum::<f64>();
        }
    }
    Ok(o)
}
