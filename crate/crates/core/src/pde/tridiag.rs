/// Thomas algorithm for a tridiagonal system, solved in place.
///
/// Row `i` reads `sub[i]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`;
/// `sub[0]` and `sup[n-1]` are ignored. `scratch` is reused between calls.
/// Returns `false` on a zero pivot.
pub(crate) fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) -> bool {
    let n = rhs.len();
    if n == 0 {
        return true;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return false;
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i] * scratch[i];
        if pivot == 0.0 {
            return false;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    true
}
