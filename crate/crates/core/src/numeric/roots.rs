/// Outcome of a bracketing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Bisection for a nondecreasing `f` with `f(lo) <= 0 <= f(hi)`.
///
/// Stops once `|f(x)| <= tol` or the bracket collapses to adjacent floats.
/// When `max_iter` runs out the midpoint with the smallest residual seen is
/// returned with `converged = false`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Bisection {
    let mut best = Bisection {
        x: lo,
        residual: f(lo),
        iterations: 0,
        converged: false,
    };
    if best.residual.abs() <= tol {
        best.converged = true;
        return best;
    }
    let r_hi = f(hi);
    if r_hi.abs() < best.residual.abs() {
        best.x = hi;
        best.residual = r_hi;
    }
    if r_hi.abs() <= tol {
        best.converged = true;
        return best;
    }

    for it in 1..=max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            best.iterations = it;
            return best;
        }
        let r = f(mid);
        if r.abs() < best.residual.abs() {
            best.x = mid;
            best.residual = r;
        }
        best.iterations = it;
        if r.abs() <= tol {
            best.converged = true;
            return best;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}
