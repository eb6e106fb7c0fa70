//! Low-level numerical kernels: fixed-order reductions and Gauss–Legendre rules.
//!
//! Every quadrature reduction in the crate goes through [`pairwise_sum`] or
//! [`pairwise_sum_by`] so that results are bit-reproducible regardless of how
//! callers parallelise over basis indices.

/// Pairwise (cascade) summation with a fixed recursion order.
///
/// Error grows like O(log n) in the number of terms instead of O(n) for a
/// running sum, and the grouping never depends on thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const CUTOFF: usize = 32;
    if values.len() <= CUTOFF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise summation of `f(i)` for `i` in `0..n` without materialising a buffer.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        const CUTOFF: usize = 32;
        if hi - lo <= CUTOFF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, n, &f)
}

/// Neumaier compensated summation; used where long accumulations feed
/// tight orthonormality tolerances.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; exact for polynomials of
/// degree 2n-1. Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // Midpoint node: P_n(0) = 0 for odd n.
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes/weights mapped affinely from [-1, 1] to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = xs.iter().map(|x| mid + half * x).collect();
    let weights = ws.iter().map(|w| half * w).collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.5, -4.0];
        assert_abs_diff_eq!(pairwise_sum(&xs), 2.5, epsilon = 0.0);
    }

    #[test]
    fn pairwise_sum_by_agrees_with_slice_version() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 - 50.0).collect();
        assert_eq!(pairwise_sum(&xs), pairwise_sum_by(xs.len(), |i| xs[i]));
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let xs = [1e16, 1.0, -1e16];
        assert_abs_diff_eq!(compensated_sum(&xs), 1.0, epsilon = 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_polynomials() {
        // n nodes are exact for degree 2n-1: check x^k on [0,1] against 1/(k+1).
        let (xs, ws) = gauss_legendre_on(12, 0.0, 1.0);
        for k in 0i32..=23 {
            let integral: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * x.powi(k))
                .sum();
            assert_abs_diff_eq!(integral, 1.0 / f64::from(k + 1), epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_interval_length() {
        for n in [1, 2, 7, 31, 64] {
            let (_, ws) = gauss_legendre_on(n, 0.0, 3.0);
            assert_abs_diff_eq!(pairwise_sum(&ws), 3.0, epsilon = 1e-12);
        }
    }
}
