//! Gauss–Legendre quadrature on the unit interval.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre polynomial `P_n`,
/// starting from the Chebyshev-based initial guess; the rule is exact for
/// polynomials up to degree `2 * points - 1`.
pub fn gauss_legendre<T: Scalar>(points: usize) -> (Vec<T>, Vec<T>) {
    assert!(points >= 1, "quadrature needs at least one node");
    let n = points;
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = cast::<T>(n as f64);
    for i in 0..n {
        // Initial guess for the i-th root of P_n on [-1, 1], descending.
        let mut x =
            (T::pi() * (cast::<T>(i as f64) + cast::<T>(0.75)) / (nf + cast::<T>(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = cast::<T>(k as f64);
                let p2 = ((cast::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let step = p1 / dp;
            x -= step;
            if step.abs() <= T::default_epsilon() * cast::<T>(4.0) {
                break;
            }
        }
        // Map from [-1, 1] to [0, 1].
        nodes[i] = (T::one() - x) * cast::<T>(0.5);
        weights[i] = T::one() / ((T::one() - x * x) * dp * dp);
    }
    if n == 1 {
        nodes[0] = cast::<T>(0.5);
        weights[0] = T::one();
    }
    (nodes, weights)
}

/// Integrates `f` over `[0, 1]` with a `points`-node Gauss–Legendre rule.
pub fn integrate<T: Scalar>(points: usize, mut f: impl FnMut(T) -> Result<T>) -> Result<T> {
    if points == 0 {
        return Err(Error::InvalidArgument {
            reason: "quadrature needs at least one node".to_string(),
        });
    }
    let (nodes, weights) = gauss_legendre::<T>(points);
    let mut acc = T::zero();
    for (x, w) in nodes.iter().zip(weights.iter()) {
        acc += *w * f(*x)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        // 64 nodes are exact for degree 127; check a few moments.
        for k in [0usize, 1, 5, 20] {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = integrate(64, |t: f64| Ok(t.powi(k as i32))).unwrap();
            assert_relative_eq!(got, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn integrates_smooth_transcendental() {
        let got = integrate(64, |t: f64| Ok((2.0 * t).exp())).unwrap();
        let exact = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert_relative_eq!(got, exact, max_relative = 1e-13);
    }

    #[test]
    fn weights_sum_to_one() {
        for n in [1usize, 2, 5, 33, 64, 128] {
            let (_, w) = gauss_legendre::<f64>(n);
            let sum: f64 = w.iter().sum();
            assert_relative_eq!(sum, 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn works_in_f32() {
        let (_, w) = gauss_legendre::<f32>(16);
        let sum: f32 = w.iter().sum();
        assert_relative_eq!(sum, 1.0_f32, max_relative = 1e-5);
    }
}
