use crate::scalar::Real;

fn xlogx_over<T: Real>(x: T, y: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if y <= T::zero() {
        T::infinity()
    } else {
        x * (x / y).ln()
    }
}

/// `kl(Ber(x) || Ber(y))` with `0 log 0 = 0`; `+inf` when `y` is on the boundary and `x` is not.
pub fn kl_bernoulli<T: Real>(x: T, y: T) -> T {
    let one = T::one();
    let v = xlogx_over(x, y) + xlogx_over(one - x, one - y);
    // Rounding can push the sum a hair below zero near x == y.
    v.max(T::zero())
}

/// Unit-variance Gaussian KL, `(x - y)^2 / 2`.
pub fn kl_gaussian<T: Real>(x: T, y: T) -> T {
    (x - y) * (x - y) / T::lit(2.0)
}

/// Gaussian KL with variance `sigma2`. Zero variance gives `0` on equal means and `+inf` otherwise.
pub fn kl_gaussian_var<T: Real>(x: T, y: T, sigma2: T) -> T {
    if sigma2 == T::zero() {
        return if x == y { T::zero() } else { T::infinity() };
    }
    (x - y) * (x - y) / (T::lit(2.0) * sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!((kl_gaussian(0.3, 0.5) - 0.02f64).abs() < 1e-15);
        let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((kl_bernoulli(0.5, 0.25) - expected).abs() < 1e-15);
        assert!((kl_bernoulli(0.5f64, 0.25) - 0.14384).abs() < 1e-5);
        assert!((kl_bernoulli(0.0, 0.3) + (0.7f64).ln()).abs() < 1e-15);
        assert!((kl_bernoulli(1.0, 0.3) + (0.3f64).ln()).abs() < 1e-15);
        assert_eq!(kl_bernoulli(0.4f64, 0.0), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.4f64, 1.0), f64::INFINITY);
        assert_eq!(kl_gaussian_var(0.1f64, 0.2, 0.0), f64::INFINITY);
        assert!((kl_gaussian_var(0.1f64, 0.3, 0.5) - 0.04).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bernoulli_is_nonnegative_and_zero_on_diagonal(p in 0.0f64..=1.0, q in 0.001f64..0.999) {
            prop_assert_eq!(kl_bernoulli(p, p), 0.0);
            prop_assert!(kl_bernoulli(p, q) >= 0.0);
        }
    }
}
