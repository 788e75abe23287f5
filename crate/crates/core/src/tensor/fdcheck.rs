use crate::tensor::dense::Dense2D;

/// Central-difference step.
pub const FD_EPSILON: f64 = 1e-5;
/// Acceptance bound on the relative error between analytic and numeric gradients.
pub const FD_TOLERANCE: f64 = 1e-4;

/// Central differences at h=1e-5 on an O(1) scalar carry roundoff noise of
/// roughly eps/h ≈ 1e-11, so gradients below that are unresolvable. The
/// denominator floor keeps noise-vs-noise comparisons (e.g. parameters the
/// loss is exactly invariant to, like key biases under softmax) from
/// registering as disagreement, while a genuine mismatch at or above 1e-10
/// still trips the 1e-4 bound.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-6)
}

/// Checks an analytic gradient of a scalar function against central finite
/// differences, perturbing every element of `x0`. Returns the worst relative
/// error.
pub fn fd_check_scalar_fn(
    x0: &Dense2D,
    analytic: &Dense2D,
    mut f: impl FnMut(&Dense2D) -> f64,
) -> f64 {
    assert_eq!(x0.shape(), analytic.shape());
    let mut worst = 0.0f64;
    let mut x = x0.clone();
    for i in 0..x.data.len() {
        let orig = x.data[i];
        x.data[i] = orig + FD_EPSILON;
        let plus = f(&x);
        x.data[i] = orig - FD_EPSILON;
        let minus = f(&x);
        x.data[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_EPSILON);
        worst = worst.max(relative_error(numeric, analytic.data[i]));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_matches_analytic_quadratic() {
        // f(x) = sum(x^2): gradient 2x.
        let x0 = Dense2D::from_fn(2, 3, |r, c| (r as f64) - (c as f64) * 0.5 + 0.3);
        let analytic = Dense2D::from_fn(2, 3, |r, c| 2.0 * x0.get(r, c));
        let rel = fd_check_scalar_fn(&x0, &analytic, |x| {
            x.data.iter().map(|v| v * v).sum()
        });
        assert!(rel <= 1e-6, "rel err {rel}");
    }

    #[test]
    fn fd_flags_wrong_gradient() {
        let x0 = Dense2D::from_fn(1, 4, |_, c| c as f64 + 1.0);
        let wrong = Dense2D::from_fn(1, 4, |_, c| 3.0 * x0.get(0, c));
        let rel = fd_check_scalar_fn(&x0, &wrong, |x| {
            x.data.iter().map(|v| v * v).sum()
        });
        assert!(rel > 0.1, "corrupted gradient not flagged, rel err {rel}");
    }
}
