//! Weighted least-squares polynomial fits and their exact integrals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Standard errors are floored here before weighting so cells whose pair
/// count never varies still give a well-posed system.
pub const STDERR_FLOOR: f64 = 1e-6;

const RANK_TOLERANCE: f64 = 1e-13;

/// Minimizes `sum_i w_i (y_i - p(x_i))^2` with `w_i = 1 / stderr_i^2`.
///
/// Returns `degree + 1` coefficients, constant term first.
pub fn fit_polynomial_wls(xs: &[f64], ys: &[f64], stderrs: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = xs.len();
    if ys.len() != m || stderrs.len() != m {
        return Err(Error::InvalidArgument(format!(
            "fit inputs differ in length ({m}, {}, {})",
            ys.len(),
            stderrs.len()
        )));
    }
    if m <= degree {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} fit needs more than {degree} points, got {m}"
        )));
    }
    if xs.iter().chain(ys).chain(stderrs).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite fit input".into()));
    }
    let cols = degree + 1;
    let mut design = DMatrix::<f64>::zeros(m, cols);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..m {
        let sw = 1.0 / stderrs[i].max(STDERR_FLOOR);
        let mut pow = 1.0;
        for k in 0..cols {
            design[(i, k)] = sw * pow;
            pow *= xs[i];
        }
        rhs[i] = sw * ys[i];
    }
    // Equilibrate columns; high powers otherwise dominate the spectrum.
    let mut scale = vec![1.0; cols];
    for (k, s) in scale.iter_mut().enumerate() {
        let norm = design.column(k).norm();
        if norm > 0.0 {
            *s = norm;
            design.column_mut(k).scale_mut(1.0 / norm);
        }
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= RANK_TOLERANCE * smax {
        return Err(Error::SingularSystem);
    }
    let solution = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(solution.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

/// Horner evaluation, constant-first coefficients.
pub fn eval_polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn antiderivative(coeffs: &[f64], x: f64) -> f64 {
    let inner = coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64);
    inner * x
}

/// Exact `integral_{lower}^{upper} p(x) dx`.
pub fn integrate_polynomial(coeffs: &[f64], lower: f64, upper: f64) -> f64 {
    if lower == upper {
        return 0.0;
    }
    antiderivative(coeffs, upper) - antiderivative(coeffs, lower)
}
