//! Small least-squares fits.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    /// root-mean-square residual
    pub rms: f64,
}

/// Least squares for y ≈ Σ_k coef_k·basis_k(x) via Householder QR.
pub fn lstsq(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    let (m, k) = (xs.len(), basis.len());
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} abscissae but {} values", xs.len(), ys.len())));
    }
    if m < k || k == 0 {
        return Err(Error::Fit(format!("{m} samples cannot fit {k} coefficients")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let a = Mat::<f64>::from_fn(m, k, |i, j| basis[j](xs[i]));
    let rhs = Mat::<f64>::from_fn(m, 1, |i, _| ys[i]);
    let sol = a.col_piv_qr().solve_lstsq(&rhs);
    let coef: Vec<f64> = (0..k).map(|j| sol[(j, 0)]).collect();
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("rank-deficient design".into()));
    }
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let f: f64 = basis.iter().zip(&coef).map(|(b, c)| c * b(x)).sum();
            (y - f).powi(2)
        })
        .sum();
    Ok(LinearFit { coef, rms: (rss / m as f64).sqrt() })
}

/// Slope and intercept of y against x.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let f = lstsq(xs, ys, &[&|x| x, &|_| 1.0])?;
    Ok((f.coef[0], f.coef[1]))
}

/// Slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    Ok(line(&lx, &ly)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_odd_cubic() {
        let xs: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x - 0.2 * x.powi(3)).collect();
        let f = lstsq(&xs, &ys, &[&|x| x, &|x| x.powi(3)]).unwrap();
        assert!((f.coef[0] - 0.7).abs() < 1e-13 && (f.coef[1] + 0.2).abs() < 1e-12);
        assert!(f.rms < 1e-14);
    }

    #[test]
    fn power_law_slope() {
        let xs: Vec<f64> = (0..10).map(|k| 50.0 * 2f64.powf(k as f64 / 4.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|t| 3.0 * t.powf(-0.25)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_input() {
        assert!(matches!(lstsq(&[1.0], &[1.0], &[&|x| x, &|_| 1.0]), Err(Error::Fit(_))));
    }
}
