use crate::pinn::IterationHistory;
use crate::{Error, Result};

/// Least-squares fit of `log Eₙ = c + s·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub e_n: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    /// Empirical contraction factor `exp(slope)`.
    pub fn rho(&self) -> f64 {
        self.slope.exp()
    }
}

pub fn fit_rate(e_n: &[f64]) -> Result<RateFit> {
    if e_n.len() < 3 {
        return Err(Error::Empty("rate fit needs at least three iterations"));
    }
    if e_n.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::NonFinite("change norms must be finite and >= 0".into()));
    }
    let y: Vec<f64> = e_n.iter().map(|e| e.max(f64::EPSILON).ln()).collect();
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, yi) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (yi - ym);
        sxx += dx * dx;
        syy += (yi - ym) * (yi - ym);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { e_n: e_n.to_vec(), slope, intercept: ym - slope * xm, r_squared })
}

/// Rate fit of the validation sup-norm changes of the first `max_iterations`
/// outer iterations.
pub fn convergence_history(history: &IterationHistory, max_iterations: usize) -> Result<RateFit> {
    let e: Vec<f64> = history.sup_diffs().into_iter().take(max_iterations).collect();
    fit_rate(&e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequences() {
        let e: Vec<f64> = (0..12).map(|n| 0.5f64.powi(n)).collect();
        let f = fit_rate(&e).unwrap();
        assert!((f.slope - 0.5f64.ln()).abs() < 1e-6);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let scaled: Vec<f64> = e.iter().map(|v| 7.5 * v).collect();
        assert!((fit_rate(&scaled).unwrap().slope - f.slope).abs() < 1e-12);
        assert_eq!(fit_rate(&[0.3; 5]).unwrap().slope, 0.0);
        assert!(fit_rate(&[0.0, 0.0, 0.0]).unwrap().slope.is_finite());
        assert!(fit_rate(&[1.0, 2.0]).is_err());
    }
}
