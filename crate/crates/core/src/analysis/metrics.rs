use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fdm::{NdReference, TimeGrid};
use crate::game::DifferentialGame;
use crate::net::{NetworkState, Representation};
use crate::pinn::predict_values;
use crate::{Error, Result};

fn check_shapes(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::Dimension { expected: reference.len(), got: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::Empty("error metric input"));
    }
    Ok(())
}

/// `‖pred - ref‖₂ / ‖ref‖₂`.
pub fn relative_l2_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_shapes(pred, reference)?;
    let num: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::OutOfRange("reference has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

pub fn mse(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_shapes(pred, reference)?;
    Ok(pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub rel_l2: f64,
    pub mse: f64,
}

/// Errors of one method on one problem, one row per time slice (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub problem: String,
    pub method: String,
    pub grid: String,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn at(&self, t: f64) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| (r.t - t).abs() < 1e-12)
    }
}

/// Network predictions against a reference grid at the stored slices closest
/// to `times`, evaluated at the grid nodes.
pub fn error_report_on_grid<G: DifferentialGame + ?Sized>(
    state: &NetworkState,
    game: &G,
    repr: Representation,
    reference: &TimeGrid,
    times: &[f64],
    method: &str,
) -> Result<ErrorReport> {
    let nodes = reference.nodes();
    let x: Vec<f64> = nodes.concat();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let k = reference.slice_index(t).ok_or_else(|| Error::OutOfRange(format!("no stored reference slice at t = {t}")))?;
        let tk = reference.times[k];
        let pred = predict_values(state, game, repr, &vec![tk; nodes.len()], &x)?;
        let r = &reference.slices[k];
        rows.push(ErrorRow { t: tk, rel_l2: relative_l2_error(&pred, r)?, mse: mse(&pred, r)? });
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    let shape: Vec<String> = reference.shape.iter().map(|n| n.to_string()).collect();
    Ok(ErrorReport { problem: game.label(), method: method.into(), grid: shape.join("x"), rows })
}

/// Network predictions against a pairwise reference at `n` seeded uniform
/// points of the target domain, for each time in `times`.
pub fn error_report_nd<G: DifferentialGame + ?Sized>(
    state: &NetworkState,
    game: &G,
    repr: Representation,
    reference: &NdReference,
    times: &[f64],
    n: usize,
    seed: u64,
    method: &str,
) -> Result<ErrorReport> {
    if n == 0 {
        return Err(Error::Empty("error sample"));
    }
    let d = game.dim();
    let domain = game.target_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n * d];
    for c in x.chunks_mut(d) {
        domain.sample(&mut rng, c);
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let pred = predict_values(state, game, repr, &vec![t; n], &x)?;
        let r = x.chunks(d).map(|xi| reference.value(t, xi)).collect::<Result<Vec<f64>>>()?;
        rows.push(ErrorRow { t, rel_l2: relative_l2_error(&pred, &r)?, mse: mse(&pred, &r)? });
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(ErrorReport { problem: game.label(), method: method.into(), grid: format!("{n} random points"), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_identities() {
        let r = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(relative_l2_error(&r, &r).unwrap(), 0.0);
        assert_eq!(mse(&r, &r).unwrap(), 0.0);
        let twice: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!((relative_l2_error(&twice, &r).unwrap() - 1.0).abs() < 1e-15);
        let p = [1.1, -2.0, 2.7, 0.4];
        let k = -3.7;
        let (pk, rk): (Vec<f64>, Vec<f64>) = p.iter().zip(&r).map(|(a, b)| (k * a, k * b)).unzip();
        assert!((relative_l2_error(&pk, &rk).unwrap() - relative_l2_error(&p, &r).unwrap()).abs() < 1e-14);
        assert!(relative_l2_error(&p, &[0.0; 4]).is_err());
        assert!(mse(&p, &r[..3]).is_err());
    }
}
