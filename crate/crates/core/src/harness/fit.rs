use std::collections::BTreeMap;

use serde::Serialize;

use super::sweep::ExperimentRecord;
use super::HarnessError;

/// Least-squares slope of `log₂ err` against `log₂ ρ`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64, HarnessError> {
    let mut rhos: Vec<f64> = points.iter().map(|p| p.0).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if rhos.len() < 3 {
        return Err(HarnessError::InsufficientPoints(rhos.len()));
    }
    if points.iter().any(|&(rho, err)| !(rho > 0.0 && err > 0.0)) {
        return Err(HarnessError::Config("decay fit needs positive rho and error".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub scheme: String,
    pub r: usize,
    pub eta: usize,
    /// `None` when fewer than three distinct `ρ` are available.
    pub slope: Option<f64>,
    /// `(ρ, mean err over signals)`.
    pub points: Vec<(usize, f64)>,
}

/// Groups successful rows by `(scheme, r, η)`, averages the error over the
/// signals at each `ρ` and fits the decay slope per group.
pub fn fit_decay(records: &[ExperimentRecord]) -> Vec<DecayFit> {
    // (scheme, r, η) → ρ → (error sum, count)
    type Groups = BTreeMap<(String, usize, usize), BTreeMap<usize, (f64, usize)>>;
    let mut groups = Groups::new();
    for rec in records.iter().filter(|r| r.is_ok()) {
        let Some(err) = rec.err else { continue };
        let entry = groups
            .entry((rec.scheme.clone(), rec.r, rec.eta))
            .or_default()
            .entry(rec.rho)
            .or_insert((0.0, 0));
        entry.0 += err;
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|((scheme, r, eta), by_rho)| {
            let points: Vec<(usize, f64)> = by_rho
                .into_iter()
                .map(|(rho, (sum, n))| (rho, sum / n as f64))
                .collect();
            let as_f: Vec<(f64, f64)> = points.iter().map(|&(rho, e)| (rho as f64, e)).collect();
            DecayFit {
                scheme,
                r,
                eta,
                slope: fit_slope(&as_f).ok(),
                points,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&rho: &f64| (rho, 3.7 * rho.powi(-2)))
            .collect();
        assert!((fit_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_error_has_zero_slope() {
        let pts = [(2.0, 0.5), (4.0, 0.5), (8.0, 0.5)];
        assert!(fit_slope(&pts).unwrap().abs() < 1e-15);
    }

    #[test]
    fn too_few_points() {
        let pts = [(2.0, 0.5), (4.0, 0.25), (4.0, 0.2)];
        assert!(matches!(fit_slope(&pts), Err(HarnessError::InsufficientPoints(2))));
    }
}
