use serde::{Deserialize, Serialize};

use super::PhaseSpaceField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayFitConfig {
    /// Samples below `floor_rel * max|V|` are treated as numerically zero.
    pub floor_rel: f64,
    pub r_min: f64,
    /// Added to `log max|V|` before fitting; 0 reproduces the strict rule.
    pub prefactor_slack: f64,
    /// Points with a nonzero coordinate of magnitude below this are skipped.
    pub min_coordinate: f64,
}

impl Default for DecayFitConfig {
    fn default() -> Self {
        DecayFitConfig {
            floor_rel: 1e-14,
            r_min: 1e-3,
            prefactor_slack: 0.0,
            min_coordinate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitReport {
    /// Per-axis rates: the largest `r_j` with `log|V| <= log C - r_j Phi_j` alone.
    pub rates: Vec<f64>,
    /// Largest common rate `r` with `log|V| <= log C - r sum_j Phi_j`.
    pub common_rate: f64,
    pub powers: Vec<f64>,
    pub log_prefactor: f64,
    pub residual: f64,
    pub points_used: usize,
    pub pass: bool,
}

/// Min-margin decay fit over samples `(log|V|, coordinates)`.
pub fn fit_decay_samples<'a>(
    samples: impl IntoIterator<Item = (f64, &'a [f64])>,
    powers: &[f64],
    cfg: &DecayFitConfig,
) -> Result<DecayFitReport> {
    if !(cfg.floor_rel > f64::EPSILON) {
        return Err(Error::InvalidParameter(format!(
            "floor {} must exceed machine epsilon",
            cfg.floor_rel
        )));
    }
    if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidParameter(format!("decay power {p} must be positive")));
    }
    let dim = powers.len();
    let mut kept: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut log_max = f64::NEG_INFINITY;
    for (lv, x) in samples {
        if x.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "expected {dim} coordinates per sample, got {}",
                x.len()
            )));
        }
        if !lv.is_finite() {
            continue;
        }
        log_max = log_max.max(lv);
        if cfg.min_coordinate > 0.0 && x.iter().any(|&c| c != 0.0 && c.abs() < cfg.min_coordinate) {
            continue;
        }
        let phi: Vec<f64> = x.iter().zip(powers).map(|(c, p)| c.abs().powf(*p)).collect();
        kept.push((lv, phi));
    }
    if !log_max.is_finite() {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    let floor = log_max + cfg.floor_rel.ln();
    kept.retain(|(lv, _)| *lv >= floor);
    if kept.is_empty() {
        return Err(Error::Degenerate("no samples above the floor".into()));
    }
    let log_prefactor = log_max + cfg.prefactor_slack;
    let mut common = f64::INFINITY;
    let mut rates = vec![f64::INFINITY; dim];
    for (lv, phi) in &kept {
        let margin = log_prefactor - lv;
        let total: f64 = phi.iter().sum();
        if total > 0.0 {
            common = common.min(margin / total);
        }
        for (r, p) in rates.iter_mut().zip(phi) {
            if *p > 0.0 {
                *r = r.min(margin / p);
            }
        }
    }
    let clamp = |r: f64| if r.is_finite() { r.max(0.0) } else { f64::MAX };
    let common_rate = clamp(common);
    let rates: Vec<f64> = rates.into_iter().map(clamp).collect();
    let residual = kept
        .iter()
        .map(|(lv, phi)| lv - (log_prefactor - common_rate * phi.iter().sum::<f64>()))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFitReport {
        pass: common_rate >= cfg.r_min,
        rates,
        common_rate,
        powers: powers.to_vec(),
        log_prefactor,
        residual,
        points_used: kept.len(),
    })
}

/// Fits `|V(P)| <= C exp(-r sum_j |P_j|^{powers_j})` over the whole phase-space lattice.
pub fn fit_gs_decay(v: &PhaseSpaceField, powers: &[f64], cfg: &DecayFitConfig) -> Result<DecayFitReport> {
    let grid = v.base.grid();
    if powers.len() != grid.rank() {
        return Err(Error::InvalidParameter(format!(
            "expected {} powers, got {}",
            grid.rank(),
            powers.len()
        )));
    }
    let rank = grid.rank();
    let mut idx = vec![0; rank];
    let coords: Vec<Vec<f64>> = (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let mut x = vec![0.0; rank];
            grid.coordinates_of(&idx, &mut x);
            x
        })
        .collect();
    let samples = v
        .base
        .values()
        .iter()
        .zip(&coords)
        .map(|(a, x)| (a.norm().ln(), x.as_slice()));
    fit_decay_samples(samples, powers, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AxisSpec, GridSpec};
    use crate::timefreq::{gaussian_window, stft};

    fn gaussian_stft() -> PhaseSpaceField {
        let g = GridSpec::new(vec![AxisSpec::new(12.0, 256).unwrap()]).unwrap();
        let phi = gaussian_window(&g, 1.0).unwrap();
        stft(&phi, &phi).unwrap()
    }

    #[test]
    fn gaussian_rate_is_one_quarter() {
        let v = gaussian_stft();
        let rep = fit_gs_decay(&v, &[2.0, 2.0], &DecayFitConfig::default()).unwrap();
        assert!(rep.pass);
        assert!((rep.common_rate - 0.25).abs() < 1e-2, "{rep:?}");
        assert!(rep.rates.iter().all(|r| (r - 0.25).abs() < 1e-2));
        assert!(rep.residual <= 1e-12);
        let lin = fit_gs_decay(&v, &[1.0, 1.0], &DecayFitConfig::default()).unwrap();
        assert!(lin.pass && lin.common_rate > 0.0);
    }

    #[test]
    fn ridge_fails_on_its_axis() {
        let xs: Vec<Vec<f64>> = (-20..20)
            .flat_map(|i| (-20..20).map(move |j| vec![i as f64 * 0.5, j as f64 * 0.5]))
            .collect();
        // flat in x, Gaussian in xi
        let samples = xs.iter().map(|x| (-(x[1] * x[1]) / 4.0, x.as_slice()));
        let rep = fit_decay_samples(samples, &[2.0, 2.0], &DecayFitConfig::default()).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.rates[0], 0.0);
        assert!(rep.rates[1] > 0.2);
    }

    #[test]
    fn degenerate_input() {
        let x = [0.0, 0.0];
        let samples = vec![(f64::NEG_INFINITY, &x[..])];
        assert!(matches!(
            fit_decay_samples(samples, &[1.0, 1.0], &DecayFitConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
