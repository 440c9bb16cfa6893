//! Qualitative continuity probes: ratio distributions over seeded batteries.

use serde::{Deserialize, Serialize};

use super::{apply_bilinear, QuantizationPair};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::symbols::GevreyClassSpec;
use crate::timefreq::{
    fit_decay_samples, fit_gs_decay, gaussian_window, modulation_norm_scaled, stft, DecayFitConfig, DecayFitReport, MixedExponents,
};
use crate::weights::{WeightGroup, WeightModel};

/// Norms whose logarithm falls below this are treated as zero.
pub const LOG_NORM_FLOOR: f64 = -600.0;

/// `1/omega_R(x, eta) = exp(R (|x|^{1/s1} + |eta|^{1/sigma3}))`, the weight of the second argument.
pub fn inverse_omega_r(spec: &GevreyClassSpec, rate: f64) -> Result<WeightModel> {
    let amb = spec.ambient.ok_or_else(|| {
        Error::InvalidParameter("boundedness probes need the ambient exponents s1 and sigma3".into())
    })?;
    let group = |axis: usize, s: f64| WeightGroup {
        axes: vec![axis],
        exp_rate: rate,
        inv_exp_power: 1.0 / s,
        poly_degree: 0.0,
    };
    Ok(WeightModel {
        groups: vec![group(0, amb.s1), group(1, amb.sigma3)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// `||Op(a)(f, g)||_{M^{p,q}(w)} / (||f||_{M^{p,q}(w0 w)} ||g||_{M^{inf,inf}(1/omega_R)})` per member.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub median_ratio: f64,
}

impl RatioReport {
    fn from_ratios(ratios: Vec<f64>) -> Self {
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        RatioReport {
            max_ratio: *sorted.last().unwrap_or(&0.0),
            min_ratio: *sorted.first().unwrap_or(&0.0),
            median_ratio: sorted.get(sorted.len() / 2).copied().unwrap_or(0.0),
            ratios,
        }
    }

    /// Relative growth of the maximum when only the first `prefix` members are kept.
    pub fn max_shift_from_prefix(&self, prefix: usize) -> f64 {
        let head = self.ratios[..prefix.min(self.ratios.len())]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        (self.max_ratio - head).abs() / head
    }
}

/// Parameters of one boundedness probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessSetup {
    pub spec: GevreyClassSpec,
    /// Weight on the phase space `(x, xi)` of the first argument, together with `w`.
    pub w0: WeightModel,
    /// Weight on the phase space of the output.
    pub w: WeightModel,
    pub pq: MixedExponents,
    pub rate: f64,
    #[serde(default = "default_window_width")]
    pub window_width: f64,
}

fn default_window_width() -> f64 {
    1.0
}

/// Ratio distribution of the bilinear operator over a battery of pairs.
pub fn boundedness_probe(
    a: &SampledField,
    pair: QuantizationPair,
    setup: &BoundednessSetup,
    battery: &[(SampledField, SampledField)],
) -> Result<RatioReport> {
    use rayon::prelude::*;
    if battery.is_empty() {
        return Err(Error::InvalidParameter("boundedness battery is empty".into()));
    }
    let grid = battery[0].0.grid().clone();
    let window = gaussian_window(&grid, setup.window_width)?;
    let wf = setup.w0.product(&setup.w);
    let wg = inverse_omega_r(&setup.spec, setup.rate)?;
    let inf = MixedExponents::new(f64::INFINITY, f64::INFINITY)?;
    let ratios = battery
        .par_iter()
        .map(|(f, g)| -> Result<f64> {
            let out = apply_bilinear(a, pair, f, g)?;
            let num = modulation_norm_scaled(&out, &window, &setup.w, setup.pq)?.ln();
            let nf = modulation_norm_scaled(f, &window, &wf, setup.pq)?.ln();
            let ng = modulation_norm_scaled(g, &window, &wg, inf)?.ln();
            if nf < LOG_NORM_FLOOR || ng < LOG_NORM_FLOOR {
                return Err(Error::Degenerate("input norm below the division floor".into()));
            }
            let r = num - nf - ng;
            if r > crate::weights::LOG_MAX {
                return Err(Error::Overflow(format!("ratio exp({r:.1}) exceeds the guard")));
            }
            Ok(r.exp())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from_ratios(ratios))
}

/// Gelfand-Shilov decay gate and fit settings for [`gs_continuity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsCheckConfig {
    pub window_width: f64,
    pub fit: DecayFitConfig,
    /// Smallest accepted input rate.
    pub gate_rate: f64,
    /// The rate over the whole lattice must keep this fraction of the rate
    /// over the inner box.
    pub gate_stability: f64,
    /// Inner box as a fraction of each half-width.
    pub inner_fraction: f64,
}

impl Default for GsCheckConfig {
    fn default() -> Self {
        GsCheckConfig {
            window_width: 1.0,
            fit: DecayFitConfig {
                prefactor_slack: 6.0,
                ..DecayFitConfig::default()
            },
            gate_rate: 0.1,
            gate_stability: 0.9,
            inner_fraction: 0.5,
        }
    }
}

/// Decay fits of one function over the whole phase-space lattice and over the inner box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedDecay {
    pub full: DecayFitReport,
    pub inner: DecayFitReport,
    pub stable: bool,
}

/// Rate of `|V f(x, xi)| <= C exp(-r(|x|^{1/s} + |xi|^{1/sigma}))` for one function.
pub fn gs_decay_of(f: &SampledField, s: f64, sigma: f64, cfg: &GsCheckConfig) -> Result<DecayFitReport> {
    let window = gaussian_window(f.grid(), cfg.window_width)?;
    fit_gs_decay(&stft(f, &window)?, &[1.0 / s, 1.0 / sigma], &cfg.fit)
}

/// [`gs_decay_of`] on the whole lattice and on the inner box. Decay of
/// Gelfand-Shilov type keeps its rate as the box grows; algebraic tails lose it.
pub fn gs_decay_nested(f: &SampledField, s: f64, sigma: f64, cfg: &GsCheckConfig) -> Result<NestedDecay> {
    let window = gaussian_window(f.grid(), cfg.window_width)?;
    let v = stft(f, &window)?;
    let powers = [1.0 / s, 1.0 / sigma];
    let full = fit_gs_decay(&v, &powers, &cfg.fit)?;
    let grid = v.base.grid();
    let limits: Vec<f64> = grid.axes.iter().map(|a| cfg.inner_fraction * a.half_width).collect();
    let mut idx = vec![0; grid.rank()];
    let mut samples = Vec::new();
    for (flat, val) in v.base.values().iter().enumerate() {
        grid.unravel(flat, &mut idx);
        let mut c = vec![0.0; grid.rank()];
        grid.coordinates_of(&idx, &mut c);
        if c.iter().zip(&limits).all(|(x, l)| x.abs() <= *l) {
            samples.push((val.norm().ln(), c));
        }
    }
    let inner = fit_decay_samples(samples.iter().map(|(l, c)| (*l, c.as_slice())), &powers, &cfg.fit)?;
    let stable = full.common_rate >= cfg.gate_stability * inner.common_rate;
    Ok(NestedDecay { full, inner, stable })
}

/// Fits Gelfand-Shilov decay of every output `Op(a)(f, g)`. Every input
/// must first pass [`gs_decay_nested`] with a stable rate of at least `gate_rate`.
pub fn gs_continuity_check(
    a: &SampledField,
    pair: QuantizationPair,
    s: f64,
    sigma: f64,
    battery: &[(SampledField, SampledField)],
    cfg: &GsCheckConfig,
) -> Result<Vec<DecayFitReport>> {
    if !(s > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid exponents s = {s}, sigma = {sigma}")));
    }
    for (k, (f, g)) in battery.iter().enumerate() {
        for (name, h) in [("f", f), ("g", g)] {
            let rep = gs_decay_nested(h, s, sigma, cfg)?;
            if !rep.stable || rep.full.common_rate < cfg.gate_rate {
                return Err(Error::InvalidParameter(format!(
                    "battery member {k} ({name}) fails the decay gate: rate {:.3} on the lattice, {:.3} on the inner box",
                    rep.full.common_rate, rep.inner.common_rate
                )));
            }
        }
    }
    battery
        .iter()
        .map(|(f, g)| {
            let out = apply_bilinear(a, pair, f, g)?;
            gs_decay_of(&out, s, sigma, cfg)
        })
        .collect()
}
