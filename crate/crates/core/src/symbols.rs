//! Gevrey-Hörmander symbol classes: derivative-table norms, STFT decay
//! characterizations and the partial symbol `a_g`.
//!
//! None of the verdicts here can be decided on a finite grid. Each is a
//! heuristic with explicit thresholds in [`ClassThresholds`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisRole, SampledField};
use crate::fourier::{forward_ft, spectral_derivative, MAX_DERIVATIVE_ORDER};
use crate::grid::{AxisSelection, GridSpec};
use crate::quantization::PlanPoint;
use crate::timefreq::{fit_decay_samples, DecayFitConfig, DecayFitReport, StftKernel};
use crate::weights::{evaluate_log, ln_factorial, WeightModel, LOG_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Roumieu,
    Beurling,
}

/// Exponents of the ambient Gelfand-Shilov space paired with a class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientExponents {
    pub s1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassThresholds {
    /// Derivative ladder passes when `h_fit <= h_max`.
    pub h_max: f64,
    /// STFT decay passes when the fitted rate reaches this.
    pub r_min: f64,
    /// Added to `log max|V|` in the decay fit.
    pub prefactor_slack: f64,
    pub floor_rel: f64,
    /// Rate `R` used for the `M^{inf,q}` verdict.
    pub modspace_rate: f64,
    /// `M^{inf,q}` verdict passes when the weighted norm is at most this
    /// multiple of the unweighted one.
    pub modspace_guard: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        ClassThresholds {
            h_max: 2.0,
            r_min: 0.1,
            prefactor_slack: 2f64.ln(),
            floor_rel: 1e-14,
            modspace_rate: 0.12,
            modspace_guard: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyClassSpec {
    pub sigma1: f64,
    pub s2: f64,
    pub s3: f64,
    pub flavor: Flavor,
    /// Weight over the axes `(x, xi, eta)`.
    #[serde(default)]
    pub weight: WeightModel,
    #[serde(default)]
    pub ambient: Option<AmbientExponents>,
    #[serde(default)]
    pub thresholds: ClassThresholds,
}

impl GevreyClassSpec {
    /// Roumieu class with all exponents 1/2 and trivial weight, inside the
    /// ambient space with the same exponents. Gaussians belong to it.
    pub fn gaussian_class_spec() -> Self {
        GevreyClassSpec {
            sigma1: 0.5,
            s2: 0.5,
            s3: 0.5,
            flavor: Flavor::Roumieu,
            weight: WeightModel::trivial(),
            ambient: Some(AmbientExponents {
                s1: 0.5,
                sigma2: 0.5,
                sigma3: 0.5,
            }),
            thresholds: ClassThresholds::default(),
        }
    }
}

/// Ordering conditions between a class and its ambient space; recorded, not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    /// `s2, s3 <= s1`
    pub s_ordering: bool,
    /// `sigma1 <= sigma2, sigma3`
    pub sigma_ordering: bool,
}

impl GevreyClassSpec {
    pub fn new(sigma1: f64, s2: f64, s3: f64, flavor: Flavor, weight: WeightModel) -> Result<Self> {
        let spec = GevreyClassSpec {
            sigma1,
            s2,
            s3,
            flavor,
            weight,
            ambient: None,
            thresholds: ClassThresholds::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma1", self.sigma1), ("s2", self.s2), ("s3", self.s3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(a) = self.ambient {
            for v in [a.s1, a.sigma2, a.sigma3] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!("ambient exponent {v} must be positive")));
                }
            }
        }
        if self.weight.arity() > 3 {
            return Err(Error::InvalidParameter("class weight reads more than 3 axes".into()));
        }
        self.weight.validate()
    }

    pub fn admissibility(&self) -> Option<Admissibility> {
        self.ambient.map(|a| Admissibility {
            s_ordering: self.s2 <= a.s1 && self.s3 <= a.s1,
            sigma_ordering: self.sigma1 <= a.sigma2 && self.sigma1 <= a.sigma3,
        })
    }

    /// Factorial exponents for `(d_x, d_xi, d_eta)`.
    pub fn factorial_exponents(&self) -> [f64; 3] {
        [self.sigma1, self.s2, self.s3]
    }

    /// Decay powers in the dual variables `(zeta, y, z)`.
    pub fn decay_powers(&self) -> [f64; 3] {
        [1.0 / self.sigma1, 1.0 / self.s2, 1.0 / self.s3]
    }

    /// `Phi(Z) = |zeta|^{1/sigma1} + |y|^{1/s2} + |z|^{1/s3}`.
    pub fn decay_exponent(&self, z: &[f64; 3]) -> f64 {
        let p = self.decay_powers();
        (0..3).map(|d| z[d].abs().powf(p[d])).sum()
    }

    /// `omega_R(X, Z) = omega(X) exp(-R Phi(Z))` on the 6-axis phase space.
    pub fn omega_r(&self, rate: f64) -> WeightModel {
        let p = self.decay_powers();
        let decay = WeightModel {
            groups: (0..3)
                .map(|d| crate::weights::WeightGroup {
                    axes: vec![3 + d],
                    exp_rate: -rate,
                    inv_exp_power: p[d],
                    poly_degree: 0.0,
                })
                .collect(),
        };
        self.weight.product(&decay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    /// `sup |d a| / (alpha!^sigma1 beta!^s2 gamma!^s3 omega)`, relative to the order-0 value.
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNormReport {
    pub h_fit: f64,
    pub max_order: usize,
    /// `sup |a| / omega`
    pub prefactor: f64,
    /// `h_k`, the largest `sup_ratio^{1/k}` among entries of total order `k`, for `k = 1..=K`.
    pub h_by_order: Vec<f64>,
    pub table: Vec<OrderEntry>,
    pub flavor: Flavor,
    pub h_max: f64,
    pub pass: bool,
}

fn check_symbol(a: &SampledField) -> Result<()> {
    if a.rank() != 3 {
        return Err(Error::GridMismatch(format!("symbols need 3 axes, got {}", a.rank())));
    }
    if a.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidField("symbol has non-finite samples".into()));
    }
    Ok(())
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh {
            order: k,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    Ok(())
}

/// Derivative-ladder estimate of the class norm using spectral derivatives.
pub fn gamma_norm_estimate(a: &SampledField, spec: &GevreyClassSpec, max_order: usize) -> Result<ClassNormReport> {
    check_symbol(a)?;
    check_order(max_order)?;
    spec.validate()?;
    let logw = evaluate_log(&spec.weight, a.grid())?;
    let mut sups = Vec::new();
    for alpha in 0..=max_order {
        let da = if alpha == 0 { a.clone() } else { spectral_derivative(a, 0, alpha)? };
        for beta in 0..=max_order - alpha {
            let dab = if beta == 0 { da.clone() } else { spectral_derivative(&da, 1, beta)? };
            let gammas: Vec<usize> = (0..=max_order - alpha - beta).collect();
            let part = gammas
                .par_iter()
                .map(|&gamma| -> Result<(usize, usize, usize, f64)> {
                    let d = if gamma == 0 { dab.clone() } else { spectral_derivative(&dab, 2, gamma)? };
                    Ok((alpha, beta, gamma, log_sup_ratio(&d, &logw, alpha + beta + gamma)?))
                })
                .collect::<Result<Vec<_>>>()?;
            sups.extend(part);
        }
    }
    ladder_report(sups, spec, max_order)
}

/// As [`gamma_norm_estimate`] with derivatives supplied by `derivative([alpha, beta, gamma])`.
pub fn gamma_norm_from_derivatives(
    grid: &GridSpec,
    derivative: impl Fn([usize; 3]) -> Result<SampledField>,
    spec: &GevreyClassSpec,
    max_order: usize,
) -> Result<ClassNormReport> {
    check_order(max_order)?;
    spec.validate()?;
    let logw = evaluate_log(&spec.weight, grid)?;
    let mut sups = Vec::new();
    for alpha in 0..=max_order {
        for beta in 0..=max_order - alpha {
            for gamma in 0..=max_order - alpha - beta {
                let d = derivative([alpha, beta, gamma])?;
                d.grid().ensure_same(grid, "derivative provider")?;
                sups.push((alpha, beta, gamma, log_sup_ratio(&d, &logw, alpha + beta + gamma)?));
            }
        }
    }
    ladder_report(sups, spec, max_order)
}

fn log_sup_ratio(d: &SampledField, logw: &[f64], order: usize) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for (v, lw) in d.values().iter().zip(logw) {
        let n = v.norm();
        if !n.is_finite() {
            return Err(Error::Overflow(format!("derivative of order {order} is not representable")));
        }
        best = best.max(n.ln() - lw);
    }
    Ok(best)
}

fn ladder_report(
    sups: Vec<(usize, usize, usize, f64)>,
    spec: &GevreyClassSpec,
    max_order: usize,
) -> Result<ClassNormReport> {
    let fe = spec.factorial_exponents();
    let log_c0 = sups
        .iter()
        .find(|s| s.0 + s.1 + s.2 == 0)
        .map(|s| s.3)
        .unwrap_or(f64::NEG_INFINITY);
    if !log_c0.is_finite() {
        return Err(Error::Degenerate("symbol vanishes on the grid".into()));
    }
    let mut h_by_order = vec![0.0f64; max_order];
    let mut table = Vec::with_capacity(sups.len());
    for (alpha, beta, gamma, ls) in sups {
        let order = alpha + beta + gamma;
        let lf = fe[0] * ln_factorial(alpha) + fe[1] * ln_factorial(beta) + fe[2] * ln_factorial(gamma);
        let rel = ls - lf - log_c0;
        if order > 0 {
            let h = (rel / order as f64).exp();
            h_by_order[order - 1] = h_by_order[order - 1].max(h);
        }
        table.push(OrderEntry {
            alpha,
            beta,
            gamma,
            sup_ratio: rel.exp(),
        });
    }
    let h_fit = h_by_order.iter().cloned().fold(0.0, f64::max);
    let th = &spec.thresholds;
    let bounded = h_fit <= th.h_max;
    let pass = match spec.flavor {
        Flavor::Roumieu => bounded,
        Flavor::Beurling => bounded && h_by_order.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-9)),
    };
    Ok(ClassNormReport {
        h_fit,
        max_order,
        prefactor: log_c0.exp(),
        h_by_order,
        table,
        flavor: spec.flavor,
        h_max: th.h_max,
        pass,
    })
}

/// Where the 6-axis STFT of a symbol is evaluated: every translate `X` at
/// each ray frequency, plus scattered `(X, Z)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StftSamplingPlan {
    pub rays: Vec<[usize; 3]>,
    pub batch: Vec<PlanPoint>,
}

pub const DEFAULT_RAY_RADII: [f64; 10] = [0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0];
pub const DEFAULT_BATCH: usize = 10_000;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl StftSamplingPlan {
    /// Rays along the 13 axis and diagonal directions (both orientations) at
    /// `radii` plus the lattice edge, and a Halton batch of `batch` pairs
    /// starting at sequence index `offset`.
    pub fn standard(grid: &GridSpec, radii: &[f64], batch: usize, offset: u64) -> Result<Self> {
        if grid.rank() != 3 {
            return Err(Error::GridMismatch("sampling plans are for 3-axis symbols".into()));
        }
        let dual = grid.dual_on(&AxisSelection::all(3));
        let mut dirs = Vec::new();
        for a in -1i32..=1 {
            for b in -1i32..=1 {
                for c in -1i32..=1 {
                    if (a, b, c) != (0, 0, 0) {
                        dirs.push([a as f64, b as f64, c as f64]);
                    }
                }
            }
        }
        let mut set = std::collections::BTreeSet::new();
        set.insert([dual.axes[0].center(), dual.axes[1].center(), dual.axes[2].center()]);
        for d in &dirs {
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let edge = (0..3)
                .filter(|&k| d[k] != 0.0)
                .map(|k| (dual.axes[k].half_width - dual.axes[k].spacing()) * norm)
                .fold(f64::INFINITY, f64::min);
            for &r in radii.iter().filter(|&&r| r < edge).chain(std::iter::once(&edge)) {
                let idx = [0, 1, 2].map(|k| dual.axes[k].nearest_index(r * d[k] / norm));
                set.insert(idx);
            }
        }
        let shape = grid.shape();
        let primes = [2u64, 3, 5, 7, 11, 13];
        let pick = |u: f64, n: usize| ((u * n as f64) as usize).min(n - 1);
        let batch = (0..batch as u64)
            .map(|i| {
                let u: Vec<f64> = primes.iter().map(|&p| radical_inverse(i + 1 + offset, p)).collect();
                PlanPoint {
                    x: [pick(u[0], shape[0]), pick(u[1], shape[1]), pick(u[2], shape[2])],
                    z: [pick(u[3], shape[0]), pick(u[4], shape[1]), pick(u[5], shape[2])],
                }
            })
            .collect();
        Ok(StftSamplingPlan {
            rays: set.into_iter().collect(),
            batch,
        })
    }

    pub fn default_for(grid: &GridSpec) -> Result<Self> {
        Self::standard(grid, &DEFAULT_RAY_RADII, DEFAULT_BATCH, 0)
    }
}

/// Per sampled frequency `Z`: the largest `log(|V_phi a(X, Z)| / omega(X))` over sampled `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StftSamples {
    pub z_index: Vec<[usize; 3]>,
    pub z: Vec<[f64; 3]>,
    pub log_sup: Vec<f64>,
    /// Cell volume of the frequency lattice.
    pub z_cell: f64,
}

fn separable_parts(w: &SampledField) -> Option<[Vec<Complex64>; 3]> {
    let g = w.grid();
    let c = [g.axes[0].center(), g.axes[1].center(), g.axes[2].center()];
    let w0 = w.get(&c);
    if w0.norm() == 0.0 {
        return None;
    }
    let parts = [0usize, 1, 2].map(|d| {
        (0..g.axes[d].points)
            .map(|i| {
                let mut idx = c;
                idx[d] = i;
                w.get(&idx)
            })
            .collect::<Vec<_>>()
    });
    let scale = w0 * w0;
    let tol = 1e-14 * w.max_abs();
    let mut idx = [0usize; 3];
    for (flat, v) in w.values().iter().enumerate() {
        g.unravel(flat, &mut idx);
        if (v - parts[0][idx[0]] * parts[1][idx[1]] * parts[2][idx[2]] / scale).norm() > tol {
            return None;
        }
    }
    let mut parts = parts;
    for p in parts[0].iter_mut() {
        *p /= scale;
    }
    Some(parts)
}

/// `V_phi a(X, Z)` at lattice indices with cyclic window translation.
fn stft_point(a: &SampledField, window: &SampledField, parts: Option<&[Vec<Complex64>; 3]>, p: &PlanPoint) -> Complex64 {
    let g = a.grid();
    let n = g.shape();
    let dual = g.dual_on(&AxisSelection::all(3));
    let zc = [0, 1, 2].map(|d| dual.axes[d].coordinate(p.z[d]));
    let phase = |d: usize, j: usize| Complex64::from_polar(1.0, -g.axes[d].coordinate(j) * zc[d]);
    let src = |d: usize, j: usize| (j + n[d] + n[d] / 2 - p.x[d]) % n[d];
    let av = a.values();
    let mut acc = Complex64::new(0.0, 0.0);
    match parts {
        Some(parts) => {
            let c: Vec<Vec<Complex64>> = (0..3)
                .map(|d| (0..n[d]).map(|j| parts[d][src(d, j)].conj() * phase(d, j)).collect())
                .collect();
            for i in 0..n[0] {
                let mut s1 = Complex64::new(0.0, 0.0);
                for j in 0..n[1] {
                    let base = (i * n[1] + j) * n[2];
                    let s2: Complex64 = av[base..base + n[2]].iter().zip(&c[2]).map(|(a, b)| a * b).sum();
                    s1 += s2 * c[1][j];
                }
                acc += s1 * c[0][i];
            }
        }
        None => {
            let wv = window.values();
            for i in 0..n[0] {
                for j in 0..n[1] {
                    for k in 0..n[2] {
                        let wi = g.ravel(&[src(0, i), src(1, j), src(2, k)]);
                        acc += av[(i * n[1] + j) * n[2] + k] * wv[wi].conj() * phase(0, i) * phase(1, j) * phase(2, k);
                    }
                }
            }
        }
    }
    acc * g.cell_volume() / (2.0 * PI).powf(1.5)
}

/// Evaluates the symbol's STFT on the plan, reduced to a sup over `X` per `Z`.
pub fn sample_stft(
    a: &SampledField,
    window: &SampledField,
    weight: &WeightModel,
    plan: &StftSamplingPlan,
) -> Result<StftSamples> {
    check_symbol(a)?;
    let kernel = StftKernel::new(a, window)?;
    let grid = a.grid();
    let logw = evaluate_log(weight, grid)?;
    let dual = grid.dual_on(&AxisSelection::all(3));
    let ray_sups: Vec<f64> = plan
        .rays
        .par_iter()
        .map(|q| {
            kernel
                .column(q)
                .iter()
                .zip(&logw)
                .map(|(v, lw)| v.norm().ln() - lw)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut best: BTreeMap<[usize; 3], f64> = BTreeMap::new();
    for (q, s) in plan.rays.iter().zip(ray_sups) {
        best.insert(*q, s);
    }
    let parts = separable_parts(window);
    let batch: Vec<f64> = plan
        .batch
        .par_iter()
        .map(|p| {
            let v = stft_point(a, window, parts.as_ref(), p);
            v.norm().ln() - logw[grid.ravel(&p.x)]
        })
        .collect();
    for (p, s) in plan.batch.iter().zip(batch) {
        let e = best.entry(p.z).or_insert(f64::NEG_INFINITY);
        *e = e.max(s);
    }
    let mut out = StftSamples {
        z_index: Vec::with_capacity(best.len()),
        z: Vec::with_capacity(best.len()),
        log_sup: Vec::with_capacity(best.len()),
        z_cell: dual.cell_volume(),
    };
    for (q, s) in best {
        out.z.push([0, 1, 2].map(|d| dual.axes[d].coordinate(q[d])));
        out.z_index.push(q);
        out.log_sup.push(s);
    }
    Ok(out)
}

/// Fits `sup_X |V(X, Z)| / omega(X) <= C exp(-R Phi(Z))` over sampled `Z`.
/// Roumieu: pass when `R >= r_min`. Beurling: the rate refitted on the
/// points above floors `10^{-2}, 10^{-4}, ...` must reach each ladder entry.
pub fn fit_class_decay(samples: &StftSamples, spec: &GevreyClassSpec, r_ladder: &[f64]) -> Result<DecayFitReport> {
    let th = &spec.thresholds;
    let powers = spec.decay_powers();
    let cfg = DecayFitConfig {
        floor_rel: th.floor_rel,
        r_min: th.r_min,
        prefactor_slack: th.prefactor_slack,
        min_coordinate: 0.0,
    };
    let pts = || samples.log_sup.iter().zip(&samples.z).map(|(l, z)| (*l, &z[..]));
    let mut rep = fit_decay_samples(pts(), &powers, &cfg)?;
    if spec.flavor == Flavor::Beurling {
        for (k, &target) in r_ladder.iter().enumerate() {
            let floor = 10f64.powi(-2 * (k as i32 + 1)).max(th.floor_rel);
            let sub = fit_decay_samples(pts(), &powers, &DecayFitConfig { floor_rel: floor, ..cfg })?;
            if sub.common_rate < target {
                rep.pass = false;
            }
        }
    }
    Ok(rep)
}

/// Decay-based class check with the default sampling plan.
pub fn stft_class_check(
    a: &SampledField,
    window: &SampledField,
    spec: &GevreyClassSpec,
    r_ladder: &[f64],
) -> Result<DecayFitReport> {
    let plan = StftSamplingPlan::default_for(a.grid())?;
    let samples = sample_stft(a, window, &spec.weight, &plan)?;
    fit_class_decay(&samples, spec, r_ladder)
}

/// `sup_Z |V| / omega_R` over the samples, i.e. the `q = inf` value of
/// [`modspace_norm_from_samples`], in log form.
pub fn stft_sup_form(samples: &StftSamples, spec: &GevreyClassSpec, rate: f64) -> f64 {
    samples
        .log_sup
        .iter()
        .zip(&samples.z)
        .map(|(l, z)| l + rate * spec.decay_exponent(z))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `L^{inf,q}` norm of `omega_R^{-1} V_phi a` on the sampled frequencies.
pub fn modspace_norm_from_samples(
    samples: &StftSamples,
    spec: &GevreyClassSpec,
    q: crate::timefreq::Exponent,
    rate: f64,
) -> Result<f64> {
    let logs: Vec<f64> = samples
        .log_sup
        .iter()
        .zip(&samples.z)
        .map(|(l, z)| l + rate * spec.decay_exponent(z))
        .collect();
    let scale = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return Ok(0.0);
    }
    let log_value = match q {
        crate::timefreq::Exponent::Infinity => scale,
        crate::timefreq::Exponent::Finite(q) => {
            let s: f64 = logs.iter().map(|l| ((l - scale) * q).exp()).sum();
            scale + (s * samples.z_cell).ln() / q
        }
    };
    if log_value > LOG_MAX {
        return Err(Error::Overflow(format!(
            "weighted norm exp({log_value:.1}) exceeds the representable range"
        )));
    }
    Ok(log_value.exp())
}

pub fn modspace_class_check(
    a: &SampledField,
    window: &SampledField,
    spec: &GevreyClassSpec,
    q: crate::timefreq::Exponent,
    rate: f64,
) -> Result<f64> {
    let plan = StftSamplingPlan::default_for(a.grid())?;
    let samples = sample_stft(a, window, &spec.weight, &plan)?;
    modspace_norm_from_samples(&samples, spec, q, rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModspaceVerdict {
    pub value: f64,
    /// The same norm with `R = 0`.
    pub baseline: f64,
    pub ratio: f64,
    pub finite: bool,
}

/// Desk-scale finiteness: the weighted norm stays within
/// `modspace_guard` times the unweighted one.
pub fn modspace_verdict(
    samples: &StftSamples,
    spec: &GevreyClassSpec,
    q: crate::timefreq::Exponent,
) -> Result<ModspaceVerdict> {
    let th = &spec.thresholds;
    let baseline = modspace_norm_from_samples(samples, spec, q, 0.0)?;
    let value = match modspace_norm_from_samples(samples, spec, q, th.modspace_rate) {
        Ok(v) => v,
        Err(Error::Overflow(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let ratio = value / baseline;
    Ok(ModspaceVerdict {
        value,
        baseline,
        ratio,
        finite: ratio.is_finite() && ratio <= th.modspace_guard,
    })
}

/// `a_g(x, xi) = (2 pi)^{-1/2} sum_eta e^{i x eta} a(x, xi, eta) g^(eta) d eta`.
pub fn partial_symbol(a: &SampledField, g: &SampledField) -> Result<SampledField> {
    check_symbol(a)?;
    let ax = a.grid().axes.clone();
    if g.rank() != 1 || !g.grid().axes[0].dual().same_as(&ax[2]) || !g.grid().axes[0].same_as(&ax[0]) {
        return Err(Error::GridMismatch(
            "g must live on the symbol's x axis so that its dual matches eta".into(),
        ));
    }
    let gh = forward_ft(g, &AxisSelection::all(1))?;
    let n = [ax[0].points, ax[1].points, ax[2].points];
    let c = ax[2].spacing() / (2.0 * PI).sqrt();
    let mut out = Vec::with_capacity(n[0] * n[1]);
    for i in 0..n[0] {
        let x = ax[0].coordinate(i);
        let k: Vec<Complex64> = (0..n[2])
            .map(|m| Complex64::from_polar(1.0, x * ax[2].coordinate(m)) * gh.values()[m])
            .collect();
        for j in 0..n[1] {
            let base = (i * n[1] + j) * n[2];
            let s: Complex64 = a.values()[base..base + n[2]].iter().zip(&k).map(|(a, b)| a * b).sum();
            out.push(s * c);
        }
    }
    SampledField::new(
        GridSpec::new(vec![ax[0], ax[1]])?,
        out,
        vec![AxisRole::Space, AxisRole::Frequency],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{Profile, SymbolSpec, SymbolTerm};
    use crate::grid::AxisSpec;
    use crate::timefreq::gaussian_window;

    fn spec() -> GevreyClassSpec {
        GevreyClassSpec::new(0.5, 0.5, 0.5, Flavor::Roumieu, WeightModel::trivial()).unwrap()
    }

    fn grid(n: usize) -> GridSpec {
        let l = (n as f64 * PI / 2.0).sqrt();
        GridSpec::symbol_grid(AxisSpec::new(l, n).unwrap()).unwrap()
    }

    fn gauss3(g: &GridSpec) -> SampledField {
        SampledField::symbol_from_fn(g.clone(), |x, xi, eta| Complex64::new((-(x * x + xi * xi + eta * eta) / 2.0).exp(), 0.0))
            .unwrap()
    }

    #[test]
    fn constant_symbol_ladder() {
        let g = grid(16);
        let a = SampledField::symbol_from_fn(g, |_, _, _| Complex64::new(1.0, 0.0)).unwrap();
        let rep = gamma_norm_estimate(&a, &spec(), 4).unwrap();
        assert!(rep.pass);
        assert!((rep.prefactor - 1.0).abs() < 1e-15);
        assert!(rep.table.iter().filter(|e| e.alpha + e.beta + e.gamma > 0).all(|e| e.sup_ratio < 1e-12));
    }

    #[test]
    fn gaussian_ladder_matches_hermite_values() {
        let g = grid(32);
        let rep = gamma_norm_estimate(&gauss3(&g), &spec(), 4).unwrap();
        assert!(rep.pass, "{rep:?}");
        // sup |He_k(x) e^{-x^2/2}| / sqrt(k!) for k = 1..4, on the grid
        let x = g.axes[0];
        for k in 1..=4usize {
            let sup = x
                .coordinates()
                .iter()
                .map(|&t| {
                    let he = [1.0, t, t * t - 1.0, t * t * t - 3.0 * t, t.powi(4) - 6.0 * t * t + 3.0][k];
                    (he * (-t * t / 2.0).exp()).abs()
                })
                .fold(0.0, f64::max)
                / ln_factorial(k).mul_add(0.5, 0.0).exp();
            let e = rep.table.iter().find(|e| e.alpha == k && e.beta == 0 && e.gamma == 0).unwrap();
            assert!((e.sup_ratio - sup).abs() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn kink_fails_ladder() {
        let g = grid(48);
        let s = SymbolSpec::single(
            "abs",
            SymbolTerm::new(
                Profile::product(Profile::Abs { center: 0.0 }, Profile::Gaussian { center: 0.0, width: 1.0 }),
                Profile::Gaussian { center: 0.0, width: 1.0 },
                Profile::Gaussian { center: 0.0, width: 1.0 },
            ),
        );
        let a = s.sample_on(&g).unwrap();
        let rep = gamma_norm_estimate(&a, &spec(), 6).unwrap();
        assert!(!rep.pass, "{:?}", rep.h_by_order);
    }

    #[test]
    fn unimodular_constant_leaves_report_unchanged() {
        let g = grid(16);
        let a = gauss3(&g);
        let b = a.scaled(Complex64::from_polar(1.0, 0.7));
        let ra = gamma_norm_estimate(&a, &spec(), 3).unwrap();
        let rb = gamma_norm_estimate(&b, &spec(), 3).unwrap();
        assert!((ra.h_fit - rb.h_fit).abs() < 1e-12 * ra.h_fit);
    }

    #[test]
    fn gaussian_stft_decay_rate() {
        let g = grid(32);
        let a = gauss3(&g);
        let w = gaussian_window(&g, 1.0).unwrap();
        let plan = StftSamplingPlan::standard(&g, &DEFAULT_RAY_RADII, 200, 0).unwrap();
        let samples = sample_stft(&a, &w, &WeightModel::trivial(), &plan).unwrap();
        let mut sp = spec();
        sp.thresholds.prefactor_slack = 0.0;
        let rep = fit_class_decay(&samples, &sp, &[]).unwrap();
        assert!(rep.pass);
        assert!((rep.common_rate - 0.25).abs() < 1e-2, "{}", rep.common_rate);
        // q = inf collapses to the sup form
        let v = modspace_norm_from_samples(&samples, &sp, crate::timefreq::Exponent::Infinity, 0.1).unwrap();
        assert!((v.ln() - stft_sup_form(&samples, &sp, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn batch_points_agree_with_columns() {
        let g = grid(16);
        let a = gauss3(&g).map(|v| v * Complex64::new(1.0, 0.3));
        let w = gaussian_window(&g, 1.3).unwrap();
        let kernel = StftKernel::new(&a, &w).unwrap();
        let parts = separable_parts(&w);
        assert!(parts.is_some());
        let p = PlanPoint { x: [3, 9, 12], z: [5, 8, 10] };
        let col = kernel.column(&p.z);
        let want = col[g.ravel(&p.x)];
        assert!((stft_point(&a, &w, parts.as_ref(), &p) - want).norm() < 1e-13);
        assert!((stft_point(&a, &w, None, &p) - want).norm() < 1e-13);
    }

    #[test]
    fn partial_symbol_of_constant_is_g() {
        let x = AxisSpec::new(10.0, 64).unwrap();
        let g1 = GridSpec::new(vec![x]).unwrap();
        let g = crate::closed_form::FunctionSpec::gaussian(0.5, 1.0, 1.0).sample(&g1).unwrap();
        let a = SymbolSpec::constant(1.0).sample(x).unwrap();
        let ag = partial_symbol(&a, &g).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                assert!((ag.get(&[i, j]) - g.values()[i]).norm() < 1e-10);
            }
        }
    }
}
