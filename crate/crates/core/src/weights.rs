//! Parametric weights `w(X) = prod_g (1 + |X_g|^2)^{t_g/2} exp(c_g |X_g|^{1/s_g})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisRole, SampledField};
use crate::grid::GridSpec;

/// Largest natural logarithm accepted when a weight value must be materialized.
pub const LOG_MAX: f64 = 700.0;

pub const DEFAULT_MODERATION_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed_0001;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGroup {
    pub axes: Vec<usize>,
    #[serde(default)]
    pub exp_rate: f64,
    /// The exponent `1/s` applied to `|X_g|` inside the exponential.
    #[serde(default = "one")]
    pub inv_exp_power: f64,
    #[serde(default)]
    pub poly_degree: f64,
}

impl WeightGroup {
    fn radius(&self, x: &[f64]) -> f64 {
        self.axes.iter().map(|&k| x[k] * x[k]).sum::<f64>().sqrt()
    }

    fn log_value(&self, x: &[f64]) -> f64 {
        let r = self.radius(x);
        let mut v = 0.0;
        if self.poly_degree != 0.0 {
            v += 0.5 * self.poly_degree * (r * r).ln_1p();
        }
        if self.exp_rate != 0.0 {
            v += self.exp_rate * r.powf(self.inv_exp_power);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightModel {
    pub groups: Vec<WeightGroup>,
}

impl WeightModel {
    pub fn trivial() -> Self {
        WeightModel::default()
    }

    pub fn polynomial(axes: Vec<usize>, degree: f64) -> Self {
        WeightModel {
            groups: vec![WeightGroup {
                axes,
                exp_rate: 0.0,
                inv_exp_power: 1.0,
                poly_degree: degree,
            }],
        }
    }

    pub fn exponential(axes: Vec<usize>, rate: f64, inv_power: f64) -> Self {
        WeightModel {
            groups: vec![WeightGroup {
                axes,
                exp_rate: rate,
                inv_exp_power: inv_power,
                poly_degree: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.groups {
            if g.axes.is_empty() {
                return Err(Error::InvalidParameter("weight group without axes".into()));
            }
            if !(g.inv_exp_power.is_finite() && g.inv_exp_power > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight exponent 1/s must be positive, got {}",
                    g.inv_exp_power
                )));
            }
            if !g.exp_rate.is_finite() || !g.poly_degree.is_finite() {
                return Err(Error::InvalidParameter("non-finite weight parameter".into()));
            }
        }
        Ok(())
    }

    /// Number of coordinates the model reads.
    pub fn arity(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| g.axes.iter())
            .map(|&k| k + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn is_polynomial(&self) -> bool {
        self.groups.iter().all(|g| g.exp_rate == 0.0)
    }

    pub fn log_value(&self, x: &[f64]) -> f64 {
        self.groups.iter().map(|g| g.log_value(x)).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.log_value(x).exp()
    }

    /// The product `self * other`, exact as a model.
    pub fn product(&self, other: &WeightModel) -> WeightModel {
        let mut groups = self.groups.clone();
        groups.extend(other.groups.iter().cloned());
        WeightModel { groups }
    }

    pub fn reciprocal(&self) -> WeightModel {
        WeightModel {
            groups: self
                .groups
                .iter()
                .map(|g| WeightGroup {
                    exp_rate: -g.exp_rate,
                    poly_degree: -g.poly_degree,
                    ..g.clone()
                })
                .collect(),
        }
    }

    /// Renumbers axes: old axis `k` becomes `map[k]`; axes mapped to `None`
    /// are dropped, which evaluates the model with those coordinates at zero.
    pub fn remap(&self, map: &[Option<usize>]) -> WeightModel {
        let groups = self
            .groups
            .iter()
            .filter_map(|g| {
                let axes: Vec<usize> = g
                    .axes
                    .iter()
                    .filter_map(|&k| map.get(k).copied().flatten())
                    .collect();
                (!axes.is_empty()).then(|| WeightGroup { axes, ..g.clone() })
            })
            .collect();
        WeightModel { groups }
    }

    /// Constants `(r, log_c)` with `|log w(X)| <= log_c + r sum_g |X_g|^{1/s_g}`.
    pub fn exponential_envelope(&self) -> (f64, f64) {
        let mut r: f64 = 0.0;
        let mut log_c = 0.0;
        for g in &self.groups {
            let rate = g.exp_rate.abs() + if g.poly_degree != 0.0 { 1.0 } else { 0.0 };
            r = r.max(rate);
            if g.poly_degree != 0.0 {
                // max over rho of |t|/2 ln(1 + rho^2) - rho^{1/s}
                let mut best: f64 = 0.0;
                let mut rho: f64 = 0.0;
                while rho < 1e4 {
                    let v = 0.5 * g.poly_degree.abs() * (rho * rho).ln_1p() - rho.powf(g.inv_exp_power);
                    best = best.max(v);
                    rho += 0.01 * (1.0 + rho);
                }
                log_c += best;
            }
        }
        (r, log_c)
    }

    pub fn power_sum(&self, x: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|g| g.radius(x).powf(g.inv_exp_power))
            .sum()
    }
}

/// Pointwise log-weight over a grid.
pub fn evaluate_log(w: &WeightModel, grid: &GridSpec) -> Result<Vec<f64>> {
    w.validate()?;
    if w.arity() > grid.rank() {
        return Err(Error::GridMismatch(format!(
            "weight reads {} axes but the grid has {}",
            w.arity(),
            grid.rank()
        )));
    }
    let rank = grid.rank();
    let mut idx = vec![0; rank];
    let mut x = vec![0.0; rank];
    Ok((0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            grid.coordinates_of(&idx, &mut x);
            w.log_value(&x)
        })
        .collect())
}

pub fn evaluate(w: &WeightModel, grid: &GridSpec) -> Result<SampledField> {
    let logs = evaluate_log(w, grid)?;
    if let Some(bad) = logs.iter().find(|l| l.abs() > LOG_MAX) {
        return Err(Error::Overflow(format!(
            "weight log-value {bad:.1} is outside the representable range"
        )));
    }
    let values = logs.iter().map(|l| Complex64::new(l.exp(), 0.0)).collect();
    SampledField::new(grid.clone(), values, vec![AxisRole::Space; grid.rank()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationReport {
    pub constant: f64,
    pub log_constant: f64,
    pub submultiplicative_rate: f64,
    pub pass: bool,
    pub samples_tested: usize,
}

/// Estimates the moderation constant of `w` with respect to `v` from seeded
/// random pairs drawn from the box covered by `grid`.
pub fn check_moderate(
    w: &WeightModel,
    v: &WeightModel,
    sample_count: usize,
    grid: &GridSpec,
) -> Result<ModerationReport> {
    check_moderate_seeded(w, v, sample_count, grid, DEFAULT_SEED)
}

pub fn check_moderate_seeded(
    w: &WeightModel,
    v: &WeightModel,
    sample_count: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<ModerationReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    w.validate()?;
    v.validate()?;
    let rank = grid.rank();
    if w.arity() > rank || v.arity() > rank {
        return Err(Error::GridMismatch("weight arity exceeds box rank".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; rank];
    let mut y = vec![0.0; rank];
    let mut xy = vec![0.0; rank];
    let mut log_c = f64::NEG_INFINITY;
    let mut rate: f64 = 0.0;
    for _ in 0..sample_count {
        for k in 0..rank {
            let l = grid.axes[k].half_width;
            x[k] = rng.gen_range(-l..l);
            y[k] = rng.gen_range(-l..l);
            xy[k] = x[k] + y[k];
        }
        let ratio = w.log_value(&xy) - w.log_value(&x) - v.log_value(&y);
        log_c = log_c.max(ratio);
        let ny = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        if ny > 0.0 {
            rate = rate.max(v.log_value(&y) / ny);
        }
    }
    let constant = log_c.exp();
    Ok(ModerationReport {
        constant,
        log_constant: log_c,
        submultiplicative_rate: rate,
        pass: constant.is_finite(),
        samples_tested: sample_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedModeration {
    pub half_widths: Vec<f64>,
    pub log_constants: Vec<f64>,
    /// Heuristic verdict: the constant stays within `growth_tolerance` of its
    /// value on the smallest box.
    pub moderate_heuristic: bool,
}

/// Heuristic non-moderation detector: repeats [`check_moderate`] on boxes
/// obtained by scaling `grid` and watches the constant grow.
pub fn check_moderate_nested(
    w: &WeightModel,
    v: &WeightModel,
    sample_count: usize,
    grid: &GridSpec,
    scales: &[f64],
    growth_tolerance: f64,
) -> Result<NestedModeration> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("no box scales given".into()));
    }
    let mut half_widths = Vec::new();
    let mut log_constants = Vec::new();
    for &s in scales {
        let axes = grid
            .axes
            .iter()
            .map(|a| crate::grid::AxisSpec::new(a.half_width * s, a.points))
            .collect::<Result<Vec<_>>>()?;
        let g = GridSpec::new(axes)?;
        let rep = check_moderate(w, v, sample_count, &g)?;
        half_widths.push(g.axes[0].half_width);
        log_constants.push(rep.log_constant);
    }
    let first = log_constants[0];
    let moderate_heuristic = log_constants
        .iter()
        .all(|&c| c.is_finite() && c - first <= growth_tolerance.ln());
    Ok(NestedModeration {
        half_widths,
        log_constants,
        moderate_heuristic,
    })
}

/// Width `w` of the smoothing kernel `exp(-y^2 / w^2)` along each axis.
pub const DEFAULT_KERNEL_WIDTH: f64 = 1.0;
const KERNEL_REACH: f64 = 6.0;
const MIN_MARGIN: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct SmoothedWeight {
    pub omega0: SampledField,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Two-sided constant: `1/C <= w0/w <= C` on the grid.
    pub constant: f64,
    pub kernel_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeRatio {
    pub alpha: Vec<usize>,
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub s: Vec<f64>,
    pub max_order: usize,
    /// `max_alpha (sup |d^alpha w0| / (alpha!^s w0))^{1/|alpha|}`.
    pub h_fit: f64,
    pub table: Vec<DerivativeRatio>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub constant: f64,
}

fn hermite(k: usize, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = 2.0 * u * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Kernel samples `d^order exp(-y^2/w^2)` at `y = m*dx`, `|m| <= reach`,
/// scaled so the order-0 kernel has unit discrete mass.
fn kernel_samples(width: f64, dx: f64, reach: usize, order: usize) -> Vec<f64> {
    let base: Vec<f64> = (0..=2 * reach)
        .map(|i| {
            let y = (i as f64 - reach as f64) * dx;
            (-(y / width).powi(2)).exp()
        })
        .collect();
    let mass: f64 = base.iter().sum::<f64>() * dx;
    (0..=2 * reach)
        .map(|i| {
            let u = (i as f64 - reach as f64) * dx / width;
            let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * hermite(order, u) * base[i] / width.powi(order as i32) / mass
        })
        .collect()
}

/// Valid-mode convolution along one axis of a row-major array.
fn convolve_axis(values: &[f64], shape: &[usize], axis: usize, kernel: &[f64], dx: f64) -> (Vec<f64>, Vec<usize>) {
    let reach = (kernel.len() - 1) / 2;
    let n_in = shape[axis];
    let n_out = n_in - 2 * reach;
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = n_out;
    let mut out = vec![0.0; outer * n_out * stride];
    for o in 0..outer {
        for i in 0..n_out {
            for s in 0..stride {
                let mut acc = 0.0;
                // w0(x_i) = sum_m w(x_i - y_m) phi(y_m) dx
                for (m, &k) in kernel.iter().enumerate() {
                    let p = i + 2 * reach - m;
                    acc += k * values[(o * n_in + p) * stride + s];
                }
                out[(o * n_out + i) * stride + s] = acc * dx;
            }
        }
    }
    (out, out_shape)
}

struct Padded {
    /// Weight on the padded grid divided by `exp(shift)`.
    values: Vec<f64>,
    shape: Vec<usize>,
    shift: f64,
    reach: Vec<usize>,
}

fn padded_weight(w: &WeightModel, grid: &GridSpec, width: f64) -> Result<Padded> {
    w.validate()?;
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel width must be positive, got {width}")));
    }
    if w.arity() > grid.rank() {
        return Err(Error::GridMismatch("weight arity exceeds grid rank".into()));
    }
    for a in &grid.axes {
        if MIN_MARGIN * width > a.half_width {
            return Err(Error::BoundaryContamination(format!(
                "kernel width {width} needs a half-width of at least {} but the grid has {}",
                MIN_MARGIN * width,
                a.half_width
            )));
        }
    }
    let rank = grid.rank();
    let reach: Vec<usize> = grid
        .axes
        .iter()
        .map(|a| (KERNEL_REACH * width / a.spacing()).ceil() as usize)
        .collect();
    let shape: Vec<usize> = grid.axes.iter().zip(&reach).map(|(a, &m)| a.points + 2 * m).collect();
    let total: usize = shape.iter().product();
    let mut logs = Vec::with_capacity(total);
    let mut idx = vec![0; rank];
    let mut x = vec![0.0; rank];
    for mut flat in 0..total {
        for k in (0..rank).rev() {
            idx[k] = flat % shape[k];
            flat /= shape[k];
        }
        for k in 0..rank {
            let a = &grid.axes[k];
            x[k] = -a.half_width + (idx[k] as f64 - reach[k] as f64) * a.spacing();
        }
        logs.push(w.log_value(&x));
    }
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values = logs.iter().map(|l| (l - shift).exp()).collect();
    Ok(Padded {
        values,
        shape,
        shift,
        reach,
    })
}

fn convolve_padded(p: &Padded, grid: &GridSpec, width: f64, orders: &[usize]) -> Vec<f64> {
    let mut values = p.values.clone();
    let mut shape = p.shape.clone();
    for axis in 0..grid.rank() {
        let dx = grid.axes[axis].spacing();
        let kernel = kernel_samples(width, dx, p.reach[axis], orders[axis]);
        let (v, s) = convolve_axis(&values, &shape, axis, &kernel, dx);
        values = v;
        shape = s;
    }
    values
}

fn check_s(s: &[f64], rank: usize) -> Result<()> {
    if s.len() != rank {
        return Err(Error::InvalidParameter(format!(
            "expected {rank} regularity exponents, got {}",
            s.len()
        )));
    }
    if let Some(bad) = s.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidParameter(format!("regularity exponent {bad} is outside (0, 1)")));
    }
    Ok(())
}

/// `w0 = w * phi` with the unit-mass Gaussian `phi(y) = c exp(-|y|^2)`.
pub fn smooth_weight(w: &WeightModel, s: &[f64], grid: &GridSpec) -> Result<SmoothedWeight> {
    smooth_weight_with_width(w, s, grid, DEFAULT_KERNEL_WIDTH)
}

pub fn smooth_weight_with_width(
    w: &WeightModel,
    s: &[f64],
    grid: &GridSpec,
    width: f64,
) -> Result<SmoothedWeight> {
    check_s(s, grid.rank())?;
    let p = padded_weight(w, grid, width)?;
    if p.shift > LOG_MAX {
        return Err(Error::Overflow(format!(
            "weight reaches exp({:.1}) on the padded grid",
            p.shift
        )));
    }
    let conv = convolve_padded(&p, grid, width, &vec![0; grid.rank()]);
    let logw = evaluate_log(w, grid)?;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    let mut values = Vec::with_capacity(conv.len());
    for (c, lw) in conv.iter().zip(&logw) {
        let r = (c.ln() + p.shift - lw).exp();
        ratio_min = ratio_min.min(r);
        ratio_max = ratio_max.max(r);
        values.push(Complex64::new(c * p.shift.exp(), 0.0));
    }
    let omega0 = SampledField::new(grid.clone(), values, vec![AxisRole::Space; grid.rank()])?;
    Ok(SmoothedWeight {
        omega0,
        ratio_min,
        ratio_max,
        constant: ratio_max.max(1.0 / ratio_min),
        kernel_width: width,
    })
}

/// `d^alpha w0` computed by convolving `w` with derivatives of the kernel.
pub fn smooth_weight_derivative(
    w: &WeightModel,
    grid: &GridSpec,
    width: f64,
    alpha: &[usize],
) -> Result<SampledField> {
    if alpha.len() != grid.rank() {
        return Err(Error::InvalidParameter("multi-index length must equal grid rank".into()));
    }
    let p = padded_weight(w, grid, width)?;
    if p.shift > LOG_MAX {
        return Err(Error::Overflow("weight too large to materialize".into()));
    }
    let scale = p.shift.exp();
    let conv = convolve_padded(&p, grid, width, alpha);
    let values = conv.iter().map(|c| Complex64::new(c * scale, 0.0)).collect();
    SampledField::new(grid.clone(), values, vec![AxisRole::Space; grid.rank()])
}

pub(crate) fn multi_indices(rank: usize, max_total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; rank];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, max_total, &mut cur, &mut out);
    out.sort_by_key(|a| (a.iter().sum::<usize>(), std::cmp::Reverse(a.clone())));
    out
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Fits `h` in `|d^alpha w0| <= h^{|alpha|} alpha!^s w0` for `1 <= |alpha| <= max_order`.
pub fn fit_smoothness(
    w: &WeightModel,
    s: &[f64],
    grid: &GridSpec,
    max_order: usize,
) -> Result<SmoothnessReport> {
    let sm = smooth_weight(w, s, grid)?;
    let width = sm.kernel_width;
    let p = padded_weight(w, grid, width)?;
    let base = convolve_padded(&p, grid, width, &vec![0; grid.rank()]);
    let mut table = Vec::new();
    let mut h_fit: f64 = 0.0;
    for alpha in multi_indices(grid.rank(), max_order) {
        let order: usize = alpha.iter().sum();
        if order == 0 {
            continue;
        }
        let d = convolve_padded(&p, grid, width, &alpha);
        let log_fact: f64 = alpha.iter().zip(s).map(|(&a, &sj)| sj * ln_factorial(a)).sum();
        let sup = d
            .iter()
            .zip(&base)
            .map(|(dv, b)| (dv.abs() / b).ln() - log_fact)
            .fold(f64::NEG_INFINITY, f64::max);
        let ratio = sup.exp();
        h_fit = h_fit.max((sup / order as f64).exp());
        table.push(DerivativeRatio {
            alpha,
            sup_ratio: ratio,
        });
    }
    Ok(SmoothnessReport {
        s: s.to_vec(),
        max_order,
        h_fit,
        table,
        ratio_min: sm.ratio_min,
        ratio_max: sm.ratio_max,
        constant: sm.constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisSpec;

    fn line(l: f64, n: usize) -> GridSpec {
        GridSpec::new(vec![AxisSpec::new(l, n).unwrap()]).unwrap()
    }

    #[test]
    fn trivial_and_direct_values() {
        let g = line(4.0, 8);
        let one = evaluate(&WeightModel::trivial(), &g).unwrap();
        assert!(one.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let e = WeightModel::exponential(vec![0], 1.0, 1.0);
        assert_eq!(e.value(&[0.0]), 1.0);
        assert!((e.value(&[1.0]) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn peetre_constant() {
        let w = WeightModel::polynomial(vec![0], 1.0);
        let rep = check_moderate(&w, &w, 10_000, &line(20.0, 8)).unwrap();
        assert!(rep.pass);
        assert!(rep.constant <= 2f64.sqrt() * (1.0 + 1e-12));
        let e = WeightModel::exponential(vec![0], 1.0, 1.0);
        let rep = check_moderate(&e, &e, 10_000, &line(20.0, 8)).unwrap();
        assert!(rep.constant <= 1.0 + 1e-12);
    }

    #[test]
    fn gaussian_growth_is_flagged() {
        let w = WeightModel::exponential(vec![0], 1.0, 2.0);
        let v = WeightModel::exponential(vec![0], 1.0, 1.0);
        let nested = check_moderate_nested(&w, &v, 2000, &line(2.0, 8), &[1.0, 2.0, 4.0], 10.0).unwrap();
        assert!(!nested.moderate_heuristic);
        assert!(nested.log_constants.windows(2).all(|p| p[1] > p[0]));
        let e = WeightModel::exponential(vec![0], 1.0, 1.0);
        let ok = check_moderate_nested(&e, &e, 2000, &line(2.0, 8), &[1.0, 2.0, 4.0], 10.0).unwrap();
        assert!(ok.moderate_heuristic);
    }

    #[test]
    fn constant_weight_smooths_to_itself() {
        let g = line(12.0, 256);
        let sm = smooth_weight(&WeightModel::trivial(), &[0.5], &g).unwrap();
        assert!((sm.ratio_max - 1.0).abs() <= 1e-10);
        assert!((sm.ratio_min - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn narrow_grid_is_contaminated() {
        let g = line(3.0, 64);
        assert!(matches!(
            smooth_weight(&WeightModel::trivial(), &[0.5], &g),
            Err(Error::BoundaryContamination(_))
        ));
    }

    #[test]
    fn kernel_derivative_matches_finite_difference() {
        let g = line(12.0, 512);
        let w = WeightModel::exponential(vec![0], 1.0, 1.0);
        let w0 = smooth_weight(&w, &[0.5], &g).unwrap().omega0;
        let d1 = smooth_weight_derivative(&w, &g, 1.0, &[1]).unwrap();
        let dx = g.axes[0].spacing();
        for j in 100..400 {
            let fd = (w0.values()[j + 1].re - w0.values()[j - 1].re) / (2.0 * dx);
            let rel = (fd - d1.values()[j].re).abs() / w0.values()[j].re;
            assert!(rel < 1e-3, "j = {j}, rel = {rel}");
        }
    }

    #[test]
    fn multi_index_enumeration() {
        let m = multi_indices(3, 2);
        assert_eq!(m.len(), 10);
        assert_eq!(m[0], vec![0, 0, 0]);
        assert_eq!(m[1], vec![1, 0, 0]);
    }
}
