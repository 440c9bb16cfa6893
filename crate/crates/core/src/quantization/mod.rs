//! The `(r, t)` family of bilinear quantizations and the Fourier multiplier
//! that moves a symbol between its members.
//!
//! Sign convention: with `a^` the full forward transform of `a(x, xi, eta)`
//! in the variables `(zeta, y, z)` dual to `(x, xi, eta)`,
//!
//! ```text
//! Op_{r1,t1}(a) = Op_{r2,t2}(b)   <=>   b^ = exp(+i ((r1-r2) y + (t1-t2) z) zeta) a^
//! ```
//!
//! so moving from `(0, 0)` to `(r, t)` applies `exp(-i (r y + t z) zeta)`,
//! the operator `exp(-i <r D_xi + t D_eta, D_x>)`. The sign is fixed by the
//! dense operator-matrix comparison in the tests ([`MULTIPLIER_SIGN`]).

mod probes;

pub use probes::{
    boundedness_probe, gs_continuity_check, gs_decay_nested, gs_decay_of, inverse_omega_r, BoundednessSetup, GsCheckConfig, NestedDecay, RatioReport,
    LOG_NORM_FLOOR,
};

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::SymbolSpec;
use crate::error::{Error, Result};
use crate::field::{AxisRole, SampledField};
use crate::fourier::{forward_ft, forward_ft_all, inverse_ft_all, raw_dft_all, translate_lane};
use crate::grid::{AxisSelection, AxisSpec, GridSpec};

/// Orientation of the conversion multiplier; `+1` is the verified convention.
pub const MULTIPLIER_SIGN: f64 = 1.0;

const PAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationPair {
    pub r: f64,
    pub t: f64,
}

impl QuantizationPair {
    pub const KOHN_NIRENBERG: QuantizationPair = QuantizationPair { r: 0.0, t: 0.0 };
    pub const WEYL: QuantizationPair = QuantizationPair { r: 0.5, t: 0.5 };

    pub fn new(r: f64, t: f64) -> Result<Self> {
        let p = QuantizationPair { r, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (-PAIR_TOL..=1.0 + PAIR_TOL).contains(&self.r)
            && (-PAIR_TOL..=1.0 + PAIR_TOL).contains(&self.t)
            && self.r + self.t <= 1.0 + PAIR_TOL;
        if ok {
            Ok(())
        } else {
            Err(Error::InadmissiblePair { r: self.r, t: self.t })
        }
    }
}

fn short(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl QuantizationPair {
    /// Compact identifier such as `r0.5-t0.5`, usable in metric keys.
    pub fn tag(&self) -> String {
        format!("r{}-t{}", short(self.r), short(self.t))
    }
}

impl fmt::Display for QuantizationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", short(self.r), short(self.t))
    }
}

/// Checks that `a` lives on the symbol grid `(x, dual x, dual x)` and returns the x axis.
fn symbol_axis(a: &SampledField) -> Result<AxisSpec> {
    if a.rank() != 3 {
        return Err(Error::GridMismatch(format!(
            "bilinear symbols need 3 axes, got {}",
            a.rank()
        )));
    }
    let ax = &a.grid().axes;
    let expect = GridSpec::symbol_grid(ax[0])?;
    a.grid().ensure_same(&expect, "symbol grid (x, xi, eta) must use the dual lattice")?;
    Ok(ax[0])
}

fn linear_symbol_axis(a: &SampledField) -> Result<AxisSpec> {
    if a.rank() != 2 {
        return Err(Error::GridMismatch(format!(
            "linear symbols need 2 axes, got {}",
            a.rank()
        )));
    }
    let ax = a.grid().axes[0];
    let expect = GridSpec::new(vec![ax, ax.dual()])?;
    a.grid().ensure_same(&expect, "linear symbol grid (x, xi)")?;
    Ok(ax)
}

fn function_axis(f: &SampledField, x: &AxisSpec, what: &str) -> Result<()> {
    if f.rank() != 1 || !f.grid().axes[0].same_as(x) {
        return Err(Error::GridMismatch(format!(
            "{what} must be sampled on the symbol's x axis"
        )));
    }
    Ok(())
}

/// Multiplies the full transform of `a` by `exp(i phase(coords) )` and transforms back.
fn full_multiplier(a: &SampledField, phase: impl Fn(&[f64]) -> f64) -> Result<SampledField> {
    let mut hat = forward_ft_all(a)?;
    let grid = hat.grid().clone();
    let rank = grid.rank();
    let mut idx = vec![0; rank];
    let mut c = vec![0.0; rank];
    for (flat, v) in hat.values_mut().iter_mut().enumerate() {
        grid.unravel(flat, &mut idx);
        grid.coordinates_of(&idx, &mut c);
        *v *= Complex64::from_polar(1.0, phase(&c));
    }
    let back = inverse_ft_all(&hat)?;
    back.with_roles(a.roles().to_vec())
}

/// Symbol `b` with `Op_to(b) = Op_from(a)`.
pub fn convert_symbol(a: &SampledField, from: QuantizationPair, to: QuantizationPair) -> Result<SampledField> {
    convert_symbol_with_sign(a, from, to, MULTIPLIER_SIGN)
}

/// [`convert_symbol`] with an explicit multiplier orientation (`+1` or `-1`).
pub fn convert_symbol_with_sign(
    a: &SampledField,
    from: QuantizationPair,
    to: QuantizationPair,
    sign: f64,
) -> Result<SampledField> {
    from.validate()?;
    to.validate()?;
    symbol_axis(a)?;
    if from == to {
        return Ok(a.clone());
    }
    let dr = from.r - to.r;
    let dt = from.t - to.t;
    // coordinates after the full transform: (zeta, y, z)
    full_multiplier(a, |c| sign * (dr * c[1] + dt * c[2]) * c[0])
}

/// Linear analogue: `Op_{t_to}(b) = Op_{t_from}(a)` for symbols `a(x, xi)`.
pub fn convert_linear_symbol(a: &SampledField, t_from: f64, t_to: f64) -> Result<SampledField> {
    for t in [t_from, t_to] {
        if !(-PAIR_TOL..=1.0 + PAIR_TOL).contains(&t) {
            return Err(Error::InadmissiblePair { r: t, t: 0.0 });
        }
    }
    linear_symbol_axis(a)?;
    if t_from == t_to {
        return Ok(a.clone());
    }
    let dt = t_from - t_to;
    full_multiplier(a, |c| MULTIPLIER_SIGN * dt * c[1] * c[0])
}

/// `e^{i x_i xi_k}` for all grid/lattice pairs, row-major in `(i, k)`.
fn exp_table(x: &AxisSpec) -> Vec<Complex64> {
    let n = x.points;
    let dual = x.dual();
    let mut t = Vec::with_capacity(n * n);
    for i in 0..n {
        let xi_ = x.coordinate(i);
        for k in 0..n {
            t.push(Complex64::from_polar(1.0, xi_ * dual.coordinate(k)));
        }
    }
    t
}

/// `e^{i d dx xi_k}` indexed by the cyclic difference `d`.
fn difference_table(x: &AxisSpec) -> Vec<Complex64> {
    let n = x.points;
    let dual = x.dual();
    let dx = x.spacing();
    let mut t = Vec::with_capacity(n * n);
    for d in 0..n {
        for k in 0..n {
            t.push(Complex64::from_polar(1.0, d as f64 * dx * dual.coordinate(k)));
        }
    }
    t
}

fn one_axis_field(x: AxisSpec, values: Vec<Complex64>) -> SampledField {
    SampledField::from_parts_unchecked(GridSpec { axes: vec![x] }, values, vec![AxisRole::Space])
}

/// `Op_t(a) f` via conversion to `t = 0` and the transform pathway
/// `(2 pi)^{-1/2} sum_k e^{i x xi_k} a0(x, xi_k) f^(xi_k) dxi`.
pub fn apply_linear(a: &SampledField, t: f64, f: &SampledField) -> Result<SampledField> {
    let x = linear_symbol_axis(a)?;
    function_axis(f, &x, "f")?;
    let a0 = convert_linear_symbol(a, t, 0.0)?;
    let fh = forward_ft(f, &AxisSelection::all(1))?;
    let n = x.points;
    let e = exp_table(&x);
    let c = x.dual().spacing() / (2.0 * PI).sqrt();
    let out = (0..n)
        .map(|i| {
            let row = &a0.values()[i * n..(i + 1) * n];
            let s: Complex64 = (0..n).map(|k| e[i * n + k] * row[k] * fh.values()[k]).sum();
            s * c
        })
        .collect();
    Ok(one_axis_field(x, out))
}

/// Direct double quadrature of `Op_t(a) f` for a symbol given in closed form.
pub fn apply_linear_direct_fn(
    a: impl Fn(f64, f64) -> Complex64,
    t: f64,
    f: &SampledField,
) -> Result<SampledField> {
    if f.rank() != 1 {
        return Err(Error::GridMismatch("f must have one axis".into()));
    }
    let x = f.grid().axes[0];
    let n = x.points;
    let dual = x.dual();
    let xi: Vec<f64> = dual.coordinates();
    let dtab = difference_table(&x);
    let c = x.spacing() * dual.spacing() / (2.0 * PI);
    let out = (0..n)
        .map(|i| {
            let xi_ = x.coordinate(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let fj = f.values()[j];
                if fj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let xp = xi_ - t * (xi_ - x.coordinate(j));
                let d = (i + n - j) % n;
                let s: Complex64 = (0..n).map(|k| a(xp, xi[k]) * dtab[d * n + k]).sum();
                acc += s * fj;
            }
            acc * c
        })
        .collect();
    Ok(one_axis_field(x, out))
}

/// Trigonometric interpolation of samples on a centered axis.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    half_width: f64,
    modes: Vec<(f64, Complex64)>,
}

impl TrigInterpolant {
    pub fn new(samples: &[Complex64], axis: &AxisSpec) -> Self {
        let n = axis.points;
        let mut c = samples.to_vec();
        raw_dft_all(&mut c, &[n], false);
        let kappa = PI / axis.half_width;
        let mut modes = Vec::with_capacity(n + 1);
        for (m, v) in c.iter().enumerate() {
            let v = v / n as f64;
            if m == n / 2 {
                // split the Nyquist mode symmetrically
                modes.push((kappa * m as f64, v * 0.5));
                modes.push((-kappa * m as f64, v * 0.5));
            } else {
                let mm = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                modes.push((kappa * mm, v));
            }
        }
        TrigInterpolant {
            half_width: axis.half_width,
            modes,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let u = x + self.half_width;
        self.modes
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k * u))
            .sum()
    }
}

/// Interpolates a sampled symbol along its first axis, one lane per
/// combination of the remaining indices.
fn x_interpolants(a: &SampledField) -> Vec<TrigInterpolant> {
    let grid = a.grid();
    let x = grid.axes[0];
    let n = x.points;
    let rest = grid.len() / n;
    (0..rest)
        .map(|r| {
            let lane: Vec<Complex64> = (0..n).map(|i| a.values()[i * rest + r]).collect();
            TrigInterpolant::new(&lane, &x)
        })
        .collect()
}

/// Direct double quadrature for a sampled symbol, interpolated in `x`.
pub fn apply_linear_direct(a: &SampledField, t: f64, f: &SampledField) -> Result<SampledField> {
    let x = linear_symbol_axis(a)?;
    function_axis(f, &x, "f")?;
    let interp = x_interpolants(a);
    let dual = x.dual();
    apply_linear_direct_fn(
        |xp, xi| {
            let k = dual.nearest_index(xi);
            interp[k].eval(xp)
        },
        t,
        f,
    )
}

/// Kohn-Nirenberg form `T_a(f, g)(x) = (2 pi)^{-1} sum e^{i x (xi+eta)} a f^ g^ dxi deta`.
pub fn apply_kn(a0: &SampledField, f: &SampledField, g: &SampledField) -> Result<SampledField> {
    let x = symbol_axis(a0)?;
    function_axis(f, &x, "f")?;
    function_axis(g, &x, "g")?;
    let n = x.points;
    let sel = AxisSelection::all(1);
    let fh = forward_ft(f, &sel)?;
    let gh = forward_ft(g, &sel)?;
    let e = exp_table(&x);
    let dxi = x.dual().spacing();
    let c = dxi * dxi / (2.0 * PI);
    let av = a0.values();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ei = &e[i * n..(i + 1) * n];
            let eg: Vec<Complex64> = (0..n).map(|m| ei[m] * gh.values()[m]).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let row = &av[(i * n + k) * n..(i * n + k + 1) * n];
                let s: Complex64 = row.iter().zip(&eg).map(|(a, b)| a * b).sum();
                acc += ei[k] * fh.values()[k] * s;
            }
            acc * c
        })
        .collect();
    Ok(one_axis_field(x, out))
}

/// `Op_{r,t}(a)(f, g)` through conversion to `(0, 0)` and the Kohn-Nirenberg form.
pub fn apply_bilinear(
    a: &SampledField,
    pair: QuantizationPair,
    f: &SampledField,
    g: &SampledField,
) -> Result<SampledField> {
    pair.validate()?;
    let a0 = convert_symbol(a, pair, QuantizationPair::KOHN_NIRENBERG)?;
    apply_kn(&a0, f, g)
}

fn check_pair_functions(f: &SampledField, g: &SampledField) -> Result<AxisSpec> {
    if f.rank() != 1 {
        return Err(Error::GridMismatch("f must have one axis".into()));
    }
    let x = f.grid().axes[0];
    function_axis(g, &x, "g")?;
    Ok(x)
}

/// Direct four-fold quadrature of the bilinear operator for a symbol in
/// closed form. Cost `O(N^5)`; intended for small oracle grids.
pub fn apply_bilinear_direct_fn(
    a: impl Fn(f64, f64, f64) -> Complex64 + Sync,
    pair: QuantizationPair,
    f: &SampledField,
    g: &SampledField,
) -> Result<SampledField> {
    pair.validate()?;
    let x = check_pair_functions(f, g)?;
    let n = x.points;
    let dual = x.dual();
    let xi: Vec<f64> = dual.coordinates();
    let dtab = difference_table(&x);
    let c = (x.spacing() * dual.spacing() / (2.0 * PI)).powi(2);
    let (r, t) = (pair.r, pair.t);
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi_ = x.coordinate(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let dj = (i + n - j) % n;
                let yj = x.coordinate(j);
                for l in 0..n {
                    let fg = f.values()[j] * g.values()[l];
                    if fg == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let dl = (i + n - l) % n;
                    let xp = xi_ + r * (yj - xi_) + t * (x.coordinate(l) - xi_);
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        let ek = dtab[dj * n + k];
                        let inner: Complex64 = (0..n).map(|m| a(xp, xi[k], xi[m]) * dtab[dl * n + m]).sum();
                        s += ek * inner;
                    }
                    acc += s * fg;
                }
            }
            acc * c
        })
        .collect();
    Ok(one_axis_field(x, out))
}

/// Direct four-fold quadrature for a sampled symbol, interpolated in `x`.
pub fn apply_bilinear_direct(
    a: &SampledField,
    pair: QuantizationPair,
    f: &SampledField,
    g: &SampledField,
) -> Result<SampledField> {
    let x = symbol_axis(a)?;
    function_axis(f, &x, "f")?;
    let interp = x_interpolants(a);
    let dual = x.dual();
    let n = x.points;
    apply_bilinear_direct_fn(
        |xp, xi, eta| {
            let k = dual.nearest_index(xi);
            let m = dual.nearest_index(eta);
            interp[k * n + m].eval(xp)
        },
        pair,
        f,
        g,
    )
}

/// Reference pathway for closed-form symbols: the bilinear operator by
/// direct quadrature in space with the symbol evaluated exactly at
/// `x + r(y - x) + t(z - x)`. Each term's frequency part is contracted once
/// by a 2-d transform, so the cost is `O(terms * N^3)`.
pub fn apply_bilinear_reference(
    symbol: &SymbolSpec,
    pair: QuantizationPair,
    f: &SampledField,
    g: &SampledField,
) -> Result<SampledField> {
    pair.validate()?;
    let x = check_pair_functions(f, g)?;
    let n = x.points;
    let dual = x.dual();
    // Q[d1][d2] = sum_{k,m} e^{i d1 dx xi_k + i d2 dx eta_m} q(xi_k, eta_m)
    let kernels: Vec<Vec<Complex64>> = symbol
        .terms
        .iter()
        .map(|term| {
            let mut q: Vec<Complex64> = (0..n * n)
                .map(|km| term.freq(dual.coordinate(km / n), dual.coordinate(km % n)))
                .collect();
            raw_dft_all(&mut q, &[n, n], true);
            for (dd, v) in q.iter_mut().enumerate() {
                if (dd / n + dd % n) % 2 == 1 {
                    *v = -*v;
                }
            }
            q
        })
        .collect();
    let c = (x.spacing() * dual.spacing() / (2.0 * PI)).powi(2);
    let (r, t) = (pair.r, pair.t);
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi_ = x.coordinate(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let fj = f.values()[j];
                if fj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let dj = (i + n - j) % n;
                let yj = x.coordinate(j);
                for l in 0..n {
                    let fg = fj * g.values()[l];
                    if fg == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let dl = (i + n - l) % n;
                    let xp = xi_ + r * (yj - xi_) + t * (x.coordinate(l) - xi_);
                    let s: Complex64 = symbol
                        .terms
                        .iter()
                        .zip(&kernels)
                        .map(|(term, q)| term.x.eval(xp) * q[dj * n + dl])
                        .sum();
                    acc += s * fg;
                }
            }
            acc * c
        })
        .collect();
    Ok(one_axis_field(x, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub pair_from: QuantizationPair,
    pub pair_to: QuantizationPair,
    pub rel_error: f64,
    pub test_battery_id: String,
    pub pass: bool,
}

/// How the left-hand side `Op_from(a)(f, g)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariancePathway {
    /// Conversion to `(0,0)` and the transform pathway, on the sampled symbol.
    Canonical,
    /// Space-domain quadrature with the closed-form symbol.
    Reference,
}

/// For each `(from, to)`: compares `Op_from(a)(f, g)` against
/// `Op_to(convert(a, from, to))(f, g)` over the battery; reports the worst
/// relative l2 discrepancy.
pub fn verify_invariance(
    symbol: &SymbolSpec,
    axis: AxisSpec,
    combos: &[(QuantizationPair, QuantizationPair)],
    battery: &[(SampledField, SampledField)],
    battery_id: &str,
    pathway: InvariancePathway,
    tolerance: f64,
) -> Result<Vec<EquivalenceReport>> {
    if battery.is_empty() {
        return Err(Error::InvalidParameter("invariance battery is empty".into()));
    }
    let a = symbol.sample(axis)?;
    let mut reports = Vec::with_capacity(combos.len());
    for &(from, to) in combos {
        let b = convert_symbol(&a, from, to)?;
        let errors: Vec<f64> = battery
            .par_iter()
            .map(|(f, g)| -> Result<f64> {
                let lhs = match pathway {
                    InvariancePathway::Canonical => apply_bilinear(&a, from, f, g)?,
                    InvariancePathway::Reference => apply_bilinear_reference(symbol, from, f, g)?,
                };
                let rhs = apply_bilinear(&b, to, f, g)?;
                rhs.rel_l2_error(&lhs)
            })
            .collect::<Result<Vec<_>>>()?;
        let rel_error = errors.iter().cloned().fold(0.0, f64::max);
        reports.push(EquivalenceReport {
            pair_from: from,
            pair_to: to,
            rel_error,
            test_battery_id: battery_id.to_owned(),
            pass: rel_error <= tolerance,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanPoint {
    /// Grid index of the translation `X`.
    pub x: [usize; 3],
    /// Lattice index of the frequency `Z`.
    pub z: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariancePlan {
    pub points: Vec<PlanPoint>,
}

impl CovariancePlan {
    /// Seeded points with every index within `fraction * N/2` of the center.
    pub fn seeded(grid: &GridSpec, count: usize, fraction: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |n: usize| -> usize {
            let h = ((fraction * (n / 2) as f64).floor() as i64).max(0);
            (n as i64 / 2 + rng.gen_range(-h..=h)) as usize
        };
        let shape = grid.shape();
        let points = (0..count)
            .map(|_| PlanPoint {
                x: [pick(shape[0]), pick(shape[1]), pick(shape[2])],
                z: [pick(shape[0]), pick(shape[1]), pick(shape[2])],
            })
            .collect();
        CovariancePlan { points }
    }
}

/// Splits `w` into per-axis factors when it is a tensor product.
fn separable_factors(w: &SampledField) -> Option<[Vec<Complex64>; 3]> {
    let g = w.grid();
    let c = [g.axes[0].center(), g.axes[1].center(), g.axes[2].center()];
    let w0 = w.get(&c);
    if w0.norm() == 0.0 {
        return None;
    }
    let f0: Vec<Complex64> = (0..g.axes[0].points).map(|i| w.get(&[i, c[1], c[2]]) / w0).collect();
    let f1: Vec<Complex64> = (0..g.axes[1].points).map(|i| w.get(&[c[0], i, c[2]]) / w0).collect();
    let f2: Vec<Complex64> = (0..g.axes[2].points).map(|i| w.get(&[c[0], c[1], i])).collect();
    let tol = 1e-14 * w.max_abs();
    let mut idx = [0usize; 3];
    for (flat, v) in w.values().iter().enumerate() {
        g.unravel(flat, &mut idx);
        if (v - f0[idx[0]] * f1[idx[1]] * f2[idx[2]]).norm() > tol {
            return None;
        }
    }
    Some([f0, f1, f2])
}

/// `V_w a (X, Z)` by direct summation, with the window already translated:
/// `shifted[Y] = w(Y - X)`.
fn stft_point_direct(a: &SampledField, shifted: &[Complex64], z: &[f64; 3]) -> Complex64 {
    let g = a.grid();
    let n = g.shape();
    let ph: Vec<Vec<Complex64>> = (0..3)
        .map(|d| {
            (0..n[d])
                .map(|j| Complex64::from_polar(1.0, -g.axes[d].coordinate(j) * z[d]))
                .collect()
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let av = a.values();
    for i in 0..n[0] {
        let mut s1 = Complex64::new(0.0, 0.0);
        for j in 0..n[1] {
            let base = (i * n[1] + j) * n[2];
            let s2: Complex64 = (0..n[2])
                .map(|k| av[base + k] * shifted[base + k].conj() * ph[2][k])
                .sum();
            s1 += s2 * ph[1][j];
        }
        acc += s1 * ph[0][i];
    }
    acc * g.cell_volume() / (2.0 * PI).powf(1.5)
}

fn stft_point_separable(a: &SampledField, factors: &[Vec<Complex64>; 3], x: &[f64; 3], z: &[f64; 3]) -> Complex64 {
    let g = a.grid();
    let n = g.shape();
    let c: Vec<Vec<Complex64>> = (0..3)
        .map(|d| {
            let sh = translate_lane(&factors[d], &g.axes[d], x[d]);
            (0..n[d])
                .map(|j| sh[j].conj() * Complex64::from_polar(1.0, -g.axes[d].coordinate(j) * z[d]))
                .collect()
        })
        .collect();
    let av = a.values();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n[0] {
        let mut s1 = Complex64::new(0.0, 0.0);
        for j in 0..n[1] {
            let base = (i * n[1] + j) * n[2];
            let s2: Complex64 = av[base..base + n[2]].iter().zip(&c[2]).map(|(a, b)| a * b).sum();
            s1 += s2 * c[1][j];
        }
        acc += s1 * c[0][i];
    }
    acc * g.cell_volume() / (2.0 * PI).powf(1.5)
}

fn translate_3d(w: &SampledField, x: &[f64; 3]) -> Result<SampledField> {
    let mut out = w.clone();
    for d in 0..3 {
        out = crate::fourier::translate(&out, d, x[d])?;
    }
    Ok(out)
}

fn cyclic_window(w: &SampledField, xi: &[usize; 3]) -> Vec<Complex64> {
    let g = w.grid();
    let n = g.shape();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut idx = [0usize; 3];
    for (flat, o) in out.iter_mut().enumerate() {
        g.unravel(flat, &mut idx);
        let src = [
            (idx[0] + n[0] + n[0] / 2 - xi[0]) % n[0],
            (idx[1] + n[1] + n[1] / 2 - xi[1]) % n[1],
            (idx[2] + n[2] + n[2] / 2 - xi[2]) % n[2],
        ];
        *o = w.values()[g.ravel(&src)];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub max_deviation: f64,
    pub max_modulus: f64,
    pub points: usize,
}

/// Compares `|V_{T phi}(T a)(X, Z)|` with `|V_phi a(X - sign*A Z, Z)|` where
/// `T` moves symbols from `(0,0)` to `pair` and `A Z = (r y + t z, r zeta, t zeta)`.
pub fn stft_covariance_check_signed(
    a: &SampledField,
    window: &SampledField,
    pair: QuantizationPair,
    plan: &CovariancePlan,
    sign: f64,
) -> Result<CovarianceReport> {
    if plan.points.is_empty() {
        return Err(Error::InvalidParameter("covariance plan is empty".into()));
    }
    symbol_axis(a)?;
    a.grid().ensure_same(window.grid(), "covariance window")?;
    let kn = QuantizationPair::KOHN_NIRENBERG;
    let b = convert_symbol(a, kn, pair)?;
    let w_rt = convert_symbol(window, kn, pair)?;
    let g = a.grid().clone();
    let dual = g.dual_on(&AxisSelection::all(3));
    let factors = separable_factors(window);
    let (r, t) = (pair.r, pair.t);
    let devs: Vec<(f64, f64)> = plan
        .points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let z = [
                dual.axes[0].coordinate(p.z[0]),
                dual.axes[1].coordinate(p.z[1]),
                dual.axes[2].coordinate(p.z[2]),
            ];
            let lhs = stft_point_direct(&b, &cyclic_window(&w_rt, &p.x), &z).norm();
            let x = [
                g.axes[0].coordinate(p.x[0]) - sign * (r * z[1] + t * z[2]),
                g.axes[1].coordinate(p.x[1]) - sign * r * z[0],
                g.axes[2].coordinate(p.x[2]) - sign * t * z[0],
            ];
            let rhs = match &factors {
                Some(fs) => stft_point_separable(a, fs, &x, &z),
                None => stft_point_direct(a, translate_3d(window, &x)?.values(), &z),
            }
            .norm();
            Ok(((lhs - rhs).abs(), lhs.max(rhs)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CovarianceReport {
        max_deviation: devs.iter().map(|d| d.0).fold(0.0, f64::max),
        max_modulus: devs.iter().map(|d| d.1).fold(0.0, f64::max),
        points: devs.len(),
    })
}

/// Maximum deviation in the STFT covariance identity over the plan.
pub fn stft_covariance_check(
    a: &SampledField,
    window: &SampledField,
    pair: QuantizationPair,
    plan: &CovariancePlan,
) -> Result<f64> {
    Ok(stft_covariance_check_signed(a, window, pair, plan, 1.0)?.max_deviation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{Profile, SymbolTerm};

    fn axis(l: f64, n: usize) -> AxisSpec {
        AxisSpec::new(l, n).unwrap()
    }

    fn gauss(x: &AxisSpec, c: f64, m: f64, w: f64) -> SampledField {
        crate::closed_form::FunctionSpec::gaussian(c, m, w)
            .sample(&GridSpec::new(vec![*x]).unwrap())
            .unwrap()
    }

    #[test]
    fn pair_admissibility() {
        assert!(QuantizationPair::new(0.6, 0.5).is_err());
        assert!(QuantizationPair::new(-0.1, 0.0).is_err());
        assert!(QuantizationPair::new(1.0 / 3.0, 2.0 / 3.0).is_ok());
    }

    #[test]
    fn constant_symbol_gives_product() {
        let x = axis(12.0, 64);
        let a = SymbolSpec::constant(1.0).sample(x).unwrap();
        let f = gauss(&x, 1.0, 0.5, 1.0);
        let g = gauss(&x, -0.5, -1.0, 1.5);
        let fg = f.mul(&g).unwrap();
        for pair in [QuantizationPair::KOHN_NIRENBERG, QuantizationPair::WEYL, QuantizationPair::new(1.0, 0.0).unwrap()] {
            let out = apply_bilinear(&a, pair, &f, &g).unwrap();
            assert!(out.max_abs_diff(&fg).unwrap() <= 1e-10, "{pair}");
        }
    }

    #[test]
    fn conversion_is_a_group_action() {
        let x = axis(8.0, 32);
        let s = SymbolSpec::single(
            "g",
            SymbolTerm::new(
                Profile::Gaussian { center: 0.3, width: 1.2 },
                Profile::Gaussian { center: 0.0, width: 1.0 },
                Profile::Gaussian { center: 0.5, width: 0.8 },
            ),
        );
        let a = s.sample(x).unwrap();
        let p0 = QuantizationPair::KOHN_NIRENBERG;
        let p1 = QuantizationPair::new(0.5, 0.0).unwrap();
        let p2 = QuantizationPair::WEYL;
        let two = convert_symbol(&convert_symbol(&a, p0, p1).unwrap(), p1, p2).unwrap();
        let one = convert_symbol(&a, p0, p2).unwrap();
        assert!(two.max_abs_diff(&one).unwrap() <= 1e-12);
        assert_eq!(convert_symbol(&a, p1, p1).unwrap(), a);
    }

    #[test]
    fn linear_symbol_xi_is_minus_i_derivative() {
        let x = axis(12.0, 128);
        let lin = GridSpec::new(vec![x, x.dual()]).unwrap();
        let a = SampledField::from_fn(lin, |c| Complex64::new(c[1], 0.0)).unwrap();
        let f = gauss(&x, 0.5, 1.0, 1.0);
        let out = apply_linear(&a, 0.0, &f).unwrap();
        let d = crate::fourier::spectral_derivative(&f, 0, 1).unwrap().scaled(Complex64::new(0.0, -1.0));
        assert!(out.max_abs_diff(&d).unwrap() <= 1e-9);
    }

    #[test]
    fn linear_multiplication_symbol_any_t() {
        let x = axis(10.0, 32);
        let f = gauss(&x, 0.5, 1.0, 1.0);
        let xf = SampledField::from_fn(f.grid().clone(), |c| Complex64::new(c[0], 0.0))
            .unwrap()
            .mul(&f)
            .unwrap();
        for t in [0.0, 0.3, 1.0] {
            let out = apply_linear_direct_fn(|x, _| Complex64::new(x, 0.0), t, &f).unwrap();
            assert!(out.max_abs_diff(&xf).unwrap() <= 1e-10);
            let one = apply_linear_direct_fn(|_, _| Complex64::new(1.0, 0.0), t, &f).unwrap();
            assert!(one.max_abs_diff(&f).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn reference_matches_direct_quadrature() {
        let x = axis(6.0, 16);
        let s = SymbolSpec::new(
            "mix",
            vec![
                SymbolTerm::new(
                    Profile::Cosine { wavenumber: std::f64::consts::PI / 6.0 },
                    Profile::Gaussian { center: 0.0, width: 1.5 },
                    Profile::Gaussian { center: 0.3, width: 1.0 },
                ),
                SymbolTerm::new(Profile::Gaussian { center: 0.5, width: 1.0 }, Profile::One, Profile::One)
                    .with_diff(Profile::Gaussian { center: 0.0, width: 2.0 }),
            ],
        );
        let f = gauss(&x, 0.5, 0.5, 1.0);
        let g = gauss(&x, -0.5, -0.3, 1.2);
        let pair = QuantizationPair::new(0.3, 0.5).unwrap();
        let direct = apply_bilinear_direct_fn(|a, b, c| s.eval(a, b, c), pair, &f, &g).unwrap();
        let fast = apply_bilinear_reference(&s, pair, &f, &g).unwrap();
        assert!(fast.rel_l2_error(&direct).unwrap() < 1e-13);
    }

    fn gauss_symbol_converted(r: f64, sign: f64) -> impl Fn(f64, f64, f64) -> Complex64 + Sync {
        move |x, xi, _| {
            let d = 1.0 + r * r;
            Complex64::new(-(x * x + xi * xi) / (2.0 * d), -sign * r * x * xi / d).exp() / d.sqrt()
        }
    }

    #[test]
    fn gaussian_conversion_closed_form() {
        let x = axis((48.0 * std::f64::consts::PI).sqrt(), 96);
        let grid = GridSpec::symbol_grid(x).unwrap();
        let a = SampledField::symbol_from_fn(grid.clone(), |x, xi, _| Complex64::new(-(x * x + xi * xi) / 2.0, 0.0).exp()).unwrap();
        for r in [0.25, 0.5, 1.0] {
            let pair = QuantizationPair::new(r, 0.0).unwrap();
            let b = convert_symbol(&a, pair, QuantizationPair::KOHN_NIRENBERG).unwrap();
            let exact = SampledField::symbol_from_fn(grid.clone(), gauss_symbol_converted(r, 1.0)).unwrap();
            let e = b.max_abs_diff(&exact).unwrap();
            assert!(e <= 1e-12, "r = {r}: {e:e}");
        }
    }

    #[test]
    fn conversion_sign_against_direct_quadrature() {
        let x = axis(8.0, 32);
        let f = gauss(&x, 0.5, 0.7, 1.0);
        let g = gauss(&x, -0.3, -0.4, 1.0);
        let r = 0.5;
        let pair = QuantizationPair::new(r, 0.0).unwrap();
        let lhs = apply_bilinear_direct_fn(|x, xi, _| Complex64::new(-(x * x + xi * xi) / 2.0, 0.0).exp(), pair, &f, &g).unwrap();
        let kn = QuantizationPair::KOHN_NIRENBERG;
        let good = apply_bilinear_direct_fn(gauss_symbol_converted(r, 1.0), kn, &f, &g).unwrap();
        let bad = apply_bilinear_direct_fn(gauss_symbol_converted(r, -1.0), kn, &f, &g).unwrap();
        assert!(good.rel_l2_error(&lhs).unwrap() < 1e-10);
        assert!(bad.rel_l2_error(&lhs).unwrap() > 1e-2);
    }

    #[test]
    fn first_order_symbol_picks_up_commutator() {
        // x xi at (r, 0) equals x xi - i r at (0, 0)
        let r = 0.5;
        let pair = QuantizationPair::new(r, 0.0).unwrap();
        let x = axis(8.0, 48);
        let f = gauss(&x, 0.3, 0.5, 1.0);
        let g = gauss(&x, 0.0, 0.0, 1.0);
        let weight = |x: f64| (-x * x / 50.0).exp();
        let lhs = apply_bilinear_direct_fn(|x, xi, _| Complex64::new(weight(x) * x * xi, 0.0), pair, &f, &g).unwrap();
        let rhs = apply_bilinear_direct_fn(
            |x, xi, _| {
                // e^{-i r d_x d_xi} applied to w(x) x xi
                let dw = weight(x) * (1.0 - x * x / 25.0);
                Complex64::new(weight(x) * x * xi, -r * dw)
            },
            QuantizationPair::KOHN_NIRENBERG,
            &f,
            &g,
        )
        .unwrap();
        let e = rhs.rel_l2_error(&lhs).unwrap(); assert!(e < 1e-8, "{e}");
    }
}
