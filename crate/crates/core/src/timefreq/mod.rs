//! Short-time Fourier transform on periodized grids, its inversion and
//! weighted mixed norms.

mod decay;

pub use decay::{fit_decay_samples, fit_gs_decay, DecayFitConfig, DecayFitReport};

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{AxisRole, SampledField};
use crate::fourier::{inverse_ft, raw_dft_all};
use crate::grid::{AxisSelection, GridSpec};
use crate::weights::WeightModel;

/// Upper bound on the number of phase-space samples materialized by [`stft`].
pub const MAX_PHASE_SPACE_LEN: usize = 1 << 26;

/// `V_phi f` on the full phase-space lattice: axes `0..m` carry the
/// translation `X`, axes `m..2m` the frequency `Z`.
#[derive(Debug, Clone)]
pub struct PhaseSpaceField {
    pub base: SampledField,
    pub window_id: String,
}

impl PhaseSpaceField {
    pub fn space_rank(&self) -> usize {
        self.base.rank() / 2
    }

    pub fn space_grid(&self) -> GridSpec {
        GridSpec {
            axes: self.base.grid().axes[..self.space_rank()].to_vec(),
        }
    }
}

/// Content hash of a window (grid and samples).
pub fn window_id(window: &SampledField) -> String {
    let mut h = Sha256::new();
    for a in &window.grid().axes {
        h.update(a.half_width.to_le_bytes());
        h.update((a.points as u64).to_le_bytes());
    }
    h.update(crate::io::encode_values(window.values()));
    let digest = h.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

/// The window re-indexed by offset: `psi[m] = phi(m dx)` with cyclic offsets.
pub(crate) fn recentered(window: &SampledField) -> Vec<Complex64> {
    let grid = window.grid();
    let rank = grid.rank();
    let mut idx = vec![0; rank];
    let mut src = vec![0; rank];
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        grid.unravel(flat, &mut idx);
        for k in 0..rank {
            let n = grid.axes[k].points;
            src[k] = (idx[k] + n / 2) % n;
        }
        *o = window.values()[grid.ravel(&src)];
    }
    out
}

fn check_window(f: &SampledField, window: &SampledField) -> Result<()> {
    f.grid().ensure_same(window.grid(), "stft window")?;
    if window.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroWindow);
    }
    Ok(())
}

fn alternating(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Precomputed data for evaluating `V_phi f(., Z)` over all translates at once.
pub(crate) struct StftKernel {
    pub grid: GridSpec,
    shape: Vec<usize>,
    /// DFT of `(-1)^j f_j`.
    spectrum: Vec<Complex64>,
    /// Conjugated DFT of the recentered window.
    window_spectrum: Vec<Complex64>,
    scale: f64,
}

impl StftKernel {
    pub fn new(f: &SampledField, window: &SampledField) -> Result<Self> {
        check_window(f, window)?;
        let grid = f.grid().clone();
        let shape = grid.shape();
        let rank = grid.rank();
        let mut idx = vec![0; rank];
        let mut spectrum: Vec<Complex64> = f
            .values()
            .iter()
            .enumerate()
            .map(|(flat, v)| {
                grid.unravel(flat, &mut idx);
                v * idx.iter().map(|&j| alternating(j)).product::<f64>()
            })
            .collect();
        raw_dft_all(&mut spectrum, &shape, false);
        let mut window_spectrum = recentered(window);
        raw_dft_all(&mut window_spectrum, &shape, false);
        for w in window_spectrum.iter_mut() {
            *w = w.conj();
        }
        let scale = grid.cell_volume() / (2.0 * PI).powf(rank as f64 / 2.0) / grid.len() as f64;
        Ok(StftKernel {
            grid,
            shape,
            spectrum,
            window_spectrum,
            scale,
        })
    }

    /// `V_phi f(X_n, Z_q)` for all `n`, given the lattice multi-index `q`.
    pub fn column(&self, q: &[usize]) -> Vec<Complex64> {
        let rank = self.grid.rank();
        let mut idx = vec![0; rank];
        let mut src = vec![0; rank];
        let sign: f64 = q
            .iter()
            .zip(&self.shape)
            .map(|(&qk, &n)| alternating(qk + n / 2))
            .product();
        let mut buf: Vec<Complex64> = (0..self.grid.len())
            .map(|flat| {
                self.grid.unravel(flat, &mut idx);
                for k in 0..rank {
                    src[k] = (idx[k] + q[k]) % self.shape[k];
                }
                self.spectrum[self.grid.ravel(&src)] * self.window_spectrum[flat]
            })
            .collect();
        raw_dft_all(&mut buf, &self.shape, true);
        let s = sign * self.scale;
        for v in buf.iter_mut() {
            *v *= s;
        }
        buf
    }
}

/// `V_phi f(X, Z) = (2 pi)^{-m/2} dY sum_Y f(Y) conj(phi(Y - X)) e^{-i Y.Z}`
/// with cyclic window translation, on the full `(X, Z)` lattice.
pub fn stft(f: &SampledField, window: &SampledField) -> Result<PhaseSpaceField> {
    let kernel = StftKernel::new(f, window)?;
    let grid = f.grid();
    let m = grid.rank();
    let nx = grid.len();
    let dual = grid.dual_on(&AxisSelection::all(m));
    let total = nx.checked_mul(dual.len()).filter(|&t| t <= MAX_PHASE_SPACE_LEN);
    let Some(total) = total else {
        return Err(Error::InvalidParameter(format!(
            "phase space of {nx}x{nx} samples is too large; use a sampling plan"
        )));
    };
    let columns: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|qflat| {
            let mut q = vec![0; m];
            dual.unravel(qflat, &mut q);
            kernel.column(&q)
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); total];
    for (q, col) in columns.iter().enumerate() {
        for (n, v) in col.iter().enumerate() {
            values[n * nx + q] = *v;
        }
    }
    let mut axes = grid.axes.clone();
    axes.extend(dual.axes.iter().cloned());
    let mut roles = vec![AxisRole::Space; m];
    roles.extend(vec![AxisRole::Frequency; m]);
    let base = SampledField::new(GridSpec::new(axes)?, values, roles)?;
    Ok(PhaseSpaceField {
        base,
        window_id: window_id(window),
    })
}

fn invert_with(v: &PhaseSpaceField, synthesis: &SampledField, normalization: Complex64) -> Result<SampledField> {
    let m = v.space_rank();
    let space = v.space_grid();
    space.ensure_same(synthesis.grid(), "synthesis window")?;
    if normalization.norm() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let nx = space.len();
    let dual = space.dual_on(&AxisSelection::all(m));
    let sel = AxisSelection::all(m);
    let psi = recentered(synthesis);
    let mut out = vec![Complex64::new(0.0, 0.0); nx];
    let mut idx_x = vec![0; m];
    let mut idx_y = vec![0; m];
    let mut off = vec![0; m];
    for n in 0..nx {
        let row = &v.base.values()[n * nx..(n + 1) * nx];
        let col = SampledField::from_parts_unchecked(dual.clone(), row.to_vec(), vec![AxisRole::Frequency; m]);
        // f(X) conj(phi(X - Y_n)) recovered exactly by the inverse transform in Z.
        let g = inverse_ft(&col, &sel)?;
        space.unravel(n, &mut idx_y);
        for (j, o) in out.iter_mut().enumerate() {
            space.unravel(j, &mut idx_x);
            for k in 0..m {
                let nk = space.axes[k].points;
                off[k] = (idx_x[k] + nk - idx_y[k]) % nk;
            }
            *o += psi[space.ravel(&off)] * g.values()[j];
        }
    }
    let scale = space.cell_volume() / normalization;
    for o in out.iter_mut() {
        *o *= scale;
    }
    SampledField::new(space, out, vec![AxisRole::Space; m])
}

/// Reconstruction `f = (2 pi)^{-m/2} / |phi|^2 sum_Y sum_Z V(Y,Z) phi(X-Y) e^{i X.Z} dY dZ`.
pub fn stft_adjoint_invert(v: &PhaseSpaceField, window: &SampledField) -> Result<SampledField> {
    if window_id(window) != v.window_id {
        log::warn!(
            "reconstruction window differs from the analysis window ({}); normalizing by the synthesis norm",
            v.window_id
        );
    }
    let norm2 = window.norm_l2().powi(2);
    invert_with(v, window, Complex64::new(norm2, 0.0))
}

/// Reconstruction with a synthesis window different from the analysis one,
/// normalized by `<synthesis, analysis>`.
pub fn stft_adjoint_invert_dual(
    v: &PhaseSpaceField,
    synthesis: &SampledField,
    analysis: &SampledField,
) -> Result<SampledField> {
    if window_id(analysis) != v.window_id {
        log::warn!("analysis window does not match the transform's window id {}", v.window_id);
    }
    let pairing = synthesis.inner(analysis)?;
    invert_with(v, synthesis, pairing)
}

/// A Lebesgue exponent in `[1, inf]`; serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!("exponent {p} is outside [1, inf]")))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                other => other.parse().map_err(serde::de::Error::custom)?,
            },
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedExponents {
    pub p: Exponent,
    pub q: Exponent,
}

impl MixedExponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Ok(MixedExponents {
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
        })
    }
}

/// A norm value `mantissa * exp(log_scale)`, kept apart when it would overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledNorm {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl ScaledNorm {
    pub fn ln(&self) -> f64 {
        if self.mantissa > 0.0 {
            self.mantissa.ln() + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn value(&self) -> Result<f64> {
        let v = self.mantissa * self.log_scale.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(format!(
                "norm {} x exp({:.1}) exceeds f64",
                self.mantissa, self.log_scale
            )))
        }
    }
}

/// Reduces `|values|` given in log form over an `(outer, inner)` layout:
/// the `p` norm over the inner index (weighted by `inner_cell`) then the `q`
/// norm over the outer index (weighted by `outer_cell`).
pub(crate) fn mixed_reduce(
    logs: &[f64],
    outer: usize,
    inner: usize,
    inner_stride: usize,
    outer_stride: usize,
    pq: MixedExponents,
    inner_cell: f64,
    outer_cell: f64,
) -> ScaledNorm {
    let scale = logs.iter().cloned().filter(|l| l.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return ScaledNorm {
            mantissa: 0.0,
            log_scale: 0.0,
        };
    }
    let mut partial = Vec::with_capacity(outer);
    for o in 0..outer {
        let it = (0..inner).map(|i| (logs[o * outer_stride + i * inner_stride] - scale).exp());
        let v = match pq.p {
            Exponent::Infinity => it.fold(0.0, f64::max),
            Exponent::Finite(p) => (it.map(|a| a.powf(p)).sum::<f64>() * inner_cell).powf(1.0 / p),
        };
        partial.push(v);
    }
    let mantissa = match pq.q {
        Exponent::Infinity => partial.iter().cloned().fold(0.0, f64::max),
        Exponent::Finite(q) => (partial.iter().map(|a| a.powf(q)).sum::<f64>() * outer_cell).powf(1.0 / q),
    };
    ScaledNorm {
        mantissa,
        log_scale: scale,
    }
}

/// Weighted `L^{p,q}` norm with `p` over translations and `q` over frequencies.
pub fn mixed_norm_scaled(v: &PhaseSpaceField, w: &WeightModel, pq: MixedExponents) -> Result<ScaledNorm> {
    let grid = v.base.grid();
    if w.arity() > grid.rank() {
        return Err(Error::GridMismatch(format!(
            "weight reads {} axes, phase space has {}",
            w.arity(),
            grid.rank()
        )));
    }
    let logw = crate::weights::evaluate_log(w, grid)?;
    let logs: Vec<f64> = v
        .base
        .values()
        .iter()
        .zip(&logw)
        .map(|(a, lw)| a.norm().ln() + lw)
        .collect();
    let m = v.space_rank();
    let space = GridSpec {
        axes: grid.axes[..m].to_vec(),
    };
    let freq = GridSpec {
        axes: grid.axes[m..].to_vec(),
    };
    let nx = space.len();
    let nz = freq.len();
    Ok(mixed_reduce(
        &logs,
        nz,
        nx,
        nz,
        1,
        pq,
        space.cell_volume(),
        freq.cell_volume(),
    ))
}

pub fn mixed_norm(v: &PhaseSpaceField, w: &WeightModel, pq: MixedExponents) -> Result<f64> {
    mixed_norm_scaled(v, w, pq)?.value()
}

pub fn modulation_norm(
    f: &SampledField,
    window: &SampledField,
    w: &WeightModel,
    pq: MixedExponents,
) -> Result<f64> {
    mixed_norm(&stft(f, window)?, w, pq)
}

pub fn modulation_norm_scaled(
    f: &SampledField,
    window: &SampledField,
    w: &WeightModel,
    pq: MixedExponents,
) -> Result<ScaledNorm> {
    mixed_norm_scaled(&stft(f, window)?, w, pq)
}

/// Centered Gaussian `exp(-|x|^2 / (2 width^2))` on a grid.
pub fn gaussian_window(grid: &GridSpec, width: f64) -> Result<SampledField> {
    SampledField::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        Complex64::new((-0.5 * r2 / (width * width)).exp(), 0.0)
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
    fn origin_value_is_window_energy() {
        let g = line(12.0, 64);
        let phi = gaussian_window(&g, 1.0).unwrap();
        let v = stft(&phi, &phi).unwrap();
        let c = g.axes[0].center();
        let at0 = v.base.get(&[c, c]);
        let expect = phi.norm_l2().powi(2) / (2.0 * PI).sqrt();
        assert!((at0 - expect).norm() < 1e-14);
    }

    #[test]
    fn gaussian_closed_form() {
        let g = line(12.0, 256);
        let phi = gaussian_window(&g, 1.0).unwrap();
        let v = stft(&phi, &phi).unwrap();
        let pg = v.base.grid();
        let mut err: f64 = 0.0;
        for n in 0..256 {
            for q in 0..256 {
                let x = pg.axes[0].coordinate(n);
                let xi = pg.axes[1].coordinate(q);
                let expect = PI.sqrt() / (2.0 * PI).sqrt() * (-(x * x + xi * xi) / 4.0).exp();
                err = err.max((v.base.get(&[n, q]).norm() - expect).abs());
            }
        }
        assert!(err <= 1e-9, "err = {err}");
    }

    #[test]
    fn roundtrip_and_moyal() {
        let g = line(12.0, 128);
        let phi = gaussian_window(&g, 1.0).unwrap();
        let f = SampledField::from_fn(g.clone(), |x| {
            Complex64::from_polar((-(x[0] - 1.0).powi(2) / 3.0).exp(), 0.7 * x[0])
        })
        .unwrap();
        let v = stft(&f, &phi).unwrap();
        let back = stft_adjoint_invert(&v, &phi).unwrap();
        assert!(back.rel_l2_error(&f).unwrap() < 1e-12);
        let n = mixed_norm(&v, &WeightModel::trivial(), MixedExponents::new(2.0, 2.0).unwrap()).unwrap();
        let expect = f.norm_l2() * phi.norm_l2();
        assert!((n - expect).abs() / expect < 1e-12);
        let ninf = mixed_norm(
            &v,
            &WeightModel::trivial(),
            MixedExponents::new(f64::INFINITY, f64::INFINITY).unwrap(),
        )
        .unwrap();
        assert!((ninf - v.base.max_abs()).abs() < 1e-15);
    }

    #[test]
    fn dual_window_reconstruction() {
        let g = line(12.0, 64);
        let phi = gaussian_window(&g, 1.0).unwrap();
        let gamma = gaussian_window(&g, 2.0).unwrap();
        let f = gaussian_window(&g, 1.5).unwrap();
        let v = stft(&f, &phi).unwrap();
        let back = stft_adjoint_invert_dual(&v, &gamma, &phi).unwrap();
        assert!(back.rel_l2_error(&f).unwrap() < 1e-12);
    }

    #[test]
    fn zero_window_rejected() {
        let g = line(4.0, 16);
        let z = SampledField::zeros(g.clone(), vec![AxisRole::Space]);
        let f = gaussian_window(&g, 1.0).unwrap();
        assert!(matches!(stft(&f, &z), Err(Error::ZeroWindow)));
    }

    #[test]
    fn exponent_serde() {
        let pq = MixedExponents::new(2.0, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&pq).unwrap();
        assert_eq!(s, r#"{"p":2.0,"q":"inf"}"#);
        let back: MixedExponents = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pq);
        assert!(serde_json::from_str::<MixedExponents>(r#"{"p":0.5,"q":1}"#).is_err());
    }
}
