//! Phase-decorated FFTs realizing the continuous Fourier convention
//! `F(xi) = (2 pi)^{-1/2} \int f(x) e^{-i x xi} dx` on centered grids.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::grid::{AxisSelection, AxisSpec, GridSpec};

/// Highest derivative order accepted by [`spectral_derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Calls `f(lane_start, lane)` for every 1-d lane of a row-major array along `axis`.
/// The lane is copied into a contiguous buffer and written back afterwards.
pub(crate) fn for_each_lane(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    mut f: impl FnMut(usize, &mut [Complex64]),
) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    if stride == 1 {
        for (o, lane) in values.chunks_exact_mut(n).enumerate() {
            f(o * n, lane);
        }
        return;
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for i in 0..stride {
            let start = o * n * stride + i;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = values[start + j * stride];
            }
            f(start, &mut buf);
            for (j, b) in buf.iter().enumerate() {
                values[start + j * stride] = *b;
            }
        }
    }
}

/// Unnormalized DFT along one axis (no centering phases).
pub(crate) fn raw_dft_axis(values: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let fft = plan(shape[axis], inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for_each_lane(values, shape, axis, |_, lane| {
        fft.process_with_scratch(lane, &mut scratch)
    });
}

/// Unnormalized DFT over all axes.
pub(crate) fn raw_dft_all(values: &mut [Complex64], shape: &[usize], inverse: bool) {
    for axis in 0..shape.len() {
        raw_dft_axis(values, shape, axis, inverse);
    }
}

fn alternating(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn transform_axis(values: &mut [Complex64], shape: &[usize], axis: usize, spec: &AxisSpec, inverse: bool) {
    let n = spec.points;
    let half_parity = alternating(n / 2);
    let scale = if inverse {
        spec.dual().spacing()
    } else {
        spec.spacing()
    } / (2.0 * PI).sqrt();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for_each_lane(values, shape, axis, |_, lane| {
        // (-1)^j on input, (-1)^(k - N/2) on output; inverse mirrors it.
        if inverse {
            for (k, v) in lane.iter_mut().enumerate() {
                *v *= alternating(k) * half_parity;
            }
        } else {
            for (j, v) in lane.iter_mut().enumerate() {
                *v *= alternating(j);
            }
        }
        fft.process_with_scratch(lane, &mut scratch);
        if inverse {
            for (j, v) in lane.iter_mut().enumerate() {
                *v *= alternating(j) * scale;
            }
        } else {
            for (k, v) in lane.iter_mut().enumerate() {
                *v *= alternating(k) * half_parity * scale;
            }
        }
    });
}

fn check_selection(f: &SampledField, sel: &AxisSelection) -> Result<()> {
    if let Some(&k) = sel.indices().iter().find(|&&k| k >= f.rank()) {
        return Err(Error::AxisOutOfRange {
            axis: k,
            rank: f.rank(),
        });
    }
    Ok(())
}

fn transform(f: &SampledField, sel: &AxisSelection, inverse: bool) -> Result<SampledField> {
    check_selection(f, sel)?;
    let grid = f.grid();
    let shape = grid.shape();
    let mut values = f.values().to_vec();
    let mut axes = grid.axes.clone();
    let mut roles = f.roles().to_vec();
    for &k in sel.indices() {
        // axis k of the input is the lattice being transformed; the inverse
        // transform treats it as a dual lattice and returns to its dual.
        let spec = if inverse { grid.axes[k].dual() } else { grid.axes[k] };
        transform_axis(&mut values, &shape, k, &spec, inverse);
        axes[k] = grid.axes[k].dual();
        roles[k] = roles[k].flipped();
    }
    Ok(SampledField::from_parts_unchecked(
        GridSpec { axes },
        values,
        roles,
    ))
}

/// Continuous-convention Fourier transform along the selected axes.
/// Selected axes are replaced by their dual lattices.
pub fn forward_ft(f: &SampledField, sel: &AxisSelection) -> Result<SampledField> {
    transform(f, sel, false)
}

/// Exact inverse of [`forward_ft`]: the selected axes are read as dual
/// lattices and mapped back to their own duals.
pub fn inverse_ft(f: &SampledField, sel: &AxisSelection) -> Result<SampledField> {
    transform(f, sel, true)
}

pub fn forward_ft_all(f: &SampledField) -> Result<SampledField> {
    forward_ft(f, &AxisSelection::all(f.rank()))
}

pub fn inverse_ft_all(f: &SampledField) -> Result<SampledField> {
    inverse_ft(f, &AxisSelection::all(f.rank()))
}

/// Applies a Fourier multiplier along one axis. `m(lane_start, k, xi_k)` may
/// depend on the lane through its flat start offset.
pub(crate) fn axis_multiplier(
    values: &mut [Complex64],
    grid: &GridSpec,
    axis: usize,
    mut m: impl FnMut(usize, usize, f64) -> Complex64,
) {
    let shape = grid.shape();
    let spec = grid.axes[axis];
    let dual = spec.dual();
    let n = spec.points;
    let fwd = plan(n, false);
    let inv = plan(n, true);
    let mut scratch =
        vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let xi: Vec<f64> = dual.coordinates();
    let inv_n = 1.0 / n as f64;
    // Centering phases cancel between forward and inverse except for (-1)^j.
    for_each_lane(values, &shape, axis, |start, lane| {
        for (j, v) in lane.iter_mut().enumerate() {
            *v *= alternating(j);
        }
        fwd.process_with_scratch(lane, &mut scratch);
        for (k, v) in lane.iter_mut().enumerate() {
            *v *= m(start, k, xi[k]);
        }
        inv.process_with_scratch(lane, &mut scratch);
        for (j, v) in lane.iter_mut().enumerate() {
            *v *= alternating(j) * inv_n;
        }
    });
}

/// `d^order/dx^order` along `axis` by multiplication with `(i xi)^order`.
/// The unpaired Nyquist mode is dropped for odd orders.
pub fn spectral_derivative(f: &SampledField, axis: usize, order: usize) -> Result<SampledField> {
    if axis >= f.rank() {
        return Err(Error::AxisOutOfRange {
            axis,
            rank: f.rank(),
        });
    }
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh {
            order,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let mut out = f.clone();
    let grid = f.grid().clone();
    axis_multiplier(out.values_mut(), &grid, axis, |_, k, xi| {
        if k == 0 && order % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi).powu(order as u32)
        }
    });
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Sheared {
    pub field: SampledField,
    /// Set when the largest shift exceeds the target half-width, so the
    /// periodic wrap is visible in the result.
    pub aliasing: bool,
}

/// Samples of `F(x_target - sum_j c_j x_j, ...)`, computed exactly by a linear
/// phase in the dual of the target axis.
pub fn shear(f: &SampledField, target: usize, sources: &[(usize, f64)]) -> Result<Sheared> {
    let rank = f.rank();
    if target >= rank {
        return Err(Error::AxisOutOfRange { axis: target, rank });
    }
    for &(j, c) in sources {
        if j >= rank {
            return Err(Error::AxisOutOfRange { axis: j, rank });
        }
        if j == target {
            return Err(Error::InvalidParameter(
                "shear target axis cannot be one of its sources".into(),
            ));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite shear coefficient {c}")));
        }
    }
    let grid = f.grid().clone();
    let reach: f64 = sources
        .iter()
        .map(|&(j, c)| c.abs() * grid.axes[j].half_width)
        .sum();
    let aliasing = reach > grid.axes[target].half_width;
    if aliasing {
        log::warn!(
            "shear reach {reach:.3} exceeds target half-width {:.3}; result wraps periodically",
            grid.axes[target].half_width
        );
    }
    let mut out = f.clone();
    if sources.iter().all(|&(_, c)| c == 0.0) {
        return Ok(Sheared { field: out, aliasing });
    }
    let rank = grid.rank();
    let mut idx = vec![0usize; rank];
    let mut last_start = usize::MAX;
    let mut shift = 0.0;
    axis_multiplier(out.values_mut(), &grid, target, |start, _, xi| {
        if start != last_start {
            grid.unravel(start, &mut idx);
            shift = sources
                .iter()
                .map(|&(j, c)| c * grid.axes[j].coordinate(idx[j]))
                .sum();
            last_start = start;
        }
        Complex64::from_polar(1.0, -xi * shift)
    });
    Ok(Sheared { field: out, aliasing })
}

/// Translation `f(x - delta)` along one axis by trigonometric interpolation.
pub fn translate(f: &SampledField, axis: usize, delta: f64) -> Result<SampledField> {
    if axis >= f.rank() {
        return Err(Error::AxisOutOfRange {
            axis,
            rank: f.rank(),
        });
    }
    let mut out = f.clone();
    let grid = f.grid().clone();
    axis_multiplier(out.values_mut(), &grid, axis, |_, _, xi| {
        Complex64::from_polar(1.0, -xi * delta)
    });
    Ok(out)
}

/// Translation of a single 1-d lane of samples on `axis` by `delta`.
pub(crate) fn translate_lane(samples: &[Complex64], axis: &AxisSpec, delta: f64) -> Vec<Complex64> {
    let grid = GridSpec {
        axes: vec![*axis],
    };
    let mut v = samples.to_vec();
    axis_multiplier(&mut v, &grid, 0, |_, _, xi| Complex64::from_polar(1.0, -xi * delta));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisSpec;

    fn line(l: f64, n: usize) -> GridSpec {
        GridSpec::new(vec![AxisSpec::new(l, n).unwrap()]).unwrap()
    }

    fn gaussian(grid: GridSpec) -> SampledField {
        SampledField::from_fn(grid, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn gaussian_is_fixed_point() {
        let g = line(12.0, 256);
        let f = gaussian(g);
        let ff = forward_ft_all(&f).unwrap();
        let dual = ff.grid().axes[0];
        let mut err: f64 = 0.0;
        for (k, v) in ff.values().iter().enumerate() {
            let xi = dual.coordinate(k);
            err = err.max((v - Complex64::new((-0.5 * xi * xi).exp(), 0.0)).norm());
        }
        assert!(err <= 1e-12, "err = {err}");
        let back = inverse_ft_all(&ff).unwrap();
        assert!(back.grid().same_as(f.grid()));
        assert!(back.max_abs_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn delta_and_constant() {
        let g = line(3.0, 32);
        let dx = g.axes[0].spacing();
        let mut delta = SampledField::zeros(g.clone(), vec![crate::field::AxisRole::Space]);
        delta.values_mut()[16] = Complex64::new(1.0 / dx, 0.0);
        let c = forward_ft_all(&delta).unwrap();
        let expect = 1.0 / (2.0 * PI).sqrt();
        for v in c.values() {
            assert!((v - expect).norm() < 1e-14);
        }
        let back = inverse_ft_all(&c).unwrap();
        assert!(back.max_abs_diff(&delta).unwrap() < 1e-12);
    }

    #[test]
    fn derivative_of_gaussian() {
        let f = gaussian(line(12.0, 256));
        let d = spectral_derivative(&f, 0, 1).unwrap();
        let expect = SampledField::from_fn(f.grid().clone(), |x| {
            Complex64::new(-x[0] * (-0.5 * x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        assert!(d.max_abs_diff(&expect).unwrap() <= 1e-10);
        assert_eq!(spectral_derivative(&f, 0, 0).unwrap(), f);
        assert!(matches!(
            spectral_derivative(&f, 0, 9),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn second_derivative_of_sine() {
        let l = PI;
        let f = SampledField::from_fn(line(l, 64), |x| Complex64::new((3.0 * x[0]).sin(), 0.0)).unwrap();
        let d2 = spectral_derivative(&f, 0, 2).unwrap();
        let expect = f.scaled(Complex64::new(-9.0, 0.0));
        assert!(d2.max_abs_diff(&expect).unwrap() <= 1e-12);
    }

    #[test]
    fn shear_matches_direct_evaluation() {
        let g = GridSpec::uniform(10.0, 128, 2).unwrap();
        let f = SampledField::from_fn(g.clone(), |c| {
            Complex64::new((-0.5 * c[0] * c[0] - 0.5 * c[1] * c[1]).exp(), 0.0)
        })
        .unwrap();
        let s = shear(&f, 0, &[(1, 1.0)]).unwrap();
        assert!(!s.aliasing);
        let expect = SampledField::from_fn(g, |c| {
            let u = c[0] - c[1];
            Complex64::new((-0.5 * u * u - 0.5 * c[1] * c[1]).exp(), 0.0)
        })
        .unwrap();
        assert!(s.field.max_abs_diff(&expect).unwrap() <= 1e-10);
        let back = shear(&s.field, 0, &[(1, -1.0)]).unwrap();
        assert!(back.field.max_abs_diff(&f).unwrap() <= 1e-12);
        let id = shear(&f, 0, &[(1, 0.0)]).unwrap();
        assert_eq!(id.field, f);
    }

    #[test]
    fn shear_flags_aliasing() {
        let g = GridSpec::uniform(4.0, 16, 2).unwrap();
        let f = SampledField::from_fn(g, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(shear(&f, 0, &[(1, 1.5)]).unwrap().aliasing);
        assert!(shear(&f, 0, &[(0, 1.0)]).is_err());
    }
}
