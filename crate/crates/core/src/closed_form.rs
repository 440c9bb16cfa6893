//! Closed-form test functions and symbols, serializable for battery manifests.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::grid::{AxisSpec, GridSpec};

/// A function of one real variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    One,
    /// `exp(-(t - center)^2 / (2 width^2))`
    Gaussian { center: f64, width: f64 },
    /// `exp(i k t)`
    Plane { wavenumber: f64 },
    /// `cos(k t)`
    Cosine { wavenumber: f64 },
    /// `t`
    Linear,
    /// `(1 + t^2)^{order/2}`
    Bracket { order: f64 },
    /// `sech((t - center) / width)`
    Sech { center: f64, width: f64 },
    /// `|t - center|`
    Abs { center: f64 },
    /// `sign(t - center)`
    Sign { center: f64 },
    /// `|t - center|^power`
    PowAbs { center: f64, power: f64 },
    /// `exp(i freq |t|)`
    OscAbs { freq: f64 },
    Product { factors: Vec<Profile> },
}

impl Profile {
    pub fn eval(&self, t: f64) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        match *self {
            Profile::Product { ref factors } => factors.iter().map(|f| f.eval(t)).product(),
            Profile::One => re(1.0),
            Profile::Gaussian { center, width } => {
                let u = (t - center) / width;
                re((-0.5 * u * u).exp())
            }
            Profile::Plane { wavenumber } => Complex64::from_polar(1.0, wavenumber * t),
            Profile::Cosine { wavenumber } => re((wavenumber * t).cos()),
            Profile::Linear => re(t),
            Profile::Bracket { order } => re((1.0 + t * t).powf(0.5 * order)),
            Profile::Sech { center, width } => re(1.0 / ((t - center) / width).cosh()),
            Profile::Abs { center } => re((t - center).abs()),
            Profile::Sign { center } => {
                let u = t - center;
                re(if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                })
            }
            Profile::PowAbs { center, power } => re((t - center).abs().powf(power)),
            Profile::OscAbs { freq } => Complex64::from_polar(1.0, freq * t.abs()),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Profile::One)
    }

    /// False when the profile has a kink, jump or cusp.
    pub fn is_smooth(&self) -> bool {
        match self {
            Profile::Product { factors } => factors.iter().all(Profile::is_smooth),
            Profile::Abs { .. } | Profile::Sign { .. } | Profile::PowAbs { .. } | Profile::OscAbs { .. } => false,
            _ => true,
        }
    }

    /// Pointwise product, flattening nested products and dropping ones.
    pub fn product(a: Profile, b: Profile) -> Profile {
        let mut factors = Vec::new();
        for p in [a, b] {
            match p {
                Profile::One => {}
                Profile::Product { factors: f } => factors.extend(f),
                p => factors.push(p),
            }
        }
        match factors.len() {
            0 => Profile::One,
            1 => factors.pop().unwrap(),
            _ => Profile::Product { factors },
        }
    }
}

fn one() -> Profile {
    Profile::One
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

/// `coef * x(x) * xi(xi) * eta(eta) * diff(xi - eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    #[serde(default = "unit")]
    pub coef: [f64; 2],
    #[serde(default = "one")]
    pub x: Profile,
    #[serde(default = "one")]
    pub xi: Profile,
    #[serde(default = "one")]
    pub eta: Profile,
    #[serde(default = "one")]
    pub diff: Profile,
}

impl SymbolTerm {
    pub fn new(x: Profile, xi: Profile, eta: Profile) -> Self {
        SymbolTerm {
            coef: unit(),
            x,
            xi,
            eta,
            diff: Profile::One,
        }
    }

    pub fn with_diff(mut self, diff: Profile) -> Self {
        self.diff = diff;
        self
    }

    pub fn with_coef(mut self, c: Complex64) -> Self {
        self.coef = [c.re, c.im];
        self
    }

    pub fn coef(&self) -> Complex64 {
        Complex64::new(self.coef[0], self.coef[1])
    }

    /// The frequency part `q(xi, eta)`.
    pub fn freq(&self, xi: f64, eta: f64) -> Complex64 {
        self.coef() * self.xi.eval(xi) * self.eta.eval(eta) * self.diff.eval(xi - eta)
    }
}

/// A bilinear symbol `a(x, xi, eta)` given as a sum of terms, each separable
/// between `x` and `(xi, eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub name: String,
    pub terms: Vec<SymbolTerm>,
}

impl SymbolSpec {
    pub fn new(name: impl Into<String>, terms: Vec<SymbolTerm>) -> Self {
        SymbolSpec {
            name: name.into(),
            terms,
        }
    }

    pub fn single(name: impl Into<String>, term: SymbolTerm) -> Self {
        SymbolSpec::new(name, vec![term])
    }

    pub fn constant(c: f64) -> Self {
        SymbolSpec::single(
            "constant",
            SymbolTerm::new(Profile::One, Profile::One, Profile::One).with_coef(Complex64::new(c, 0.0)),
        )
    }

    pub fn eval(&self, x: f64, xi: f64, eta: f64) -> Complex64 {
        self.terms.iter().map(|t| t.x.eval(x) * t.freq(xi, eta)).sum()
    }

    pub fn is_smooth(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.x.is_smooth() && t.xi.is_smooth() && t.eta.is_smooth() && t.diff.is_smooth())
    }

    /// Samples on the symbol grid of a one-axis function grid.
    pub fn sample(&self, function_axis: AxisSpec) -> Result<SampledField> {
        let grid = GridSpec::symbol_grid(function_axis)?;
        self.sample_on(&grid)
    }

    pub fn sample_on(&self, grid: &GridSpec) -> Result<SampledField> {
        SampledField::symbol_from_fn(grid.clone(), |x, xi, eta| self.eval(x, xi, eta))
    }
}

/// A test function of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `exp(-(x-c)^2/(2 w^2)) exp(i m x)`
    Gaussian {
        center: f64,
        modulation: f64,
        width: f64,
    },
    /// `(1 + ((x-c)/w)^2)^{-power/2}`
    AlgebraicTail { center: f64, width: f64, power: f64 },
    /// A dilated, modulated Gaussian with an amplitude.
    ScaledGaussian {
        amplitude: [f64; 2],
        center: f64,
        modulation: f64,
        width: f64,
    },
}

impl FunctionSpec {
    pub fn gaussian(center: f64, modulation: f64, width: f64) -> Self {
        FunctionSpec::Gaussian {
            center,
            modulation,
            width,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match *self {
            FunctionSpec::Gaussian {
                center,
                modulation,
                width,
            } => {
                let u = (x - center) / width;
                Complex64::from_polar((-0.5 * u * u).exp(), modulation * x)
            }
            FunctionSpec::AlgebraicTail { center, width, power } => {
                let u = (x - center) / width;
                Complex64::new((1.0 + u * u).powf(-0.5 * power), 0.0)
            }
            FunctionSpec::ScaledGaussian {
                amplitude,
                center,
                modulation,
                width,
            } => {
                let u = (x - center) / width;
                Complex64::new(amplitude[0], amplitude[1]) * Complex64::from_polar((-0.5 * u * u).exp(), modulation * x)
            }
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<SampledField> {
        if grid.rank() != 1 {
            return Err(Error::GridMismatch("test functions live on one axis".into()));
        }
        SampledField::from_fn(grid.clone(), |x| self.eval(x[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_serde_roundtrip() {
        let s = SymbolSpec::single(
            "kink",
            SymbolTerm::new(
                Profile::Abs { center: 0.0 },
                Profile::Gaussian { center: 0.0, width: 1.0 },
                Profile::One,
            )
            .with_diff(Profile::Sign { center: 0.0 }),
        );
        let text = serde_json::to_string(&s).unwrap();
        let back: SymbolSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(!s.is_smooth());
        assert_eq!(s.eval(-2.0, 0.0, 1.0), Complex64::new(2.0, 0.0) * -1.0);
    }

    #[test]
    fn defaults_fill_missing_profiles() {
        let t: SymbolTerm = serde_json::from_str(r#"{"x":{"kind":"linear"}}"#).unwrap();
        assert_eq!(t.xi, Profile::One);
        assert_eq!(t.coef(), Complex64::new(1.0, 0.0));
    }
}
