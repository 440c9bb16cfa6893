//! Seeded test batteries and the fixed symbol sets used by the suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::closed_form::{FunctionSpec, Profile, SymbolSpec, SymbolTerm};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::grid::{AxisSpec, GridSpec};

pub const DEFAULT_BATTERY_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub size: usize,
    pub seed: u64,
    /// Centers are drawn from `[-c L, c L]`.
    pub center_fraction: f64,
    /// Modulations are drawn from `[-m L', m L']` with `L'` the dual half-width.
    pub modulation_fraction: f64,
    pub width_min: f64,
    pub width_max: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            size: 8,
            seed: DEFAULT_BATTERY_SEED,
            center_fraction: 1.0 / 3.0,
            modulation_fraction: 0.5,
            width_min: 0.5,
            width_max: 2.0,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.size > 0
            && (0.0..=1.0).contains(&self.center_fraction)
            && (0.0..=1.0).contains(&self.modulation_fraction)
            && self.width_min > 0.0
            && self.width_max >= self.width_min;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid battery configuration {self:?}")))
        }
    }
}

/// Everything needed to regenerate a battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryManifest {
    pub generator: String,
    pub axis: AxisSpec,
    pub config: BatteryConfig,
    pub members: Vec<(FunctionSpec, FunctionSpec)>,
}

impl BatteryManifest {
    /// Short content hash used as the battery id in reports.
    pub fn id(&self) -> String {
        let text = serde_json::to_string(self).expect("manifest serializes");
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.generator)
    }

    /// The same members on another axis; used to refine a battery without redrawing it.
    pub fn with_axis(&self, axis: AxisSpec) -> Self {
        BatteryManifest { axis, ..self.clone() }
    }

    pub fn sample(&self) -> Result<Vec<(SampledField, SampledField)>> {
        let grid = GridSpec::new(vec![self.axis])?;
        self.members
            .iter()
            .map(|(f, g)| Ok((f.sample(&grid)?, g.sample(&grid)?)))
            .collect()
    }
}

fn random_gaussian(rng: &mut ChaCha8Rng, axis: &AxisSpec, cfg: &BatteryConfig) -> FunctionSpec {
    let c = cfg.center_fraction * axis.half_width;
    let m = cfg.modulation_fraction * axis.dual().half_width;
    let sym = |rng: &mut ChaCha8Rng, h: f64| if h > 0.0 { rng.gen_range(-h..=h) } else { 0.0 };
    let center = sym(rng, c);
    let modulation = sym(rng, m);
    let width = if cfg.width_max > cfg.width_min {
        rng.gen_range(cfg.width_min..=cfg.width_max)
    } else {
        cfg.width_min
    };
    FunctionSpec::gaussian(center, modulation, width)
}

/// Seeded pairs of translated, modulated and dilated Gaussians.
pub fn gaussian_pairs(axis: AxisSpec, cfg: &BatteryConfig) -> Result<BatteryManifest> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let members = (0..cfg.size)
        .map(|_| (random_gaussian(&mut rng, &axis, cfg), random_gaussian(&mut rng, &axis, cfg)))
        .collect();
    Ok(BatteryManifest {
        generator: "gaussian-pairs".into(),
        axis,
        config: *cfg,
        members,
    })
}

/// Seeded Gaussians with random complex amplitudes.
pub fn scaled_gaussians(axis: AxisSpec, cfg: &BatteryConfig) -> Result<Vec<FunctionSpec>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.size)
        .map(|_| {
            let FunctionSpec::Gaussian {
                center,
                modulation,
                width,
            } = random_gaussian(&mut rng, &axis, cfg)
            else {
                unreachable!()
            };
            let amp = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
            FunctionSpec::ScaledGaussian {
                amplitude: [amp.re, amp.im],
                center,
                modulation,
                width,
            }
        })
        .collect())
}

fn g(center: f64, width: f64) -> Profile {
    Profile::Gaussian { center, width }
}

fn term(x: Profile, xi: Profile, eta: Profile) -> SymbolTerm {
    SymbolTerm::new(x, xi, eta)
}

pub fn isotropic_gaussian() -> SymbolSpec {
    SymbolSpec::single("gaussian", term(g(0.0, 1.0), g(0.0, 1.0), g(0.0, 1.0)))
}

/// Smooth symbols with Gaussian decay in every variable.
pub fn invariance_symbols() -> Vec<SymbolSpec> {
    vec![
        isotropic_gaussian(),
        SymbolSpec::single("shifted-anisotropic", term(g(0.5, 1.2), g(0.3, 1.0), g(-0.2, 1.3))),
        SymbolSpec::new(
            "two-terms",
            vec![
                term(g(0.0, 1.0), g(0.0, 1.0), g(0.0, 1.0)),
                term(g(-1.0, 1.3), g(0.5, 0.8), g(0.0, 1.1)).with_coef(Complex64::new(0.0, 0.5)),
            ],
        ),
        SymbolSpec::new(
            "modulated",
            vec![SymbolTerm {
                coef: [1.0, 0.0],
                x: g(0.0, 1.0),
                xi: g(0.0, 1.0),
                eta: g(0.4, 0.9),
                diff: Profile::Plane { wavenumber: 0.7 },
            }],
        ),
        SymbolSpec::new(
            "coupled",
            vec![term(g(0.0, 1.1), g(0.0, 1.2), g(0.0, 1.2)).with_diff(g(0.0, 0.9))],
        ),
    ]
}

/// Symbols for the STFT covariance identity.
pub fn covariance_symbols() -> Vec<SymbolSpec> {
    vec![
        isotropic_gaussian(),
        SymbolSpec::single("shifted-anisotropic", term(g(0.5, 1.2), g(0.3, 1.0), g(-0.2, 1.3))),
        SymbolSpec::new(
            "coupled",
            vec![term(g(0.0, 1.1), g(0.0, 1.2), g(0.0, 1.2)).with_diff(g(0.0, 0.9))],
        ),
    ]
}

/// A symbol with its expected class membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCase {
    pub symbol: SymbolSpec,
    pub in_class: bool,
}

/// Six smooth symbols with Gaussian decay and six with an engineered defect.
pub fn class_battery() -> Vec<ClassCase> {
    let iso = || term(g(0.0, 1.0), g(0.0, 1.0), g(0.0, 1.0));
    let inside = vec![
        SymbolSpec::constant(1.0),
        isotropic_gaussian(),
        SymbolSpec::single("anisotropic", term(g(0.5, 1.3), g(-0.4, 0.9), g(0.3, 1.1))),
        SymbolSpec::single(
            "cosine",
            term(g(0.0, 1.0), g(0.0, 1.0), g(0.0, 1.0)).with_diff(Profile::Cosine { wavenumber: 1.0 }),
        ),
        SymbolSpec::single("coupled", term(g(0.0, 1.1), g(0.0, 1.5), g(0.0, 1.5)).with_diff(g(0.0, 1.2))),
        SymbolSpec::new(
            "two-terms",
            vec![
                iso(),
                term(g(-1.0, 1.2), g(1.0, 1.2), g(0.0, 1.2)).with_coef(Complex64::new(0.0, 0.5)),
            ],
        ),
    ];
    let outside = vec![
        SymbolSpec::single("abs-x", iso().tap_x(Profile::Abs { center: 0.0 })),
        SymbolSpec::single("abs-xi", iso().tap_xi(Profile::Abs { center: 0.0 })),
        SymbolSpec::single("sign-eta", iso().tap_eta(Profile::Sign { center: 0.0 })),
        SymbolSpec::single("sqrt-abs-x", iso().tap_x(Profile::PowAbs { center: 0.0, power: 0.5 })),
        SymbolSpec::single("oscillating-abs-x", iso().tap_x(Profile::OscAbs { freq: 5.0 })),
        SymbolSpec::single("abs-difference", iso().with_diff(Profile::Abs { center: 0.0 })),
    ];
    inside
        .into_iter()
        .map(|symbol| ClassCase { symbol, in_class: true })
        .chain(outside.into_iter().map(|symbol| ClassCase { symbol, in_class: false }))
        .collect()
}

/// Multiplies one factor of a Gaussian-profile term by an extra profile.
trait TapProfile {
    fn tap_x(self, p: Profile) -> Self;
    fn tap_xi(self, p: Profile) -> Self;
    fn tap_eta(self, p: Profile) -> Self;
}

impl TapProfile for SymbolTerm {
    fn tap_x(mut self, p: Profile) -> Self {
        self.x = Profile::product(self.x, p);
        self
    }
    fn tap_xi(mut self, p: Profile) -> Self {
        self.xi = Profile::product(self.xi, p);
        self
    }
    fn tap_eta(mut self, p: Profile) -> Self {
        self.eta = Profile::product(self.eta, p);
        self
    }
}
