//! Verification suites. Each suite produces per-case metrics and a pass flag;
//! wall time is reported separately so that result files are reproducible.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::battery::{
    class_battery, covariance_symbols, gaussian_pairs, invariance_symbols, isotropic_gaussian, scaled_gaussians,
    BatteryConfig, DEFAULT_BATTERY_SEED,
};
use crate::closed_form::{FunctionSpec, Profile, SymbolSpec, SymbolTerm};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::fourier::{forward_ft, inverse_ft};
use crate::grid::{AxisSelection, AxisSpec, GridSpec};
use crate::quantization::{
    apply_bilinear, apply_bilinear_direct_fn, boundedness_probe, convert_symbol, gs_continuity_check,
    gs_decay_nested, stft_covariance_check_signed, verify_invariance, BoundednessSetup, CovariancePlan,
    GsCheckConfig, InvariancePathway, QuantizationPair,
};
use crate::symbols::{
    fit_class_decay, gamma_norm_estimate, modspace_verdict, sample_stft, AmbientExponents,
    GevreyClassSpec, StftSamplingPlan, DEFAULT_RAY_RADII,
};
use crate::timefreq::{gaussian_window, mixed_norm, stft, stft_adjoint_invert, Exponent, MixedExponents};
use crate::weights::{fit_smoothness, WeightModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Fourier,
    Stft,
    Weights,
    Classes,
    Invariance,
    Covariance,
    Boundedness,
    GsContinuity,
    OracleQuadrature,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Fourier,
        Suite::Stft,
        Suite::Weights,
        Suite::Classes,
        Suite::Invariance,
        Suite::Covariance,
        Suite::Boundedness,
        Suite::GsContinuity,
        Suite::OracleQuadrature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fourier => "fourier",
            Suite::Stft => "stft",
            Suite::Weights => "weights",
            Suite::Classes => "classes",
            Suite::Invariance => "invariance",
            Suite::Covariance => "covariance",
            Suite::Boundedness => "boundedness",
            Suite::GsContinuity => "gs-continuity",
            Suite::OracleQuadrature => "oracle-quadrature",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub name: String,
    /// Hash of the serialized inputs of this case.
    pub inputs_hash: String,
    /// Non-finite values are clamped to `f64::MAX` so that reports stay valid JSON.
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
}

impl CaseRecord {
    fn new(name: impl Into<String>, inputs: &impl Serialize, metrics: Vec<(&str, f64)>, pass: bool) -> Self {
        CaseRecord {
            name: name.into(),
            inputs_hash: inputs_hash(inputs),
            metrics: metrics.into_iter().map(|(k, v)| (k.to_owned(), finite_or_max(v))).collect(),
            pass,
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

fn finite_or_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Short content hash of any serializable input description.
pub fn inputs_hash(inputs: &impl Serialize) -> String {
    let text = serde_json::to_string(inputs).expect("suite inputs serialize");
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub cases: Vec<CaseRecord>,
    /// True iff every case passes.
    pub pass: bool,
}

impl SuiteResult {
    pub fn new(suite: Suite, cases: Vec<CaseRecord>) -> Self {
        let pass = !cases.is_empty() && cases.iter().all(|c| c.pass);
        SuiteResult { suite, cases, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases.iter().filter(|c| !c.pass)
    }

    /// Cases whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CaseRecord> + 'a {
        self.cases.iter().filter(move |c| c.name.starts_with(prefix))
    }

    /// Largest value of a metric over the cases that report it.
    pub fn max_metric(&self, key: &str) -> Option<f64> {
        self.cases.iter().filter_map(|c| c.metric(key)).reduce(f64::max)
    }
}

/// Wall time of one suite run, kept out of the result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteTiming {
    pub suite: Suite,
    pub wall_seconds: f64,
}

/// Parameters of every suite; the defaults are the acceptance scale.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfigs {
    pub fourier: FourierSuite,
    pub stft: StftSuite,
    pub weights: WeightsSuite,
    pub classes: ClassesSuite,
    pub invariance: InvarianceSuite,
    pub covariance: CovarianceSuite,
    pub boundedness: BoundednessSuite,
    pub gs_continuity: GsContinuitySuite,
    pub oracle_quadrature: OracleSuite,
}

impl SuiteConfigs {
    /// Replaces every battery and plan seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fourier.battery.seed = seed;
        self.stft.battery.seed = seed;
        self.invariance.battery.seed = seed;
        self.covariance.plan_seed = seed;
        self.boundedness.seed = seed;
        self.gs_continuity.battery.seed = seed;
        self
    }

    pub fn run(&self, suite: Suite) -> Result<SuiteResult> {
        match suite {
            Suite::Fourier => self.fourier.run(),
            Suite::Stft => self.stft.run(),
            Suite::Weights => self.weights.run(),
            Suite::Classes => self.classes.run(),
            Suite::Invariance => self.invariance.run(),
            Suite::Covariance => self.covariance.run(),
            Suite::Boundedness => self.boundedness.run(),
            Suite::GsContinuity => self.gs_continuity.run(),
            Suite::OracleQuadrature => self.oracle_quadrature.run(),
        }
    }

    pub fn run_timed(&self, suite: Suite) -> Result<(SuiteResult, SuiteTiming)> {
        let start = Instant::now();
        let result = self.run(suite)?;
        let timing = SuiteTiming {
            suite,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("suite {suite}: pass = {}, {:.1} s", result.pass, timing.wall_seconds);
        Ok((result, timing))
    }
}

fn line(axis: AxisSpec) -> Result<GridSpec> {
    GridSpec::new(vec![axis])
}

fn pair(r: f64, t: f64) -> QuantizationPair {
    QuantizationPair { r, t }
}

/// A test signal of the Fourier suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Signal {
    Function(FunctionSpec),
    /// `sum_k c_k exp(i k dxi x)` over lattice frequencies.
    Trigonometric { modes: Vec<(i64, [f64; 2])> },
}

impl Signal {
    fn sample(&self, grid: &GridSpec) -> Result<SampledField> {
        match self {
            Signal::Function(f) => f.sample(grid),
            Signal::Trigonometric { modes } => {
                let dxi = grid.axes[0].dual().spacing();
                SampledField::from_fn(grid.clone(), |x| {
                    modes
                        .iter()
                        .map(|(k, c)| Complex64::new(c[0], c[1]) * Complex64::from_polar(1.0, *k as f64 * dxi * x[0]))
                        .sum()
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FourierSuite {
    pub half_width: f64,
    pub points: usize,
    pub battery: BatteryConfig,
    /// Number of seeded trigonometric polynomials.
    pub bandlimited: usize,
    pub modes_per_signal: usize,
    pub tolerance: f64,
}

impl Default for FourierSuite {
    fn default() -> Self {
        FourierSuite {
            half_width: 12.0,
            points: 256,
            battery: BatteryConfig::default(),
            bandlimited: 4,
            modes_per_signal: 5,
            tolerance: 1e-12,
        }
    }
}

impl FourierSuite {
    fn signals(&self, axis: AxisSpec) -> Result<Vec<(String, Signal)>> {
        let mut out: Vec<(String, Signal)> = scaled_gaussians(axis, &self.battery)?
            .into_iter()
            .enumerate()
            .map(|(k, f)| (format!("gaussian-{k}"), Signal::Function(f)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.battery.seed ^ 0xb4d1);
        let kmax = (axis.points / 4) as i64;
        for k in 0..self.bandlimited {
            let modes = (0..self.modes_per_signal)
                .map(|_| (rng.gen_range(-kmax..=kmax), [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            out.push((format!("bandlimited-{k}"), Signal::Trigonometric { modes }));
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::new(self.half_width, self.points)?;
        let grid = line(axis)?;
        let sel = AxisSelection::all(1);
        let mut cases = Vec::new();
        for (name, sig) in self.signals(axis)? {
            let f = sig.sample(&grid)?;
            let fh = forward_ft(&f, &sel)?;
            let back = inverse_ft(&fh, &sel)?;
            let inversion = back.rel_l2_error(&f)?;
            let parseval = (fh.norm_l2() - f.norm_l2()).abs() / f.norm_l2();
            let pass = inversion <= self.tolerance && parseval <= self.tolerance;
            cases.push(CaseRecord::new(
                name,
                &(axis, &sig),
                vec![("inversion_rel_error", inversion), ("parseval_rel_error", parseval)],
                pass,
            ));
        }
        // The unit Gaussian is its own transform.
        let g = FunctionSpec::gaussian(0.0, 0.0, 1.0);
        let gh = forward_ft(&g.sample(&grid)?, &sel)?;
        let expect = g.sample(&GridSpec::new(vec![axis.dual()])?)?;
        let err = gh.max_abs_diff(&expect)?;
        cases.push(CaseRecord::new(
            "gaussian-fixed-point",
            &(axis, &g),
            vec![("max_abs_error", err)],
            err <= self.tolerance,
        ));
        Ok(SuiteResult::new(Suite::Fourier, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftSuite {
    pub half_width: f64,
    pub points: usize,
    pub window_width: f64,
    pub battery: BatteryConfig,
    pub roundtrip_tolerance: f64,
    pub moyal_tolerance: f64,
}

impl Default for StftSuite {
    fn default() -> Self {
        StftSuite {
            half_width: 12.0,
            points: 128,
            window_width: 1.0,
            battery: BatteryConfig::default(),
            roundtrip_tolerance: 1e-9,
            moyal_tolerance: 1e-10,
        }
    }
}

impl StftSuite {
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::new(self.half_width, self.points)?;
        let grid = line(axis)?;
        let window = gaussian_window(&grid, self.window_width)?;
        let two = MixedExponents::new(2.0, 2.0)?;
        let members = scaled_gaussians(axis, &self.battery)?;
        let cases = members
            .par_iter()
            .enumerate()
            .map(|(k, spec)| -> Result<CaseRecord> {
                let f = spec.sample(&grid)?;
                let v = stft(&f, &window)?;
                let roundtrip = stft_adjoint_invert(&v, &window)?.rel_l2_error(&f)?;
                let expect = f.norm_l2() * window.norm_l2();
                let moyal = (mixed_norm(&v, &WeightModel::trivial(), two)? - expect).abs() / expect;
                Ok(CaseRecord::new(
                    format!("gaussian-{k}"),
                    &(axis, self.window_width, spec),
                    vec![("roundtrip_rel_error", roundtrip), ("moyal_rel_error", moyal)],
                    roundtrip <= self.roundtrip_tolerance && moyal <= self.moyal_tolerance,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SuiteResult::new(Suite::Stft, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCase {
    pub name: String,
    pub model: WeightModel,
    /// Number of axes of the evaluation grid.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightsSuite {
    pub half_width: f64,
    pub points_1d: usize,
    pub points_2d: usize,
    pub s: f64,
    pub max_order: usize,
    /// The fit is repeated on a box this many times wider at equal spacing.
    pub box_growth: f64,
    /// Largest accepted growth of the constant and of the fitted `h` on the wider box.
    pub growth_tolerance: f64,
    pub models: Vec<WeightCase>,
}

impl Default for WeightsSuite {
    fn default() -> Self {
        let case = |name: &str, model, rank| WeightCase {
            name: name.into(),
            model,
            rank,
        };
        WeightsSuite {
            half_width: 12.0,
            points_1d: 256,
            points_2d: 96,
            s: 0.5,
            max_order: 2,
            box_growth: 2.0,
            growth_tolerance: 1.25,
            models: vec![
                case("polynomial-growth", WeightModel::polynomial(vec![0], 2.0), 1),
                case("polynomial-decay", WeightModel::polynomial(vec![0], -1.5), 1),
                case("exponential", WeightModel::exponential(vec![0], 0.5, 1.0), 1),
                case("subexponential-phase-space", WeightModel::exponential(vec![0, 1], 1.0, 0.5), 2),
            ],
        }
    }
}

impl WeightsSuite {
    fn grid(&self, rank: usize, scale: f64) -> Result<GridSpec> {
        let n = if rank == 1 { self.points_1d } else { self.points_2d };
        let m = (n as f64 * scale / 2.0).round() as usize * 2;
        GridSpec::uniform(self.half_width * m as f64 / n as f64, m, rank)
    }

    pub fn run(&self) -> Result<SuiteResult> {
        let cases = self
            .models
            .iter()
            .map(|case| -> Result<CaseRecord> {
                let s = vec![self.s; case.rank];
                let base = fit_smoothness(&case.model, &s, &self.grid(case.rank, 1.0)?, self.max_order)?;
                let wide = fit_smoothness(&case.model, &s, &self.grid(case.rank, self.box_growth)?, self.max_order)?;
                let c_growth = wide.constant / base.constant;
                let h_growth = wide.h_fit / base.h_fit;
                let pass = base.constant.is_finite()
                    && base.h_fit.is_finite()
                    && c_growth <= self.growth_tolerance
                    && h_growth <= self.growth_tolerance;
                Ok(CaseRecord::new(
                    case.name.clone(),
                    &(self.half_width, self.s, self.max_order, case),
                    vec![
                        ("constant", base.constant),
                        ("ratio_min", base.ratio_min),
                        ("ratio_max", base.ratio_max),
                        ("h_fit", base.h_fit),
                        ("constant_wide_box", wide.constant),
                        ("h_fit_wide_box", wide.h_fit),
                    ],
                    pass,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SuiteResult::new(Suite::Weights, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassesSuite {
    /// Points per axis of the balanced symbol grid.
    pub points: usize,
    pub max_order: usize,
    pub window_width: f64,
    pub batch: usize,
    pub spec: GevreyClassSpec,
    pub modspace_q: Exponent,
    /// Targets of the conversion-invariance cases, all from `(0,0)`.
    pub conversion_pairs: Vec<QuantizationPair>,
}

impl Default for ClassesSuite {
    fn default() -> Self {
        ClassesSuite {
            points: 48,
            max_order: 6,
            window_width: 1.0,
            batch: 2000,
            spec: GevreyClassSpec::gaussian_class_spec(),
            modspace_q: Exponent::Finite(2.0),
            conversion_pairs: vec![pair(0.5, 0.5), pair(1.0 / 3.0, 1.0 / 3.0), pair(1.0, 0.0)],
        }
    }
}

impl ClassesSuite {
    /// Cases `verdicts/<symbol>` compare the three verdicts with the expected
    /// membership; cases `conversion/<symbol>` compare the ladder verdict
    /// before and after conversion.
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::balanced(self.points)?;
        let grid = GridSpec::symbol_grid(axis)?;
        let window = gaussian_window(&grid, self.window_width)?;
        let plan = StftSamplingPlan::standard(&grid, &DEFAULT_RAY_RADII, self.batch, 0)?;
        let kn = QuantizationPair::KOHN_NIRENBERG;
        let mut cases = Vec::new();
        for case in class_battery() {
            let a = case.symbol.sample_on(&grid)?;
            let ladder = gamma_norm_estimate(&a, &self.spec, self.max_order)?;
            let samples = sample_stft(&a, &window, &self.spec.weight, &plan)?;
            let decay = fit_class_decay(&samples, &self.spec, &[])?;
            let modspace = modspace_verdict(&samples, &self.spec, self.modspace_q)?;
            let verdicts = [ladder.pass, decay.pass, modspace.finite];
            let inputs = (axis, &case, &self.spec, self.max_order, self.window_width, self.batch, self.modspace_q);
            cases.push(CaseRecord::new(
                format!("verdicts/{}", case.symbol.name),
                &inputs,
                vec![
                    ("expected_in_class", flag(case.in_class)),
                    ("ladder_verdict", flag(ladder.pass)),
                    ("stft_decay_verdict", flag(decay.pass)),
                    ("modspace_verdict", flag(modspace.finite)),
                    ("h_fit", ladder.h_fit),
                    ("decay_rate", decay.common_rate),
                    ("modspace_ratio", modspace.ratio),
                ],
                verdicts.iter().all(|&v| v == case.in_class),
            ));
            let mut metrics = vec![("h_fit", ladder.h_fit)];
            let mut same = true;
            let keys: Vec<String> = self.conversion_pairs.iter().map(|p| format!("h_fit_{}", p.tag())).collect();
            for (p, key) in self.conversion_pairs.iter().zip(&keys) {
                let b = convert_symbol(&a, kn, *p)?;
                let rep = gamma_norm_estimate(&b, &self.spec, self.max_order)?;
                same &= rep.pass == ladder.pass;
                metrics.push((key.as_str(), rep.h_fit));
            }
            cases.push(CaseRecord::new(
                format!("conversion/{}", case.symbol.name),
                &(inputs, &self.conversion_pairs),
                metrics,
                same,
            ));
        }
        Ok(SuiteResult::new(Suite::Classes, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvarianceSuite {
    pub half_width: f64,
    pub points: usize,
    pub battery: BatteryConfig,
    pub combos: Vec<(QuantizationPair, QuantizationPair)>,
    pub pathway: InvariancePathway,
    pub tolerance: f64,
    /// Also run with half the spacing and require the worst error to drop by this factor.
    pub refine: bool,
    pub min_improvement: f64,
}

impl Default for InvarianceSuite {
    fn default() -> Self {
        InvarianceSuite {
            half_width: 16.0,
            points: 64,
            battery: BatteryConfig::default(),
            combos: vec![
                (pair(0.0, 0.0), pair(0.5, 0.5)),
                (pair(0.5, 0.5), pair(0.0, 0.0)),
                (pair(0.5, 0.0), pair(0.0, 0.5)),
                (pair(1.0 / 3.0, 1.0 / 3.0), pair(1.0, 0.0)),
            ],
            pathway: InvariancePathway::Reference,
            tolerance: 1e-7,
            refine: true,
            min_improvement: 4.0,
        }
    }
}

impl InvarianceSuite {
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::new(self.half_width, self.points)?;
        let manifest = gaussian_pairs(axis, &self.battery)?;
        let coarse = manifest.sample()?;
        let fine_axis = AxisSpec::new(self.half_width, 2 * self.points)?;
        let fine_manifest = manifest.with_axis(fine_axis);
        let fine = if self.refine { Some(fine_manifest.sample()?) } else { None };
        let mut cases = Vec::new();
        let (mut worst_coarse, mut worst_fine) = (0.0f64, 0.0f64);
        for symbol in invariance_symbols() {
            let reps = verify_invariance(
                &symbol,
                axis,
                &self.combos,
                &coarse,
                &manifest.id(),
                self.pathway,
                self.tolerance,
            )?;
            let fine_reps = match &fine {
                Some(b) => Some(verify_invariance(
                    &symbol,
                    fine_axis,
                    &self.combos,
                    b,
                    &fine_manifest.id(),
                    self.pathway,
                    self.tolerance,
                )?),
                None => None,
            };
            for (k, rep) in reps.iter().enumerate() {
                worst_coarse = worst_coarse.max(rep.rel_error);
                let mut metrics = vec![("rel_error", rep.rel_error)];
                if let Some(fr) = &fine_reps {
                    worst_fine = worst_fine.max(fr[k].rel_error);
                    metrics.push(("rel_error_refined", fr[k].rel_error));
                }
                cases.push(CaseRecord::new(
                    format!("{}/{}->{}", symbol.name, rep.pair_from.tag(), rep.pair_to.tag()),
                    &(axis, &symbol, rep.pair_from, rep.pair_to, &rep.test_battery_id, self.pathway),
                    metrics,
                    rep.pass,
                ));
            }
        }
        if self.refine {
            let improvement = worst_coarse / worst_fine;
            cases.push(CaseRecord::new(
                "refinement",
                &(axis, fine_axis, manifest.id()),
                vec![
                    ("worst_rel_error", worst_coarse),
                    ("worst_rel_error_refined", worst_fine),
                    ("improvement", improvement),
                ],
                improvement >= self.min_improvement,
            ));
        }
        Ok(SuiteResult::new(Suite::Invariance, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovarianceSuite {
    /// Points per axis of the balanced symbol grid.
    pub points: usize,
    pub plan_points: usize,
    /// Plan indices stay within this fraction of each half-width.
    pub plan_fraction: f64,
    pub plan_seed: u64,
    pub window_width: f64,
    pub pairs: Vec<QuantizationPair>,
    pub tolerance: f64,
    /// Also evaluate the identity with the opposite shift direction, as a diagnostic.
    pub report_opposite_sign: bool,
}

impl Default for CovarianceSuite {
    fn default() -> Self {
        CovarianceSuite {
            points: 48,
            plan_points: 1000,
            plan_fraction: 0.5,
            plan_seed: DEFAULT_BATTERY_SEED,
            window_width: 1.0,
            pairs: vec![pair(0.5, 0.5), pair(1.0 / 3.0, 1.0 / 3.0)],
            tolerance: 1e-8,
            report_opposite_sign: true,
        }
    }
}

impl CovarianceSuite {
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::balanced(self.points)?;
        let grid = GridSpec::symbol_grid(axis)?;
        let window = gaussian_window(&grid, self.window_width)?;
        let plan = CovariancePlan::seeded(&grid, self.plan_points, self.plan_fraction, self.plan_seed);
        let mut cases = Vec::new();
        for symbol in covariance_symbols() {
            let a = symbol.sample(axis)?;
            for &p in &self.pairs {
                let rep = stft_covariance_check_signed(&a, &window, p, &plan, 1.0)?;
                let mut metrics = vec![
                    ("max_deviation", rep.max_deviation),
                    ("max_modulus", rep.max_modulus),
                    ("points", rep.points as f64),
                ];
                if self.report_opposite_sign {
                    let opp = stft_covariance_check_signed(&a, &window, p, &plan, -1.0)?;
                    metrics.push(("opposite_sign_deviation", opp.max_deviation));
                }
                cases.push(CaseRecord::new(
                    format!("{}/{}", symbol.name, p.tag()),
                    &(axis, &symbol, p, self.window_width, &plan),
                    metrics,
                    rep.max_deviation <= self.tolerance,
                ));
            }
        }
        Ok(SuiteResult::new(Suite::Covariance, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCase {
    pub name: String,
    pub symbol: SymbolSpec,
    pub pair: QuantizationPair,
    pub w0: WeightModel,
    pub w: WeightModel,
    pub pq: MixedExponents,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundednessSuite {
    pub points: usize,
    pub ambient: AmbientExponents,
    pub window_width: f64,
    pub small_battery: usize,
    pub large_battery: usize,
    pub seed: u64,
    /// Largest accepted relative change of the maximum ratio between the two batteries.
    pub max_shift: f64,
    pub cases: Vec<BoundednessCase>,
}

fn gauss(center: f64, width: f64) -> Profile {
    Profile::Gaussian { center, width }
}

impl Default for BoundednessSuite {
    fn default() -> Self {
        let two = MixedExponents::new(2.0, 2.0).expect("valid exponents");
        BoundednessSuite {
            points: 32,
            ambient: AmbientExponents {
                s1: 0.5,
                sigma2: 0.5,
                sigma3: 0.5,
            },
            window_width: 1.0,
            small_battery: 32,
            large_battery: 128,
            seed: DEFAULT_BATTERY_SEED,
            max_shift: 0.25,
            cases: vec![
                BoundednessCase {
                    name: "constant".into(),
                    symbol: SymbolSpec::constant(1.0),
                    pair: QuantizationPair::KOHN_NIRENBERG,
                    w0: WeightModel::trivial(),
                    w: WeightModel::trivial(),
                    pq: two,
                    rate: 0.05,
                },
                BoundednessCase {
                    name: "broad-gaussian-weyl".into(),
                    symbol: SymbolSpec::single("broad-gaussian", SymbolTerm::new(gauss(0.0, 4.0), gauss(0.0, 5.0), gauss(0.0, 5.0))),
                    pair: QuantizationPair::WEYL,
                    w0: WeightModel::polynomial(vec![0, 1], 0.5),
                    w: WeightModel::trivial(),
                    pq: MixedExponents::new(1.0, 1.0).expect("valid exponents"),
                    rate: 0.05,
                },
                BoundednessCase {
                    name: "broad-coupled".into(),
                    symbol: SymbolSpec::single(
                        "broad-coupled",
                        SymbolTerm::new(gauss(0.0, 4.0), gauss(0.0, 5.0), gauss(0.0, 5.0)).with_diff(gauss(0.0, 5.0)),
                    ),
                    pair: pair(1.0 / 3.0, 1.0 / 3.0),
                    w0: WeightModel::trivial(),
                    w: WeightModel::polynomial(vec![0, 1], -0.5),
                    pq: MixedExponents::new(2.0, f64::INFINITY).expect("valid exponents"),
                    rate: 0.02,
                },
            ],
        }
    }
}

impl BoundednessSuite {
    pub fn run(&self) -> Result<SuiteResult> {
        if self.small_battery == 0 || self.large_battery < self.small_battery {
            return Err(Error::InvalidParameter("battery sizes must satisfy 0 < small <= large".into()));
        }
        let axis = AxisSpec::balanced(self.points)?;
        let cfg = BatteryConfig {
            size: self.large_battery,
            seed: self.seed,
            ..BatteryConfig::default()
        };
        let manifest = gaussian_pairs(axis, &cfg)?;
        let battery = manifest.sample()?;
        let mut spec = GevreyClassSpec::gaussian_class_spec();
        spec.ambient = Some(self.ambient);
        let mut cases = Vec::new();
        for case in &self.cases {
            let setup = BoundednessSetup {
                spec: spec.clone(),
                w0: case.w0.clone(),
                w: case.w.clone(),
                pq: case.pq,
                rate: case.rate,
                window_width: self.window_width,
            };
            let a = case.symbol.sample(axis)?;
            let rep = boundedness_probe(&a, case.pair, &setup, &battery)?;
            let shift = rep.max_shift_from_prefix(self.small_battery);
            let bounded = rep.ratios.iter().all(|r| r.is_finite());
            cases.push(CaseRecord::new(
                case.name.clone(),
                &(axis, case, &setup, manifest.id(), self.small_battery),
                vec![
                    ("max_ratio", rep.max_ratio),
                    ("median_ratio", rep.median_ratio),
                    ("min_ratio", rep.min_ratio),
                    ("max_shift", shift),
                ],
                bounded && shift < self.max_shift,
            ));
        }
        Ok(SuiteResult::new(Suite::Boundedness, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsSymbolCase {
    pub symbol: SymbolSpec,
    pub pair: QuantizationPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsContinuitySuite {
    pub half_width: f64,
    pub points: usize,
    pub s: f64,
    pub sigma: f64,
    pub battery: BatteryConfig,
    pub check: GsCheckConfig,
    /// Accepted output rate.
    pub r_min: f64,
    pub symbols: Vec<GsSymbolCase>,
    /// A member outside the space, which the input gate must reject.
    pub rejected_member: FunctionSpec,
}

impl Default for GsContinuitySuite {
    fn default() -> Self {
        GsContinuitySuite {
            half_width: 12.0,
            points: 128,
            s: 1.0,
            sigma: 1.0,
            battery: BatteryConfig {
                size: 16,
                ..BatteryConfig::default()
            },
            check: GsCheckConfig::default(),
            r_min: 0.05,
            symbols: vec![
                GsSymbolCase {
                    symbol: SymbolSpec::constant(1.0),
                    pair: QuantizationPair::KOHN_NIRENBERG,
                },
                GsSymbolCase {
                    symbol: isotropic_gaussian(),
                    pair: QuantizationPair::WEYL,
                },
            ],
            rejected_member: FunctionSpec::AlgebraicTail {
                center: 0.0,
                width: 1.0,
                power: 1.0,
            },
        }
    }
}

impl GsContinuitySuite {
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::new(self.half_width, self.points)?;
        let manifest = gaussian_pairs(axis, &self.battery)?;
        let battery = manifest.sample()?;
        let mut cases = Vec::new();
        for case in &self.symbols {
            let a = case.symbol.sample(axis)?;
            let reports = gs_continuity_check(&a, case.pair, self.s, self.sigma, &battery, &self.check)?;
            let min_rate = reports.iter().map(|r| r.common_rate).fold(f64::INFINITY, f64::min);
            let all_fit = reports.iter().all(|r| r.pass);
            cases.push(CaseRecord::new(
                format!("{}/{}", case.symbol.name, case.pair.tag()),
                &(axis, case, self.s, self.sigma, &self.check, manifest.id()),
                vec![("min_output_rate", min_rate), ("outputs", reports.len() as f64)],
                all_fit && min_rate >= self.r_min,
            ));
        }
        let grid = line(axis)?;
        let tail = self.rejected_member.sample(&grid)?;
        let nested = gs_decay_nested(&tail, self.s, self.sigma, &self.check)?;
        let mut gated = battery.clone();
        gated[0].1 = tail;
        let rejected = matches!(
            gs_continuity_check(&self.symbols[0].symbol.sample(axis)?, self.symbols[0].pair, self.s, self.sigma, &gated, &self.check),
            Err(Error::InvalidParameter(_))
        );
        cases.push(CaseRecord::new(
            "gate-rejects-slow-tail",
            &(axis, &self.rejected_member, &self.check),
            vec![
                ("rate_full_lattice", nested.full.common_rate),
                ("rate_inner_box", nested.inner.common_rate),
            ],
            rejected,
        ));
        Ok(SuiteResult::new(Suite::GsContinuity, cases))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSuite {
    /// Points of the balanced grid used against the four-fold quadrature.
    pub points: usize,
    pub pairs: Vec<QuantizationPair>,
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub tolerance: f64,
    /// Points of the balanced grid of the dense-matrix case.
    pub offset_points: usize,
    pub offset_tolerance: f64,
}

impl Default for OracleSuite {
    fn default() -> Self {
        OracleSuite {
            points: 16,
            pairs: vec![pair(1.0, 0.0), pair(0.0, 1.0)],
            f: FunctionSpec::gaussian(0.3, 0.5, 0.8),
            g: FunctionSpec::gaussian(-0.2, -0.4, 0.9),
            tolerance: 1e-6,
            offset_points: 64,
            offset_tolerance: 1e-8,
        }
    }
}

/// Dense matrix of the linear operator with symbol `x xi` in the `t = 1/2`
/// form, `M[j][k] = dx dxi / (2 pi) sum_m ((x_j + y_k) / 2) xi_m e^{i (x_j - y_k) xi_m}`.
fn midpoint_x_xi_matrix(axis: &AxisSpec) -> Vec<Complex64> {
    let n = axis.points;
    let dual = axis.dual();
    let c = axis.spacing() * dual.spacing() / (2.0 * PI);
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let xj = axis.coordinate(j);
        for k in 0..n {
            let yk = axis.coordinate(k);
            let s: Complex64 = (0..n)
                .map(|q| {
                    let xi = dual.coordinate(q);
                    Complex64::from_polar(xi, (xj - yk) * xi)
                })
                .sum();
            m[j * n + k] = s * (0.5 * (xj + yk)) * c;
        }
    }
    m
}

impl OracleSuite {
    pub fn run(&self) -> Result<SuiteResult> {
        let axis = AxisSpec::balanced(self.points)?;
        let grid = line(axis)?;
        let f = self.f.sample(&grid)?;
        let g = self.g.sample(&grid)?;
        let mut cases = Vec::new();
        for symbol in invariance_symbols() {
            let a = symbol.sample(axis)?;
            for &p in &self.pairs {
                let fast = apply_bilinear(&a, p, &f, &g)?;
                let direct = apply_bilinear_direct_fn(|x, xi, eta| symbol.eval(x, xi, eta), p, &f, &g)?;
                let err = fast.rel_l2_error(&direct)?;
                cases.push(CaseRecord::new(
                    format!("{}/{}", symbol.name, p.tag()),
                    &(axis, &symbol, p, &self.f, &self.g),
                    vec![("rel_error", err)],
                    err <= self.tolerance,
                ));
            }
        }
        // Op_{(1/2,0)}(x xi) equals Op_{(0,0)}(x xi - i/2).
        let axis = AxisSpec::balanced(self.offset_points)?;
        let grid = line(axis)?;
        let f = self.f.sample(&grid)?;
        let g = self.g.sample(&grid)?;
        let n = axis.points;
        let m = midpoint_x_xi_matrix(&axis);
        let dense: Vec<Complex64> = (0..n)
            .map(|j| {
                let mf: Complex64 = (0..n).map(|k| m[j * n + k] * f.values()[k]).sum();
                mf * g.values()[j]
            })
            .collect();
        let dense = SampledField::new(grid.clone(), dense, f.roles().to_vec())?;
        let shifted = SymbolSpec::new(
            "x-xi-minus-half-i",
            vec![
                SymbolTerm::new(Profile::Linear, Profile::Linear, Profile::One),
                SymbolTerm::new(Profile::One, Profile::One, Profile::One).with_coef(Complex64::new(0.0, -0.5)),
            ],
        );
        let kn = apply_bilinear(&shifted.sample(axis)?, QuantizationPair::KOHN_NIRENBERG, &f, &g)?;
        let err = kn.rel_l2_error(&dense)?;
        let mut opposite = shifted.clone();
        opposite.terms[1].coef[1] = 0.5;
        let kn_opposite = apply_bilinear(&opposite.sample(axis)?, QuantizationPair::KOHN_NIRENBERG, &f, &g)?;
        let err_opposite = kn_opposite.rel_l2_error(&dense)?;
        cases.push(CaseRecord::new(
            "x-xi-offset",
            &(axis, &shifted, &self.f, &self.g),
            vec![("rel_error", err), ("opposite_offset_rel_error", err_opposite)],
            err <= self.offset_tolerance,
        ));
        Ok(SuiteResult::new(Suite::OracleQuadrature, cases))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn aggregate_pass_needs_every_case() {
        let ok = CaseRecord::new("a", &1, vec![("m", 1.0)], true);
        let bad = CaseRecord::new("b", &2, vec![("m", f64::INFINITY)], false);
        assert!(SuiteResult::new(Suite::Fourier, vec![ok.clone()]).pass);
        let r = SuiteResult::new(Suite::Fourier, vec![ok, bad]);
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.max_metric("m"), Some(f64::MAX));
        assert!(!SuiteResult::new(Suite::Fourier, vec![]).pass);
    }

    #[test]
    fn configs_accept_partial_json() {
        let c: SuiteConfigs = serde_json::from_str(r#"{"fourier":{"points":64}}"#).unwrap();
        assert_eq!(c.fourier.points, 64);
        assert_eq!(c.fourier.half_width, 12.0);
        assert_eq!(c.invariance, InvarianceSuite::default());
    }
}
