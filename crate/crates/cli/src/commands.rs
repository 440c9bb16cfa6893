use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use bilinear_pdo::battery::gaussian_pairs;
use bilinear_pdo::harness::{Suite, SuiteConfigs};
use bilinear_pdo::io::read_field;
use bilinear_pdo::quantization::{apply_bilinear, apply_linear, convert_symbol};
use bilinear_pdo::symbols::{
    fit_class_decay, gamma_norm_estimate, modspace_verdict, sample_stft, ClassNormReport, ModspaceVerdict,
    StftSamplingPlan, DEFAULT_RAY_RADII,
};
use bilinear_pdo::timefreq::{
    gaussian_window, mixed_norm_scaled, stft, window_id, DecayFitReport, Exponent, MixedExponents,
};
use bilinear_pdo::weights::{fit_smoothness, smooth_weight, SmoothnessReport, WeightModel};
use bilinear_pdo::{GridSpec, SampledField};
use serde::Serialize;

use crate::config::{
    load, usage, ApplyConfig, ClassifyConfig, ConvertConfig, Loaded, ModnormConfig, SampleConfig, SampleItem,
    SmoothWeightConfig, StftConfig, WindowDomain, WindowSource,
};
use crate::output::Outputs;

/// Whether a command's checks passed; failures exit with code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

pub struct Common<'a> {
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out_dir: &'a Path,
}

impl Common<'_> {
    fn config<T: serde::de::DeserializeOwned>(&self) -> anyhow::Result<Loaded<T>> {
        let path = self.config.ok_or_else(|| usage("this command needs --config"))?;
        load(path)
    }
}

fn read(cfg: &Loaded<impl Sized>, p: &Path) -> anyhow::Result<SampledField> {
    let path = cfg.input(p);
    Ok(read_field(&path)?.0)
}

pub fn sample(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<SampleConfig> = c.config()?;
    let v = &cfg.value;
    let axis = v.axis.spec()?;
    let line = GridSpec::new(vec![axis])?;
    let mut out = Outputs::new(c.out_dir)?;
    match &v.sample {
        SampleItem::Function { function } => {
            out.field(&v.output, &function.sample(&line)?, None)?;
        }
        SampleItem::Symbol { symbol } => {
            out.field(&v.output, &symbol.sample(axis)?, None)?;
        }
        SampleItem::Window { width, domain } => {
            let grid = match domain {
                WindowDomain::Line => line,
                WindowDomain::Symbol => GridSpec::symbol_grid(axis)?,
            };
            let w = gaussian_window(&grid, *width)?;
            let w = if *domain == WindowDomain::Symbol {
                w.with_roles(
                    [bilinear_pdo::AxisRole::Space, bilinear_pdo::AxisRole::Frequency, bilinear_pdo::AxisRole::Frequency]
                        .to_vec(),
                )?
            } else {
                w
            };
            out.field(&v.output, &w, None)?;
        }
        SampleItem::Battery { battery } => {
            let mut bc = *battery;
            if let Some(seed) = c.seed {
                bc.seed = seed;
            }
            let manifest = gaussian_pairs(axis, &bc)?;
            for (k, (f, g)) in manifest.sample()?.iter().enumerate() {
                out.field(&format!("{}-f{k}", v.output), f, None)?;
                out.field(&format!("{}-g{k}", v.output), g, None)?;
            }
            #[derive(Serialize)]
            struct Manifest<'a> {
                id: String,
                #[serde(flatten)]
                manifest: &'a bilinear_pdo::battery::BatteryManifest,
            }
            out.json(
                &format!("{}-manifest.json", v.output),
                &Manifest {
                    id: manifest.id(),
                    manifest: &manifest,
                },
            )?;
        }
    }
    out.keep();
    Ok(Status::Pass)
}

pub fn stft_cmd(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<StftConfig> = c.config()?;
    let v = &cfg.value;
    let f = read(&cfg, &v.input)?;
    let window = read(&cfg, &v.window)?;
    let ps = stft(&f, &window)?;
    let grid = ps.base.grid().clone();
    let rank = grid.rank();
    let mut out = Outputs::new(c.out_dir)?;
    out.field(&v.output, &ps.base, Some(&ps.window_id))?;
    for (k, s) in v.slices.iter().enumerate() {
        if s.axis >= rank {
            return Err(usage(format!("slice axis {} exceeds phase-space rank {rank}", s.axis)));
        }
        let at = s.at.clone().unwrap_or_else(|| vec![0.0; rank]);
        if at.len() != rank {
            return Err(usage(format!("slice point needs {rank} coordinates, got {}", at.len())));
        }
        let mut idx: Vec<usize> = grid.axes.iter().zip(&at).map(|(a, x)| a.nearest_index(*x)).collect();
        let mut csv = String::from("axis,value,modulus\n");
        let ax = grid.axes[s.axis];
        for j in 0..ax.points {
            idx[s.axis] = j;
            let value = ps.base.get(&idx);
            writeln!(csv, "{},{},{}", s.axis, ax.coordinate(j), value.norm()).unwrap();
        }
        let name = s.name.clone().unwrap_or_else(|| format!("{}-slice{k}", v.output));
        out.text(&format!("{name}.csv"), &csv)?;
    }
    out.keep();
    Ok(Status::Pass)
}

pub fn convert(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<ConvertConfig> = c.config()?;
    let v = &cfg.value;
    v.from.validate()?;
    v.to.validate()?;
    let a = read(&cfg, &v.input)?;
    let b = convert_symbol(&a, v.from, v.to)?;
    let mut out = Outputs::new(c.out_dir)?;
    out.field(&v.output, &b, None)?;
    out.keep();
    Ok(Status::Pass)
}

pub fn apply(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<ApplyConfig> = c.config()?;
    let v = &cfg.value;
    let a = read(&cfg, &v.symbol)?;
    let f = read(&cfg, &v.f)?;
    let result = match a.rank() {
        2 => {
            if v.g.is_some() {
                return Err(usage("a linear symbol takes no second argument g"));
            }
            apply_linear(&a, v.t, &f)?
        }
        3 => {
            v.pair.validate()?;
            let g = v.g.as_ref().ok_or_else(|| usage("a bilinear symbol needs g"))?;
            let g = read(&cfg, g)?;
            apply_bilinear(&a, v.pair, &f, &g)?
        }
        r => return Err(usage(format!("symbols have 2 or 3 axes, got {r}"))),
    };
    let mut out = Outputs::new(c.out_dir)?;
    out.field(&v.output, &result, None)?;
    out.keep();
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct ModnormReport {
    /// `None` when the norm overflows a double; `log_norm` is always finite.
    norm: Option<f64>,
    log_norm: f64,
    p: Exponent,
    q: Exponent,
    weight: WeightModel,
    window_id: String,
}

pub fn modnorm(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<ModnormConfig> = c.config()?;
    let v = &cfg.value;
    let f = read(&cfg, &v.input)?;
    let window = match &v.window {
        WindowSource::File(p) => read(&cfg, p)?,
        WindowSource::Width { width } => gaussian_window(f.grid(), *width)?,
    };
    let ps = stft(&f, &window)?;
    let n = mixed_norm_scaled(&ps, &v.weight, MixedExponents { p: v.p, q: v.q })?;
    let report = ModnormReport {
        norm: n.value().ok(),
        log_norm: n.ln(),
        p: v.p,
        q: v.q,
        weight: v.weight.clone(),
        window_id: window_id(&window),
    };
    let mut out = Outputs::new(c.out_dir)?;
    out.json(&v.output, &report)?;
    out.keep();
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct ClassifyReport {
    in_class: bool,
    verdicts_agree: bool,
    ladder: ClassNormReport,
    stft_decay: DecayFitReport,
    modspace: ModspaceVerdict,
}

/// Exit status fails only when the three verdicts disagree.
pub fn classify(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<ClassifyConfig> = c.config()?;
    let v = &cfg.value;
    v.spec.validate()?;
    let a = read(&cfg, &v.symbol)?;
    let ladder = gamma_norm_estimate(&a, &v.spec, v.max_order)?;
    let window = gaussian_window(a.grid(), v.window_width)?;
    let plan = StftSamplingPlan::standard(a.grid(), &DEFAULT_RAY_RADII, v.batch, 0)?;
    let samples = sample_stft(&a, &window, &v.spec.weight, &plan)?;
    let stft_decay = fit_class_decay(&samples, &v.spec, &[])?;
    let modspace = modspace_verdict(&samples, &v.spec, v.modspace_q)?;
    let verdicts_agree = ladder.pass == stft_decay.pass && ladder.pass == modspace.finite;
    let report = ClassifyReport {
        in_class: verdicts_agree && ladder.pass,
        verdicts_agree,
        ladder,
        stft_decay,
        modspace,
    };
    let mut out = Outputs::new(c.out_dir)?;
    out.json(&v.output, &report)?;
    out.keep();
    Ok(if verdicts_agree { Status::Pass } else { Status::Fail })
}

pub fn smooth_weight_cmd(c: &Common) -> anyhow::Result<Status> {
    let cfg: Loaded<SmoothWeightConfig> = c.config()?;
    let v = &cfg.value;
    let axes = v.axes.iter().map(|a| a.spec()).collect::<anyhow::Result<Vec<_>>>()?;
    let grid = GridSpec::new(axes)?;
    let smoothed = smooth_weight(&v.weight, &v.s, &grid)?;
    let report: SmoothnessReport = fit_smoothness(&v.weight, &v.s, &grid, v.max_order)?;
    let mut out = Outputs::new(c.out_dir)?;
    out.field(&v.output, &smoothed.omega0, None)?;
    out.json(&format!("{}.report.json", v.output), &report)?;
    out.keep();
    Ok(Status::Pass)
}

pub fn verify(c: &Common, suites: &[String]) -> anyhow::Result<Status> {
    let mut configs: SuiteConfigs = match c.config {
        Some(p) => load(p)?.value,
        None => SuiteConfigs::default(),
    };
    if let Some(seed) = c.seed {
        configs = configs.with_seed(seed);
    }
    let selected: Vec<Suite> = if suites.iter().any(|s| s == "all") {
        Suite::ALL.to_vec()
    } else {
        suites
            .iter()
            .map(|s| s.parse::<Suite>())
            .collect::<Result<_, _>>()?
    };
    if selected.is_empty() {
        return Err(usage("name at least one suite, or `all`"));
    }
    let mut out = Outputs::new(c.out_dir)?;
    let mut all = true;
    for suite in selected {
        log::info!("running suite {suite}");
        let (result, timing) = configs.run_timed(suite).with_context(|| format!("suite {suite}"))?;
        for case in result.failures() {
            log::warn!("{suite}: case {} failed: {:?}", case.name, case.metrics);
        }
        println!(
            "{} {suite}: {}/{} cases, {:.1}s",
            if result.pass { "PASS" } else { "FAIL" },
            result.cases.iter().filter(|c| c.pass).count(),
            result.cases.len(),
            timing.wall_seconds
        );
        out.json(&format!("{suite}.json"), &result)?;
        out.json(&format!("{suite}.timing.json"), &timing)?;
        all &= result.pass;
    }
    out.keep();
    Ok(if all { Status::Pass } else { Status::Fail })
}
