//! Run configuration: a flat key-value document parsed strictly, with
//! defaults filled and every value validated before any work starts.

use std::path::PathBuf;

use serde::Deserialize;
use ssh_ion_core::{CouplingForm, CouplingModel, Error, Result};

/// Experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Dressed coupling matrix of the open chain.
    Couplings,
    /// Sorted one-excitation spectrum.
    Spectrum,
    /// Midgap detection, boundary profiles, and the localization fit.
    Edge,
    /// Bulk winding of the two-band model.
    Zak,
    /// Predicted versus fitted localization length across a grid.
    Locsweep,
    /// Long-time survival of a boundary excitation.
    Survival,
    /// Half-chain-sector exact ground state and end-to-end correlator.
    Groundstate,
    /// Mean-field ground state and quasiparticle weight.
    Hartreefock,
    /// Fidelity of the time-averaged model against the driven chain.
    FloquetVerify,
}

impl Experiment {
    /// Name used in file stems and error context.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Couplings => "couplings",
            Experiment::Spectrum => "spectrum",
            Experiment::Edge => "edge",
            Experiment::Zak => "zak",
            Experiment::Locsweep => "locsweep",
            Experiment::Survival => "survival",
            Experiment::Groundstate => "groundstate",
            Experiment::Hartreefock => "hartreefock",
            Experiment::FloquetVerify => "floquet-verify",
        }
    }
}

/// Model parameter a sweep may scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eta,
    Phi,
    DeltaBand,
    G,
    #[serde(rename = "t_c")]
    TC,
    Kd,
    OmegaRabi,
    OmegaDrive,
}

impl SweepParameter {
    /// Config key of the parameter, also the sweep column label.
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eta => "eta",
            SweepParameter::Phi => "phi",
            SweepParameter::DeltaBand => "delta_band",
            SweepParameter::G => "g",
            SweepParameter::TC => "t_c",
            SweepParameter::Kd => "kd",
            SweepParameter::OmegaRabi => "omega_rabi",
            SweepParameter::OmegaDrive => "omega_drive",
        }
    }

    /// Returns a copy of `model` with this parameter set to `value`,
    /// revalidated.
    pub fn applied(self, model: &CouplingModel, value: f64) -> Result<CouplingModel> {
        let mut out = model.clone();
        match self {
            SweepParameter::Eta => out.eta = value,
            SweepParameter::Phi => out.phi = value,
            SweepParameter::DeltaBand => out.delta_band = value,
            SweepParameter::G => out.g = value,
            SweepParameter::TC => out.t_c = value,
            SweepParameter::Kd => out.kd = value,
            SweepParameter::OmegaRabi => out.omega_rabi = value,
            SweepParameter::OmegaDrive => out.omega_drive = value,
        }
        out.validate()?;
        Ok(out)
    }
}

/// Output file format for result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Validated evenly spaced parameter grid.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    /// Grid values, inclusive of both endpoints.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.stop
                } else {
                    self.start + k as f64 * step
                }
            })
            .collect()
    }
}

/// On-disk document: one flat table, every key optional except the
/// experiment.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    n_sites: Option<usize>,
    g: Option<f64>,
    t_c: Option<f64>,
    delta_band: Option<f64>,
    eta: Option<f64>,
    phi: Option<f64>,
    kd: Option<f64>,
    omega_rabi: Option<f64>,
    omega_drive: Option<f64>,
    coupling_form: Option<CouplingForm>,
    sweep: Option<SweepParameter>,
    sweep_start: Option<f64>,
    sweep_stop: Option<f64>,
    sweep_points: Option<usize>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: CouplingModel,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub format: OutputFormat,
}

/// Parses a flat TOML document into a run description.
///
/// Unknown keys and type mismatches are rejected with the offending key
/// and line; out-of-range parameters are rejected by model validation.
/// Missing model fields take the defaults (100 sites, kd = pi/2, the
/// analytic coupling form).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Domain(format!("config: {e}")))?;
    let base = CouplingModel::default();
    let model = CouplingModel {
        n_sites: raw.n_sites.unwrap_or(base.n_sites),
        g: raw.g.unwrap_or(base.g),
        t_c: raw.t_c.unwrap_or(base.t_c),
        delta_band: raw.delta_band.unwrap_or(base.delta_band),
        eta: raw.eta.unwrap_or(base.eta),
        phi: raw.phi.unwrap_or(base.phi),
        kd: raw.kd.unwrap_or(base.kd),
        omega_rabi: raw.omega_rabi.unwrap_or(base.omega_rabi),
        omega_drive: raw.omega_drive.unwrap_or(base.omega_drive),
        coupling_form: raw.coupling_form.unwrap_or(base.coupling_form),
    };
    model.validate()?;
    let sweep = build_sweep(&raw)?;
    Ok(RunConfig {
        experiment: raw.experiment,
        model,
        sweep,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
        seed: raw.seed.unwrap_or(0),
        format: raw.format.unwrap_or_default(),
    })
}

fn build_sweep(raw: &RawConfig) -> Result<Option<Sweep>> {
    let any = raw.sweep.is_some()
        || raw.sweep_start.is_some()
        || raw.sweep_stop.is_some()
        || raw.sweep_points.is_some();
    if !any {
        return Ok(None);
    }
    let (Some(parameter), Some(start), Some(stop), Some(points)) =
        (raw.sweep, raw.sweep_start, raw.sweep_stop, raw.sweep_points)
    else {
        return Err(Error::Domain(
            "config: a sweep requires all of sweep, sweep_start, sweep_stop, sweep_points".into(),
        ));
    };
    if !start.is_finite() || !stop.is_finite() {
        return Err(Error::Domain(format!(
            "config: sweep bounds must be finite, got [{start}, {stop}]"
        )));
    }
    if points < 2 {
        return Err(Error::Domain(format!(
            "config: sweep_points must be at least 2, got {points}"
        )));
    }
    Ok(Some(Sweep {
        parameter,
        start,
        stop,
        points,
    }))
}
