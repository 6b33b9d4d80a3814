//! Experiment orchestration: sweep dispatch to a worker pool, artifact
//! rendering, and manifest emission with content hashes.
//!
//! Sweep points run in parallel but results are collected back in grid
//! order and written by a single thread, so output bytes do not depend
//! on the worker count. Energies in every artifact are dimensionless
//! multiples of g^2/t_c; the manifest records that scale.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};
use ssh_ion_core::{
    build_bloch, correlator_zz, diagonalize, effective_model_fidelity, effective_params,
    evolve_single_excitation, exact_ground_state, find_edge_states, fit_localization_length,
    fit_survival_power_law, hartree_fock, long_time_survival, zak_phase, CouplingModel,
    DrivenModel, EdgeSide, Error, Result, MAX_DRIVEN_SITES,
};

use crate::config::{Experiment, OutputFormat, RunConfig};
use crate::table::{float_json, Cell, Table};

/// Minimum distance of an accepted midgap level from either band edge,
/// as a fraction of the gap.
const GAP_FRACTION: f64 = 0.1;
/// Brillouin-zone grid for the bulk winding.
const ZAK_CELLS: usize = 256;
/// Sample count of the standalone quench time series.
const QUENCH_SAMPLES: usize = 512;

/// Top-level failure: the experiment context plus the underlying error.
#[derive(Debug)]
pub struct CliError {
    pub experiment: Option<&'static str>,
    pub kind: ErrorKind,
}

#[derive(Debug)]
pub enum ErrorKind {
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    /// Process exit code: 1 for I/O, 2 for configuration problems, 3 for
    /// numerical failures, 4 when a resource limit is exceeded.
    pub fn exit_code(&self) -> u8 {
        match &self.kind {
            ErrorKind::Io(_) => 1,
            ErrorKind::Core(err) => match err {
                Error::Domain(_)
                | Error::UnsupportedConfiguration(_)
                | Error::DegenerateConfiguration(_)
                | Error::InfeasibleGeometry(_) => 2,
                Error::ResourceLimit(_) => 4,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(name) = self.experiment {
            write!(f, "{name}: ")?;
        }
        match &self.kind {
            ErrorKind::Core(e) => write!(f, "{e}"),
            ErrorKind::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            experiment: None,
            kind: ErrorKind::Core(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            experiment: None,
            kind: ErrorKind::Io(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One output file before rendering.
enum Artifact {
    /// Rendered per the run's format selection.
    Table(Table),
    /// Always JSON.
    Report {
        stem: &'static str,
        value: serde_json::Value,
    },
    /// Pre-rendered bytes under a fixed name.
    Raw { name: String, bytes: Vec<u8> },
}

/// Runs the configured experiment and writes its data files plus
/// `manifest.json` into the output directory.
pub fn run_experiment(
    config: &RunConfig,
    config_text: &str,
    jobs: usize,
    quiet: bool,
) -> CliResult<()> {
    let started = Instant::now();
    execute(config, jobs)
        .and_then(|artifacts| emit(config, config_text, artifacts, started, quiet))
        .map_err(|mut err| {
            err.experiment.get_or_insert(config.experiment.name());
            err
        })
}

fn execute(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    match config.experiment {
        Experiment::Couplings => couplings(config),
        Experiment::Spectrum => spectrum(config),
        Experiment::Edge => edge(config),
        Experiment::Zak => zak(config, jobs),
        Experiment::Locsweep => locsweep(config, jobs),
        Experiment::Survival => survival(config, jobs),
        Experiment::Groundstate => groundstate(config, jobs),
        Experiment::Hartreefock => hartreefock(config, jobs),
        Experiment::FloquetVerify => floquet_verify(config, jobs),
    }
}

fn reject_sweep(config: &RunConfig) -> Result<()> {
    if config.sweep.is_some() {
        return Err(Error::UnsupportedConfiguration(format!(
            "{} does not take a sweep",
            config.experiment.name()
        )));
    }
    Ok(())
}

fn require_sweep(config: &RunConfig) -> Result<()> {
    if config.sweep.is_none() {
        return Err(Error::UnsupportedConfiguration(format!(
            "{} requires a sweep",
            config.experiment.name()
        )));
    }
    Ok(())
}

/// Evaluates `row` at every grid point on a worker pool, or once on the
/// base model without a sweep. Results come back in grid order; on
/// multiple failures the earliest grid point's error is reported.
fn sweep_rows<R, F>(config: &RunConfig, jobs: usize, row: F) -> CliResult<Vec<(Option<f64>, R)>>
where
    R: Send,
    F: Fn(&CouplingModel) -> Result<R> + Sync,
{
    let Some(sweep) = &config.sweep else {
        return Ok(vec![(None, row(&config.model)?)]);
    };
    let values = sweep.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("worker pool: {e}")))?;
    let results: Vec<Result<R>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let model = sweep.parameter.applied(&config.model, v)?;
                row(&model)
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(values.len());
    for (v, result) in values.iter().zip(results) {
        rows.push((Some(*v), result?));
    }
    Ok(rows)
}

/// Assembles a table whose first column, present only under a sweep, is
/// the swept parameter.
fn sweep_table<R, F>(
    name: &'static str,
    config: &RunConfig,
    columns: &[&'static str],
    rows: Vec<(Option<f64>, R)>,
    cells: F,
) -> Table
where
    F: Fn(R) -> Vec<Cell>,
{
    let mut labels = Vec::with_capacity(columns.len() + 1);
    if let Some(sweep) = &config.sweep {
        labels.push(sweep.parameter.name());
    }
    labels.extend_from_slice(columns);
    let mut table = Table::new(name, labels);
    for (value, data) in rows {
        let mut row = Vec::new();
        if let Some(v) = value {
            row.push(Cell::Float(v));
        }
        row.extend(cells(data));
        table.push(row);
    }
    table
}

fn couplings(config: &RunConfig) -> CliResult<Vec<Artifact>> {
    reject_sweep(config)?;
    let matrix = config.model.build_coupling_matrix()?;
    match config.format {
        OutputFormat::Csv => {
            let mut bytes = Vec::new();
            matrix.write_csv(&mut bytes)?;
            Ok(vec![Artifact::Raw {
                name: "couplings.csv".into(),
                bytes,
            }])
        }
        OutputFormat::Json => {
            let m = matrix.as_matrix();
            let rows: Vec<Vec<f64>> = (0..matrix.n_sites)
                .map(|j| (0..matrix.n_sites).map(|l| m[(j, l)]).collect())
                .collect();
            Ok(vec![Artifact::Report {
                stem: "couplings",
                value: json!({
                    "n_sites": matrix.n_sites,
                    "phi": matrix.phi,
                    "eta": matrix.eta,
                    "matrix": rows,
                }),
            }])
        }
    }
}

fn spectrum(config: &RunConfig) -> CliResult<Vec<Artifact>> {
    reject_sweep(config)?;
    let decomp = diagonalize(&config.model.build_coupling_matrix()?)?;
    let mut table = Table::new("spectrum", vec!["index", "energy"]);
    for (i, &e) in decomp.energies.iter().enumerate() {
        table.push(vec![i.into(), e.into()]);
    }
    Ok(vec![Artifact::Table(table)])
}

fn edge(config: &RunConfig) -> CliResult<Vec<Artifact>> {
    reject_sweep(config)?;
    let decomp = diagonalize(&config.model.build_coupling_matrix()?)?;
    let report = find_edge_states(&decomp, GAP_FRACTION)?;

    let mut profile = Table::new("edge_profile", vec!["site", "amplitude", "partner_amplitude"]);
    if let Some(left) = &report.profile {
        for (i, &a) in left.iter().enumerate() {
            let partner = report
                .right_profile
                .as_ref()
                .map_or(f64::NAN, |r| r[i]);
            profile.push(vec![(i + 1).into(), a.into(), partner.into()]);
        }
    }

    let fit = if report.topological {
        Some(fit_localization_length(&report)?)
    } else {
        None
    };
    let side = report.edge_side.map(|s| match s {
        EdgeSide::Left => "left",
        EdgeSide::Right => "right",
        EdgeSide::Hybridized => "hybridized",
    });
    let value = json!({
        "n_sites": report.n_sites,
        "topological": report.topological,
        "midgap_energies": report.midgap_energies,
        "midgap_indices": report.midgap_indices,
        "gap": float_json(report.gap),
        "gap_center": float_json(report.gap_center),
        "edge_side": side,
        "sublattice_purity": report.sublattice_purity.map(float_json),
        "xi_loc": fit.as_ref().map(|f| float_json(f.xi_loc)),
        "fit_rms": fit.as_ref().map(|f| float_json(f.fit_rms)),
        "fit_points": fit.as_ref().map(|f| f.points_used),
    });
    Ok(vec![
        Artifact::Table(profile),
        Artifact::Report {
            stem: "edge_report",
            value,
        },
    ])
}

fn zak(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    let rows = sweep_rows(config, jobs, |model| {
        let bloch = build_bloch(model, ZAK_CELLS)?;
        zak_phase(&bloch)
    })?;
    let table = sweep_table("zak", config, &["nu", "quantized", "gap_min"], rows, |z| {
        vec![z.nu.into(), z.quantized.into(), z.gap_min.into()]
    });
    Ok(vec![Artifact::Table(table)])
}

fn locsweep(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    require_sweep(config)?;
    let rows = sweep_rows(config, jobs, |model| {
        let params = effective_params(model)?;
        let decomp = diagonalize(&model.build_coupling_matrix()?)?;
        let report = find_edge_states(&decomp, GAP_FRACTION)?;
        let (xi_fit, rel_dev) = if report.topological {
            let fit = fit_localization_length(&report)?;
            (
                fit.xi_loc,
                (params.xi_pred - fit.xi_loc).abs() / fit.xi_loc,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok((params.xi_pred, xi_fit, rel_dev, report.gap))
    })?;
    let table = sweep_table(
        "locsweep",
        config,
        &["xi_pred", "xi_fit", "rel_dev", "gap"],
        rows,
        |(xi_pred, xi_fit, rel_dev, gap)| {
            vec![xi_pred.into(), xi_fit.into(), rel_dev.into(), gap.into()]
        },
    );
    Ok(vec![Artifact::Table(table)])
}

fn survival(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    if config.sweep.is_some() {
        survival_sweep(config, jobs)
    } else {
        survival_quench(config)
    }
}

/// Long-time survival against the predicted localization length across
/// the grid, with the floor-corrected power-law fit.
fn survival_sweep(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    let rows = sweep_rows(config, jobs, |model| {
        let params = effective_params(model)?;
        let decomp = diagonalize(&model.build_coupling_matrix()?)?;
        Ok((params.xi_pred, long_time_survival(&decomp)))
    })?;
    let points: Vec<(f64, f64)> = rows.iter().map(|&(_, data)| data).collect();
    let fit = fit_survival_power_law(&points, config.model.n_sites)?;
    let table = sweep_table(
        "survival",
        config,
        &["xi_pred", "inv_xi_pred", "survival"],
        rows,
        |(xi, p)| vec![xi.into(), (1.0 / xi).into(), p.into()],
    );
    let value = json!({
        "beta": float_json(fit.beta),
        "c1": float_json(fit.c1),
        "c2": float_json(fit.c2),
        "fit_window": [float_json(fit.fit_window.0), float_json(fit.fit_window.1)],
        "n_sites": config.model.n_sites,
        "points": points.len(),
    });
    Ok(vec![
        Artifact::Table(table),
        Artifact::Report {
            stem: "fit",
            value,
        },
    ])
}

/// Time series of a single quench from site 1. The horizon stretches to
/// 10 N divided by the spectral spread so the slowest bulk beats dephase
/// well before the tail that feeds the long-time average.
fn survival_quench(config: &RunConfig) -> CliResult<Vec<Artifact>> {
    let decomp = diagonalize(&config.model.build_coupling_matrix()?)?;
    let e = &decomp.energies;
    let spread = (e[e.len() - 1] - e[0]).max(f64::MIN_POSITIVE);
    let t_max = 10.0 * config.model.n_sites as f64 / spread;
    let times: Vec<f64> = (0..QUENCH_SAMPLES)
        .map(|k| t_max * k as f64 / (QUENCH_SAMPLES - 1) as f64)
        .collect();
    let quench = evolve_single_excitation(&decomp, &times)?;
    let mut table = Table::new("survival", vec!["time", "survival"]);
    for (&t, &p) in quench.times.iter().zip(&quench.survival) {
        table.push(vec![t.into(), p.into()]);
    }
    let value = json!({
        "long_time_average": float_json(quench.long_time_average),
        "dephased_formula": float_json(long_time_survival(&decomp)),
        "t_max": float_json(t_max),
        "samples": QUENCH_SAMPLES,
    });
    Ok(vec![
        Artifact::Table(table),
        Artifact::Report {
            stem: "survival_report",
            value,
        },
    ])
}

fn groundstate(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    let rows = sweep_rows(config, jobs, |model| {
        let delta = model.dimerization()?;
        let gs = exact_ground_state(&model.build_coupling_matrix()?)?;
        let zz = correlator_zz(&gs.state, &gs.sector)?;
        Ok((delta, gs.energy, zz, gs.tie_degenerate))
    })?;
    let table = sweep_table(
        "correlators",
        config,
        &["delta", "energy", "zz", "tie_degenerate"],
        rows,
        |(delta, energy, zz, tie)| vec![delta.into(), energy.into(), zz.into(), tie.into()],
    );
    Ok(vec![Artifact::Table(table)])
}

fn hartreefock(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    let rows = sweep_rows(config, jobs, |model| {
        let delta = model.dimerization()?;
        let hf = hartree_fock(model)?;
        Ok((
            delta,
            hf.correlator_zz,
            hf.z_weight,
            hf.edge_orbital,
            hf.ambiguous_filling,
        ))
    })?;
    let table = sweep_table(
        "hartreefock",
        config,
        &["delta", "zz", "z_weight", "edge_orbital", "ambiguous_filling"],
        rows,
        |(delta, zz, z, orbital, ambiguous)| {
            vec![
                delta.into(),
                zz.into(),
                z.into(),
                orbital.map_or(Cell::Float(f64::NAN), Cell::from),
                ambiguous.into(),
            ]
        },
    );
    Ok(vec![Artifact::Table(table)])
}

/// Fidelity of the time-averaged model against the integrated drive for
/// a boundary excitation, over three exchange times.
fn floquet_verify(config: &RunConfig, jobs: usize) -> CliResult<Vec<Artifact>> {
    if !(config.model.omega_rabi > 0.0) || !(config.model.omega_drive > 0.0) {
        return Err(Error::Domain(
            "floquet-verify requires positive omega_rabi and omega_drive".into(),
        )
        .into());
    }
    let rows = sweep_rows(config, jobs, |model| {
        if model.n_sites > MAX_DRIVEN_SITES {
            return Err(Error::ResourceLimit(format!(
                "driven verification supports up to {MAX_DRIVEN_SITES} sites, got {}",
                model.n_sites
            )));
        }
        let driven = DrivenModel {
            base: model.clone(),
            include_anomalous: true,
            integrator_step: 2.0 * PI / model.omega_drive / 40.0,
            t_final: 0.0,
        };
        let max_j = driven.max_exchange();
        let mut psi0 = vec![Complex64::new(0.0, 0.0); 1 << model.n_sites];
        psi0[1] = Complex64::new(1.0, 0.0);
        let fidelity = effective_model_fidelity(&driven, &psi0, 3.0 / max_j)?;
        Ok((
            max_j,
            model.omega_rabi / max_j,
            model.omega_drive / max_j,
            fidelity,
        ))
    })?;
    let table = sweep_table(
        "floquet",
        config,
        &["max_exchange", "rabi_ratio", "drive_ratio", "fidelity"],
        rows,
        |(max_j, rabi, drive, fidelity)| {
            vec![max_j.into(), rabi.into(), drive.into(), fidelity.into()]
        },
    );
    Ok(vec![Artifact::Table(table)])
}

fn render(artifact: Artifact, format: OutputFormat) -> (String, Vec<u8>) {
    match artifact {
        Artifact::Raw { name, bytes } => (name, bytes),
        Artifact::Report { stem, value } => (format!("{stem}.json"), pretty(value)),
        Artifact::Table(table) => match format {
            OutputFormat::Csv => (format!("{}.csv", table.name), table.to_csv().into_bytes()),
            OutputFormat::Json => (format!("{}.json", table.name), pretty(table.to_json())),
        },
    }
}

fn pretty(value: serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&value).expect("JSON value serializes");
    bytes.push(b'\n');
    bytes
}

fn emit(
    config: &RunConfig,
    config_text: &str,
    artifacts: Vec<Artifact>,
    started: Instant,
    quiet: bool,
) -> CliResult<()> {
    fs::create_dir_all(&config.output_dir)?;
    let files: Vec<(String, Vec<u8>)> = artifacts
        .into_iter()
        .map(|a| render(a, config.format))
        .collect();
    for (name, bytes) in &files {
        fs::write(config.output_dir.join(name), bytes)?;
    }
    let manifest = manifest(config, config_text, &files, started.elapsed().as_secs_f64());
    fs::write(config.output_dir.join("manifest.json"), pretty(manifest))?;
    if !quiet {
        println!(
            "{}: wrote {} data file(s) and manifest.json to {}",
            config.experiment.name(),
            files.len(),
            config.output_dir.display()
        );
    }
    Ok(())
}

/// Run record: config hash, versions, wall time, the energy scale, and a
/// content hash of every emitted file.
fn manifest(
    config: &RunConfig,
    config_text: &str,
    files: &[(String, Vec<u8>)],
    wall_time_s: f64,
) -> serde_json::Value {
    let listed: Vec<serde_json::Value> = files
        .iter()
        .map(|(name, bytes)| {
            json!({
                "name": name,
                "sha256": sha256_hex(bytes),
                "bytes": bytes.len(),
            })
        })
        .collect();
    json!({
        "experiment": config.experiment.name(),
        "config_sha256": sha256_hex(config_text.as_bytes()),
        "versions": {
            "ssh-ion-cli": env!("CARGO_PKG_VERSION"),
            "ssh-ion-core": ssh_ion_core::VERSION,
        },
        "seed": config.seed,
        "energy_scale": {
            "unit": "g^2/t_c",
            "value": float_json(config.model.g * config.model.g / config.model.t_c),
        },
        "wall_time_s": float_json(wall_time_s),
        "files": listed,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_class() {
        let code = |e: Error| CliError::from(e).exit_code();
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::UnsupportedConfiguration("x".into())), 2);
        assert_eq!(code(Error::GaplessSpectrum("x".into())), 3);
        assert_eq!(code(Error::FitDomain("x".into())), 3);
        assert_eq!(code(Error::NumericalFailure("x".into())), 3);
        assert_eq!(code(Error::ResourceLimit("x".into())), 4);
        let io = CliError::from(std::io::Error::other("x"));
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn error_display_carries_the_experiment_context() {
        let mut err = CliError::from(Error::GaplessSpectrum("gap closed".into()));
        err.experiment = Some("zak");
        assert_eq!(err.to_string(), "zak: gapless spectrum: gap closed");
    }

    #[test]
    fn sha256_matches_the_reference_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tables_render_under_the_selected_format() {
        let mut table = Table::new("sample", vec!["x"]);
        table.push(vec![Cell::Float(1.0)]);
        let (name, bytes) = render(Artifact::Table(table.clone()), OutputFormat::Csv);
        assert_eq!(name, "sample.csv");
        assert!(String::from_utf8(bytes).unwrap().starts_with("x\n"));
        let (name, _) = render(Artifact::Table(table), OutputFormat::Json);
        assert_eq!(name, "sample.json");
    }
}
