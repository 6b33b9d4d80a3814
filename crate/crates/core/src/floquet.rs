//! Direct validation of the time-averaged model against the full drive.
//!
//! The driven chain is followed in the rotating frame of the site-resolved
//! drive phases, where the transverse field cancels exactly and every
//! exchange bond acquires a phase set by the difference of the local
//! accumulated phases. Averaging that phase over one drive period yields
//! the Bessel renormalization used by the static model; integrating the
//! full time-dependent problem and overlapping with the static evolution
//! quantifies how good that average is at finite drive frequency.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::couplings::CouplingModel;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

/// Largest chain the full-space driven integrator accepts.
pub const MAX_DRIVEN_SITES: usize = 10;
const MIN_STEPS_PER_PERIOD: f64 = 40.0;
const LOCAL_ERROR_TOL: f64 = 1e-13;
const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Driven chain together with its integration window.
#[derive(Debug, Clone)]
pub struct DrivenModel {
    pub base: CouplingModel,
    /// Keep the pair-creation terms of the bare spin coupling; they rotate
    /// at twice the transverse field and average away when it dominates.
    pub include_anomalous: bool,
    /// Initial and maximum integrator step.
    pub integrator_step: f64,
    pub t_final: f64,
}

impl DrivenModel {
    /// Largest pair exchange coefficient 2 max |J_d|, the energy scale the
    /// drive and field must dominate.
    pub fn max_exchange(&self) -> f64 {
        let n = self.base.n_sites;
        (1..n as u64)
            .map(|d| 2.0 * self.base.bare_at_distance(d).abs())
            .fold(0.0, f64::max)
    }

    /// Separation ratios (maxJ / drive frequency, maxJ / transverse field).
    pub fn scale_ratios(&self) -> (f64, f64) {
        let max_j = self.max_exchange();
        let per = |w: f64| if w == 0.0 { f64::INFINITY } else { max_j / w };
        (
            per(self.base.omega_drive),
            per(self.base.omega_rabi),
        )
    }
}

/// Accumulated rotating-frame phase of site `j` (1-based) at time `t`.
fn site_phase(base: &CouplingModel, j: usize, t: f64) -> f64 {
    0.5 * base.omega_rabi * t
        + 0.5 * base.eta * (base.kd * j as f64 + base.phi).cos() * (base.omega_drive * t).sin()
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DRIVEN_SITES {
        return Err(Error::ResourceLimit(format!(
            "driven evolution supports up to {MAX_DRIVEN_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

/// Exchange bonds with their bit masks and bare pair coefficients 2 J_d.
fn pair_list(base: &CouplingModel) -> Vec<(usize, usize, u32, u32, f64)> {
    let n = base.n_sites;
    let mut pairs = Vec::new();
    for j in 1..=n {
        for l in (j + 1)..=n {
            let w = 2.0 * base.bare_at_distance((l - j) as u64);
            if w != 0.0 {
                pairs.push((j, l, 1u32 << (j - 1), 1u32 << (l - 1), w));
            }
        }
    }
    pairs
}

/// Apply the rotating-frame Hamiltonian at time `t` to a state.
fn apply_driven(
    model: &DrivenModel,
    pairs: &[(usize, usize, u32, u32, f64)],
    t: f64,
    x: &[Complex64],
    out: &mut [Complex64],
) {
    let n = model.base.n_sites;
    let phases: Vec<f64> = (1..=n).map(|j| site_phase(&model.base, j, t)).collect();
    out.fill(Complex64::new(0.0, 0.0));
    for &(j, l, mj, ml, w) in pairs {
        let f_ex = w * Complex64::from_polar(1.0, 2.0 * (phases[j - 1] - phases[l - 1]));
        let f_an = if model.include_anomalous {
            w * Complex64::from_polar(1.0, 2.0 * (phases[j - 1] + phases[l - 1]))
        } else {
            Complex64::new(0.0, 0.0)
        };
        for (s, &amp) in x.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let s = s as u32;
            let has_j = s & mj != 0;
            let has_l = s & ml != 0;
            if has_l && !has_j {
                out[(s ^ mj ^ ml) as usize] += f_ex * amp;
            } else if has_j && !has_l {
                out[(s ^ mj ^ ml) as usize] += f_ex.conj() * amp;
            } else if model.include_anomalous {
                if !has_j && !has_l {
                    out[(s | mj | ml) as usize] += f_an * amp;
                } else {
                    out[(s & !mj & !ml) as usize] += f_an.conj() * amp;
                }
            }
        }
    }
}

/// Rotating-frame Hamiltonian at time `t` over the full spin space.
///
/// Exchange terms carry the phase difference of the two sites, anomalous
/// terms the phase sum; the transverse field is absorbed by the frame.
pub fn rotating_frame_hamiltonian(model: &DrivenModel, t: f64) -> Result<DMatrix<Complex64>> {
    let n = model.base.n_sites;
    check_size(n)?;
    let dim = 1usize << n;
    let pairs = pair_list(&model.base);
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let mut basis = vec![Complex64::new(0.0, 0.0); dim];
    let mut column = vec![Complex64::new(0.0, 0.0); dim];
    for s in 0..dim {
        basis[s] = Complex64::new(1.0, 0.0);
        apply_driven(model, &pairs, t, &basis, &mut column);
        for r in 0..dim {
            h[(r, s)] = column[r];
        }
        basis[s] = Complex64::new(0.0, 0.0);
    }
    Ok(h)
}

/// Embedded 4th/5th-order Runge-Kutta step pair for dy/dt = f(t, y).
struct Rk45Workspace {
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    candidate: Vec<Complex64>,
}

impl Rk45Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Rk45Workspace {
            k: [
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
            ],
            stage: z.clone(),
            candidate: z,
        }
    }
}

const RK_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const RK_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const RK_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const RK_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integration of dy/dt = f(t, y), sampling accepted steps.
pub(crate) fn integrate_rk45<F>(
    derivative: F,
    y0: &[Complex64],
    t_final: f64,
    h_max: f64,
) -> Result<Vec<(f64, Vec<Complex64>)>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let dim = y0.len();
    let mut ws = Rk45Workspace::new(dim);
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = h_max;
    let mut trajectory = vec![(0.0, y.clone())];
    if t_final == 0.0 {
        return Ok(trajectory);
    }
    let mut guard = 0usize;
    while t < t_final {
        guard += 1;
        if guard > 50_000_000 {
            return Err(Error::NumericalFailure(
                "integration exceeded the step budget".into(),
            ));
        }
        let step = h.min(t_final - t);
        for i in 0..7 {
            for (d, yv) in ws.stage.iter_mut().zip(&y) {
                *d = *yv;
            }
            for (j, kj) in ws.k.iter().enumerate().take(i) {
                let a = RK_A[i][j];
                if a != 0.0 {
                    for (sv, kv) in ws.stage.iter_mut().zip(kj) {
                        *sv += step * a * kv;
                    }
                }
            }
            derivative(t + RK_C[i] * step, &ws.stage, &mut ws.k[i]);
        }
        let mut err_sq = 0.0;
        for idx in 0..dim {
            let mut y5 = y[idx];
            let mut diff = Complex64::new(0.0, 0.0);
            for i in 0..7 {
                y5 += step * RK_B5[i] * ws.k[i][idx];
                diff += step * (RK_B5[i] - RK_B4[i]) * ws.k[i][idx];
            }
            ws.candidate[idx] = y5;
            err_sq += diff.norm_sqr();
        }
        let err = err_sq.sqrt();
        if err <= LOCAL_ERROR_TOL {
            t += step;
            y.copy_from_slice(&ws.candidate);
            trajectory.push((t, y.clone()));
        }
        let shrink = if err > 0.0 {
            0.9 * (LOCAL_ERROR_TOL / err).powf(0.2)
        } else {
            5.0
        };
        h = (step * shrink.clamp(0.2, 5.0)).min(h_max);
        if h < 1e-15 * t_final.max(1.0) {
            return Err(Error::StepSizeFailure(format!(
                "step collapsed to {h:.3e} at t = {t:.6}"
            )));
        }
    }
    Ok(trajectory)
}

/// Integrate the driven chain from a normalized initial state, returning
/// the sampled trajectory up to `t_final`.
pub fn integrate_schrodinger(
    model: &DrivenModel,
    initial: &[Complex64],
) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let n = model.base.n_sites;
    check_size(n)?;
    let dim = 1usize << n;
    if initial.len() != dim {
        return Err(Error::Domain(format!(
            "initial state length {} does not match dimension {dim}",
            initial.len()
        )));
    }
    let norm: f64 = initial.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "initial state norm {norm:.10} is not 1"
        )));
    }
    if !(model.integrator_step > 0.0) || !(model.t_final >= 0.0) {
        return Err(Error::Domain(
            "integrator step must be positive and the duration non-negative".into(),
        ));
    }
    if model.base.omega_drive > 0.0 {
        let period = 2.0 * std::f64::consts::PI / model.base.omega_drive;
        if model.integrator_step > period / MIN_STEPS_PER_PERIOD {
            return Err(Error::Domain(format!(
                "integrator step {:.3e} does not resolve the drive period {:.3e} with {MIN_STEPS_PER_PERIOD} steps",
                model.integrator_step, period
            )));
        }
    }
    let pairs = pair_list(&model.base);
    let derivative = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        apply_driven(model, &pairs, t, y, out);
        for v in out.iter_mut() {
            *v *= Complex64::new(0.0, -1.0);
        }
    };
    let trajectory = integrate_rk45(derivative, initial, model.t_final, model.integrator_step)?;
    for (t, state) in &trajectory {
        let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::StepSizeFailure(format!(
                "norm drifted to {norm:.9} at t = {t:.6}"
            )));
        }
    }
    Ok(trajectory)
}

/// Full-space exchange Hamiltonian of the time-averaged model.
fn effective_hamiltonian(base: &CouplingModel) -> Result<DMatrix<f64>> {
    let matrix = base.build_coupling_matrix()?;
    let n = base.n_sites;
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for j in 1..=n {
        for l in (j + 1)..=n {
            let w = 2.0 * matrix.get(j, l);
            if w == 0.0 {
                continue;
            }
            let mj = 1u32 << (j - 1);
            let ml = 1u32 << (l - 1);
            for s in 0..dim as u32 {
                let has_j = s & mj != 0;
                let has_l = s & ml != 0;
                if has_j != has_l {
                    h[((s ^ mj ^ ml) as usize, s as usize)] += w;
                }
            }
        }
    }
    Ok(h)
}

/// Overlap-squared between the driven evolution and the time-averaged
/// model's evolution after `t_final`.
pub fn effective_model_fidelity(
    model: &DrivenModel,
    initial: &[Complex64],
    t_final: f64,
) -> Result<f64> {
    let mut driven = model.clone();
    driven.t_final = t_final;
    let trajectory = integrate_schrodinger(&driven, initial)?;
    let (t_end, psi_driven) = trajectory.last().expect("trajectory is never empty");

    let (energies, modes) = symmetric_eigen_sorted(effective_hamiltonian(&model.base)?)?;
    let dim = initial.len();
    let mut psi_eff = vec![Complex64::new(0.0, 0.0); dim];
    for (nn, &e) in energies.iter().enumerate() {
        let mut overlap = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            overlap += modes[(r, nn)] * initial[r];
        }
        let phase = Complex64::from_polar(1.0, -e * t_end);
        for r in 0..dim {
            psi_eff[r] += modes[(r, nn)] * phase * overlap;
        }
    }
    let mut overlap = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        overlap += psi_driven[r].conj() * psi_eff[r];
    }
    Ok(overlap.norm_sqr())
}
