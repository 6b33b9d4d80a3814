//! Open-chain spectra, midgap-state detection, and edge-localization fits.
//!
//! The single-excitation Hamiltonian of an open chain is the coupling
//! matrix itself, so its eigenpairs give the full spectrum. Midgap levels
//! always straddle the half-filling boundary of the sorted spectrum, so
//! detection anchors there: the two levels around the Fermi spacing form a
//! midgap doublet when their splitting is parametrically smaller than the
//! gap portions flanking them, and a lone level adjacent to the Fermi
//! spacing counts as a single midgap state when both flanking spacings
//! dominate the neighboring bulk spacings. Same-sublattice couplings push
//! midgap levels well off the gap center, so accepted candidates need only
//! sit deeper than `gap_fraction` of the gap from both band edges.

use nalgebra::{DMatrix, DVector};

use crate::couplings::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

/// Eigenpairs of an open chain, energies ascending, states column-orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub energies: Vec<f64>,
    pub states: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    /// Amplitude of eigenstate `n` on 1-based site `j`.
    pub fn amplitude(&self, j: usize, n: usize) -> f64 {
        self.states[(j - 1, n)]
    }
}

/// Diagonalize the single-excitation Hamiltonian of an open chain.
pub fn diagonalize(matrix: &CouplingMatrix) -> Result<SpectralDecomposition> {
    let (energies, states) = symmetric_eigen_sorted(matrix.as_matrix().clone())?;
    Ok(SpectralDecomposition { energies, states })
}

/// Which end of the chain a midgap state clings to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    Left,
    Right,
    /// Weight does not separate cleanly onto one end.
    Hybridized,
}

/// Outcome of midgap-state detection on a sorted spectrum.
#[derive(Debug, Clone)]
pub struct EdgeStateReport {
    pub n_sites: usize,
    /// Energies of accepted midgap levels, ascending.
    pub midgap_energies: Vec<f64>,
    /// Eigenstate indices of the accepted midgap levels.
    pub midgap_indices: Vec<usize>,
    /// Band gap spanned by the outermost large spacings.
    pub gap: f64,
    pub gap_center: f64,
    pub topological: bool,
    pub edge_side: Option<EdgeSide>,
    /// Probability weight of the analyzed state on odd (1-based) sites.
    pub sublattice_purity: Option<f64>,
    /// Analyzed state amplitudes: the left-rotated combination when two
    /// midgap states hybridize, otherwise the single midgap state.
    pub profile: Option<Vec<f64>>,
    /// Right-rotated partner when two midgap states are present.
    pub right_profile: Option<Vec<f64>>,
}

/// Detect midgap states via spacing statistics around the band gap.
///
/// `gap_fraction` is the minimum distance of an accepted level from either
/// band edge, as a fraction of the gap (0.1 is a robust default).
pub fn find_edge_states(
    decomp: &SpectralDecomposition,
    gap_fraction: f64,
) -> Result<EdgeStateReport> {
    let n = decomp.n_sites();
    if n < 8 {
        return Err(Error::Domain(format!(
            "edge detection needs at least 8 levels, got {n}"
        )));
    }
    if !(gap_fraction > 0.0 && gap_fraction < 0.5) {
        return Err(Error::Domain(format!(
            "gap_fraction must lie in (0, 0.5), got {gap_fraction}"
        )));
    }
    let e = &decomp.energies;
    let spacing = |i: usize| e[i + 1] - e[i];
    let half = n / 2;

    // Fermi spacing: the interval between the filled and empty halves.
    let s_fermi = spacing(half - 1);

    // Doublet: the two levels around the Fermi spacing, split far less
    // than the gap portions flanking them. Single level: one level with
    // flanking spacings that dominate the neighboring bulk spacings.
    let midgap: Vec<usize> = if s_fermi <= 0.3 * spacing(half - 2).min(spacing(half)) {
        vec![half - 1, half]
    } else {
        let single = |i: usize| -> bool {
            let flank = spacing(i - 1).min(spacing(i));
            flank >= 2.0 * spacing(i - 2).max(spacing(i + 1))
        };
        if single(half - 1) {
            vec![half - 1]
        } else if single(half) {
            vec![half]
        } else {
            Vec::new()
        }
    };

    let bare = |report_gap: f64, center: f64| EdgeStateReport {
        n_sites: n,
        midgap_energies: Vec::new(),
        midgap_indices: Vec::new(),
        gap: report_gap,
        gap_center: center,
        topological: false,
        edge_side: None,
        sublattice_purity: None,
        profile: None,
        right_profile: None,
    };
    if midgap.is_empty() {
        return Ok(bare(s_fermi, 0.5 * (e[half] + e[half - 1])));
    }

    let lower = midgap[0] - 1;
    let upper = midgap[midgap.len() - 1] + 1;
    let gap = e[upper] - e[lower];
    let gap_center = 0.5 * (e[upper] + e[lower]);
    let deep = midgap
        .iter()
        .all(|&i| e[i] - e[lower] > gap_fraction * gap && e[upper] - e[i] > gap_fraction * gap);
    if !deep {
        return Ok(bare(gap, gap_center));
    }

    let energies: Vec<f64> = midgap.iter().map(|&i| e[i]).collect();
    let (profile, right_profile, edge_side) = classify_midgap(decomp, &midgap);
    let purity = sublattice_purity(&profile);

    Ok(EdgeStateReport {
        n_sites: n,
        midgap_energies: energies,
        midgap_indices: midgap,
        gap,
        gap_center,
        topological: true,
        edge_side: Some(edge_side),
        sublattice_purity: Some(purity),
        profile: Some(profile),
        right_profile,
    })
}

/// Rotate a hybridized midgap pair onto the chain ends, or classify a
/// single midgap state by its end weights.
fn classify_midgap(
    decomp: &SpectralDecomposition,
    midgap: &[usize],
) -> (Vec<f64>, Option<Vec<f64>>, EdgeSide) {
    let n = decomp.n_sites();
    let r = (n / 10).max(2).min(n / 2);
    let end_weights = |v: &DVector<f64>| {
        let wl: f64 = v.iter().take(r).map(|x| x * x).sum();
        let wr: f64 = v.iter().skip(n - r).map(|x| x * x).sum();
        (wl, wr)
    };

    if midgap.len() == 2 {
        let u = decomp.states.column(midgap[0]).clone_owned();
        let v = decomp.states.column(midgap[1]).clone_owned();
        // Gram matrix of the pair restricted to the left end region; its
        // top eigenvector gives the most left-localized combination.
        let mut a = 0.0;
        let mut b = 0.0;
        let mut c = 0.0;
        for j in 0..r {
            a += u[j] * u[j];
            b += u[j] * v[j];
            c += v[j] * v[j];
        }
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        let lam = 0.5 * (tr + disc);
        // Eigenvector of [[a, b], [b, c]] for eigenvalue lam.
        let (c1, c2) = if b.abs() > 1e-300 {
            let norm = (b * b + (lam - a) * (lam - a)).sqrt();
            (b / norm, (lam - a) / norm)
        } else if a >= c {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let left_state = c1 * &u + c2 * &v;
        let right_state = -c2 * &u + c1 * &v;
        let (l_wl, l_wr) = end_weights(&left_state);
        let (r_wl, r_wr) = end_weights(&right_state);
        if l_wl > 2.0 * l_wr && r_wr > 2.0 * r_wl {
            return (
                left_state.as_slice().to_vec(),
                Some(right_state.as_slice().to_vec()),
                EdgeSide::Left,
            );
        }
        return (u.as_slice().to_vec(), Some(v.as_slice().to_vec()), EdgeSide::Hybridized);
    }

    let u = decomp.states.column(midgap[0]).clone_owned();
    let (wl, wr) = end_weights(&u);
    let side = if wl > 2.0 * wr {
        EdgeSide::Left
    } else if wr > 2.0 * wl {
        EdgeSide::Right
    } else {
        EdgeSide::Hybridized
    };
    (u.as_slice().to_vec(), None, side)
}

/// Probability weight on odd (1-based) sites.
fn sublattice_purity(profile: &[f64]) -> f64 {
    let total: f64 = profile.iter().map(|x| x * x).sum();
    let odd: f64 = profile.iter().step_by(2).map(|x| x * x).sum();
    odd / total
}

/// Exponential-envelope fit of a midgap profile.
#[derive(Debug, Clone, Copy)]
pub struct LocalizationFit {
    /// Decay length of the envelope in units of the lattice spacing.
    pub xi_loc: f64,
    /// Root-mean-square residual of the log-amplitude fit.
    pub fit_rms: f64,
    pub points_used: usize,
}

/// Fit `ln |psi_j|` against site index on the majority sublattice of the
/// near-edge half of the chain, keeping amplitudes above 1e-8. The window
/// is truncated at the first envelope node (a strict local minimum of the
/// amplitude sequence walking inward from the edge): a pure exponential has
/// no interior minimum, so a node marks where interference with the
/// long-range tail ends the exponential regime. Requires at least four
/// usable points.
pub fn fit_localization_length(report: &EdgeStateReport) -> Result<LocalizationFit> {
    let side = match report.edge_side {
        Some(EdgeSide::Left) => EdgeSide::Left,
        Some(EdgeSide::Right) => EdgeSide::Right,
        Some(EdgeSide::Hybridized) => {
            return Err(Error::Domain(
                "midgap pair did not separate onto the chain ends".into(),
            ))
        }
        None => {
            return Err(Error::Domain(
                "no midgap profile available to fit".into(),
            ))
        }
    };
    let profile = report.profile.as_ref().expect("profile set with edge_side");
    let n = profile.len();

    let odd_weight: f64 = profile.iter().step_by(2).map(|x| x * x).sum();
    let even_weight: f64 = profile.iter().skip(1).step_by(2).map(|x| x * x).sum();
    let majority_offset = if odd_weight >= even_weight { 0 } else { 1 };

    // Points ordered walking inward from the analyzed edge.
    let half: Vec<usize> = match side {
        EdgeSide::Left => (0..n / 2).collect(),
        _ => (n - n / 2..n).rev().collect(),
    };
    let mut xs = Vec::new();
    let mut amps = Vec::new();
    for &idx in &half {
        if idx % 2 != majority_offset {
            continue;
        }
        let amp = profile[idx].abs();
        if amp > 1e-8 {
            xs.push((idx + 1) as f64);
            amps.push(amp);
        }
    }
    let node = (1..amps.len().saturating_sub(1))
        .find(|&i| amps[i] < amps[i - 1] && amps[i] < amps[i + 1])
        .unwrap_or(amps.len());
    xs.truncate(node);
    amps.truncate(node);
    let ys: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    if xs.len() < 4 {
        return Err(Error::InsufficientSupport(format!(
            "only {} usable amplitudes on the majority sublattice",
            xs.len()
        )));
    }

    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;

    let xi = match side {
        EdgeSide::Left => -1.0 / slope,
        _ => 1.0 / slope,
    };
    if !(xi > 0.0) {
        return Err(Error::FitDomain(format!(
            "envelope grows toward the edge (slope {slope:.3e})"
        )));
    }
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / m)
        .sqrt();

    Ok(LocalizationFit {
        xi_loc: xi,
        fit_rms: rms,
        points_used: xs.len(),
    })
}
