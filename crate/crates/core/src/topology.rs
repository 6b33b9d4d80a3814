//! Two-band Bloch representation of the dressed chain and its Zak phase.
//!
//! The dressing is two-site periodic, so the infinite chain folds into a
//! dimer unit cell (A = odd sites, B = even sites). Each quasimomentum
//! q_mu = 2 pi mu / M carries a 2x2 block h_mu = d0 I + d . sigma with
//! real Pauli components. The Zak phase is evaluated with the
//! gauge-independent overlap product over the ground band, which is
//! exactly quantized whenever d_z vanishes identically.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::couplings::CouplingModel;
use crate::error::{Error, Result};

/// Pauli decomposition of the dimer-cell Bloch blocks on a q grid.
#[derive(Debug, Clone)]
pub struct BlochHamiltonian {
    pub m_cells: usize,
    /// Identity component per grid point.
    pub d0: Vec<f64>,
    /// (d_x, d_y, d_z) per grid point.
    pub d_vec: Vec<[f64; 3]>,
    /// Coupling model the blocks were assembled from.
    pub model: CouplingModel,
    /// Largest site distance kept in the lattice sums.
    pub d_cut: u64,
}

impl BlochHamiltonian {
    /// Direct gap 2|d| at grid point `mu`.
    pub fn gap(&self, mu: usize) -> f64 {
        let d = &self.d_vec[mu];
        2.0 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn gap_min(&self) -> f64 {
        (0..self.m_cells)
            .map(|mu| self.gap(mu))
            .fold(f64::INFINITY, f64::min)
    }

    /// Band energies (lower, upper) at grid point `mu`.
    pub fn band_energies(&self, mu: usize) -> (f64, f64) {
        let half_gap = 0.5 * self.gap(mu);
        (self.d0[mu] - half_gap, self.d0[mu] + half_gap)
    }

    /// Normalized ground-band eigenvector at grid point `mu`, with the
    /// first component of magnitude above 1e-12 rotated real positive.
    pub fn ground_state(&self, mu: usize) -> [Complex64; 2] {
        let [dx, dy, dz] = self.d_vec[mu];
        let r = (dx * dx + dy * dy + dz * dz).sqrt();
        // Pick the representation that avoids cancellation in d_z -> +-r.
        let (a, b) = if dz >= 0.0 {
            (Complex64::new(-dx, dy), Complex64::new(dz + r, 0.0))
        } else {
            (Complex64::new(dz - r, 0.0), Complex64::new(dx, dy))
        };
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let mut u = [a / norm, b / norm];
        let lead = if u[0].norm() > 1e-12 { u[0] } else { u[1] };
        let phase = lead / lead.norm();
        u[0] /= phase;
        u[1] /= phase;
        u
    }
}

/// Zak phase and the spectral context it was computed in.
#[derive(Debug, Clone, Copy)]
pub struct ZakResult {
    /// Phase in radians, folded to (-pi, pi].
    pub nu: f64,
    /// True when within 1e-6 of 0 or +-pi.
    pub quantized: bool,
    /// Smallest direct gap over the grid.
    pub gap_min: f64,
}

/// Largest site distance whose bare coupling stays above 1e-12 of the
/// nearest-neighbor one. The dipolar part is monotone beyond the
/// exponential crossover, so the first sub-threshold distance past ten
/// interaction ranges is final.
fn truncation_distance(model: &CouplingModel) -> u64 {
    let floor = 1e-12 * model.bare_at_distance(1).abs();
    let xi = model.xi_interaction();
    let start = (10.0 * xi).ceil().max(2.0) as u64;
    let cap = (30.0 * xi).ceil().max(12_000.0) as u64;
    let mut d = start;
    while d < cap {
        if model.bare_at_distance(d).abs() < floor {
            return d.saturating_sub(1).max(1);
        }
        d += 1;
    }
    cap
}

/// Assemble the dimer-cell Bloch blocks on an M-point quasimomentum grid.
///
/// Intra-sublattice hoppings (even distances) feed d0 and d_z;
/// inter-sublattice hoppings (odd distances) feed d_x and d_y. Lattice
/// sums run over all distances kept by the relative 1e-12 cutoff.
pub fn build_bloch(model: &CouplingModel, m_cells: usize) -> Result<BlochHamiltonian> {
    model.validate()?;
    model.require_quarter_wave()?;
    if m_cells < 2 {
        return Err(Error::Domain(format!(
            "quasimomentum grid needs at least 2 points, got {m_cells}"
        )));
    }

    let d_cut = truncation_distance(model);
    let cell_cut = (d_cut / 2 + 1) as i64;

    // Hopping tables by cell offset; representative sites fix the dressing.
    // A sites are odd (1, 3, ...), B sites even (2, 4, ...).
    let coupling = |j: i64, l: i64| -> f64 {
        let dist = (j - l).unsigned_abs();
        if dist == 0 || dist > d_cut {
            return 0.0;
        }
        model.bare_at_distance(dist) * model.dressing_at(j, l)
    };
    // Intra-sublattice terms are even in the cell offset.
    let t_aa: Vec<f64> = (1..=cell_cut).map(|d| coupling(1, 1 + 2 * d)).collect();
    let t_bb: Vec<f64> = (1..=cell_cut).map(|d| coupling(2, 2 + 2 * d)).collect();
    let t_ab: Vec<f64> = (-cell_cut..=cell_cut)
        .map(|d| coupling(1, 2 + 2 * d))
        .collect();

    let mut d0 = Vec::with_capacity(m_cells);
    let mut d_vec = Vec::with_capacity(m_cells);
    for mu in 0..m_cells {
        let q = 2.0 * PI * mu as f64 / m_cells as f64;
        let mut h_aa = 0.0;
        let mut h_bb = 0.0;
        for d in 1..=cell_cut {
            let c = (q * d as f64).cos();
            h_aa += 2.0 * t_aa[(d - 1) as usize] * c;
            h_bb += 2.0 * t_bb[(d - 1) as usize] * c;
        }
        let mut h_ab = Complex64::new(0.0, 0.0);
        for (idx, d) in (-cell_cut..=cell_cut).enumerate() {
            h_ab += t_ab[idx] * Complex64::from_polar(1.0, q * d as f64);
        }
        d0.push(0.5 * (h_aa + h_bb));
        d_vec.push([h_ab.re, -h_ab.im, 0.5 * (h_aa - h_bb)]);
    }

    Ok(BlochHamiltonian {
        m_cells,
        d0,
        d_vec,
        model: model.clone(),
        d_cut,
    })
}

/// Overlap-product Zak phase over a closed loop of normalized two-spinors
/// (the loop closes on the first entry). Gauge independent: per-state
/// phases cancel between the two factors they enter.
pub fn zak_from_vectors(states: &[[Complex64; 2]]) -> Result<f64> {
    let m = states.len();
    let mut product = Complex64::new(1.0, 0.0);
    for mu in 0..m {
        let next = &states[(mu + 1) % m];
        let cur = &states[mu];
        let overlap = next[0].conj() * cur[0] + next[1].conj() * cur[1];
        if overlap.norm() < 1e-12 {
            return Err(Error::NumericalFailure(format!(
                "vanishing overlap between grid points {mu} and {}",
                (mu + 1) % m
            )));
        }
        product *= overlap;
    }
    Ok(fold_angle(-product.arg()))
}

/// Fold an angle into (-pi, pi].
fn fold_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Zak phase of the ground band.
pub fn zak_phase(bloch: &BlochHamiltonian) -> Result<ZakResult> {
    let gap_min = bloch.gap_min();
    if gap_min <= 1e-8 {
        return Err(Error::GaplessSpectrum(format!(
            "minimal direct gap {gap_min:.3e} leaves the ground band undefined"
        )));
    }
    let states: Vec<[Complex64; 2]> = (0..bloch.m_cells).map(|mu| bloch.ground_state(mu)).collect();
    let nu = zak_from_vectors(&states)?;
    let quantized = nu.abs() < 1e-6 || (nu.abs() - PI).abs() < 1e-6;
    Ok(ZakResult {
        nu,
        quantized,
        gap_min,
    })
}

/// Relative size of the chiral-symmetry-breaking Pauli component:
/// max_mu |d_z| / max_mu |d|. Zero exactly in the chiral limits.
pub fn chirality_defect(bloch: &BlochHamiltonian) -> f64 {
    let mut max_dz: f64 = 0.0;
    let mut max_d: f64 = 0.0;
    for d in &bloch.d_vec {
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        max_dz = max_dz.max(d[2].abs());
        max_d = max_d.max(norm);
    }
    if max_d == 0.0 {
        0.0
    } else {
        max_dz / max_d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::CouplingForm;
    use crate::lattice::{diagonalize, find_edge_states};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chiral_model(phi_quarter_turns: f64, eta: f64) -> CouplingModel {
        CouplingModel {
            phi: phi_quarter_turns * PI,
            eta,
            ..CouplingModel::default()
        }
    }

    #[test]
    fn chiral_limits_have_vanishing_dz() {
        // sin(3pi/4) and cos(3pi/4) agree only to the last ulp as f64, so
        // the cancellation is exact up to rounding of the Bessel argument.
        for phi in [0.25, 0.75] {
            let bloch = build_bloch(&chiral_model(phi, 0.62), 64).unwrap();
            let max_d = bloch
                .d_vec
                .iter()
                .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
                .fold(0.0_f64, f64::max);
            for d in &bloch.d_vec {
                assert!(
                    d[2].abs() <= 1e-13 * max_d,
                    "d_z={} too large at phi={phi}pi",
                    d[2]
                );
            }
        }
    }

    #[test]
    fn undriven_chain_is_gapless_and_zak_errors() {
        let bloch = build_bloch(&chiral_model(0.75, 0.0), 64).unwrap();
        assert!(bloch.gap_min() < 1e-10, "gap_min {}", bloch.gap_min());
        match zak_phase(&bloch) {
            Err(Error::GaplessSpectrum(_)) => {}
            other => panic!("expected GaplessSpectrum, got {other:?}"),
        }
    }

    #[test]
    fn two_cell_blocks_match_brute_force_assembly() {
        let model = chiral_model(0.75, 0.62);
        let bloch = build_bloch(&model, 2).unwrap();
        let reach = 2 * bloch.d_cut as i64;
        for (mu, &q) in [0.0, PI].iter().enumerate() {
            let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (s, site) in [1_i64, 2].iter().enumerate() {
                for cell in -reach..=reach {
                    for (sp, sitep) in [1_i64, 2].iter().enumerate() {
                        let other = 2 * cell + sitep;
                        let dist = (site - other).unsigned_abs();
                        if dist == 0 || dist > bloch.d_cut {
                            continue;
                        }
                        let c = model.bare_at_distance(dist) * model.dressing_at(*site, other);
                        h[s][sp] += c * Complex64::from_polar(1.0, q * cell as f64);
                    }
                }
            }
            let scale = bloch.gap(mu).max(1.0);
            assert!((h[0][0].re - (bloch.d0[mu] + bloch.d_vec[mu][2])).abs() < 1e-12 * scale);
            assert!((h[1][1].re - (bloch.d0[mu] - bloch.d_vec[mu][2])).abs() < 1e-12 * scale);
            assert!((h[0][1].re - bloch.d_vec[mu][0]).abs() < 1e-12 * scale);
            assert!((h[0][1].im - (-bloch.d_vec[mu][1])).abs() < 1e-12 * scale);
            assert!(h[0][0].im.abs() < 1e-14 && h[1][1].im.abs() < 1e-14);
        }
    }

    #[test]
    fn zak_phase_distinguishes_the_two_chiral_limits() {
        let topo = zak_phase(&build_bloch(&chiral_model(0.75, 0.62), 128).unwrap()).unwrap();
        assert!(topo.quantized);
        assert_abs_diff_eq!(topo.nu.abs(), PI, epsilon = 1e-6);

        let trivial = zak_phase(&build_bloch(&chiral_model(0.25, 0.62), 128).unwrap()).unwrap();
        assert!(trivial.quantized);
        assert_abs_diff_eq!(trivial.nu, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn zak_phase_is_grid_independent() {
        let mut values = Vec::new();
        for m in [64, 128, 256] {
            let bloch = build_bloch(&chiral_model(0.75, 0.9), m).unwrap();
            values.push(zak_phase(&bloch).unwrap().nu);
        }
        assert!((values[0] - values[1]).abs() < 1e-6);
        assert!((values[1] - values[2]).abs() < 1e-6);
    }

    #[test]
    fn nearest_neighbor_limit_matches_bond_alternation_winding() {
        for (phi, want_pi) in [(0.75, true), (0.25, false)] {
            let model = CouplingModel {
                phi: phi * PI,
                eta: 0.62,
                coupling_form: CouplingForm::NearestNeighbor,
                ..CouplingModel::default()
            };
            let zak = zak_phase(&build_bloch(&model, 64).unwrap()).unwrap();
            assert!(zak.quantized);
            assert_eq!(zak.nu.abs() > 1.0, want_pi, "phi={phi}pi nu={}", zak.nu);
        }
    }

    #[test]
    fn chirality_defect_vanishes_only_in_chiral_limits() {
        for phi in [0.25, 0.75] {
            let bloch = build_bloch(&chiral_model(phi, 0.62), 64).unwrap();
            assert!(chirality_defect(&bloch) < 1e-12);
        }
        let skewed = build_bloch(&chiral_model(0.5, 0.62), 64).unwrap();
        assert!(chirality_defect(&skewed) > 1e-6);
    }

    #[test]
    fn bulk_boundary_correspondence_on_a_small_grid() {
        for phi in [0.25, 0.75] {
            for eta in [0.62, 0.9] {
                let model = chiral_model(phi, eta);
                let zak = zak_phase(&build_bloch(&model, 64).unwrap()).unwrap();
                let chain = CouplingModel {
                    n_sites: 100,
                    ..model
                };
                let decomp = diagonalize(&chain.build_coupling_matrix().unwrap()).unwrap();
                let report = find_edge_states(&decomp, 0.1).unwrap();
                let winding = (zak.nu.abs() - PI).abs() < 1e-6;
                assert_eq!(
                    winding, report.topological,
                    "phi={phi}pi eta={eta}: nu={} topological={}",
                    zak.nu, report.topological
                );
            }
        }
    }

    proptest! {
        #[test]
        fn zak_product_is_gauge_independent(seed in 0_u64..200) {
            let bloch = build_bloch(&chiral_model(0.75, 0.62), 32).unwrap();
            let states: Vec<[Complex64; 2]> =
                (0..32).map(|mu| bloch.ground_state(mu)).collect();
            let base = zak_from_vectors(&states).unwrap();

            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(7);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let gauged: Vec<[Complex64; 2]> = states
                .iter()
                .map(|u| {
                    let phase = Complex64::from_polar(1.0, 2.0 * PI * next());
                    [u[0] * phase, u[1] * phase]
                })
                .collect();
            let twisted = zak_from_vectors(&gauged).unwrap();
            let diff = fold_angle(twisted - base).abs();
            prop_assert!(diff < 1e-12, "gauge shift changed nu by {diff}");
        }
    }
}
