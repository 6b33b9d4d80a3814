//! Spin-spin coupling model of a laser-driven ion chain.
//!
//! The bare exchange couplings combine a sign-alternating exponential part
//! mediated by the center-of-mass mode with a dipolar `1/d^3` tail from the
//! rest of the phonon band. A site-dependent drive dresses every coupling
//! with a Bessel factor; for a standing-wave period of four sites the
//! dressing alternates between bonds and opens a tunable dimerization.
//!
//! Site indices are 1-based everywhere in this module; the dressing depends
//! on `j + l`, so an off-by-one shift changes the bond pattern.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::bessel_j0;

/// Riemann zeta(3), used in the dipolar prefactor.
pub(crate) const ZETA_3: f64 = 1.202_056_903_159_594_3;

/// Functional form of the bare (undressed) couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// Exponential plus dipolar contributions.
    #[default]
    Analytic,
    /// Exponential contribution only.
    ExponentialOnly,
    /// Dipolar contribution only.
    DipolarOnly,
    /// Analytic value at distance 1, zero beyond.
    NearestNeighbor,
}

/// Parameters of the driven chain.
///
/// `g` and `t_c` set the energy scale `g^2/t_c`; `delta_band` is the
/// detuning from the center-of-mass mode and controls the interaction
/// range. `eta` and `phi` are the drive modulation depth and spatial
/// phase; `kd` is the drive wavevector times the ion spacing and must be
/// `pi/2` for the four-site dressing pattern used throughout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingModel {
    pub n_sites: usize,
    pub g: f64,
    pub t_c: f64,
    pub delta_band: f64,
    pub eta: f64,
    pub phi: f64,
    pub kd: f64,
    pub omega_rabi: f64,
    pub omega_drive: f64,
    pub coupling_form: CouplingForm,
}

impl Default for CouplingModel {
    fn default() -> Self {
        CouplingModel {
            n_sites: 100,
            g: 1.0,
            t_c: 1.0,
            delta_band: 4.0,
            eta: 0.0,
            phi: 0.75 * PI,
            kd: FRAC_PI_2,
            omega_rabi: 0.0,
            omega_drive: 0.0,
            coupling_form: CouplingForm::Analytic,
        }
    }
}

impl CouplingModel {
    /// Checks basic parameter sanity; every matrix-building entry point
    /// calls this first.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::Domain(format!(
                "n_sites must be at least 2, got {}",
                self.n_sites
            )));
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::Domain(format!("g must be positive, got {}", self.g)));
        }
        if !(self.t_c > 0.0) || !self.t_c.is_finite() {
            return Err(Error::Domain(format!("t_c must be positive, got {}", self.t_c)));
        }
        if !(self.delta_band > 0.0) || !self.delta_band.is_finite() {
            return Err(Error::Domain(format!(
                "delta_band must be positive, got {}",
                self.delta_band
            )));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Domain(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(0.0..=PI).contains(&self.phi) {
            return Err(Error::Domain(format!(
                "phi must lie in [0, pi], got {}",
                self.phi
            )));
        }
        if !self.kd.is_finite() || self.kd <= 0.0 {
            return Err(Error::Domain(format!("kd must be positive, got {}", self.kd)));
        }
        Ok(())
    }

    pub(crate) fn require_quarter_wave(&self) -> Result<()> {
        if (self.kd - FRAC_PI_2).abs() > 1e-12 {
            return Err(Error::UnsupportedConfiguration(format!(
                "dressing pattern requires kd = pi/2, got kd = {}",
                self.kd
            )));
        }
        Ok(())
    }

    /// Interaction range of the exponential part, in units of the spacing.
    pub fn xi_interaction(&self) -> f64 {
        (0.5 * std::f64::consts::LN_2).sqrt() * (self.t_c / self.delta_band).sqrt()
    }

    /// Prefactor of the exponential contribution.
    pub fn j_exp(&self) -> f64 {
        self.xi_interaction() * self.g * self.g / (self.t_c * std::f64::consts::LN_2)
    }

    /// Prefactor of the dipolar contribution.
    pub fn j_dip(&self) -> f64 {
        let band_edge = self.delta_band + 7.0 * ZETA_3 * self.t_c / 4.0;
        self.g * self.g * self.t_c / (2.0 * band_edge * band_edge)
    }

    /// Bare coupling at integer site distance `d >= 1`, before dressing.
    ///
    /// This is the translation-invariant kernel behind `bare_coupling`; it
    /// is exposed for the Bloch and continuum sums, which evaluate it at
    /// distances beyond the open chain.
    pub fn bare_at_distance(&self, d: u64) -> f64 {
        debug_assert!(d >= 1);
        let df = d as f64;
        let yukawa = self.j_exp() * (-df / self.xi_interaction()).exp();
        // -(-1)^d: the exponential part is antiferromagnetic on even bonds.
        let sign = if d % 2 == 0 { -1.0 } else { 1.0 };
        let dip = self.j_dip() / (df * df * df);
        match self.coupling_form {
            CouplingForm::Analytic => sign * yukawa + dip,
            CouplingForm::ExponentialOnly => sign * yukawa,
            CouplingForm::DipolarOnly => dip,
            CouplingForm::NearestNeighbor => {
                if d == 1 {
                    yukawa + dip
                } else {
                    0.0
                }
            }
        }
    }

    /// Drive dressing factor for arbitrary integer sites, 1-based.
    ///
    /// The Bessel argument depends on `j + l` mod 4 and `|j - l|` mod 8 up
    /// to an overall sign that the even Bessel function discards; reducing
    /// the residues first makes the two-site periodicity and the `j <-> l`
    /// symmetry exact in floating point.
    pub fn dressing_at(&self, j: i64, l: i64) -> f64 {
        let sum_res = (j + l).rem_euclid(4) as f64;
        let diff_res = ((j - l).abs() % 8) as f64;
        let arg =
            2.0 * self.eta * (PI * sum_res / 4.0 + self.phi).sin() * (PI * diff_res / 4.0).sin();
        bessel_j0(arg)
    }

    fn check_site_pair(&self, j: usize, l: usize) -> Result<()> {
        if j < 1 || j > self.n_sites || l < 1 || l > self.n_sites {
            return Err(Error::Domain(format!(
                "site indices must lie in 1..={}, got ({j}, {l})",
                self.n_sites
            )));
        }
        if j == l {
            return Err(Error::Domain(format!("no self-coupling: j = l = {j}")));
        }
        Ok(())
    }

    /// Bare coupling between chain sites `j` and `l` (1-based).
    pub fn bare_coupling(&self, j: usize, l: usize) -> Result<f64> {
        self.validate()?;
        self.check_site_pair(j, l)?;
        Ok(self.bare_at_distance(j.abs_diff(l) as u64))
    }

    /// Drive dressing factor between chain sites `j` and `l` (1-based).
    pub fn bessel_dressing(&self, j: usize, l: usize) -> Result<f64> {
        self.validate()?;
        self.require_quarter_wave()?;
        self.check_site_pair(j, l)?;
        Ok(self.dressing_at(j as i64, l as i64))
    }

    /// Dressed coupling matrix of the open chain.
    pub fn build_coupling_matrix(&self) -> Result<CouplingMatrix> {
        self.validate()?;
        self.require_quarter_wave()?;
        let n = self.n_sites;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 1..=n {
            for l in (j + 1)..=n {
                let v = self.bare_at_distance((l - j) as u64) * self.dressing_at(j as i64, l as i64);
                m[(j - 1, l - 1)] = v;
                m[(l - 1, j - 1)] = v;
            }
        }
        Ok(CouplingMatrix {
            n_sites: n,
            phi: self.phi,
            eta: self.eta,
            matrix: m,
        })
    }

    /// Bond dimerization induced by the dressing.
    ///
    /// Defined from the first two bonds as
    /// `(D_{2,3} - D_{1,2}) / (D_{2,3} + D_{1,2})` where `D` is the
    /// dressing factor; positive values put the weak bond first.
    pub fn dimerization(&self) -> Result<f64> {
        self.validate()?;
        self.require_quarter_wave()?;
        let a = self.dressing_at(1, 2);
        let b = self.dressing_at(2, 3);
        let denom = a + b;
        if denom.abs() < 1e-12 {
            return Err(Error::DegenerateConfiguration(
                "dimerization undefined: bond dressings cancel".into(),
            ));
        }
        Ok((b - a) / denom)
    }

    /// Solves for the modulation depth `eta` that yields the target
    /// dimerization at the model's `phi`, by bisection.
    pub fn calibrate_eta(&self, target_delta: f64) -> Result<f64> {
        self.validate()?;
        self.require_quarter_wave()?;
        let delta_at = |eta: f64| -> Result<f64> {
            let mut probe = self.clone();
            probe.eta = eta;
            probe.dimerization()
        };
        // The dressing of the strong/weak bond pair is monotone in eta until
        // the Bessel factor crosses zero, which bounds the search interval.
        let (mut lo, mut hi) = (0.0_f64, 1.700_4_f64);
        let (f_lo, f_hi) = (delta_at(lo)? - target_delta, delta_at(hi)? - target_delta);
        if f_lo * f_hi > 0.0 {
            return Err(Error::Domain(format!(
                "target dimerization {target_delta} not bracketed for phi = {}",
                self.phi
            )));
        }
        let rising = f_hi > f_lo;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = delta_at(mid)? - target_delta;
            if f_mid.abs() < 1e-14 || hi - lo < 1e-15 {
                return Ok(mid);
            }
            if (f_mid > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Beam tilt angle (radians) that realizes the model's `kd` for the
    /// given ion spacing and laser wavelength.
    pub fn standing_wave_tilt(&self, lattice_spacing: f64, wavelength: f64) -> Result<f64> {
        self.validate()?;
        if !(lattice_spacing > 0.0) || !(wavelength > 0.0) {
            return Err(Error::Domain(
                "lattice spacing and wavelength must be positive".into(),
            ));
        }
        let s = self.kd * wavelength / (2.0 * PI * lattice_spacing);
        if s.abs() > 1.0 {
            return Err(Error::InfeasibleGeometry(format!(
                "requested kd needs sin(theta) = {s}, outside [-1, 1]"
            )));
        }
        Ok(s.asin())
    }
}

/// Dressed coupling matrix `h` of an open chain: real, symmetric, zero
/// diagonal. Stored with the drive parameters that produced it.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub n_sites: usize,
    pub phi: f64,
    pub eta: f64,
    matrix: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Wraps an explicit symmetric zero-diagonal matrix.
    pub fn from_matrix(matrix: DMatrix<f64>, phi: f64, eta: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain("coupling matrix must be square".into()));
        }
        let n = matrix.nrows();
        for j in 0..n {
            if matrix[(j, j)] != 0.0 {
                return Err(Error::Domain("coupling matrix must have zero diagonal".into()));
            }
            for l in (j + 1)..n {
                if (matrix[(j, l)] - matrix[(l, j)]).abs() > 1e-12 {
                    return Err(Error::Domain("coupling matrix must be symmetric".into()));
                }
            }
        }
        Ok(CouplingMatrix {
            n_sites: n,
            phi,
            eta,
            matrix,
        })
    }

    /// Matrix element between 1-based sites `j` and `l`.
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.matrix[(j - 1, l - 1)]
    }

    /// Borrow the underlying 0-based matrix.
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Copy of the matrix with all couplings beyond `max_distance` removed.
    pub fn truncated(&self, max_distance: usize) -> CouplingMatrix {
        let n = self.n_sites;
        let mut m = self.matrix.clone();
        for j in 0..n {
            for l in 0..n {
                if j.abs_diff(l) > max_distance {
                    m[(j, l)] = 0.0;
                }
            }
        }
        CouplingMatrix {
            n_sites: n,
            phi: self.phi,
            eta: self.eta,
            matrix: m,
        }
    }

    /// Writes the matrix row-major as CSV with a `# N=.. phi=.. eta=..`
    /// header line. Floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# N={} phi={} eta={}", self.n_sites, self.phi, self.eta)?;
        for j in 0..self.n_sites {
            let row: Vec<String> = (0..self.n_sites)
                .map(|l| format!("{:.16e}", self.matrix[(j, l)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn base_model() -> CouplingModel {
        CouplingModel {
            eta: 0.62,
            ..CouplingModel::default()
        }
    }

    #[test]
    fn interaction_range_reference_value() {
        let m = base_model();
        // sqrt(ln2 / 2) * sqrt(1/4)
        assert_abs_diff_eq!(m.xi_interaction(), 0.29435250562886867, epsilon = 1e-15);
    }

    #[test]
    fn weak_bond_dressing_near_calibrated_depth() {
        let m = base_model();
        let d12 = m.bessel_dressing(1, 2).unwrap();
        // J0(sqrt(2) * 0.62)
        assert_abs_diff_eq!(d12, bessel_j0(2.0_f64.sqrt() * 0.62), epsilon = 1e-14);
        assert_abs_diff_eq!(d12, 0.818, epsilon = 2e-3);
    }

    #[test]
    fn strong_bond_is_undressed_at_three_quarter_phase() {
        let m = base_model();
        // The (2,3) bond argument contains sin(2 pi) = 0.
        assert_abs_diff_eq!(m.bessel_dressing(2, 3).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dimerization_sign_flips_between_phase_points() {
        let mut m = base_model();
        let d_topo = m.dimerization().unwrap();
        assert_abs_diff_eq!(d_topo, 0.1, epsilon = 2e-3);
        m.phi = PI / 4.0;
        let d_triv = m.dimerization().unwrap();
        assert_abs_diff_eq!(d_triv, -d_topo, epsilon = 1e-12);
    }

    #[test]
    fn eta_calibration_hits_target() {
        let m = base_model();
        let eta = m.calibrate_eta(0.1).unwrap();
        assert!((0.61..=0.63).contains(&eta), "eta = {eta}");
        let mut cal = m.clone();
        cal.eta = eta;
        assert_abs_diff_eq!(cal.dimerization().unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn tilt_angle_for_ion_trap_geometry() {
        let m = base_model();
        // 320 nm light, 10 um spacing: sin(theta) = lambda / (4 d0).
        let theta = m.standing_wave_tilt(10e-6, 320e-9).unwrap();
        assert_abs_diff_eq!(theta.sin(), 0.008, epsilon = 1e-15);
        assert_abs_diff_eq!(theta.to_degrees(), 0.458, epsilon = 1e-3);
        let mut tight = m;
        tight.kd = 4.0;
        assert!(matches!(
            tight.standing_wave_tilt(1e-9, 320e-9),
            Err(Error::InfeasibleGeometry(_))
        ));
    }

    #[test]
    fn self_coupling_rejected() {
        let m = base_model();
        assert!(matches!(m.bare_coupling(3, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn non_quarter_wave_rejected() {
        let mut m = base_model();
        m.kd = 1.0;
        assert!(matches!(
            m.bessel_dressing(1, 2),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn nearest_neighbor_form_has_single_bond_range() {
        let mut m = base_model();
        m.coupling_form = CouplingForm::NearestNeighbor;
        m.n_sites = 6;
        let c = m.build_coupling_matrix().unwrap();
        assert!(c.get(1, 2) > 0.0);
        for l in 3..=6 {
            assert_eq!(c.get(1, l), 0.0);
        }
    }

    #[test]
    fn bare_coupling_signs_alternate_in_exponential_part() {
        let mut m = base_model();
        m.coupling_form = CouplingForm::ExponentialOnly;
        assert!(m.bare_coupling(1, 2).unwrap() > 0.0);
        assert!(m.bare_coupling(1, 3).unwrap() < 0.0);
        assert!(m.bare_coupling(1, 4).unwrap() > 0.0);
    }

    #[test]
    fn dressing_is_two_site_periodic() {
        let m = base_model();
        for (j, l) in [(1_i64, 2_i64), (1, 4), (2, 7), (3, 11)] {
            assert_eq!(m.dressing_at(j, l), m.dressing_at(j + 2, l + 2));
            assert_eq!(m.dressing_at(j, l), m.dressing_at(l, j));
        }
    }

    #[test]
    fn csv_round_trip_header() {
        let mut m = base_model();
        m.n_sites = 3;
        let c = m.build_coupling_matrix().unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# N=3 phi={} eta=0.62", m.phi));
        assert_eq!(lines.count(), 3);
        assert!(text.ends_with('\n'));
    }

    proptest! {
        #[test]
        fn matrix_is_symmetric_with_zero_diagonal(
            n in 2_usize..24,
            eta in 0.0_f64..2.0,
            phi in 0.0_f64..PI,
            delta_band in 0.05_f64..10.0,
        ) {
            let m = CouplingModel {
                n_sites: n,
                eta,
                phi,
                delta_band,
                ..CouplingModel::default()
            };
            let c = m.build_coupling_matrix().unwrap();
            for j in 1..=n {
                prop_assert_eq!(c.get(j, j), 0.0);
                for l in 1..=n {
                    prop_assert_eq!(c.get(j, l), c.get(l, j));
                }
            }
        }

        #[test]
        fn dressing_magnitude_bounded_by_one_plus_overshoot(
            eta in 0.0_f64..3.0,
            phi in 0.0_f64..PI,
            j in 1_i64..50,
            d in 1_i64..50,
        ) {
            // |J0| <= 1 on the real axis.
            let m = CouplingModel { eta, phi, ..CouplingModel::default() };
            prop_assert!(m.dressing_at(j, j + d).abs() <= 1.0 + 1e-12);
        }
    }
}
