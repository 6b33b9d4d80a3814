//! Ground-state physics of the interacting spin chain.
//!
//! Excitation number is conserved, so the ground state is found by exact
//! diagonalization inside each fixed-excitation sector. A distance-two
//! truncation of the fermionized chain gives a quadratic part plus a
//! quartic interaction; the interaction is reduced to an effective
//! one-body potential by pairing two operators at a time and evaluating
//! the pairings on the free ground state. The same potential feeds a
//! perturbative quasiparticle weight for the boundary mode.

use nalgebra::DMatrix;

use crate::couplings::{CouplingMatrix, CouplingModel};
use crate::error::{Error, Result};
use crate::lattice::{find_edge_states, SpectralDecomposition};
use crate::linalg::{lanczos_lowest, symmetric_eigen_sorted};

const MAX_BASIS_SITES: usize = 20;
const MAX_EXACT_SITES: usize = 16;
/// Largest sector dimension handled by the dense eigensolver; larger
/// sectors go through Lanczos.
const DENSE_SECTOR_LIMIT: usize = 600;

/// Orthonormal basis of the fixed-excitation sector of a spin chain.
///
/// States are bit patterns (bit j set = excitation on site j+1) with a
/// fixed popcount, stored in ascending numeric order.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub n_excitations: usize,
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_excitations: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_BASIS_SITES {
            return Err(Error::ResourceLimit(format!(
                "sector basis supports 1..={MAX_BASIS_SITES} sites, got {n_sites}"
            )));
        }
        if n_excitations > n_sites {
            return Err(Error::Domain(format!(
                "cannot place {n_excitations} excitations on {n_sites} sites"
            )));
        }
        let states: Vec<u32> = (0u32..1 << n_sites)
            .filter(|s| s.count_ones() as usize == n_excitations)
            .collect();
        Ok(SectorBasis {
            n_sites,
            n_excitations,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of a bit pattern in the basis, if it belongs to the sector.
    pub fn index_of(&self, pattern: u32) -> Option<usize> {
        self.states.binary_search(&pattern).ok()
    }
}

/// Global ground state of the spin chain, with its sector.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// Normalized amplitudes over `sector.states`.
    pub state: Vec<f64>,
    pub sector: SectorBasis,
    /// Set when another sector ties the minimum within tolerance; the
    /// lowest excitation number is reported in that case.
    pub tie_degenerate: bool,
}

/// Exchange bonds of a sector Hamiltonian: bit masks of the two sites and
/// the matrix element that moves an excitation between them.
struct HopList {
    hops: Vec<(u32, u32, f64)>,
}

impl HopList {
    fn from_matrix(matrix: &CouplingMatrix) -> Self {
        let n = matrix.as_matrix().nrows();
        let mut hops = Vec::new();
        for j in 0..n {
            for l in (j + 1)..n {
                let w = 2.0 * matrix.as_matrix()[(j, l)];
                if w != 0.0 {
                    hops.push((1u32 << j, 1u32 << l, w));
                }
            }
        }
        HopList { hops }
    }

    fn apply(&self, basis: &SectorBasis, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &s) in basis.states.iter().enumerate() {
            if x[i] == 0.0 {
                continue;
            }
            for &(mj, ml, w) in &self.hops {
                let has_j = s & mj != 0;
                let has_l = s & ml != 0;
                if has_j != has_l {
                    let t = s ^ mj ^ ml;
                    let k = basis.index_of(t).expect("hop stays inside the sector");
                    out[k] += w * x[i];
                }
            }
        }
    }

    fn dense(&self, basis: &SectorBasis) -> DMatrix<f64> {
        let dim = basis.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (i, &s) in basis.states.iter().enumerate() {
            for &(mj, ml, w) in &self.hops {
                let has_j = s & mj != 0;
                let has_l = s & ml != 0;
                if has_j != has_l {
                    let t = s ^ mj ^ ml;
                    let k = basis.index_of(t).expect("hop stays inside the sector");
                    h[(k, i)] += w;
                }
            }
        }
        h
    }
}

/// Lowest eigenpair of one excitation sector.
fn sector_ground(hops: &HopList, basis: &SectorBasis) -> Result<(f64, Vec<f64>)> {
    let dim = basis.len();
    if dim == 1 {
        return Ok((0.0, vec![1.0]));
    }
    if dim <= DENSE_SECTOR_LIMIT {
        let (values, vectors) = symmetric_eigen_sorted(hops.dense(basis))?;
        return Ok((values[0], vectors.column(0).iter().copied().collect()));
    }
    lanczos_lowest(
        dim,
        |x, out| hops.apply(basis, x, out),
        500,
        1e-11,
    )
}

/// Ground state of the full spin chain, searching every excitation sector.
///
/// Degenerate minima across sectors are resolved toward the lowest
/// excitation number and flagged. Inside a sector the solver returns one
/// representative of a possibly degenerate ground multiplet.
pub fn exact_ground_state(matrix: &CouplingMatrix) -> Result<GroundState> {
    let n = matrix.as_matrix().nrows();
    if n > MAX_EXACT_SITES {
        return Err(Error::ResourceLimit(format!(
            "exact ground state supports up to {MAX_EXACT_SITES} sites, got {n}"
        )));
    }
    let hops = HopList::from_matrix(matrix);
    let mut best: Option<(f64, Vec<f64>, SectorBasis)> = None;
    let mut tie = false;
    for m in 0..=n {
        let basis = SectorBasis::new(n, m)?;
        let (energy, state) = sector_ground(&hops, &basis)?;
        match &best {
            None => best = Some((energy, state, basis)),
            Some((e_best, _, _)) => {
                let tol = 1e-9 * e_best.abs().max(1.0);
                if energy < e_best - tol {
                    best = Some((energy, state, basis));
                    tie = false;
                } else if energy < e_best + tol {
                    tie = true;
                }
            }
        }
    }
    let (energy, state, sector) = best.expect("at least one sector");
    Ok(GroundState {
        energy,
        state,
        sector,
        tie_degenerate: tie,
    })
}

/// End-to-end correlator of z spin components, from bit-pattern weights.
pub fn correlator_zz(state: &[f64], basis: &SectorBasis) -> Result<f64> {
    if state.len() != basis.len() {
        return Err(Error::Domain(format!(
            "state length {} does not match sector size {}",
            state.len(),
            basis.len()
        )));
    }
    let norm: f64 = state.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "state norm {norm:.10} is not 1"
        )));
    }
    let last = 1u32 << (basis.n_sites - 1);
    let mut zz = 0.0;
    for (&s, &a) in basis.states.iter().zip(state) {
        let z1 = if s & 1 != 0 { -1.0 } else { 1.0 };
        let zn = if s & last != 0 { -1.0 } else { 1.0 };
        zz += a * a * z1 * zn;
    }
    Ok(zz)
}

/// Hopping amplitudes of the distance-two fermion model: `(first, second)`
/// neighbor arrays of lengths N-1 and N-2, each twice the corresponding
/// dressed coupling.
pub fn build_truncated_fermion_model(model: &CouplingModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = model.n_sites;
    if n < 3 {
        return Err(Error::Domain(format!(
            "truncated model needs at least 3 sites, got {n}"
        )));
    }
    let mut j1 = Vec::with_capacity(n - 1);
    let mut j2 = Vec::with_capacity(n - 2);
    for j in 1..n {
        let bare = model.bare_at_distance(1);
        j1.push(2.0 * bare * model.dressing_at(j as i64, j as i64 + 1));
    }
    for j in 1..(n - 1) {
        let bare = model.bare_at_distance(2);
        j2.push(2.0 * bare * model.dressing_at(j as i64, j as i64 + 2));
    }
    Ok((j1, j2))
}

/// Effective one-body description of the truncated interacting chain.
#[derive(Debug, Clone)]
pub struct HartreeFockResult {
    /// Mode energies of the quadratic part, ascending.
    pub orbital_energies: Vec<f64>,
    /// Mode amplitudes of the quadratic part (columns are modes).
    pub orbitals: DMatrix<f64>,
    /// Effective one-body potential induced by the interaction, in the
    /// mode basis of the quadratic part.
    pub v_matrix: DMatrix<f64>,
    /// Orbital energies after the potential is folded in, ascending.
    pub hf_energies: Vec<f64>,
    /// Indices of filled (strictly negative) corrected orbitals.
    pub occupation: Vec<usize>,
    /// End-to-end z-z correlator of the corrected ground state.
    pub correlator_zz: f64,
    /// Boundary-mode quasiparticle weight; NaN when the quadratic part has
    /// no boundary orbital to track.
    pub z_weight: f64,
    /// Mode index of the boundary orbital the weight refers to.
    pub edge_orbital: Option<usize>,
    /// Set when a corrected orbital sits at zero energy within 1e-10; the
    /// alternative filling including the zero modes is then also reported.
    pub ambiguous_filling: bool,
    pub alt_correlator_zz: Option<f64>,
}

/// One-body hopping matrix of the truncated fermion model.
fn one_body_matrix(j1: &[f64], j2: &[f64]) -> DMatrix<f64> {
    let n = j1.len() + 1;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (j, &v) in j1.iter().enumerate() {
        h[(j, j + 1)] = v;
        h[(j + 1, j)] = v;
    }
    for (j, &v) in j2.iter().enumerate() {
        h[(j, j + 2)] = v;
        h[(j + 2, j)] = v;
    }
    h
}

/// Near-diagonal entries of a one-body correlation matrix sum over filled
/// modes: `diag[a] = C(a,a)`, `off1[a] = C(a,a+1)`, `off2[a] = C(a,a+2)`.
struct NearDiagonal {
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

fn near_diagonal(amps: &DMatrix<f64>, filled: &[usize]) -> NearDiagonal {
    let n = amps.nrows();
    let mut diag = vec![0.0; n];
    let mut off1 = vec![0.0; n.saturating_sub(1)];
    let mut off2 = vec![0.0; n.saturating_sub(2)];
    for &q in filled {
        for a in 0..n {
            let ma = amps[(a, q)];
            diag[a] += ma * ma;
            if a + 1 < n {
                off1[a] += ma * amps[(a + 1, q)];
            }
            if a + 2 < n {
                off2[a] += ma * amps[(a + 2, q)];
            }
        }
    }
    NearDiagonal { diag, off1, off2 }
}

/// Effective potential from pairing two operators of the quartic term on a
/// state with the given near-diagonal correlations.
///
/// Expanding the four pairings leaves, for each second-neighbor bond j,
/// six bilinears in the mode amplitudes weighted by correlation entries;
/// the assembly is linear in the bond count for every matrix element.
fn assemble_v(m: &DMatrix<f64>, j2: &[f64], c: &NearDiagonal) -> DMatrix<f64> {
    let n = m.nrows();
    let mut v = DMatrix::<f64>::zeros(n, n);
    for mu in 0..n {
        for nu in mu..n {
            let mut acc = 0.0;
            for (j, &w) in j2.iter().enumerate() {
                let m0a = m[(j, mu)];
                let m1a = m[(j + 1, mu)];
                let m2a = m[(j + 2, mu)];
                let m0b = m[(j, nu)];
                let m1b = m[(j + 1, nu)];
                let m2b = m[(j + 2, nu)];
                acc += w
                    * (-c.off1[j] * m1a * m2b - c.off1[j + 1] * m1a * m0b
                        + 2.0 * c.off2[j] * m1a * m1b
                        + c.diag[j + 1] * (m0a * m2b + m2a * m0b)
                        - c.off1[j + 1] * m0a * m1b
                        - c.off1[j] * m2a * m1b);
            }
            v[(mu, nu)] = acc;
            v[(nu, mu)] = acc;
        }
    }
    v
}

/// End-to-end z-z correlator of a filled-mode state via pair contractions.
fn wick_zz(amps: &DMatrix<f64>, filled: &[usize]) -> f64 {
    let n = amps.nrows();
    let (mut c11, mut cnn, mut c1n) = (0.0, 0.0, 0.0);
    for &q in filled {
        c11 += amps[(0, q)] * amps[(0, q)];
        cnn += amps[(n - 1, q)] * amps[(n - 1, q)];
        c1n += amps[(0, q)] * amps[(n - 1, q)];
    }
    (1.0 - 2.0 * c11) * (1.0 - 2.0 * cnn) - 4.0 * c1n * c1n
}

fn filled_below(energies: &[f64], threshold: f64) -> Vec<usize> {
    energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e < threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Boundary orbital of the quadratic spectrum: the accepted midgap level
/// closest to zero energy, if the spectrum is topological.
fn locate_edge_orbital(energies: &[f64], states: &DMatrix<f64>) -> Option<usize> {
    let decomp = SpectralDecomposition {
        energies: energies.to_vec(),
        states: states.clone(),
    };
    match find_edge_states(&decomp, 0.1) {
        Ok(report) if report.topological => report
            .midgap_indices
            .iter()
            .copied()
            .min_by(|&a, &b| energies[a].abs().total_cmp(&energies[b].abs())),
        _ => None,
    }
}

/// Single-shot effective one-body treatment of the truncated chain, with
/// the interaction scaled by `scale` (1 recovers the full model).
pub fn hartree_fock_with_interaction_scale(
    model: &CouplingModel,
    scale: f64,
) -> Result<HartreeFockResult> {
    let (j1, j2) = build_truncated_fermion_model(model)?;
    let h0 = one_body_matrix(&j1, &j2);
    let (eps, m) = symmetric_eigen_sorted(h0)?;
    let free_filled = filled_below(&eps, 0.0);
    let c_free = near_diagonal(&m, &free_filled);

    let mut v = assemble_v(&m, &j2, &c_free);
    v.scale_mut(scale);

    let n = eps.len();
    let mut h_hf = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        h_hf[(i, i)] = eps[i];
    }
    h_hf -= 2.0 * &v;
    let (hf_energies, w) = symmetric_eigen_sorted(h_hf)?;

    let site_amps = &m * &w;
    let zero_tol = 1e-10;
    let occupation = filled_below(&hf_energies, -zero_tol);
    let zero_modes: Vec<usize> = (0..n)
        .filter(|&i| hf_energies[i].abs() <= zero_tol)
        .collect();
    let ambiguous_filling = !zero_modes.is_empty();
    let correlator_zz = wick_zz(&site_amps, &occupation);
    let alt_correlator_zz = if ambiguous_filling {
        let mut alt = occupation.clone();
        alt.extend_from_slice(&zero_modes);
        Some(wick_zz(&site_amps, &alt))
    } else {
        None
    };

    let edge_orbital = locate_edge_orbital(&eps, &m);
    let mut result = HartreeFockResult {
        orbital_energies: eps,
        orbitals: m,
        v_matrix: v,
        hf_energies,
        occupation,
        correlator_zz,
        z_weight: f64::NAN,
        edge_orbital,
        ambiguous_filling,
        alt_correlator_zz,
    };
    if let Some(es) = edge_orbital {
        result.z_weight = quasiparticle_weight(&result, es)?;
    }
    Ok(result)
}

/// Single-shot effective one-body treatment of the truncated chain.
pub fn hartree_fock(model: &CouplingModel) -> Result<HartreeFockResult> {
    hartree_fock_with_interaction_scale(model, 1.0)
}

/// Self-consistent variant: the potential is rebuilt from the corrected
/// ground state until the near-diagonal correlations stop moving. Not
/// used by the headline observables, which follow the single-shot recipe.
pub fn hartree_fock_self_consistent(
    model: &CouplingModel,
    max_iter: usize,
    tol: f64,
) -> Result<HartreeFockResult> {
    let (j1, j2) = build_truncated_fermion_model(model)?;
    let h0 = one_body_matrix(&j1, &j2);
    let (eps, m) = symmetric_eigen_sorted(h0)?;
    let n = eps.len();

    let mut filled = filled_below(&eps, 0.0);
    let mut amps = m.clone();
    let mut c = near_diagonal(&amps, &filled);
    for _ in 0..max_iter {
        let v = assemble_v(&m, &j2, &c);
        let mut h_hf = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            h_hf[(i, i)] = eps[i];
        }
        h_hf -= 2.0 * &v;
        let (hf_energies, w) = symmetric_eigen_sorted(h_hf)?;
        amps = &m * &w;
        filled = filled_below(&hf_energies, -1e-10);
        let c_next = near_diagonal(&amps, &filled);
        let drift = c
            .diag
            .iter()
            .chain(&c.off1)
            .chain(&c.off2)
            .zip(c_next.diag.iter().chain(&c_next.off1).chain(&c_next.off2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let converged = drift <= tol;
        c = c_next;
        if converged {
            let v = assemble_v(&m, &j2, &c);
            let mut h_hf = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                h_hf[(i, i)] = eps[i];
            }
            h_hf -= 2.0 * &v;
            let (hf_energies, w) = symmetric_eigen_sorted(h_hf)?;
            let site_amps = &m * &w;
            let occupation = filled_below(&hf_energies, -1e-10);
            let zero_modes: Vec<usize> = (0..n)
                .filter(|&i| hf_energies[i].abs() <= 1e-10)
                .collect();
            let ambiguous_filling = !zero_modes.is_empty();
            let correlator_zz = wick_zz(&site_amps, &occupation);
            let alt_correlator_zz = if ambiguous_filling {
                let mut alt = occupation.clone();
                alt.extend_from_slice(&zero_modes);
                Some(wick_zz(&site_amps, &alt))
            } else {
                None
            };
            let edge_orbital = locate_edge_orbital(&eps, &m);
            let mut result = HartreeFockResult {
                orbital_energies: eps,
                orbitals: m,
                v_matrix: v,
                hf_energies,
                occupation,
                correlator_zz,
                z_weight: f64::NAN,
                edge_orbital,
                ambiguous_filling,
                alt_correlator_zz,
            };
            if let Some(es) = edge_orbital {
                result.z_weight = quasiparticle_weight(&result, es)?;
            }
            return Ok(result);
        }
    }
    Err(Error::NumericalFailure(format!(
        "self-consistent loop did not settle within {max_iter} iterations"
    )))
}

/// Perturbative weight of the boundary orbital against potential-induced
/// mixing with the rest of the spectrum.
pub fn quasiparticle_weight(hf: &HartreeFockResult, edge_index: usize) -> Result<f64> {
    let n = hf.orbital_energies.len();
    if edge_index >= n {
        return Err(Error::Domain(format!(
            "orbital index {edge_index} out of range for {n} modes"
        )));
    }
    let v_max = hf.v_matrix.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let e_es = hf.orbital_energies[edge_index];
    let mut mixing = 0.0;
    for mu in 0..n {
        if mu == edge_index {
            continue;
        }
        let de = e_es - hf.orbital_energies[mu];
        let v = hf.v_matrix[(edge_index, mu)];
        if de.abs() < 1e-12 {
            if v.abs() > 1e-12 * v_max {
                return Err(Error::DegeneratePerturbation(format!(
                    "orbitals {edge_index} and {mu} are degenerate with nonzero mixing {v:.3e}"
                )));
            }
            continue;
        }
        mixing += 4.0 * v * v / (de * de);
    }
    Ok(1.0 - mixing)
}
