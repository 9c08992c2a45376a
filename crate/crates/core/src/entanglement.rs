//! Bipartite pure-state entanglement: reduced density operators, von Neumann
//! entropy, Schmidt analysis and fluctuation correlations.
//!
//! A state of `H₁ ⊗ H₂` is stored as its amplitude matrix `α_ij`
//! (`i` in subsystem 1, `j` in subsystem 2). The reduced operator of
//! subsystem 1 is `ρ¹_ik = Σ_j α_ij α*_kj`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exactdiag::{self, CutoffPolicy, QuantumState};
use crate::model::{CouplingMode, ModelParams};

/// Eigenvalues below this are dropped from the entropy sum (`0·ln 0 := 0`).
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Singular values above this count toward the Schmidt number.
pub const SCHMIDT_THRESHOLD: f64 = 1e-10;
/// Tolerance of the Hermiticity / trace / positivity checks.
pub const DENSITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Which physical degrees of freedom a density matrix describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Atoms,
    Field,
    /// A generic bipartition, by side.
    Custom(Subsystem),
    /// The whole system.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    amplitudes: DMatrix<Complex64>,
    /// Sector labels for the two sides.
    labels: (Sector, Sector),
}

impl BipartiteState {
    /// From an amplitude matrix; it must be normalized to `1e-10`.
    pub fn new(amplitudes: DMatrix<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state is not normalized (norm² = {norm})")));
        }
        Ok(BipartiteState {
            amplitudes,
            labels: (Sector::Custom(Subsystem::First), Sector::Custom(Subsystem::Second)),
        })
    }

    /// From a vector in the product basis `|i⟩⊗|j⟩ ↦ i·dim2 + j`.
    pub fn from_vector(v: &[Complex64], dim1: usize, dim2: usize) -> Result<Self> {
        if v.len() != dim1 * dim2 {
            return Err(Error::DimensionMismatch { expected: dim1 * dim2, got: v.len() });
        }
        Self::new(DMatrix::from_fn(dim1, dim2, |i, j| v[i * dim2 + j]))
    }

    /// `|φ⟩ ⊗ |χ⟩`; both factors are normalized here.
    pub fn product(phi: &[Complex64], chi: &[Complex64]) -> Result<Self> {
        let n1 = phi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let n2 = chi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n1 == 0.0 || n2 == 0.0 {
            return Err(Error::Domain("product factors must be nonzero".into()));
        }
        Self::new(DMatrix::from_fn(phi.len(), chi.len(), |i, j| phi[i] * chi[j] / (n1 * n2)))
    }

    /// Atoms (collective spin) as subsystem 1, field as subsystem 2.
    pub fn from_dicke(state: &QuantumState) -> Result<Self> {
        let m = state.atom_field_matrix().map(|x| Complex64::new(x, 0.0));
        let mut s = Self::new(m)?;
        s.labels = (Sector::Atoms, Sector::Field);
        Ok(s)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amplitudes.shape()
    }

    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amplitudes
    }

    /// Flattened product-basis vector.
    pub fn to_vector(&self) -> Vec<Complex64> {
        let (d1, d2) = self.dims();
        (0..d1 * d2).map(|k| self.amplitudes[(k / d2, k % d2)]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    pub sector: Sector,
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to `1e-12`).
    pub fn new(entries: DMatrix<Complex64>, sector: Sector) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermitian_deviation(&entries);
        if dev > DENSITY_TOL * scale {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let lowest = hermitian_eigenvalues(&entries).first().copied().unwrap_or(0.0);
        if lowest < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(DensityMatrix { entries, sector })
    }

    /// `|ψ⟩⟨ψ|` for the whole bipartite system.
    pub fn pure(state: &BipartiteState) -> Self {
        let v = nalgebra::DVector::from_vec(state.to_vector());
        DensityMatrix { entries: &v * v.adjoint(), sector: Sector::Global }
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// `tr[X ρ]`.
    pub fn expectation(&self, x: &DMatrix<Complex64>) -> Result<Complex64> {
        if x.shape() != self.entries.shape() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x.nrows() });
        }
        Ok((x * &self.entries).trace())
    }
}

/// Partial trace over the other subsystem, keeping `keep`.
pub fn reduce(state: &BipartiteState, keep: Subsystem) -> DensityMatrix {
    let a = &state.amplitudes;
    let (entries, sector) = match keep {
        // ρ¹_ik = Σ_j α_ij α*_kj
        Subsystem::First => (a * a.adjoint(), state.labels.0),
        // ρ²_jl = Σ_i α_ij α*_il
        Subsystem::Second => (a.transpose() * a.conjugate(), state.labels.1),
    };
    DensityMatrix { entries, sector }
}

/// `S = −Σ pᵢ ln pᵢ` in nats, over eigenvalues above [`ENTROPY_FLOOR`].
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let checked = DensityMatrix::new(rho.entries.clone(), rho.sector)?;
    Ok(entropy_of(checked.eigenvalues().into_iter()))
}

fn entropy_of(probabilities: impl Iterator<Item = f64>) -> f64 {
    // `0 − Σ` rather than `−Σ`, so a pure state gives +0.
    0.0 - probabilities
        .filter(|&p| p > ENTROPY_FLOOR)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    /// Nats.
    pub von_neumann_entropy: f64,
    pub schmidt_number: usize,
    /// Descending singular values of the amplitude matrix.
    pub schmidt_spectrum: Vec<f64>,
    pub is_separable: bool,
}

/// Singular value decomposition of the amplitude matrix.
pub fn schmidt_decompose(state: &BipartiteState) -> EntanglementReport {
    let mut s: Vec<f64> = state.amplitudes.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let schmidt_number = s.iter().filter(|&&x| x > SCHMIDT_THRESHOLD).count();
    let entropy = entropy_of(s.iter().map(|x| x * x));
    EntanglementReport {
        von_neumann_entropy: entropy,
        schmidt_number,
        schmidt_spectrum: s,
        is_separable: schmidt_number == 1,
    }
}

fn check_hermitian(x: &DMatrix<Complex64>) -> Result<()> {
    if !x.is_square() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = hermitian_deviation(x);
    if dev > DENSITY_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// `⟨ψ| X ⊗ I |ψ⟩` (or `I ⊗ X`) computed on the full space, without reducing.
pub fn expectation_full(state: &BipartiteState, x: &DMatrix<Complex64>, side: Subsystem) -> Result<Complex64> {
    let a = &state.amplitudes;
    let (d1, d2) = state.dims();
    let expected = if side == Subsystem::First { d1 } else { d2 };
    if x.nrows() != expected || x.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.nrows() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d1 {
        for j in 0..d2 {
            let bra = a[(i, j)].conj();
            let mut ket = Complex64::new(0.0, 0.0);
            match side {
                Subsystem::First => {
                    for k in 0..d1 {
                        ket += x[(i, k)] * a[(k, j)];
                    }
                }
                Subsystem::Second => {
                    for l in 0..d2 {
                        ket += x[(j, l)] * a[(i, l)];
                    }
                }
            }
            acc += bra * ket;
        }
    }
    Ok(acc)
}

/// `⟨δX₁ δX₂⟩ = ⟨X₁ ⊗ X₂⟩ − ⟨X₁⟩⟨X₂⟩` with `δX = X − ⟨X⟩`.
pub fn fluctuation_correlation(state: &BipartiteState, x1: &DMatrix<Complex64>, x2: &DMatrix<Complex64>) -> Result<f64> {
    check_hermitian(x1)?;
    check_hermitian(x2)?;
    let (d1, d2) = state.dims();
    if x1.nrows() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: x1.nrows() });
    }
    if x2.nrows() != d2 {
        return Err(Error::DimensionMismatch { expected: d2, got: x2.nrows() });
    }
    let a = &state.amplitudes;
    // ⟨ψ|X₁⊗X₂|ψ⟩ = tr[α† X₁ α X₂ᵀ]
    let joint = (a.adjoint() * x1 * a * x2.transpose()).trace();
    let m1 = expectation_full(state, x1, Subsystem::First)?;
    let m2 = expectation_full(state, x2, Subsystem::Second)?;
    Ok((joint - m1 * m2).re)
}

/// Verdict of the fluctuation-correlation test. A nonzero correlation proves
/// entanglement of a pure state; zero correlation for one pair proves nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationVerdict {
    Entangled,
    Inconclusive,
}

pub const CORRELATION_TOL: f64 = 1e-8;

/// Runs the fluctuation test on a global density matrix over `dim1 × dim2`.
/// Mixed inputs are refused: correlations there need not come from
/// entanglement.
pub fn correlation_verdict(
    rho: &DensityMatrix,
    dim1: usize,
    dim2: usize,
    x1: &DMatrix<Complex64>,
    x2: &DMatrix<Complex64>,
) -> Result<CorrelationVerdict> {
    if rho.dimension() != dim1 * dim2 {
        return Err(Error::DimensionMismatch { expected: dim1 * dim2, got: rho.dimension() });
    }
    let purity = rho.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::MixedState(purity));
    }
    let eig = SymmetricEigen::new(rho.entries.clone());
    let top = eig.eigenvalues.imax();
    let v: Vec<Complex64> = eig.eigenvectors.column(top).iter().copied().collect();
    let state = BipartiteState::from_vector(&v, dim1, dim2)?;
    let cov = fluctuation_correlation(&state, x1, x2)?;
    Ok(if cov.abs() > CORRELATION_TOL { CorrelationVerdict::Entangled } else { CorrelationVerdict::Inconclusive })
}

/// Ground-state atoms/field entanglement across a coupling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyScan {
    pub n_atoms: usize,
    pub n_max: usize,
    pub grid: Vec<f64>,
    pub entropies: Vec<f64>,
    pub schmidt_numbers: Vec<usize>,
    pub energies: Vec<f64>,
    /// Coupling of the entropy maximum (ties to the smallest).
    pub argmax_g: f64,
    /// `ln(min(n_max + 1, N + 1))`.
    pub bound: f64,
}

/// Entanglement entropy of the reduced state of `keep` (atoms = first,
/// field = second) for the ground state at each grid coupling. The cutoff is
/// chosen like [`exactdiag::qpt_scan`].
pub fn entropy_scan(
    base: &ModelParams,
    mode: CouplingMode,
    grid: &[f64],
    n_atoms: usize,
    keep: Subsystem,
    policy: &CutoffPolicy,
) -> Result<EntropyScan> {
    if grid.is_empty() {
        return Err(Error::Domain("empty coupling grid".into()));
    }
    let p = base.with_atoms(n_atoms);
    let g_top = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (g1, g2) = mode.couplings(g_top);
    let (n_max, _) = exactdiag::converged_cutoff(&p.with_couplings(g1, g2), false, policy)?;
    let points = exactdiag::scan_ground_levels(&p, mode, grid, n_max, false, policy.limits, |_, gs| {
        let state = BipartiteState::from_dicke(gs.primary())?;
        let entropy = von_neumann_entropy(&reduce(&state, keep))?;
        let schmidt = schmidt_decompose(&state);
        Ok::<_, Error>((entropy, schmidt.schmidt_number, gs.energy()))
    })?;
    let mut entropies = Vec::with_capacity(grid.len());
    let mut schmidt_numbers = Vec::with_capacity(grid.len());
    let mut energies = Vec::with_capacity(grid.len());
    for r in points {
        let (s, k, e) = r?;
        entropies.push(s);
        schmidt_numbers.push(k);
        energies.push(e);
    }
    let best = exactdiag::argmax(&entropies).unwrap_or(0);
    Ok(EntropyScan {
        n_atoms,
        n_max,
        grid: grid.to_vec(),
        argmax_g: grid[best],
        entropies,
        schmidt_numbers,
        energies,
        bound: ((n_max + 1).min(n_atoms + 1) as f64).ln(),
    })
}
