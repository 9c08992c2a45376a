//! Finite-N exact diagonalization in the symmetric `j = N/2` sector.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = Ω J_z + ω₀ b†b + (1/√N)[g₁(b J⁺ + b† J⁻) + g₂(b J⁻ + b† J⁺)]
//!     + (λ/N)(J⁺J⁻ − J_z − N/2)
//! ```
//!
//! where the last term is `(λ/N) Σ_{i≠j} σᵢ⁺σⱼ⁻` restricted to the symmetric
//! sector. The boson mode is truncated at `n_max`.
//!
//! Every coupling changes `n + m` by 0 or ±2, so the parity `(−1)^{n+m+N/2}`
//! is conserved; with only one of `g₁`, `g₂` nonzero the charge `n ± m` is
//! conserved as well. The matrix is stored sparsely and diagonalized block by
//! block over the connected components of its coupling graph: densely for the
//! full spectrum, by Lanczos when only the ground state of a large block is
//! needed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lanczos::{self, SparseSymmetric};
use crate::model::{Basis, BasisIndex, CouplingMode, ModelParams, Temperature};
use crate::par;

/// Caps on the problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeLimits {
    /// Total basis dimension.
    pub max_dimension: usize,
    /// Largest block handed to the dense eigensolver.
    pub max_block: usize,
}

impl Default for SizeLimits {
    fn default() -> Self {
        SizeLimits { max_dimension: 200_000, max_block: 4096 }
    }
}

/// Real symmetric Hamiltonian over the truncated Fock ⊗ collective-spin basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub basis: Basis,
    pub params: ModelParams,
    pub include_dipole: bool,
    diagonal: Vec<f64>,
    /// Upper-triangle entries `(i, j, value)` with `i < j`.
    upper: Vec<(usize, usize, f64)>,
}

pub fn build_hamiltonian(p: &ModelParams, n_max: usize, include_dipole: bool) -> Result<HamiltonianMatrix> {
    build_hamiltonian_with(p, n_max, include_dipole, SizeLimits::default())
}

pub fn build_hamiltonian_with(
    p: &ModelParams,
    n_max: usize,
    include_dipole: bool,
    limits: SizeLimits,
) -> Result<HamiltonianMatrix> {
    let p = p.validate()?;
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let basis = Basis::new(p.n_atoms, n_max);
    let dim = basis.dimension();
    if dim > limits.max_dimension {
        return Err(Error::DimensionCap { dimension: dim, cap: limits.max_dimension });
    }

    let n_atoms = p.n_atoms as f64;
    let j = basis.spin_j();
    let jj = j * (j + 1.0);
    let scale = 1.0 / n_atoms.sqrt();
    let mut diagonal = vec![0.0; dim];
    let mut upper = Vec::new();

    for n in 0..=n_max {
        for k in 0..=p.n_atoms {
            let m = k as f64 - j;
            let i = basis.index_of(n, k);
            let mut d = p.omega * m + p.omega0 * n as f64;
            if include_dipole {
                // J⁺J⁻|m⟩ = (j + m)(j − m + 1)|m⟩
                let raise_lower = (j + m) * (j - m + 1.0);
                d += p.lambda / n_atoms * (raise_lower - m - 0.5 * n_atoms);
            }
            diagonal[i] = d;
            if n == 0 {
                continue;
            }
            let boson = (n as f64).sqrt();
            // b J⁺: |n, m⟩ → |n−1, m+1⟩
            if p.g1 != 0.0 && k < p.n_atoms {
                let v = p.g1 * scale * boson * (jj - m * (m + 1.0)).sqrt();
                let t = basis.index_of(n - 1, k + 1);
                upper.push((t.min(i), t.max(i), v));
            }
            // b J⁻: |n, m⟩ → |n−1, m−1⟩
            if p.g2 != 0.0 && k > 0 {
                let v = p.g2 * scale * boson * (jj - m * (m - 1.0)).sqrt();
                let t = basis.index_of(n - 1, k - 1);
                upper.push((t.min(i), t.max(i), v));
            }
        }
    }
    upper.sort_by_key(|&(a, b, _)| (a, b));
    Ok(HamiltonianMatrix { basis, params: p, include_dipole, diagonal, upper })
}

impl HamiltonianMatrix {
    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn n_max(&self) -> usize {
        self.basis.n_max
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Nonzero strictly-upper entries `(i, j, value)`.
    pub fn off_diagonal(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diagonal));
        for &(i, j, v) in &self.upper {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        debug_assert_eq!(m.nrows(), d);
        m
    }

    /// Bound on the operator norm (largest absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let mut rows: Vec<f64> = self.diagonal.iter().map(|d| d.abs()).collect();
        for &(i, j, v) in &self.upper {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Connected components of the coupling graph, each sorted ascending;
    /// blocks are ordered by their smallest index.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let d = self.dimension();
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _) in &self.upper {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut slot = vec![usize::MAX; d];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..d {
            let r = find(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[r]].push(i);
        }
        blocks
    }
}

/// Eigenpairs of one block; `vectors` columns are in block-local coordinates.
#[derive(Debug, Clone)]
struct EigenBlock {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// Full eigendecomposition, stored per block.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub basis: Basis,
    blocks: Vec<EigenBlock>,
    /// `(block, column)` of every eigenpair, sorted by energy.
    order: Vec<(usize, usize)>,
    norm: f64,
}

/// Block-local diagonal and upper-triangle entries.
fn block_entries(h: &HamiltonianMatrix, indices: &[usize], lookup: &[usize]) -> SparseSymmetric {
    let diagonal = indices.iter().map(|&i| h.diagonal[i]).collect();
    let mut upper = Vec::new();
    // Entries are sorted by row, so the block's entries sit between the first
    // and last global row of the block.
    let first = indices[0];
    let last = *indices.last().unwrap();
    let start = h.upper.partition_point(|&(i, _, _)| i < first);
    for &(i, j, v) in &h.upper[start..] {
        if i > last {
            break;
        }
        let (a, b) = (lookup[i], lookup[j]);
        if a != usize::MAX && b != usize::MAX {
            upper.push((a, b, v));
        }
    }
    SparseSymmetric { diagonal, upper }
}

fn dense_eigen(m: &SparseSymmetric) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let size = m.diagonal.len();
    let mut d = DMatrix::from_diagonal(&DVector::from_column_slice(&m.diagonal));
    for &(a, b, v) in &m.upper {
        d[(a, b)] += v;
        d[(b, a)] += v;
    }
    let eig = SymmetricEigen::try_new(d, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("no convergence on a block of size {size}")))?;
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen(format!("non-finite eigenvalue in a block of size {size}")));
    }
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn solve_block(h: &HamiltonianMatrix, indices: Vec<usize>, lookup: &[usize], max_block: usize) -> Result<EigenBlock> {
    if indices.len() > max_block {
        return Err(Error::DimensionCap { dimension: indices.len(), cap: max_block });
    }
    let (values, vectors) = dense_eigen(&block_entries(h, &indices, lookup))?;
    Ok(EigenBlock { indices, values, vectors })
}

/// Calls `f` on every block with `lookup` mapping global to local indices.
fn for_each_block<T>(
    h: &HamiltonianMatrix,
    mut f: impl FnMut(Vec<usize>, &[usize]) -> Result<T>,
) -> Result<Vec<T>> {
    let groups = h.blocks();
    let mut lookup = vec![usize::MAX; h.dimension()];
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        for (a, &i) in g.iter().enumerate() {
            lookup[i] = a;
        }
        let clear = g.clone();
        out.push(f(g, &lookup)?);
        for i in clear {
            lookup[i] = usize::MAX;
        }
    }
    Ok(out)
}

pub fn diagonalize(h: &HamiltonianMatrix) -> Result<Eigensystem> {
    diagonalize_with(h, SizeLimits::default())
}

pub fn diagonalize_with(h: &HamiltonianMatrix, limits: SizeLimits) -> Result<Eigensystem> {
    let blocks = for_each_block(h, |g, lookup| solve_block(h, g, lookup, limits.max_block))?;
    let mut order: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| (0..blk.values.len()).map(move |c| (b, c)))
        .collect();
    order.sort_by(|&(b1, c1), &(b2, c2)| {
        blocks[b1].values[c1]
            .total_cmp(&blocks[b2].values[c2])
            .then((b1, c1).cmp(&(b2, c2)))
    });
    Ok(Eigensystem { basis: h.basis, blocks, order, norm: h.norm_bound() })
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        self.order.iter().map(|&(b, c)| self.blocks[b].values[c]).collect()
    }

    pub fn energy(&self, k: usize) -> f64 {
        let (b, c) = self.order[k];
        self.blocks[b].values[c]
    }

    /// `k`-th eigenstate (ascending energy) as a full vector.
    pub fn state(&self, k: usize) -> QuantumState {
        let (b, c) = self.order[k];
        let blk = &self.blocks[b];
        let mut amps = DVector::zeros(self.basis.dimension());
        for (a, &i) in blk.indices.iter().enumerate() {
            amps[i] = blk.vectors[(a, c)];
        }
        QuantumState::new(self.basis, amps, blk.values[c])
    }

    /// `Σ_i |v_i|² f(i)` for the `k`-th eigenstate and a diagonal observable `f`.
    fn diagonal_expectation(&self, k: usize, f: impl Fn(usize) -> f64) -> f64 {
        let (b, c) = self.order[k];
        let blk = &self.blocks[b];
        blk.indices
            .iter()
            .enumerate()
            .map(|(a, &i)| blk.vectors[(a, c)].powi(2) * f(i))
            .sum()
    }
}

/// Pure state over the Fock ⊗ collective-spin basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub basis: Basis,
    pub amplitudes: DVector<f64>,
    pub energy: f64,
}

impl QuantumState {
    /// Normalizes and fixes the sign so the largest-magnitude amplitude is
    /// positive (ties: lowest index).
    pub fn new(basis: Basis, mut amplitudes: DVector<f64>, energy: f64) -> Self {
        let norm = amplitudes.norm();
        if norm > 0.0 {
            amplitudes /= norm;
        }
        let mut best = 0;
        for i in 1..amplitudes.len() {
            if amplitudes[i].abs() > amplitudes[best].abs() {
                best = i;
            }
        }
        if !amplitudes.is_empty() && amplitudes[best] < 0.0 {
            amplitudes.neg_mut();
        }
        QuantumState { basis, amplitudes, energy }
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].powi(2)
    }

    /// `⟨b†b⟩`.
    pub fn mean_photons(&self) -> f64 {
        (0..self.amplitudes.len())
            .map(|i| self.probability(i) * self.basis.state(i).fock_n as f64)
            .sum()
    }

    /// `⟨J_z⟩`.
    pub fn mean_jz(&self) -> f64 {
        (0..self.amplitudes.len())
            .map(|i| self.probability(i) * self.basis.state(i).spin_m)
            .sum()
    }

    /// Probability of the highest retained Fock level.
    pub fn cutoff_tail(&self) -> f64 {
        let n_max = self.basis.n_max;
        (0..=self.basis.n_atoms)
            .map(|k| self.probability(self.basis.index_of(n_max, k)))
            .sum()
    }

    /// `⟨(−1)^{n+m+N/2}⟩`; ±1 for a state of definite parity.
    pub fn parity(&self) -> f64 {
        let j = self.basis.spin_j();
        (0..self.amplitudes.len())
            .map(|i| {
                let BasisIndex { fock_n, spin_m } = self.basis.state(i);
                let exponent = (fock_n as f64 + spin_m + j).round() as i64;
                let sign = if exponent % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.probability(i)
            })
            .sum()
    }

    /// Amplitudes arranged as a `(N+1) × (n_max+1)` matrix indexed
    /// `(spin slot m + N/2, fock n)`: atoms first, field second.
    pub fn atom_field_matrix(&self) -> DMatrix<f64> {
        let b = self.basis;
        DMatrix::from_fn(b.spin_dim(), b.fock_dim(), |k, n| self.amplitudes[b.index_of(n, k)])
    }
}

/// Lowest energy level. When the gap to the next level is below
/// `1e-12·‖H‖` the whole (numerically) degenerate set is returned.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundLevel {
    pub states: Vec<QuantumState>,
    pub degenerate: bool,
}

impl GroundLevel {
    /// Deterministic representative: lowest energy, then lowest block.
    pub fn primary(&self) -> &QuantumState {
        &self.states[0]
    }

    pub fn energy(&self) -> f64 {
        self.states[0].energy
    }
}

pub const DEGENERACY_RTOL: f64 = 1e-12;

pub fn ground_level(eig: &Eigensystem) -> GroundLevel {
    let e0 = eig.energy(0);
    let tol = DEGENERACY_RTOL * eig.norm.max(f64::MIN_POSITIVE);
    let count = (0..eig.len()).take_while(|&k| eig.energy(k) - e0 <= tol).count().max(1);
    GroundLevel { states: (0..count).map(|k| eig.state(k)).collect(), degenerate: count > 1 }
}

/// Blocks above this size are solved for their lowest state only, by Lanczos.
pub const LANCZOS_MIN_BLOCK: usize = 160;

/// Ground level without the full spectrum. Blocks larger than
/// [`LANCZOS_MIN_BLOCK`] contribute their lowest state only, so a degeneracy
/// inside one such block is not detected; degeneracies between blocks are.
pub fn ground_state(h: &HamiltonianMatrix) -> Result<GroundLevel> {
    ground_state_with(h, SizeLimits::default())
}

pub fn ground_state_with(h: &HamiltonianMatrix, limits: SizeLimits) -> Result<GroundLevel> {
    let norm = h.norm_bound().max(f64::MIN_POSITIVE);
    let deg_tol = DEGENERACY_RTOL * norm;
    let dim = h.dimension();
    // (energy, block, column, amplitudes)
    let per_block = for_each_block(h, |g, lookup| {
        if g.len() > limits.max_block {
            return Err(Error::DimensionCap { dimension: g.len(), cap: limits.max_block });
        }
        let m = block_entries(h, &g, lookup);
        let scatter = |local: &[f64]| {
            let mut amps = DVector::zeros(dim);
            for (a, &i) in g.iter().enumerate() {
                amps[i] = local[a];
            }
            amps
        };
        if g.len() > LANCZOS_MIN_BLOCK {
            if let Some((e, v)) = lanczos::lowest(&m, 1e-11 * norm.max(1.0), 600) {
                return Ok(vec![(e, 0, scatter(v.as_slice()))]);
            }
        }
        let (values, vectors) = dense_eigen(&m)?;
        let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(values
            .iter()
            .enumerate()
            .filter(|&(_, &e)| e - lowest <= deg_tol)
            .map(|(c, &e)| (e, c, scatter(vectors.column(c).as_slice())))
            .collect())
    })?;
    let mut candidates: Vec<(f64, usize, usize, DVector<f64>)> = per_block
        .into_iter()
        .enumerate()
        .flat_map(|(b, list)| list.into_iter().map(move |(e, c, v)| (e, b, c, v)))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let e0 = candidates[0].0;
    let states: Vec<QuantumState> = candidates
        .into_iter()
        .take_while(|c| c.0 - e0 <= deg_tol)
        .map(|(e, _, _, v)| QuantumState::new(h.basis, v, e))
        .collect();
    Ok(GroundLevel { degenerate: states.len() > 1, states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalObservables {
    pub free_energy_per_atom: f64,
    /// `⟨b†b⟩/N`.
    pub order_parameter: f64,
    pub mean_jz_per_atom: f64,
    /// `ln Z`.
    pub partition_function_log: f64,
    pub ground_energy: f64,
}

/// Boltzmann averages over the full spectrum, using shifted exponentials
/// `exp(−β(E_k − E₀))`. Needs a finite temperature; at `T = 0` use
/// [`ground_state`].
pub fn thermal_observables(h: &HamiltonianMatrix, temperature: Temperature) -> Result<ThermalObservables> {
    let eig = diagonalize(h)?;
    thermal_from(&eig, h.params.n_atoms, temperature)
}

pub fn thermal_from(eig: &Eigensystem, n_atoms: usize, temperature: Temperature) -> Result<ThermalObservables> {
    let beta = temperature
        .beta()
        .ok_or_else(|| Error::Domain("thermal averages need a finite temperature; use ground_state at T = 0".into()))?;
    let e0 = eig.energy(0);
    let basis = eig.basis;
    let (mut z, mut photons, mut jz) = (0.0, 0.0, 0.0);
    for k in 0..eig.len() {
        let w = (-beta * (eig.energy(k) - e0)).exp();
        if w == 0.0 {
            continue;
        }
        z += w;
        photons += w * eig.diagonal_expectation(k, |i| basis.state(i).fock_n as f64);
        jz += w * eig.diagonal_expectation(k, |i| basis.state(i).spin_m);
    }
    let log_z = -beta * e0 + z.ln();
    let n = n_atoms as f64;
    Ok(ThermalObservables {
        free_energy_per_atom: -log_z / (beta * n),
        order_parameter: photons / z / n,
        mean_jz_per_atom: jz / z / n,
        partition_function_log: log_z,
        ground_energy: e0,
    })
}

/// Fock-cutoff policy for scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPolicy {
    /// Starting cutoff; `None` uses [`initial_cutoff`].
    pub initial: Option<usize>,
    /// Accepted ground-state probability in the top Fock level.
    pub tail_tol: f64,
    /// Doubling stops with an error past this cutoff.
    pub hard_cap: usize,
    pub limits: SizeLimits,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy { initial: None, tail_tol: 1e-8, hard_cap: 4096, limits: SizeLimits::default() }
    }
}

/// `max(8, ⌈N(g₁+g₂)²/ω₀²⌉ + 8)`: the super-radiant displacement grows like
/// `N g²/ω₀²`.
pub fn initial_cutoff(p: &ModelParams) -> usize {
    let g = p.g1 + p.g2;
    let est = (p.n_atoms as f64 * g * g / (p.omega0 * p.omega0)).ceil();
    if est.is_finite() {
        (est as usize + 8).max(8)
    } else {
        8
    }
}

/// Doubles `n_max` from the policy's start until the ground-state tail is
/// below `tail_tol`. Returns the accepted cutoff and its tail.
pub fn converged_cutoff(p: &ModelParams, include_dipole: bool, policy: &CutoffPolicy) -> Result<(usize, f64)> {
    let mut n_max = policy.initial.unwrap_or_else(|| initial_cutoff(p)).max(1);
    loop {
        let h = build_hamiltonian_with(p, n_max, include_dipole, policy.limits)?;
        let gs = ground_state_with(&h, policy.limits)?;
        let tail = gs.states.iter().map(|s| s.cutoff_tail()).fold(0.0, f64::max);
        if tail <= policy.tail_tol {
            return Ok((n_max, tail));
        }
        if n_max * 2 > policy.hard_cap {
            return Err(Error::TruncationCap { n_max: n_max * 2, cap: policy.hard_cap, tail });
        }
        n_max *= 2;
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default coupling grid: 201 points over `[0, 2 g_c]`.
pub fn default_grid(mode: CouplingMode, omega0: f64, omega: f64) -> Vec<f64> {
    linspace(0.0, 2.0 * mode.critical_coupling(omega0, omega), 201)
}

/// Runs `f` on the ground level of every grid point (couplings set by
/// `mode`), in parallel when enabled, preserving grid order.
pub fn scan_ground_levels<R, F>(
    base: &ModelParams,
    mode: CouplingMode,
    grid: &[f64],
    n_max: usize,
    include_dipole: bool,
    limits: SizeLimits,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(f64, &GroundLevel) -> R + Sync + Send,
{
    par::map(grid, |&g| {
        let (g1, g2) = mode.couplings(g);
        let p = base.with_couplings(g1, g2);
        let h = build_hamiltonian_with(&p, n_max, include_dipole, limits)?;
        let gs = ground_state_with(&h, limits)?;
        Ok(f(g, &gs))
    })
    .into_iter()
    .collect()
}

/// `−d²E₀/dg²` by central differences; `NaN` at the two ends.
pub fn susceptibility(grid: &[f64], energies: &[f64]) -> Vec<f64> {
    let mut chi = vec![f64::NAN; grid.len()];
    for i in 1..grid.len().saturating_sub(1) {
        let (h1, h2) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let second = 2.0 * (h1 * energies[i + 1] - (h1 + h2) * energies[i] + h2 * energies[i - 1])
            / (h1 * h2 * (h1 + h2));
        chi[i] = -second;
    }
    chi
}

/// Grid index of the maximum of `values` (NaN skipped, ties to the smallest index).
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// One system size of a quantum-critical scan.
#[derive(Debug, Clone, PartialEq)]
pub struct QptScan {
    pub n_atoms: usize,
    pub n_max: usize,
    pub grid: Vec<f64>,
    pub energies: Vec<f64>,
    /// `⟨b†b⟩/N` of the primary ground state.
    pub order_parameter: Vec<f64>,
    pub susceptibility: Vec<f64>,
    /// Location of the susceptibility peak.
    pub g_star: f64,
    /// False for `N = 1`, which has no thermodynamic limit.
    pub critical: bool,
}

/// Ground-state susceptibility scan for each `N`: returns `g*(N)`, the peak
/// of `−d²E₀/dg²` over `grid`, for convergence toward `g_c`.
///
/// The cutoff is fixed per `N` by [`converged_cutoff`] at the largest grid
/// coupling and used for the whole grid.
pub fn qpt_scan(
    base: &ModelParams,
    mode: CouplingMode,
    grid: &[f64],
    n_atoms_list: &[usize],
    policy: &CutoffPolicy,
) -> Result<Vec<QptScan>> {
    if grid.len() < 3 {
        return Err(Error::Domain("a susceptibility scan needs at least 3 grid points".into()));
    }
    let g_top = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(n_atoms_list.len());
    for &n_atoms in n_atoms_list {
        let p = base.with_atoms(n_atoms);
        let (g1, g2) = mode.couplings(g_top);
        let (n_max, _) = converged_cutoff(&p.with_couplings(g1, g2), false, policy)?;
        let points = scan_ground_levels(&p, mode, grid, n_max, false, policy.limits, |_, gs| {
            (gs.energy(), gs.primary().mean_photons() / n_atoms as f64)
        })?;
        let (energies, order_parameter): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let chi = susceptibility(grid, &energies);
        let peak = argmax(&chi).ok_or_else(|| Error::Domain("empty susceptibility".into()))?;
        out.push(QptScan {
            n_atoms,
            n_max,
            grid: grid.to_vec(),
            energies,
            order_parameter,
            susceptibility: chi,
            g_star: grid[peak],
            critical: n_atoms > 1,
        });
    }
    Ok(out)
}

/// Atomic Hamiltonian `Ω Σσ_z + (λ/N) Σ_{i≠j} σᵢ⁺σⱼ⁻` on the full `2^N`
/// product space. Basis index bit `i` set means atom `i` is excited; atom 0
/// is the most significant bit, so `|e₁g₂⟩` is index `0b10`.
pub fn atomic_hamiltonian(n_atoms: usize, omega: f64, lambda: f64) -> Result<DMatrix<f64>> {
    if n_atoms == 0 || n_atoms > 14 {
        return Err(Error::Domain(format!("product-space atoms must be in 1..=14, got {n_atoms}")));
    }
    let dim = 1usize << n_atoms;
    let bit = |atom: usize| 1usize << (n_atoms - 1 - atom);
    let mut h = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let excited = s.count_ones() as f64;
        h[(s, s)] = omega * (excited - 0.5 * n_atoms as f64);
        for i in 0..n_atoms {
            for j in 0..n_atoms {
                // σᵢ⁺σⱼ⁻ moves the excitation from j to i.
                if i != j && s & bit(j) != 0 && s & bit(i) == 0 {
                    let t = (s & !bit(j)) | bit(i);
                    h[(t, s)] += lambda / n_atoms as f64;
                }
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn decoupled_is_diagonal() {
        let p = ModelParams::new(0.7, 1.3, 0.0, 0.0).with_atoms(4);
        let h = build_hamiltonian(&p, 5, true).unwrap();
        assert!(h.off_diagonal().is_empty());
        for i in 0..h.dimension() {
            let s = h.basis.state(i);
            assert_relative_eq!(h.diagonal()[i], 1.3 * s.spin_m + 0.7 * s.fock_n as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn dense_is_symmetric() {
        let p = ModelParams::new(1.1, 0.9, 0.7, 0.3).with_lambda(0.4).with_atoms(5);
        let m = build_hamiltonian(&p, 6, true).unwrap().to_dense();
        assert_eq!((&m - m.transpose()).amax(), 0.0);
    }

    #[test]
    fn two_atoms_dipole_only() {
        // Symmetric sector of N = 2 is {|gg⟩, |s⟩, |ee⟩}; only |s⟩ feels λ, by +λ/2.
        let lambda = 0.37;
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0).with_lambda(lambda).with_atoms(2);
        let h = build_hamiltonian(&p, 1, true).unwrap();
        let zero = |m: f64| h.diagonal()[h.basis.index(BasisIndex { fock_n: 0, spin_m: m }).unwrap()];
        assert_relative_eq!(zero(-1.0), -1.0, epsilon = 1e-15);
        assert_relative_eq!(zero(0.0), lambda / 2.0, epsilon = 1e-15);
        assert_relative_eq!(zero(1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn blocks_follow_conservation_laws() {
        // Only g₁: n + m conserved, so blocks are small.
        let p = ModelParams::new(1.0, 1.0, 0.8, 0.0).with_atoms(6);
        let h = build_hamiltonian(&p, 10, false).unwrap();
        assert!(h.blocks().iter().all(|b| b.len() <= 7));
        // Both couplings: parity only, two blocks.
        let p = ModelParams::new(1.0, 1.0, 0.8, 0.2).with_atoms(6);
        let h = build_hamiltonian(&p, 10, false).unwrap();
        assert_eq!(h.blocks().len(), 2);
    }

    #[test]
    fn block_solve_matches_dense_solve() {
        let p = ModelParams::new(1.0, 0.8, 0.6, 0.4).with_lambda(0.3).with_atoms(4);
        let h = build_hamiltonian(&p, 8, true).unwrap();
        let blocked = diagonalize(&h).unwrap().energies();
        let mut dense: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (a, b) in blocked.iter().zip(&dense) {
            assert_relative_eq!(a, b, epsilon = 1e-11);
        }
    }

    #[test]
    fn lanczos_ground_state_matches_full_spectrum() {
        // Parity blocks of about 370 states take the Lanczos path.
        let p = ModelParams::new(1.0, 1.0, 0.7, 0.7).with_atoms(12);
        let h = build_hamiltonian(&p, 56, false).unwrap();
        assert!(h.blocks().iter().all(|b| b.len() > LANCZOS_MIN_BLOCK));
        let full = ground_level(&diagonalize(&h).unwrap());
        let fast = ground_state(&h).unwrap();
        assert_relative_eq!(fast.energy(), full.energy(), epsilon = 1e-11);
        assert_eq!(fast.degenerate, full.degenerate);
        let overlap = fast.primary().amplitudes.dot(&full.primary().amplitudes);
        assert_relative_eq!(overlap, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn decoupled_ground_state() {
        let p = ModelParams::new(1.0, 1.5, 0.0, 0.0).with_atoms(6);
        let gs = ground_state(&build_hamiltonian(&p, 4, false).unwrap()).unwrap();
        assert!(!gs.degenerate);
        let s = gs.primary();
        assert_relative_eq!(s.energy, -6.0 * 1.5 / 2.0, epsilon = 1e-12);
        let idx = s.basis.index(BasisIndex { fock_n: 0, spin_m: -3.0 }).unwrap();
        assert_relative_eq!(s.amplitudes[idx], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_atom_ground_with_dipole() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0).with_lambda(0.8).with_atoms(2);
        let gs = ground_state(&build_hamiltonian(&p, 3, true).unwrap()).unwrap();
        assert_relative_eq!(gs.energy(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(gs.primary().mean_jz(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn balanced_ground_state_has_definite_parity() {
        let p = ModelParams::new(1.0, 1.0, 0.45, 0.45).with_atoms(4);
        let gs = ground_state(&build_hamiltonian(&p, 8, false).unwrap()).unwrap();
        assert_relative_eq!(gs.primary().parity().abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_level_is_flagged() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0).with_atoms(1);
        // Single atom, rotating coupling g = √(ω₀Ω): |0,↓⟩ crosses the lower
        // polariton of the one-excitation doublet exactly.
        let gs = ground_state(&build_hamiltonian(&p, 6, false).unwrap()).unwrap();
        assert!(gs.degenerate);
        assert_eq!(gs.states.len(), 2);
    }

    #[test]
    fn free_boson_thermal_occupation() {
        let beta = 1.3;
        let p = ModelParams::new(0.9, 1.0, 0.0, 0.0).with_atoms(3);
        let h = build_hamiltonian(&p, 60, false).unwrap();
        let th = thermal_observables(&h, Temperature::Beta(beta)).unwrap();
        let bose = 1.0 / ((beta * 0.9f64).exp() - 1.0);
        assert_relative_eq!(th.order_parameter * 3.0, bose, epsilon = 1e-10);

        // Free energy splits into spin and boson parts.
        let spin: f64 = (0..=3).map(|k| (-beta * (k as f64 - 1.5)).exp()).sum::<f64>().ln();
        let boson: f64 = (0..=60).map(|n| (-beta * 0.9 * n as f64).exp()).sum::<f64>().ln();
        assert_relative_eq!(th.free_energy_per_atom, -(spin + boson) / (beta * 3.0), max_relative = 1e-12);
        assert!(thermal_observables(&h, Temperature::Zero).is_err());
    }

    #[test]
    fn low_temperature_free_energy_approaches_ground() {
        let p = ModelParams::new(1.0, 1.0, 0.3, 0.2).with_atoms(4);
        let h = build_hamiltonian(&p, 20, false).unwrap();
        let th = thermal_observables(&h, Temperature::Beta(50.0)).unwrap();
        let e0 = ground_state(&h).unwrap().energy();
        assert!((th.free_energy_per_atom - e0 / 4.0).abs() < 1e-6);
    }

    #[test]
    fn susceptibility_of_parabola() {
        let grid = linspace(0.0, 1.0, 11);
        let e: Vec<f64> = grid.iter().map(|g| -3.0 * g * g).collect();
        let chi = susceptibility(&grid, &e);
        assert!(chi[0].is_nan() && chi[10].is_nan());
        for c in &chi[1..10] {
            assert_relative_eq!(*c, 6.0, epsilon = 1e-10);
        }
        assert_eq!(argmax(&[f64::NAN, 1.0, 3.0, 3.0, 2.0]), Some(2));
    }

    #[test]
    fn cutoff_grows_until_tail_is_small() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.6).with_atoms(8);
        let policy = CutoffPolicy { initial: Some(4), ..Default::default() };
        let (n_max, tail) = converged_cutoff(&p, false, &policy).unwrap();
        assert!(tail <= 1e-8);
        assert!(n_max > 4);
        let capped = CutoffPolicy { initial: Some(2), hard_cap: 4, ..Default::default() };
        assert!(matches!(converged_cutoff(&p, false, &capped), Err(Error::TruncationCap { .. })));
    }

    #[test]
    fn dimension_cap() {
        let p = ModelParams::new(1.0, 1.0, 0.1, 0.1).with_atoms(10);
        let limits = SizeLimits { max_dimension: 50, max_block: 50 };
        assert!(matches!(build_hamiltonian_with(&p, 10, false, limits), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn atomic_two_atom_eigenpairs() {
        let h = atomic_hamiltonian(2, 1.0, 0.6).unwrap();
        // Index 0b01 = |g₁e₂⟩, 0b10 = |e₁g₂⟩.
        assert_eq!(h[(0b10, 0b01)], 0.3);
        assert_eq!(h[(0b01, 0b10)], 0.3);
        assert_eq!(h[(0, 0)], -1.0);
        assert_eq!(h[(3, 3)], 1.0);
    }
}
