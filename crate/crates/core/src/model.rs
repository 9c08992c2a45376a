//! Parameter records, Matsubara frequencies and basis indexing.
//!
//! Conventions: the atomic term is `Ω·J_z` with `J_z = Σ σ_z^(i)` and
//! single-atom eigenvalues `±1/2`, so the single-atom gap is exactly `Ω`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Inverse temperature, with zero temperature kept as a distinct value so that
/// `tanh(βΩ/4)` can be replaced by exactly 1 instead of overflowing `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    /// Finite inverse temperature `β` (1/energy).
    Beta(f64),
    Zero,
}

impl Temperature {
    pub fn beta(self) -> Option<f64> {
        match self {
            Temperature::Beta(b) => Some(b),
            Temperature::Zero => None,
        }
    }

    /// `tanh(βΩ/4)`, the thermal occupation factor of a two-level atom in
    /// the Popov-Fedotov representation. Exactly 1 at zero temperature.
    pub fn atomic_factor(self, omega: f64) -> f64 {
        match self {
            Temperature::Beta(b) => (0.25 * b * omega).tanh(),
            Temperature::Zero => 1.0,
        }
    }
}

/// How a single scalar coupling `g` is distributed over the rotating (`g₁`)
/// and counter-rotating (`g₂`) terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingMode {
    /// `g₁ = g`, `g₂ = 0`.
    Rotating,
    /// `g₁ = 0`, `g₂ = g`.
    CounterRotating,
    /// `g₁ = g₂ = g` (the standard Dicke model).
    Balanced,
}

impl CouplingMode {
    pub fn couplings(self, g: f64) -> (f64, f64) {
        match self {
            CouplingMode::Rotating => (g, 0.0),
            CouplingMode::CounterRotating => (0.0, g),
            CouplingMode::Balanced => (g, g),
        }
    }

    /// Per-coupling value of `g` at the zero-temperature transition,
    /// `g₁ + g₂ = √(ω₀Ω)`.
    pub fn critical_coupling(self, omega0: f64, omega: f64) -> f64 {
        let total = (omega0 * omega).sqrt();
        match self {
            CouplingMode::Balanced => 0.5 * total,
            _ => total,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CouplingMode::Rotating => "rotating",
            CouplingMode::CounterRotating => "counter-rotating",
            CouplingMode::Balanced => "balanced",
        }
    }
}

impl std::str::FromStr for CouplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotating" => Ok(CouplingMode::Rotating),
            "counter-rotating" => Ok(CouplingMode::CounterRotating),
            "balanced" => Ok(CouplingMode::Balanced),
            _ => Err(Error::Domain(format!("unknown coupling mode {s:?}"))),
        }
    }
}

/// All physical parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Boson mode energy `ω₀`.
    pub omega0: f64,
    /// Atomic level splitting `Ω`.
    pub omega: f64,
    /// Rotating-term coupling `g₁`.
    pub g1: f64,
    /// Counter-rotating coupling `g₂`.
    pub g2: f64,
    /// Uniform dipole-dipole strength `λ` (any sign).
    pub lambda: f64,
    pub n_atoms: usize,
    pub temperature: Temperature,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            omega0: 1.0,
            omega: 1.0,
            g1: 0.0,
            g2: 0.0,
            lambda: 0.0,
            n_atoms: 1,
            temperature: Temperature::Zero,
        }
    }
}

impl ModelParams {
    pub fn new(omega0: f64, omega: f64, g1: f64, g2: f64) -> Self {
        ModelParams { omega0, omega, g1, g2, ..Default::default() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_atoms(mut self, n_atoms: usize) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.temperature = Temperature::Beta(beta);
        self
    }

    pub fn with_temperature(mut self, temperature: Temperature) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_couplings(mut self, g1: f64, g2: f64) -> Self {
        self.g1 = g1;
        self.g2 = g2;
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(self) -> Result<Self> {
        let mut errs = Vec::new();
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            errs.push("omega0 must be positive".to_string());
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            errs.push("Omega must be positive".to_string());
        }
        if !(self.g1 >= 0.0 && self.g2 >= 0.0) || !self.g1.is_finite() || !self.g2.is_finite() {
            errs.push("couplings must be non-negative".to_string());
        }
        if !self.lambda.is_finite() {
            errs.push("lambda must be finite".to_string());
        }
        if self.n_atoms == 0 {
            errs.push("n_atoms must be at least 1".to_string());
        }
        if let Temperature::Beta(b) = self.temperature {
            if !(b > 0.0 && b.is_finite()) {
                errs.push("beta must be positive".to_string());
            }
        }
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(errs))
        }
    }

    /// `tanh(βΩ/4)` at the stored temperature.
    pub fn atomic_factor(&self) -> f64 {
        self.temperature.atomic_factor(self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatsubaraKind {
    Bosonic,
    Fermionic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraFrequency {
    pub kind: MatsubaraKind,
    pub index: i64,
    pub value: f64,
}

/// `2πn/β` for bosons, `(2n+1)π/β` for fermions.
pub fn matsubara(kind: MatsubaraKind, index: i64, beta: f64) -> Result<MatsubaraFrequency> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let value = match kind {
        MatsubaraKind::Bosonic => 2.0 * PI * index as f64 / beta,
        MatsubaraKind::Fermionic => (2 * index + 1) as f64 * PI / beta,
    };
    Ok(MatsubaraFrequency { kind, index, value })
}

/// One basis vector `|n⟩ ⊗ |j = N/2, m⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisIndex {
    pub fock_n: usize,
    /// Collective `J_z` eigenvalue, in `[-N/2, N/2]`.
    pub spin_m: f64,
}

/// Truncated Fock ⊗ maximal-spin basis. Index layout is Fock-major:
/// `index = n·(N+1) + (m + N/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Basis {
    pub n_atoms: usize,
    pub n_max: usize,
}

impl Basis {
    pub fn new(n_atoms: usize, n_max: usize) -> Self {
        Basis { n_atoms, n_max }
    }

    pub fn spin_dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dimension(&self) -> usize {
        self.spin_dim() * self.fock_dim()
    }

    /// `j = N/2`.
    pub fn spin_j(&self) -> f64 {
        0.5 * self.n_atoms as f64
    }

    /// Spin slot `k = m + N/2` in `0..=N`.
    pub fn index_of(&self, fock_n: usize, spin_k: usize) -> usize {
        debug_assert!(fock_n <= self.n_max && spin_k <= self.n_atoms);
        fock_n * self.spin_dim() + spin_k
    }

    pub fn index(&self, b: BasisIndex) -> Option<usize> {
        let k = b.spin_m + self.spin_j();
        if b.fock_n > self.n_max || k < 0.0 || k > self.n_atoms as f64 || k.fract() != 0.0 {
            return None;
        }
        Some(self.index_of(b.fock_n, k as usize))
    }

    pub fn state(&self, index: usize) -> BasisIndex {
        let fock_n = index / self.spin_dim();
        let k = index % self.spin_dim();
        BasisIndex { fock_n, spin_m: k as f64 - self.spin_j() }
    }
}
