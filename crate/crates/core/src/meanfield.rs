//! Thermodynamic-limit analytics of the full Dicke model.
//!
//! After the atoms are integrated out, the `N → ∞` partition-function ratio
//! is controlled by two coefficient functions of the bosonic Matsubara
//! frequency `ω`:
//!
//! ```text
//! a(ω) = [g₁²/(Ω − iω) + g₂²/(Ω + iω)] / (ω₀ − iω) · tanh(βΩ/4)
//! c(ω) = g₁g₂Ω / [(ω₀² + ω²)^½ (Ω² + ω²)] · tanh(βΩ/4)
//! ```
//!
//! and the denominator `D(ω) = (1 − a(ω))(1 − a(−ω)) − 4c²(ω)`. The
//! zero-frequency factor `1 − a(0) − 2c(0)` fixes the critical temperature;
//! continuing `iω → E` in `D` gives the collective-excitation spectrum.
//!
//! With a uniform dipole-dipole coupling `λ` the same denominators reappear
//! (together with the extra coefficients `A₁`, `A₂`, `I₀`), and none of them
//! depend on `λ`. Every function here reads `λ` from [`ModelParams`] only to
//! ignore it, which makes the invariance checkable bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{matsubara, MatsubaraKind, ModelParams, Temperature};
use crate::roots;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative size below which a denominator factor counts as zero.
const SINGULAR_EPS: f64 = 1e-15;

/// Tolerance on the arctanh argument for the zero-temperature transition.
const ZERO_T_TOL: f64 = 1e-12;

/// Number of positive Matsubara frequencies kept in the `I₀` product.
pub const DEFAULT_I0_TERMS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValue {
    pub frequency: Complex64,
    pub value: Complex64,
}

fn check(factor: Complex64, scale: f64, name: &'static str, omega: Complex64) -> Result<Complex64> {
    if factor.norm() <= SINGULAR_EPS * scale {
        Err(Error::Pole { factor: name, frequency: format!("{omega}") })
    } else {
        Ok(factor)
    }
}

/// `a(ω)`.
pub fn coeff_a(p: &ModelParams, omega: Complex64) -> Result<CoefficientValue> {
    let w = omega.norm();
    let t = p.atomic_factor();
    let rot = check(p.omega - I * omega, p.omega + w, "Ω − iω", omega)?;
    let counter = check(p.omega + I * omega, p.omega + w, "Ω + iω", omega)?;
    let field = check(p.omega0 - I * omega, p.omega0 + w, "ω₀ − iω", omega)?;
    let value = (p.g1 * p.g1 / rot + p.g2 * p.g2 / counter) / field * t;
    Ok(CoefficientValue { frequency: omega, value })
}

/// `c(ω)`, principal branch of `(ω₀² + ω²)^½`.
pub fn coeff_c(p: &ModelParams, omega: Complex64) -> Result<CoefficientValue> {
    let w2 = omega.norm_sqr();
    let t = p.atomic_factor();
    let field = check(p.omega0 * p.omega0 + omega * omega, p.omega0 * p.omega0 + w2, "ω₀² + ω²", omega)?;
    let atom = check(p.omega * p.omega + omega * omega, p.omega * p.omega + w2, "Ω² + ω²", omega)?;
    let value = p.g1 * p.g2 * p.omega / (field.sqrt() * atom) * t;
    Ok(CoefficientValue { frequency: omega, value })
}

/// Coefficients that appear only in the model with dipole-dipole coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleCoefficients {
    pub a1: CoefficientValue,
    pub a2: CoefficientValue,
    /// Gaussian prefactor `I₀` (a scalar, reported at frequency 0). Needs a
    /// finite temperature; `None` at `T = 0`.
    pub i0: Option<CoefficientValue>,
}

/// `A₁(ω)`, `A₂(ω)` and `I₀`.
///
/// ```text
/// A₁(ω) = t/(π(Ω − iω)²) · [g₁²/(ω₀ − iω) + g₂²/(ω₀ + iω) − t(g₁² − g₂²)²/((ω₀² − ω²)(Ω + iω))]
/// A₂(ω) = g₁g₂ω₀ t / [π(ω₀² − ω²)(Ω² + ω²)]
/// ```
///
/// with `t = tanh(βΩ/4)`.
pub fn coeff_dd(p: &ModelParams, omega: Complex64) -> Result<DipoleCoefficients> {
    let w = omega.norm();
    let t = p.atomic_factor();
    let (g1s, g2s) = (p.g1 * p.g1, p.g2 * p.g2);
    let (o0, o) = (p.omega0, p.omega);

    let rot = check(o - I * omega, o + w, "Ω − iω", omega)?;
    let counter = check(o + I * omega, o + w, "Ω + iω", omega)?;
    let field_m = check(o0 - I * omega, o0 + w, "ω₀ − iω", omega)?;
    let field_p = check(o0 + I * omega, o0 + w, "ω₀ + iω", omega)?;
    let field_sq = check(o0 * o0 - omega * omega, o0 * o0 + w * w, "ω₀² − ω²", omega)?;
    let atom_sq = check(o * o + omega * omega, o * o + w * w, "Ω² + ω²", omega)?;

    let bracket = g1s / field_m + g2s / field_p - t * (g1s - g2s).powi(2) / (field_sq * counter);
    let a1 = t / (PI * rot * rot) * bracket;
    let a2 = p.g1 * p.g2 * o0 * t / (PI * field_sq * atom_sq);

    let i0 = match p.temperature {
        Temperature::Beta(_) => Some(dipole_prefactor(p, DEFAULT_I0_TERMS)?),
        Temperature::Zero => None,
    };
    Ok(DipoleCoefficients {
        a1: CoefficientValue { frequency: omega, value: a1 },
        a2: CoefficientValue { frequency: omega, value: a2 },
        i0,
    })
}

/// Source coefficients `d₁(ω)`, `d₂(ω)` of the auxiliary-field coupling.
///
/// `sum_r_plus = Σᵢ rᵢ(ω)` and `sum_r_minus = Σᵢ rᵢ(−ω)`; conjugates are taken
/// here. Uses the principal branch of `(ω₀ − iω)^½`.
pub fn auxiliary_sources(
    p: &ModelParams,
    omega: Complex64,
    sum_r_plus: Complex64,
    sum_r_minus: Complex64,
) -> Result<(Complex64, Complex64)> {
    let w = omega.norm();
    let t = p.atomic_factor();
    let rot = check(p.omega - I * omega, p.omega + w, "Ω − iω", omega)?;
    let counter = check(p.omega + I * omega, p.omega + w, "Ω + iω", omega)?;
    let field = check(p.omega0 - I * omega, p.omega0 + w, "ω₀ − iω", omega)?;
    let pre = -t / (PI.sqrt() * field.sqrt());
    let d1 = pre * (p.g1 / rot * sum_r_plus.conj() + p.g2 / counter * sum_r_minus);
    let d2 = pre * (p.g1 / rot * sum_r_plus + p.g2 / counter * sum_r_minus.conj());
    Ok((d1, d2))
}

/// `D(ω) = (1 − a(ω))(1 − a(−ω)) − 4c²(ω)`, built from [`coeff_a`] and
/// [`coeff_c`] as it appears in the full-Dicke partition function.
pub fn denominator_full_dicke(p: &ModelParams, omega: Complex64) -> Result<Complex64> {
    let a_plus = coeff_a(p, omega)?.value;
    let a_minus = coeff_a(p, -omega)?.value;
    let c = coeff_c(p, omega)?.value;
    Ok((1.0 - a_plus) * (1.0 - a_minus) - 4.0 * c * c)
}

/// The same denominator as it appears in the dipole-dipole model, written out
/// independently: the two atomic propagators are combined over the common
/// denominator `Ω² + ω²` and `c²` is used directly, so no square root is
/// taken.
pub fn denominator_dipole(p: &ModelParams, omega: Complex64) -> Result<Complex64> {
    let w = omega.norm();
    let t = p.atomic_factor();
    let (g1s, g2s) = (p.g1 * p.g1, p.g2 * p.g2);
    let w2 = omega * omega;
    let atom_sq = check(p.omega * p.omega + w2, p.omega * p.omega + w * w, "Ω² + ω²", omega)?;
    let field_sq = check(p.omega0 * p.omega0 + w2, p.omega0 * p.omega0 + w * w, "ω₀² + ω²", omega)?;
    let field_m = check(p.omega0 - I * omega, p.omega0 + w, "ω₀ − iω", omega)?;
    let field_p = check(p.omega0 + I * omega, p.omega0 + w, "ω₀ + iω", omega)?;

    let even = (g1s + g2s) * p.omega;
    let odd = (g1s - g2s) * I * omega;
    let one_minus_a_plus = 1.0 - t * (even + odd) / (atom_sq * field_m);
    let one_minus_a_minus = 1.0 - t * (even - odd) / (atom_sq * field_p);
    let c_sq = t * t * (p.g1 * p.g2 * p.omega).powi(2) / (field_sq * atom_sq * atom_sq);
    Ok(one_minus_a_plus * one_minus_a_minus - 4.0 * c_sq)
}

/// Signed `1/I₀`: `s·√|(1 − a(0) − 2c(0))(1 − a(0) + 2c(0))| · Π_{0<|n|≤terms} D(ωₙ)²`
/// over bosonic Matsubara frequencies ωₙ = 2πn/β, using [`denominator_dipole`],
/// with `s` the sign of `1 − a(0) − 2c(0)`. Vanishes exactly where `I₀`
/// diverges and changes sign there, including the one-coupling case where
/// both zero-frequency factors vanish together.
pub fn dipole_prefactor_inverse(p: &ModelParams, terms: usize) -> Result<f64> {
    let beta = p
        .temperature
        .beta()
        .ok_or_else(|| Error::Domain("I₀ needs a finite temperature".into()))?;
    let (soft, stiff) = dipole_zero_frequency_factors(p);
    let mut log_prod = 0.5 * (soft * stiff).abs().ln();
    for n in 1..=terms as i64 {
        let w = matsubara(MatsubaraKind::Bosonic, n, beta)?.value;
        // D is even and real on the real axis; ±ωₙ each contribute D(ωₙ)² to 1/I₀².
        let d = denominator_dipole(p, Complex64::new(w, 0.0))?.re;
        log_prod += 2.0 * d.abs().ln();
    }
    Ok(soft.signum() * log_prod.exp())
}

/// `1 − a(0) ∓ 2c(0)` in the dipole-model form: `1 − t(g₁ ± g₂)²/(ω₀Ω)`.
/// Their product is `D(0)`.
fn dipole_zero_frequency_factors(p: &ModelParams) -> (f64, f64) {
    let t = p.atomic_factor();
    let scale = t / (p.omega0 * p.omega);
    (1.0 - scale * (p.g1 + p.g2).powi(2), 1.0 - scale * (p.g1 - p.g2).powi(2))
}

/// `I₀` at the stored finite temperature.
pub fn dipole_prefactor(p: &ModelParams, terms: usize) -> Result<CoefficientValue> {
    let beta = p
        .temperature
        .beta()
        .ok_or_else(|| Error::Domain("I₀ needs a finite temperature".into()))?;
    let zero_freq = Complex64::new(0.0, 0.0);
    let a0 = coeff_a(p, zero_freq)?.value.re;
    let c0 = coeff_c(p, zero_freq)?.value.re;
    let critical = 1.0 - a0 - 2.0 * c0;
    if critical.abs() <= SINGULAR_EPS * (1.0 + a0.abs() + 2.0 * c0.abs()) {
        return Err(Error::Pole { factor: "1 − a(0) − 2c(0)", frequency: "0".into() });
    }
    let mut value = Complex64::new(critical * (1.0 - a0 + 2.0 * c0), 0.0).sqrt().inv();
    for n in 1..=terms as i64 {
        let w = matsubara(MatsubaraKind::Bosonic, n, beta)?.value;
        let d = denominator_full_dicke(p, Complex64::new(w, 0.0))?;
        value /= d * d;
    }
    Ok(CoefficientValue { frequency: zero_freq, value })
}

/// `1 − a(0) − 2c(0)` at the given temperature. Its zero in `β` is the
/// critical point.
pub fn criticality_condition(p: &ModelParams, temperature: Temperature) -> Result<f64> {
    let q = p.with_temperature(temperature);
    let zero = Complex64::new(0.0, 0.0);
    let a0 = coeff_a(&q, zero)?.value.re;
    let c0 = coeff_c(&q, zero)?.value.re;
    Ok(1.0 - a0 - 2.0 * c0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalMode {
    /// Only `g₁` enters.
    Rotating,
    /// Only `g₂` enters.
    CounterRotating,
    /// Both, through `(g₁ + g₂)²`.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalBeta {
    Finite(f64),
    /// The transition happens only at `T = 0` (the quantum critical point).
    ZeroTemperature,
    NoTransition,
}

impl CriticalBeta {
    pub fn finite(self) -> Option<f64> {
        match self {
            CriticalBeta::Finite(b) => Some(b),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriticalBeta::Finite(_) => "finite",
            CriticalBeta::ZeroTemperature => "zero-temperature",
            CriticalBeta::NoTransition => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub beta_c: CriticalBeta,
    /// Criticality condition evaluated at the reported `β_c` (0 when there is
    /// no transition to evaluate at).
    pub condition_residual: f64,
}

/// Closed-form inverse critical temperature `β_c = (4/Ω)·artanh(ω₀Ω/g²)` with
/// `g = g₁`, `g₂` or `g₁ + g₂` depending on `mode`.
pub fn critical_beta_closed(p: &ModelParams, mode: CriticalMode) -> CriticalPoint {
    let g = match mode {
        CriticalMode::Rotating => p.g1,
        CriticalMode::CounterRotating => p.g2,
        CriticalMode::General => p.g1 + p.g2,
    };
    if g <= 0.0 {
        return CriticalPoint { beta_c: CriticalBeta::NoTransition, condition_residual: 0.0 };
    }
    let arg = p.omega0 * p.omega / (g * g);
    if (arg - 1.0).abs() <= ZERO_T_TOL {
        return CriticalPoint { beta_c: CriticalBeta::ZeroTemperature, condition_residual: 1.0 - 1.0 / arg };
    }
    if arg > 1.0 {
        return CriticalPoint { beta_c: CriticalBeta::NoTransition, condition_residual: 0.0 };
    }
    let beta = 4.0 / p.omega * arg.atanh();
    let residual = 1.0 - (0.25 * beta * p.omega).tanh() / arg;
    CriticalPoint { beta_c: CriticalBeta::Finite(beta), condition_residual: residual }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericCriticalOptions {
    /// Upper end of the search, in units of `1/Ω`.
    pub beta_max_over_omega: f64,
    pub max_iter: usize,
}

impl Default for NumericCriticalOptions {
    fn default() -> Self {
        NumericCriticalOptions { beta_max_over_omega: 1e4, max_iter: roots::DEFAULT_MAX_ITER }
    }
}

/// Root in `β` of `1 − a(0) − 2c(0)`.
///
/// The zero-temperature limit is classified first (exactly, via the `T = 0`
/// flag); only if the condition is negative there is a finite root to find.
pub fn critical_beta_numeric(p: &ModelParams) -> Result<CriticalPoint> {
    critical_beta_numeric_with(p, NumericCriticalOptions::default())
}

pub fn critical_beta_numeric_with(p: &ModelParams, opts: NumericCriticalOptions) -> Result<CriticalPoint> {
    if p.g1 + p.g2 <= 0.0 {
        return Ok(CriticalPoint { beta_c: CriticalBeta::NoTransition, condition_residual: 1.0 });
    }
    let at_zero_t = criticality_condition(p, Temperature::Zero)?;
    if at_zero_t.abs() <= ZERO_T_TOL {
        return Ok(CriticalPoint { beta_c: CriticalBeta::ZeroTemperature, condition_residual: at_zero_t });
    }
    if at_zero_t > 0.0 {
        return Ok(CriticalPoint { beta_c: CriticalBeta::NoTransition, condition_residual: at_zero_t });
    }

    let f = |beta: f64| criticality_condition(p, Temperature::Beta(beta)).unwrap_or(f64::NAN);
    let beta_max = opts.beta_max_over_omega / p.omega;
    let mut lo = 0.0;
    let mut hi = 1.0 / p.omega;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > beta_max {
            if f(beta_max) > 0.0 {
                return Ok(CriticalPoint { beta_c: CriticalBeta::NoTransition, condition_residual: f(beta_max) });
            }
            hi = beta_max;
            break;
        }
    }
    let root = roots::bracketed(f, lo, hi, 0.0, opts.max_iter)?;
    Ok(CriticalPoint { beta_c: CriticalBeta::Finite(root.x), condition_residual: root.residual })
}

/// Temperature at which to evaluate the spectrum for a critical point:
/// `β_c` itself, or `T = 0` for the quantum critical point.
pub fn critical_temperature(cp: &CriticalPoint) -> Option<Temperature> {
    match cp.beta_c {
        CriticalBeta::Finite(b) => Some(Temperature::Beta(b)),
        CriticalBeta::ZeroTemperature => Some(Temperature::Zero),
        CriticalBeta::NoTransition => None,
    }
}

/// Continued spectrum equation `RHS(E) − 1`, where `RHS` is `a + a' − aa' + 4c²`
/// with `iω → E`, written as three brackets:
///
/// ```text
/// −(g₁⁴ + g₂⁴) t² / [(ω₀² − E²)(Ω² − E²)]
/// − g₁²g₂² t² / (ω₀² − E²) · [1/(Ω − E)² + 1/(Ω + E)² − 4Ω²/(Ω² − E²)²]
/// + t · [(g₁²/(Ω − E) + g₂²/(Ω + E))/(ω₀ − E) + (g₁²/(Ω + E) + g₂²/(Ω − E))/(ω₀ + E)]
/// ```
pub fn spectrum_equation(p: &ModelParams, energy: f64, temperature: Temperature) -> Result<f64> {
    let e = energy;
    let t = temperature.atomic_factor(p.omega);
    let (o0, o) = (p.omega0, p.omega);
    let scale = o0.abs() + o.abs() + e.abs();
    let pole = |x: f64, name: &'static str| -> Result<f64> {
        if x.abs() <= SINGULAR_EPS * scale {
            Err(Error::Pole { factor: name, frequency: format!("E = {e}") })
        } else {
            Ok(x)
        }
    };
    let field_m = pole(o0 - e, "ω₀ − E")?;
    let field_p = pole(o0 + e, "ω₀ + E")?;
    let atom_m = pole(o - e, "Ω − E")?;
    let atom_p = pole(o + e, "Ω + E")?;
    let field_sq = field_m * field_p;
    let atom_sq = atom_m * atom_p;
    let (g1s, g2s) = (p.g1 * p.g1, p.g2 * p.g2);

    let first = -(g1s * g1s + g2s * g2s) / (field_sq * atom_sq) * t * t;
    let second = -(g1s * g2s / field_sq)
        * (1.0 / (atom_m * atom_m) + 1.0 / (atom_p * atom_p) - 4.0 * o * o / (atom_sq * atom_sq))
        * t
        * t;
    let third = ((g1s / atom_m + g2s / atom_p) / field_m + (g1s / atom_p + g2s / atom_m) / field_p) * t;
    Ok(first + second + third - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRoot {
    pub energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending, all `E ≥ 0`.
    pub roots: Vec<SpectrumRoot>,
    pub method: SpectrumMethod,
    /// Set when the temperature is not the critical one; such roots are not
    /// backed by a physical interpretation.
    pub exploratory: bool,
}

/// The gapped collective mode at criticality,
/// `E₂ = √[(g₁(Ω + ω₀)² + g₂(Ω − ω₀)²)/(g₁ + g₂)]`.
///
/// The weights are formed as `g₁/(g₁+g₂)`, so the one-coupling limits reduce
/// to `Ω + ω₀` and `|Ω − ω₀|` exactly.
pub fn gapped_mode_energy(p: &ModelParams) -> Option<f64> {
    let total = p.g1 + p.g2;
    if total <= 0.0 {
        return None;
    }
    let (w1, w2) = (p.g1 / total, p.g2 / total);
    let sum = p.omega + p.omega0;
    let diff = p.omega - p.omega0;
    Some((w1 * (sum * sum) + w2 * (diff * diff)).sqrt())
}

/// Closed-form spectrum at the critical point: `E₁ = 0` and [`gapped_mode_energy`].
/// `None` when there is no transition.
pub fn spectrum_closed_form(p: &ModelParams) -> Option<SpectrumResult> {
    let cp = critical_beta_closed(p, CriticalMode::General);
    let temperature = critical_temperature(&cp)?;
    let e2 = gapped_mode_energy(p)?;
    let mut roots = Vec::with_capacity(2);
    for e in [0.0, e2] {
        let residual = spectrum_equation(p, e, temperature).unwrap_or(f64::NAN);
        roots.push(SpectrumRoot { energy: e, residual });
    }
    roots.dedup_by(|a, b| a.energy == b.energy);
    Some(SpectrumResult { roots, method: SpectrumMethod::ClosedForm, exploratory: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumScanOptions {
    /// Upper end of the scanned energy range; `None` picks
    /// `4·max(ω₀ + Ω, g₁ + g₂)`.
    pub e_max: Option<f64>,
    /// Samples per pole-free sub-interval.
    pub samples: usize,
    /// Accepted `|residual|` for the tangential root at `E = 0`.
    pub zero_tol: f64,
}

impl Default for SpectrumScanOptions {
    fn default() -> Self {
        SpectrumScanOptions { e_max: None, samples: 4000, zero_tol: 1e-8 }
    }
}

pub fn spectrum_roots(p: &ModelParams, temperature: Temperature) -> Result<SpectrumResult> {
    spectrum_roots_with(p, temperature, SpectrumScanOptions::default())
}

/// Pole-aware bracketed scan of [`spectrum_equation`] over `E ∈ [0, E_max]`.
///
/// The range is split at the poles `E = ω₀` and `E = Ω`; each pole-free piece
/// is sampled uniformly and every sign change refined by
/// [`roots::bracketed`]. `E = 0` is a tangential root at criticality (the
/// residual is even in `E`), so it is accepted by value rather than by sign.
pub fn spectrum_roots_with(p: &ModelParams, temperature: Temperature, opts: SpectrumScanOptions) -> Result<SpectrumResult> {
    let e_max = opts
        .e_max
        .unwrap_or_else(|| 4.0 * (p.omega0 + p.omega).max(p.g1 + p.g2));
    let f = |e: f64| spectrum_equation(p, e, temperature).unwrap_or(f64::NAN);

    let mut poles: Vec<f64> = [p.omega0, p.omega].into_iter().filter(|&x| x > 0.0 && x < e_max).collect();
    poles.sort_by(f64::total_cmp);
    poles.dedup();
    let mut edges = vec![0.0];
    edges.extend(poles.iter().copied());
    edges.push(e_max);

    let mut found = Vec::new();
    let r0 = f(0.0);
    if r0.abs() < opts.zero_tol {
        found.push(SpectrumRoot { energy: 0.0, residual: r0 });
    }

    let n = opts.samples.max(8);
    for piece in edges.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let gap = 1e-9 * (b - a).max(1e-300);
        let lo = if a == 0.0 { 0.0 } else { a + gap };
        let hi = if b == e_max { b } else { b - gap };
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        if a == 0.0 && !found.is_empty() {
            // The sample at E = 0 is the tangential root; do not bracket against it.
            ys[0] = f64::NAN;
        }
        for i in roots::sign_changes(&ys) {
            let root = roots::bracketed(f, xs[i], xs[i + 1], 0.0, roots::DEFAULT_MAX_ITER)?;
            found.push(SpectrumRoot { energy: root.x, residual: root.residual });
        }
    }
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let exploratory = match critical_temperature(&critical_beta_closed(p, CriticalMode::General)) {
        Some(Temperature::Beta(bc)) => match temperature {
            Temperature::Beta(b) => (b - bc).abs() > 1e-12 * bc,
            Temperature::Zero => true,
        },
        Some(Temperature::Zero) => temperature != Temperature::Zero,
        None => true,
    };
    Ok(SpectrumResult { roots: found, method: SpectrumMethod::Numeric, exploratory })
}

/// Result of [`compare_poles`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoleComparisonReport {
    pub points: usize,
    pub lambdas: Vec<f64>,
    /// Largest `|D_full − D_dipole| / max(1, |D_full|)` over the grid and all `λ`.
    pub max_discrepancy: f64,
    /// Midpoints of grid intervals where `Re D` changes sign.
    pub zero_crossings_full: Vec<f64>,
    pub zero_crossings_dipole: Vec<f64>,
    /// Every output bit-identical across the `λ` values.
    pub lambda_invariant: bool,
    pub beta_c: CriticalBeta,
    /// `β` where the zero-frequency factor of the full-Dicke ratio vanishes.
    pub prefactor_divergence_beta: Option<f64>,
    /// `β` where `I₀` of the dipole model diverges.
    pub i0_divergence_beta: Option<f64>,
    pub passed: bool,
}

pub const POLE_TOLERANCE: f64 = 1e-12;
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

fn crossings(grid: &[f64], values: &[f64]) -> Vec<f64> {
    roots::sign_changes(values)
        .into_iter()
        .map(|i| 0.5 * (grid[i] + grid[i + 1]))
        .collect()
}

/// First `β` (scanning geometrically upward from `10⁻³/Ω`) where `f` changes
/// sign, refined to machine precision.
fn first_divergence<F: Fn(f64) -> f64>(f: F, omega: f64) -> Result<Option<f64>> {
    let mut lo = 1e-3 / omega;
    let mut flo = f(lo);
    let beta_max = 1e4 / omega;
    while lo < beta_max {
        let hi = lo * 1.25;
        let fhi = f(hi);
        if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
            let root = roots::bracketed(&f, lo, hi, 0.0, roots::DEFAULT_MAX_ITER)?;
            return Ok(Some(root.x));
        }
        lo = hi;
        flo = fhi;
    }
    Ok(None)
}

/// Compares the partition-function denominators of the two models on a real
/// frequency grid, for each `λ`, and locates the `β` where each model's
/// zero-frequency prefactor diverges.
pub fn compare_poles(p: &ModelParams, frequency_grid: &[f64], lambdas: &[f64]) -> Result<PoleComparisonReport> {
    let lambdas: Vec<f64> = if lambdas.is_empty() { vec![p.lambda] } else { lambdas.to_vec() };
    let mut max_discrepancy: f64 = 0.0;
    let mut reference: Option<(Vec<u64>, Vec<u64>, CriticalPoint)> = None;
    let mut lambda_invariant = true;
    let mut zero_full = Vec::new();
    let mut zero_dipole = Vec::new();

    for &lambda in &lambdas {
        let q = p.with_lambda(lambda);
        let mut full = Vec::with_capacity(frequency_grid.len());
        let mut dip = Vec::with_capacity(frequency_grid.len());
        for &w in frequency_grid {
            let omega = Complex64::new(w, 0.0);
            let a = denominator_full_dicke(&q, omega)?;
            let b = denominator_dipole(&q, omega)?;
            max_discrepancy = max_discrepancy.max((a - b).norm() / a.norm().max(1.0));
            full.push(a.re);
            dip.push(b.re);
        }
        let cp = critical_beta_closed(&q, CriticalMode::General);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        match &reference {
            None => {
                zero_full = crossings(frequency_grid, &full);
                zero_dipole = crossings(frequency_grid, &dip);
                reference = Some((bits(&full), bits(&dip), cp));
            }
            Some((rf, rd, rcp)) => {
                let same_cp = match (rcp.beta_c, cp.beta_c) {
                    (CriticalBeta::Finite(x), CriticalBeta::Finite(y)) => x.to_bits() == y.to_bits(),
                    (x, y) => x == y,
                };
                lambda_invariant &= *rf == bits(&full) && *rd == bits(&dip) && same_cp;
            }
        }
    }

    let beta_c = critical_beta_closed(p, CriticalMode::General).beta_c;
    let prefactor = |beta: f64| -> f64 {
        let q = p.with_beta(beta);
        let zero = Complex64::new(0.0, 0.0);
        match (coeff_a(&q, zero), coeff_c(&q, zero)) {
            (Ok(a), Ok(c)) => {
                // Signed square root of the product, so a double zero still changes sign.
                let (soft, stiff) = (1.0 - a.value.re - 2.0 * c.value.re, 1.0 - a.value.re + 2.0 * c.value.re);
                soft.signum() * (soft * stiff).abs().sqrt()
            }
            _ => f64::NAN,
        }
    };
    let inverse_i0 = |beta: f64| dipole_prefactor_inverse(&p.with_beta(beta), DEFAULT_I0_TERMS).unwrap_or(f64::NAN);
    let prefactor_divergence_beta = first_divergence(prefactor, p.omega)?;
    let i0_divergence_beta = first_divergence(inverse_i0, p.omega)?;

    let divergence_ok = match (beta_c, prefactor_divergence_beta, i0_divergence_beta) {
        (CriticalBeta::Finite(bc), Some(x), Some(y)) => {
            (x - bc).abs() <= DIVERGENCE_TOLERANCE * bc && (y - bc).abs() <= DIVERGENCE_TOLERANCE * bc
        }
        (CriticalBeta::Finite(_), _, _) => false,
        (_, x, y) => x.is_none() && y.is_none(),
    };
    let passed =
        max_discrepancy <= POLE_TOLERANCE && zero_full == zero_dipole && lambda_invariant && divergence_ok;

    Ok(PoleComparisonReport {
        points: frequency_grid.len(),
        lambdas,
        max_discrepancy,
        zero_crossings_full: zero_full,
        zero_crossings_dipole: zero_dipole,
        lambda_invariant,
        beta_c,
        prefactor_divergence_beta,
        i0_divergence_beta,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn decoupled_coefficients_vanish() {
        let p = ModelParams::new(1.3, 0.7, 0.0, 0.0).with_beta(2.0);
        for w in [-3.0, 0.0, 0.4, 12.0] {
            assert_eq!(coeff_a(&p, c(w)).unwrap().value, c(0.0));
            assert_eq!(coeff_c(&p, c(w)).unwrap().value, c(0.0));
        }
    }

    #[test]
    fn a_at_quantum_critical_coupling() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0);
        assert_eq!(coeff_a(&p, c(0.0)).unwrap().value, c(1.0));
    }

    #[test]
    fn zero_frequency_values() {
        // mpmath: tanh(1) = 0.761594155955764888..., tanh(1)/2 = 0.380797077977882444...
        let p = ModelParams::new(2.0, 1.0, 1.0, 1.0).with_beta(4.0);
        assert_relative_eq!(coeff_a(&p, c(0.0)).unwrap().value.re, 0.761_594_155_955_764_9, max_relative = 1e-15);
        assert_relative_eq!(coeff_c(&p, c(0.0)).unwrap().value.re, 0.380_797_077_977_882_4, max_relative = 1e-15);
    }

    #[test]
    fn c_vanishes_without_counter_rotating_term_and_is_even() {
        let p = ModelParams::new(1.0, 2.0, 0.8, 0.0).with_beta(1.0);
        assert_eq!(coeff_c(&p, c(0.3)).unwrap().value, c(0.0));
        let p = ModelParams::new(1.0, 2.0, 0.8, 0.6).with_beta(1.0);
        for w in [0.1, 0.7, 3.0, 25.0] {
            assert_eq!(coeff_c(&p, c(w)).unwrap().value, coeff_c(&p, c(-w)).unwrap().value);
        }
    }

    #[test]
    fn a_of_minus_omega_is_conjugate_for_real_frequencies() {
        let p = ModelParams::new(1.1, 0.9, 0.8, 0.3).with_beta(3.0);
        for w in [0.2, 1.0, 7.5] {
            let plus = coeff_a(&p, c(w)).unwrap().value;
            let minus = coeff_a(&p, c(-w)).unwrap().value;
            assert_relative_eq!(plus.re, minus.re, max_relative = 1e-15);
            assert_relative_eq!(plus.im, -minus.im, max_relative = 1e-15);
        }
    }

    #[test]
    fn singular_frequencies_name_the_factor() {
        let p = ModelParams::new(2.0, 1.0, 1.0, 1.0).with_beta(1.0);
        let err = coeff_a(&p, Complex64::new(0.0, -1.0)).unwrap_err();
        assert!(matches!(err, Error::Pole { factor: "Ω − iω", .. }), "{err:?}");
        let err = coeff_a(&p, Complex64::new(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Pole { factor: "Ω + iω", .. }), "{err:?}");
        let err = coeff_a(&p, Complex64::new(0.0, -2.0)).unwrap_err();
        assert!(matches!(err, Error::Pole { factor: "ω₀ − iω", .. }), "{err:?}");
        let err = coeff_c(&p, Complex64::new(0.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::Pole { factor: "ω₀² + ω²", .. }), "{err:?}");
        let err = coeff_dd(&p, c(2.0)).unwrap_err();
        assert!(matches!(err, Error::Pole { factor: "ω₀² − ω²", .. }), "{err:?}");
    }

    #[test]
    fn a1_at_zero_frequency() {
        // tanh(1/4)(1 − tanh(1/4))/π = 0.058866164904851596... (mpmath, 30 digits)
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0).with_beta(1.0);
        let dd = coeff_dd(&p, c(0.0)).unwrap();
        assert_relative_eq!(dd.a1.value.re, 0.058_866_164_904_851_596, max_relative = 1e-14);
        assert_eq!(dd.a1.value.im, 0.0);
        assert_eq!(dd.a2.value, c(0.0));
    }

    #[test]
    fn a2_vanishes_with_either_coupling() {
        for (g1, g2) in [(0.0, 1.2), (0.9, 0.0)] {
            let p = ModelParams::new(1.0, 1.5, g1, g2).with_beta(2.0);
            for w in [0.0, 0.5, 4.0] {
                assert_eq!(coeff_dd(&p, c(w)).unwrap().a2.value, c(0.0));
            }
        }
    }

    #[test]
    fn dipole_coefficients_ignore_lambda() {
        let base = ModelParams::new(1.0, 1.3, 0.7, 0.4).with_beta(2.5);
        let r = coeff_dd(&base, c(0.6)).unwrap();
        for lambda in [-1.0, 1.0, 10.0] {
            assert_eq!(coeff_dd(&base.with_lambda(lambda), c(0.6)).unwrap(), r);
        }
    }

    #[test]
    fn auxiliary_sources_scale_linearly() {
        let p = ModelParams::new(1.0, 1.3, 0.7, 0.4).with_beta(2.5);
        let w = c(0.9);
        let r1 = Complex64::new(0.3, -0.2);
        let r2 = Complex64::new(-0.1, 0.5);
        let (d1, d2) = auxiliary_sources(&p, w, r1, r2).unwrap();
        let (e1, e2) = auxiliary_sources(&p, w, 2.0 * r1, 2.0 * r2).unwrap();
        assert_relative_eq!((e1 - 2.0 * d1).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((e2 - 2.0 * d2).norm(), 0.0, epsilon = 1e-15);
        let (z1, z2) = auxiliary_sources(&p, w, c(0.0), c(0.0)).unwrap();
        assert_eq!((z1, z2), (c(0.0), c(0.0)));
        // With real sources and g₂ = 0 the two sources coincide.
        let p0 = ModelParams { g2: 0.0, ..p };
        let (d1, d2) = auxiliary_sources(&p0, w, c(0.4), c(0.0)).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn closed_critical_examples() {
        let p = ModelParams::new(1.0, 1.0, 2f64.sqrt(), 0.0);
        let cp = critical_beta_closed(&p, CriticalMode::Rotating);
        // 4·artanh(1/2) = 2.19722457733621938279... (mpmath)
        assert_relative_eq!(cp.beta_c.finite().unwrap(), 2.197_224_577_336_219_4, max_relative = 1e-15);
        assert!(cp.condition_residual.abs() < 1e-15);

        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0);
        assert_eq!(critical_beta_closed(&p, CriticalMode::Rotating).beta_c, CriticalBeta::ZeroTemperature);
        let p = ModelParams::new(1.0, 1.0, 0.5, 0.0);
        assert_eq!(critical_beta_closed(&p, CriticalMode::Rotating).beta_c, CriticalBeta::NoTransition);
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(critical_beta_closed(&p, CriticalMode::General).beta_c, CriticalBeta::NoTransition);
        let p = ModelParams::new(1.0, 1.0, 0.0, 2f64.sqrt());
        assert_relative_eq!(
            critical_beta_closed(&p, CriticalMode::CounterRotating).beta_c.finite().unwrap(),
            2.197_224_577_336_219_4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn numeric_critical_examples() {
        let p = ModelParams::new(1.0, 1.0, 2f64.sqrt(), 0.0);
        let cp = critical_beta_numeric(&p).unwrap();
        assert_relative_eq!(cp.beta_c.finite().unwrap(), 2.197_224_577_336_219_4, max_relative = 1e-10);
        assert!(cp.condition_residual.abs() < 1e-12);

        // 4·artanh(1/4) = 1.02165124753198136641... (mpmath)
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(
            critical_beta_numeric(&p).unwrap().beta_c.finite().unwrap(),
            1.021_651_247_531_981_4,
            max_relative = 1e-10
        );
        let p = ModelParams::new(1.0, 1.0, 0.4, 0.4);
        assert_eq!(critical_beta_numeric(&p).unwrap().beta_c, CriticalBeta::NoTransition);
        let p = ModelParams::new(1.0, 1.0, 0.5, 0.5);
        assert_eq!(critical_beta_numeric(&p).unwrap().beta_c, CriticalBeta::ZeroTemperature);
    }

    #[test]
    fn critical_beta_decreases_with_coupling() {
        let mut last = f64::INFINITY;
        for i in 1..50 {
            let g = 1.0 + 0.05 * i as f64;
            let b = critical_beta_closed(&ModelParams::new(1.0, 1.0, g * 0.3, g * 0.7), CriticalMode::General)
                .beta_c
                .finite()
                .unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn spectrum_single_coupling_roots_at_criticality() {
        let p = ModelParams::new(1.0, 1.7, 2.0, 0.0);
        let t = critical_temperature(&critical_beta_closed(&p, CriticalMode::Rotating)).unwrap();
        assert!(spectrum_equation(&p, 0.0, t).unwrap().abs() < 1e-8);
        assert!(spectrum_equation(&p, p.omega + p.omega0, t).unwrap().abs() < 1e-8);

        let p = ModelParams::new(1.0, 1.7, 0.0, 2.0);
        let t = critical_temperature(&critical_beta_closed(&p, CriticalMode::CounterRotating)).unwrap();
        assert!(spectrum_equation(&p, 0.0, t).unwrap().abs() < 1e-8);
        assert!(spectrum_equation(&p, (p.omega - p.omega0).abs(), t).unwrap().abs() < 1e-8);
    }

    #[test]
    fn spectrum_equation_poles() {
        let p = ModelParams::new(1.0, 2.0, 1.0, 1.0).with_beta(1.0);
        assert!(matches!(spectrum_equation(&p, 1.0, p.temperature), Err(Error::Pole { factor: "ω₀ − E", .. })));
        assert!(matches!(spectrum_equation(&p, 2.0, p.temperature), Err(Error::Pole { factor: "Ω − E", .. })));
    }

    #[test]
    fn gapped_mode_limits_are_exact() {
        for (o0, o) in [(1.0, 1.0), (0.3, 2.7), (1.9, 0.11), (0.1, 0.1)] {
            let e = gapped_mode_energy(&ModelParams::new(o0, o, 0.77, 0.0)).unwrap();
            assert_eq!(e, o + o0);
            let e = gapped_mode_energy(&ModelParams::new(o0, o, 0.0, 1.31)).unwrap();
            assert_eq!(e, (o - o0).abs());
        }
        let e = gapped_mode_energy(&ModelParams::new(1.0, 1.0, 0.6, 0.6)).unwrap();
        assert_relative_eq!(e, 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn numeric_spectrum_finds_closed_form_roots() {
        let p = ModelParams::new(0.8, 1.3, 0.9, 0.6);
        let t = critical_temperature(&critical_beta_closed(&p, CriticalMode::General)).unwrap();
        let res = spectrum_roots(&p, t).unwrap();
        assert!(!res.exploratory);
        assert_eq!(res.roots[0].energy, 0.0);
        let e2 = gapped_mode_energy(&p).unwrap();
        assert!(res.roots.iter().any(|r| (r.energy - e2).abs() < 1e-9), "{res:?}");
        for w in res.roots.windows(2) {
            assert!(w[0].energy <= w[1].energy);
        }
        assert!(res.roots.iter().all(|r| r.residual.abs() < 1e-8 && r.energy >= 0.0));

        let off = spectrum_roots(&p, Temperature::Beta(0.3)).unwrap();
        assert!(off.exploratory);
    }

    #[test]
    fn denominators_agree() {
        let p = ModelParams::new(1.2, 0.7, 0.9, 0.4).with_beta(1.7);
        for w in [0.0, 0.3, 1.0, 5.0, 40.0] {
            let a = denominator_full_dicke(&p, c(w)).unwrap();
            let b = denominator_dipole(&p, c(w)).unwrap();
            assert!((a - b).norm() < 1e-13, "{w}: {a} vs {b}");
        }
        // Off the real axis as well.
        let w = Complex64::new(0.4, 0.25);
        let a = denominator_full_dicke(&p, w).unwrap();
        let b = denominator_dipole(&p, w).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn i0_diverges_at_critical_beta() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.5);
        let bc = critical_beta_closed(&p, CriticalMode::General).beta_c.finite().unwrap();
        let below = dipole_prefactor(&p.with_beta(bc * 0.999), 64).unwrap().value.norm();
        let closer = dipole_prefactor(&p.with_beta(bc * 0.999_999), 64).unwrap().value.norm();
        assert!(closer > 10.0 * below);
        assert!(matches!(
            dipole_prefactor(&p.with_temperature(critical_temperature(&critical_beta_closed(&p, CriticalMode::General)).unwrap()), 64),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn compare_poles_report_passes() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.5).with_beta(2.0);
        let grid: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let rep = compare_poles(&p, &grid, &[-1.0, 0.0, 1.0, 10.0]).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_discrepancy < 1e-12);
        assert!(rep.lambda_invariant);
        assert_eq!(rep.zero_crossings_full, rep.zero_crossings_dipole);
    }

    #[test]
    fn one_coupling_divergence_is_found_despite_the_double_zero() {
        let grid = [0.0, 0.5, 2.0];
        for (g1, g2) in [(4.0 / 3.0, 0.0), (0.0, 4.0 / 3.0)] {
            let p = ModelParams::new(1.0, 1.3, g1, g2).with_beta(1.0);
            let rep = compare_poles(&p, &grid, &[0.0, 1.0]).unwrap();
            let bc = rep.beta_c.finite().unwrap();
            assert!(rep.passed, "{rep:?}");
            assert_relative_eq!(rep.i0_divergence_beta.unwrap(), bc, max_relative = 1e-10);
        }
    }

    #[test]
    fn signed_inverse_prefactor_changes_sign_at_critical_beta() {
        let p = ModelParams::new(1.0, 1.3, 0.0, 1.5);
        let bc = critical_beta_closed(&p, CriticalMode::General).beta_c.finite().unwrap();
        assert!(dipole_prefactor_inverse(&p.with_beta(0.99 * bc), 64).unwrap() > 0.0);
        assert!(dipole_prefactor_inverse(&p.with_beta(1.01 * bc), 64).unwrap() < 0.0);
    }
}
