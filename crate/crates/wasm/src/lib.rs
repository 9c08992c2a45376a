//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Each export has a plain Rust twin returning [`dicke::Result`], which is
//! what the native tests call.

use dicke::entanglement::{self, Subsystem};
use dicke::exactdiag::{self, CutoffPolicy};
use dicke::meanfield::{self, CriticalBeta, CriticalMode};
use dicke::{CouplingMode, Error, ModelParams, Temperature};
use wasm_bindgen::prelude::*;

/// Largest atom number the page may request; larger scans stall a tab.
pub const MAX_ATOMS: usize = 24;
pub const MAX_POINTS: usize = 2001;

fn grid(lo: f64, hi: f64, points: usize) -> dicke::Result<Vec<f64>> {
    if !(2..=MAX_POINTS).contains(&points) || !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Domain(format!("need 2 to {MAX_POINTS} points on a finite increasing range")));
    }
    Ok(exactdiag::linspace(lo, hi, points))
}

/// `β_c` along the ray `g₁ = g`, `g₂ = ratio·g`, `g ∈ [0, g_max]`: NaN where
/// there is no transition and `+∞` where it happens only at `T = 0`.
pub fn critical_curve(omega0: f64, omega: f64, ratio: f64, g_max: f64, points: usize) -> dicke::Result<Vec<f64>> {
    grid(0.0, g_max, points)?
        .into_iter()
        .map(|g| {
            let p = ModelParams::new(omega0, omega, g, ratio * g).validate()?;
            Ok(match meanfield::critical_beta_closed(&p, CriticalMode::General).beta_c {
                CriticalBeta::Finite(b) => b,
                CriticalBeta::ZeroTemperature => f64::INFINITY,
                CriticalBeta::NoTransition => f64::NAN,
            })
        })
        .collect()
}

/// The spectrum equation on `E ∈ [0, e_max]` at the critical temperature.
pub fn spectrum_residual(
    omega0: f64,
    omega: f64,
    g1: f64,
    g2: f64,
    e_max: f64,
    points: usize,
) -> dicke::Result<Vec<f64>> {
    let p = ModelParams::new(omega0, omega, g1, g2).validate()?;
    let t = match meanfield::critical_beta_closed(&p, CriticalMode::General).beta_c {
        CriticalBeta::Finite(b) => Temperature::Beta(b),
        CriticalBeta::ZeroTemperature => Temperature::Zero,
        CriticalBeta::NoTransition => return Err(Error::Domain("no phase transition at these couplings".into())),
    };
    grid(0.0, e_max, points)?
        .into_iter()
        .map(|e| meanfield::spectrum_equation(&p, e, t))
        .collect()
}

/// Finite-N ground-state scan: coupling grid, atoms/field entropy and
/// susceptibility `−d²E₀/dg²`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct GroundScan {
    grid: Vec<f64>,
    entropy: Vec<f64>,
    susceptibility: Vec<f64>,
    g_star: f64,
    argmax_g: f64,
    n_max: usize,
}

#[wasm_bindgen]
impl GroundScan {
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone()
    }

    pub fn entropy(&self) -> Vec<f64> {
        self.entropy.clone()
    }

    pub fn susceptibility(&self) -> Vec<f64> {
        self.susceptibility.clone()
    }

    #[wasm_bindgen(getter, js_name = gStar)]
    pub fn g_star(&self) -> f64 {
        self.g_star
    }

    #[wasm_bindgen(getter, js_name = entropyPeak)]
    pub fn argmax_g(&self) -> f64 {
        self.argmax_g
    }

    #[wasm_bindgen(getter, js_name = nMax)]
    pub fn n_max(&self) -> usize {
        self.n_max
    }
}

pub fn ground_scan(mode: &str, n_atoms: usize, g_max: f64, points: usize) -> dicke::Result<GroundScan> {
    let mode: CouplingMode = mode.parse()?;
    if !(1..=MAX_ATOMS).contains(&n_atoms) {
        return Err(Error::Domain(format!("atom number must be 1 to {MAX_ATOMS}")));
    }
    let g = grid(0.0, g_max, points.max(3))?;
    let base = ModelParams::new(1.0, 1.0, 0.0, 0.0);
    let policy = CutoffPolicy::default();
    let qpt = exactdiag::qpt_scan(&base, mode, &g, &[n_atoms], &policy)?.remove(0);
    let ent = entanglement::entropy_scan(&base, mode, &g, n_atoms, Subsystem::First, &policy)?;
    Ok(GroundScan {
        grid: g,
        entropy: ent.entropies,
        susceptibility: qpt.susceptibility,
        g_star: qpt.g_star,
        argmax_g: ent.argmax_g,
        n_max: qpt.n_max,
    })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = criticalCurve)]
pub fn critical_curve_js(omega0: f64, omega: f64, ratio: f64, g_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    critical_curve(omega0, omega, ratio, g_max, points).map_err(js)
}

#[wasm_bindgen(js_name = spectrumResidual)]
pub fn spectrum_residual_js(
    omega0: f64,
    omega: f64,
    g1: f64,
    g2: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    spectrum_residual(omega0, omega, g1, g2, e_max, points).map_err(js)
}

/// `E₂`, or NaN when both couplings vanish.
#[wasm_bindgen(js_name = gappedEnergy)]
pub fn gapped_energy(omega0: f64, omega: f64, g1: f64, g2: f64) -> f64 {
    meanfield::gapped_mode_energy(&ModelParams::new(omega0, omega, g1, g2)).unwrap_or(f64::NAN)
}

#[wasm_bindgen(js_name = groundScan)]
pub fn ground_scan_js(mode: &str, n_atoms: usize, g_max: f64, points: usize) -> Result<GroundScan, JsError> {
    ground_scan(mode, n_atoms, g_max, points).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_curve_marks_the_three_regimes() {
        // g_c = 1 for ω₀ = Ω = 1 on the rotating ray.
        let curve = critical_curve(1.0, 1.0, 0.0, 2.0, 5).unwrap();
        assert!(curve[0].is_nan() && curve[1].is_nan());
        assert_eq!(curve[2], f64::INFINITY);
        assert!((curve[4] - 1.021_651_247_531_981_4).abs() < 1e-14);
        assert!(critical_curve(-1.0, 1.0, 0.0, 2.0, 5).is_err());
        assert!(critical_curve(1.0, 1.0, 0.0, 2.0, 1).is_err());
    }

    #[test]
    fn residual_vanishes_at_the_gapped_mode() {
        let (o0, o, g1, g2) = (1.0, 1.3, 1.2, 0.7);
        let e2 = gapped_energy(o0, o, g1, g2);
        let r = spectrum_residual(o0, o, g1, g2, 2.0 * e2, 3).unwrap();
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-8, "{r:?}");
        assert!(r[2].abs() > 1e-3);
        assert!(spectrum_residual(o0, o, 0.1, 0.1, 1.0, 3).is_err());
    }

    #[test]
    fn ground_scan_peaks_near_the_critical_coupling() {
        let s = ground_scan("balanced", 6, 1.0, 41).unwrap();
        assert_eq!(s.grid().len(), 41);
        assert!(s.entropy()[0] < 1e-10);
        assert!(s.g_star() > 0.5 && s.g_star() < 1.0, "{}", s.g_star());
        assert!((s.argmax_g() - s.g_star()).abs() < 0.2);
        assert!(ground_scan("sideways", 6, 1.0, 41).is_err());
        assert!(ground_scan("balanced", MAX_ATOMS + 1, 1.0, 41).is_err());
    }
}
