//! Diagonal spectra of radial Toeplitz operators:
//! `lambda_m = (2/m!) integral_0^inf g(r) r^(2m+1) exp(-r^2) dr`.

use serde::Serialize;

use crate::heat::heat_transform_radial;
use crate::numerics::{LogMagnitude, NumericError};
use crate::radial::{radial_integral, RadialWeight};
use crate::symbols::{build_power_symbol, RadialPiece, RadialSymbol};

pub const DEFAULT_M_MAX: u64 = 2000;
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// `lambda_m(g)`, Divergent exactly when the defining integral diverges.
pub fn toeplitz_eigenvalue(sym: &RadialSymbol, m: u64) -> Result<LogMagnitude, NumericError> {
    eigenvalue_of_power(sym, 1, m, DEFAULT_REL_TOL)
}

/// `lambda_m(g^p)` at relative tolerance `rel_tol`.
pub fn eigenvalue_of_power(sym: &RadialSymbol, p: u32, m: u64, rel_tol: f64) -> Result<LogMagnitude, NumericError> {
    radial_integral(sym, p, &RadialWeight::monomial(m), rel_tol).map(LogMagnitude::from_f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileMode {
    /// Spectrum of `T_g`.
    Form,
    /// Spectrum of `T_{|g|^2}`, which decides boundedness of `U_g`.
    NaturalDomain,
}

impl ProfileMode {
    fn power(self) -> u32 {
        match self {
            ProfileMode::Form => 1,
            ProfileMode::NaturalDomain => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SpectralVerdict {
    Bounded { sup: f64 },
    Unbounded { evidence: String },
    /// Finite data without a tail exponent and a sup at the edge of the range.
    Inconclusive { sup: f64, argmax: u64 },
}

impl SpectralVerdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self, SpectralVerdict::Bounded { .. })
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, SpectralVerdict::Unbounded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile {
    pub mode: ProfileMode,
    pub m_max: u64,
    /// `None` marks a divergent eigenvalue.
    pub eigenvalues: Vec<Option<LogMagnitude>>,
    pub tail_exponent: Option<f64>,
    pub verdict: SpectralVerdict,
}

/// Growth exponent of `lambda_m(g^p)` as `m -> inf`, when known analytically:
/// `p alpha / 2` for unbounded power pieces, `5p/2 - 4` for the annuli family.
pub fn tail_exponent(sym: &RadialSymbol, p: u32) -> Option<f64> {
    let pf = f64::from(p);
    let mut exponent: Option<f64> = None;
    for piece in sym.pieces() {
        if let RadialPiece::Power {
            exponent: alpha,
            support: None,
        } = *piece
        {
            let e = pf * alpha / 2.0;
            exponent = Some(exponent.map_or(e, |x: f64| x.max(e)));
        }
    }
    if sym.family().is_some() {
        let e = 2.5 * pf - 4.0;
        exponent = Some(exponent.map_or(e, |x: f64| x.max(e)));
    }
    exponent
}

pub fn spectrum_profile(sym: &RadialSymbol, m_max: u64, mode: ProfileMode) -> SpectralProfile {
    let p = mode.power();
    let indices: Vec<u64> = (0..=m_max).collect();
    let eigenvalues: Vec<Option<LogMagnitude>> = crate::par_map(&indices, |&m| {
        Ok::<_, NumericError>(eigenvalue_of_power(sym, p, m, DEFAULT_REL_TOL).ok())
    })
    .expect("infallible");
    let tail_exponent = tail_exponent(sym, p);
    let verdict = classify(&eigenvalues, m_max, tail_exponent);
    SpectralProfile {
        mode,
        m_max,
        eigenvalues,
        tail_exponent,
        verdict,
    }
}

fn classify(eigenvalues: &[Option<LogMagnitude>], m_max: u64, tail_exponent: Option<f64>) -> SpectralVerdict {
    if let Some(m) = eigenvalues.iter().position(Option::is_none) {
        return SpectralVerdict::Unbounded {
            evidence: format!("lambda_{m} diverges"),
        };
    }
    if let Some(e) = tail_exponent.filter(|e| *e > 0.0) {
        return SpectralVerdict::Unbounded {
            evidence: format!("lambda_m grows like m^{e}"),
        };
    }
    let values: Vec<f64> = eigenvalues.iter().map(|v| v.expect("checked").to_f64()).collect();
    let sup = values.iter().copied().fold(0.0, f64::max);
    let argmax = values.iter().position(|&v| v >= sup * (1.0 - 1e-9)).unwrap_or(0) as u64;
    if 10 * argmax <= 9 * m_max {
        SpectralVerdict::Bounded { sup }
    } else {
        SpectralVerdict::Inconclusive { sup, argmax }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundedness {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl From<&SpectralVerdict> for Boundedness {
    fn from(v: &SpectralVerdict) -> Self {
        match v {
            SpectralVerdict::Bounded { .. } => Boundedness::Bounded,
            SpectralVerdict::Unbounded { .. } => Boundedness::Unbounded,
            SpectralVerdict::Inconclusive { .. } => Boundedness::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub alpha: f64,
    pub heat: Boundedness,
    pub t: Boundedness,
    pub u: Boundedness,
}

/// Heat times probed by the power table.
pub const POWER_TABLE_TIMES: [f64; 4] = [1.0 / 32.0, 0.125, 0.25, 1.0];

/// Heat verdict for `|z|^alpha`: bounded when `g^(t)(0)` is finite and does
/// not exceed `g^(t)(x)` at `x in {10, 100}` for every probed time.
/// For radially non-increasing symbols the heat transform is radially
/// non-increasing, so the origin carries the sup.
pub fn power_heat_verdict(alpha: f64) -> Result<Boundedness, NumericError> {
    let sym = build_power_symbol(alpha, None).map_err(|e| NumericError::InvalidInput(e.to_string()))?;
    for t in POWER_TABLE_TIMES {
        let at_origin = match heat_transform_radial(&sym, t, 0.0) {
            Ok(v) => v,
            Err(NumericError::Divergent(_)) => return Ok(Boundedness::Unbounded),
            Err(e) => return Err(e),
        };
        for x in [10.0, 100.0] {
            if heat_transform_radial(&sym, t, x)? > at_origin * (1.0 + 1e-9) {
                return Ok(Boundedness::Unbounded);
            }
        }
    }
    Ok(Boundedness::Bounded)
}

pub fn power_symbol_table(alphas: &[f64], m_max: u64) -> Result<Vec<PowerRow>, NumericError> {
    alphas
        .iter()
        .map(|&alpha| {
            let sym = build_power_symbol(alpha, None).map_err(|e| NumericError::InvalidInput(e.to_string()))?;
            Ok(PowerRow {
                alpha,
                heat: power_heat_verdict(alpha)?,
                t: (&spectrum_profile(&sym, m_max, ProfileMode::Form).verdict).into(),
                u: (&spectrum_profile(&sym, m_max, ProfileMode::NaturalDomain).verdict).into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub max_difference: f64,
    pub argmax: u64,
    pub sup_h: f64,
}

/// `max_m |lambda_m(g + h) - lambda_m(g)|` computed from the summed symbol.
pub fn perturbation_check(g: &RadialSymbol, h: &RadialSymbol, m_max: u64) -> Result<PerturbationReport, NumericError> {
    let sup_h = h.sup_abs();
    if !sup_h.is_finite() {
        return Err(NumericError::Domain {
            function: "perturbation_check (sup |h|)",
            value: sup_h,
        });
    }
    let sum = g.sum(h, "g + h").map_err(|e| NumericError::InvalidInput(e.to_string()))?;
    let indices: Vec<u64> = (0..=m_max).collect();
    let diffs = crate::par_map(&indices, |&m| {
        let a = eigenvalue_of_power(&sum, 1, m, 1e-13)?.to_f64();
        let b = eigenvalue_of_power(g, 1, m, 1e-13)?.to_f64();
        Ok::<_, NumericError>((a - b).abs())
    })?;
    let (argmax, max_difference) = diffs
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (m, d)| if d > acc.1 { (m, d) } else { acc });
    Ok(PerturbationReport {
        max_difference,
        argmax: argmax as u64,
        sup_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_gamma;
    use crate::symbols::{build_annuli_symbol, AnnuliConfig};

    fn gamma_ratio(m: u64, alpha: f64) -> f64 {
        let m = m as f64;
        (log_gamma(m + alpha / 2.0 + 1.0).unwrap() - log_gamma(m + 1.0).unwrap()).exp()
    }

    #[test]
    fn constant_and_inverse_radius() {
        let one = build_power_symbol(0.0, None).unwrap();
        for m in [0, 3, 500] {
            assert!((toeplitz_eigenvalue(&one, m).unwrap().to_f64() - 1.0).abs() < 1e-10);
        }
        let inv = build_power_symbol(-1.0, None).unwrap();
        let l0 = toeplitz_eigenvalue(&inv, 0).unwrap().to_f64();
        assert!((l0 - 1.772_453_9).abs() < 1e-7);
        assert!((l0 / gamma_ratio(0, -1.0) - 1.0).abs() < 1e-10);
        let cube = build_power_symbol(-3.0, None).unwrap();
        assert!(matches!(toeplitz_eigenvalue(&cube, 0), Err(NumericError::Divergent(_))));
        assert!(toeplitz_eigenvalue(&cube, 1).is_ok());
    }

    #[test]
    fn radius_squared_gives_m_plus_one() {
        let sym = build_power_symbol(2.0, None).unwrap();
        for m in [0u64, 1, 17, 100] {
            let v = toeplitz_eigenvalue(&sym, m).unwrap().to_f64();
            assert!((v / (m as f64 + 1.0) - 1.0).abs() < 1e-10, "{m} {v}");
        }
    }

    #[test]
    fn profiles_of_powers() {
        let sym = build_power_symbol(-1.5, None).unwrap();
        let form = spectrum_profile(&sym, 200, ProfileMode::Form);
        assert!(form.verdict.is_bounded(), "{:?}", form.verdict);
        let l5 = form.eigenvalues[5].unwrap().to_f64();
        assert!((l5 / gamma_ratio(5, -1.5) - 1.0).abs() < 1e-9);
        assert!(spectrum_profile(&sym, 50, ProfileMode::NaturalDomain).verdict.is_unbounded());
        let grow = build_power_symbol(0.5, None).unwrap();
        let p = spectrum_profile(&grow, 100, ProfileMode::Form);
        assert_eq!(p.tail_exponent, Some(0.25));
        assert!(p.verdict.is_unbounded());
    }

    #[test]
    fn annuli_family_profiles() {
        let sym = build_annuli_symbol(AnnuliConfig::new(2, 200)).unwrap();
        assert_eq!(tail_exponent(&sym, 1), Some(-1.5));
        assert_eq!(tail_exponent(&sym, 2), Some(1.0));
        let form = spectrum_profile(&sym, 150, ProfileMode::Form);
        assert!(form.verdict.is_bounded(), "{:?}", form.verdict);
        assert!(spectrum_profile(&sym, 150, ProfileMode::NaturalDomain).verdict.is_unbounded());
    }

    #[test]
    fn perturbation_by_constant() {
        let g = build_power_symbol(-1.0, None).unwrap();
        let h = build_power_symbol(0.0, None).unwrap();
        let r = perturbation_check(&g, &h, 60).unwrap();
        assert_eq!(r.sup_h, 1.0);
        assert!((r.max_difference - 1.0).abs() < 1e-12, "{}", r.max_difference);
        let zero = RadialSymbol::new("0", vec![RadialPiece::disk(1.0, 0.0)]).unwrap();
        assert!(perturbation_check(&g, &zero, 20).unwrap().max_difference < 1e-15);
    }

    /// h = half the unit-disk indicator: lambda_0(h) = (1 - e^-1) / 2.
    #[test]
    fn perturbation_by_half_disk() {
        let g = build_power_symbol(-1.0, None).unwrap();
        let h = RadialSymbol::new("h", vec![RadialPiece::disk(1.0, 0.5)]).unwrap();
        let r = perturbation_check(&g, &h, 30).unwrap();
        assert_eq!(r.argmax, 0);
        assert!((r.max_difference - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!(r.max_difference <= r.sup_h);
    }
}
