//! Translated-Gaussian tests: the linear average of `g` and the quadratic
//! average of `g^2` against `pi^-1 exp(-|z - a|^2) dA`.

use serde::Serialize;
use thiserror::Error;

use crate::heat::annuli_tail_bound;
use crate::numerics::NumericError;
use crate::radial::{radial_integral, RadialWeight};
use crate::symbols::RadialSymbol;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Growth factor over the half-radius value required for a `Diverging` verdict.
pub const DIVERGENCE_GROWTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelOrder {
    Linear,
    Quadratic,
}

impl KernelOrder {
    pub fn power(self) -> u32 {
        match self {
            KernelOrder::Linear => 1,
            KernelOrder::Quadratic => 2,
        }
    }
}

/// `pi^-1 integral exp(-|z - a|^2) g(z)^p dA` for the in-memory symbol.
/// The linear order is the heat transform at `t = 1/4`, computed by the
/// same code path.
pub fn gaussian_average(sym: &RadialSymbol, order: KernelOrder, a: f64) -> Result<f64, NumericError> {
    gaussian_average_tol(sym, order, a, DEFAULT_REL_TOL)
}

pub fn gaussian_average_tol(sym: &RadialSymbol, order: KernelOrder, a: f64, rel_tol: f64) -> Result<f64, NumericError> {
    if !(a >= 0.0) {
        return Err(NumericError::Domain {
            function: "gaussian_average",
            value: a,
        });
    }
    radial_integral(sym, order.power(), &RadialWeight::heat(0.25, a), rel_tol)
}

/// Bound on the contribution of annuli beyond the in-memory truncation.
pub fn truncation_tail(sym: &RadialSymbol, order: KernelOrder, a: f64) -> f64 {
    sym.family()
        .map_or(0.0, |cfg| annuli_tail_bound(cfg, order.power(), 0.25, a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Admissibility {
    Admissible { value: f64, tail_bound: f64 },
    Inadmissible { reason: String },
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible { .. })
    }
}

/// Finiteness of `pi^-1 integral exp(-|z - a|^2) |g|^2 dA`, i.e. of
/// `||g k_a||^2` in `L^2(mu)`: partial value plus truncation tail.
pub fn coherent_state_admissibility(sym: &RadialSymbol, a: f64) -> Admissibility {
    match gaussian_average(sym, KernelOrder::Quadratic, a) {
        Ok(value) if value.is_finite() => {
            let tail_bound = truncation_tail(sym, KernelOrder::Quadratic, a);
            if tail_bound.is_finite() {
                Admissibility::Admissible { value, tail_bound }
            } else {
                Admissibility::Inadmissible {
                    reason: "tail bound is infinite".into(),
                }
            }
        }
        Ok(value) => Admissibility::Inadmissible {
            reason: format!("local part evaluates to {value}"),
        },
        Err(e) => Admissibility::Inadmissible { reason: e.to_string() },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub center: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub cumulative_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScanVerdict {
    BoundedLooking {
        sup: f64,
    },
    /// Values strictly increase over the final third and the final value is
    /// at least `DIVERGENCE_GROWTH` times the value at the center nearest
    /// half the final radius.
    Diverging {
        final_value: f64,
        reference_center: f64,
        growth: f64,
    },
}

impl ScanVerdict {
    pub fn is_diverging(&self) -> bool {
        matches!(self, ScanVerdict::Diverging { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelScan {
    pub order: KernelOrder,
    pub points: Vec<ScanPoint>,
    pub tail_bound: f64,
    pub verdict: ScanVerdict,
}

impl KernelScan {
    pub fn centers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.center).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn observed_sup(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.cumulative_sup)
    }
}

/// `a_n = sqrt(n)` for `n` in `lo..=hi`.
pub fn annuli_centers(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|n| f64::from(n).sqrt()).collect()
}

/// Evaluates the kernel test at every center (in parallel, assembled in
/// order) and classifies the sequence.
pub fn supremal_scan(sym: &RadialSymbol, order: KernelOrder, centers: &[f64]) -> Result<KernelScan, NumericError> {
    if centers.windows(2).any(|w| w[0] > w[1]) {
        return Err(NumericError::Domain {
            function: "supremal_scan (centers must be sorted)",
            value: f64::NAN,
        });
    }
    let evaluated = crate::par_map(centers, |&a| {
        Ok::<_, NumericError>((gaussian_average(sym, order, a)?, truncation_tail(sym, order, a)))
    })?;
    let mut points = Vec::with_capacity(centers.len());
    let mut sup = 0.0f64;
    let mut tail = 0.0f64;
    for (&center, (value, tail_bound)) in centers.iter().zip(evaluated) {
        sup = sup.max(value);
        tail = tail.max(tail_bound);
        points.push(ScanPoint {
            center,
            value,
            tail_bound,
            cumulative_sup: sup,
        });
    }
    let verdict = classify(&points, tail);
    Ok(KernelScan {
        order,
        points,
        tail_bound: tail,
        verdict,
    })
}

fn classify(points: &[ScanPoint], tail: f64) -> ScanVerdict {
    let sup = points.last().map_or(0.0, |p| p.cumulative_sup) + tail;
    let len = points.len();
    if len < 3 {
        return ScanVerdict::BoundedLooking { sup };
    }
    let third = len.div_ceil(3).max(2);
    let increasing = points[len - third..].windows(2).all(|w| w[1].value > w[0].value);
    let last = points[len - 1];
    let half = 0.5 * last.center;
    let reference = points
        .iter()
        .min_by(|p, q| (p.center - half).abs().total_cmp(&(q.center - half).abs()))
        .copied()
        .unwrap_or(points[0]);
    let growth = last.value / reference.value;
    if increasing && reference.value > 0.0 && growth >= DIVERGENCE_GROWTH {
        ScanVerdict::Diverging {
            final_value: last.value,
            reference_center: reference.center,
            growth,
        }
    } else {
        ScanVerdict::BoundedLooking { sup }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitModel {
    /// `J(a_n) ~ C ln^2 n`.
    LogSquared,
    /// `J(a_n) ~ C n^p ln^2 n`, `p` by least squares in log coordinates.
    PowerTimesLogSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceFit {
    pub model: FitModel,
    pub exponent: f64,
    /// Tightest interval holding at least 90% of the per-center constants.
    pub constant_band: (f64, f64),
    pub constants: Vec<f64>,
}

impl DivergenceFit {
    pub fn band_ratio(&self) -> f64 {
        self.constant_band.1 / self.constant_band.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("fit rejected: constant band ratio {0} exceeds 10")]
    FitRejected(f64),
    #[error("fit needs at least two centers a_n with n >= 2 and positive values")]
    InsufficientData,
}

/// Fits values on centers `a_n = sqrt(n)` against `ln^2 n` or `n^p ln^2 n`.
pub fn fit_divergence_rate(centers: &[f64], values: &[f64], model: FitModel) -> Result<DivergenceFit, FitError> {
    let data: Vec<(f64, f64)> = centers
        .iter()
        .zip(values)
        .map(|(&c, &v)| ((c * c).round(), v))
        .filter(|&(n, v)| n >= 2.0 && v > 0.0)
        .collect();
    if data.len() < 2 {
        return Err(FitError::InsufficientData);
    }
    let exponent = match model {
        FitModel::LogSquared => 0.0,
        FitModel::PowerTimesLogSquared => {
            let xs: Vec<f64> = data.iter().map(|&(n, _)| n.ln()).collect();
            let ys: Vec<f64> = data.iter().map(|&(n, v)| v.ln() - 2.0 * n.ln().ln()).collect();
            let k = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            if sxx == 0.0 {
                return Err(FitError::InsufficientData);
            }
            sxy / sxx
        }
    };
    let constants: Vec<f64> = data
        .iter()
        .map(|&(n, v)| v / (n.powf(exponent) * n.ln().powi(2)))
        .collect();
    let mut sorted = constants.clone();
    sorted.sort_by(f64::total_cmp);
    let keep = ((0.9 * sorted.len() as f64).ceil() as usize).max(1);
    let (lo, hi) = (0..=sorted.len() - keep)
        .map(|i| (sorted[i], sorted[i + keep - 1]))
        .min_by(|x, y| (x.1 / x.0).total_cmp(&(y.1 / y.0)))
        .expect("keep <= len");
    let band_ratio = hi / lo;
    if band_ratio > 10.0 {
        return Err(FitError::FitRejected(band_ratio));
    }
    Ok(DivergenceFit {
        model,
        exponent,
        constant_band: (lo, hi),
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::heat_transform_radial;
    use crate::symbols::{build_annuli_symbol, build_power_symbol, AnnuliConfig, RadialPiece};

    #[test]
    fn constant_symbol_has_unit_averages() {
        let one = build_power_symbol(0.0, None).unwrap();
        for a in [0.0, 1.0, 7.5] {
            assert!((gaussian_average(&one, KernelOrder::Linear, a).unwrap() - 1.0).abs() < 1e-10);
            assert!((gaussian_average(&one, KernelOrder::Quadratic, a).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_disk_at_origin() {
        let disk = RadialSymbol::new("disk", vec![RadialPiece::disk(1.0, 1.0)]).unwrap();
        let v = gaussian_average(&disk, KernelOrder::Linear, 0.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn linear_equals_quarter_heat() {
        let sym = build_annuli_symbol(AnnuliConfig::new(2, 60)).unwrap();
        for a in [0.0, 2.0, 5.3] {
            let g = gaussian_average(&sym, KernelOrder::Linear, a).unwrap();
            let h = heat_transform_radial(&sym, 0.25, a).unwrap();
            assert_eq!(g, h);
        }
    }

    /// The sector restriction is a lower bound for the quadratic test.
    #[test]
    fn quadratic_annuli_lower_bound() {
        let cfg = AnnuliConfig::new(2, 200);
        let sym = build_annuli_symbol(cfg).unwrap();
        let n = 100;
        let value = gaussian_average(&sym, KernelOrder::Quadratic, AnnuliConfig::a(n)).unwrap();
        let floor = 0.99 * AnnuliConfig::d(n).powi(2) * 4.0 * cfg.c * f64::from(n).powi(-5) / std::f64::consts::PI;
        assert!((floor - 0.0268).abs() < 2e-4, "{floor}");
        assert!(value > floor);
    }

    #[test]
    fn admissibility() {
        let sym = build_annuli_symbol(AnnuliConfig::new(2, 200)).unwrap();
        for a in [0.0, AnnuliConfig::a(50)] {
            match coherent_state_admissibility(&sym, a) {
                Admissibility::Admissible { value, tail_bound } => {
                    assert!(value.is_finite() && tail_bound < 1e-6 * value.max(1.0))
                }
                other => panic!("{other:?}"),
            }
        }
        let singular = build_power_symbol(-1.5, Some((0.0, 1.0))).unwrap();
        assert!(!coherent_state_admissibility(&singular, 0.0).is_admissible());
    }

    #[test]
    fn constant_scan_is_bounded() {
        let one = build_power_symbol(0.0, None).unwrap();
        let centers: Vec<f64> = (0..=20).map(f64::from).collect();
        let scan = supremal_scan(&one, KernelOrder::Linear, &centers).unwrap();
        match scan.verdict {
            ScanVerdict::BoundedLooking { sup } => assert!((sup - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn synthetic_log_squared_fit() {
        let centers = annuli_centers(2, 100);
        let values: Vec<f64> = (2..=100u32).map(|n| f64::from(n).ln().powi(2)).collect();
        let fit = fit_divergence_rate(&centers, &values, FitModel::LogSquared).unwrap();
        assert_eq!(fit.exponent, 0.0);
        assert!((fit.constant_band.0 - 1.0).abs() < 1e-12 && (fit.constant_band.1 - 1.0).abs() < 1e-12);
        let fit = fit_divergence_rate(&centers, &values, FitModel::PowerTimesLogSquared).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn wide_band_is_rejected() {
        let centers = annuli_centers(2, 30);
        let values: Vec<f64> = (2..=30u32).map(|n| f64::from(n).powi(3)).collect();
        assert!(matches!(
            fit_divergence_rate(&centers, &values, FitModel::LogSquared),
            Err(FitError::FitRejected(_))
        ));
    }

    #[test]
    fn growing_sequence_is_diverging() {
        let pts: Vec<ScanPoint> = (1..=30)
            .map(|i| {
                let c = f64::from(i);
                ScanPoint {
                    center: c,
                    value: c * c,
                    tail_bound: 0.0,
                    cumulative_sup: c * c,
                }
            })
            .collect();
        assert!(classify(&pts, 0.0).is_diverging());
        let flat: Vec<ScanPoint> = pts
            .iter()
            .map(|p| ScanPoint {
                value: 1.0 + 1e-6 * p.center,
                ..*p
            })
            .collect();
        assert!(!classify(&flat, 0.0).is_diverging());
    }
}
