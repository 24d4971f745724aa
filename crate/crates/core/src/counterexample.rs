//! The ultrathin-annuli counterexample: sector test functions
//! `f_n = c_n 1_{E_n}`, the moment series for `||U_g f_n||^2`, the kernel
//! lower bound on `E_n x E_n`, and the aggregated four-part suite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::heat::{heat_grid_sup, heat_sup_bound};
use crate::kernel_tests::{
    annuli_centers, coherent_state_admissibility, fit_divergence_rate, supremal_scan, Admissibility,
    DivergenceFit, FitModel, KernelOrder, ScanPoint, ScanVerdict,
};
use crate::numerics::{integrate_interval_with, log_gamma, LogMagnitude, NumericError, QuadOptions};
use crate::symbols::{build_annuli_symbol, l1_norm_area, smooth_bump_profile, AnnuliConfig, SECTOR_CONSTANT_MAX};

/// Geometry of the sector `E_n = {a_n - rho_n <= |z| <= a_n + rho_n, |arg z| <= phi_n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorTest {
    pub n: u32,
    pub c: f64,
    pub a: f64,
    pub rho: f64,
    pub d: f64,
    pub phi: f64,
    /// `|E_n| = 4 a rho phi`, exact in polar coordinates.
    pub area_e: f64,
    /// `|c_n|^2 = pi exp(a^2) / |E_n|`.
    pub c_n_sq: LogMagnitude,
}

pub fn sector_geometry(n: u32, c: f64) -> Result<SectorTest, NumericError> {
    if n < 2 {
        return Err(NumericError::Domain {
            function: "sector_geometry (n >= 2)",
            value: f64::from(n),
        });
    }
    if !(c > 0.0 && c <= SECTOR_CONSTANT_MAX) {
        return Err(NumericError::Domain {
            function: "sector_geometry (c in (0, 1e-3])",
            value: c,
        });
    }
    let (a, rho, d) = (AnnuliConfig::a(n), AnnuliConfig::rho(n), AnnuliConfig::d(n));
    let phi = c / f64::from(n);
    let area_e = 4.0 * a * rho * phi;
    Ok(SectorTest {
        n,
        c,
        a,
        rho,
        d,
        phi,
        area_e,
        c_n_sq: LogMagnitude::from_ln(PI.ln() + a * a - area_e.ln()),
    })
}

/// `||f_n||^2_{L^2(mu)} = exp(-rho^2) sinh(2 a rho) / (2 a rho)`.
pub fn test_fn_norm_sq(n: u32, c: f64) -> Result<f64, NumericError> {
    let s = sector_geometry(n, c)?;
    let x = 2.0 * s.a * s.rho;
    let sinhc = if x < 1e-3 {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    };
    Ok((-s.rho * s.rho).exp() * sinhc)
}

/// Truncated series `sum_k |m_k|^2 / k!` with `m_k = integral_{E_n} xi^k dmu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub n: u32,
    pub k_max: u64,
    /// `ln(|m_k|^2 / k!)` for `k = 0..=k_max`.
    pub ln_terms: Vec<f64>,
    pub partial_sum: LogMagnitude,
    /// Bound on the omitted terms `k > k_max`.
    pub truncation_bound: f64,
    /// `||U_g f_n||^2 = d_n^2 |c_n|^2 * partial_sum`.
    pub value: f64,
}

/// `||U_g f_n||^2` for the indicator family.
pub fn ug_fn_norm_sq(n: u32, c: f64, tol: f64) -> Result<MomentSeries, NumericError> {
    ug_fn_norm_sq_profile(n, c, false, tol)
}

/// `||U_g f_n||^2`, with `g = d_n psi_n` on `E_n` when `smooth` is set.
pub fn ug_fn_norm_sq_profile(n: u32, c: f64, smooth: bool, tol: f64) -> Result<MomentSeries, NumericError> {
    if c == 0.0 {
        return Ok(MomentSeries {
            n,
            k_max: 0,
            ln_terms: Vec::new(),
            partial_sum: LogMagnitude::ZERO,
            truncation_bound: 0.0,
            value: 0.0,
        });
    }
    let s = sector_geometry(n, c)?;
    let nf = f64::from(n);
    let k_min = (nf + 20.0 * nf.sqrt()).ceil() as u64;
    let k_cap = 4 * u64::from(n) + 1000;
    let opts = QuadOptions::relative(1e-13);

    let mut ln_terms = Vec::new();
    let mut sum = LogMagnitude::ZERO;
    let mut small_run = 0u32;
    let mut k = 0u64;
    loop {
        let kf = k as f64;
        let ln_ang = if k == 0 {
            (2.0 * s.phi).ln()
        } else {
            (2.0 * (kf * s.phi).sin() / kf).ln()
        };
        // R_k = a^(k+1) e^(-a^2) integral exp((k+1) ln(1+u/a) - 2au - u^2) du
        let inner = |u: f64| {
            let base = ((kf + 1.0) * (u / s.a).ln_1p() - 2.0 * s.a * u - u * u).exp();
            if smooth {
                base * smooth_bump_profile(u / s.rho)
            } else {
                base
            }
        };
        let integral = integrate_interval_with(&inner, -s.rho, s.rho, &opts).into_result("moment radial integral")?;
        let ln_r = (kf + 1.0) * s.a.ln() - s.a * s.a + integral.ln();
        let ln_m = -PI.ln() + ln_ang + ln_r;
        let ln_term = 2.0 * ln_m - log_gamma(kf + 1.0)?;
        ln_terms.push(ln_term);
        sum = sum.add(LogMagnitude::from_ln(ln_term));

        if ln_term < tol.ln() + sum.ln_abs() {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if k >= k_min && small_run >= 50 {
            break;
        }
        if k >= k_cap {
            return Err(NumericError::TruncationFailure(format!(
                "moment series for n = {n} not converged by k = {k_cap}"
            )));
        }
        k += 1;
    }
    // T_{k+1} / T_k <= (a + rho)^2 / (k + 1) since |ang| and R_k ratios are bounded.
    let q = (s.a + s.rho).powi(2) / (k as f64 + 2.0);
    let last = ln_terms[ln_terms.len() - 1].exp();
    let truncation_bound = last * q / (1.0 - q);
    let partial_sum = LogMagnitude::sum(ln_terms.iter().map(|&t| LogMagnitude::from_ln(t)));
    let value = (2.0 * s.d.ln() + s.c_n_sq.ln_abs() + partial_sum.ln_abs()).exp();
    Ok(MomentSeries {
        n,
        k_max: k,
        ln_terms,
        partial_sum,
        truncation_bound,
        value,
    })
}

/// `mu(E_n) = (2 phi / pi) integral_{a-rho}^{a+rho} r exp(-r^2) dr`, in log space.
pub fn sector_measure(n: u32, c: f64) -> Result<LogMagnitude, NumericError> {
    let s = sector_geometry(n, c)?;
    let integral = integrate_interval_with(
        &|u: f64| (1.0 + u / s.a) * (-2.0 * s.a * u - u * u).exp(),
        -s.rho,
        s.rho,
        &QuadOptions::relative(1e-13),
    )
    .into_result("sector measure")?;
    Ok(LogMagnitude::from_ln(
        (2.0 * s.phi / PI).ln() + s.a.ln() - s.a * s.a + integral.ln(),
    ))
}

/// `sum_k |m_k|^2 / k!` by direct quadrature of
/// `pi^-2 integral integral r r' e^(-r^2 - r'^2) integral_{-2phi}^{2phi}
/// (2 phi - |D|) e^(r r' cos D) cos(r r' sin D) dD dr dr'`.
/// Practical only for small `a_n`.
pub fn direct_series_quadrature(n: u32, c: f64) -> Result<f64, NumericError> {
    let s = sector_geometry(n, c)?;
    let opts = QuadOptions::relative(1e-11);
    let angular = |rr: f64| -> Result<f64, NumericError> {
        let f = |dl: f64| (2.0 * s.phi - dl) * (rr * dl.cos()).exp() * (rr * dl.sin()).cos();
        Ok(2.0 * integrate_interval_with(&f, 0.0, 2.0 * s.phi, &opts).into_result("angular")?)
    };
    let middle = |r: f64| -> Result<f64, NumericError> {
        let f = |v: f64| {
            let rp = s.a + v;
            rp * (-rp * rp).exp() * angular(r * rp).unwrap_or(f64::NAN)
        };
        integrate_interval_with(&f, -s.rho, s.rho, &opts).into_result("middle radial")
    };
    let outer = |u: f64| {
        let r = s.a + u;
        r * (-r * r).exp() * middle(r).unwrap_or(f64::NAN)
    };
    let total = integrate_interval_with(&outer, -s.rho, s.rho, &opts).into_result("outer radial")?;
    Ok(total / (PI * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelLowerReport {
    pub n: u32,
    pub samples: usize,
    /// `min pi^2 e^(a^2) Re(K(xi, w) e^(-|w|^2 - |xi|^2) / pi^2)`: the density
    /// of `K dmu dmu` against `dA dA`, scaled so the diagonal at `a_n` is 1.
    pub min_scaled_re: f64,
    pub max_abs_im: f64,
}

/// Samples `(w, xi)` in `E_n x E_n` on the 16 corners of the polar box, a
/// jittered `s^4` lattice and seeded uniform fill-in, and records the
/// extremes of the scaled kernel real part and of `|Im(xi conj(w))|`.
pub fn kernel_lower_check(n: u32, c: f64, sample_count: usize, seed: u64) -> Result<KernelLowerReport, NumericError> {
    let s = sector_geometry(n, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<[f64; 4]> = Vec::with_capacity(sample_count.max(16));
    for mask in 0..16u32 {
        let pick = |bit: u32| if mask & (1 << bit) == 0 { -1.0 } else { 1.0 };
        points.push([pick(0), pick(1), pick(2), pick(3)]);
    }
    let remaining = sample_count.saturating_sub(16);
    let side = (remaining as f64).powf(0.25).floor() as usize;
    if side > 0 {
        for idx in 0..side.pow(4) {
            let mut p = [0.0; 4];
            let mut rest = idx;
            for coord in &mut p {
                let cell = (rest % side) as f64;
                rest /= side;
                *coord = -1.0 + 2.0 * (cell + rng.gen::<f64>()) / side as f64;
            }
            points.push(p);
        }
    }
    while points.len() < sample_count {
        points.push([0; 4].map(|_: i32| rng.gen_range(-1.0..=1.0)));
    }

    let mut min_scaled_re = f64::INFINITY;
    let mut max_abs_im = 0.0f64;
    for [pu, pv, pt, pt2] in points.iter().copied() {
        let (u, v) = (pu * s.rho, pv * s.rho);
        let delta = (pt - pt2) * s.phi;
        let (r, rp) = (s.a + u, s.a + v);
        let half = (0.5 * delta).sin();
        // Re(xi conj(w)) - |w|^2 - |xi|^2 + a^2, arranged without cancellation
        let exponent = -s.a * (u + v) + u * v - u * u - v * v - r * rp * 2.0 * half * half;
        let im = r * rp * delta.sin();
        min_scaled_re = min_scaled_re.min(exponent.exp() * im.cos());
        max_abs_im = max_abs_im.max(im.abs());
    }
    Ok(KernelLowerReport {
        n,
        samples: points.len(),
        min_scaled_re,
        max_abs_im,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityEntry {
    pub center: f64,
    pub result: Admissibility,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatEntry {
    pub t: f64,
    pub grid_sup: f64,
    pub argmax: f64,
    pub tail_bound: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TSide {
    pub sup: f64,
    pub ceiling: f64,
    pub tail: f64,
    pub verdict: ScanVerdict,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FnRatio {
    pub n: u32,
    pub ug_norm_sq: f64,
    pub f_norm_sq: f64,
    pub ratio: f64,
    /// `0.2 d_n^2 |E_n|` times the squared profile mass factor.
    pub floor: f64,
    pub ratio_over_log_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct USide {
    /// Symbol truncation used by the quadratic scan.
    pub scan_n_max: u32,
    pub scan: Vec<ScanPoint>,
    pub verdict: ScanVerdict,
    /// `J(a_n) >= 0.9 d_n^2 |E_n| / pi` on every scanned `n >= 50`.
    pub sector_floor_held: bool,
    pub fn_ratios: Vec<FnRatio>,
    pub fit: Option<DivergenceFit>,
    pub fn_ratio_band: Option<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: AnnuliConfig,
    pub n_probe: Vec<u32>,
    pub admissibility: Vec<AdmissibilityEntry>,
    pub heat: Vec<HeatEntry>,
    pub t_side: TSide,
    pub u_side: USide,
    pub insufficient_range: bool,
    pub failures: Vec<String>,
    pub passed: bool,
}

pub const SUITE_HEAT_TIMES: [f64; 4] = [1.0, 0.25, 0.125, 1.0 / 32.0];

/// Extra radius (in units of the unit Gaussian) kept in memory beyond the
/// last scanned center.
const SCAN_MARGIN: f64 = 7.0;

pub fn run_counterexample_suite(cfg: AnnuliConfig, n_probe: &[u32]) -> Result<SuiteReport, NumericError> {
    let sym = build_annuli_symbol(cfg).map_err(|e| NumericError::InvalidInput(e.to_string()))?;
    if let Some(&n) = n_probe.iter().find(|&&n| n < cfg.n_min || n > cfg.n_max) {
        return Err(NumericError::InvalidInput(format!(
            "probe index {n} outside [{}, {}]",
            cfg.n_min, cfg.n_max
        )));
    }
    let mut failures = Vec::new();

    // (1) pointwise admissibility
    let mut centers = vec![0.0];
    for &n in n_probe {
        centers.extend([0.5 * AnnuliConfig::a(n), AnnuliConfig::a(n)]);
    }
    let admissibility: Vec<AdmissibilityEntry> = crate::par_map(&centers, |&center| {
        Ok::<_, NumericError>(AdmissibilityEntry {
            center,
            result: coherent_state_admissibility(&sym, center),
        })
    })?;
    if admissibility.iter().any(|e| !e.result.is_admissible()) {
        failures.push("admissibility".to_string());
    }

    // (2) heat bound at several times
    let mut heat = Vec::new();
    for t in SUITE_HEAT_TIMES {
        let grid = heat_grid_sup(&sym, t, 1e-12)?;
        let bound = heat_sup_bound(&sym, t)?;
        let within_bound = grid.points.iter().all(|p| p.value + p.tail_bound <= bound * (1.0 + 1e-9));
        if !within_bound {
            failures.push(format!("heat(t = {t})"));
        }
        heat.push(HeatEntry {
            t,
            grid_sup: grid.sup,
            argmax: grid.argmax,
            tail_bound: grid.tail_bound,
            bound,
            within_bound,
        });
    }

    // (3) linear test bounded by the L1 ceiling
    let scan_centers = annuli_centers(cfg.n_min, cfg.n_max);
    let linear = supremal_scan(&sym, KernelOrder::Linear, &scan_centers)?;
    let l1 = l1_norm_area(&sym)?;
    let ceiling = l1.upper() / PI;
    let t_sup = linear.observed_sup();
    let t_passed = !linear.verdict.is_diverging() && t_sup + linear.tail_bound <= ceiling;
    if !t_passed {
        failures.push("t_side".to_string());
    }
    let t_side = TSide {
        sup: t_sup,
        ceiling,
        tail: linear.tail_bound,
        verdict: linear.verdict,
        passed: t_passed,
    };

    // (4) quadratic test and sector test functions
    let insufficient_range = scan_centers.len() < 30 || cfg.n_max < 4 * cfg.n_min;
    if insufficient_range {
        failures.push("InsufficientRange".to_string());
    }
    let extended_cfg = cfg.covering(AnnuliConfig::a(cfg.n_max), SCAN_MARGIN);
    let extended = build_annuli_symbol(extended_cfg).map_err(|e| NumericError::InvalidInput(e.to_string()))?;
    let quadratic = supremal_scan(&extended, KernelOrder::Quadratic, &scan_centers)?;
    let mass_sq = cfg.mass_factor().powi(2);
    let sector_floor_held = quadratic.points.iter().all(|p| {
        let n = (p.center * p.center).round() as u32;
        n < 50 || p.value >= 0.9 * mass_sq * AnnuliConfig::d(n).powi(2) * 4.0 * cfg.c * f64::from(n).powi(-5) / PI
    });
    let fit = fit_divergence_rate(&quadratic.centers(), &quadratic.values(), FitModel::PowerTimesLogSquared).ok();

    let fn_ratios: Vec<FnRatio> = crate::par_map(n_probe, |&n| {
        let series = ug_fn_norm_sq_profile(n, cfg.c, cfg.smooth, 1e-14)?;
        let f_norm_sq = test_fn_norm_sq(n, cfg.c)?;
        let s = sector_geometry(n, cfg.c)?;
        let ratio = series.value / f_norm_sq;
        Ok::<_, NumericError>(FnRatio {
            n,
            ug_norm_sq: series.value,
            f_norm_sq,
            ratio,
            floor: 0.2 * mass_sq * s.d * s.d * s.area_e,
            ratio_over_log_sq: ratio / f64::from(n).ln().powi(2),
        })
    })?;
    let ratios_increasing = fn_ratios.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let floors_held = fn_ratios.iter().all(|r| r.ratio >= r.floor);
    let fn_ratio_band = fn_ratios
        .iter()
        .map(|r| r.ratio_over_log_sq)
        .fold(None, |acc: Option<(f64, f64)>, v| {
            Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))))
        });
    let band_ok = fn_ratio_band.is_none_or(|(lo, hi)| hi <= 2.0 * lo);
    let u_passed = !insufficient_range
        && quadratic.verdict.is_diverging()
        && sector_floor_held
        && ratios_increasing
        && floors_held
        && band_ok;
    if !u_passed && !insufficient_range {
        failures.push("u_side".to_string());
    }
    let u_side = USide {
        scan_n_max: extended_cfg.n_max,
        scan: quadratic.points,
        verdict: quadratic.verdict,
        sector_floor_held,
        fn_ratios,
        fit,
        fn_ratio_band,
        passed: u_passed,
    };

    Ok(SuiteReport {
        config: cfg,
        n_probe: n_probe.to_vec(),
        admissibility,
        heat,
        t_side,
        u_side,
        insufficient_range,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_areas() {
        let s = sector_geometry(10, 1e-3).unwrap();
        assert!((s.area_e / 4e-8 - 1.0).abs() < 1e-14);
        assert!((s.area_e / (s.a * s.rho * s.phi) - 4.0).abs() < 1e-15);
        let s2 = sector_geometry(2, 1e-3).unwrap();
        assert!((s2.area_e / (1e-3 / 8.0) - 1.0).abs() < 1e-14);
        assert!(sector_geometry(1, 1e-3).is_err());
        assert!(sector_geometry(5, 2e-3).is_err());
    }

    #[test]
    fn normalization_closed_form() {
        let v10 = test_fn_norm_sq(10, 1e-3).unwrap();
        assert!((v10 - (1.0 + 4e-8 / 6.0 - 1e-9)).abs() < 1e-15, "{v10}");
        let v2 = test_fn_norm_sq(2, 1e-3).unwrap();
        let x: f64 = 2f64.powf(-3.0);
        let exact = (-(2f64.powf(-9.0))).exp() * x.sinh() / x;
        assert!((v2 - exact).abs() < 1e-15);
        assert!((v2 - 1.000_6).abs() < 1e-4);
    }

    /// Closed form against quadrature of |c_n|^2 mu(E_n).
    #[test]
    fn normalization_matches_measure() {
        for n in [2, 10, 50] {
            let mu = sector_measure(n, 1e-3).unwrap();
            let s = sector_geometry(n, 1e-3).unwrap();
            let via_measure = (s.c_n_sq.ln_abs() + mu.ln_abs()).exp();
            assert!((via_measure / test_fn_norm_sq(n, 1e-3).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_series_sandwich() {
        let n = 50;
        let c = 1e-3;
        let series = ug_fn_norm_sq(n, c, 1e-14).unwrap();
        let s = sector_geometry(n, c).unwrap();
        assert!(series.value >= 0.2 * s.d * s.d * s.area_e);
        let ceiling = (2.0 * s.d.ln() + s.c_n_sq.ln_abs() + sector_measure(n, c).unwrap().ln_abs()).exp();
        assert!(series.value <= ceiling);
        assert!(series.truncation_bound < 1e-6 * series.partial_sum.to_f64());
        assert!(series.k_max >= 50 + 20 * 7);
    }

    #[test]
    fn empty_sector_gives_zero() {
        assert_eq!(ug_fn_norm_sq(50, 0.0, 1e-14).unwrap().value, 0.0);
    }

    #[test]
    fn series_matches_direct_quadrature() {
        let series = ug_fn_norm_sq(4, 1e-3, 1e-15).unwrap().partial_sum.to_f64();
        let direct = direct_series_quadrature(4, 1e-3).unwrap();
        assert!((series / direct - 1.0).abs() < 1e-4, "{series} {direct}");
    }

    #[test]
    fn kernel_lower_bound_holds() {
        let r = kernel_lower_check(100, 1e-3, 1000, 7).unwrap();
        assert_eq!(r.samples, 1000);
        assert!(r.min_scaled_re >= 0.4, "{r:?}");
        assert!(r.max_abs_im <= 2e-3 + 10.0 / 100.0);
        assert!(r.max_abs_im <= 0.003);
        let again = kernel_lower_check(100, 1e-3, 1000, 7).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn short_range_is_flagged() {
        let report = run_counterexample_suite(AnnuliConfig::new(2, 20), &[10, 20]).unwrap();
        assert!(report.insufficient_range);
        assert!(!report.passed);
    }
}
