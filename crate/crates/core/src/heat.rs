//! Heat transform `g^(t) = g * (4 pi t)^-1 exp(-|z|^2 / 4t)` of radial symbols.

use std::f64::consts::PI;

use serde::Serialize;

use crate::numerics::{KahanSum, NumericError};
use crate::radial::{radial_integral, RadialWeight};
use crate::symbols::{l1_norm_area, AnnuliConfig, RadialSymbol};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatParams {
    t: f64,
}

impl HeatParams {
    pub fn new(t: f64) -> Result<Self, NumericError> {
        if t > 0.0 && t.is_finite() {
            Ok(Self { t })
        } else {
            Err(NumericError::Domain {
                function: "heat time",
                value: t,
            })
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// `g^(t)(x)` for the in-memory symbol, via the Bessel-reduced radial integral.
pub fn heat_transform_radial(sym: &RadialSymbol, t: f64, x: f64) -> Result<f64, NumericError> {
    heat_transform_radial_tol(sym, t, x, DEFAULT_REL_TOL)
}

pub fn heat_transform_radial_tol(sym: &RadialSymbol, t: f64, x: f64, rel_tol: f64) -> Result<f64, NumericError> {
    let t = HeatParams::new(t)?.t();
    if !(x >= 0.0) {
        return Err(NumericError::Domain {
            function: "heat_transform_radial",
            value: x,
        });
    }
    radial_integral(sym, 1, &RadialWeight::heat(t, x), rel_tol)
}

/// Heat value of the in-memory symbol together with a bound on the
/// contribution of the annuli beyond `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatValue {
    pub x: f64,
    pub value: f64,
    pub tail_bound: f64,
}

pub fn heat_with_tail(sym: &RadialSymbol, t: f64, x: f64, rel_tol: f64) -> Result<HeatValue, NumericError> {
    let value = heat_transform_radial_tol(sym, t, x, rel_tol)?;
    let tail_bound = sym.family().map_or(0.0, |cfg| annuli_tail_bound(cfg, 1, t, x));
    Ok(HeatValue { x, value, tail_bound })
}

/// `(4 pi t)^-1 ||g||_1`, including the certified family tail.
pub fn heat_sup_bound(sym: &RadialSymbol, t: f64) -> Result<f64, NumericError> {
    let t = HeatParams::new(t)?.t();
    Ok(l1_norm_area(sym)?.upper() / (4.0 * PI * t))
}

/// Whether `g^(t)` is non-increasing along the sorted grid (slack 1e-10).
/// Meaningful only for radially non-increasing symbols.
pub fn heat_monotonicity_check(sym: &RadialSymbol, t: f64, grid: &[f64]) -> Result<bool, NumericError> {
    let mut radii = grid.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut previous = f64::INFINITY;
    for r in radii {
        let v = heat_transform_radial(sym, t, r)?;
        if v > previous + 1e-10 * previous.abs().max(1.0) {
            return Ok(false);
        }
        previous = v;
    }
    Ok(true)
}

/// Upper bound on the heat transform (or, with `p = 2` and `t = 1/4`, the
/// quadratic kernel test) of the annuli `n > n_max` at radius `x`:
/// `(4 pi t)^-1 sum_n d_n^p |A_n| m exp(-dist_n^2 / 4t)` with
/// `dist_n = max(0, a_n - rho_n - x)` and `m` the profile mass factor.
///
/// Terms are summed explicitly until they are certified negligible; beyond
/// `N >= 4 (x + 1)^2` one has `dist_n >= sqrt(n)/2`, so each term is at
/// most `4 pi n^k exp(-n / 16t)` with `k = 7p/2 - 4`, a series dominated by
/// a geometric one.
pub fn annuli_tail_bound(cfg: &AnnuliConfig, p: u32, t: f64, x: f64) -> f64 {
    let pf = f64::from(p);
    let k = 3.5 * pf - 4.0;
    let s = 1.0 / (16.0 * t);
    let n_geom = (4.0 * (x + 1.0).powi(2)).max(2.0 * k.max(0.0) / s + 1.0).ceil();
    let mut sum = KahanSum::new();
    let mut n = u64::from(cfg.n_max) + 1;
    loop {
        let nf = n as f64;
        let dist = (nf.sqrt() - nf.powf(-4.5) - x).max(0.0);
        let ln_term = (4.0 * PI).ln() + pf * (2.5 * nf.ln() + nf.ln().ln()) - 4.0 * nf.ln() - dist * dist / (4.0 * t);
        sum.add(ln_term.exp());
        if nf >= n_geom {
            // remainder for m > n
            let q = (k.max(0.0) / nf - s).exp();
            let next = nf + 1.0;
            let remainder = 4.0 * PI * (k * next.ln() - next * s).exp() / (1.0 - q);
            if remainder <= 1e-30 * sum.value() || n >= 50_000_000 {
                sum.add(remainder);
                break;
            }
        }
        n += 1;
    }
    cfg.mass_factor() * sum.value() / (4.0 * PI * t)
}

/// Sup of `g^(t)` over a grid of radii, with the grid construction recorded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatGridSup {
    pub t: f64,
    pub sup: f64,
    pub argmax: f64,
    pub r_max: f64,
    /// Bound on `g^(t)` beyond `r_max` (for compactly supported symbols) or
    /// on the truncated family tail (for annuli families).
    pub tail_bound: f64,
    pub points: Vec<HeatValue>,
}

/// Evaluates `g^(t)` on a linear grid of step `sqrt(t)/8` refined by the
/// centers of all in-memory segments, up to a radius beyond which the heat
/// transform is certified below `tol` (compact support) or the outer edge of
/// the in-memory family plus eight kernel widths.
pub fn heat_grid_sup(sym: &RadialSymbol, t: f64, tol: f64) -> Result<HeatGridSup, NumericError> {
    let t = HeatParams::new(t)?.t();
    let outer = sym.outer_radius();
    if outer.is_infinite() {
        return Err(NumericError::Divergent(
            "grid sup needs a compactly supported in-memory symbol".into(),
        ));
    }
    let l1 = l1_norm_area(sym)?;
    let kernel_peak = l1.partial / (4.0 * PI * t);
    // beyond R + w: g^(t) <= kernel_peak * exp(-w^2 / 4t)
    let w = (4.0 * t * (kernel_peak / tol).max(1.0).ln()).sqrt().max(8.0 * (4.0 * t).sqrt());
    let r_max = outer + w;
    let step = t.sqrt() / 8.0;
    let mut grid: Vec<f64> = (0..=(r_max / step).ceil() as usize).map(|i| i as f64 * step).collect();
    grid.extend(sym.segments().iter().map(|s| 0.5 * (s.lo + s.hi)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let points = crate::par_map(&grid, |&x| heat_with_tail(sym, t, x, DEFAULT_REL_TOL))?;
    let (mut sup, mut argmax, mut tail) = (0.0, 0.0, 0.0f64);
    for p in &points {
        if p.value > sup {
            sup = p.value;
            argmax = p.x;
        }
        tail = tail.max(p.tail_bound);
    }
    let beyond = kernel_peak * (-w * w / (4.0 * t)).exp();
    Ok(HeatGridSup {
        t,
        sup,
        argmax,
        r_max,
        tail_bound: tail.max(beyond),
        points,
    })
}
