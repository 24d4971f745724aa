//! Heat-flow irreversibility: a sum of amplitude-tuned modulated Gaussians
//! whose heat transform is bounded at `t0` but grows along the centers at
//! an earlier time `t1 < t0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{KahanSum, LogMagnitude};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrreversibilityError {
    #[error("invalid times: need 0 < t1 <= t0, got t0 = {t0}, t1 = {t1}")]
    InvalidTimes { t0: f64, t1: f64 },
    #[error("frequencies must have strictly increasing modulus")]
    FrequenciesNotIncreasing,
    #[error("no admissible radius below {cap} for bump {index}")]
    PlacementFailure { index: usize, cap: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// `(alpha, beta) = (t / (1 + 4t), 1 / (1 + 4t))`.
pub fn alpha_beta(t: f64) -> (f64, f64) {
    let s = 1.0 + 4.0 * t;
    (t / s, 1.0 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePair {
    pub t0: f64,
    pub t1: f64,
}

impl TimePair {
    /// `t1 == t0` is accepted as a degenerate control case.
    pub fn new(t0: f64, t1: f64) -> Result<Self, IrreversibilityError> {
        if t1 > 0.0 && t1 <= t0 && t0.is_finite() {
            Ok(Self { t0, t1 })
        } else {
            Err(IrreversibilityError::InvalidTimes { t0, t1 })
        }
    }
}

/// Modulation wave vector of `cos(Im(conj(xi) z)) = cos(k . z)`.
fn wave_vector(xi: Complex64) -> (f64, f64) {
    (-xi.im, xi.re)
}

/// `Im(conj(xi) z)`.
fn phase(xi: Complex64, z: Complex64) -> f64 {
    (xi.conj() * z).im
}

/// `h_xi(z) = cos(Im(conj(xi) z)) exp(-|z|^2)`.
pub fn modulated_gaussian(xi: Complex64, z: Complex64) -> f64 {
    phase(xi, z).cos() * (-z.norm_sqr()).exp()
}

/// Closed form `H_t h_xi(z) = beta e^{-beta |z|^2} e^{-alpha |xi|^2} cos(beta Im(conj(xi) z))`,
/// obtained by completing the square in the Gaussian convolution.
pub fn heat_of_modulated_gaussian(xi: Complex64, t: f64, z: Complex64) -> f64 {
    let (alpha, beta) = alpha_beta(t);
    beta * (-beta * z.norm_sqr() - alpha * xi.norm_sqr()).exp() * (beta * phase(xi, z)).cos()
}

/// `ln |H_t h_xi(z)|` upper envelope `ln beta - beta |z|^2 - alpha |xi|^2`.
fn ln_heat_envelope(xi: Complex64, t: f64, z: Complex64) -> f64 {
    let (alpha, beta) = alpha_beta(t);
    beta.ln() - beta * z.norm_sqr() - alpha * xi.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    #[serde(serialize_with = "ser_complex")]
    pub xi: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub center: Complex64,
    /// `exp(alpha(t0) |xi|^2)`.
    pub amplitude: LogMagnitude,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFamily {
    pub times: TimePair,
    pub bumps: Vec<Bump>,
}

impl BumpFamily {
    /// `g(z) = sum_n A_n h_{xi_n}(z - z_n)`.
    pub fn eval(&self, z: Complex64) -> f64 {
        let mut acc = KahanSum::new();
        for b in &self.bumps {
            acc.add(b.amplitude.to_f64() * modulated_gaussian(b.xi, z - b.center));
        }
        acc.value()
    }

    /// `g^(t)(z)` by linearity of the heat flow.
    pub fn heat(&self, t: f64, z: Complex64) -> f64 {
        let mut acc = KahanSum::new();
        for b in &self.bumps {
            acc.add(b.amplitude.to_f64() * heat_of_modulated_gaussian(b.xi, t, z - b.center));
        }
        acc.value()
    }
}

/// `xi_n = sqrt(scale * n)` on the positive real axis, `n = 1..=count`.
pub fn default_frequencies(count: usize, scale: f64) -> Vec<Complex64> {
    (1..=count)
        .map(|n| Complex64::new((scale * n as f64).sqrt(), 0.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacementOptions {
    pub min_separation: f64,
    /// Bound on the `t1` overlap sum at every center.
    pub overlap_cap: f64,
    /// Fraction of `overlap_cap` held back for bumps placed later.
    pub forward_reserve: f64,
    pub radius_cap: f64,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        Self {
            min_separation: 10.0,
            overlap_cap: 1.0,
            forward_reserve: 0.5,
            radius_cap: 1.0e4,
        }
    }
}

/// `ln(A_m |H_{t1} h_{xi_m}(w)|)` upper envelope, the quantity budgeted by
/// the overlap constraint.
fn ln_overlap(amplitude: LogMagnitude, xi: Complex64, t1: f64, w: Complex64) -> f64 {
    amplitude.ln_abs() + ln_heat_envelope(xi, t1, w)
}

/// Places centers on the positive real axis at the smallest integer radius
/// satisfying separation, the geometric tail budget
/// `A_n^2 exp(-|z_n|^2 / 4) <= 2^-n`, and the split overlap budget.
pub fn greedy_centers(
    times: TimePair,
    xis: &[Complex64],
    opts: &PlacementOptions,
) -> Result<BumpFamily, IrreversibilityError> {
    if xis.windows(2).any(|w| w[1].norm() <= w[0].norm()) {
        return Err(IrreversibilityError::FrequenciesNotIncreasing);
    }
    let (alpha0, _) = alpha_beta(times.t0);
    let ln_backward_cap = ((1.0 - opts.forward_reserve) * opts.overlap_cap).ln();
    let ln_forward_cap = (opts.forward_reserve * opts.overlap_cap).ln();
    let mut bumps: Vec<Bump> = Vec::with_capacity(xis.len());
    // overlap already received by each placed center from later bumps
    let mut forward: Vec<LogMagnitude> = Vec::with_capacity(xis.len());

    for (index, &xi) in xis.iter().enumerate() {
        let amplitude = LogMagnitude::from_ln(alpha0 * xi.norm_sqr());
        let ln_tail_budget = -((index + 1) as f64) * std::f64::consts::LN_2;
        let mut radius = bumps.last().map_or(0.0, |b| b.center.re.ceil());
        loop {
            if radius > opts.radius_cap {
                return Err(IrreversibilityError::PlacementFailure {
                    index,
                    cap: opts.radius_cap,
                });
            }
            let z = Complex64::new(radius, 0.0);
            let separated = bumps.iter().all(|b| (z - b.center).norm() >= opts.min_separation);
            let tail_ok = 2.0 * amplitude.ln_abs() - radius * radius / 4.0 <= ln_tail_budget;
            let backward = LogMagnitude::sum(
                bumps
                    .iter()
                    .map(|b| LogMagnitude::from_ln(ln_overlap(b.amplitude, b.xi, times.t1, z - b.center))),
            );
            let backward_ok = bumps.is_empty() || backward.ln_abs() <= ln_backward_cap;
            let forward_ok = bumps.iter().zip(&forward).all(|(b, f)| {
                let added = LogMagnitude::from_ln(ln_overlap(amplitude, xi, times.t1, b.center - z));
                f.add(added).ln_abs() <= ln_forward_cap
            });
            if separated && tail_ok && backward_ok && forward_ok {
                for (b, f) in bumps.iter().zip(forward.iter_mut()) {
                    *f = f.add(LogMagnitude::from_ln(ln_overlap(amplitude, xi, times.t1, b.center - z)));
                }
                bumps.push(Bump {
                    xi,
                    center: z,
                    amplitude,
                });
                forward.push(LogMagnitude::ZERO);
                break;
            }
            radius += 1.0;
        }
    }
    Ok(BumpFamily { times, bumps })
}

/// Independent re-check of the three placement constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub min_separation: f64,
    /// `A_n^2 exp(-|z_n|^2 / 4)` per bump.
    pub tail_terms: Vec<f64>,
    /// `sum_{m != n} A_m |H_{t1} h_{xi_m}(z_n - z_m)|` per center.
    pub overlaps: Vec<f64>,
    pub separation_ok: bool,
    pub tail_ok: bool,
    pub overlap_ok: bool,
}

impl ConstraintCheck {
    pub fn all_ok(&self) -> bool {
        self.separation_ok && self.tail_ok && self.overlap_ok
    }
}

pub fn check_constraints(family: &BumpFamily, opts: &PlacementOptions) -> ConstraintCheck {
    let bumps = &family.bumps;
    let mut min_separation = f64::INFINITY;
    for (i, b) in bumps.iter().enumerate() {
        for c in &bumps[i + 1..] {
            min_separation = min_separation.min((b.center - c.center).norm());
        }
    }
    let tail_terms: Vec<f64> = bumps
        .iter()
        .map(|b| (2.0 * b.amplitude.ln_abs() - b.center.norm_sqr() / 4.0).exp())
        .collect();
    let overlaps: Vec<f64> = bumps
        .iter()
        .enumerate()
        .map(|(n, b)| {
            let mut acc = KahanSum::new();
            for (m, c) in bumps.iter().enumerate() {
                if m != n {
                    let v = heat_of_modulated_gaussian(c.xi, family.times.t1, b.center - c.center);
                    acc.add(c.amplitude.to_f64() * v.abs());
                }
            }
            acc.value()
        })
        .collect();
    ConstraintCheck {
        min_separation,
        separation_ok: bumps.len() < 2 || min_separation >= opts.min_separation,
        tail_ok: tail_terms
            .iter()
            .enumerate()
            .all(|(i, &v)| v <= 0.5f64.powi(i as i32 + 1) * (1.0 + 1e-12)),
        overlap_ok: overlaps.iter().all(|&v| v <= opts.overlap_cap),
        tail_terms,
        overlaps,
    }
}

/// Rectangular evaluation grid in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PlanarGrid {
    /// Box around all centers with `margin` on each side and the given step.
    pub fn around(family: &BumpFamily, margin: f64, step: f64) -> Self {
        let (mut x_min, mut x_max, mut y_min, mut y_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for b in &family.bumps {
            x_min = x_min.min(b.center.re);
            x_max = x_max.max(b.center.re);
            y_min = y_min.min(b.center.im);
            y_max = y_max.max(b.center.im);
        }
        let (x_min, x_max, y_min, y_max) = (x_min - margin, x_max + margin, y_min - margin, y_max + margin);
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx: ((x_max - x_min) / step).round() as usize + 1,
            ny: ((y_max - y_min) / step).round() as usize + 1,
        }
    }

    fn validate(&self) -> Result<(), IrreversibilityError> {
        if self.nx < 2 || self.ny < 2 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(IrreversibilityError::InvalidGrid(format!("{self:?}")));
        }
        Ok(())
    }

    fn rows(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|j| self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64)
            .collect()
    }

    fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterValue {
    pub n: usize,
    pub value: f64,
    /// `beta(t1) exp((alpha(t0) - alpha(t1)) |xi_n|^2) - 1`.
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilitySample {
    #[serde(serialize_with = "ser_complex")]
    pub center: Complex64,
    /// `||g k_a||^2_{L^2(mu)} = pi^-1 integral exp(-|z - a|^2) g(z)^2 dA`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrreversibilityReport {
    pub family: BumpFamily,
    pub grid: PlanarGrid,
    pub grid_sup_t0: f64,
    /// `beta(t0) max_n [1 + sum_{m != n} exp(-beta(t0) |z_n - z_m|^2 / 4)]`.
    pub ceiling_t0: f64,
    pub t1_values: Vec<CenterValue>,
    /// `g^(t1)(z_N) / ceiling_t0`.
    pub growth_ratio: f64,
    pub constraints: ConstraintCheck,
    pub admissibility: Vec<AdmissibilitySample>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Bound `sup |g^(t0)| <= ceiling`: with `z_n` the center nearest to `z`,
/// `|z - z_m| >= |z_n - z_m| / 2` and `A_m |H_{t0} h_m(w)| <= beta(t0) e^{-beta(t0)|w|^2}`.
pub fn heat_ceiling(family: &BumpFamily, t: f64) -> f64 {
    let (_, beta) = alpha_beta(t);
    let bumps = &family.bumps;
    let worst = bumps
        .iter()
        .enumerate()
        .map(|(n, b)| {
            let mut acc = KahanSum::new();
            acc.add(1.0);
            for (m, c) in bumps.iter().enumerate() {
                if m != n {
                    acc.add((-beta * (b.center - c.center).norm_sqr() / 4.0).exp());
                }
            }
            acc.value()
        })
        .fold(0.0, f64::max);
    beta * worst
}

/// `pi^-1 integral exp(-|z - a|^2) g(z)^2 dA` in closed form: each product
/// of two bumps and the window is one Gaussian `exp(-3|z - c|^2 - R)`
/// against two plane waves.
pub fn coherent_state_norm_sq(family: &BumpFamily, a: Complex64) -> f64 {
    let mut acc = KahanSum::new();
    for p in &family.bumps {
        for q in &family.bumps {
            let c = (p.center + q.center + a) / 3.0;
            let r = p.center.norm_sqr() + q.center.norm_sqr() + a.norm_sqr() - 3.0 * c.norm_sqr();
            let (kp, kq) = (wave_vector(p.xi), wave_vector(q.xi));
            let phase_p = kp.0 * p.center.re + kp.1 * p.center.im;
            let phase_q = kq.0 * q.center.re + kq.1 * q.center.im;
            let mut pair = 0.0;
            for (sign, offset) in [(1.0, phase_p + phase_q), (-1.0, phase_p - phase_q)] {
                let k = (kp.0 + sign * kq.0, kp.1 + sign * kq.1);
                let k_sq = k.0 * k.0 + k.1 * k.1;
                // integral cos(k.z - offset) e^{-3|z-c|^2} dA = (pi/3) e^{-|k|^2/12} cos(k.c - offset)
                pair += 0.5 * (PI / 3.0) * (-k_sq / 12.0).exp() * (k.0 * c.re + k.1 * c.im - offset).cos();
            }
            acc.add((p.amplitude.ln_abs() + q.amplitude.ln_abs() - r).exp() * pair);
        }
    }
    acc.value() / PI
}

pub fn verify_irreversibility(
    family: &BumpFamily,
    grid: &PlanarGrid,
    opts: &PlacementOptions,
) -> Result<IrreversibilityReport, IrreversibilityError> {
    grid.validate()?;
    let times = family.times;
    let rows = grid.rows();
    let row_sups: Vec<f64> = crate::par_map(&rows, |&y| {
        let mut sup = 0.0f64;
        for i in 0..grid.nx {
            sup = sup.max(family.heat(times.t0, Complex64::new(grid.x(i), y)).abs());
        }
        Ok::<_, IrreversibilityError>(sup)
    })?;
    let grid_sup_t0 = row_sups.into_iter().fold(0.0, f64::max);
    let ceiling_t0 = heat_ceiling(family, times.t0);

    let (alpha0, _) = alpha_beta(times.t0);
    let (alpha1, beta1) = alpha_beta(times.t1);
    let t1_values: Vec<CenterValue> = family
        .bumps
        .iter()
        .enumerate()
        .map(|(i, b)| CenterValue {
            n: i + 1,
            value: family.heat(times.t1, b.center),
            floor: beta1 * ((alpha0 - alpha1) * b.xi.norm_sqr()).exp() - 1.0,
        })
        .collect();
    let growth_ratio = match (t1_values.last(), ceiling_t0 > 0.0) {
        (Some(v), true) => v.value / ceiling_t0,
        _ => 0.0,
    };
    let constraints = check_constraints(family, opts);

    let mut probes = vec![Complex64::new(0.0, 0.0)];
    if let (Some(first), Some(last)) = (family.bumps.first(), family.bumps.last()) {
        probes.push(first.center);
        probes.push(last.center);
    }
    let admissibility: Vec<AdmissibilitySample> = probes
        .into_iter()
        .map(|center| AdmissibilitySample {
            center,
            value: coherent_state_norm_sq(family, center),
        })
        .collect();

    let mut failures = Vec::new();
    if grid_sup_t0 > ceiling_t0 * (1.0 + 1e-12) {
        failures.push("t0 grid sup exceeds the analytic ceiling".to_string());
    }
    if t1_values.iter().any(|v| v.value - v.floor < -1e-9) {
        failures.push("t1 value below its floor".to_string());
    }
    if !constraints.all_ok() {
        failures.push("placement constraints".to_string());
    }
    if admissibility.iter().any(|s| !(s.value.is_finite() && s.value >= 0.0)) {
        failures.push("coherent-state admissibility".to_string());
    }
    Ok(IrreversibilityReport {
        family: family.clone(),
        grid: *grid,
        grid_sup_t0,
        ceiling_t0,
        t1_values,
        growth_ratio,
        constraints,
        admissibility,
        passed: failures.is_empty(),
        failures,
    })
}
