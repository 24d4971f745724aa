//! Adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Panels are refined globally, largest error first. When refinement stalls,
//! each endpoint is probed with dyadic shells to tell an integrable endpoint
//! singularity from a divergent one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::KahanSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureStatus {
    Converged,
    Divergent,
    MaxDepth,
}

/// Outcome of an adaptive integration. `error_estimate` is absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub status: QuadratureStatus,
}

impl QuadratureResult {
    pub fn is_converged(&self) -> bool {
        self.status == QuadratureStatus::Converged
    }
}

/// Convergence is declared when the summed error estimate is at most
/// `max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth of any panel.
    pub max_depth: u32,
    pub max_panels: usize,
    /// Number of dyadic shells used by the endpoint divergence probe; 0 disables it.
    pub probe_levels: u32,
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    /// Purely relative tolerance; used where integrands span many magnitudes.
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 60,
            max_panels: 20_000,
            probe_levels: 48,
        }
    }
}

struct PanelRule {
    value: f64,
    error: f64,
    finite: bool,
}

fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> PanelRule {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    PanelRule {
        value,
        error,
        finite: value.is_finite() && error.is_finite(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on error, ties broken by position for determinism
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[lo, hi]` with absolute and relative tolerance `tol`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> QuadratureResult {
    integrate_interval_with(&f, lo, hi, &QuadOptions::with_tol(tol))
}

pub fn integrate_interval_with<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    opts: &QuadOptions,
) -> QuadratureResult {
    integrate_dyn(f, lo, hi, opts)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, opts: &QuadOptions) -> QuadratureResult {
    if lo == hi {
        return QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            status: QuadratureStatus::Converged,
        };
    }
    if lo > hi {
        let mut r = integrate_dyn(f, hi, lo, opts);
        r.value = -r.value;
        return r;
    }

    let first = gk15(f, lo, hi);
    if !first.finite {
        return divergent(first.value);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a: lo,
        b: hi,
        depth: 0,
        value: first.value,
        error: first.error,
    });
    let mut frozen: Vec<Panel> = Vec::new();
    let mut value = first.value;
    let mut error = first.error;
    let mut panels = 1usize;
    let mut since_resum = 0u32;

    let exact_totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut v = KahanSum::new();
        let mut e = KahanSum::new();
        // fixed order: sort by position
        let mut all: Vec<&Panel> = heap.iter().chain(frozen.iter()).collect();
        all.sort_by(|p, q| p.a.total_cmp(&q.a));
        for p in all {
            v.add(p.value);
            e.add(p.error);
        }
        (v.value(), e.value())
    };

    loop {
        if error <= opts.target(value) {
            let (v, e) = exact_totals(&heap, &frozen);
            value = v;
            error = e;
            if error <= opts.target(value) {
                return QuadratureResult {
                    value,
                    error_estimate: error,
                    status: QuadratureStatus::Converged,
                };
            }
        }
        if panels >= opts.max_panels {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if worst.depth >= opts.max_depth {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        if !left.finite || !right.finite {
            return divergent(f64::INFINITY);
        }
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        for (a, b, rule) in [(worst.a, mid, left), (mid, worst.b, right)] {
            heap.push(Panel {
                a,
                b,
                depth: worst.depth + 1,
                value: rule.value,
                error: rule.error,
            });
        }
        panels += 1;
        since_resum += 1;
        if since_resum == 32 {
            let (v, e) = exact_totals(&heap, &frozen);
            value = v;
            error = e;
            since_resum = 0;
        }
    }

    let (value, error) = exact_totals(&heap, &frozen);
    if opts.probe_levels > 0
        && (endpoint_diverges(f, lo, hi, true, opts) || endpoint_diverges(f, lo, hi, false, opts))
    {
        return QuadratureResult {
            value,
            error_estimate: f64::INFINITY,
            status: QuadratureStatus::Divergent,
        };
    }
    QuadratureResult {
        value,
        error_estimate: error,
        status: QuadratureStatus::MaxDepth,
    }
}

fn divergent(value: f64) -> QuadratureResult {
    QuadratureResult {
        value,
        error_estimate: f64::INFINITY,
        status: QuadratureStatus::Divergent,
    }
}

/// Number of successive refinements a divergence certificate must span.
const CERTIFICATE_WINDOW: usize = 8;
/// Growth the near-singularity sum must show over the window.
const CERTIFICATE_GROWTH: f64 = 1.5;

/// Dyadic-shell probe at one endpoint.
///
/// Shell k covers distances `[w 2^-(k+1), w 2^-k]` from the endpoint. The
/// endpoint is declared divergent when the deepest shells stop decaying for
/// `CERTIFICATE_WINDOW` successive refinements and their running sum grows by
/// at least `CERTIFICATE_GROWTH`.
fn endpoint_diverges(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, at_lo: bool, opts: &QuadOptions) -> bool {
    let width = hi - lo;
    let anchor = if at_lo { lo } else { hi };
    let resolution = 1e3 * f64::EPSILON * anchor.abs();
    let mut levels = opts.probe_levels as i32;
    while levels > 0 && width * 0.5f64.powi(levels) <= resolution {
        levels -= 1;
    }
    let window = CERTIFICATE_WINDOW + 1;
    if (levels as usize) < window {
        return false;
    }
    let shell_opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-6,
        max_depth: 24,
        max_panels: 200,
        probe_levels: 0,
    };
    let abs_f = |x: f64| f(x).abs();
    let mut shells = Vec::with_capacity(window);
    for k in (levels as usize - window)..levels as usize {
        let near = width * 0.5f64.powi(k as i32 + 1);
        let far = width * 0.5f64.powi(k as i32);
        let (a, b) = if at_lo {
            (lo + near, lo + far)
        } else {
            (hi - far, hi - near)
        };
        let s = integrate_dyn(&abs_f, a, b, &shell_opts).value;
        if !s.is_finite() {
            return true;
        }
        shells.push(s);
    }
    if shells[0] <= 0.0 {
        return false;
    }
    let non_decaying = shells.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-3));
    let growth = shells.iter().sum::<f64>() / shells[0];
    non_decaying && growth >= CERTIFICATE_GROWTH
}

/// Certified envelope of `|f|` on `[onset, inf)`, used to truncate
/// semi-infinite integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailCertificate {
    /// `|f(r)| <= exp(ln_amplitude) * r^power * exp(-(r - center)^2 / scale)`.
    Gaussian {
        onset: f64,
        ln_amplitude: f64,
        power: f64,
        center: f64,
        scale: f64,
    },
    /// `|f(r)| <= exp(ln_amplitude) * exp(-(r - onset) / scale)`.
    Exponential {
        onset: f64,
        ln_amplitude: f64,
        scale: f64,
    },
}

impl TailCertificate {
    /// `|f(r)| <= amplitude * exp(-(r - center)^2 / decay_scale)` beyond `center`.
    pub fn gaussian(amplitude: f64, center: f64, decay_scale: f64) -> Self {
        TailCertificate::Gaussian {
            onset: center,
            ln_amplitude: amplitude.ln(),
            power: 0.0,
            center,
            scale: decay_scale,
        }
    }

    /// First truncation point where `bound_beyond` applies.
    fn first_cut(&self) -> f64 {
        match *self {
            TailCertificate::Gaussian {
                onset,
                power,
                center,
                scale,
                ..
            } => {
                let p = power.max(0.0);
                let mode = 0.5 * (center + (center * center + 2.0 * scale * p).sqrt());
                onset.max(mode + scale.sqrt()).max(f64::MIN_POSITIVE)
            }
            TailCertificate::Exponential { onset, .. } => onset,
        }
    }

    fn step(&self) -> f64 {
        match *self {
            TailCertificate::Gaussian { scale, .. } => 2.0 * scale.sqrt(),
            TailCertificate::Exponential { scale, .. } => 5.0 * scale,
        }
    }

    /// Upper bound on `integral_{cut}^{inf} |f|`, or `None` when `cut` is not
    /// inside the region where the bound is proven.
    pub fn bound_beyond(&self, cut: f64) -> Option<f64> {
        match *self {
            TailCertificate::Gaussian {
                onset,
                ln_amplitude,
                power,
                center,
                scale,
            } => {
                if cut < onset || cut <= center || cut <= 0.0 {
                    return None;
                }
                // Tangent-line bound of the log-concave envelope at `cut`.
                let slope = 2.0 * (cut - center) / scale - power.max(0.0) / cut;
                if slope <= 0.0 {
                    return None;
                }
                let ln_env = ln_amplitude + power * cut.ln() - (cut - center).powi(2) / scale;
                Some(ln_env.exp() / slope)
            }
            TailCertificate::Exponential {
                onset,
                ln_amplitude,
                scale,
            } => {
                if cut < onset {
                    return None;
                }
                Some((ln_amplitude - (cut - onset) / scale).exp() * scale)
            }
        }
    }
}

/// Integrates over `[lo, inf)` using the default options with tolerance `tol`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    tail: &TailCertificate,
    tol: f64,
) -> QuadratureResult {
    integrate_semi_infinite_with(&f, lo, tail, &QuadOptions::with_tol(tol))
}

/// Truncates where the certified tail drops below a tenth of the target
/// tolerance, integrates the finite part adaptively and adds the tail bound
/// to the error estimate.
pub fn integrate_semi_infinite_with<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    tail: &TailCertificate,
    opts: &QuadOptions,
) -> QuadratureResult {
    let mut cut = tail.first_cut().max(lo);
    let mut total = integrate_interval_with(f, lo, cut, opts);
    if !total.is_converged() {
        return total;
    }
    for _ in 0..400 {
        let target = 0.1 * opts.target(total.value);
        match tail.bound_beyond(cut) {
            Some(bound) if bound <= target => {
                total.error_estimate += bound;
                return total;
            }
            _ => {}
        }
        let next = cut + tail.step().max(1e-3 * (cut - lo));
        let piece = integrate_interval_with(f, cut, next, opts);
        if !piece.is_converged() {
            return QuadratureResult {
                value: total.value + piece.value,
                error_estimate: f64::INFINITY,
                status: piece.status,
            };
        }
        total.value += piece.value;
        total.error_estimate += piece.error_estimate;
        cut = next;
    }
    QuadratureResult {
        status: QuadratureStatus::MaxDepth,
        error_estimate: f64::INFINITY,
        ..total
    }
}
