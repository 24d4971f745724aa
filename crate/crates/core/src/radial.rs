//! Integrals `integral_0^inf g(r)^p w(r) dr` of a radial symbol against the
//! positive weights used by the heat transform, the Gaussian kernel tests
//! and the monomial (Toeplitz eigenvalue) pairing.

use crate::numerics::{
    integrate_interval_with, integrate_semi_infinite_with, ln_bessel_i0_scaled, log_gamma, KahanSum,
    NumericError, QuadOptions, TailCertificate,
};
use crate::symbols::{RadialPiece, RadialSymbol, Segment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RadialWeight {
    /// `(1/2t) r exp(-(x-r)^2/4t) S(xr/2t)` with `S(u) = e^-u I0(u)`; the
    /// polar reduction of the heat kernel centered at `|z| = x`.
    Heat { t: f64, x: f64 },
    /// `(2/m!) r^(2m+1) exp(-r^2)`, whose integral against `g` is the `m`-th
    /// Toeplitz eigenvalue.
    Monomial { m: u64, ln_norm: f64 },
}

impl RadialWeight {
    pub fn heat(t: f64, x: f64) -> Self {
        RadialWeight::Heat { t, x }
    }

    pub fn monomial(m: u64) -> Self {
        let ln_norm = std::f64::consts::LN_2 - log_gamma(m as f64 + 1.0).expect("m + 1 >= 1");
        RadialWeight::Monomial { m, ln_norm }
    }

    fn ln_weight(&self, r: f64) -> f64 {
        match *self {
            RadialWeight::Heat { t, x } => {
                let d = x - r;
                -(2.0 * t).ln() + r.ln() - d * d / (4.0 * t) + ln_bessel_i0_scaled(x * r / (2.0 * t))
            }
            RadialWeight::Monomial { m, ln_norm } => ln_norm + (2.0 * m as f64 + 1.0) * r.ln() - r * r,
        }
    }

    /// Where the weight concentrates: (center, width).
    fn bulk(&self) -> (f64, f64) {
        match *self {
            RadialWeight::Heat { t, x } => (x.max((2.0 * t).sqrt()), (4.0 * t).sqrt()),
            RadialWeight::Monomial { m, .. } => ((m as f64 + 0.5).sqrt(), 1.0),
        }
    }

    /// Envelope `w(r) <= exp(ln_c) r^beta exp(-(r - center)^2 / v)` for `r >= center`.
    fn envelope(&self) -> (f64, f64, f64, f64) {
        match *self {
            RadialWeight::Heat { t, x } => (-(2.0 * t).ln(), 1.0, x, 4.0 * t),
            RadialWeight::Monomial { m, ln_norm } => (ln_norm, 2.0 * m as f64 + 1.0, 0.0, 1.0),
        }
    }

    /// `w(r) ~ r^origin_exponent` as `r -> 0`.
    fn origin_exponent(&self) -> f64 {
        match *self {
            RadialWeight::Heat { .. } => 1.0,
            RadialWeight::Monomial { m, .. } => 2.0 * m as f64 + 1.0,
        }
    }
}

/// Exponent of `g^p w` at the origin, from power pieces active there.
pub(crate) fn origin_exponent(sym: &RadialSymbol, p: u32, weight: &RadialWeight) -> Option<f64> {
    let seg = sym.segments().first().filter(|s| s.lo == 0.0)?;
    let alpha = seg
        .active
        .iter()
        .filter_map(|&i| match sym.pieces()[i] {
            RadialPiece::Power { exponent, .. } => Some(exponent),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    Some(f64::from(p) * alpha + weight.origin_exponent())
}

enum Job<'a> {
    /// Offsets `[u0, u1]` inside a segment.
    Panel { seg: &'a Segment, u0: f64, u1: f64 },
    /// `[0, s]` integrated after `r = s v^k` to remove an `r^gamma` singularity.
    Origin { seg: &'a Segment, s: f64, k: f64 },
    /// `[start, inf)` with a certified Gaussian envelope.
    Tail {
        seg: &'a Segment,
        start: f64,
        cert: TailCertificate,
    },
}

/// `integral_0^inf g(r)^p w(r) dr` with relative tolerance `rel_tol`.
///
/// Divergence at the origin or at infinity is decided analytically from
/// the power pieces; everything else is adaptive quadrature per segment.
pub(crate) fn radial_integral(
    sym: &RadialSymbol,
    p: u32,
    weight: &RadialWeight,
    rel_tol: f64,
) -> Result<f64, NumericError> {
    let origin_gamma = origin_exponent(sym, p, weight);
    if let Some(gamma) = origin_gamma {
        if gamma <= -1.0 {
            return Err(NumericError::Divergent(format!(
                "integrand behaves like r^{gamma} at the origin"
            )));
        }
    }

    let (center, width) = weight.bulk();
    let marks = [-8.0, -3.0, 0.0, 3.0, 8.0].map(|k| center + k * width);
    let mut jobs: Vec<Job> = Vec::new();
    for seg in sym.segments() {
        let mut lo = seg.lo;
        if seg.lo == 0.0 {
            if let Some(gamma) = origin_gamma.filter(|g| *g < 0.0) {
                let s = seg.hi.min(1.0);
                jobs.push(Job::Origin {
                    seg,
                    s,
                    k: 1.0 / (gamma + 1.0),
                });
                lo = s;
                if lo >= seg.hi {
                    continue;
                }
            }
        }
        let finite_hi = if seg.is_unbounded() {
            marks[4].max(lo).max(1.0)
        } else {
            seg.hi
        };
        let mut cuts: Vec<f64> = vec![lo];
        cuts.extend(marks.iter().copied().filter(|&m| m > lo && m < finite_hi));
        cuts.push(finite_hi);
        for w in cuts.windows(2) {
            let (u0, u1) = if w[0] == seg.lo && w[1] == seg.hi {
                (seg.lo_offset, seg.hi_offset)
            } else {
                (
                    if w[0] == seg.lo { seg.lo_offset } else { w[0] - seg.base },
                    if w[1] == seg.hi { seg.hi_offset } else { w[1] - seg.base },
                )
            };
            if u1 > u0 {
                jobs.push(Job::Panel { seg, u0, u1 });
            }
        }
        if seg.is_unbounded() {
            jobs.push(Job::Tail {
                seg,
                start: finite_hi,
                cert: tail_certificate(sym, seg, p, weight, finite_hi)?,
            });
        }
    }

    let integrand = |seg: &Segment, r: f64, u: f64| -> f64 {
        let lw = weight.ln_weight(r);
        if lw == f64::NEG_INFINITY {
            return 0.0;
        }
        let g = sym.eval_segment(seg, u);
        if g == 0.0 {
            return 0.0;
        }
        (lw + f64::from(p) * g.ln()).exp()
    };

    // Integrate the heaviest pieces first so the absolute floor used for the
    // light ones is meaningful.
    let pilots: Vec<f64> = jobs.iter().map(|job| pilot(job, &integrand)).collect();
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&i, &j| pilots[j].total_cmp(&pilots[i]).then(i.cmp(&j)));

    let mut values = vec![0.0; jobs.len()];
    let mut running = 0.0;
    for &i in &order {
        let opts = QuadOptions {
            abs_tol: (1e-3 * rel_tol * running).max(1e-300),
            rel_tol,
            ..QuadOptions::default()
        };
        let result = match &jobs[i] {
            Job::Panel { seg, u0, u1 } => {
                integrate_interval_with(&|u: f64| integrand(seg, seg.base + u, u), *u0, *u1, &opts)
            }
            Job::Origin { seg, s, k } => {
                let (s, k) = (*s, *k);
                let f = |v: f64| {
                    let r = s * v.powf(k);
                    if r <= 0.0 {
                        return 0.0;
                    }
                    integrand(seg, r, r - seg.base) * s * k * v.powf(k - 1.0)
                };
                integrate_interval_with(&f, 0.0, 1.0, &opts)
            }
            Job::Tail { seg, start, cert } => integrate_semi_infinite_with(
                &|r: f64| integrand(seg, r, r - seg.base),
                *start,
                cert,
                &opts,
            ),
        };
        let v = result.into_result("radial integral")?;
        values[i] = v;
        running += v;
    }
    let mut total = KahanSum::new();
    values.into_iter().for_each(|v| total.add(v));
    Ok(total.value())
}

fn tail_certificate(
    sym: &RadialSymbol,
    seg: &Segment,
    p: u32,
    weight: &RadialWeight,
    start: f64,
) -> Result<TailCertificate, NumericError> {
    let mut alpha_max = f64::NEG_INFINITY;
    for &i in &seg.active {
        if let RadialPiece::Power { exponent, .. } = sym.pieces()[i] {
            alpha_max = alpha_max.max(exponent);
        }
    }
    let count = seg.active.len() as f64;
    let (ln_c, beta, center, v) = weight.envelope();
    // For r >= 1 every active power is at most r^alpha_max.
    Ok(TailCertificate::Gaussian {
        onset: start.max(1.0).max(center),
        ln_amplitude: ln_c + f64::from(p) * count.ln(),
        power: beta + f64::from(p) * alpha_max,
        center,
        scale: v,
    })
}

fn pilot(job: &Job, integrand: &dyn Fn(&Segment, f64, f64) -> f64) -> f64 {
    const FRACTIONS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
    match *job {
        Job::Panel { seg, u0, u1 } => {
            let peak = FRACTIONS
                .iter()
                .map(|f| {
                    let u = u0 + f * (u1 - u0);
                    integrand(seg, seg.base + u, u)
                })
                .fold(0.0, f64::max);
            peak * (u1 - u0)
        }
        Job::Origin { seg, s, .. } => FRACTIONS
            .iter()
            .map(|f| integrand(seg, f * s, f * s - seg.base) * s)
            .fold(0.0, f64::max),
        Job::Tail { seg, start, .. } => integrand(seg, start, start - seg.base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_interval;
    use crate::symbols::{build_annuli_symbol, build_power_symbol, AnnuliConfig};

    #[test]
    fn heat_of_constant_is_one() {
        let one = build_power_symbol(0.0, None).unwrap();
        for &(t, x) in &[(0.25, 0.0), (1.0, 3.0), (0.03125, 17.5), (2.0, 100.0)] {
            let v = radial_integral(&one, 1, &RadialWeight::heat(t, x), 1e-12).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "t={t} x={x} v={v}");
        }
    }

    #[test]
    fn origin_singularity_is_integrated() {
        // |z|^-1 at t = 1/4, x = 0: integral 2 e^{-r^2} dr = sqrt(pi)
        let inv = build_power_symbol(-1.0, None).unwrap();
        let v = radial_integral(&inv, 1, &RadialWeight::heat(0.25, 0.0), 1e-12).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10, "{v}");
        assert!(matches!(
            radial_integral(&inv, 2, &RadialWeight::heat(0.25, 0.0), 1e-10),
            Err(NumericError::Divergent(_))
        ));
    }

    #[test]
    fn monomial_weight_moments() {
        // lambda_m of r^alpha is Gamma(m + 1 + alpha/2) / m!
        let sym = build_power_symbol(0.7, None).unwrap();
        for m in [0u64, 1, 5, 40, 300] {
            let v = radial_integral(&sym, 1, &RadialWeight::monomial(m), 1e-12).unwrap();
            let mf = m as f64;
            let exact = (log_gamma(mf + 1.35).unwrap() - log_gamma(mf + 1.0).unwrap()).exp();
            assert!((v / exact - 1.0).abs() < 1e-9, "m={m} {v} {exact}");
        }
    }

    /// A thin annulus contributes d |A| times the weight at its center.
    #[test]
    fn thin_annulus_uses_exact_width() {
        let sym = build_annuli_symbol(AnnuliConfig::new(400, 400)).unwrap();
        let a = AnnuliConfig::a(400);
        let w = RadialWeight::heat(0.25, a);
        let v = radial_integral(&sym, 1, &w, 1e-12).unwrap();
        let expected = AnnuliConfig::d(400) * 2.0 * AnnuliConfig::rho(400) * w.ln_weight(a).exp();
        assert!((v / expected - 1.0).abs() < 1e-9, "{v} {expected}");
    }

    #[test]
    fn matches_plain_quadrature_on_disk() {
        let sym = build_power_symbol(-0.5, Some((0.0, 3.0))).unwrap();
        let w = RadialWeight::heat(0.125, 1.3);
        let v = radial_integral(&sym, 1, &w, 1e-12).unwrap();
        let oracle = integrate_interval(|r: f64| r.powf(-0.5) * w.ln_weight(r).exp(), 0.0, 3.0, 1e-11);
        assert!((v - oracle.value).abs() < 1e-8, "{v} {}", oracle.value);
    }
}
