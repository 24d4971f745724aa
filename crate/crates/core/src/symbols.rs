//! Radial symbols: power laws, annulus indicators, smooth annulus bumps and
//! the ultrathin-annuli family, with exact area accounting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{compensated_sum, integrate_interval_with, KahanSum, NumericError, QuadOptions};

/// Largest admissible sector constant `c`.
pub const SECTOR_CONSTANT_MAX: f64 = 1e-3;
pub const DEFAULT_SECTOR_CONSTANT: f64 = 1e-3;

/// `integral_{-1}^{1} exp(-1/(1-u^2)) du`, the standard bump, computed once by
/// adaptive quadrature at 30 digits.
pub const STANDARD_BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;
/// `integral_{-1}^{1} smooth_bump_profile(u) du = e * STANDARD_BUMP_INTEGRAL`.
pub const BUMP_PROFILE_INTEGRAL: f64 = 1.206_900_322_437_876_2;
/// `integral_{-1}^{1} smooth_bump_profile(u)^2 du`.
pub const BUMP_PROFILE_SQUARED_INTEGRAL: f64 = 0.983_380_812_912_726_5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("annulus supports overlap: {first} and {second} (gap {gap:e})")]
    DisjointnessViolation { first: String, second: String, gap: f64 },
    #[error("invalid piece: {0}")]
    InvalidPiece(String),
    #[error("invalid annuli configuration: {0}")]
    InvalidConfig(String),
    #[error("symbol has more than one annuli family")]
    MultipleFamilies,
}

/// Smooth compactly supported profile `exp(1 - 1/(1 - u^2))` on `|u| < 1`.
/// Peak value 1 at `u = 0`.
pub fn smooth_bump_profile(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// One radial building block; every variant is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialPiece {
    /// `r^exponent` on `support` (`None` means `[0, inf)`), zero elsewhere.
    Power {
        exponent: f64,
        support: Option<(f64, f64)>,
    },
    /// `amplitude * 1{ |r - center_radius| <= half_width }`.
    AnnulusIndicator {
        center_radius: f64,
        half_width: f64,
        amplitude: f64,
    },
    /// `amplitude * smooth_bump_profile((r - center_radius) / half_width)`.
    SmoothAnnulusBump {
        center_radius: f64,
        half_width: f64,
        amplitude: f64,
    },
}

impl RadialPiece {
    pub fn power(exponent: f64) -> Self {
        RadialPiece::Power {
            exponent,
            support: None,
        }
    }

    pub fn power_on(exponent: f64, lo: f64, hi: f64) -> Self {
        RadialPiece::Power {
            exponent,
            support: Some((lo, hi)),
        }
    }

    /// `amplitude` times the indicator of the disk of `radius`.
    pub fn disk(radius: f64, amplitude: f64) -> Self {
        RadialPiece::AnnulusIndicator {
            center_radius: 0.5 * radius,
            half_width: 0.5 * radius,
            amplitude,
        }
    }

    fn validate(&self) -> Result<(), SymbolError> {
        match *self {
            RadialPiece::Power { exponent, support } => {
                if !exponent.is_finite() {
                    return Err(SymbolError::InvalidPiece(format!("exponent {exponent}")));
                }
                if let Some((lo, hi)) = support {
                    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
                        return Err(SymbolError::InvalidPiece(format!(
                            "power support [{lo}, {hi}] must satisfy 0 <= lo < hi"
                        )));
                    }
                }
                Ok(())
            }
            RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                amplitude,
            }
            | RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            } => {
                let finite = center_radius.is_finite() && half_width.is_finite() && amplitude.is_finite();
                if !finite || half_width <= 0.0 || amplitude < 0.0 || center_radius < half_width {
                    return Err(SymbolError::InvalidPiece(format!(
                        "annulus a={center_radius}, rho={half_width}, d={amplitude} needs rho > 0, d >= 0, a >= rho"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Closed support `[lo, hi]`; `hi` is infinite for unbounded powers.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            RadialPiece::Power { support, .. } => support.unwrap_or((0.0, f64::INFINITY)),
            RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                ..
            }
            | RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                ..
            } => (center_radius - half_width, center_radius + half_width),
        }
    }

    pub fn is_annulus(&self) -> bool {
        !matches!(self, RadialPiece::Power { .. })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if r < lo || r > hi {
            return 0.0;
        }
        match *self {
            RadialPiece::Power { exponent, .. } => power(r, exponent),
            RadialPiece::AnnulusIndicator { amplitude, .. } => amplitude,
            RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            } => amplitude * smooth_bump_profile((r - center_radius) / half_width),
        }
    }

    /// Value at `r = base + offset`, for a point already known to be inside
    /// the support. Annulus profiles use the offset directly when `base` is
    /// the annulus center so thin annuli keep full precision.
    fn eval_inside(&self, base: f64, offset: f64) -> f64 {
        match *self {
            RadialPiece::Power { exponent, .. } => power(base + offset, exponent),
            RadialPiece::AnnulusIndicator { amplitude, .. } => amplitude,
            RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            } => {
                let local = if base == center_radius {
                    offset
                } else {
                    base + offset - center_radius
                };
                amplitude * smooth_bump_profile(local / half_width)
            }
        }
    }

    /// `sup |piece|`, infinite for unbounded pieces.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            RadialPiece::Power { exponent, support } => match support {
                _ if exponent == 0.0 => 1.0,
                None => f64::INFINITY,
                Some((lo, hi)) => {
                    if exponent > 0.0 {
                        hi.powf(exponent)
                    } else if lo > 0.0 {
                        lo.powf(exponent)
                    } else {
                        f64::INFINITY
                    }
                }
            },
            RadialPiece::AnnulusIndicator { amplitude, .. } | RadialPiece::SmoothAnnulusBump { amplitude, .. } => {
                amplitude
            }
        }
    }

    /// `integral |piece| dA`, analytic.
    pub fn l1_mass(&self) -> Result<f64, NumericError> {
        match *self {
            RadialPiece::Power { exponent, .. } => {
                let (lo, hi) = self.support();
                Ok(2.0 * PI * power_moment(exponent + 1.0, lo, hi)?)
            }
            RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                amplitude,
            } => Ok(amplitude * 4.0 * PI * center_radius * half_width),
            RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            } => Ok(amplitude * 2.0 * PI * center_radius * half_width * BUMP_PROFILE_INTEGRAL),
        }
    }

    fn label(&self) -> String {
        match *self {
            RadialPiece::Power { exponent, support } => format!("power(alpha={exponent}, support={support:?})"),
            RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                ..
            } => format!("annulus(a={center_radius}, rho={half_width:e})"),
            RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                ..
            } => format!("bump(a={center_radius}, rho={half_width:e})"),
        }
    }
}

#[inline]
fn power(r: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        r.powf(exponent)
    }
}

/// `integral_lo^hi r^beta dr` with analytic divergence detection.
pub(crate) fn power_moment(beta: f64, lo: f64, hi: f64) -> Result<f64, NumericError> {
    if lo == 0.0 && beta <= -1.0 {
        return Err(NumericError::Divergent(format!(
            "r^{beta} is not integrable at the origin"
        )));
    }
    if hi.is_infinite() && beta >= -1.0 {
        return Err(NumericError::Divergent(format!(
            "r^{beta} is not integrable at infinity"
        )));
    }
    if beta == -1.0 {
        return Ok((hi / lo).ln());
    }
    let e = beta + 1.0;
    let upper = if hi.is_infinite() { 0.0 } else { hi.powf(e) };
    let lower = if lo == 0.0 { 0.0 } else { lo.powf(e) };
    Ok((upper - lower) / e)
}

/// Parameters of the ultrathin-annuli family
/// `g = sum_{n >= n_min} d_n 1_{A_n}`, truncated at `n_max` for numerics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnuliConfig {
    pub n_min: u32,
    pub n_max: u32,
    /// Sector constant `c` of the test sectors, in `(0, 1e-3]`.
    pub c: f64,
    pub smooth: bool,
}

impl AnnuliConfig {
    pub fn new(n_min: u32, n_max: u32) -> Self {
        Self {
            n_min,
            n_max,
            c: DEFAULT_SECTOR_CONSTANT,
            smooth: false,
        }
    }

    pub fn smooth(self, smooth: bool) -> Self {
        Self { smooth, ..self }
    }

    pub fn validate(&self) -> Result<(), SymbolError> {
        if self.n_min < 2 {
            return Err(SymbolError::InvalidConfig(format!("n_min = {} < 2", self.n_min)));
        }
        if self.n_max < self.n_min {
            return Err(SymbolError::InvalidConfig(format!(
                "n_max = {} < n_min = {}",
                self.n_max, self.n_min
            )));
        }
        if !(self.c > 0.0 && self.c <= SECTOR_CONSTANT_MAX) {
            return Err(SymbolError::InvalidConfig(format!(
                "sector constant c = {} outside (0, 1e-3]",
                self.c
            )));
        }
        Ok(())
    }

    /// Annulus center radius `sqrt(n)`.
    pub fn a(n: u32) -> f64 {
        f64::from(n).sqrt()
    }

    /// Annulus half width `n^(-9/2)`.
    pub fn rho(n: u32) -> f64 {
        f64::from(n).powf(-4.5)
    }

    /// Amplitude `n^(5/2) ln n`.
    pub fn d(n: u32) -> f64 {
        let n = f64::from(n);
        n.powf(2.5) * n.ln()
    }

    /// Sector half angle `c / n`.
    pub fn phi(&self, n: u32) -> f64 {
        self.c / f64::from(n)
    }

    /// `|A_n| = 4 pi a_n rho_n = 4 pi n^-4`.
    pub fn annulus_area(n: u32) -> f64 {
        4.0 * PI * Self::a(n) * Self::rho(n)
    }

    /// Gap between annulus `n` and `n + 1`.
    pub fn gap(n: u32) -> f64 {
        (Self::a(n + 1) - Self::rho(n + 1)) - (Self::a(n) + Self::rho(n))
    }

    /// Same family, extended so that every annulus within `margin` of
    /// `radius` is held in memory.
    pub fn covering(&self, radius: f64, margin: f64) -> Self {
        let needed = ((radius + margin).powi(2)).ceil() as u32;
        Self {
            n_max: self.n_max.max(needed),
            ..*self
        }
    }

    /// `integral psi_n dA / |A_n|`: 1 for indicators, half the profile
    /// integral for smooth bumps.
    pub fn mass_factor(&self) -> f64 {
        if self.smooth {
            0.5 * BUMP_PROFILE_INTEGRAL
        } else {
            1.0
        }
    }

    pub fn piece(&self, n: u32) -> RadialPiece {
        let (center_radius, half_width, amplitude) = (Self::a(n), Self::rho(n), Self::d(n));
        if self.smooth {
            RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            }
        } else {
            RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                amplitude,
            }
        }
    }

    /// Upper bound on `sum_{n > n_max} d_n |A_n|` (times the mass factor),
    /// from `integral_N^inf 4 pi ln x x^(-3/2) dx = 8 pi (ln N + 2) / sqrt N`,
    /// valid because the summand decreases for `n >= 2`.
    pub fn l1_tail_bound(&self) -> f64 {
        let n = f64::from(self.n_max);
        self.mass_factor() * 8.0 * PI * (n.ln() + 2.0) / n.sqrt()
    }
}

/// Either a single piece or an annuli family inside a symbol description.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolComponent {
    Piece(RadialPiece),
    Family(AnnuliConfig),
}

/// Interval of radii on which the set of nonzero pieces is fixed.
///
/// Points are parameterized as `r = base + offset` with
/// `offset in [lo_offset, hi_offset]`; for annulus segments `base` is the
/// annulus center so that `hi_offset - lo_offset` is exact.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub base: f64,
    pub lo_offset: f64,
    pub hi_offset: f64,
    pub active: Vec<usize>,
}

impl Segment {
    pub fn is_unbounded(&self) -> bool {
        self.hi.is_infinite()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FamilySlot {
    config: AnnuliConfig,
    start: usize,
    end: usize,
}

/// Finite sum of radial pieces. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSymbol {
    name: String,
    pieces: Vec<RadialPiece>,
    family: Option<FamilySlot>,
    segments: Vec<Segment>,
}

/// Total area mass: exact partial value plus a certified bound on the
/// truncated family tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Mass {
    pub partial: f64,
    pub tail: f64,
}

impl L1Mass {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum L2Verdict {
    Finite(f64),
    Divergent(String),
}

impl RadialSymbol {
    pub fn new(name: impl Into<String>, pieces: Vec<RadialPiece>) -> Result<Self, SymbolError> {
        Self::from_components(name, pieces.into_iter().map(SymbolComponent::Piece).collect())
    }

    pub fn from_components(name: impl Into<String>, components: Vec<SymbolComponent>) -> Result<Self, SymbolError> {
        let mut pieces = Vec::new();
        let mut family = None;
        for component in components {
            match component {
                SymbolComponent::Piece(p) => {
                    p.validate()?;
                    pieces.push(p);
                }
                SymbolComponent::Family(cfg) => {
                    if family.is_some() {
                        return Err(SymbolError::MultipleFamilies);
                    }
                    cfg.validate()?;
                    for n in cfg.n_min..cfg.n_max {
                        let gap = AnnuliConfig::gap(n);
                        if gap <= 0.0 {
                            return Err(SymbolError::DisjointnessViolation {
                                first: format!("A_{n}"),
                                second: format!("A_{}", n + 1),
                                gap,
                            });
                        }
                    }
                    let start = pieces.len();
                    pieces.extend((cfg.n_min..=cfg.n_max).map(|n| cfg.piece(n)));
                    family = Some(FamilySlot {
                        config: cfg,
                        start,
                        end: pieces.len(),
                    });
                }
            }
        }
        check_annuli_disjoint(&pieces)?;
        let segments = build_segments(&pieces);
        Ok(Self {
            name: name.into(),
            pieces,
            family,
            segments,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pieces(&self) -> &[RadialPiece] {
        &self.pieces
    }

    /// The annuli family this symbol truncates, if any.
    pub fn family(&self) -> Option<&AnnuliConfig> {
        self.family.as_ref().map(|f| &f.config)
    }

    /// Description in terms of pieces and (at most one) family.
    pub fn components(&self) -> Vec<SymbolComponent> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.pieces.len() {
            match &self.family {
                Some(slot) if slot.start == i => {
                    out.push(SymbolComponent::Family(slot.config));
                    i = slot.end;
                }
                _ => {
                    out.push(SymbolComponent::Piece(self.pieces[i].clone()));
                    i += 1;
                }
            }
        }
        out
    }

    pub(crate) fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Pointwise value `g(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        compensated_sum(self.pieces.iter().map(|p| p.eval(r)))
    }

    pub(crate) fn eval_segment(&self, segment: &Segment, offset: f64) -> f64 {
        let mut acc = KahanSum::new();
        for &i in &segment.active {
            acc.add(self.pieces[i].eval_inside(segment.base, offset));
        }
        acc.value()
    }

    /// Symbol with the pieces of both summands.
    pub fn sum(&self, other: &RadialSymbol, name: impl Into<String>) -> Result<Self, SymbolError> {
        let mut components = self.components();
        components.extend(other.components());
        Self::from_components(name, components)
    }

    /// `sup |g|` bounded by the sum of piece suprema.
    pub fn sup_abs(&self) -> f64 {
        self.pieces.iter().map(RadialPiece::sup_abs).sum()
    }

    /// `g^2` as a symbol, when it is representable: pieces must have
    /// disjoint supports and no smooth bumps.
    pub fn squared(&self) -> Option<RadialSymbol> {
        if self.segments.iter().any(|s| s.active.len() > 1) {
            return None;
        }
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            pieces.push(match *p {
                RadialPiece::Power { exponent, support } => RadialPiece::Power {
                    exponent: 2.0 * exponent,
                    support,
                },
                RadialPiece::AnnulusIndicator {
                    center_radius,
                    half_width,
                    amplitude,
                } => RadialPiece::AnnulusIndicator {
                    center_radius,
                    half_width,
                    amplitude: amplitude * amplitude,
                },
                RadialPiece::SmoothAnnulusBump { .. } => return None,
            });
        }
        RadialSymbol::new(format!("({})^2", self.name), pieces).ok()
    }

    /// Whether every piece has bounded support.
    pub fn is_compactly_supported(&self) -> bool {
        self.segments.iter().all(|s| !s.is_unbounded())
    }

    /// Largest radius where the in-memory symbol is nonzero (infinite for
    /// unbounded powers).
    pub fn outer_radius(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.hi)
    }
}

fn check_annuli_disjoint(pieces: &[RadialPiece]) -> Result<(), SymbolError> {
    let mut annuli: Vec<&RadialPiece> = pieces.iter().filter(|p| p.is_annulus()).collect();
    annuli.sort_by(|p, q| p.support().0.total_cmp(&q.support().0));
    for pair in annuli.windows(2) {
        let gap = pair[1].support().0 - pair[0].support().1;
        if gap <= 0.0 {
            return Err(SymbolError::DisjointnessViolation {
                first: pair[0].label(),
                second: pair[1].label(),
                gap,
            });
        }
    }
    Ok(())
}

fn build_segments(pieces: &[RadialPiece]) -> Vec<Segment> {
    let mut breaks: Vec<f64> = vec![0.0];
    let mut unbounded = false;
    for p in pieces {
        let (lo, hi) = p.support();
        breaks.push(lo);
        if hi.is_finite() {
            breaks.push(hi);
        } else {
            unbounded = true;
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    if unbounded {
        breaks.push(f64::INFINITY);
    }

    // Sweep over pieces sorted by their lower support end.
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&i, &j| pieces[i].support().0.total_cmp(&pieces[j].support().0));
    let mut next = 0;
    let mut open: Vec<usize> = Vec::new();
    let mut segments = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        while next < order.len() && pieces[order[next]].support().0 <= lo {
            open.push(order[next]);
            next += 1;
        }
        open.retain(|&i| pieces[i].support().1 > lo);
        let mut active: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&i| {
                let (plo, phi) = pieces[i].support();
                plo <= lo && phi >= hi
            })
            .collect();
        if active.is_empty() {
            continue;
        }
        active.sort_unstable();
        let annulus = active.iter().copied().find(|&i| pieces[i].is_annulus());
        let segment = match annulus.map(|i| &pieces[i]) {
            Some(
                RadialPiece::AnnulusIndicator {
                    center_radius,
                    half_width,
                    ..
                }
                | RadialPiece::SmoothAnnulusBump {
                    center_radius,
                    half_width,
                    ..
                },
            ) => {
                let (a, rho) = (*center_radius, *half_width);
                let lo_offset = if lo == a - rho { -rho } else { lo - a };
                let hi_offset = if hi == a + rho { rho } else { hi - a };
                Segment {
                    lo,
                    hi,
                    base: a,
                    lo_offset,
                    hi_offset,
                    active,
                }
            }
            _ => Segment {
                lo,
                hi,
                base: lo,
                lo_offset: 0.0,
                hi_offset: hi - lo,
                active,
            },
        };
        segments.push(segment);
    }
    segments
}

pub fn build_power_symbol(exponent: f64, support: Option<(f64, f64)>) -> Result<RadialSymbol, SymbolError> {
    let name = match support {
        Some((lo, hi)) => format!("|z|^{exponent} on [{lo}, {hi}]"),
        None => format!("|z|^{exponent}"),
    };
    RadialSymbol::new(name, vec![RadialPiece::Power { exponent, support }])
}

pub fn build_annuli_symbol(cfg: AnnuliConfig) -> Result<RadialSymbol, SymbolError> {
    let kind = if cfg.smooth { "smooth" } else { "indicator" };
    RadialSymbol::from_components(
        format!("annuli[{}..={}, c={}, {kind}]", cfg.n_min, cfg.n_max, cfg.c),
        vec![SymbolComponent::Family(cfg)],
    )
}

/// `integral |g| dA`, analytic per piece, plus the family tail bound.
pub fn l1_norm_area(sym: &RadialSymbol) -> Result<L1Mass, NumericError> {
    let mut partial = KahanSum::new();
    for p in sym.pieces() {
        partial.add(p.l1_mass()?);
    }
    Ok(L1Mass {
        partial: partial.value(),
        tail: sym.family().map_or(0.0, AnnuliConfig::l1_tail_bound),
    })
}

/// `integral |g|^2 dA`, or a divergence certificate.
pub fn l2_norm_area_verdict(sym: &RadialSymbol) -> L2Verdict {
    if sym.family().is_some() {
        return L2Verdict::Divergent(
            "terms d_n^2 |A_n| = 4 pi n ln^2 n are increasing and unsummable".into(),
        );
    }
    let mut total = KahanSum::new();
    for seg in sym.segments() {
        match segment_l2(sym, seg) {
            Ok(v) => total.add(v),
            Err(e) => return L2Verdict::Divergent(e.to_string()),
        }
    }
    L2Verdict::Finite(total.value())
}

/// `2 pi integral_seg g(r)^2 r dr`, expanding products of powers and
/// constant annuli analytically.
fn segment_l2(sym: &RadialSymbol, seg: &Segment) -> Result<f64, NumericError> {
    let pieces: Vec<&RadialPiece> = seg.active.iter().map(|&i| &sym.pieces()[i]).collect();
    let has_bump = pieces.iter().any(|p| matches!(p, RadialPiece::SmoothAnnulusBump { .. }));
    if has_bump {
        if let [RadialPiece::SmoothAnnulusBump {
            center_radius,
            half_width,
            amplitude,
        }] = pieces.as_slice()
        {
            if seg.lo_offset == -half_width && seg.hi_offset == *half_width {
                return Ok(amplitude * amplitude * 2.0 * PI * center_radius * half_width * BUMP_PROFILE_SQUARED_INTEGRAL);
            }
        }
        let f = |u: f64| {
            let g = sym.eval_segment(seg, u);
            2.0 * PI * g * g * (seg.base + u)
        };
        return integrate_interval_with(&f, seg.lo_offset, seg.hi_offset, &QuadOptions::relative(1e-12))
            .into_result("smooth-bump L2 segment");
    }
    // g = sum_i c_i r^{e_i} with annulus indicators as c r^0
    let terms: Vec<(f64, f64)> = pieces
        .iter()
        .map(|p| match **p {
            RadialPiece::Power { exponent, .. } => (1.0, exponent),
            RadialPiece::AnnulusIndicator { amplitude, .. } => (amplitude, 0.0),
            RadialPiece::SmoothAnnulusBump { .. } => unreachable!(),
        })
        .collect();
    let mut acc = KahanSum::new();
    for &(ci, ei) in &terms {
        for &(cj, ej) in &terms {
            let moment = if seg.base != seg.lo && ei + ej == 0.0 {
                // constant integrand on an annulus: exact width
                let (r0, r1) = (seg.base + seg.lo_offset, seg.base + seg.hi_offset);
                0.5 * (seg.hi_offset - seg.lo_offset) * (r0 + r1)
            } else {
                power_moment(ei + ej + 1.0, seg.lo, seg.hi)?
            };
            acc.add(ci * cj * moment);
        }
    }
    Ok(2.0 * PI * acc.value())
}
