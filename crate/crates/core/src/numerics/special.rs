use super::NumericError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
///
/// Lanczos (g = 7) below 10, Stirling's series above.
pub fn log_gamma(x: f64) -> Result<f64, NumericError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(NumericError::Domain {
            function: "log_gamma",
            value: x,
        });
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x
        return Ok(lanczos_ln_gamma(x + 1.0) - x.ln());
    }
    if x < 10.0 {
        return Ok(lanczos_ln_gamma(x));
    }
    Ok(stirling_ln_gamma(x))
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64));
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + series.ln()
}

fn stirling_ln_gamma(x: f64) -> f64 {
    // Bernoulli-number corrections B_{2k} / (2k (2k - 1) x^{2k-1}).
    const CORRECTIONS: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
    ];
    let inv = 1.0 / x;
    let inv_sq = inv * inv;
    let mut power = inv;
    let mut correction = 0.0;
    for c in CORRECTIONS {
        correction += c * power;
        power *= inv_sq;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + correction
}

const BESSEL_SERIES_LIMIT: f64 = 20.0;

/// Exponentially scaled modified Bessel function `exp(-x) I0(x)` for `x >= 0`.
///
/// Power series up to 20 and the Hankel asymptotic expansion beyond; the
/// smallest asymptotic term at x = 20 is below 1e-17.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "bessel_i0_scaled needs x >= 0, got {x}");
    let x = x.abs();
    if x <= BESSEL_SERIES_LIMIT {
        i0_series(x) * (-x).exp()
    } else {
        i0_asymptotic_scaled(x)
    }
}

/// `ln(exp(-x) I0(x))`, finite for every `x >= 0`.
pub fn ln_bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= BESSEL_SERIES_LIMIT {
        i0_series(x).ln() - x
    } else {
        i0_asymptotic_scaled(x).ln()
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0f64).powi(2) / (8.0 * k * x);
        if next >= term || next < 1e-17 * sum {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}
