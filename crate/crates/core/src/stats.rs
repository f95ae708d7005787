//! Host models and closed-form performance.
//!
//! DCT coefficients are modelled either by a zero-mean generalized Gaussian
//!
//! ```text
//! f(x) = A exp(-|βx|^c),  β = sqrt(Γ(3/c) / Γ(1/c)) / σ,  A = βc / (2 Γ(1/c))
//! ```
//!
//! or by a centred Cauchy density `γ / (π (γ² + x²))`. The double-sided
//! additive scheme with fixed masks has miss probability
//!
//! ```text
//! p_m = 1 − 2 Q(Q⁻¹(p_fa / 2) − k √N / σ)   if ψ > k, else 0,
//! ```
//!
//! where `k = (a/N) Σ m_i` and `ψ = (σ / √N) Q⁻¹(p_fa / 2)`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::{pairwise_mean, Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1 − x) = π / sin(πx)
        return libm::log(PI / libm::sin(PI * x)) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * libm::log(2.0 * PI) + (x + 0.5) * libm::log(t) - t + libm::log(acc)
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    libm::exp(ln_gamma(x))
}

/// Gaussian upper tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", alloc::format!("{p} is outside (0, 1)")));
    }
    // Q⁻¹(p) = Φ⁻¹(1 − p) = −Φ⁻¹(p)
    let mut x = -acklam_probit(p);
    for _ in 0..3 {
        let err = q_function(x) - p;
        let d = normal_pdf(x);
        if d == 0.0 {
            break;
        }
        // Halley step on f(x) = Q(x) − p, f' = −φ, f'' = xφ
        let u = err / d;
        x += u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// Acklam's rational approximation to the normal quantile (rel. err ≈ 1e−9).
fn acklam_probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.024_25;

    if p < LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam_probit(1.0 - p)
    }
}

/// Generalized Gaussian parameters with the derived scale and normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub c: f64,
    pub sigma_x: f64,
    pub beta: f64,
    pub norm: f64,
}

impl GgdParams {
    pub fn new(c: f64, sigma_x: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", "shape must be positive"));
        }
        if !(sigma_x > 0.0 && sigma_x.is_finite()) {
            return Err(Error::param("sigma_x", "standard deviation must be positive"));
        }
        let beta = libm::exp(0.5 * (ln_gamma(3.0 / c) - ln_gamma(1.0 / c))) / sigma_x;
        let norm = beta * c / (2.0 * gamma(1.0 / c));
        Ok(Self { c, sigma_x, beta, norm })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.norm * libm::exp(-libm::pow(libm::fabs(self.beta * x), self.c))
    }
}

pub fn ggd_pdf(params: &GgdParams, x: f64) -> f64 {
    params.pdf(x)
}

/// `E|X| / sqrt(E X²)` of a GGD with shape `c`; increasing in `c`.
pub fn ggd_abs_rms_ratio(c: f64) -> f64 {
    libm::exp(ln_gamma(2.0 / c) - 0.5 * (ln_gamma(1.0 / c) + ln_gamma(3.0 / c)))
}

pub const GGD_SHAPE_MIN: f64 = 0.1;
pub const GGD_SHAPE_MAX: f64 = 5.0;
const GGD_SHAPE_TOL: f64 = 1e-6;
/// Smallest sample accepted by the estimators.
pub const MIN_FIT_SAMPLES: usize = 100;

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return 0.0;
    }
    let mean = pairwise_mean(n, |i| data[i]);
    let ss = crate::pairwise_sum(n, |i| (data[i] - mean) * (data[i] - mean));
    libm::sqrt(ss / (n - 1) as f64)
}

/// Moment-matching GGD fit: solves `ggd_abs_rms_ratio(c) = mean|x| / rms(x)`
/// by bisection on `[0.1, 5]`; `sigma_x` is the sample standard deviation.
pub fn fit_ggd(data: &[f64]) -> Result<GgdParams> {
    check_fit_len(data)?;
    let n = data.len();
    let m1 = pairwise_mean(n, |i| libm::fabs(data[i]));
    let m2 = pairwise_mean(n, |i| data[i] * data[i]);
    let sigma = sample_std(data);
    if m2 == 0.0 || sigma == 0.0 {
        return Err(Error::Degenerate("constant data has no shape"));
    }
    let r = m1 / libm::sqrt(m2);
    let (mut lo, mut hi) = (GGD_SHAPE_MIN, GGD_SHAPE_MAX);
    if !(r >= ggd_abs_rms_ratio(lo) && r <= ggd_abs_rms_ratio(hi)) {
        return Err(Error::ShapeOutOfRange(r));
    }
    while hi - lo > GGD_SHAPE_TOL {
        let mid = 0.5 * (lo + hi);
        if ggd_abs_rms_ratio(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    GgdParams::new(0.5 * (lo + hi), sigma)
}

/// Centred Cauchy scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    pub gamma: f64,
}

impl CauchyParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", "scale must be positive"));
        }
        Ok(Self { gamma })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.gamma / (PI * (self.gamma * self.gamma + x * x))
    }
}

/// Linear-interpolated sample quantile of already sorted data.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Maximum-likelihood scale of a centred Cauchy sample.
///
/// The score `Σ γ²/(γ² + x²) − n/2` is increasing in `γ`; its root is
/// bracketed in log-scale starting from half the interquartile range and
/// then bisected to relative precision 1e−14.
pub fn fit_cauchy(data: &[f64]) -> Result<CauchyParams> {
    check_fit_len(data)?;
    let n = data.len();
    let zeros = data.iter().filter(|&&x| x == 0.0).count();
    if zeros == n {
        return Err(Error::Degenerate("all-zero data"));
    }
    if 2 * zeros >= n {
        return Err(Error::Degenerate("half or more of the data is exactly zero"));
    }
    let score = |g: f64| {
        let g2 = g * g;
        crate::pairwise_sum(n, |i| g2 / (g2 + data[i] * data[i])) - 0.5 * n as f64
    };

    let mut sorted: Vec<f64> = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut g0 = 0.5 * (sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25));
    if !(g0 > 0.0) {
        g0 = pairwise_mean(n, |i| libm::fabs(data[i]));
    }

    let (mut lo, mut hi) = (g0, g0);
    while score(lo) > 0.0 {
        lo *= 0.5;
    }
    while score(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
        let mid = libm::sqrt(lo * hi);
        if score(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    CauchyParams::new(libm::sqrt(lo * hi))
}

fn check_fit_len(data: &[f64]) -> Result<()> {
    if data.len() < MIN_FIT_SAMPLES {
        return Err(Error::param(
            "data",
            alloc::format!("need at least {MIN_FIT_SAMPLES} samples, got {}", data.len()),
        ));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite sample"));
    }
    Ok(())
}

/// Detection threshold that gives false-alarm rate `p_fa` for the double-sided
/// correlator on Gaussian hosts: `(σ/√N) Q⁻¹(p_fa/2)`.
pub fn dsass_threshold(p_fa: f64, n: usize, sigma_x: f64) -> Result<f64> {
    Ok(sigma_x / libm::sqrt(n as f64) * q_inverse(p_fa / 2.0)?)
}

/// Closed-form DS-ASS miss probability for fixed masks.
pub fn dsass_miss_probability(p_fa: f64, k: f64, n: usize, sigma_x: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::param("p_fa", "must lie in (0, 1)"));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::param("k", "must be non-negative"));
    }
    if n < 2 {
        return Err(Error::param("n", "need at least two samples"));
    }
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(Error::param("sigma_x", "must be positive"));
    }
    let q = q_inverse(p_fa / 2.0)?;
    let psi = sigma_x / libm::sqrt(n as f64) * q;
    if psi > k {
        let p = 1.0 - 2.0 * q_function(q - k * libm::sqrt(n as f64) / sigma_x);
        Ok(p.clamp(0.0, 1.0))
    } else {
        Ok(0.0)
    }
}

/// Mean displacement `k` and mean squared distortion `D_w` of a shaped embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    pub k: f64,
    pub d_w: f64,
}

pub fn distortion_summary(masks: &[f64], a: f64) -> Result<Distortion> {
    if masks.is_empty() {
        return Err(Error::param("masks", "empty mask vector"));
    }
    if let Some((index, &value)) = masks.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
        return Err(Error::NonPositiveMask { index, value });
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", "strength must be positive"));
    }
    let n = masks.len();
    let k = a * pairwise_mean(n, |i| masks[i]);
    let d_w = a * a * pairwise_mean(n, |i| masks[i] * masks[i]);
    debug_assert!(k * k <= d_w * (1.0 + 1e-12));
    Ok(Distortion { k, d_w })
}

/// One point of the closed-form DS-ASS operating characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformancePoint {
    pub p_fa: f64,
    pub p_m: f64,
    pub k: f64,
    pub d_w: f64,
}

impl PerformancePoint {
    pub fn dsass(p_fa: f64, masks: &[f64], a: f64, sigma_x: f64) -> Result<Self> {
        let Distortion { k, d_w } = distortion_summary(masks, a)?;
        let p_m = dsass_miss_probability(p_fa, k, masks.len(), sigma_x)?;
        Ok(Self { p_fa, p_m, k, d_w })
    }
}
