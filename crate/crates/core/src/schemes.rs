//! Embedders and detectors.
//!
//! All embedders add a perceptually shaped, signed copy of a zero-sum bipolar
//! watermark, `s = x ± a·m∘w`. The single-sided additive scheme (ASS) always
//! adds; the double-sided variants pick the sign that agrees with the host's
//! own projection on `w`, so the host's interference is added to, not fought
//! against. Their detectors then test `|L(s)|` rather than `L(s)`.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{pairwise_mean, Error, Result};

/// Zero-sum sequence of ±1 chips with even length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Watermark(Vec<i8>);

impl Watermark {
    pub fn new(chips: Vec<i8>) -> Result<Self> {
        if chips.len() < 2 || chips.len() % 2 != 0 {
            return Err(Error::WatermarkLength(chips.len()));
        }
        if let Some((index, &value)) = chips.iter().enumerate().find(|(_, c)| !matches!(c, 1 | -1)) {
            return Err(Error::WatermarkEntry { index, value });
        }
        let sum: i64 = chips.iter().map(|&c| i64::from(c)).sum();
        if sum != 0 {
            return Err(Error::WatermarkSum(sum));
        }
        Ok(Self(chips))
    }

    /// Uniformly random arrangement of `n/2` plus and `n/2` minus chips.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        Self::generate_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn generate_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::WatermarkLength(n));
        }
        let mut chips: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        chips.shuffle(rng);
        Ok(Self(chips))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn chips(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn chip(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }
}

pub fn generate_watermark(n: usize, seed: u64) -> Result<Watermark> {
    Watermark::generate(n, seed)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

fn check_masks(m: &[f64]) -> Result<()> {
    match m.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((index, &value)) => Err(Error::NonPositiveMask { index, value }),
        None => Ok(()),
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::param("gamma", "Cauchy scale must be positive"))
    }
}

fn check_strength(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::param("a", "embedding strength must be non-negative"))
    }
}

/// `x̄ = (1/N) Σ x_i w_i`.
pub fn projection(x: &[f64], w: &Watermark) -> Result<f64> {
    check_len(w.len(), x.len())?;
    Ok(pairwise_mean(x.len(), |i| x[i] * w.chip(i)))
}

/// `(1/N) Σ x_i w_i / (γ² + x_i²)`.
pub fn cauchy_projection(x: &[f64], w: &Watermark, gamma: f64) -> Result<f64> {
    check_len(w.len(), x.len())?;
    check_gamma(gamma)?;
    let g2 = gamma * gamma;
    Ok(pairwise_mean(x.len(), |i| x[i] * w.chip(i) / (g2 + x[i] * x[i])))
}

fn shaped_shift(x: &[f64], w: &Watermark, a: f64, m: &[f64], sign: f64) -> Result<Vec<f64>> {
    check_len(w.len(), x.len())?;
    check_len(x.len(), m.len())?;
    check_masks(m)?;
    check_strength(a)?;
    Ok(x.iter().zip(m).enumerate().map(|(i, (&xi, &mi))| xi + sign * a * mi * w.chip(i)).collect())
}

/// `s_i = x_i + a m_i w_i`.
pub fn embed_ass(x: &[f64], w: &Watermark, a: f64, m: &[f64]) -> Result<Vec<f64>> {
    shaped_shift(x, w, a, m, 1.0)
}

/// Adds `a·m∘w` when the correlator projection is positive, subtracts it otherwise
/// (a zero projection takes the minus branch).
pub fn embed_dsass(x: &[f64], w: &Watermark, a: f64, m: &[f64]) -> Result<Vec<f64>> {
    let sign = if projection(x, w)? > 0.0 { 1.0 } else { -1.0 };
    shaped_shift(x, w, a, m, sign)
}

/// As [`embed_dsass`], with the sign taken from the Cauchy-weighted projection.
pub fn embed_dscauchy(x: &[f64], w: &Watermark, a: f64, m: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let sign = if cauchy_projection(x, w, gamma)? > 0.0 { 1.0 } else { -1.0 };
    shaped_shift(x, w, a, m, sign)
}

/// Linear correlator `(1/N) Σ s_i w_i`.
pub fn detect_correlator(s: &[f64], w: &Watermark) -> Result<f64> {
    projection(s, w)
}

/// Generalized-Gaussian detector `(1/N) Σ |s_i|^c − |s_i − a m_i w_i|^c`.
///
/// Needs the nominal strength `a` and the masks the embedder is assumed to
/// have used.
pub fn detect_ggd(s: &[f64], w: &Watermark, a: f64, m: &[f64], c: f64) -> Result<f64> {
    check_len(w.len(), s.len())?;
    check_len(s.len(), m.len())?;
    check_masks(m)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", "shape must be positive"));
    }
    Ok(pairwise_mean(s.len(), |i| {
        let shifted = s[i] - a * m[i] * w.chip(i);
        libm::pow(libm::fabs(s[i]), c) - libm::pow(libm::fabs(shifted), c)
    }))
}

/// Cauchy locally-most-powerful statistic `(1/N) Σ s_i w_i / (γ² + s_i²)`.
pub fn detect_cauchy(s: &[f64], w: &Watermark, gamma: f64) -> Result<f64> {
    cauchy_projection(s, w, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    SingleSided,
    DoubleSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// Not watermarked.
    H0,
    /// Carries the tested watermark.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub rule: Rule,
}

/// Strict comparison: `L > ψ` (single-sided) or `|L| > ψ` (double-sided).
pub fn decide(statistic: f64, psi: f64, rule: Rule) -> Result<DetectionResult> {
    if psi.is_nan() || (rule == Rule::DoubleSided && psi < 0.0) {
        return Err(Error::param("psi", "double-sided threshold must be non-negative"));
    }
    let score = match rule {
        Rule::SingleSided => statistic,
        Rule::DoubleSided => libm::fabs(statistic),
    };
    let decision = if score > psi { Decision::H1 } else { Decision::H0 };
    Ok(DetectionResult { statistic, threshold: psi, decision, rule })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Embedder {
    Ass,
    DsAss,
    DsCauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Correlator,
    Ggd,
    Cauchy,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Correlator => "correlator",
            Detector::Ggd => "ggd",
            Detector::Cauchy => "cauchy",
        }
    }

    /// Whether the statistic depends on the masks and nominal strength.
    pub fn needs_masks(self) -> bool {
        matches!(self, Detector::Ggd)
    }
}

impl core::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "correlator" | "cor" => Ok(Detector::Correlator),
            "ggd" | "hernandez" => Ok(Detector::Ggd),
            "cauchy" | "briassouli" => Ok(Detector::Cauchy),
            _ => Err(Error::param("detector", alloc::format!("unknown detector `{s}`"))),
        }
    }
}

/// Host-model constants a detector or embedder may need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostModel {
    /// GGD shape `c`.
    pub ggd_shape: f64,
    /// Cauchy scale `γ`.
    pub cauchy_gamma: f64,
}

/// The five embedder/detector pairings compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// ASS with the linear correlator.
    AssCor,
    /// ASS with the generalized-Gaussian detector.
    Hernandez,
    /// ASS with the Cauchy detector.
    Briassouli,
    /// Double-sided ASS with the correlator.
    DsAss,
    /// Double-sided Cauchy embedding with the Cauchy detector.
    DsCauchy,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::AssCor, Scheme::Hernandez, Scheme::Briassouli, Scheme::DsAss, Scheme::DsCauchy];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::AssCor => "ASS-COR",
            Scheme::Hernandez => "Hernandez",
            Scheme::Briassouli => "Briassouli",
            Scheme::DsAss => "DS-ASS",
            Scheme::DsCauchy => "DS-Cauchy",
        }
    }

    pub fn embedder(self) -> Embedder {
        match self {
            Scheme::AssCor | Scheme::Hernandez | Scheme::Briassouli => Embedder::Ass,
            Scheme::DsAss => Embedder::DsAss,
            Scheme::DsCauchy => Embedder::DsCauchy,
        }
    }

    pub fn detector(self) -> Detector {
        match self {
            Scheme::AssCor | Scheme::DsAss => Detector::Correlator,
            Scheme::Hernandez => Detector::Ggd,
            Scheme::Briassouli | Scheme::DsCauchy => Detector::Cauchy,
        }
    }

    pub fn rule(self) -> Rule {
        match self {
            Scheme::DsAss | Scheme::DsCauchy => Rule::DoubleSided,
            _ => Rule::SingleSided,
        }
    }

    pub fn embed(self, x: &[f64], w: &Watermark, a: f64, m: &[f64], host: &HostModel) -> Result<Vec<f64>> {
        match self.embedder() {
            Embedder::Ass => embed_ass(x, w, a, m),
            Embedder::DsAss => embed_dsass(x, w, a, m),
            Embedder::DsCauchy => embed_dscauchy(x, w, a, m, host.cauchy_gamma),
        }
    }

    /// Detection statistic; `m` is only read by the GGD detector.
    pub fn statistic(self, s: &[f64], w: &Watermark, a: f64, m: &[f64], host: &HostModel) -> Result<f64> {
        statistic(self.detector(), s, w, a, m, host)
    }
}

pub fn statistic(
    detector: Detector,
    s: &[f64],
    w: &Watermark,
    a: f64,
    m: &[f64],
    host: &HostModel,
) -> Result<f64> {
    match detector {
        Detector::Correlator => detect_correlator(s, w),
        Detector::Ggd => detect_ggd(s, w, a, m, host.ggd_shape),
        Detector::Cauchy => detect_cauchy(s, w, host.cauchy_gamma),
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: alloc::string::String =
            s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect();
        match norm.as_str() {
            "asscor" | "ass" => Ok(Scheme::AssCor),
            "hernandez" => Ok(Scheme::Hernandez),
            "briassouli" => Ok(Scheme::Briassouli),
            "dsass" => Ok(Scheme::DsAss),
            "dscauchy" => Ok(Scheme::DsCauchy),
            _ => Err(Error::param("scheme", alloc::format!("unknown scheme `{s}`"))),
        }
    }
}

/// Nearest point of the shifted lattice `Δℤ + Δ/2`; a value exactly on `Δℤ`
/// goes to the centroid above it.
pub fn lattice_quantize(v: f64, delta: f64) -> f64 {
    delta * (libm::floor(v / delta) + 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdmEmbedding {
    pub marked: Vec<f64>,
    /// Strength that moves the projection onto its lattice point; may be negative.
    pub strength: f64,
    /// `|strength| > a_max`: the perceptual budget would be exceeded.
    pub exceeds_cap: bool,
}

/// Spread-transform dither modulation with perceptual shaping.
///
/// The projection `x̄` is moved to `q(x̄)` along `m∘w`, which takes strength
/// `a = (q(x̄) − x̄) / mean(m)`. The strength is dictated by the host, not by
/// the perceptual cap, which is what `exceeds_cap` reports.
pub fn embed_stdm_perceptual(
    x: &[f64],
    w: &Watermark,
    m: &[f64],
    delta: f64,
    a_max: f64,
) -> Result<StdmEmbedding> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "step size must be positive"));
    }
    check_len(w.len(), x.len())?;
    check_len(x.len(), m.len())?;
    check_masks(m)?;
    let mean_mask = pairwise_mean(m.len(), |i| m[i]);
    if !(mean_mask > 0.0) {
        return Err(Error::Degenerate("mask sum is zero"));
    }
    let xbar = projection(x, w)?;
    let strength = (lattice_quantize(xbar, delta) - xbar) / mean_mask;
    let marked = x.iter().zip(m).enumerate().map(|(i, (&xi, &mi))| xi + strength * mi * w.chip(i)).collect();
    Ok(StdmEmbedding { marked, strength, exceeds_cap: libm::fabs(strength) > a_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn wm(v: &[i8]) -> Watermark {
        Watermark::new(v.to_vec()).unwrap()
    }

    #[test]
    fn watermark_validation() {
        assert_eq!(Watermark::new(vec![1, 1, -1]), Err(Error::WatermarkLength(3)));
        assert_eq!(Watermark::new(vec![1, 1]), Err(Error::WatermarkSum(2)));
        assert_eq!(Watermark::new(vec![1, 0]), Err(Error::WatermarkEntry { index: 1, value: 0 }));
        assert!(Watermark::generate(0, 1).is_err());
        assert!(Watermark::generate(7, 1).is_err());
    }

    #[test]
    fn two_chip_watermarks() {
        let mut seen = [false; 2];
        for seed in 0..50 {
            let w = Watermark::generate(2, seed).unwrap();
            match w.chips() {
                [1, -1] => seen[0] = true,
                [-1, 1] => seen[1] = true,
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(Watermark::generate(2000, 9).unwrap(), Watermark::generate(2000, 9).unwrap());
        assert_ne!(Watermark::generate(2000, 9).unwrap(), Watermark::generate(2000, 10).unwrap());
    }

    #[test]
    fn projection_examples() {
        let w = wm(&[1, -1, 1, -1]);
        assert_eq!(projection(&[5.0; 4], &w).unwrap(), 0.0);
        assert_eq!(projection(&[1.0, -1.0, 1.0, -1.0], &w).unwrap(), 1.0);
        assert_eq!(projection(&[3.0, -1.0, 2.0, 0.0], &w).unwrap(), 1.5);
        assert_eq!(detect_correlator(&[3.0, -1.0, 2.0, 0.0], &w).unwrap(), 1.5);
        assert_eq!(detect_correlator(&[0.0; 4], &w).unwrap(), 0.0);
        assert!(projection(&[1.0; 3], &w).is_err());
    }

    #[test]
    fn cauchy_projection_examples() {
        let w = wm(&[1, -1]);
        assert_eq!(cauchy_projection(&[0.0, 0.0], &w, 1.0).unwrap(), 0.0);
        assert_eq!(cauchy_projection(&[1.0, -1.0], &w, 1.0).unwrap(), 0.5);
        assert_eq!(detect_cauchy(&[1.0, -1.0], &w, 1.0).unwrap(), 0.5);
        assert!(cauchy_projection(&[1.0, -1.0], &w, 0.0).is_err());
    }

    #[test]
    fn embedding_examples() {
        let w = wm(&[1, -1]);
        let m = [1.0, 1.0];
        assert_eq!(embed_ass(&[1.0, 0.0], &w, 1.0, &m).unwrap(), vec![2.0, -1.0]);
        assert_eq!(embed_ass(&[1.0, 0.0], &w, 0.0, &m).unwrap(), vec![1.0, 0.0]);
        assert_eq!(embed_dsass(&[1.0, 0.0], &w, 1.0, &m).unwrap(), vec![2.0, -1.0]);
        assert_eq!(embed_dsass(&[0.0, 1.0], &w, 1.0, &m).unwrap(), vec![-1.0, 2.0]);
        // tie goes to the minus branch
        assert_eq!(embed_dsass(&[1.0, 1.0], &w, 1.0, &m).unwrap(), vec![0.0, 2.0]);
        let s = embed_dscauchy(&[1.0, -1.0], &w, 0.1, &m, 1.0).unwrap();
        assert_abs_diff_eq!(s[0], 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], -1.1, epsilon = 1e-15);
        assert_eq!(embed_dscauchy(&[1.0, -1.0], &w, 0.0, &m, 1.0).unwrap(), vec![1.0, -1.0]);
        assert!(matches!(embed_ass(&[1.0, 0.0], &w, 1.0, &[1.0, 0.0]), Err(Error::NonPositiveMask { index: 1, .. })));
        assert!(embed_ass(&[1.0, 0.0], &w, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn ggd_detector_examples() {
        let w = wm(&[1, -1]);
        // second term cancels: s = (2, 0), a m w = (1, -1)
        assert_abs_diff_eq!(detect_ggd(&[2.0, 0.0], &w, 1.0, &[1.0, 1.0], 2.0).unwrap(), (3.0 - 1.0) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(detect_ggd(&[2.0, 0.0], &w, 1.0, &[1.0, 1.0], 1.0).unwrap(), (1.0 - 1.0) / 2.0, epsilon = 1e-12);
        // single-term forms: |2|^c − |2 − 1|^c
        assert_abs_diff_eq!(detect_ggd(&[2.0, 1.0], &w, 1.0, &[1.0, 1.0], 2.0).unwrap(), (3.0 + (1.0 - 4.0)) / 2.0, epsilon = 1e-12);
        assert_eq!(detect_ggd(&[3.0, -7.0], &w, 0.0, &[1.0, 1.0], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn decide_examples() {
        let r = decide(-2.0, 1.0, Rule::DoubleSided).unwrap();
        assert_eq!(r.decision, Decision::H1);
        assert_eq!(decide(-2.0, 1.0, Rule::SingleSided).unwrap().decision, Decision::H0);
        assert_eq!(decide(1.0, 1.0, Rule::SingleSided).unwrap().decision, Decision::H0);
        assert_eq!(decide(-1.0, 1.0, Rule::DoubleSided).unwrap().decision, Decision::H0);
        assert!(decide(0.5, -1.0, Rule::DoubleSided).is_err());
        assert_eq!(decide(0.5, -1.0, Rule::SingleSided).unwrap().decision, Decision::H1);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("ds_cauchy".parse::<Scheme>().unwrap(), Scheme::DsCauchy);
        assert!("qim".parse::<Scheme>().is_err());
    }

    #[test]
    fn stdm_examples() {
        let w = wm(&[1, -1]);
        // Δ = 2, x̄ = 0.4 → q = 1, a = 0.6
        let e = embed_stdm_perceptual(&[0.4, -0.4], &w, &[1.0, 1.0], 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.strength, 0.6, epsilon = 1e-12);
        assert!(!e.exceeds_cap);
        assert_abs_diff_eq!(projection(&e.marked, &w).unwrap(), 1.0, epsilon = 1e-12);
        // already on the lattice
        let e = embed_stdm_perceptual(&[1.0, -1.0], &w, &[1.0, 1.0], 2.0, 1.0).unwrap();
        assert_eq!(e.strength, 0.0);
        assert_eq!(e.marked, vec![1.0, -1.0]);
        // ties go up
        assert_eq!(lattice_quantize(0.0, 2.0), 1.0);
        assert_eq!(lattice_quantize(-2.0, 2.0), -1.0);
        assert_eq!(lattice_quantize(2.0, 2.0), 3.0);
        // big host offset forces a large strength
        let e = embed_stdm_perceptual(&[0.1, -0.1], &w, &[0.1, 0.1], 2.0, 1.0).unwrap();
        assert!(e.exceeds_cap);
        assert!(embed_stdm_perceptual(&[0.1, -0.1], &w, &[1.0, 1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn dscauchy_increases_mean_statistic_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gamma = 5.0;
        let n = 200;
        let (mut before, mut after) = (0.0, 0.0);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| 10.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let w = Watermark::generate_with(n, &mut rng).unwrap();
            let m = vec![1.0; n];
            let s = embed_dscauchy(&x, &w, 0.5, &m, gamma).unwrap();
            before += detect_cauchy(&x, &w, gamma).unwrap().abs();
            after += detect_cauchy(&s, &w, gamma).unwrap().abs();
        }
        assert!(after > before, "{after} <= {before}");
    }

    fn host_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Watermark, f64)> {
        (1usize..40).prop_flat_map(|half| {
            let n = 2 * half;
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(0.01f64..10.0, n),
                any::<u64>(),
                0.0f64..3.0,
            )
                .prop_map(move |(x, m, seed, a)| (x, m, Watermark::generate(n, seed).unwrap(), a))
        })
    }

    proptest! {
        #[test]
        fn watermark_invariants(half in 1usize..500, seed in any::<u64>()) {
            let w = Watermark::generate(2 * half, seed).unwrap();
            prop_assert_eq!(w.chips().iter().map(|&c| i64::from(c)).sum::<i64>(), 0);
            prop_assert!(w.chips().iter().all(|&c| c == 1 || c == -1));
        }

        #[test]
        fn dsass_statistic_identity((x, m, w, a) in host_strategy()) {
            let s = embed_dsass(&x, &w, a, &m).unwrap();
            let lx = detect_correlator(&x, &w).unwrap();
            let ls = detect_correlator(&s, &w).unwrap();
            let k = a * pairwise_mean(m.len(), |i| m[i]);
            prop_assert!((ls.abs() - (lx.abs() + k)).abs() < 1e-9);
            // ASS and DS-ASS coincide exactly when x̄ > 0
            let ass = embed_ass(&x, &w, a, &m).unwrap();
            if lx > 0.0 { prop_assert_eq!(&ass, &s); }
        }

        #[test]
        fn dsass_negation_covariance((x, m, w, a) in host_strategy()) {
            prop_assume!(projection(&x, &w).unwrap() != 0.0);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let s = embed_dsass(&x, &w, a, &m).unwrap();
            let sn = embed_dsass(&neg, &w, a, &m).unwrap();
            for (p, q) in s.iter().zip(&sn) {
                prop_assert_eq!(*p, -*q);
            }
        }

        #[test]
        fn cauchy_statistic_bound((x, _m, w, _a) in host_strategy(), gamma in 0.01f64..50.0) {
            let l = detect_cauchy(&x, &w, gamma).unwrap();
            prop_assert!(l.abs() <= 1.0 / (2.0 * gamma) + 1e-15);
        }

        #[test]
        fn double_sided_rule_is_sign_blind(l in -10.0f64..10.0, psi in 0.0f64..10.0) {
            prop_assert_eq!(
                decide(l, psi, Rule::DoubleSided).unwrap().decision,
                decide(-l, psi, Rule::DoubleSided).unwrap().decision
            );
        }

        #[test]
        fn stdm_projection_identity((x, m, w, _a) in host_strategy(), delta in 0.1f64..20.0) {
            let e = embed_stdm_perceptual(&x, &w, &m, delta, 1.0).unwrap();
            let q = lattice_quantize(projection(&x, &w).unwrap(), delta);
            prop_assert!((projection(&e.marked, &w).unwrap() - q).abs() < 1e-9);
        }

        #[test]
        fn lattice_error_bound(v in -1e4f64..1e4, delta in 1e-3f64..100.0) {
            prop_assert!((lattice_quantize(v, delta) - v).abs() <= delta / 2.0 + 1e-9 * v.abs().max(1.0));
        }
    }
}
