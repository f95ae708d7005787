//! Single-image embed, detect and estimate operations.
//!
//! A seed fixes both the coefficient subset and the watermark: a ChaCha8
//! stream seeded with it first draws `N` distinct block indices, then the
//! chip arrangement. The Monte Carlo engine uses the same routine per trial.

use dswm_core::blockdct::{block_dct, block_idct, zigzag_extract, zigzag_insert, Image, ZigzagIndex};
use dswm_core::roc::empirical_threshold;
use dswm_core::schemes::{decide, statistic, DetectionResult, Detector, Embedder, HostModel, Rule, Scheme, Watermark};
use dswm_core::stats::{fit_cauchy, fit_ggd};
use dswm_core::watson::{mask_vector, MaskParams, SensitivityTable};
use dswm_core::derive_seed;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sidecar::Sidecar;

/// Draws `n` distinct block indices (in random order) and a watermark.
pub fn select_with<R: Rng + ?Sized>(rng: &mut R, blocks: usize, n: usize) -> Result<(Vec<usize>, Watermark)> {
    if n > blocks {
        return Err(Error::Config(format!("N = {n} exceeds the {blocks} available coefficients")));
    }
    let idx = index::sample(rng, blocks, n).into_vec();
    let w = Watermark::generate_with(n, rng)?;
    Ok((idx, w))
}

pub fn select(seed: u64, blocks: usize, n: usize) -> Result<(Vec<usize>, Watermark)> {
    select_with(&mut ChaCha8Rng::seed_from_u64(seed), blocks, n)
}

pub fn gather(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Estimates only the parameters `detector`/`embedder` actually read; the
/// rest are NaN.
pub fn host_model_for(coeffs: &[f64], ggd: bool, cauchy: bool) -> Result<HostModel> {
    Ok(HostModel {
        ggd_shape: if ggd { fit_ggd(coeffs)?.c } else { f64::NAN },
        cauchy_gamma: if cauchy { fit_cauchy(coeffs)?.gamma } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub c: f64,
    pub sigma_x: f64,
    pub gamma: f64,
    pub samples: usize,
}

/// GGD and Cauchy fits of the coefficient at `index` across all blocks.
pub fn estimate(img: &Image, index: ZigzagIndex) -> Result<Estimate> {
    let x = zigzag_extract(&block_dct(img), index);
    let ggd = fit_ggd(&x)?;
    let cauchy = fit_cauchy(&x)?;
    Ok(Estimate { c: ggd.c, sigma_x: ggd.sigma_x, gamma: cauchy.gamma, samples: x.len() })
}

#[derive(Debug, Clone)]
pub struct EmbedOptions {
    pub scheme: Scheme,
    pub a: f64,
    pub n: usize,
    pub seed: u64,
    pub zigzag_index: ZigzagIndex,
    pub mask_params: MaskParams,
    pub sensitivity: SensitivityTable,
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub image: Image,
    pub sidecar: Sidecar,
    pub psnr: f64,
}

pub fn embed_image(img: &Image, opts: &EmbedOptions) -> Result<Embedded> {
    let mut spec = block_dct(img);
    let x_all = zigzag_extract(&spec, opts.zigzag_index);
    let m_all = mask_vector(&opts.sensitivity, &spec, opts.zigzag_index, &opts.mask_params)?;
    let (idx, w) = select(opts.seed, x_all.len(), opts.n)?;
    let host = host_model_for(&x_all, false, opts.scheme.embedder() == Embedder::DsCauchy)?;
    let s = opts.scheme.embed(&gather(&x_all, &idx), &w, opts.a, &gather(&m_all, &idx), &host)?;
    let mut marked = x_all;
    for (&i, v) in idx.iter().zip(s) {
        marked[i] = v;
    }
    zigzag_insert(&mut spec, opts.zigzag_index, &marked)?;
    let image = block_idct(&spec);
    let psnr = img.psnr(&image)?;
    let sidecar = Sidecar {
        seed: opts.seed,
        scheme: opts.scheme,
        a: opts.a,
        n: opts.n,
        mask_mode: opts.mask_params.mode,
        zigzag_index: opts.zigzag_index,
    };
    Ok(Embedded { image, sidecar, psnr })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Psi(f64),
    /// Empirical threshold from the statistic evaluated with `trials`
    /// independent random watermarks on the same coefficients.
    FalseAlarm { p_fa: f64, trials: usize },
}

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub detector: Option<Detector>,
    pub rule: Option<Rule>,
    pub threshold: Threshold,
    pub sensitivity: SensitivityTable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub detector: Detector,
    pub result: DetectionResult,
}

/// Masks and detector parameters are recomputed from the received image.
pub fn detect_image(img: &Image, sidecar: &Sidecar, opts: &DetectOptions) -> Result<Detection> {
    let detector = opts.detector.unwrap_or(sidecar.scheme.detector());
    let rule = opts.rule.unwrap_or(if detector == sidecar.scheme.detector() {
        sidecar.scheme.rule()
    } else {
        Rule::SingleSided
    });
    let spec = block_dct(img);
    let x_all = zigzag_extract(&spec, sidecar.zigzag_index);
    let (idx, w) = select(sidecar.seed, x_all.len(), sidecar.n)?;
    let host = host_model_for(&x_all, detector == Detector::Ggd, detector == Detector::Cauchy)?;
    let r = gather(&x_all, &idx);
    let m = if detector.needs_masks() {
        let params = MaskParams::new(sidecar.mask_mode);
        gather(&mask_vector(&opts.sensitivity, &spec, sidecar.zigzag_index, &params)?, &idx)
    } else {
        Vec::new()
    };
    let stat = statistic(detector, &r, &w, sidecar.a, &m, &host)?;
    let psi = match opts.threshold {
        Threshold::Psi(psi) => psi,
        Threshold::FalseAlarm { p_fa, trials } => {
            let h0 = (0..trials as u64)
                .map(|t| {
                    let wt = Watermark::generate(sidecar.n, derive_seed(sidecar.seed, t))?;
                    Ok(statistic(detector, &r, &wt, sidecar.a, &m, &host)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            empirical_threshold(&h0, p_fa, rule)?
        }
    };
    Ok(Detection { detector, result: decide(stat, psi, rule)? })
}
