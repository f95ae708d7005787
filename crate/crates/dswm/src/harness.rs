//! Monte Carlo ROC engine.
//!
//! Each trial draws a random subset of `N` blocks and a watermark from its
//! own seed, then evaluates every requested scheme on the same draw: the
//! unwatermarked (optionally attacked) data gives one H0 statistic, the
//! embedded and attacked data one H1 statistic. Thresholds for each target
//! false-alarm rate come from the H0 population, miss rates from H1.
//!
//! In the default pixel pipeline a selected block is rebuilt in the pixel
//! domain after embedding, clamped to `[0, 255]`, attacked, and transformed
//! back, exactly as if the whole image had been handed to the channel. Only
//! selected blocks are touched, so a trial costs `O(N)` block operations
//! rather than a full-image transform.
//!
//! Marked images stay real-valued unless [`TrialConfig::eight_bit`] is set.
//! Rounding to 8 bits removes shifts smaller than half a grey level per pixel,
//! which at Watson thresholds of one or two coefficient units is most of the
//! watermark.

use std::io::Write;
use std::path::Path;

use dswm_core::attacks::{jpeg_block, Attack, QuantTable};
use dswm_core::blockdct::{block_dct, to_pixel, Block, Dct8, Image, ZigzagIndex, BLOCK_LEN};
use dswm_core::roc::{binomial_standard_error, default_pfa_grid, roc_points, RocPoint};
use dswm_core::schemes::{Detector, Embedder, HostModel, Scheme, Watermark};
use dswm_core::stats::{dsass_miss_probability, dsass_threshold};
use dswm_core::watson::{checked_dc, contrast_threshold, luminance_threshold, DcPolicy, MaskMode, MaskParams, SensitivityTable, DC_FLOOR};
use dswm_core::{derive_seed, Error as CoreError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::protocol::{host_model_for, select_with};

#[derive(Debug, Clone)]
pub enum HostSource {
    Image { label: String, image: Image },
    /// Fresh i.i.d. `N(0, σ²)` coefficients every trial.
    Gaussian { sigma: f64 },
}

impl HostSource {
    pub fn label(&self) -> String {
        match self {
            HostSource::Image { label, .. } => label.clone(),
            HostSource::Gaussian { sigma } => format!("gaussian:{sigma}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSource {
    Watson(MaskParams),
    /// The same threshold for every coefficient.
    Uniform(f64),
}

impl MaskSource {
    pub fn label(&self) -> String {
        match self {
            MaskSource::Watson(p) => p.mode.to_string(),
            MaskSource::Uniform(m) => format!("uniform:{m}"),
        }
    }
}

/// Where the GGD detector gets its masks from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorMasks {
    /// Recomputed from the received data.
    #[default]
    Blind,
    /// The embedder's masks, passed as side information.
    SideInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pipeline {
    /// Embed, write 8-bit pixels, attack the image, transform back.
    #[default]
    Pixel,
    /// Attack the selected coefficients directly; no pixel rounding.
    Coefficient,
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub schemes: Vec<Scheme>,
    pub host: HostSource,
    pub zigzag_index: ZigzagIndex,
    pub n: usize,
    pub a: f64,
    pub masks: MaskSource,
    pub detector_masks: DetectorMasks,
    pub sensitivity: SensitivityTable,
    pub quant_table: QuantTable,
    pub attack: Attack,
    pub pipeline: Pipeline,
    /// Round marked and noisy pixels to 8 bits (pixel pipeline only).
    pub eight_bit: bool,
    pub trials: usize,
    pub seed: u64,
    /// Target false-alarm rates; `None` uses [`default_pfa_grid`].
    pub pfa_grid: Option<Vec<f64>>,
    /// Overrides the GGD shape and Cauchy scale otherwise fitted to the host.
    pub host_model: Option<HostModel>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl TrialConfig {
    pub fn new(host: HostSource, schemes: Vec<Scheme>) -> Self {
        Self {
            schemes,
            host,
            zigzag_index: ZigzagIndex::new(5).expect("5 is a valid zigzag position"),
            n: 2000,
            a: 1.0,
            masks: MaskSource::Watson(MaskParams::new(MaskMode::FrequencyLuminance)),
            detector_masks: DetectorMasks::Blind,
            sensitivity: SensitivityTable::watson(),
            quant_table: QuantTable::jpeg_luminance(),
            attack: Attack::None,
            pipeline: Pipeline::Pixel,
            eight_bit: false,
            trials: 10_000,
            seed: 0,
            pfa_grid: None,
            host_model: None,
            threads: None,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.pfa_grid.clone().unwrap_or_else(|| default_pfa_grid(self.trials))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schemes.is_empty() {
            return bad("no scheme selected".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.n < 2 || self.n % 2 != 0 {
            return bad(format!("N = {} must be even and at least 2", self.n));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return bad(format!("strength a = {} must be non-negative", self.a));
        }
        self.attack.validate()?;
        match &self.masks {
            MaskSource::Watson(p) => p.validate()?,
            MaskSource::Uniform(m) if *m > 0.0 && m.is_finite() => {}
            MaskSource::Uniform(m) => return bad(format!("uniform mask {m} must be positive")),
        }
        match &self.host {
            HostSource::Image { image, .. } if self.n > image.block_count() => {
                return bad(format!("N = {} exceeds the {} blocks of the image", self.n, image.block_count()));
            }
            HostSource::Gaussian { sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("host sigma {sigma} must be positive"));
                }
                if matches!(self.masks, MaskSource::Watson(_)) {
                    return bad("Watson masks need an image host".into());
                }
                if self.pipeline == Pipeline::Pixel {
                    return bad("the pixel pipeline needs an image host".into());
                }
            }
            _ => {}
        }
        let grid = self.grid();
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("p_fa grid must be strictly increasing".into());
        }
        for &p in &grid {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("p_fa {p} must lie in (0, 1)"));
            }
            if ((p * self.trials as f64 + 1e-9).floor() as usize) < 1 {
                return Err(CoreError::Resolution { p_fa: p, trials: self.trials }.into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub scheme: Scheme,
    pub image: String,
    pub attack: Attack,
    pub mask_mode: String,
    pub a: f64,
    pub n: usize,
    pub trials: usize,
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Miss rate at the grid point `p_fa`, if present.
    pub fn p_m_at(&self, p_fa: f64) -> Option<f64> {
        self.points.iter().find(|p| p.p_fa == p_fa).map(|p| p.p_m)
    }
}

/// Statistic populations, indexed `[scheme][trial]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub h0: Vec<Vec<f64>>,
    pub h1: Vec<Vec<f64>>,
    pub host_model: HostModel,
}

/// Detector-side view of the selected blocks.
struct Received {
    coeffs: Vec<f64>,
    masks: Vec<f64>,
}

struct Engine<'a> {
    cfg: &'a TrialConfig,
    dct: Dct8,
    basis: Block,
    steps: [u16; BLOCK_LEN],
    host_model: HostModel,
    // per block, image hosts only
    x: Vec<f64>,
    masks: Vec<f64>,
    // what the detector sees for an unwatermarked image after a
    // deterministic channel (none / JPEG); host values for AWGN
    channel_x: Vec<f64>,
    channel_dc: Vec<f64>,
    channel_dc_sum: f64,
    channel_masks: Vec<f64>,
}

fn round_to_step(v: f64, q: u16) -> f64 {
    let q = f64::from(q);
    (v / q).round() * q
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a TrialConfig) -> Result<Self> {
        let dct = Dct8::new();
        let natural = cfg.zigzag_index.natural();
        let steps = match cfg.attack {
            Attack::Jpeg { quality } => cfg.quant_table.scaled(quality)?,
            _ => [1; BLOCK_LEN],
        };
        let mut engine = Engine {
            cfg,
            basis: dct.basis_image(natural),
            dct,
            steps,
            host_model: HostModel { ggd_shape: f64::NAN, cauchy_gamma: f64::NAN },
            x: Vec::new(),
            masks: Vec::new(),
            channel_x: Vec::new(),
            channel_dc: Vec::new(),
            channel_dc_sum: 0.0,
            channel_masks: Vec::new(),
        };
        let needs_ggd = cfg.schemes.iter().any(|s| s.detector() == Detector::Ggd);
        let needs_cauchy = cfg
            .schemes
            .iter()
            .any(|s| s.detector() == Detector::Cauchy || s.embedder() == Embedder::DsCauchy);

        let reference: Vec<f64> = match &cfg.host {
            HostSource::Image { image, .. } => {
                let spec = block_dct(image);
                engine.x = spec.blocks().iter().map(|b| b[natural]).collect();
                let host_dc = spec.dc();
                engine.masks = match &cfg.masks {
                    MaskSource::Watson(p) => {
                        let (dc, mean) = checked_dc(&host_dc, p.dc_policy)?;
                        (0..dc.len()).map(|k| engine.watson_mask(p, engine.x[k], dc[k], mean)).collect()
                    }
                    MaskSource::Uniform(m) => vec![*m; engine.x.len()],
                };
                let (cx, cdc) = engine.channel(image, &engine.x, &host_dc);
                engine.channel_dc_sum = cdc.iter().sum();
                engine.channel_masks = match &cfg.masks {
                    MaskSource::Watson(p) if cfg.detector_masks == DetectorMasks::Blind => {
                        let mean = engine.channel_dc_sum / cdc.len() as f64;
                        cx.iter()
                            .zip(&cdc)
                            .enumerate()
                            .map(|(k, (&x, &dc))| engine.checked_watson_mask(p, k, x, dc, mean))
                            .collect::<Result<_>>()?
                    }
                    _ => engine.masks.clone(),
                };
                engine.channel_x = cx;
                engine.channel_dc = cdc;
                engine.x.clone()
            }
            HostSource::Gaussian { sigma } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX));
                (0..10_000).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        engine.host_model = match cfg.host_model {
            Some(h) => h,
            None => host_model_for(&reference, needs_ggd, needs_cauchy)?,
        };
        Ok(engine)
    }

    /// Unwatermarked coefficients and DC terms after a deterministic channel.
    fn channel(&self, image: &Image, x: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match (self.cfg.attack, self.cfg.pipeline) {
            (Attack::Jpeg { .. }, Pipeline::Pixel) => (0..image.block_count())
                .map(|k| {
                    let out = jpeg_block(&self.dct, &image.block(k), &self.steps);
                    (dot(&out, &self.basis), out.iter().sum::<f64>() / 8.0)
                })
                .unzip(),
            (Attack::Jpeg { .. }, Pipeline::Coefficient) => {
                let q = self.steps[self.cfg.zigzag_index.natural()];
                (
                    x.iter().map(|&v| round_to_step(v, q)).collect(),
                    dc.iter().map(|&v| round_to_step(v, self.steps[0])).collect(),
                )
            }
            _ => (x.to_vec(), dc.to_vec()),
        }
    }

    fn watson_mask(&self, p: &MaskParams, coeff: f64, dc: f64, dc_mean: f64) -> f64 {
        let t = self.cfg.sensitivity.get(self.cfg.zigzag_index.natural());
        let lum = luminance_threshold(t, dc, dc_mean, p.luminance_exponent);
        match p.mode {
            MaskMode::FrequencyLuminance => lum,
            MaskMode::FrequencyLuminanceContrast => contrast_threshold(lum, coeff, p.contrast_exponent),
        }
    }

    fn checked_watson_mask(&self, p: &MaskParams, block: usize, coeff: f64, dc: f64, dc_mean: f64) -> Result<f64> {
        let dc = if dc > 0.0 {
            dc
        } else {
            match p.dc_policy {
                DcPolicy::Reject => return Err(CoreError::NonPositiveDc { block, dc }.into()),
                DcPolicy::Floor => dc.max(DC_FLOOR),
            }
        };
        Ok(self.watson_mask(p, coeff, dc, dc_mean))
    }

    fn store(&self, v: f64) -> f64 {
        if self.cfg.eight_bit {
            f64::from(to_pixel(v))
        } else {
            v.clamp(0.0, 255.0)
        }
    }

    fn attack_coefficient<R: Rng>(&self, v: f64, noise: &mut R) -> f64 {
        match self.cfg.attack {
            Attack::None => v,
            Attack::Awgn { sigma } => v + sigma * noise.sample::<f64, _>(StandardNormal),
            Attack::Jpeg { .. } => round_to_step(v, self.steps[self.cfg.zigzag_index.natural()]),
        }
    }

    /// Passes the selected blocks through the channel. `shift[j]` is the
    /// embedding change of block `idx[j]`; `None` means unwatermarked.
    fn receive<R: Rng>(&self, idx: &[usize], x: &[f64], m: &[f64], shift: Option<&[f64]>, noise: &mut R) -> Result<Received> {
        let side_masks = || m.to_vec();
        let HostSource::Image { image, .. } = &self.cfg.host else {
            let coeffs = (0..x.len())
                .map(|j| self.attack_coefficient(x[j] + shift.map_or(0.0, |s| s[j]), noise))
                .collect();
            return Ok(Received { coeffs, masks: side_masks() });
        };
        let deterministic = matches!(self.cfg.attack, Attack::None | Attack::Jpeg { .. });
        if shift.is_none() && deterministic {
            return Ok(Received {
                coeffs: idx.iter().map(|&k| self.channel_x[k]).collect(),
                masks: idx.iter().map(|&k| self.channel_masks[k]).collect(),
            });
        }

        let (coeffs, dc): (Vec<f64>, Vec<f64>) = match self.cfg.pipeline {
            Pipeline::Coefficient => idx
                .iter()
                .enumerate()
                .map(|(j, &k)| (self.attack_coefficient(x[j] + shift.map_or(0.0, |s| s[j]), noise), self.channel_dc[k]))
                .unzip(),
            Pipeline::Pixel => idx
                .iter()
                .enumerate()
                .map(|(j, &k)| {
                    let delta = shift.map_or(0.0, |s| s[j]);
                    let host = image.block(k);
                    let mut px: Block = core::array::from_fn(|n| self.store(host[n] + delta * self.basis[n]));
                    match self.cfg.attack {
                        Attack::None => {}
                        Attack::Awgn { sigma } => {
                            for p in &mut px {
                                *p = self.store(*p + sigma * noise.sample::<f64, _>(StandardNormal));
                            }
                        }
                        Attack::Jpeg { .. } => px = jpeg_block(&self.dct, &px, &self.steps),
                    }
                    (dot(&px, &self.basis), px.iter().sum::<f64>() / 8.0)
                })
                .unzip(),
        };

        let masks = match &self.cfg.masks {
            MaskSource::Watson(p) if self.cfg.detector_masks == DetectorMasks::Blind => {
                let sel_channel: f64 = idx.iter().map(|&k| self.channel_dc[k]).sum();
                let sel_received: f64 = dc.iter().sum();
                let mean = (self.channel_dc_sum - sel_channel + sel_received) / self.channel_dc.len() as f64;
                idx.iter()
                    .enumerate()
                    .map(|(j, &k)| self.checked_watson_mask(p, k, coeffs[j], dc[j], mean))
                    .collect::<Result<_>>()?
            }
            _ => side_masks(),
        };
        Ok(Received { coeffs, masks })
    }

    /// H0 and H1 statistics of every configured scheme for trial `t`.
    fn trial(&self, t: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let cfg = self.cfg;
        let trial_seed = derive_seed(cfg.seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (idx, x, m, w): (Vec<usize>, Vec<f64>, Vec<f64>, Watermark) = match &cfg.host {
            HostSource::Image { .. } => {
                let (idx, w) = select_with(&mut rng, self.x.len(), cfg.n)?;
                let x = idx.iter().map(|&k| self.x[k]).collect();
                let m = idx.iter().map(|&k| self.masks[k]).collect();
                (idx, x, m, w)
            }
            HostSource::Gaussian { sigma } => {
                let x = (0..cfg.n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                let MaskSource::Uniform(u) = cfg.masks else { unreachable!("validated") };
                (Vec::new(), x, vec![u; cfg.n], Watermark::generate_with(cfg.n, &mut rng)?)
            }
        };
        let host = &self.host_model;

        let r0 = self.receive(&idx, &x, &m, None, &mut ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, 1)))?;
        let h0 = cfg
            .schemes
            .iter()
            .map(|s| Ok(s.statistic(&r0.coeffs, &w, cfg.a, &r0.masks, host)?))
            .collect::<Result<Vec<f64>>>()?;

        // schemes sharing an embedder share the received data; every
        // embedder sees the same channel noise
        let mut received: Vec<(Embedder, Received)> = Vec::new();
        let mut h1 = Vec::with_capacity(cfg.schemes.len());
        for s in &cfg.schemes {
            let pos = match received.iter().position(|(e, _)| *e == s.embedder()) {
                Some(p) => p,
                None => {
                    let marked = s.embed(&x, &w, cfg.a, &m, host)?;
                    let shift: Vec<f64> = marked.iter().zip(&x).map(|(s, x)| s - x).collect();
                    let mut noise = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, 2));
                    received.push((s.embedder(), self.receive(&idx, &x, &m, Some(&shift), &mut noise)?));
                    received.len() - 1
                }
            };
            let r1 = &received[pos].1;
            h1.push(s.statistic(&r1.coeffs, &w, cfg.a, &r1.masks, host)?);
        }
        Ok((h0, h1))
    }
}

#[inline]
fn dot(a: &Block, b: &Block) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn in_pool<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Runs all trials; results are ordered by trial index whatever the thread count.
pub fn simulate(cfg: &TrialConfig) -> Result<Populations> {
    cfg.validate()?;
    let engine = Engine::new(cfg)?;
    let per_trial = in_pool(cfg.threads, || {
        (0..cfg.trials).into_par_iter().map(|t| engine.trial(t)).collect::<Result<Vec<_>>>()
    })??;
    let schemes = cfg.schemes.len();
    let mut h0 = vec![Vec::with_capacity(cfg.trials); schemes];
    let mut h1 = vec![Vec::with_capacity(cfg.trials); schemes];
    for (a, b) in per_trial {
        for s in 0..schemes {
            h0[s].push(a[s]);
            h1[s].push(b[s]);
        }
    }
    Ok(Populations { h0, h1, host_model: engine.host_model })
}

/// One ROC curve per configured scheme.
pub fn run_roc(cfg: &TrialConfig) -> Result<Vec<RocCurve>> {
    let pops = simulate(cfg)?;
    let grid = cfg.grid();
    cfg.schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            Ok(RocCurve {
                scheme,
                image: cfg.host.label(),
                attack: cfg.attack,
                mask_mode: cfg.masks.label(),
                a: cfg.a,
                n: cfg.n,
                trials: cfg.trials,
                points: roc_points(&pops.h0[i], &pops.h1[i], &grid, scheme.rule())?,
            })
        })
        .collect()
}

pub const CSV_HEADER: [&str; 9] = ["scheme", "image", "attack", "mask_mode", "a", "N", "trials", "p_fa", "p_m"];

pub fn write_csv<W: Write>(curves: &[RocCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.scheme.name().to_string(),
                c.image.clone(),
                c.attack.to_string(),
                c.mask_mode.clone(),
                c.a.to_string(),
                c.n.to_string(),
                c.trials.to_string(),
                p.p_fa.to_string(),
                p.p_m.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_csv(curves: &[RocCurve], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(curves, std::io::BufWriter::new(file))
}

/// Whitespace-separated `p_fa p_m` columns, one block per curve.
pub fn write_plot_data<W: Write>(curves: &[RocCurve], mut out: W) -> std::io::Result<()> {
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "# {} {} {} {} a={} N={}", c.scheme, c.image, c.attack, c.mask_mode, c.a, c.n)?;
        for p in &c.points {
            writeln!(out, "{} {}", p.p_fa, p.p_m)?;
        }
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormRow {
    pub p_fa: f64,
    pub psi: f64,
    pub predicted: f64,
    pub empirical: f64,
    pub realized_p_fa: f64,
    pub standard_error: f64,
    pub pass: bool,
}

impl ClosedFormRow {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.predicted).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormReport {
    pub n: usize,
    pub k: f64,
    pub sigma: f64,
    pub trials: usize,
    pub rows: Vec<ClosedFormRow>,
}

impl ClosedFormReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(ClosedFormRow::deviation).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub type MissFormula = fn(f64, f64, usize, f64) -> dswm_core::Result<f64>;

/// Checks the closed-form DS-ASS miss probability against simulation.
///
/// With fixed masks the double-sided correlator reduces to `|x̄|` under H0 and
/// `|x̄| + k` under H1, `x̄ ~ N(0, σ²/N)`; both are drawn directly. The
/// threshold at each grid point is the Gaussian one the formula assumes, so
/// a point passes when the simulated miss rate is within three binomial
/// standard errors of the prediction.
pub fn validate_closed_form(n: usize, k: f64, sigma: f64, pfa_grid: &[f64], trials: usize, seed: u64) -> Result<ClosedFormReport> {
    validate_closed_form_with(n, k, sigma, pfa_grid, trials, seed, dsass_miss_probability)
}

pub fn validate_closed_form_with(
    n: usize,
    k: f64,
    sigma: f64,
    pfa_grid: &[f64],
    trials: usize,
    seed: u64,
    formula: MissFormula,
) -> Result<ClosedFormReport> {
    if trials < 1 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let scale = sigma / (n as f64).sqrt();
    let draws: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t));
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            ((scale * z0).abs(), (scale * z1).abs() + k)
        })
        .collect();
    let rows = pfa_grid
        .iter()
        .map(|&p_fa| {
            let predicted = formula(p_fa, k, n, sigma)?;
            let psi = dsass_threshold(p_fa, n, sigma)?;
            let misses = draws.iter().filter(|d| d.1 <= psi).count();
            let alarms = draws.iter().filter(|d| d.0 > psi).count();
            let empirical = misses as f64 / trials as f64;
            let standard_error = binomial_standard_error(predicted, trials);
            let pass = (empirical - predicted).abs() <= 3.0 * standard_error;
            Ok(ClosedFormRow {
                p_fa,
                psi,
                predicted,
                empirical,
                realized_p_fa: alarms as f64 / trials as f64,
                standard_error,
                pass,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ClosedFormReport { n, k, sigma, trials, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dswm_core::schemes::Rule;

    fn textured(width: usize, height: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..width * height)
            .map(|i| {
                let (x, y) = ((i % width) as f64, (i / width) as f64);
                let base = 128.0 + 50.0 * (x / 9.0).sin() * (y / 13.0).cos();
                to_pixel(base + rng.random_range(-30.0..30.0))
            })
            .collect();
        Image::new(width, height, pixels).unwrap()
    }

    fn image_config(schemes: Vec<Scheme>) -> TrialConfig {
        let mut cfg = TrialConfig::new(HostSource::Image { label: "synthetic".into(), image: textured(128, 128, 3) }, schemes);
        cfg.n = 200;
        cfg.trials = 1000;
        cfg.pfa_grid = Some(vec![0.01, 0.1]);
        cfg
    }

    #[test]
    fn zero_strength_misses_at_complement_rate() {
        let mut cfg = image_config(vec![Scheme::AssCor, Scheme::Briassouli, Scheme::DsAss, Scheme::DsCauchy]);
        cfg.a = 0.0;
        cfg.trials = 2000;
        for curve in run_roc(&cfg).unwrap() {
            for p in &curve.points {
                let expected = 1.0 - p.p_fa;
                let tol = 4.0 * binomial_standard_error(expected, cfg.trials) + 1.0 / cfg.trials as f64;
                assert!((p.p_m - expected).abs() <= tol, "{}: p_fa {} p_m {}", curve.scheme, p.p_fa, p.p_m);
            }
        }
    }

    #[test]
    fn generalized_gaussian_statistic_vanishes_at_zero_strength() {
        let mut cfg = image_config(vec![Scheme::Hernandez]);
        cfg.a = 0.0;
        cfg.trials = 100;
        let pops = simulate(&cfg).unwrap();
        assert!(pops.h0[0].iter().chain(&pops.h1[0]).all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_host_matches_closed_form() {
        let sigma = 20.0;
        let n = 2000;
        let m = 1.0;
        let mut cfg = TrialConfig::new(HostSource::Gaussian { sigma }, vec![Scheme::DsAss]);
        cfg.n = n;
        cfg.a = 1.0;
        cfg.masks = MaskSource::Uniform(m);
        cfg.pipeline = Pipeline::Coefficient;
        cfg.trials = 100_000;
        cfg.pfa_grid = Some(vec![0.001, 0.01, 0.1]);
        let curve = &run_roc(&cfg).unwrap()[0];
        for p in &curve.points {
            let predicted = dsass_miss_probability(p.p_fa, m, n, sigma).unwrap();
            assert!((p.p_m - predicted).abs() <= 0.02, "p_fa {}: {} vs {}", p.p_fa, p.p_m, predicted);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mut cfg = image_config(Scheme::ALL.to_vec());
        cfg.trials = 300;
        cfg.attack = Attack::Awgn { sigma: 2.0 };
        cfg.threads = Some(1);
        let one = simulate(&cfg).unwrap();
        cfg.threads = Some(3);
        let three = simulate(&cfg).unwrap();
        assert_eq!(one, three);

        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_roc(&cfg).unwrap(), &mut a).unwrap();
        cfg.threads = Some(1);
        write_csv(&run_roc(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seed_changes_results() {
        let mut cfg = image_config(vec![Scheme::DsAss]);
        cfg.trials = 200;
        let first = simulate(&cfg).unwrap();
        cfg.seed = 1;
        assert_ne!(first.h0, simulate(&cfg).unwrap().h0);
    }

    #[test]
    fn rejects_unresolvable_false_alarm_rate() {
        let mut cfg = image_config(vec![Scheme::DsAss]);
        cfg.trials = 100;
        cfg.pfa_grid = Some(vec![1e-4]);
        assert!(matches!(run_roc(&cfg), Err(Error::Core(CoreError::Resolution { .. }))));
        cfg.pfa_grid = Some(vec![0.01]);
        assert!(run_roc(&cfg).is_ok());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = image_config(vec![Scheme::DsAss]);
        cfg.n = 10_000;
        assert!(cfg.validate().is_err());
        cfg.n = 201;
        assert!(cfg.validate().is_err());
        cfg.n = 200;
        cfg.pfa_grid = Some(vec![0.1, 0.01]);
        assert!(cfg.validate().is_err());
        cfg.pfa_grid = None;
        cfg.schemes.clear();
        assert!(cfg.validate().is_err());

        let mut gauss = TrialConfig::new(HostSource::Gaussian { sigma: 1.0 }, vec![Scheme::DsAss]);
        gauss.pipeline = Pipeline::Coefficient;
        assert!(gauss.validate().is_err());
        gauss.masks = MaskSource::Uniform(1.0);
        assert!(gauss.validate().is_ok());
    }

    #[test]
    fn miss_rate_is_monotone_in_false_alarm_rate() {
        let mut cfg = image_config(Scheme::ALL.to_vec());
        cfg.pfa_grid = None;
        cfg.masks = MaskSource::Watson(MaskParams::new(MaskMode::FrequencyLuminanceContrast));
        cfg.a = 0.3;
        for curve in run_roc(&cfg).unwrap() {
            assert!(curve.points.windows(2).all(|w| w[1].p_m <= w[0].p_m), "{}", curve.scheme);
        }
    }

    #[test]
    fn side_information_masks_differ_from_blind_under_contrast_masking() {
        let mut cfg = image_config(vec![Scheme::Hernandez]);
        cfg.trials = 100;
        cfg.masks = MaskSource::Watson(MaskParams::new(MaskMode::FrequencyLuminanceContrast));
        let blind = simulate(&cfg).unwrap();
        cfg.detector_masks = DetectorMasks::SideInfo;
        let side = simulate(&cfg).unwrap();
        assert_eq!(blind.h0, side.h0);
        assert_ne!(blind.h1, side.h1);
    }

    #[test]
    fn strong_watermark_is_always_found() {
        let mut cfg = image_config(Scheme::ALL.to_vec());
        cfg.a = 10.0;
        cfg.trials = 500;
        for curve in run_roc(&cfg).unwrap() {
            assert_eq!(curve.p_m_at(0.01), Some(0.0), "{}", curve.scheme);
        }
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "scheme,image,attack,mask_mode,a,N,trials,p_fa,p_m\n");

        let curve = RocCurve {
            scheme: Scheme::DsAss,
            image: "lena".into(),
            attack: Attack::Jpeg { quality: 50 },
            mask_mode: "freq-lum".into(),
            a: 0.5,
            n: 2000,
            trials: 100,
            points: vec![RocPoint { p_fa: 0.01, p_m: 0.25 }, RocPoint { p_fa: 0.1, p_m: 0.125 }],
        };
        let mut out = Vec::new();
        write_csv(std::slice::from_ref(&curve), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "DS-ASS,lena,jpeg:50,freq-lum,0.5,2000,100,0.01,0.25");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        export_csv(std::slice::from_ref(&curve), &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        export_csv(&[curve], &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        assert_eq!(first, text.as_bytes());
    }

    #[test]
    fn plot_data_layout() {
        let curve = RocCurve {
            scheme: Scheme::AssCor,
            image: "x".into(),
            attack: Attack::None,
            mask_mode: "uniform:1".into(),
            a: 1.0,
            n: 4,
            trials: 10,
            points: vec![RocPoint { p_fa: 0.1, p_m: 0.5 }],
        };
        let mut out = Vec::new();
        write_plot_data(&[curve.clone(), curve], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
        assert_eq!(text.lines().filter(|l| *l == "0.1 0.5").count(), 2);
    }

    #[test]
    fn closed_form_holds_without_watermark() {
        let report = validate_closed_form(2000, 0.0, 20.0, &[0.001, 0.01, 0.1], 20_000, 4).unwrap();
        assert!(report.passed(), "{report:?}");
        for r in &report.rows {
            assert!((r.predicted - (1.0 - r.p_fa)).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_far_branch_has_no_misses() {
        let sigma = 20.0;
        let n = 2000;
        let k = 3.0 * sigma / (n as f64).sqrt();
        let report = validate_closed_form(n, k, sigma, &[0.01], 20_000, 5).unwrap();
        assert!(report.passed());
        assert_eq!(report.rows[0].predicted, 0.0);
        assert_eq!(report.rows[0].empirical, 0.0);
    }

    #[test]
    fn closed_form_check_catches_a_wrong_formula() {
        fn flipped(p_fa: f64, k: f64, n: usize, sigma: f64) -> dswm_core::Result<f64> {
            let q = dswm_core::stats::q_inverse(p_fa / 2.0)?;
            Ok(1.0 - 2.0 * dswm_core::stats::q_function(q + k * (n as f64).sqrt() / sigma))
        }
        let sigma = 20.0;
        let n = 2000;
        let k = sigma / (n as f64).sqrt();
        let report = validate_closed_form_with(n, k, sigma, &[0.01], 20_000, 6, flipped).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn double_sided_rule_is_used_for_double_sided_schemes() {
        assert_eq!(Scheme::DsAss.rule(), Rule::DoubleSided);
        assert_eq!(Scheme::AssCor.rule(), Rule::SingleSided);
    }
}
