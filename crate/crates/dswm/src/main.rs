use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dswm_tools::harness::{self, DetectorMasks, HostSource, MaskSource, Pipeline, TrialConfig};
use dswm_tools::protocol::{self, DetectOptions, EmbedOptions, Threshold};
use dswm_tools::sidecar::Sidecar;
use dswm_tools::{pgm, tables, Error, Result};
use dswm_core::attacks::{Attack, QuantTable};
use dswm_core::blockdct::ZigzagIndex;
use dswm_core::schemes::{Decision, Detector, Rule, Scheme};
use dswm_core::watson::{DcPolicy, MaskMode, MaskParams, SensitivityTable};

#[derive(Parser)]
#[command(name = "dswm", version, about = "Perceptual DCT-domain spread-spectrum watermarking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit GGD and Cauchy models to one zigzag coefficient of an image.
    Estimate(EstimateArgs),
    /// Embed a watermark; writes the marked image and a sidecar.
    Embed(EmbedArgs),
    /// Test an image for the watermark described by a sidecar (exit 0 = H1, 1 = H0).
    Detect(DetectArgs),
    /// Apply an attack channel to an image.
    Attack(AttackArgs),
    /// Monte Carlo ROC curves for one or more schemes.
    Roc(RocArgs),
    /// Check the closed-form DS-ASS miss probability by simulation (exit 1 on failure).
    Validate(ValidateArgs),
}

#[derive(Args)]
struct EstimateArgs {
    image: PathBuf,
    #[arg(long, default_value_t = 5)]
    zigzag_index: usize,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, default_value = "freq-lum", value_parser = ["freq-lum", "freq-lum-contrast"])]
    mask_mode: String,
    /// Clamp non-positive DC terms to 1e-6 instead of failing.
    #[arg(long)]
    dc_floor: bool,
    /// 8x8 frequency-sensitivity table (text); defaults to Watson's table.
    #[arg(long)]
    sensitivity_table: Option<PathBuf>,
}

impl MaskArgs {
    fn params(&self) -> Result<MaskParams> {
        let mut p = MaskParams::new(self.mask_mode.parse::<MaskMode>()?);
        if self.dc_floor {
            p.dc_policy = DcPolicy::Floor;
        }
        Ok(p)
    }

    fn table(&self) -> Result<SensitivityTable> {
        self.sensitivity_table.as_ref().map_or_else(|| Ok(SensitivityTable::watson()), tables::load_sensitivity_table)
    }
}

#[derive(Args)]
struct EmbedArgs {
    image: PathBuf,
    #[arg(long, default_value = "DS-ASS")]
    scheme: Scheme,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(short = 'N', long = "N", visible_alias = "n", default_value_t = 2000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    zigzag_index: usize,
    #[command(flatten)]
    masks: MaskArgs,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with `.sidecar` appended.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Single,
    Double,
}

#[derive(Args)]
struct DetectArgs {
    image: PathBuf,
    #[arg(long)]
    sidecar: PathBuf,
    /// correlator, ggd or cauchy; defaults to the embedded scheme's detector.
    #[arg(long)]
    detector: Option<Detector>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    #[arg(long, conflicts_with = "pfa", required_unless_present = "pfa")]
    psi: Option<f64>,
    /// Calibrate the threshold to this false-alarm rate with random watermarks.
    #[arg(long)]
    pfa: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    calibration_trials: usize,
    #[arg(long)]
    sensitivity_table: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    image: PathBuf,
    /// none, awgn:<sigma> or jpeg:<quality>
    #[arg(long)]
    attack: Attack,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    quant_table: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorMasksArg {
    Blind,
    Side,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Pixel,
    Coefficient,
}

#[derive(Args)]
struct RocArgs {
    /// Host image; omit when using --gaussian-host.
    #[arg(required_unless_present = "gaussian_host")]
    image: Option<PathBuf>,
    /// Synthetic i.i.d. Gaussian host with this standard deviation.
    #[arg(long, conflicts_with = "image", requires = "uniform_mask")]
    gaussian_host: Option<f64>,
    /// Comma-separated scheme names, or `all`.
    #[arg(long, default_value = "all")]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(short = 'N', long = "N", visible_alias = "n", default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    zigzag_index: usize,
    #[command(flatten)]
    masks: MaskArgs,
    /// Use this constant mask instead of Watson's model.
    #[arg(long)]
    uniform_mask: Option<f64>,
    #[arg(long, value_enum, default_value = "blind")]
    detector_masks: DetectorMasksArg,
    #[arg(long, default_value = "none")]
    attack: Attack,
    #[arg(long, value_enum, default_value = "pixel")]
    pipeline: PipelineArg,
    /// Round marked and attacked pixels to 8 bits.
    #[arg(long)]
    eight_bit: bool,
    #[arg(long)]
    quant_table: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated false-alarm targets; default 1e-3..0.5 bounded by 10/trials.
    #[arg(long, value_delimiter = ',')]
    pfa_grid: Option<Vec<f64>>,
    #[arg(long)]
    threads: Option<usize>,
    /// Image name written to the CSV; defaults to the file stem.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also write whitespace-separated `p_fa p_m` columns here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(short = 'N', long = "N", visible_alias = "n", default_value_t = 2000)]
    n: usize,
    /// Mean displacement; defaults to sigma/sqrt(N), i.e. k*sqrt(N)/sigma = 1.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1")]
    pfa_grid: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_quant(path: &Option<PathBuf>) -> Result<QuantTable> {
    path.as_ref().map_or_else(|| Ok(QuantTable::jpeg_luminance()), tables::load_quant_table)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    if list.eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    list.split(',').map(|s| Ok(s.trim().parse()?)).collect()
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Error::Io { path: PathBuf::from("<stdout>"), source: e })?
    };
}

fn estimate(args: EstimateArgs, out: &mut dyn Write) -> Result<u8> {
    let img = pgm::read_pgm(&args.image)?;
    let e = protocol::estimate(&img, ZigzagIndex::new(args.zigzag_index)?)?;
    say!(out, "c={}", e.c);
    say!(out, "sigma_x={}", e.sigma_x);
    say!(out, "gamma={}", e.gamma);
    say!(out, "samples={}", e.samples);
    Ok(0)
}

fn embed(args: EmbedArgs, out: &mut dyn Write) -> Result<u8> {
    let img = pgm::read_pgm(&args.image)?;
    let opts = EmbedOptions {
        scheme: args.scheme,
        a: args.a,
        n: args.n,
        seed: args.seed,
        zigzag_index: ZigzagIndex::new(args.zigzag_index)?,
        mask_params: args.masks.params()?,
        sensitivity: args.masks.table()?,
    };
    let marked = protocol::embed_image(&img, &opts)?;
    pgm::write_pgm(&args.out, &marked.image)?;
    let sidecar_path = args.sidecar.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".sidecar");
        p.into()
    });
    marked.sidecar.save(&sidecar_path)?;
    say!(out, "psnr={}", marked.psnr);
    say!(out, "sidecar={}", sidecar_path.display());
    Ok(0)
}

fn detect(args: DetectArgs, out: &mut dyn Write) -> Result<u8> {
    let img = pgm::read_pgm(&args.image)?;
    let sidecar = Sidecar::load(&args.sidecar)?;
    let threshold = match (args.psi, args.pfa) {
        (Some(psi), _) => Threshold::Psi(psi),
        (None, Some(p_fa)) => Threshold::FalseAlarm { p_fa, trials: args.calibration_trials },
        (None, None) => unreachable!("clap requires one of --psi/--pfa"),
    };
    let opts = DetectOptions {
        detector: args.detector,
        rule: args.rule.map(|r| match r {
            RuleArg::Single => Rule::SingleSided,
            RuleArg::Double => Rule::DoubleSided,
        }),
        threshold,
        sensitivity: args
            .sensitivity_table
            .as_ref()
            .map_or_else(|| Ok(SensitivityTable::watson()), tables::load_sensitivity_table)?,
    };
    let d = protocol::detect_image(&img, &sidecar, &opts)?;
    say!(out, "detector={}", d.detector.as_str());
    say!(out, "rule={}", if d.result.rule == Rule::DoubleSided { "double" } else { "single" });
    say!(out, "statistic={}", d.result.statistic);
    say!(out, "threshold={}", d.result.threshold);
    Ok(match d.result.decision {
        Decision::H1 => {
            say!(out, "decision=H1");
            0
        }
        Decision::H0 => {
            say!(out, "decision=H0");
            1
        }
    })
}

fn attack(args: AttackArgs, out: &mut dyn Write) -> Result<u8> {
    let img = pgm::read_pgm(&args.image)?;
    let attacked = match args.attack {
        Attack::Jpeg { quality } => dswm_core::attacks::attack_jpeg_with(&img, &load_quant(&args.quant_table)?, quality)?,
        other => other.apply(&img, args.seed)?,
    };
    pgm::write_pgm(&args.out, &attacked)?;
    say!(out, "psnr={}", img.psnr(&attacked)?);
    Ok(0)
}

fn roc(args: RocArgs, out: &mut dyn Write) -> Result<u8> {
    let host = match (&args.image, args.gaussian_host) {
        (Some(path), _) => HostSource::Image {
            label: args.label.clone().unwrap_or_else(|| stem(path)),
            image: pgm::read_pgm(path)?,
        },
        (None, Some(sigma)) => HostSource::Gaussian { sigma },
        (None, None) => unreachable!("clap requires an image or --gaussian-host"),
    };
    let mut cfg = TrialConfig::new(host, parse_schemes(&args.scheme)?);
    cfg.zigzag_index = ZigzagIndex::new(args.zigzag_index)?;
    cfg.n = args.n;
    cfg.a = args.a;
    cfg.masks = match args.uniform_mask {
        Some(m) => MaskSource::Uniform(m),
        None => MaskSource::Watson(args.masks.params()?),
    };
    cfg.sensitivity = args.masks.table()?;
    cfg.detector_masks = match args.detector_masks {
        DetectorMasksArg::Blind => DetectorMasks::Blind,
        DetectorMasksArg::Side => DetectorMasks::SideInfo,
    };
    cfg.attack = args.attack;
    cfg.pipeline = match (args.pipeline, args.gaussian_host) {
        (_, Some(_)) | (PipelineArg::Coefficient, _) => Pipeline::Coefficient,
        (PipelineArg::Pixel, None) => Pipeline::Pixel,
    };
    cfg.eight_bit = args.eight_bit;
    cfg.quant_table = load_quant(&args.quant_table)?;
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    cfg.pfa_grid = args.pfa_grid;
    cfg.threads = args.threads;

    let curves = harness::run_roc(&cfg)?;
    harness::export_csv(&curves, &args.out)?;
    if let Some(path) = &args.plot_data {
        let file = File::create(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        harness::write_plot_data(&curves, BufWriter::new(file))
            .map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    for c in &curves {
        let summary: Vec<String> = c.points.iter().map(|p| format!("{}:{}", p.p_fa, p.p_m)).collect();
        say!(out, "{} {}", c.scheme, summary.join(" "));
    }
    Ok(0)
}

fn validate(args: ValidateArgs, out: &mut dyn Write) -> Result<u8> {
    let k = args.k.unwrap_or(args.sigma / (args.n as f64).sqrt());
    let report = harness::validate_closed_form(args.n, k, args.sigma, &args.pfa_grid, args.trials, args.seed)?;
    say!(out, "N={} k={} sigma={} trials={}", report.n, report.k, report.sigma, report.trials);
    for r in &report.rows {
        say!(out, 
            "p_fa={} psi={} predicted={:.6} empirical={:.6} se={:.6} realized_p_fa={:.6} {}",
            r.p_fa,
            r.psi,
            r.predicted,
            r.empirical,
            r.standard_error,
            r.realized_p_fa,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    say!(out, "max_deviation={}", report.max_deviation());
    if report.passed() {
        say!(out, "result=PASS");
        Ok(0)
    } else {
        say!(out, "result=FAIL");
        Ok(1)
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Estimate(a) => estimate(a, out),
        Command::Embed(a) => embed(a, out),
        Command::Detect(a) => detect(a, out),
        Command::Attack(a) => attack(a, out),
        Command::Roc(a) => roc(a, out),
        Command::Validate(a) => validate(a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
