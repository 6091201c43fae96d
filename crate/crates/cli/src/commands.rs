use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kernelexpand::eval::{iou, match_image, report, MatchReport};
use kernelexpand::labelgen::gen_labels;
use kernelexpand::loss::gradcheck::run_suite;
use kernelexpand::loss::total_loss;
use kernelexpand::postprocess::detect;
use kernelexpand::synth::{synth_layout, ShapeKind};
use kernelexpand::{
    DetectedInstance, InstanceLabel, LabelConfig, LabelMaps, LossBreakdown, LossWeights,
    PostprocessConfig, PredMaps, Raster, VectorField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annotations::{
    format_annotation, format_detections, parse_detections, read_annotation_dir, AnnotationFormat,
    AnnotationRecord,
};
use crate::error::{CliError, Result};
use crate::fsutil::{ensure_dir, image_id, list_files, read_text, write_atomic};
use crate::maptensor::{read_map, write_map, MapTensor};
use crate::pgm::export_pgm;

pub const LABELS_SUFFIX: &str = ".labels.ekmp";
pub const META_SUFFIX: &str = ".meta";
pub const PRED_SUFFIX: &str = ".pred.ekmp";

/// Channel order of label tensors.
pub const LABEL_CHANNELS: [&str; 7] = [
    "kernel",
    "threshold",
    "expand_dx",
    "expand_dy",
    "expand_valid",
    "threshold_region",
    "instance_id",
];
/// Channel order of prediction tensors.
pub const PRED_CHANNELS: [&str; 4] = ["kernel_prob", "thresh", "expand_dx", "expand_dy"];

#[derive(Debug, Parser)]
#[command(
    name = "kernelexpand",
    version,
    about = "Kernel/expand-field text detection labels, losses and evaluation"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate label tensors from annotation files.
    GenLabels(GenLabelsArgs),
    /// Render the predictions a perfect model would make from label tensors.
    RenderPred(RenderPredArgs),
    /// Reconstruct polygons from prediction tensors.
    Postprocess(PostprocessArgs),
    /// Match detections against annotations and report P/R/F.
    Evaluate(EvaluateArgs),
    /// Evaluate the training loss of predictions against labels.
    Loss(LossArgs),
    /// Check analytic loss gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Labels -> perfect predictions -> polygons -> evaluation.
    Roundtrip(RoundtripArgs),
    /// Write synthetic annotation files.
    Synth(SynthArgs),
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("size {s:?} is not HxW"))?;
    let dim = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0 && n <= 1 << 15)
            .ok_or_else(|| format!("bad dimension {v:?} in {s:?}"))
    };
    Ok((dim(h)?, dim(w)?))
}

#[derive(Debug, Args)]
pub struct GenLabelsArgs {
    /// Annotation format: icdar15 or ctw1500.
    #[arg(long)]
    pub format: AnnotationFormat,
    /// Directory of annotation .txt files.
    #[arg(long)]
    pub ann: PathBuf,
    /// Image size as HxW.
    #[arg(long, value_parser = parse_size)]
    pub size: (usize, usize),
    /// Output directory for label tensors.
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel shrink ratio r.
    #[arg(long, default_value_t = 0.4)]
    pub shrink_ratio: f64,
    /// Also write PGM previews of the kernel and threshold maps.
    #[arg(long)]
    pub pgm: bool,
}

#[derive(Debug, Args)]
pub struct RenderPredArgs {
    /// Directory written by gen-labels.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for prediction tensors.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    /// Directory of prediction tensors.
    #[arg(long)]
    pub pred: PathBuf,
    /// Output directory for detection files.
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel probability threshold.
    #[arg(long, default_value_t = 0.5)]
    pub bin_thresh: f64,
    /// Smallest kernel component kept, in pixels.
    #[arg(long, default_value_t = 16)]
    pub min_area: usize,
    /// Binarization steepness.
    #[arg(long, default_value_t = 50.0)]
    pub k: f64,
    /// Longest expand vector allowed to attach a pixel (unbounded if unset).
    #[arg(long)]
    pub max_expand: Option<f64>,
    /// Douglas-Peucker tolerance in pixels.
    #[arg(long, default_value_t = 2.0)]
    pub simplify_eps: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of detection files.
    #[arg(long)]
    pub det: PathBuf,
    /// Directory of annotation files.
    #[arg(long)]
    pub gt: PathBuf,
    /// Annotation format: icdar15 or ctw1500.
    #[arg(long)]
    pub format: AnnotationFormat,
    /// IoU needed for a match.
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Directory of prediction tensors.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory written by gen-labels.
    #[arg(long)]
    pub labels: PathBuf,
    /// Weight of the two kernel terms.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Weight of the threshold term.
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// Weight of the expand term.
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    /// Binarization steepness.
    #[arg(long, default_value_t = 50.0)]
    pub k: f64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random points per loss term.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Coordinates probed per point.
    #[arg(long, default_value_t = 8)]
    pub per_point: usize,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Annotation format: icdar15 or ctw1500.
    #[arg(long)]
    pub format: AnnotationFormat,
    /// Directory of annotation files.
    #[arg(long)]
    pub ann: PathBuf,
    /// Image size as HxW.
    #[arg(long, value_parser = parse_size)]
    pub size: (usize, usize),
    /// IoU needed for a match.
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    /// Kernel shrink ratio r.
    #[arg(long, default_value_t = 0.4)]
    pub shrink_ratio: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// icdar15 writes quadrilaterals, ctw1500 writes 14-point curved bands.
    #[arg(long)]
    pub format: AnnotationFormat,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, value_parser = parse_size, default_value = "256x256")]
    pub size: (usize, usize),
    /// Instances attempted per image.
    #[arg(long, default_value_t = 3)]
    pub instances: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    crate::error::EXIT_VALIDATION
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::GenLabels(a) => gen_labels_cmd(a, out),
        Command::RenderPred(a) => render_pred_cmd(a, out),
        Command::Postprocess(a) => postprocess_cmd(a, out),
        Command::Evaluate(a) => evaluate_cmd(a, out),
        Command::Loss(a) => loss_cmd(a, out),
        Command::Gradcheck(a) => gradcheck_cmd(a, cli.seed, out),
        Command::Roundtrip(a) => roundtrip_cmd(a, out),
        Command::Synth(a) => synth_cmd(a, cli.seed, out),
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

fn label_config(shrink_ratio: f64) -> Result<LabelConfig> {
    if !(shrink_ratio > 0.0 && shrink_ratio <= 1.0) {
        return Err(CliError::Invalid(format!(
            "shrink ratio {shrink_ratio} outside (0, 1]"
        )));
    }
    Ok(LabelConfig {
        shrink_ratio,
        ..LabelConfig::default()
    })
}

fn instance_labels(rec: &AnnotationRecord) -> Vec<InstanceLabel> {
    rec.instances
        .iter()
        .map(|g| InstanceLabel {
            polygon: g.polygon.clone(),
            ignore: g.ignore,
        })
        .collect()
}

fn bool_raster(m: &Raster<bool>) -> Raster<f64> {
    m.map(|&b| if b { 1.0 } else { 0.0 })
}

pub fn labels_to_tensor(labels: &LabelMaps) -> MapTensor {
    let channels = [
        bool_raster(&labels.kernel_mask),
        labels.threshold_map.clone(),
        labels.expand_field.dx.clone(),
        labels.expand_field.dy.clone(),
        bool_raster(&labels.expand_valid),
        bool_raster(&labels.threshold_region),
        labels.instance_id.map(|&i| f64::from(i)),
    ];
    MapTensor::from_channels(&channels).expect("label rasters share a shape and are finite")
}

pub fn format_meta(labels: &LabelMaps) -> String {
    let ignore: Vec<&str> = labels
        .ignore
        .iter()
        .map(|&b| if b { "1" } else { "0" })
        .collect();
    format!(
        "mean_shrink={}\nignore={}\n",
        labels.mean_shrink,
        ignore.join(",")
    )
}

fn parse_meta(path: &Path, text: &str) -> Result<(f64, Vec<bool>)> {
    let bad = |line: usize, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut mean_shrink = None;
    let mut ignore = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        match key.trim() {
            "mean_shrink" => {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(i + 1, format!("bad mean_shrink {value:?}")))?;
                mean_shrink = Some(v);
            }
            "ignore" if !value.trim().is_empty() => {
                ignore = value.split(',').map(|f| f.trim() == "1").collect();
            }
            _ => {}
        }
    }
    let mean_shrink = mean_shrink.ok_or_else(|| bad(0, "missing mean_shrink".into()))?;
    Ok((mean_shrink, ignore))
}

fn to_mask(r: &Raster<f64>) -> Raster<bool> {
    r.map(|&v| v > 0.5)
}

fn channel(path: &Path, t: &MapTensor, i: usize) -> Result<Raster<f64>> {
    t.channel(i).map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `<id>.labels.ekmp` and its `<id>.meta` sidecar.
pub fn read_labels(path: &Path) -> Result<LabelMaps> {
    let t = read_map(path)?;
    if t.channels != LABEL_CHANNELS.len() {
        return Err(CliError::Invalid(format!(
            "{}: expected {} label channels, found {}",
            path.display(),
            LABEL_CHANNELS.len(),
            t.channels
        )));
    }
    let id = image_id(path, LABELS_SUFFIX);
    let meta_path = path.with_file_name(format!("{id}{META_SUFFIX}"));
    let (mean_shrink, ignore) = parse_meta(&meta_path, &read_text(&meta_path)?)?;
    let ch = |i| channel(path, &t, i);
    Ok(LabelMaps {
        kernel_mask: to_mask(&ch(0)?),
        threshold_map: ch(1)?,
        expand_field: VectorField {
            dx: ch(2)?,
            dy: ch(3)?,
        },
        expand_valid: to_mask(&ch(4)?),
        threshold_region: to_mask(&ch(5)?),
        instance_id: ch(6)?.map(|&v| v.round().max(0.0) as u32),
        ignore,
        mean_shrink,
    })
}

pub fn pred_to_tensor(pred: &PredMaps) -> MapTensor {
    let channels = [
        pred.kernel_prob.clone(),
        pred.thresh.clone(),
        pred.expand.dx.clone(),
        pred.expand.dy.clone(),
    ];
    MapTensor::from_channels(&channels).expect("prediction rasters share a shape and are finite")
}

pub fn read_pred(path: &Path) -> Result<PredMaps> {
    let t = read_map(path)?;
    if t.channels != PRED_CHANNELS.len() {
        return Err(CliError::Invalid(format!(
            "{}: expected {} prediction channels, found {}",
            path.display(),
            PRED_CHANNELS.len(),
            t.channels
        )));
    }
    let ch = |i| channel(path, &t, i);
    Ok(PredMaps::new(
        ch(0)?,
        ch(1)?,
        VectorField {
            dx: ch(2)?,
            dy: ch(3)?,
        },
    )?)
}

fn gen_labels_cmd(a: &GenLabelsArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = label_config(a.shrink_ratio)?;
    let records = read_annotation_dir(&a.ann, a.format)?;
    let (h, w) = a.size;
    ensure_dir(&a.out)?;
    for rec in &records {
        let labels = gen_labels(&instance_labels(rec), h, w, &cfg)?;
        let id = &rec.image_id;
        write_map(
            &a.out.join(format!("{id}{LABELS_SUFFIX}")),
            &labels_to_tensor(&labels),
        )?;
        write_atomic(
            &a.out.join(format!("{id}{META_SUFFIX}")),
            format_meta(&labels).as_bytes(),
        )?;
        if a.pgm {
            export_pgm(
                &bool_raster(&labels.kernel_mask),
                &a.out.join(format!("{id}.kernel.pgm")),
            )?;
            export_pgm(
                &labels.threshold_map,
                &a.out.join(format!("{id}.threshold.pgm")),
            )?;
            let dist = Raster::from_vec(
                h,
                w,
                (0..h * w)
                    .map(|i| {
                        labels.expand_field.dx.data()[i].hypot(labels.expand_field.dy.data()[i])
                    })
                    .collect(),
            )?;
            export_pgm(&dist, &a.out.join(format!("{id}.expand.pgm")))?;
        }
        say(
            out,
            format_args!(
                "{id} instances={} mean_shrink={:.4}",
                rec.instances.len(),
                labels.mean_shrink
            ),
        )?;
    }
    say(out, format_args!("images={}", records.len()))
}

fn render_pred_cmd(a: &RenderPredArgs, out: &mut dyn Write) -> Result<()> {
    let paths = list_files(&a.labels, LABELS_SUFFIX)?;
    let all = paths
        .iter()
        .map(|p| Ok((image_id(p, LABELS_SUFFIX), read_labels(p)?)))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&a.out)?;
    for (id, labels) in &all {
        let pred = PredMaps::from_labels(labels);
        write_map(
            &a.out.join(format!("{id}{PRED_SUFFIX}")),
            &pred_to_tensor(&pred),
        )?;
    }
    say(out, format_args!("images={}", all.len()))
}

fn postprocess_cmd(a: &PostprocessArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = PostprocessConfig {
        bin_thresh: a.bin_thresh,
        min_component_area: a.min_area,
        k: a.k,
        max_expand: a.max_expand,
        simplify_eps: a.simplify_eps,
    };
    cfg.validate()?;
    let paths = list_files(&a.pred, PRED_SUFFIX)?;
    let preds = paths
        .iter()
        .map(|p| Ok((image_id(p, PRED_SUFFIX), read_pred(p)?)))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&a.out)?;
    for (id, pred) in &preds {
        let dets = detect(pred, &cfg)?;
        write_atomic(
            &a.out.join(format!("{id}.txt")),
            format_detections(&dets).as_bytes(),
        )?;
        say(out, format_args!("{id} detections={}", dets.len()))?;
    }
    say(out, format_args!("images={}", preds.len()))
}

fn print_report(r: &MatchReport, out: &mut dyn Write) -> Result<()> {
    let width = r
        .per_image
        .iter()
        .map(|(id, _)| id.len())
        .max()
        .unwrap_or(0)
        .max(5);
    say(
        out,
        format_args!("{:<width$}  {:>6} {:>6} {:>6}", "image", "tp", "fp", "fn"),
    )?;
    for (id, c) in &r.per_image {
        say(
            out,
            format_args!("{id:<width$}  {:>6} {:>6} {:>6}", c.tp, c.fp, c.fn_),
        )?;
    }
    say(
        out,
        format_args!("{:<width$}  {:>6} {:>6} {:>6}", "total", r.tp, r.fp, r.fn_),
    )?;
    say(out, format_args!("tp={}", r.tp))?;
    say(out, format_args!("fp={}", r.fp))?;
    say(out, format_args!("fn={}", r.fn_))?;
    say(out, format_args!("precision={:.6}", r.precision))?;
    say(out, format_args!("recall={:.6}", r.recall))?;
    say(out, format_args!("fmeasure={:.6}", r.f_measure))
}

fn check_iou(v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "iou threshold {v} outside (0, 1]"
        )))
    }
}

fn evaluate_cmd(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    check_iou(a.iou)?;
    let gts = read_annotation_dir(&a.gt, a.format)?;
    let mut dets: std::collections::BTreeMap<String, Vec<DetectedInstance>> = Default::default();
    for path in list_files(&a.det, ".txt")? {
        let parsed = parse_detections(&read_text(&path)?).map_err(|e| e.at(&path))?;
        dets.insert(image_id(&path, ".txt"), parsed);
    }
    let mut per_image = Vec::new();
    for rec in &gts {
        let d = dets.remove(&rec.image_id).unwrap_or_default();
        per_image.push((rec.image_id.clone(), match_image(&d, &rec.instances, a.iou)));
    }
    // Detections for images without annotations are all false positives.
    for (id, d) in dets {
        per_image.push((id, match_image(&d, &[], a.iou)));
    }
    print_report(&report(per_image), out)
}

fn loss_cmd(a: &LossArgs, out: &mut dyn Write) -> Result<()> {
    let weights = LossWeights {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        k: a.k,
        ..LossWeights::default()
    };
    weights.validate()?;
    let paths = list_files(&a.labels, LABELS_SUFFIX)?;
    if paths.is_empty() {
        return Err(CliError::Invalid(format!(
            "no label files in {}",
            a.labels.display()
        )));
    }
    let mut sum = [0.0; 5];
    for path in &paths {
        let id = image_id(path, LABELS_SUFFIX);
        let labels = read_labels(path)?;
        let pred = read_pred(&a.pred.join(format!("{id}{PRED_SUFFIX}")))?;
        if pred.shape() != labels.shape() {
            return Err(CliError::Invalid(format!(
                "{id}: prediction {:?} and labels {:?} differ in shape",
                pred.shape(),
                labels.shape()
            )));
        }
        let b = total_loss(&pred, &labels, &weights)?;
        say(out, format_args!("{id} {}", breakdown_line(&b)))?;
        for (s, v) in sum.iter_mut().zip([b.l_kp, b.l_kb, b.l_t, b.l_e, b.total]) {
            *s += v;
        }
    }
    let n = paths.len() as f64;
    let mean = LossBreakdown {
        l_kp: sum[0] / n,
        l_kb: sum[1] / n,
        l_t: sum[2] / n,
        l_e: sum[3] / n,
        total: sum[4] / n,
    };
    for (k, v) in [
        ("l_kp", mean.l_kp),
        ("l_kb", mean.l_kb),
        ("l_t", mean.l_t),
        ("l_e", mean.l_e),
        ("total", mean.total),
    ] {
        say(out, format_args!("{k}={v:.9}"))?;
    }
    Ok(())
}

fn breakdown_line(b: &LossBreakdown) -> String {
    format!(
        "l_kp={:.9} l_kb={:.9} l_t={:.9} l_e={:.9} total={:.9}",
        b.l_kp, b.l_kb, b.l_t, b.l_e, b.total
    )
}

fn gradcheck_cmd(a: &GradcheckArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if a.points == 0 || a.per_point == 0 {
        return Err(CliError::Invalid(
            "points and per-point must be positive".into(),
        ));
    }
    let reports = run_suite(seed, a.points, a.per_point);
    for r in &reports {
        say(
            out,
            format_args!(
                "{} points={} coordinates={} max_rel_error={:.3e} tolerance={:.0e} {}",
                r.name,
                r.points,
                r.coordinates,
                r.max_rel_error,
                r.tolerance,
                if r.passed() { "PASS" } else { "FAIL" }
            ),
        )?;
    }
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(CliError::Invalid(format!(
            "gradient check failed for {}",
            r.name
        ))),
        None => Ok(()),
    }
}

/// Per-instance best IoU of the round trip on one image, and the matching
/// counts.
pub fn roundtrip_image(
    rec: &AnnotationRecord,
    size: (usize, usize),
    cfg: &LabelConfig,
    iou_thresh: f64,
) -> Result<(Vec<f64>, kernelexpand::ImageCounts)> {
    let labels = gen_labels(&instance_labels(rec), size.0, size.1, cfg)?;
    let pred = PredMaps::from_labels(&labels);
    let pp = PostprocessConfig::default().with_mean_shrink(labels.mean_shrink);
    let dets = detect(&pred, &pp)?;
    let ious = rec
        .instances
        .iter()
        .filter(|g| !g.ignore)
        .map(|g| {
            dets.iter()
                .map(|d| iou(&d.polygon, &g.polygon))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok((ious, match_image(&dets, &rec.instances, iou_thresh)))
}

fn roundtrip_cmd(a: &RoundtripArgs, out: &mut dyn Write) -> Result<()> {
    check_iou(a.iou)?;
    let cfg = label_config(a.shrink_ratio)?;
    let records = read_annotation_dir(&a.ann, a.format)?;
    let mut all = Vec::new();
    let mut per_image = Vec::new();
    for rec in &records {
        let (ious, counts) = roundtrip_image(rec, a.size, &cfg, a.iou)?;
        for (i, v) in ious.iter().enumerate() {
            say(
                out,
                format_args!("{} instance={i} iou={v:.4}", rec.image_id),
            )?;
        }
        all.extend(ious);
        per_image.push((rec.image_id.clone(), counts));
    }
    let n = all.len();
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = all.iter().sum::<f64>() / n.max(1) as f64;
    let good = all.iter().filter(|&&v| v >= 0.9).count();
    say(out, format_args!("instances={n}"))?;
    say(
        out,
        format_args!("min_iou={:.4}", if n == 0 { 0.0 } else { min }),
    )?;
    say(out, format_args!("mean_iou={mean:.4}"))?;
    say(
        out,
        format_args!("iou_ge_0.9={:.4}", good as f64 / n.max(1) as f64),
    )?;
    print_report(&report(per_image), out)
}

fn synth_cmd(a: &SynthArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let label_cfg = LabelConfig::default();
    let kind = match a.format {
        AnnotationFormat::Icdar15 => ShapeKind::Quad,
        AnnotationFormat::Ctw1500 => ShapeKind::CurvedBand,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = a.size;
    let mut files = Vec::new();
    for i in 0..a.count {
        let polys = synth_layout(&mut rng, kind, h, w, a.instances, label_cfg.shrink_ratio);
        if polys.is_empty() {
            return Err(CliError::Invalid(format!(
                "no room for a text instance in {h}x{w}"
            )));
        }
        files.push((
            format!("gt_synth_{i:04}.txt"),
            format_annotation(&polys, a.format, "text")?,
        ));
    }
    ensure_dir(&a.out)?;
    for (name, text) in &files {
        write_atomic(&a.out.join(name), text.as_bytes())?;
    }
    say(out, format_args!("images={}", files.len()))
}
