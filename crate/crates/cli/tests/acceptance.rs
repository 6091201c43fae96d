//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! (written straight to stdout so it shows without `--nocapture`), and the
//! test fails if any criterion does.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kernelexpand::eval::{f_measure, match_image};
use kernelexpand::geometry::shrink_offset;
use kernelexpand::labelgen::gen_labels;
use kernelexpand::loss::gradcheck::run_suite;
use kernelexpand::loss::{binarize, logistic, total_loss};
use kernelexpand::synth::{random_star, synth_layout, ShapeKind};
use kernelexpand::{
    DetectedInstance, GtInstance, ImageCounts, InstanceLabel, LabelConfig, LossWeights, Point2,
    Polygon, PredMaps, Raster, VectorField,
};
use kernelexpand_cli::maptensor::{read_map, write_map, MapTensor, HEADER_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn shrink_formula() -> Outcome {
    let square = Polygon::rectangle(0.0, 0.0, 10.0, 10.0).unwrap();
    let d = shrink_offset(&square, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let cx = rng.gen_range(-50.0..50.0);
        let p = random_star(&mut rng, Point2::new(cx, 0.0), 8, 1.0, 30.0);
        let s = rng.gen_range(0.05..20.0);
        let r = rng.gen_range(0.05..0.95);
        let a = shrink_offset(&p.scale(s).unwrap(), r).unwrap();
        let b = s * shrink_offset(&p, r).unwrap();
        worst = worst.max((a - b).abs() / b.abs());
    }
    outcome(
        (d - 2.1).abs() <= 1e-9 && worst <= 1e-6,
        format!("square offset {d:.12}, worst homogeneity error {worst:.2e} over 100 polygons"),
    )
}

fn label_field() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut misses = 0usize;
    for _ in 0..20 {
        let inst: Vec<InstanceLabel> = (0..rng.gen_range(2..5))
            .map(|_| {
                let c = Point2::new(rng.gen_range(8.0..56.0), rng.gen_range(8.0..56.0));
                InstanceLabel::new(random_star(&mut rng, c, 7, 3.0, 14.0))
            })
            .collect();
        let labels = gen_labels(&inst, 64, 64, &LabelConfig::default()).unwrap();
        let kernel: Vec<(usize, usize)> = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .filter(|&(x, y)| labels.kernel_mask.get(x, y))
            .collect();
        for y in 0..64 {
            for x in 0..64 {
                if !labels.expand_valid.get(x, y) {
                    continue;
                }
                let brute = kernel
                    .iter()
                    .map(|&(kx, ky)| (kx as f64 - x as f64).hypot(ky as f64 - y as f64))
                    .fold(f64::INFINITY, f64::min);
                let (dx, dy) = labels.expand_field.get(x, y);
                worst = worst.max((dx.hypot(dy) - brute).abs());
                let tx = (x as f64 + dx).round() as i64;
                let ty = (y as f64 + dy).round() as i64;
                let lands = labels.kernel_mask.in_bounds(tx, ty)
                    && labels.kernel_mask.get(tx as usize, ty as usize);
                misses += usize::from(!lands);
                checked += 1;
            }
        }
    }
    outcome(
        worst <= 1e-6 && misses == 0 && checked > 0,
        format!("{checked} valid pixels, worst magnitude error {worst:.1e}, {misses} targets outside kernel"),
    )
}

fn gradients() -> Outcome {
    let reports = run_suite(0, 200, 8);
    let ok = reports
        .iter()
        .all(|r| r.max_rel_error <= 1e-3 && r.points == 200);
    let detail: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {:.1e}", r.name, r.max_rel_error))
        .collect();
    outcome(
        ok,
        format!("200 points each; max rel error: {}", detail.join(", ")),
    )
}

fn binarization() -> Outcome {
    let b = |p: f64, t: f64| {
        binarize(&Raster::new(1, 1, p), &Raster::new(1, 1, t), 50.0)
            .unwrap()
            .get(0, 0)
    };
    let at_zero = b(0.5, 0.5);
    let at_tenth = b(0.6, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sym = (0..10_000)
        .map(|_| {
            let x = rng.gen_range(-60.0..60.0);
            (logistic(x) + logistic(-x) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        at_zero == 0.5 && (at_tenth - 0.993307).abs() <= 1e-6 && sym <= 1e-12,
        format!("B(0)={at_zero}, B(0.1)={at_tenth:.7}, worst symmetry error {sym:.1e}"),
    )
}

fn loss_composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = LossWeights::default();
    let mut exact = true;
    let mut worst_perfect: f64 = 0.0;
    for _ in 0..10 {
        let polys = synth_layout(&mut rng, ShapeKind::Quad, 128, 128, 2, 0.4);
        let inst: Vec<InstanceLabel> = polys.into_iter().map(InstanceLabel::new).collect();
        let labels = gen_labels(&inst, 128, 128, &LabelConfig::default()).unwrap();
        let perfect = PredMaps::from_labels(&labels);
        worst_perfect = worst_perfect.max(total_loss(&perfect, &labels, &w).unwrap().total);

        let mut random = |lo: f64, hi: f64| {
            Raster::from_vec(
                128,
                128,
                (0..128 * 128).map(|_| rng.gen_range(lo..hi)).collect(),
            )
            .unwrap()
        };
        let noisy = PredMaps::new(
            random(0.0, 1.0),
            random(0.0, 1.0),
            VectorField {
                dx: random(-20.0, 20.0),
                dy: random(-20.0, 20.0),
            },
        )
        .unwrap();
        let b = total_loss(&noisy, &labels, &w).unwrap();
        exact &= b.total == 1.0 * (b.l_kp + b.l_kb) + 10.0 * b.l_t + 4.0 * b.l_e;
    }
    outcome(
        exact && worst_perfect <= 1e-3,
        format!(
            "weights (1, 10, 4) exact: {exact}; worst perfect-prediction total {worst_perfect:.2e}"
        ),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kernelexpand")
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(bin()).args(args).output().expect("run cli");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn roundtrip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut ious = Vec::new();
    let mut fmeasures = Vec::new();
    let mut failures = Vec::new();
    for (format, seed) in [("icdar15", "11"), ("ctw1500", "12")] {
        let ann = dir.path().join(format);
        let (code, _) = cli(&[
            "--seed",
            seed,
            "synth",
            "--format",
            format,
            "--out",
            path(&ann),
            "--count",
            "25",
        ]);
        if code != 0 {
            failures.push(format!("synth {format} exit {code}"));
            continue;
        }
        let (code, stdout) = cli(&[
            "roundtrip",
            "--format",
            format,
            "--ann",
            path(&ann),
            "--size",
            "256x256",
        ]);
        if code != 0 {
            failures.push(format!("roundtrip {format} exit {code}"));
            continue;
        }
        for line in stdout.lines() {
            if let Some(v) = line
                .split_once(" iou=")
                .and_then(|(_, v)| v.parse::<f64>().ok())
            {
                ious.push(v);
            }
            if let Some(v) = line.strip_prefix("fmeasure=") {
                fmeasures.push(v.parse::<f64>().unwrap());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let good = ious.iter().filter(|&&v| v >= 0.9).count();
    let frac = good as f64 / ious.len().max(1) as f64;
    let min = ious.iter().copied().fold(1.0, f64::min);
    let f_ok = fmeasures.len() == 2 && fmeasures.iter().all(|&f| f == 1.0);
    outcome(
        failures.is_empty() && !ious.is_empty() && frac >= 0.98 && f_ok && secs < 30.0,
        format!(
            "50 images, {} instances, {:.1}% with IoU >= 0.9 (min {min:.4}), F = {fmeasures:?}, {secs:.1}s {}",
            ious.len(),
            100.0 * frac,
            failures.join("; ")
        ),
    )
}

fn f_measure_arithmetic() -> Outcome {
    let f = 100.0 * f_measure(0.92, 0.8024);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bounded = (0..1000).all(|_| {
        let p: f64 = rng.gen_range(1e-6..1.0);
        let r: f64 = rng.gen_range(1e-6..1.0);
        let f = f_measure(p, r);
        f <= p.max(r) + 1e-15 && f >= p.min(r) - 1e-15
    });
    outcome(
        (f - 85.72).abs() <= 0.01 && bounded,
        format!("P=92.00 R=80.24 -> F={f:.4}; harmonic bounds hold for 1000 pairs: {bounded}"),
    )
}

fn eval_cases() -> Outcome {
    let rect = |x: f64| Polygon::rectangle(x, 5.0, 30.0, 12.0).unwrap();
    let gts: Vec<GtInstance> = (0..4)
        .map(|i| GtInstance::new(rect(40.0 * i as f64)))
        .collect();
    let dets: Vec<DetectedInstance> = gts
        .iter()
        .map(|g| DetectedInstance {
            polygon: g.polygon.clone(),
            score: 0.9,
        })
        .collect();
    let identical = match_image(&dets, &gts, 0.5);
    let ignore_only = match_image(
        &[DetectedInstance {
            polygon: Polygon::rectangle(2.0, 2.0, 10.0, 10.0).unwrap(),
            score: 0.9,
        }],
        &[GtInstance::ignored(
            Polygon::rectangle(0.0, 0.0, 20.0, 20.0).unwrap(),
        )],
        0.5,
    );
    let dup = match_image(
        &[
            DetectedInstance {
                polygon: rect(0.0),
                score: 0.9,
            },
            DetectedInstance {
                polygon: rect(1.0),
                score: 0.8,
            },
        ],
        &gts[..1],
        0.5,
    );
    let expect = |tp, fp, fn_| ImageCounts { tp, fp, fn_ };
    outcome(
        identical == expect(4, 0, 0) && ignore_only == expect(0, 0, 0) && dup == expect(1, 1, 0),
        format!("identical {identical:?}, ignore-only {ignore_only:?}, duplicate {dup:?}"),
    )
}

fn file_format() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut identical = 0;
    for i in 0..100 {
        let (h, w, c) = (
            rng.gen_range(1..20),
            rng.gen_range(1..20),
            rng.gen_range(1..5),
        );
        let data: Vec<f32> = (0..h * w * c)
            .map(|_| {
                f32::from_bits(rng.gen::<u32>() & 0x7f7f_ffff ^ (rng.gen::<u32>() & 0x8000_0000))
            })
            .collect();
        let t = MapTensor::new(h, w, c, data).unwrap();
        let p = dir.path().join(format!("t{i}.ekmp"));
        write_map(&p, &t).unwrap();
        let back = read_map(&p).unwrap();
        let bits = |m: &MapTensor| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        if back.encode() == t.encode() && bits(&back) == bits(&t) {
            identical += 1;
        }
    }

    // Malformed prediction files are rejected with exit code 1, missing
    // inputs with exit code 2, and nothing is written.
    let good = MapTensor::new(2, 2, 4, vec![0.0; 16]).unwrap().encode();
    let mut bad_magic = good.clone();
    bad_magic[..4].copy_from_slice(b"XXXX");
    let mut bad_version = good.clone();
    bad_version[4..8].copy_from_slice(&2u32.to_le_bytes());
    let short = good[..good.len() - 4].to_vec();
    let header_only = good[..HEADER_LEN - 2].to_vec();
    let mut codes = Vec::new();
    for (name, bytes) in [
        ("magic", bad_magic),
        ("version", bad_version),
        ("short", short),
        ("header", header_only),
    ] {
        let pred = dir.path().join(format!("pred_{name}"));
        std::fs::create_dir_all(&pred).unwrap();
        std::fs::write(pred.join("img.pred.ekmp"), bytes).unwrap();
        let out = dir.path().join(format!("out_{name}"));
        let (code, _) = cli(&["postprocess", "--pred", path(&pred), "--out", path(&out)]);
        codes.push((code, out.exists()));
    }
    let missing = dir.path().join("missing");
    let (missing_code, _) = cli(&[
        "postprocess",
        "--pred",
        path(&missing),
        "--out",
        path(&dir.path().join("o")),
    ]);
    let rejects = codes.iter().all(|&(c, wrote)| c == 1 && !wrote);
    outcome(
        identical == 100 && rejects && missing_code == 2,
        format!("{identical}/100 bit-identical round trips; malformed exits {codes:?}; missing input exit {missing_code}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("shrink offset formula and scaling", shrink_formula),
        ("expand field vs brute force", label_field),
        ("analytic vs numeric gradients", gradients),
        ("binarization values", binarization),
        ("loss composition", loss_composition),
        ("label -> detect round trip", roundtrip),
        ("F-measure arithmetic", f_measure_arithmetic),
        ("evaluation protocol cases", eval_cases),
        ("map tensor file format", file_format),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let status = if o.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "criterion {}: {status} {name}: {}", i + 1, o.detail).unwrap();
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
