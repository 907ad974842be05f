//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use grayindex::benchmark::{
    angular_error, box_shrink_eval, estimate_image, measure_runtime, run_benchmark, standard_mask,
    summarize, write_synthetic_dataset, DatasetManifest, IllumTag, Method, MethodParams,
    SynthOptions, BOX_LABELS,
};
use grayindex::baselines::{gray_world, shades_of_gray, white_patch};
use grayindex::estimation::{estimate_spatial, estimate_spatial_detailed, MultiParams};
use grayindex::preprocess::LevelsTable;
use grayindex::synthetic::{preset_scene, random_illuminant, render, render_any, to_raw, Preset};
use grayindex::{
    compute_gi, correct_levels, estimate_global, rank_gray, CameraLevels, ChromaVector, GiParams,
    LinearImage, PixelMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Border where the LoG support and the smoothing window reach past the
/// image edge.
const BORDER: usize = 5;

fn gray_nullity() -> Outcome {
    let start = Instant::now();
    let mut worst = 1.0f64;
    for seed in 0..20 {
        let scene = preset_scene(Preset::Gray, 512, 512, seed).build().unwrap();
        let img = render(&scene).unwrap();
        let gi = compute_gi(&img, &PixelMask::clear(512, 512), &GiParams::default()).unwrap();
        let (mut valid, mut null) = (0usize, 0usize);
        for y in BORDER..512 - BORDER {
            for x in BORDER..512 - BORDER {
                if let Some(v) = gi.get(x, y) {
                    valid += 1;
                    if v <= 1e-6 {
                        null += 1;
                    }
                }
            }
        }
        assert!(valid > 0, "scene {seed}: every interior pixel excluded");
        worst = worst.min(null as f64 / valid as f64);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst >= 0.99 && secs < 10.0,
        format!("min null fraction {:.5}, {secs:.2} s", worst),
    )
}

/// Raw counts through camera levels, masks, GI, top 0.1%, global estimate.
fn full_pipeline(img: &LinearImage, camera: &CameraLevels, checker: Option<&grayindex::Rect>) -> ChromaVector {
    let raw = to_raw(img, camera);
    let linear = correct_levels(&raw, camera).unwrap();
    estimate_image(Method::Gi, &linear, checker, &MethodParams::default()).unwrap()
}

fn oracle_recovery() -> Outcome {
    let levels = LevelsTable::builtin();
    let mut errors = Vec::new();
    for seed in 0..50u64 {
        let desc = preset_scene(Preset::Single, 256, 256, 1000 + seed);
        let img = render(&desc.build().unwrap()).unwrap();
        let camera = &levels.cameras()[seed as usize % levels.cameras().len()];
        let est = full_pipeline(&img, camera, desc.checker.as_ref());
        errors.push(angular_error(&est, &desc.illuminant));
    }
    let max = errors.iter().cloned().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    outcome(max < 0.5 && mean < 0.1, format!("max {max:.4} deg, mean {mean:.4} deg"))
}

/// Runs masks, GI, top-0.1% ranking and the global estimate.
fn rank_and_estimate(
    img: &LinearImage,
    checker: Option<&grayindex::Rect>,
    params: &GiParams,
) -> (grayindex::GrayIndexMap, Vec<grayindex::Pixel>, ChromaVector) {
    let mask = standard_mask(img, checker, Default::default());
    let gi = compute_gi(img, &mask, params).unwrap();
    let coords = rank_gray(&gi, 0.1).unwrap();
    let est = estimate_global(img, &coords).unwrap();
    (gi, coords, est)
}

fn scale_invariance() -> Outcome {
    let default = GiParams::default();
    // the contrast threshold disabled, everything else unchanged
    let control = GiParams {
        epsilon: f64::MIN_POSITIVE,
        ..GiParams::default()
    };
    let (mut mismatched, mut control_mismatched) = (0, 0);
    let (mut worst, mut control_worst) = (0.0f64, 0.0f64);
    let (mut flips, mut min_overlap) = (0usize, 1.0f64);
    for seed in 0..10u64 {
        let mut desc = preset_scene(Preset::Single, 256, 256, 2000 + seed);
        desc.exposure = 0.45;
        let img = render(&desc.build().unwrap()).unwrap();
        let checker = desc.checker.as_ref();
        let (base_gi, base_coords, base_est) = rank_and_estimate(&img, checker, &default);
        let (_, control_coords, control_est) = rank_and_estimate(&img, checker, &control);
        for s in [0.5, 2.0] {
            let scaled = img.scaled(s).unwrap();
            let (gi, coords, est) = rank_and_estimate(&scaled, checker, &default);
            if coords != base_coords {
                mismatched += 1;
            }
            worst = worst.max(angular_error(&est, &base_est));
            flips += gi
                .values()
                .iter()
                .zip(base_gi.values())
                .filter(|(a, b)| a.is_finite() != b.is_finite())
                .count();
            let shared = coords.iter().filter(|p| base_coords.contains(p)).count();
            min_overlap = min_overlap.min(shared as f64 / base_coords.len() as f64);

            let (_, c_coords, c_est) = rank_and_estimate(&scaled, checker, &control);
            if c_coords != control_coords {
                control_mismatched += 1;
            }
            control_worst = control_worst.max(angular_error(&c_est, &control_est));
        }
    }
    outcome(
        mismatched == 0 && worst < 1e-9,
        format!(
            "{mismatched}/20 rank lists differ (min overlap {min_overlap:.3}, {flips} exclusion flips), \
             max estimate drift {worst:e} deg; with the contrast threshold disabled: \
             {control_mismatched}/20 differ, drift {control_worst:e} deg"
        ),
    )
}

fn two_illuminants() -> Outcome {
    let params = MultiParams {
        clusters: 2,
        seed: 7,
        ..MultiParams::default()
    };
    let mut worst_far = 0.0f64;
    let mut worst_mean = 0.0f64;
    for seed in 0..5u64 {
        let desc = preset_scene(Preset::TwoIllum, 512, 256, 3000 + seed);
        let (img, truth) = render_any(&desc.build().unwrap()).unwrap();
        let mask = standard_mask(&img, desc.checker.as_ref(), Default::default());
        let gi = compute_gi(&img, &mask, &GiParams::default()).unwrap();
        let est = estimate_spatial_detailed(&img, &gi, &params).unwrap();
        let split = 256.0;
        let (mut sum, mut n) = (0.0, 0usize);
        for y in 0..256 {
            for x in 0..512 {
                let e = angular_error(&est.field.get(x, y), &truth.get(x, y));
                sum += e;
                n += 1;
                if (x as f64 + 0.5 - split).abs() >= 3.0 * est.sigma {
                    worst_far = worst_far.max(e);
                }
            }
        }
        worst_mean = worst_mean.max(sum / n as f64);
    }
    outcome(
        worst_far < 1.0 && worst_mean < 3.0,
        format!("max far-pixel error {worst_far:.4} deg, worst field mean {worst_mean:.4} deg"),
    )
}

fn box_shrink() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let levels = LevelsTable::builtin();
    let mut detail = String::new();
    let mut pass = true;
    for (preset, tag, sub) in [
        (Preset::TwoIllum, IllumTag::Double, "double"),
        (Preset::Single, IllumTag::Single, "single"),
    ] {
        let opts = SynthOptions {
            preset,
            count: 6,
            width: 1024,
            height: 1024,
            seed: 5,
        };
        let path = write_synthetic_dataset(&dir.path().join(sub), &opts, &levels).unwrap();
        let manifest = DatasetManifest::load(&path).unwrap();
        let report = box_shrink_eval(&manifest, Method::Gi, &MethodParams::default(), &levels, 0).unwrap();
        let means: Vec<f64> = report
            .table(tag)
            .iter()
            .map(|s| s.expect("stats for every box").mean)
            .collect();
        let ok = match tag {
            IllumTag::Double => means.windows(2).all(|w| w[1] < w[0]),
            IllumTag::Single => {
                let hi = means.iter().cloned().fold(f64::MIN, f64::max);
                let lo = means.iter().cloned().fold(f64::MAX, f64::min);
                hi - lo < 0.5
            }
        };
        pass &= ok;
        let cells: Vec<String> = BOX_LABELS
            .iter()
            .zip(&means)
            .map(|(l, m)| format!("{l}={m:.3}"))
            .collect();
        detail.push_str(&format!("{sub}: {} ", cells.join(" ")));
    }
    outcome(pass, detail.trim_end())
}

const GOLDEN: [(&str, u32, u32, [f64; 6]); 10] = [
    ("Canon1D", 0, 4095, [0.0, 0.0, 0.000257052888631836, 1.0, 1.0, 1.0]),
    ("Canon5D", 129, 4095, [0.0, 0.0, 0.0002658690594882021, 1.0, 0.9657028913260219, 1.0]),
    ("Canon1DsMkIII", 1024, 15279, [0.0, 0.0, 7.412321502032829e-05, 1.0, 0.9240978278191838, 1.0]),
    ("Canon600D", 2048, 15303, [0.0, 0.0, 8.006501279038579e-05, 0.9999999999999999, 0.8360268538052897, 1.0]),
    ("FujifilmXM1", 256, 4079, [0.0, 0.0, 0.0002763156076871002, 0.9999999999999999, 0.9292632044321023, 1.0]),
    ("NikonD5200", 0, 15892, [0.0, 0.0, 6.623657053532396e-05, 1.0, 1.0, 1.0]),
    ("OlympusEPL6", 255, 4043, [0.0, 0.0, 0.0002788739071628763, 1.0, 0.9288871536734665, 1.0]),
    ("PanasonicGX1", 143, 4095, [0.0, 0.0, 0.0002668623657348722, 1.0, 0.9618386816999133, 1.0]),
    ("SamsungNX2000", 0, 4095, [0.0, 0.0, 0.000257052888631836, 1.0, 1.0, 1.0]),
    ("SonyA57", 128, 4093, [0.0, 0.0, 0.0002659326924355446, 1.0, 0.9659606153682503, 1.0]),
];

fn golden_levels() -> Outcome {
    let table = LevelsTable::builtin();
    let mut wrong = Vec::new();
    for (id, b, s, expected) in GOLDEN {
        let cam = table.get(id).expect("camera in built-in table");
        assert_eq!((cam.black(), cam.saturation()), (b, s), "{id}");
        let (bf, sf) = (f64::from(b), f64::from(s));
        let raws = [0.0, bf, bf + 1.0, 0.95 * sf, 0.95 * sf - bf, sf];
        let img = grayindex::RawImage::new(6, 1, [raws.to_vec(), raws.to_vec(), raws.to_vec()]).unwrap();
        let out = correct_levels(&img, cam).unwrap();
        for (k, want) in expected.iter().enumerate() {
            for c in 0..3 {
                let got = out.pixel(k, 0)[c];
                if got.to_bits() != want.to_bits() {
                    wrong.push(format!("{id} raw={} got {got:e} want {want:e}", raws[k]));
                }
            }
        }
    }
    outcome(wrong.is_empty(), format!("{} mismatches {:?}", wrong.len(), wrong))
}

/// Order statistic by counting, without sorting.
fn kth_smallest(values: &[f64], k: usize) -> f64 {
    for &v in values {
        let below = values.iter().filter(|&&u| u < v).count();
        let equal = values.iter().filter(|&&u| u == v).count();
        if below <= k && k < below + equal {
            return v;
        }
    }
    unreachable!()
}

fn brute_stats(values: &[f64]) -> [f64; 5] {
    let n = values.len();
    let q = |p: f64| {
        let h = p * (n - 1) as f64;
        let lo = kth_smallest(values, h.floor() as usize);
        let hi = kth_smallest(values, h.ceil() as usize);
        lo * (1.0 - h.fract()) + hi * h.fract()
    };
    let tail = (n + 3) / 4;
    let mut rest = values.to_vec();
    let mut low = 0.0;
    for _ in 0..tail {
        let (i, v) = rest
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
        low += v;
        rest.swap_remove(i);
    }
    let mut rest = values.to_vec();
    let mut high = 0.0;
    for _ in 0..tail {
        let (i, v) = rest
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
        high += v;
        rest.swap_remove(i);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    [
        mean,
        q(0.5),
        (q(0.25) + 2.0 * q(0.5) + q(0.75)) / 4.0,
        low / tail as f64,
        high / tail as f64,
    ]
}

fn statistics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=500);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                // some ties
                if rng.gen_bool(0.1) {
                    1.0
                } else {
                    rng.gen_range(0.0..20.0)
                }
            })
            .collect();
        let s = summarize(&values).unwrap();
        let got = [s.mean, s.median, s.trimean, s.best25, s.worst25];
        for (g, w) in got.iter().zip(brute_stats(&values)) {
            worst = worst.max((g - w).abs());
        }
        assert_eq!(s.count, n);
    }
    let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let example = [s.mean, s.median, s.trimean, s.best25, s.worst25] == [3.0, 3.0, 3.0, 1.5, 4.5];
    outcome(
        worst < 1e-9 && example,
        format!("max deviation {worst:e}, worked example {}", if example { "ok" } else { "wrong" }),
    )
}

fn metric_identities() -> Outcome {
    let cv = |r, g, b| ChromaVector::from_rgb(r, g, b).unwrap();
    let same = angular_error(&cv(0.3, 0.5, 0.7), &cv(0.3, 0.5, 0.7));
    let ortho = angular_error(&cv(1.0, 0.0, 0.0), &cv(0.0, 1.0, 0.0));
    let pair = angular_error(&cv(1.0, 1.0, 1.0), &cv(1.0, 1.0, 0.0));
    let oracle = (2.0 / 6f64.sqrt()).acos().to_degrees();
    outcome(
        same.abs() < 1e-6 && (ortho - 90.0).abs() < 1e-6 && (pair - oracle).abs() < 1e-6,
        format!("{same:e}, {ortho}, {pair}"),
    )
}

/// Random surfaces below 80% reflectance plus one white pixel, under a
/// random illuminant.
fn white_patch_image(rng: &mut ChaCha8Rng) -> LinearImage {
    let w = rng.gen_range(16..=64);
    let h = rng.gen_range(16..=64);
    let l = random_illuminant(rng).to_array();
    let peak = l.iter().cloned().fold(0.0, f64::max);
    let white = (rng.gen_range(0..w), rng.gen_range(0..h));
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let rho = if (x, y) == white { 1.0 } else { rng.gen_range(0.0..0.8) };
                pixels.push(rho * l[c] / peak);
            }
        }
    }
    LinearImage::from_interleaved(w, h, &pixels).unwrap()
}

fn baseline_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut identical = true;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let img = white_patch_image(&mut rng);
        let mask = PixelMask::clear(img.width(), img.height());
        identical &= shades_of_gray(&img, &mask, 1.0).unwrap() == gray_world(&img, &mask).unwrap();
        let e = angular_error(
            &shades_of_gray(&img, &mask, 64.0).unwrap(),
            &white_patch(&img, &mask).unwrap(),
        );
        worst = worst.max(e);
    }
    outcome(
        identical && worst < 1e-2,
        format!("p=1 identical: {identical}, max p=64 vs white patch {worst:e} deg"),
    )
}

fn performance() -> Outcome {
    let img = render(&preset_scene(Preset::Single, 1920, 1080, 42).build().unwrap()).unwrap();
    let report = measure_runtime(&img, Method::Gi, &MethodParams::default(), 5).unwrap();
    outcome(
        report.median <= 0.4,
        format!("median {:.3} s (min {:.3}, max {:.3})", report.median, report.min, report.max),
    )
}

fn determinism() -> Outcome {
    let desc = preset_scene(Preset::TwoIllum, 384, 256, 11);
    let (img, _) = render_any(&desc.build().unwrap()).unwrap();
    let mask = standard_mask(&img, desc.checker.as_ref(), Default::default());
    let gi = compute_gi(&img, &mask, &GiParams::default()).unwrap();
    let params = MultiParams {
        seed: 123,
        ..MultiParams::default()
    };
    let bits = |f: &grayindex::IlluminantField| -> Vec<u64> {
        f.planes().iter().flat_map(|p| p.iter().map(|v| v.to_bits())).collect()
    };
    let first = bits(&estimate_spatial(&img, &gi, &params).unwrap());
    let spatial_same = (0..4).all(|_| bits(&estimate_spatial(&img, &gi, &params).unwrap()) == first);

    let dir = tempfile::tempdir().unwrap();
    let levels = LevelsTable::builtin();
    let opts = SynthOptions {
        preset: Preset::Single,
        count: 16,
        width: 160,
        height: 120,
        seed: 21,
    };
    let manifest = DatasetManifest::load(&write_synthetic_dataset(dir.path(), &opts, &levels).unwrap()).unwrap();
    let p = MethodParams::default();
    let one = run_benchmark(&manifest, Method::Gi, &p, &levels, 1).unwrap();
    let eight = run_benchmark(&manifest, Method::Gi, &p, &levels, 8).unwrap();
    let bench_same = one.to_csv() == eight.to_csv() && one.summary_text() == eight.summary_text();
    outcome(
        spatial_same && bench_same,
        format!("spatial runs identical: {spatial_same}, jobs 1 vs 8 identical: {bench_same}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "gray nullity", gray_nullity),
        (2, "single-illuminant oracle recovery", oracle_recovery),
        (3, "scale invariance", scale_invariance),
        (4, "two-illuminant recovery", two_illuminants),
        (5, "box-shrink direction", box_shrink),
        (6, "camera level golden vectors", golden_levels),
        (7, "statistics oracle", statistics_oracle),
        (8, "metric identities", metric_identities),
        (9, "baseline limits", baseline_limits),
        (10, "1080p runtime", performance),
        (11, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} [{status}] {name}: {} ({:.1} s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
