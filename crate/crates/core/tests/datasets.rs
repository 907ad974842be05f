//! Published-number checks on the real benchmark datasets.
//!
//! Skipped unless `GI_DATASET_DIR` points at a directory with any of
//!
//! ```text
//! gehler_shi/manifest.csv
//! nus/manifest.csv
//! mimo/manifest.csv     (+ <image stem>.field.bin ground-truth rasters)
//! ```
//!
//! laid out as in `datasets/`. Means must land within 0.25 deg of the
//! published values; medians are printed for comparison.

use std::path::{Path, PathBuf};

use grayindex::benchmark::{
    angular_error, load_for_camera, run_benchmark, standard_mask, summarize, DatasetManifest,
    EvalStats, Method, MethodParams,
};
use grayindex::config::RunConfig;
use grayindex::estimation::MultiParams;
use grayindex::io::read_raster;
use grayindex::{compute_gi, estimate_spatial, ChromaVector};

const TOLERANCE: f64 = 0.25;

fn manifest(name: &str) -> Option<PathBuf> {
    let root = std::env::var_os("GI_DATASET_DIR")?;
    let path = Path::new(&root).join(name).join("manifest.csv");
    if path.is_file() {
        Some(path)
    } else {
        eprintln!("{} not found; skipping", path.display());
        None
    }
}

fn check(label: &str, stats: &EvalStats, mean: f64, median: f64) {
    eprintln!(
        "{label}: mean {:.3} (published {mean}), median {:.3} (published {median}), n = {}",
        stats.mean, stats.median, stats.count
    );
    assert!(
        (stats.mean - mean).abs() <= TOLERANCE,
        "{label}: mean {} vs {mean}",
        stats.mean
    );
}

fn single_illuminant(name: &str, mean: f64, median: f64) {
    let Some(path) = manifest(name) else {
        eprintln!("GI_DATASET_DIR unset or incomplete; {name} check skipped");
        return;
    };
    let manifest = DatasetManifest::load(&path).unwrap();
    let levels = RunConfig::default().levels().unwrap();
    let report =
        run_benchmark(&manifest, Method::Gi, &MethodParams::default(), &levels, 0).unwrap();
    assert_eq!(report.failed, 0, "{name}: unreadable or degenerate images");
    check(name, report.overall.as_ref().unwrap(), mean, median);
}

#[test]
fn gehler_shi_global_estimate() {
    single_illuminant("gehler_shi", 3.07, 1.87);
}

#[test]
fn nus_global_estimate() {
    single_illuminant("nus", 2.91, 1.97);
}

/// Mean per-pixel angular error against a ground-truth field raster;
/// pixels without a ground truth (zero vectors) are skipped.
fn field_error(field: &grayindex::IlluminantField, truth: &[Vec<f64>]) -> f64 {
    let (w, h) = field.dims();
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let Ok(gt) = ChromaVector::from_rgb(truth[0][i], truth[1][i], truth[2][i]) else {
                continue;
            };
            sum += angular_error(&field.get(x, y), &gt);
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn mimo_two_illuminants() {
    let Some(path) = manifest("mimo") else {
        eprintln!("GI_DATASET_DIR unset or incomplete; mimo check skipped");
        return;
    };
    let manifest = DatasetManifest::load(&path).unwrap();
    let levels = RunConfig::default().levels().unwrap();
    let method = MethodParams::default();
    let multi = MultiParams {
        clusters: 2,
        ..MultiParams::default()
    };
    let mut errors = Vec::new();
    for rec in &manifest.records {
        let image = manifest.resolve(rec);
        let img = load_for_camera(&image, &rec.camera, &levels).unwrap();
        let mask = standard_mask(&img, rec.checker.as_ref(), method.dark_reference);
        let gi = compute_gi(&img, &mask, &method.gi).unwrap();
        let field = estimate_spatial(&img, &gi, &multi).unwrap();
        let truth_path = image.with_extension("field.bin");
        let (w, h, truth) = read_raster(&truth_path).unwrap();
        assert_eq!((w, h), img.dims(), "{}", truth_path.display());
        errors.push(field_error(&field, &truth));
    }
    check("mimo", &summarize(&errors).unwrap(), 3.79, 3.32);
}
