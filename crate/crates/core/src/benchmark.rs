//! Dataset manifests, angular-error statistics, batch evaluation, the
//! shrinking-box experiment and runtime measurement.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{gray_edge, gray_world, shades_of_gray, white_patch, BaselineParams};
use crate::error::{Error, Result};
use crate::estimation::estimate_global;
use crate::grayness::{compute_gi, rank_gray, GiParams, DEFAULT_TOP_PERCENT};
use crate::image::{ChromaVector, LinearImage, PixelMask, Rect};
use crate::io;
use crate::preprocess::{correct_levels, dark_or_saturated, DarkReference, LevelsTable};
use crate::synthetic::{preset_scene, render_any, to_raw, Preset};

/// Angle between two illuminant vectors, in degrees.
///
/// Computed as `atan2(|a x b|, a . b)`, which is accurate near 0 and 180
/// degrees where `acos` loses precision.
pub fn angular_error(est: &ChromaVector, gt: &ChromaVector) -> f64 {
    let a = est.to_array();
    let b = gt.to_array();
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    sin.atan2(est.dot(gt)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    pub median: f64,
    pub trimean: f64,
    pub best25: f64,
    pub worst25: f64,
    pub count: usize,
}

/// Quantile of a sorted list by linear interpolation at `q (n - 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean, median, trimean and the means of the best and worst quarter
/// (`ceil(n / 4)` values each).
pub fn summarize(errors: &[f64]) -> Result<EvalStats> {
    if errors.is_empty() {
        return Err(Error::EmptyErrorList);
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument("error list contains non-finite values".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let tail = n.div_ceil(4);
    let q1 = quantile(&sorted, 0.25);
    let q2 = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    Ok(EvalStats {
        mean: mean(&sorted),
        median: q2,
        trimean: (q1 + 2.0 * q2 + q3) / 4.0,
        best25: mean(&sorted[..tail]),
        worst25: mean(&sorted[n - tail..]),
        count: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IllumTag {
    Single,
    Double,
}

impl IllumTag {
    pub fn as_str(self) -> &'static str {
        match self {
            IllumTag::Single => "single",
            IllumTag::Double => "double",
        }
    }
}

impl FromStr for IllumTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(IllumTag::Single),
            "double" => Ok(IllumTag::Double),
            other => Err(Error::InvalidArgument(format!(
                "illuminant tag must be `single` or `double`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    /// Path as written in the manifest.
    pub image: String,
    pub gt: ChromaVector,
    pub camera: String,
    pub checker: Option<Rect>,
    pub tag: Option<IllumTag>,
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    image: String,
    gt_r: f64,
    gt_g: f64,
    gt_b: f64,
    camera: String,
    checker_x: Option<usize>,
    checker_y: Option<usize>,
    checker_w: Option<usize>,
    checker_h: Option<usize>,
    illum_tag: Option<String>,
}

pub const MANIFEST_HEADER: [&str; 10] = [
    "image", "gt_r", "gt_g", "gt_b", "camera", "checker_x", "checker_y", "checker_w", "checker_h",
    "illum_tag",
];

impl ManifestRow {
    fn into_record(self) -> std::result::Result<ManifestRecord, String> {
        if self.image.trim().is_empty() {
            return Err("empty image path".into());
        }
        let gt = ChromaVector::from_rgb(self.gt_r, self.gt_g, self.gt_b)
            .map_err(|_| "ground truth is not a positive, finite vector".to_string())?;
        let checker = match (self.checker_x, self.checker_y, self.checker_w, self.checker_h) {
            (None, None, None, None) => None,
            (Some(x), Some(y), Some(w), Some(h)) if w > 0 && h > 0 => Some(Rect::new(x, y, w, h)),
            _ => return Err("checker rectangle must have all four fields, with w, h > 0".into()),
        };
        let tag = match self.illum_tag.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(t) => Some(t.parse::<IllumTag>().map_err(|e| e.to_string())?),
        };
        Ok(ManifestRecord {
            image: self.image,
            gt,
            camera: self.camera,
            checker,
            tag,
        })
    }
}

/// CSV list of images with ground truth; relative image paths resolve
/// against `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub base_dir: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn new(base_dir: impl Into<PathBuf>, records: Vec<ManifestRecord>) -> Self {
        DatasetManifest {
            base_dir: base_dir.into(),
            records,
        }
    }

    /// Parses manifest text. Every malformed line is reported, not just
    /// the first.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Manifest(vec![format!("header: {e}")]))?
            .clone();
        if headers.iter().ne(MANIFEST_HEADER) {
            return Err(Error::Manifest(vec![format!(
                "line 1: expected header `{}`",
                MANIFEST_HEADER.join(",")
            )]));
        }
        let mut records = Vec::new();
        let mut problems = Vec::new();
        for row in reader.deserialize::<ManifestRow>() {
            match row {
                Ok(row) => {
                    let line = records.len() + problems.len() + 2;
                    match row.into_record() {
                        Ok(r) => records.push(r),
                        Err(msg) => problems.push(format!("line {line}: {msg}")),
                    }
                }
                Err(e) => {
                    let line = e
                        .position()
                        .map_or(records.len() + problems.len() + 2, |p| p.line() as usize);
                    problems.push(format!("line {line}: {e}"));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Manifest(problems));
        }
        Ok(DatasetManifest::new(base_dir, records))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(MANIFEST_HEADER).expect("in-memory write");
        for r in &self.records {
            let gt = r.gt.to_array();
            let c = r.checker;
            let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
            writer
                .write_record([
                    r.image.clone(),
                    gt[0].to_string(),
                    gt[1].to_string(),
                    gt[2].to_string(),
                    r.camera.clone(),
                    opt(c.map(|c| c.x)),
                    opt(c.map(|c| c.y)),
                    opt(c.map(|c| c.width)),
                    opt(c.map(|c| c.height)),
                    r.tag.map(|t| t.as_str().to_string()).unwrap_or_default(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        let p = Path::new(&record.image);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Registered estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gi,
    GrayWorld,
    WhitePatch,
    ShadesOfGray,
    GrayEdge1,
    GrayEdge2,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gi,
        Method::GrayWorld,
        Method::WhitePatch,
        Method::ShadesOfGray,
        Method::GrayEdge1,
        Method::GrayEdge2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gi => "gi",
            Method::GrayWorld => "gray-world",
            Method::WhitePatch => "white-patch",
            Method::ShadesOfGray => "shades-of-gray",
            Method::GrayEdge1 => "gray-edge-1",
            Method::GrayEdge2 => "gray-edge-2",
        }
    }

    pub fn names() -> Vec<String> {
        Method::ALL.iter().map(|m| m.name().to_string()).collect()
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod {
                name: s.to_string(),
                known: Method::names(),
            })
    }
}

/// Everything an estimator may need besides the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodParams {
    pub gi: GiParams,
    /// Percentage of ranked pixels averaged by the global GI estimate.
    pub top_percent: f64,
    pub baselines: BaselineParams,
    pub dark_reference: DarkReference,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            gi: GiParams::default(),
            top_percent: DEFAULT_TOP_PERCENT,
            baselines: BaselineParams::default(),
            dark_reference: DarkReference::default(),
        }
    }
}

impl MethodParams {
    pub fn validate(&self) -> Result<()> {
        self.gi.validate()?;
        self.baselines.validate()?;
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "top percent must be in (0, 100], got {}",
                self.top_percent
            )));
        }
        Ok(())
    }
}

/// Dark and saturated pixels plus an optional checker rectangle.
pub fn standard_mask(img: &LinearImage, checker: Option<&Rect>, dark: DarkReference) -> PixelMask {
    let mut mask = dark_or_saturated(img, dark);
    if let Some(rect) = checker {
        mask.flag_rect(rect);
    }
    mask
}

/// Runs one estimator with an explicit exclusion mask.
pub fn estimate_masked(
    method: Method,
    img: &LinearImage,
    mask: &PixelMask,
    params: &MethodParams,
) -> Result<ChromaVector> {
    let b = &params.baselines;
    match method {
        Method::Gi => {
            let gimap = compute_gi(img, mask, &params.gi)?;
            let coords = rank_gray(&gimap, params.top_percent)?;
            estimate_global(img, &coords)
        }
        Method::GrayWorld => gray_world(img, mask),
        Method::WhitePatch => white_patch(img, mask),
        Method::ShadesOfGray => shades_of_gray(img, mask, b.sog_p),
        Method::GrayEdge1 => gray_edge(img, mask, 1, b.edge_p, b.edge_sigma),
        Method::GrayEdge2 => gray_edge(img, mask, 2, b.edge_p, b.edge_sigma),
    }
}

/// Builds the standard mask and runs one estimator.
pub fn estimate_image(
    method: Method,
    img: &LinearImage,
    checker: Option<&Rect>,
    params: &MethodParams,
) -> Result<ChromaVector> {
    let mask = standard_mask(img, checker, params.dark_reference);
    estimate_masked(method, img, &mask, params)
}

/// Loads an image: raw counts through the camera levels when the camera is
/// known, otherwise samples normalized by their type maximum.
pub fn load_for_camera(path: &Path, camera: &str, levels: &LevelsTable) -> Result<LinearImage> {
    let decoded = io::read_image(path)?;
    match levels.get(camera) {
        Some(l) => correct_levels(&decoded.into_raw()?, l),
        None => decoded.into_linear().map_err(|e| Error::format(path, e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageResult {
    pub image: String,
    pub camera: String,
    pub outcome: std::result::Result<(ChromaVector, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub method: Method,
    pub params: MethodParams,
    pub results: Vec<ImageResult>,
    pub overall: Option<EvalStats>,
    pub per_camera: BTreeMap<String, EvalStats>,
    pub failed: usize,
}

fn push_stats(out: &mut String, prefix: &str, s: &EvalStats) {
    let _ = writeln!(out, "{prefix}.count = {}", s.count);
    let _ = writeln!(out, "{prefix}.mean = {}", s.mean);
    let _ = writeln!(out, "{prefix}.median = {}", s.median);
    let _ = writeln!(out, "{prefix}.trimean = {}", s.trimean);
    let _ = writeln!(out, "{prefix}.best25 = {}", s.best25);
    let _ = writeln!(out, "{prefix}.worst25 = {}", s.worst25);
}

/// Every parameter that can influence the numbers, baselines included.
fn push_params(out: &mut String, p: &MethodParams) {
    let g = &p.gi;
    let _ = writeln!(out, "params.gi.epsilon = {}", g.epsilon);
    let _ = writeln!(out, "params.gi.log_kernel_size = {}", g.log_kernel_size);
    let _ = writeln!(out, "params.gi.log_sigma = {}", g.log_sigma);
    let _ = writeln!(out, "params.gi.smooth_window = {}", g.smooth_window);
    let _ = writeln!(out, "params.gi.log_floor = {}", g.log_floor);
    let _ = writeln!(out, "params.gi.include_green = {}", g.include_green);
    let _ = writeln!(out, "params.gi.exclude_border = {}", g.exclude_border);
    let _ = writeln!(out, "params.top_percent = {}", p.top_percent);
    let _ = writeln!(out, "params.sog_p = {}", p.baselines.sog_p);
    let _ = writeln!(out, "params.edge_p = {}", p.baselines.edge_p);
    let _ = writeln!(out, "params.edge_sigma = {}", p.baselines.edge_sigma);
    let dark = match p.dark_reference {
        DarkReference::ChannelSum => "channel-sum",
        DarkReference::MaxChannel => "max-channel",
    };
    let _ = writeln!(out, "params.dark_reference = {dark}");
}

impl BenchmarkReport {
    /// `key = value` lines with stable key names.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method.name());
        let _ = writeln!(out, "images = {}", self.results.len());
        let _ = writeln!(out, "failed = {}", self.failed);
        push_params(&mut out, &self.params);
        if let Some(s) = &self.overall {
            push_stats(&mut out, "overall", s);
        }
        for (camera, s) in &self.per_camera {
            push_stats(&mut out, &format!("camera.{camera}"), s);
        }
        out
    }

    /// One row per manifest record, in manifest order.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["image", "camera", "status", "angular_error", "est_r", "est_g", "est_b", "message"])
            .expect("in-memory write");
        for r in &self.results {
            let row = match &r.outcome {
                Ok((est, err)) => {
                    let e = est.to_array();
                    [
                        r.image.clone(),
                        r.camera.clone(),
                        "ok".into(),
                        err.to_string(),
                        e[0].to_string(),
                        e[1].to_string(),
                        e[2].to_string(),
                        String::new(),
                    ]
                }
                Err(msg) => [
                    r.image.clone(),
                    r.camera.clone(),
                    "error".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    msg.clone(),
                ],
            };
            writer.write_record(row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn errors(&self) -> Vec<f64> {
        self.results
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.1))
            .collect()
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} worker threads: {e}")))
}

/// Evaluates every manifest record, `jobs` at a time (0 = one per core).
/// Failed images become error rows and are left out of the statistics.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    method: Method,
    params: &MethodParams,
    levels: &LevelsTable,
    jobs: usize,
) -> Result<BenchmarkReport> {
    params.validate()?;
    if manifest.records.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let total = manifest.records.len();
    let evaluate = |(i, rec): (usize, &ManifestRecord)| {
        let outcome = load_for_camera(&manifest.resolve(rec), &rec.camera, levels)
            .and_then(|img| estimate_image(method, &img, rec.checker.as_ref(), params))
            .map(|est| (est, angular_error(&est, &rec.gt)))
            .map_err(|e| e.to_string());
        match &outcome {
            Ok((_, err)) => info!("[{}/{total}] {}: {err:.4} deg", i + 1, rec.image),
            Err(msg) => warn!("[{}/{total}] {}: {msg}", i + 1, rec.image),
        }
        ImageResult {
            image: rec.image.clone(),
            camera: rec.camera.clone(),
            outcome,
        }
    };
    let results: Vec<ImageResult> =
        thread_pool(jobs)?.install(|| manifest.records.par_iter().enumerate().map(evaluate).collect());

    let mut by_camera: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut failed = 0;
    for r in &results {
        match &r.outcome {
            Ok((_, err)) => by_camera.entry(r.camera.clone()).or_default().push(*err),
            Err(_) => failed += 1,
        }
    }
    let per_camera = by_camera
        .iter()
        .map(|(c, e)| Ok((c.clone(), summarize(e)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let errors: Vec<f64> = results
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.1))
        .collect();
    let overall = if errors.is_empty() { None } else { Some(summarize(&errors)?) };
    Ok(BenchmarkReport {
        method,
        params: params.clone(),
        results,
        overall,
        per_camera,
        failed,
    })
}

pub const BOX_LABELS: [char; 5] = ['A', 'B', 'C', 'D', 'E'];

/// Smallest acceptable box E, per side.
pub const MIN_BOX_SIDE: usize = 16;

/// Boxes A..E: the full image, then repeatedly halved width and height,
/// centred on the checker (shifted inwards where they would leave the image).
pub fn shrink_boxes(width: usize, height: usize, checker: &Rect) -> [Rect; 5] {
    let (cx, cy) = checker.center();
    std::array::from_fn(|k| {
        let w = (width >> k).max(1);
        let h = (height >> k).max(1);
        let place = |c: f64, size: usize, limit: usize| {
            (c - size as f64 / 2.0).round().clamp(0.0, (limit - size) as f64) as usize
        };
        Rect::new(place(cx, w, width), place(cy, h, height), w, h)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRecordResult {
    pub image: String,
    pub tag: IllumTag,
    /// Angular error per box, or the failure message.
    pub boxes: [std::result::Result<f64, String>; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxShrinkReport {
    pub method: Method,
    pub params: MethodParams,
    pub records: Vec<BoxRecordResult>,
    pub skipped: Vec<String>,
    pub single: [Option<EvalStats>; 5],
    pub double: [Option<EvalStats>; 5],
}

impl BoxShrinkReport {
    pub fn table(&self, tag: IllumTag) -> &[Option<EvalStats>; 5] {
        match tag {
            IllumTag::Single => &self.single,
            IllumTag::Double => &self.double,
        }
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method.name());
        let _ = writeln!(out, "images = {}", self.records.len());
        let _ = writeln!(out, "skipped = {}", self.skipped.len());
        push_params(&mut out, &self.params);
        for tag in [IllumTag::Single, IllumTag::Double] {
            for (label, stats) in BOX_LABELS.iter().zip(self.table(tag)) {
                if let Some(s) = stats {
                    push_stats(&mut out, &format!("{}.{label}", tag.as_str()), s);
                }
            }
        }
        out
    }
}

fn evaluate_boxes(
    manifest: &DatasetManifest,
    rec: &ManifestRecord,
    method: Method,
    params: &MethodParams,
    levels: &LevelsTable,
) -> std::result::Result<Option<[std::result::Result<f64, String>; 5]>, String> {
    let checker = rec.checker.ok_or("record has no checker rectangle")?;
    let img = load_for_camera(&manifest.resolve(rec), &rec.camera, levels).map_err(|e| e.to_string())?;
    let (w, h) = img.dims();
    let boxes = shrink_boxes(w, h, &checker);
    if boxes[4].width < MIN_BOX_SIDE || boxes[4].height < MIN_BOX_SIDE {
        return Ok(None);
    }
    Ok(Some(boxes.map(|b| {
        let crop = img.crop(&b).map_err(|e| e.to_string())?;
        let local = checker.relative_to(&b);
        estimate_image(method, &crop, local.as_ref(), params)
            .map(|est| angular_error(&est, &rec.gt))
            .map_err(|e| e.to_string())
    })))
}

/// Runs a method on boxes A..E of every record. Untagged records count as
/// single-illuminant.
pub fn box_shrink_eval(
    manifest: &DatasetManifest,
    method: Method,
    params: &MethodParams,
    levels: &LevelsTable,
    jobs: usize,
) -> Result<BoxShrinkReport> {
    params.validate()?;
    if manifest.records.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let missing: Vec<String> = manifest
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.checker.is_none())
        .map(|(i, r)| format!("line {}: {} has no checker rectangle", i + 2, r.image))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Manifest(missing));
    }
    let outcomes: Vec<_> = thread_pool(jobs)?.install(|| {
        manifest
            .records
            .par_iter()
            .map(|rec| evaluate_boxes(manifest, rec, method, params, levels))
            .collect()
    });

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (rec, outcome) in manifest.records.iter().zip(outcomes) {
        let tag = rec.tag.unwrap_or(IllumTag::Single);
        match outcome {
            Ok(Some(boxes)) => records.push(BoxRecordResult {
                image: rec.image.clone(),
                tag,
                boxes,
            }),
            Ok(None) => {
                warn!("{}: box E would be smaller than {MIN_BOX_SIDE}x{MIN_BOX_SIDE}; skipped", rec.image);
                skipped.push(rec.image.clone());
            }
            Err(msg) => {
                warn!("{}: {msg}", rec.image);
                records.push(BoxRecordResult {
                    image: rec.image.clone(),
                    tag,
                    boxes: std::array::from_fn(|_| Err(msg.clone())),
                });
            }
        }
    }
    let table = |tag: IllumTag| -> Result<[Option<EvalStats>; 5]> {
        let mut out = [None; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.tag == tag)
                .filter_map(|r| r.boxes[k].as_ref().ok().copied())
                .collect();
            if !errs.is_empty() {
                *slot = Some(summarize(&errs)?);
            }
        }
        Ok(out)
    };
    Ok(BoxShrinkReport {
        method,
        params: params.clone(),
        single: table(IllumTag::Single)?,
        double: table(IllumTag::Double)?,
        records,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeReport {
    /// Wall time of each timed run, in seconds.
    pub runs: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Median wall time of `runs` (at least 5) runs after one warm-up, on the
/// calling thread.
pub fn measure_runtime(
    img: &LinearImage,
    method: Method,
    params: &MethodParams,
    runs: usize,
) -> Result<RuntimeReport> {
    params.validate()?;
    let runs = runs.max(5);
    estimate_image(method, img, None, params)?;
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        estimate_image(method, img, None, params)?;
        times.push(start.elapsed().as_secs_f64());
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(RuntimeReport {
        median: quantile(&sorted, 0.5),
        min: sorted[0],
        max: sorted[runs - 1],
        runs: times,
    })
}

/// Options for [`write_synthetic_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub preset: Preset,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

/// Renders seeded scenes into `dir` as raw-count PFM files, cycling through
/// the cameras of `levels`, and writes `manifest.csv`. Each scene also gets
/// its recipe (`.scene`) and ground-truth illuminant field (`.field.bin`).
/// Returns the manifest path.
pub fn write_synthetic_dataset(dir: &Path, opts: &SynthOptions, levels: &LevelsTable) -> Result<PathBuf> {
    if opts.count == 0 {
        return Err(Error::InvalidArgument("scene count must be >= 1".into()));
    }
    let cameras = levels.cameras();
    if cameras.is_empty() {
        return Err(Error::InvalidArgument("camera levels table is empty".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut seeds = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut records = Vec::with_capacity(opts.count);
    for i in 0..opts.count {
        let scene_seed = rand::Rng::gen::<u64>(&mut seeds);
        let desc = preset_scene(opts.preset, opts.width, opts.height, scene_seed);
        let spec = desc.build()?;
        let (img, field) = render_any(&spec)?;
        let camera = &cameras[i % cameras.len()];
        let raw = to_raw(&img, camera);
        let stem = format!("scene_{i:03}");
        let [r, g, b] = raw.planes();
        io::write_pfm(&dir.join(format!("{stem}.pfm")), img.width(), img.height(), [r, g, b])?;
        let scene_path = dir.join(format!("{stem}.scene"));
        std::fs::write(&scene_path, desc.to_text()).map_err(|e| Error::io(&scene_path, e))?;
        io::write_raster(
            &dir.join(format!("{stem}.field.bin")),
            field.width(),
            field.height(),
            &field.planes(),
        )?;
        records.push(ManifestRecord {
            image: format!("{stem}.pfm"),
            gt: desc.illuminant,
            camera: camera.camera_id().to_string(),
            checker: desc.checker,
            tag: Some(if desc.second_illuminant.is_some() {
                IllumTag::Double
            } else {
                IllumTag::Single
            }),
        });
    }
    let path = dir.join("manifest.csv");
    DatasetManifest::new(dir, records).save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(r: f64, g: f64, b: f64) -> ChromaVector {
        ChromaVector::from_rgb(r, g, b).unwrap()
    }

    #[test]
    fn angular_error_examples() {
        let a = cv(0.2, 0.5, 0.3);
        assert_eq!(angular_error(&a, &a), 0.0);
        assert!((angular_error(&cv(1.0, 0.0, 0.0), &cv(0.0, 1.0, 0.0)) - 90.0).abs() < 1e-12);
        let e = angular_error(&cv(1.0, 1.0, 1.0), &cv(1.0, 1.0, 0.0));
        assert!((e - 35.264389682754654).abs() < 1e-9, "{e}");
    }

    #[test]
    fn summarize_worked_example() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(
            (s.mean, s.median, s.trimean, s.best25, s.worst25, s.count),
            (3.0, 3.0, 3.0, 1.5, 4.5, 5)
        );
    }

    #[test]
    fn summarize_singleton_and_empty() {
        let s = summarize(&[2.5]).unwrap();
        assert_eq!([s.mean, s.median, s.trimean, s.best25, s.worst25], [2.5; 5]);
        assert!(matches!(summarize(&[]), Err(Error::EmptyErrorList)));
    }

    #[test]
    fn summarize_even_length() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        // Q1 = 1.75, Q3 = 3.25
        assert_eq!(s.trimean, 2.5);
        assert_eq!((s.best25, s.worst25), (1.0, 4.0));
    }

    const SAMPLE: &str = "image,gt_r,gt_g,gt_b,camera,checker_x,checker_y,checker_w,checker_h,illum_tag\n\
        a.png,0.3,0.6,0.4,Canon5D,10,20,30,40,single\n\
        /abs/b.png,1,1,1,X,,,,,\n";

    #[test]
    fn manifest_parse_and_round_trip() {
        let m = DatasetManifest::parse(SAMPLE, "/data").unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].checker, Some(Rect::new(10, 20, 30, 40)));
        assert_eq!(m.records[0].tag, Some(IllumTag::Single));
        assert_eq!(m.records[1].checker, None);
        assert_eq!(m.resolve(&m.records[0]), PathBuf::from("/data/a.png"));
        assert_eq!(m.resolve(&m.records[1]), PathBuf::from("/abs/b.png"));
        let again = DatasetManifest::parse(&m.to_csv(), "/data").unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn manifest_lists_every_bad_line() {
        let text = "image,gt_r,gt_g,gt_b,camera,checker_x,checker_y,checker_w,checker_h,illum_tag\n\
            a.png,0,0,0,C,,,,,\n\
            b.png,1,1,1,C,,,,,\n\
            c.png,1,x,1,C,,,,,\n\
            d.png,1,1,1,C,1,2,,,triple\n";
        match DatasetManifest::parse(text, ".") {
            Err(Error::Manifest(lines)) => {
                assert_eq!(lines.len(), 3, "{lines:?}");
                assert!(lines[0].starts_with("line 2:"));
                assert!(lines[1].starts_with("line 4:"));
                assert!(lines[2].starts_with("line 5:"));
            }
            other => panic!("{other:?}"),
        }
        assert!(DatasetManifest::parse("image,gt\n", ".").is_err());
    }

    #[test]
    fn method_registry() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let e = "nope".parse::<Method>().unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("nope") && msg.contains("gray-edge-2") && msg.contains("gi"));
    }

    #[test]
    fn empty_manifest() {
        let m = DatasetManifest::new(".", vec![]);
        let e = run_benchmark(&m, Method::Gi, &MethodParams::default(), &LevelsTable::builtin(), 1);
        assert!(matches!(e, Err(Error::EmptyManifest)));
    }

    #[test]
    fn boxes_halve_and_stay_inside() {
        let b = shrink_boxes(1024, 512, &Rect::new(1000, 10, 20, 10));
        assert_eq!(b[0], Rect::new(0, 0, 1024, 512));
        for k in 1..5 {
            assert_eq!(b[k].width, 1024 >> k);
            assert_eq!(b[k].height, 512 >> k);
            assert!(b[k].x + b[k].width <= 1024 && b[k].y + b[k].height <= 512);
        }
        let c = shrink_boxes(1024, 1024, &Rect::new(400, 500, 48, 24));
        // centred on (424, 512)
        assert_eq!(c[4], Rect::new(392, 480, 64, 64));
    }

    #[test]
    fn missing_images_become_error_rows() {
        let rec = ManifestRecord {
            image: "missing.png".into(),
            gt: ChromaVector::neutral(),
            camera: "C".into(),
            checker: None,
            tag: None,
        };
        let m = DatasetManifest::new("/nonexistent", vec![rec]);
        let r = run_benchmark(&m, Method::GrayWorld, &MethodParams::default(), &LevelsTable::builtin(), 1)
            .unwrap();
        assert_eq!(r.failed, 1);
        assert!(r.overall.is_none());
        assert!(r.to_csv().contains(",error,"));
    }
}
