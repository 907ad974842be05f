//! Dichromatic-reflection scene renderer used as a ground-truth oracle.
//!
//! Each pixel is rendered in narrow-band form
//! `I_i = (gamma_b R_b,i + gamma_s R_s,i) L_i`, with body reflectance `R_b`,
//! surface (interface) reflectance `R_s`, shading `gamma_b` and specular
//! intensity `gamma_s`. Gray surfaces obey neutral interface reflection:
//! both reflectances are equal across channels.
//!
//! Scenes are described by a small seeded [`SceneDescription`] that
//! serializes to line-oriented `key value` text, and materialized into
//! per-pixel fields by [`SceneDescription::build`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::estimation::IlluminantField;
use crate::image::{ChromaVector, LinearImage, Rect};
use crate::preprocess::{CameraLevels, RawImage};

/// Linear reflectances of a 4x6 colour checker, row-major.
const CHECKER_COLORS: [[f64; 3]; 24] = [
    [0.17, 0.08, 0.06],
    [0.56, 0.33, 0.26],
    [0.11, 0.19, 0.34],
    [0.10, 0.15, 0.06],
    [0.23, 0.21, 0.43],
    [0.12, 0.50, 0.41],
    [0.70, 0.20, 0.03],
    [0.06, 0.10, 0.39],
    [0.55, 0.08, 0.12],
    [0.10, 0.04, 0.14],
    [0.34, 0.50, 0.05],
    [0.76, 0.36, 0.02],
    [0.02, 0.05, 0.29],
    [0.05, 0.29, 0.06],
    [0.44, 0.03, 0.04],
    [0.84, 0.58, 0.01],
    [0.50, 0.08, 0.29],
    [0.00, 0.23, 0.38],
    [0.88, 0.88, 0.88],
    [0.59, 0.59, 0.59],
    [0.36, 0.36, 0.36],
    [0.19, 0.19, 0.19],
    [0.09, 0.09, 0.09],
    [0.03, 0.03, 0.03],
];

/// How the second illuminant is distributed over the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blend {
    /// Illuminant A on columns `x < split`, B elsewhere.
    HardSplit { split: usize },
    /// Weight of A falls linearly from 1 at the left edge to 0 at the right.
    Ramp,
}

/// Seeded, serializable recipe for a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub illuminant: ChromaVector,
    pub second_illuminant: Option<(ChromaVector, Blend)>,
    /// Albedo of the gray background.
    pub background: f64,
    /// Specular amplitude on gray surfaces.
    pub gray_specular: f64,
    /// Number of sinusoids in the shading field.
    pub shading_terms: usize,
    /// Gray rectangles of random albedo.
    pub gray_patches: usize,
    /// Chromatic rectangles.
    pub color_patches: usize,
    /// Specular amplitude on chromatic patches.
    pub patch_specular: f64,
    /// Relative amplitude of per-channel reflectance texture on chromatic
    /// patches.
    pub patch_texture: f64,
    /// Amplitude of independent per-pixel, per-channel reflectance grain on
    /// chromatic patches.
    pub patch_grain: f64,
    pub checker: Option<Rect>,
    /// Largest rendered value after rescaling.
    pub exposure: f64,
    /// Relative standard deviation of a per-pixel, per-channel sensor gain
    /// (photo-response non-uniformity); 0 renders noise-free.
    pub sensor_noise: f64,
}

impl SceneDescription {
    /// Gray background, random patches, single illuminant.
    pub fn new(width: usize, height: usize, seed: u64, illuminant: ChromaVector) -> Self {
        SceneDescription {
            width,
            height,
            seed,
            illuminant,
            second_illuminant: None,
            background: 0.5,
            gray_specular: 0.0,
            shading_terms: 3,
            gray_patches: 3,
            color_patches: 6,
            patch_specular: 0.3,
            patch_texture: 0.15,
            patch_grain: 0.0,
            checker: None,
            exposure: 0.85,
            sensor_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("scene: {m}")));
        if self.width < 8 || self.height < 8 {
            return bad("dimensions must be at least 8x8");
        }
        if !(0.0..=1.0).contains(&self.background) || self.background == 0.0 {
            return bad("background albedo must lie in (0, 1]");
        }
        if !(self.exposure > 0.0 && self.exposure <= 1.0) {
            return bad("exposure must lie in (0, 1]");
        }
        if !(0.0..0.1).contains(&self.sensor_noise) {
            return bad("sensor noise must lie in [0, 0.1)");
        }
        if self.gray_specular < 0.0 || self.patch_specular < 0.0 {
            return bad("specular amplitudes must be non-negative");
        }
        if !(0.0..1.0).contains(&self.patch_texture) {
            return bad("patch texture must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&(self.patch_texture + self.patch_grain)) || self.patch_grain < 0.0 {
            return bad("patch texture plus grain must lie in [0, 1)");
        }
        if let Some((_, Blend::HardSplit { split })) = self.second_illuminant {
            if split == 0 || split >= self.width {
                return bad("split column must lie inside the image");
            }
        }
        if let Some(c) = self.checker {
            if c.clip(self.width, self.height) != Some(c) || c.width < 6 || c.height < 4 {
                return bad("checker must lie inside the image and span at least 6x4 pixels");
            }
        }
        Ok(())
    }

    /// Materializes the per-pixel fields.
    pub fn build(&self) -> Result<SceneSpec> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let n = w * h;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let shading = SmoothField::random(&mut rng, self.shading_terms, w, h, 0.6);
        let gray_spec = SmoothField::random(&mut rng, 2, w, h, 1.0);
        let mut gamma_b = vec![0.0; n];
        let mut gamma_s = vec![0.0; n];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                gamma_b[i] = 1.0 + shading.eval(x, y);
                gamma_s[i] = self.gray_specular * (0.5 + 0.5 * gray_spec.eval(x, y));
            }
        }
        let mut body = [
            vec![self.background; n],
            vec![self.background; n],
            vec![self.background; n],
        ];
        let surface = [vec![1.0; n], vec![1.0; n], vec![1.0; n]];

        let keep_clear = self.checker.map(|c| {
            let (cx, cy) = c.center();
            let hw = (w as f64 / 8.0).max(c.width as f64);
            let hh = (h as f64 / 8.0).max(c.height as f64);
            (cx - hw, cy - hh, cx + hw, cy + hh)
        });
        let random_rect = |rng: &mut ChaCha8Rng| {
            let mut attempts = 0;
            loop {
                let rw = rng.gen_range(w / 10..=w / 4).max(4);
                let rh = rng.gen_range(h / 10..=h / 4).max(4);
                let x = rng.gen_range(0..=w - rw);
                let y = rng.gen_range(0..=h - rh);
                let overlaps = keep_clear.is_some_and(|(x0, y0, x1, y1)| {
                    (x as f64) < x1
                        && ((x + rw) as f64) > x0
                        && (y as f64) < y1
                        && ((y + rh) as f64) > y0
                });
                attempts += 1;
                if !overlaps || attempts >= 200 {
                    return Rect::new(x, y, rw, rh);
                }
            }
        };

        for _ in 0..self.gray_patches {
            let r = random_rect(&mut rng);
            let albedo = rng.gen_range(0.2..0.9);
            for y in r.y..r.y + r.height {
                for x in r.x..r.x + r.width {
                    for plane in body.iter_mut() {
                        plane[y * w + x] = albedo;
                    }
                }
            }
        }

        for _ in 0..self.color_patches {
            let r = random_rect(&mut rng);
            let base = random_chromatic(&mut rng);
            let texture = [0, 1, 2].map(|_| SmoothField::random(&mut rng, 2, w, h, 1.0));
            let lobes = SmoothField::random(&mut rng, 2, w, h, 1.0);
            for y in r.y..r.y + r.height {
                for x in r.x..r.x + r.width {
                    let i = y * w + x;
                    for c in 0..3 {
                        let grain = if self.patch_grain > 0.0 {
                            self.patch_grain * rng.gen_range(-1.0..=1.0)
                        } else {
                            0.0
                        };
                        body[c][i] = base[c] * (1.0 + self.patch_texture * texture[c].eval(x, y) + grain);
                    }
                    gamma_s[i] = self.patch_specular * (0.5 + 0.5 * lobes.eval(x, y));
                }
            }
        }

        if let Some(c) = self.checker {
            for y in c.y..c.y + c.height {
                for x in c.x..c.x + c.width {
                    let col = (x - c.x) * 6 / c.width;
                    let row = (y - c.y) * 4 / c.height;
                    let refl = CHECKER_COLORS[row * 6 + col];
                    let i = y * w + x;
                    for k in 0..3 {
                        body[k][i] = refl[k];
                    }
                    gamma_s[i] = 0.0;
                }
            }
        }

        let illumination = match self.second_illuminant {
            None => SceneIllumination::Single(self.illuminant),
            Some((b, blend)) => {
                let beta = (0..n)
                    .map(|i| {
                        let x = i % w;
                        match blend {
                            Blend::HardSplit { split } => {
                                if x < split {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            Blend::Ramp => 1.0 - x as f64 / (w - 1) as f64,
                        }
                    })
                    .collect();
                SceneIllumination::Two {
                    a: self.illuminant,
                    b,
                    beta,
                }
            }
        };

        let gain = (self.sensor_noise > 0.0).then(|| {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(self.seed);
            noise_rng.set_stream(1);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            [0, 1, 2].map(|_| {
                (0..n)
                    .map(|_| {
                        let z: f64 = normal.sample(&mut noise_rng);
                        1.0 + self.sensor_noise * z.clamp(-3.0, 3.0)
                    })
                    .collect()
            })
        });

        let mut spec = SceneSpec {
            width: w,
            height: h,
            body,
            surface,
            gamma_b,
            gamma_s,
            illumination,
            gain,
        };
        spec.rescale_to(self.exposure);
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# grayindex synthetic scene\n");
        let c = |v: &ChromaVector| format!("{} {} {}", v.r(), v.g(), v.b());
        let _ = writeln!(s, "width {}", self.width);
        let _ = writeln!(s, "height {}", self.height);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "illuminant {}", c(&self.illuminant));
        if let Some((b, blend)) = &self.second_illuminant {
            let _ = writeln!(s, "illuminant_b {}", c(b));
            match blend {
                Blend::HardSplit { split } => {
                    let _ = writeln!(s, "blend hard-split {split}");
                }
                Blend::Ramp => {
                    let _ = writeln!(s, "blend ramp");
                }
            }
        }
        let _ = writeln!(s, "background {}", self.background);
        let _ = writeln!(s, "gray_specular {}", self.gray_specular);
        let _ = writeln!(s, "shading_terms {}", self.shading_terms);
        let _ = writeln!(s, "gray_patches {}", self.gray_patches);
        let _ = writeln!(s, "color_patches {}", self.color_patches);
        let _ = writeln!(s, "patch_specular {}", self.patch_specular);
        let _ = writeln!(s, "patch_texture {}", self.patch_texture);
        let _ = writeln!(s, "patch_grain {}", self.patch_grain);
        if let Some(r) = self.checker {
            let _ = writeln!(s, "checker {} {} {} {}", r.x, r.y, r.width, r.height);
        }
        let _ = writeln!(s, "exposure {}", self.exposure);
        let _ = writeln!(s, "sensor_noise {}", self.sensor_noise);
        s
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("scene: bad value `{v}` for `{key}`")))
}

impl FromStr for SceneDescription {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut illuminant = None;
        let mut scene = SceneDescription::new(8, 8, 0, ChromaVector::neutral());
        let mut second: Option<ChromaVector> = None;
        let mut blend: Option<Blend> = None;
        let chroma = |key: &str, vals: &[&str]| -> Result<ChromaVector> {
            if vals.len() != 3 {
                return Err(Error::Config(format!("scene: `{key}` needs three components")));
            }
            ChromaVector::from_rgb(
                parse_num(key, vals[0])?,
                parse_num(key, vals[1])?,
                parse_num(key, vals[2])?,
            )
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let vals: Vec<&str> = parts.collect();
            let one = || -> Result<&str> {
                match vals.as_slice() {
                    [v] => Ok(*v),
                    _ => Err(Error::Config(format!("scene: `{key}` takes one value"))),
                }
            };
            match key {
                "width" => width = Some(parse_num(key, one()?)?),
                "height" => height = Some(parse_num(key, one()?)?),
                "seed" => scene.seed = parse_num(key, one()?)?,
                "illuminant" => illuminant = Some(chroma(key, &vals)?),
                "illuminant_b" => second = Some(chroma(key, &vals)?),
                "blend" => {
                    blend = Some(match vals.as_slice() {
                        ["hard-split", split] => Blend::HardSplit {
                            split: parse_num(key, split)?,
                        },
                        ["ramp"] => Blend::Ramp,
                        _ => {
                            return Err(Error::Config(format!(
                                "scene: unknown blend `{}`",
                                vals.join(" ")
                            )))
                        }
                    })
                }
                "background" => scene.background = parse_num(key, one()?)?,
                "gray_specular" => scene.gray_specular = parse_num(key, one()?)?,
                "shading_terms" => scene.shading_terms = parse_num(key, one()?)?,
                "gray_patches" => scene.gray_patches = parse_num(key, one()?)?,
                "color_patches" => scene.color_patches = parse_num(key, one()?)?,
                "patch_specular" => scene.patch_specular = parse_num(key, one()?)?,
                "patch_texture" => scene.patch_texture = parse_num(key, one()?)?,
                "exposure" => scene.exposure = parse_num(key, one()?)?,
                "patch_grain" => scene.patch_grain = parse_num(key, one()?)?,
                "sensor_noise" => scene.sensor_noise = parse_num(key, one()?)?,
                "checker" => {
                    let v: Vec<usize> = vals
                        .iter()
                        .map(|v| parse_num(key, v))
                        .collect::<Result<_>>()?;
                    match v.as_slice() {
                        [x, y, w, h] => scene.checker = Some(Rect::new(*x, *y, *w, *h)),
                        _ => return Err(Error::Config("scene: `checker` takes x y w h".into())),
                    }
                }
                other => return Err(Error::Config(format!("scene: unknown key `{other}`"))),
            }
        }
        scene.width = width.ok_or_else(|| Error::Config("scene: missing `width`".into()))?;
        scene.height = height.ok_or_else(|| Error::Config("scene: missing `height`".into()))?;
        scene.illuminant =
            illuminant.ok_or_else(|| Error::Config("scene: missing `illuminant`".into()))?;
        scene.second_illuminant = match (second, blend) {
            (Some(b), Some(bl)) => Some((b, bl)),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "scene: `illuminant_b` and `blend` must be given together".into(),
                ))
            }
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// Sum of random-phase sinusoids, normalized so `|f| <= amplitude`.
#[derive(Debug, Clone)]
struct SmoothField {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl SmoothField {
    fn random(rng: &mut ChaCha8Rng, count: usize, w: usize, h: usize, amplitude: f64) -> Self {
        let scale = (w.min(h) as f64).max(16.0);
        let mut terms = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let theta = rng.gen_range(0.0..PI);
            let wavelength = rng.gen_range(0.08..0.3) * scale.min(400.0);
            let k = 2.0 * PI / wavelength;
            let phase = rng.gen_range(0.0..2.0 * PI);
            let weight = rng.gen_range(0.5..1.0);
            weights.push(weight);
            terms.push((weight, k * theta.cos(), k * theta.sin(), phase));
        }
        let total: f64 = weights.iter().sum();
        for t in terms.iter_mut() {
            t.0 *= amplitude / total.max(f64::MIN_POSITIVE);
        }
        SmoothField { terms }
    }

    fn eval(&self, x: usize, y: usize) -> f64 {
        self.terms
            .iter()
            .map(|(a, kx, ky, p)| a * (kx * x as f64 + ky * y as f64 + p).sin())
            .sum()
    }
}

fn random_chromatic(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let c = [0, 1, 2].map(|_| rng.gen_range(0.05..0.9));
        let max = c.iter().cloned().fold(0.0, f64::max);
        let min = c.iter().cloned().fold(1.0, f64::min);
        if max / min >= 2.0 {
            return c;
        }
    }
}

/// Uniform random illuminant with components in `[0.2, 0.9]`, normalized.
pub fn random_illuminant(rng: &mut impl Rng) -> ChromaVector {
    let c = [0, 1, 2].map(|_| rng.gen_range(0.2..=0.9));
    ChromaVector::from_array(c).expect("positive components")
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneIllumination {
    Single(ChromaVector),
    /// Effective illuminant `normalize(beta L_A + (1 - beta) L_B)`.
    Two {
        a: ChromaVector,
        b: ChromaVector,
        beta: Vec<f64>,
    },
}

/// Materialized per-pixel scene fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub body: [Vec<f64>; 3],
    pub surface: [Vec<f64>; 3],
    pub gamma_b: Vec<f64>,
    pub gamma_s: Vec<f64>,
    pub illumination: SceneIllumination,
    /// Per-channel sensor gain; unity when absent.
    pub gain: Option<[Vec<f64>; 3]>,
}

impl SceneSpec {
    /// A scene of constant body reflectance with the given shading.
    pub fn uniform(
        width: usize,
        height: usize,
        body: [f64; 3],
        gamma_b: Vec<f64>,
        illuminant: ChromaVector,
    ) -> Self {
        let n = width * height;
        SceneSpec {
            width,
            height,
            body: body.map(|v| vec![v; n]),
            surface: [vec![1.0; n], vec![1.0; n], vec![1.0; n]],
            gamma_b,
            gamma_s: vec![0.0; n],
            illumination: SceneIllumination::Single(illuminant),
            gain: None,
        }
    }

    fn illuminant_at(&self, i: usize) -> [f64; 3] {
        match &self.illumination {
            SceneIllumination::Single(l) => l.to_array(),
            SceneIllumination::Two { a, b, beta } => {
                let (a, b, t) = (a.to_array(), b.to_array(), beta[i]);
                ChromaVector::from_array([0, 1, 2].map(|k| t * a[k] + (1.0 - t) * b[k]))
                    .expect("blend of non-negative unit vectors")
                    .to_array()
            }
        }
    }

    fn radiance(&self, i: usize, l: &[f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|c| {
            let g = self.gain.as_ref().map_or(1.0, |g| g[c][i]);
            (self.gamma_b[i] * self.body[c][i] + self.gamma_s[i] * self.surface[c][i]) * l[c] * g
        })
    }

    /// Scales both intensity fields so the brightest rendered value equals
    /// `peak`.
    pub fn rescale_to(&mut self, peak: f64) {
        let max = (0..self.width * self.height)
            .map(|i| {
                let l = self.illuminant_at(i);
                self.radiance(i, &l).into_iter().fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if max > 0.0 {
            let s = peak / max;
            self.gamma_b.iter_mut().for_each(|v| *v *= s);
            self.gamma_s.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn render_pixels(&self) -> Result<LinearImage> {
        let (w, h) = (self.width, self.height);
        let n = w * h;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let l = self.illuminant_at(i);
            let v = self.radiance(i, &l);
            for c in 0..3 {
                if !(v[c] <= 1.0) {
                    return Err(Error::Overflow {
                        x: i % w,
                        y: i / w,
                        value: v[c],
                    });
                }
                planes[c][i] = v[c];
            }
        }
        let [r, g, b] = planes;
        LinearImage::new(w, h, r, g, b)
    }

    /// The ground-truth illuminant field.
    pub fn illuminant_field(&self) -> IlluminantField {
        IlluminantField::from_fn(self.width, self.height, |x, y| {
            ChromaVector::from_array(self.illuminant_at(y * self.width + x))
                .expect("unit illuminant")
        })
    }
}

/// Renders a single-illuminant scene.
pub fn render(scene: &SceneSpec) -> Result<LinearImage> {
    if !matches!(scene.illumination, SceneIllumination::Single(_)) {
        return Err(Error::InvalidArgument(
            "render expects a single illuminant; use render_two_illuminant".into(),
        ));
    }
    scene.render_pixels()
}

/// Renders a spatially varying scene and returns its exact illuminant field.
pub fn render_two_illuminant(scene: &SceneSpec) -> Result<(LinearImage, IlluminantField)> {
    if !matches!(scene.illumination, SceneIllumination::Two { .. }) {
        return Err(Error::InvalidArgument(
            "render_two_illuminant expects two illuminants and a blend field".into(),
        ));
    }
    Ok((scene.render_pixels()?, scene.illuminant_field()))
}

/// Renders any scene, returning the ground-truth field alongside.
pub fn render_any(scene: &SceneSpec) -> Result<(LinearImage, IlluminantField)> {
    Ok((scene.render_pixels()?, scene.illuminant_field()))
}

/// Converts a linear image into the raw counts a camera with `levels` would
/// record (no quantization).
pub fn to_raw(img: &LinearImage, levels: &CameraLevels) -> RawImage {
    let planes = img
        .planes()
        .map(|p| p.iter().map(|v| levels.to_raw(*v)).collect::<Vec<_>>());
    RawImage::new(img.width(), img.height(), planes).expect("counts are non-negative")
}

/// Named scene recipes used by the generator and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Gray background, gray and chromatic patches, one illuminant.
    Single,
    /// Only gray surfaces (varying albedo), no specular reflection.
    Gray,
    /// Hard left/right illuminant split, checker just left of the boundary.
    TwoIllum,
    /// A dominant saturated surface that defeats the gray-world assumption.
    Biased,
}

/// Sensor gain noise of the presets that model a camera (all but `Gray`).
pub const PRESET_SENSOR_NOISE: f64 = 0.005;

/// Reflectance grain on the chromatic patches of the presets.
pub const PRESET_PATCH_GRAIN: f64 = 0.05;

/// Builds a preset scene; the seed also drives the illuminant choice.
pub fn preset_scene(preset: Preset, width: usize, height: usize, seed: u64) -> SceneDescription {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_11_u64);
    let illuminant = random_illuminant(&mut rng);
    let mut scene = SceneDescription::new(width, height, seed, illuminant);
    scene.sensor_noise = PRESET_SENSOR_NOISE;
    scene.patch_grain = PRESET_PATCH_GRAIN;
    let checker = |cx: usize, cy: usize| {
        let cw = (width / 20).max(12);
        let ch = (height / 24).max(8);
        Rect::new(cx.saturating_sub(cw / 2), cy.saturating_sub(ch / 2), cw, ch)
    };
    match preset {
        Preset::Single => {
            scene.checker = Some(checker(width / 3, height / 2));
        }
        Preset::Gray => {
            scene.sensor_noise = 0.0;
            scene.color_patches = 0;
            scene.gray_patches = 4;
            scene.patch_specular = 0.0;
        }
        Preset::TwoIllum => {
            // warm/cool pair: B mirrors A's red and blue components
            let (first, other) = loop {
                let a = random_illuminant(&mut rng);
                let b = ChromaVector::from_rgb(a.b(), a.g(), a.r()).expect("positive");
                if b.dot(&a).min(1.0).acos().to_degrees() > 8.0 {
                    break (a, b);
                }
            };
            scene.illuminant = first;
            scene.second_illuminant = Some((other, Blend::HardSplit { split: width / 2 }));
            // centred 3/64 of the width left of the split
            scene.checker = Some(checker(width / 2 - 3 * width / 64, height / 2));
        }
        Preset::Biased => {
            scene.color_patches = 10;
            scene.background = 0.5;
            scene.checker = Some(checker(width / 3, height / 2));
        }
    }
    scene
}
