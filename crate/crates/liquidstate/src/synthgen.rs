//! Synthetic pressure-map generator: 15 posture templates built from 2-D
//! Gaussian blobs on the seat and backrest regions, rendered per subject
//! with weight scaling, seat shifts, and sensor noise.
//!
//! Postures share a common contact footprint (both thighs, both ischia, and
//! usually the backrest); what distinguishes them is where the pressure
//! mass concentrates. Crossed-leg postures lighten one thigh, leaning
//! postures shift mass laterally or onto the backrest, and so on. One
//! subject has kyphosis: their backrest contact looks similar whether they
//! sit upright or lean back, which makes those classes hard for that
//! subject, mirroring the intended difficulty.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{
    assemble_frame, DatasetManifest, PostureLabel, PressureFrame, BACKREST_COLS, BACKREST_ROWS,
    SEAT_COLS, SEAT_ROWS,
};

/// Schema tag for template files.
pub const TEMPLATES_VERSION: &str = "posture-templates v1";

/// Minimum pairwise L2 distance between noiseless class renders; guards
/// against degenerate template edits.
pub const MIN_CLASS_SEPARATION: f64 = 250.0;

/// Per-frame jitter on the seat shift, grid cells (standard deviation).
const JITTER_SD: f64 = 0.10;
/// Per-frame multiplicative wobble on the weight scale (standard deviation).
const SCALE_WOBBLE_SD: f64 = 0.02;
/// Kyphosis: fraction of the leaning-back backrest pattern mixed into
/// upright-style sitting.
const KYPHOSIS_TOWARD_STRONG: f64 = 0.45;
/// Kyphosis: attenuation of the leaning-back backrest pattern plus a touch
/// of the upright pattern, so the two directions meet in the middle.
const KYPHOSIS_STRONG_KEEP: f64 = 0.78;
const KYPHOSIS_TOWARD_LIGHT: f64 = 0.22;

/// Axis-aligned 2-D Gaussian pressure bump. Coordinates are region-local
/// grid cells; `amplitude` is in ADC counts at a reference body weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: (f64, f64),
    pub sigma: (f64, f64),
    pub amplitude: f64,
}

impl Blob {
    fn new(cr: f64, cc: f64, sr: f64, sc: f64, amplitude: f64) -> Blob {
        Blob {
            center: (cr, cc),
            sigma: (sr, sc),
            amplitude,
        }
    }

    pub fn eval(&self, r: f64, c: f64) -> f64 {
        let dr = r - self.center.0;
        let dc = c - self.center.1;
        let e = dr * dr / (2.0 * self.sigma.0 * self.sigma.0)
            + dc * dc / (2.0 * self.sigma.1 * self.sigma.1);
        self.amplitude * (-e).exp()
    }

    /// Integral over the whole plane: `2 pi a sigma_r sigma_c`.
    pub fn integral(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.amplitude * self.sigma.0 * self.sigma.1
    }

    fn mirrored(&self, cols: usize) -> Blob {
        Blob {
            center: (self.center.0, (cols - 1) as f64 - self.center.1),
            ..*self
        }
    }

    fn scaled(&self, factor: f64) -> Blob {
        Blob {
            amplitude: self.amplitude * factor,
            ..*self
        }
    }
}

/// Blob sets for one posture. Seat coordinates: row 0 is the seat rear
/// (against the backrest), row 8 the leading edge; column 0 is the sitter's
/// left. Backrest coordinates: row 0 is the top, row 9 meets the seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostureTemplate {
    pub label: PostureLabel,
    pub seat: Vec<Blob>,
    pub backrest: Vec<Blob>,
}

/// How a posture loads the backrest; drives the kyphosis blend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BackrestFamily {
    /// Torso upright, light lumbar contact.
    Light,
    /// Leaning back, lumbar plus shoulder-blade contact.
    Strong,
    /// Slouched: strong low contact only.
    Slouch,
    /// No meaningful backrest contact (leaning forward, leading edge).
    None,
}

fn backrest_family(label: PostureLabel) -> BackrestFamily {
    use PostureLabel::*;
    match label {
        LeaningForward | SittingOnLeadingEdge => BackrestFamily::None,
        LeaningBack | LcLeaningBack | RcLeaningBack | LaLeaningBack | RaLeaningBack => {
            BackrestFamily::Strong
        }
        SlouchingBackDown => BackrestFamily::Slouch,
        _ => BackrestFamily::Light,
    }
}

/// The 15 posture templates plus the shared rendering logic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<PostureTemplate>,
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    version: String,
    #[serde(flatten)]
    set: TemplateSet,
}

/// Standard seat footprint: two ischial bumps at the rear, two thigh ridges
/// running forward. Per-posture factors reweight the four contacts without
/// moving the footprint, so contact area alone says little about the class.
fn seat_base(isch_l: f64, isch_r: f64, thigh_l: f64, thigh_r: f64) -> Vec<Blob> {
    vec![
        Blob::new(2.0, 2.8, 1.35, 1.20, 1.00 * isch_l),
        Blob::new(2.0, 5.2, 1.35, 1.20, 1.00 * isch_r),
        Blob::new(5.2, 2.6, 2.20, 1.10, 0.55 * thigh_l),
        Blob::new(5.2, 5.4, 2.20, 1.10, 0.55 * thigh_r),
    ]
}

fn backrest_light(col_shift: f64) -> Vec<Blob> {
    vec![Blob::new(7.2, 4.0 + col_shift, 1.7, 2.1, 0.24)]
}

fn backrest_strong() -> Vec<Blob> {
    vec![
        Blob::new(6.8, 4.0, 2.0, 2.3, 0.66),
        Blob::new(2.2, 4.0, 1.7, 2.5, 0.55),
    ]
}

fn backrest_slouch() -> Vec<Blob> {
    vec![
        Blob::new(8.6, 4.0, 1.1, 2.4, 0.72),
        Blob::new(5.5, 4.0, 1.5, 2.2, 0.18),
    ]
}

fn backrest_graze() -> Vec<Blob> {
    vec![Blob::new(8.0, 4.0, 1.2, 1.8, 0.012)]
}

fn shift_blobs(blobs: &mut [Blob], dr: f64, dc: f64) {
    for b in blobs {
        b.center.0 += dr;
        b.center.1 += dc;
    }
}

fn mirror_template(t: &PostureTemplate, label: PostureLabel) -> PostureTemplate {
    PostureTemplate {
        label,
        seat: t.seat.iter().map(|b| b.mirrored(SEAT_COLS)).collect(),
        backrest: t.backrest.iter().map(|b| b.mirrored(BACKREST_COLS)).collect(),
    }
}

fn raw_default_templates() -> Vec<PostureTemplate> {
    use PostureLabel::*;
    let mut out: Vec<PostureTemplate> = Vec::with_capacity(15);

    out.push(PostureTemplate {
        label: Upright,
        seat: seat_base(1.0, 1.0, 1.0, 1.0),
        backrest: backrest_light(0.0),
    });

    // Leaning right: the whole contact patch slides right, mass moves onto
    // the right ischium/thigh plus the right seat edge, and the light
    // backrest patch moves right too.
    let mut seat = seat_base(0.55, 1.25, 0.62, 1.35);
    shift_blobs(&mut seat, 0.0, 0.7);
    seat.push(Blob::new(3.0, 7.0, 2.0, 0.9, 0.45));
    let leaning_right = PostureTemplate {
        label: LeaningRight,
        seat,
        backrest: backrest_light(1.2),
    };
    out.push(leaning_right.clone());
    out.push(mirror_template(&leaning_right, LeaningLeft));

    // Leaning forward: the patch slides toward the leading edge, ischia
    // unload, thighs and knee line load up, the backrest is barely grazed.
    let mut seat = seat_base(0.62, 0.62, 1.55, 1.55);
    shift_blobs(&mut seat, 0.8, 0.0);
    seat.push(Blob::new(6.8, 2.6, 1.5, 1.0, 0.55));
    seat.push(Blob::new(6.8, 5.4, 1.5, 1.0, 0.55));
    out.push(PostureTemplate {
        label: LeaningForward,
        seat,
        backrest: backrest_graze(),
    });

    // Leaning back: the patch slides rearward and the backrest takes real
    // load.
    let mut seat = seat_base(1.15, 1.15, 0.73, 0.73);
    shift_blobs(&mut seat, -0.5, 0.0);
    out.push(PostureTemplate {
        label: LeaningBack,
        seat,
        backrest: backrest_strong(),
    });

    // Left leg crossed over right at the knee: the pelvis stays centred, the
    // raised left thigh keeps only a short ridge next to the ischium, the
    // right thigh carries extra, and the left calf lies as a sideways ridge
    // across the right knee.
    let mut seat = seat_base(0.88, 1.12, 0.80, 1.45);
    seat[2].center.0 = 4.0;
    seat[2].sigma.0 = 1.1;
    seat.push(Blob::new(5.8, 4.3, 1.0, 1.3, 0.52));
    let lc_upright = PostureTemplate {
        label: LcSeatedUpright,
        seat,
        backrest: backrest_light(0.5),
    };
    out.push(lc_upright.clone());
    out.push(mirror_template(&lc_upright, RcSeatedUpright));

    let mut seat = seat_base(0.95, 1.22, 0.80, 1.40);
    seat[2].center.0 = 4.0;
    seat[2].sigma.0 = 1.1;
    seat.push(Blob::new(5.8, 4.3, 1.0, 1.3, 0.50));
    let lc_back = PostureTemplate {
        label: LcLeaningBack,
        seat,
        backrest: backrest_strong(),
    };
    out.push(lc_back.clone());
    out.push(mirror_template(&lc_back, RcLeaningBack));

    // Left ankle on right knee ("figure four"): the open left leg leaves the
    // left thigh region empty, the ankle presses near the right knee's outer
    // edge, and the rotated pelvis pushes weight right and slides the left
    // ischium forward.
    let mut seat = seat_base(0.70, 1.25, 0.05, 1.52);
    seat[0].center.0 = 3.1;
    shift_blobs(&mut seat, 0.0, 0.25);
    seat.push(Blob::new(6.6, 6.1, 1.0, 0.95, 0.72));
    let la_upright = PostureTemplate {
        label: LaSeatedUpright,
        seat,
        backrest: backrest_light(0.8),
    };
    out.push(la_upright.clone());
    out.push(mirror_template(&la_upright, RaSeatedUpright));

    // The figure-four recline also twists the torso, so the strong backrest
    // patch sits off-centre.
    let mut seat = seat_base(0.78, 1.32, 0.05, 1.46);
    seat[0].center.0 = 3.1;
    shift_blobs(&mut seat, 0.0, 0.25);
    seat.push(Blob::new(6.6, 6.1, 1.0, 0.95, 0.70));
    let mut la_backrest = backrest_strong();
    // The twist drops the shoulder patch lower and off-centre.
    la_backrest[1].center.0 = 3.0;
    la_backrest[1].sigma.1 = 1.8;
    shift_blobs(&mut la_backrest, 0.0, 0.8);
    let la_back = PostureTemplate {
        label: LaLeaningBack,
        seat,
        backrest: la_backrest,
    };
    out.push(la_back.clone());
    out.push(mirror_template(&la_back, RaLeaningBack));

    // Sitting on the leading edge: buttocks at the seat front, thighs
    // hanging, torso clear of the backrest.
    out.push(PostureTemplate {
        label: SittingOnLeadingEdge,
        seat: vec![
            Blob::new(5.8, 2.9, 1.3, 1.2, 1.00),
            Blob::new(5.8, 5.1, 1.3, 1.2, 1.00),
            Blob::new(7.5, 2.7, 1.0, 0.9, 0.25),
            Blob::new(7.5, 5.3, 1.0, 0.9, 0.25),
            // Rear seat keeps faint contact so the footprint stays full.
            Blob::new(1.5, 4.0, 1.8, 2.6, 0.14),
        ],
        backrest: backrest_graze(),
    });

    // Slouching: pelvis slides forward, sacrum drags on the rear seat, the
    // torso sinks low against the backrest.
    out.push(PostureTemplate {
        label: SlouchingBackDown,
        seat: {
            let mut s = vec![
                Blob::new(3.8, 2.8, 1.5, 1.2, 1.05),
                Blob::new(3.8, 5.2, 1.5, 1.2, 1.05),
                Blob::new(0.8, 4.0, 1.0, 1.6, 0.65),
            ];
            s.push(Blob::new(6.0, 2.6, 1.6, 1.0, 0.35));
            s.push(Blob::new(6.0, 5.4, 1.6, 1.0, 0.35));
            s
        },
        backrest: backrest_slouch(),
    });

    out
}

fn render_region_noiseless(blobs: &[Blob], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    blobs
                        .iter()
                        .map(|b| b.eval(r as f64, c as f64))
                        .sum::<f64>()
                        .max(0.0)
                })
                .collect()
        })
        .collect()
}

impl TemplateSet {
    pub fn templates(&self) -> &[PostureTemplate] {
        &self.templates
    }

    pub fn template(&self, label: PostureLabel) -> &PostureTemplate {
        &self.templates[label.id()]
    }

    /// Noiseless render of one class at unit weight and zero shift, as the
    /// full 19x10 frame layout in f64.
    pub fn class_mean(&self, label: PostureLabel) -> Vec<Vec<f64>> {
        let t = self.template(label);
        let seat = render_region_noiseless(&t.seat, SEAT_ROWS, SEAT_COLS);
        let backrest = render_region_noiseless(&t.backrest, BACKREST_ROWS, BACKREST_COLS);
        let mut out = vec![vec![0.0; 10]; 19];
        for (r, row) in backrest.iter().enumerate() {
            out[r][..BACKREST_COLS].copy_from_slice(row);
        }
        for (r, row) in seat.iter().enumerate() {
            out[BACKREST_ROWS + r][..SEAT_COLS].copy_from_slice(row);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates.len() != PostureLabel::ALL.len() {
            return Err(Error::InvalidInput(format!(
                "template set has {} entries, expected {}",
                self.templates.len(),
                PostureLabel::ALL.len()
            )));
        }
        for (i, t) in self.templates.iter().enumerate() {
            if t.label.id() != i {
                return Err(Error::InvalidInput(format!(
                    "template {i} is for {:?}, sets must be ordered by class id",
                    t.label.name()
                )));
            }
            for b in t.seat.iter().chain(&t.backrest) {
                if !(b.sigma.0 > 0.0 && b.sigma.1 > 0.0) || !b.amplitude.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "template for {:?} has a degenerate blob",
                        t.label.name()
                    )));
                }
            }
        }
        // Pairwise separation of noiseless class renders.
        let means: Vec<Vec<Vec<f64>>> = PostureLabel::ALL
            .iter()
            .map(|l| self.class_mean(*l))
            .collect();
        for a in 0..means.len() {
            for b in a + 1..means.len() {
                let d2: f64 = means[a]
                    .iter()
                    .flatten()
                    .zip(means[b].iter().flatten())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                if d2.sqrt() < MIN_CLASS_SEPARATION {
                    return Err(Error::InvalidInput(format!(
                        "templates for {:?} and {:?} are only {:.1} apart (floor {MIN_CLASS_SEPARATION})",
                        PostureLabel::ALL[a].name(),
                        PostureLabel::ALL[b].name(),
                        d2.sqrt()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TemplateFile {
            version: TEMPLATES_VERSION.to_string(),
            set: self.clone(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        fs::write(path, json)
            .map_err(|e| Error::io_context(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<TemplateSet> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io_context(format!("reading {}", path.display()), e))?;
        let file: TemplateFile = serde_json::from_str(&text)?;
        if file.version != TEMPLATES_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: expected {TEMPLATES_VERSION:?}, found {:?}",
                path.display(),
                file.version
            )));
        }
        file.set.validate()?;
        Ok(file.set)
    }
}

impl Default for TemplateSet {
    /// Templates normalized so the hottest cell across all noiseless class
    /// renders is 1000 ADC counts at unit weight scale.
    fn default() -> Self {
        let mut set = TemplateSet {
            templates: raw_default_templates(),
        };
        let mut peak = 0.0f64;
        for label in PostureLabel::ALL {
            for row in set.class_mean(label) {
                for v in row {
                    peak = peak.max(v);
                }
            }
        }
        let factor = 1000.0 / peak;
        for t in &mut set.templates {
            for b in t.seat.iter_mut().chain(t.backrest.iter_mut()) {
                b.amplitude *= factor;
            }
        }
        set
    }
}

/// One synthetic sitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: u32,
    /// Multiplier on template pressure; spans the configured range across
    /// subjects so peak values cover roughly 691 to 1023 counts.
    pub weight_scale: f64,
    /// Habitual (row, col) offset of the body on the seat, grid cells.
    pub seat_shift: (f64, f64),
    /// Additive Gaussian sensor noise, ADC counts.
    pub noise_sd: f64,
    pub kyphosis: bool,
}

/// Dataset-level knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_subjects: u32,
    pub frames_per_posture: u32,
    pub seed: u64,
    pub noise_sd: f64,
    /// Subjects' weight_scale values are spread evenly over this range.
    pub weight_scale_range: (f64, f64),
    /// Largest habitual seat offset, cells (uniform in both axes).
    pub shift_max: f64,
    /// Subject given kyphosis; clamped to the subject count.
    pub kyphosis_subject: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_subjects: 19,
            frames_per_posture: 21,
            seed: 42,
            noise_sd: 20.0,
            weight_scale_range: (0.691, 1.023),
            shift_max: 0.30,
            kyphosis_subject: 19,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.frames_per_posture == 0 {
            return Err(Error::InvalidConfig(
                "subject and frame counts must be at least 1".into(),
            ));
        }
        if self.noise_sd < 0.0 || !self.noise_sd.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be non-negative, got {}",
                self.noise_sd
            )));
        }
        let (lo, hi) = self.weight_scale_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig(format!(
                "weight_scale_range ({lo}, {hi}) must satisfy 0 < lo <= hi"
            )));
        }
        if !(0.0..=2.0).contains(&self.shift_max) {
            return Err(Error::InvalidConfig(format!(
                "shift_max must lie in [0, 2] cells, got {}",
                self.shift_max
            )));
        }
        if self.kyphosis_subject == 0 {
            return Err(Error::InvalidConfig(
                "kyphosis_subject is 1-based, got 0".into(),
            ));
        }
        self.total_frames().ok_or_else(|| {
            Error::InvalidConfig("dataset size overflows".into())
        })?;
        Ok(())
    }

    pub fn total_frames(&self) -> Option<u64> {
        (self.n_subjects as u64)
            .checked_mul(self.frames_per_posture as u64)?
            .checked_mul(PostureLabel::ALL.len() as u64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-frame seed from the master seed and frame coordinates.
pub fn frame_seed(master: u64, subject_id: u32, label: PostureLabel, rep: u32) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ subject_id as u64);
    h = splitmix64(h ^ label.id() as u64);
    splitmix64(h ^ rep as u64)
}

/// Derives the subject roster for a config; pure function of the config.
pub fn subject_profiles(cfg: &GeneratorConfig) -> Result<Vec<SubjectProfile>> {
    cfg.validate()?;
    let kyphosis_id = cfg.kyphosis_subject.min(cfg.n_subjects);
    let (lo, hi) = cfg.weight_scale_range;
    let mut out = Vec::with_capacity(cfg.n_subjects as usize);
    for subject_id in 1..=cfg.n_subjects {
        let t = if cfg.n_subjects == 1 {
            1.0
        } else {
            (subject_id - 1) as f64 / (cfg.n_subjects - 1) as f64
        };
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(cfg.seed, subject_id, PostureLabel::Upright, u32::MAX));
        let shift_r = rng.gen_range(-cfg.shift_max..=cfg.shift_max);
        let shift_c = rng.gen_range(-cfg.shift_max..=cfg.shift_max);
        out.push(SubjectProfile {
            subject_id,
            weight_scale: lo + (hi - lo) * t,
            seat_shift: (shift_r, shift_c),
            noise_sd: cfg.noise_sd,
            kyphosis: subject_id == kyphosis_id,
        });
    }
    Ok(out)
}

fn blend_backrest(own: &[Blob], other: &[Blob], own_keep: f64, other_mix: f64) -> Vec<Blob> {
    own.iter()
        .map(|b| b.scaled(own_keep))
        .chain(other.iter().map(|b| b.scaled(other_mix)))
        .collect()
}

/// Backrest blobs for a label as this subject actually presses them.
fn effective_backrest(
    templates: &TemplateSet,
    label: PostureLabel,
    kyphosis: bool,
) -> Vec<Blob> {
    let own = &templates.template(label).backrest;
    if !kyphosis {
        return own.clone();
    }
    let strong = &templates.template(PostureLabel::LeaningBack).backrest;
    let light = &templates.template(PostureLabel::Upright).backrest;
    match backrest_family(label) {
        BackrestFamily::Light => blend_backrest(
            own,
            strong,
            1.0 - KYPHOSIS_TOWARD_STRONG,
            KYPHOSIS_TOWARD_STRONG,
        ),
        BackrestFamily::Strong => {
            blend_backrest(own, light, KYPHOSIS_STRONG_KEEP, KYPHOSIS_TOWARD_LIGHT)
        }
        BackrestFamily::Slouch => blend_backrest(own, strong, 0.85, 0.20),
        BackrestFamily::None => own.clone(),
    }
}

fn render_region(
    blobs: &[Blob],
    rows: usize,
    cols: usize,
    shift: (f64, f64),
    scale: f64,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<u16>> {
    let noise = Normal::new(0.0, noise_sd).expect("validated noise_sd");
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let t: f64 = blobs
                        .iter()
                        .map(|b| b.eval(r as f64 - shift.0, c as f64 - shift.1))
                        .sum();
                    let v = t.max(0.0) * scale + noise.sample(rng);
                    v.round().clamp(0.0, 1023.0) as u16
                })
                .collect()
        })
        .collect()
}

/// Renders one frame with an explicit template set.
pub fn render_posture_with(
    profile: &SubjectProfile,
    label: PostureLabel,
    templates: &TemplateSet,
    seed: u64,
) -> Result<PressureFrame> {
    if profile.noise_sd < 0.0 || !profile.noise_sd.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise_sd must be non-negative, got {}",
            profile.noise_sd
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, JITTER_SD).expect("constant sd");
    let wobble = Normal::new(0.0, SCALE_WOBBLE_SD).expect("constant sd");
    let dr = profile.seat_shift.0 + jitter.sample(&mut rng);
    let dc = profile.seat_shift.1 + jitter.sample(&mut rng);
    let scale = profile.weight_scale * (1.0 + wobble.sample(&mut rng)).max(0.0);

    let seat = render_region(
        &templates.template(label).seat,
        SEAT_ROWS,
        SEAT_COLS,
        (dr, dc),
        scale,
        profile.noise_sd,
        &mut rng,
    );
    // The torso shifts sideways with the body but not with seat depth.
    let backrest_blobs = effective_backrest(templates, label, profile.kyphosis);
    let backrest = render_region(
        &backrest_blobs,
        BACKREST_ROWS,
        BACKREST_COLS,
        (0.0, dc),
        scale,
        profile.noise_sd,
        &mut rng,
    );
    let values = assemble_frame(&seat, &backrest)?;
    PressureFrame::new(values, profile.subject_id, label)
}

/// Renders one frame with the default templates.
pub fn render_posture(
    profile: &SubjectProfile,
    label: PostureLabel,
    seed: u64,
) -> Result<PressureFrame> {
    render_posture_with(profile, label, &TemplateSet::default(), seed)
}

/// Generates the full labeled dataset: every subject renders every posture
/// `frames_per_posture` times. Frame order is subject-major, then class,
/// then repetition; every frame's seed is derived independently, so the
/// output is deterministic.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<(Vec<PressureFrame>, DatasetManifest)> {
    generate_dataset_with(cfg, &TemplateSet::default())
}

pub fn generate_dataset_with(
    cfg: &GeneratorConfig,
    templates: &TemplateSet,
) -> Result<(Vec<PressureFrame>, DatasetManifest)> {
    templates.validate()?;
    let profiles = subject_profiles(cfg)?;
    let total = cfg.total_frames().expect("validated") as usize;
    let mut frames = Vec::with_capacity(total);
    for profile in &profiles {
        for label in PostureLabel::ALL {
            for rep in 0..cfg.frames_per_posture {
                let seed = frame_seed(cfg.seed, profile.subject_id, label, rep);
                frames.push(render_posture_with(profile, label, templates, seed)?);
            }
        }
    }
    let manifest = DatasetManifest::from_frames(&frames, Vec::new(), cfg.seed);
    Ok((frames, manifest))
}
