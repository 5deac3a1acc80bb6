//! Pressure-frame data model: posture labels, raw sensor frames, phase
//! normalization, and the plain-text frame file format.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Frame rows: backrest rows 0-9 stacked above seat rows 10-18.
pub const FRAME_ROWS: usize = 19;
/// Frame columns: 9 sensor columns plus one zero-padded column.
pub const FRAME_COLS: usize = 10;
/// Total cells per frame.
pub const FRAME_CELLS: usize = FRAME_ROWS * FRAME_COLS;
/// Largest representable 10-bit ADC count.
pub const MAX_ADC: u16 = 1023;

/// Seat sheet dimensions (rows x cols).
pub const SEAT_ROWS: usize = 9;
pub const SEAT_COLS: usize = 9;
/// Backrest sheet dimensions (rows x cols).
pub const BACKREST_ROWS: usize = 10;
pub const BACKREST_COLS: usize = 9;

/// Header line expected at the top of every frame file.
pub const FRAME_FILE_HEADER: &str = "# pressure-frames v1 p=19 q=10";

/// Raw cell grid of one frame.
pub type FrameValues = [[u16; FRAME_COLS]; FRAME_ROWS];

/// The fifteen sitting postures recognized by the pipeline.
///
/// Abbreviations in the canonical names: `LC` = left leg crossed over the
/// right leg, `RC` = right leg crossed over the left leg, `LA` = left ankle
/// resting on the leg, `RA` = right ankle resting on the leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum PostureLabel {
    Upright = 0,
    LeaningRight = 1,
    LeaningLeft = 2,
    LeaningForward = 3,
    LeaningBack = 4,
    LcSeatedUpright = 5,
    RcSeatedUpright = 6,
    LcLeaningBack = 7,
    RcLeaningBack = 8,
    LaSeatedUpright = 9,
    RaSeatedUpright = 10,
    LaLeaningBack = 11,
    RaLeaningBack = 12,
    SittingOnLeadingEdge = 13,
    SlouchingBackDown = 14,
}

/// Number of posture classes.
pub const NUM_CLASSES: usize = 15;

impl PostureLabel {
    /// All labels in id order.
    pub const ALL: [PostureLabel; NUM_CLASSES] = [
        PostureLabel::Upright,
        PostureLabel::LeaningRight,
        PostureLabel::LeaningLeft,
        PostureLabel::LeaningForward,
        PostureLabel::LeaningBack,
        PostureLabel::LcSeatedUpright,
        PostureLabel::RcSeatedUpright,
        PostureLabel::LcLeaningBack,
        PostureLabel::RcLeaningBack,
        PostureLabel::LaSeatedUpright,
        PostureLabel::RaSeatedUpright,
        PostureLabel::LaLeaningBack,
        PostureLabel::RaLeaningBack,
        PostureLabel::SittingOnLeadingEdge,
        PostureLabel::SlouchingBackDown,
    ];

    /// Dense class id in `0..15`.
    pub fn id(self) -> usize {
        self as usize
    }

    /// Canonical human-readable name; frame files store this string.
    pub fn name(self) -> &'static str {
        match self {
            PostureLabel::Upright => "upright",
            PostureLabel::LeaningRight => "leaning right",
            PostureLabel::LeaningLeft => "leaning left",
            PostureLabel::LeaningForward => "leaning forward",
            PostureLabel::LeaningBack => "leaning back",
            PostureLabel::LcSeatedUpright => "LC seated upright",
            PostureLabel::RcSeatedUpright => "RC seated upright",
            PostureLabel::LcLeaningBack => "LC leaning back",
            PostureLabel::RcLeaningBack => "RC leaning back",
            PostureLabel::LaSeatedUpright => "LA seated upright",
            PostureLabel::RaSeatedUpright => "RA seated upright",
            PostureLabel::LaLeaningBack => "LA leaning back",
            PostureLabel::RaLeaningBack => "RA leaning back",
            PostureLabel::SittingOnLeadingEdge => "sitting on the leading edge",
            PostureLabel::SlouchingBackDown => "slouching back down",
        }
    }

    pub fn from_id(id: usize) -> Option<PostureLabel> {
        Self::ALL.get(id).copied()
    }

    pub fn from_name(name: &str) -> Option<PostureLabel> {
        Self::ALL.iter().copied().find(|l| l.name() == name)
    }
}

impl fmt::Display for PostureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Labels serialize by canonical name so files stay self-describing.
impl Serialize for PostureLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PostureLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        PostureLabel::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown posture label `{name}`")))
    }
}

/// One labeled 19x10 matrix of raw 10-bit sensor counts from one subject.
///
/// Immutable after construction; every cell is validated to lie in
/// `[0, 1023]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PressureFrame {
    values: FrameValues,
    subject_id: u32,
    label: PostureLabel,
}

impl PressureFrame {
    pub fn new(values: FrameValues, subject_id: u32, label: PostureLabel) -> Result<Self> {
        if subject_id == 0 {
            return Err(Error::InvalidInput("subject_id must be >= 1".into()));
        }
        for (r, row) in values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > MAX_ADC {
                    return Err(Error::OutOfRange(format!(
                        "cell ({r},{c}) holds {v}, outside [0, {MAX_ADC}]"
                    )));
                }
            }
        }
        Ok(Self {
            values,
            subject_id,
            label,
        })
    }

    /// An all-zero frame, useful as a neutral placeholder.
    pub fn zeroed(subject_id: u32, label: PostureLabel) -> Self {
        Self::new([[0; FRAME_COLS]; FRAME_ROWS], subject_id, label)
            .expect("zero cells are always in range")
    }

    pub fn values(&self) -> &FrameValues {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> u16 {
        self.values[row][col]
    }

    pub fn subject_id(&self) -> u32 {
        self.subject_id
    }

    pub fn label(&self) -> PostureLabel {
        self.label
    }

    /// Cells in row-major order (row 0 = top backrest row).
    pub fn iter_cells(&self) -> impl Iterator<Item = u16> + '_ {
        self.values.iter().flat_map(|row| row.iter().copied())
    }

    /// Row-major copy as f64, the raw-feature view used by linear readouts.
    pub fn flatten_f64(&self) -> Vec<f64> {
        self.iter_cells().map(f64::from).collect()
    }
}

/// A frame mapped onto `[0, pi]`, the encoder's input domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFrame {
    phases: [[f64; FRAME_COLS]; FRAME_ROWS],
}

impl PhaseFrame {
    pub fn new(phases: [[f64; FRAME_COLS]; FRAME_ROWS]) -> Result<Self> {
        for (r, row) in phases.iter().enumerate() {
            for (c, &p) in row.iter().enumerate() {
                if !(0.0..=std::f64::consts::PI).contains(&p) {
                    return Err(Error::OutOfRange(format!(
                        "phase ({r},{c}) = {p}, outside [0, pi]"
                    )));
                }
            }
        }
        Ok(Self { phases })
    }

    pub fn phase(&self, row: usize, col: usize) -> f64 {
        self.phases[row][col]
    }

    pub fn rows(&self) -> usize {
        FRAME_ROWS
    }

    pub fn cols(&self) -> usize {
        FRAME_COLS
    }
}

/// How raw ADC counts map onto the `[0, pi]` phase interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `phase = value / 1023 * pi`; identical map for every frame.
    #[default]
    FixedRange,
    /// Affine map of the frame's own `[min, max]` onto `[0, pi]`;
    /// constant frames map to all-zero phases.
    PerFrameMinmax,
}

/// Maps raw counts to phases in `[0, pi]`.
pub fn normalize_to_phase(frame: &PressureFrame, mode: NormalizationMode) -> PhaseFrame {
    let mut phases = [[0.0; FRAME_COLS]; FRAME_ROWS];
    match mode {
        NormalizationMode::FixedRange => {
            for (r, row) in frame.values().iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    phases[r][c] = f64::from(v) / f64::from(MAX_ADC) * std::f64::consts::PI;
                }
            }
        }
        NormalizationMode::PerFrameMinmax => {
            let min = frame.iter_cells().min().unwrap_or(0);
            let max = frame.iter_cells().max().unwrap_or(0);
            if max > min {
                let span = f64::from(max - min);
                for (r, row) in frame.values().iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        phases[r][c] = f64::from(v - min) / span * std::f64::consts::PI;
                    }
                }
            }
        }
    }
    PhaseFrame { phases }
}

/// Stacks the backrest sheet (10x9) above the seat sheet (9x9) into the
/// 19x10 frame grid. Each 9-wide source row lands in columns 0-8; column 9
/// is zero padding, so all 171 sensor cells survive into the 190-cell frame.
pub fn assemble_frame(seat: &[Vec<u16>], backrest: &[Vec<u16>]) -> Result<FrameValues> {
    check_sheet("seat", seat, SEAT_ROWS, SEAT_COLS)?;
    check_sheet("backrest", backrest, BACKREST_ROWS, BACKREST_COLS)?;

    let mut out = [[0u16; FRAME_COLS]; FRAME_ROWS];
    for (r, row) in backrest.iter().enumerate() {
        out[r][..BACKREST_COLS].copy_from_slice(row);
    }
    for (r, row) in seat.iter().enumerate() {
        out[BACKREST_ROWS + r][..SEAT_COLS].copy_from_slice(row);
    }
    Ok(out)
}

fn check_sheet(name: &str, sheet: &[Vec<u16>], rows: usize, cols: usize) -> Result<()> {
    if sheet.len() != rows {
        return Err(Error::ShapeMismatch(format!(
            "{name} sheet has {} rows, expected {rows}",
            sheet.len()
        )));
    }
    for (r, row) in sheet.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::ShapeMismatch(format!(
                "{name} sheet row {r} has {} columns, expected {cols}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            if v > MAX_ADC {
                return Err(Error::OutOfRange(format!(
                    "{name} cell ({r},{c}) holds {v}, outside [0, {MAX_ADC}]"
                )));
            }
        }
    }
    Ok(())
}

/// Writes frames as plain-text CSV with the versioned header line.
///
/// Record layout: `subject_id,label_name,v0,...,v189`, values row-major
/// with row 0 the top backrest row.
pub fn save_frames(frames: &[PressureFrame], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path)
        .map_err(|e| Error::io_context(format!("creating {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{FRAME_FILE_HEADER}")?;
    for frame in frames {
        write!(w, "{},{}", frame.subject_id(), frame.label().name())?;
        for v in frame.iter_cells() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frame file written by [`save_frames`]; `save_frames` followed by
/// `load_frames` is the identity. Malformed rows are rejected with their
/// 1-based line number.
pub fn load_frames(path: impl AsRef<Path>) -> Result<Vec<PressureFrame>> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| Error::io_context(format!("opening {}", path.display()), e))?;
    let reader = BufReader::new(file);

    let err_at = |line: usize, message: String| Error::FrameFile {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut frames = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line_no == 1 {
            if line.trim() != FRAME_FILE_HEADER {
                return Err(err_at(
                    1,
                    format!("expected header `{FRAME_FILE_HEADER}`, found `{line}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + FRAME_CELLS {
            return Err(err_at(
                line_no,
                format!("expected {} fields, found {}", 2 + FRAME_CELLS, fields.len()),
            ));
        }
        let subject_id: u32 = fields[0]
            .trim()
            .parse()
            .map_err(|_| err_at(line_no, format!("invalid subject id `{}`", fields[0])))?;
        let label = PostureLabel::from_name(fields[1].trim())
            .ok_or_else(|| err_at(line_no, format!("unknown posture label `{}`", fields[1])))?;
        let mut values = [[0u16; FRAME_COLS]; FRAME_ROWS];
        for (i, raw) in fields[2..].iter().enumerate() {
            let v: u32 = raw
                .trim()
                .parse()
                .map_err(|_| err_at(line_no, format!("invalid value `{raw}` at cell {i}")))?;
            if v > u32::from(MAX_ADC) {
                return Err(err_at(
                    line_no,
                    format!("value {v} at cell {i} outside [0, {MAX_ADC}]"),
                ));
            }
            values[i / FRAME_COLS][i % FRAME_COLS] = v as u16;
        }
        frames.push(
            PressureFrame::new(values, subject_id, label)
                .map_err(|e| err_at(line_no, e.to_string()))?,
        );
    }
    if !saw_header {
        return Err(err_at(1, format!("missing header `{FRAME_FILE_HEADER}`")));
    }
    Ok(frames)
}

/// JSON companion document describing a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: String,
    /// Frame file paths, relative to the manifest location.
    pub files: Vec<String>,
    pub subject_ids: Vec<u32>,
    /// Frames per class, keyed by canonical label name.
    pub class_counts: BTreeMap<String, u64>,
    pub total_frames: u64,
    pub seed: u64,
}

pub const MANIFEST_VERSION: &str = "dataset-manifest v1";

impl DatasetManifest {
    pub fn from_frames(frames: &[PressureFrame], files: Vec<String>, seed: u64) -> Self {
        let mut subject_ids: Vec<u32> = frames.iter().map(PressureFrame::subject_id).collect();
        subject_ids.sort_unstable();
        subject_ids.dedup();
        let mut class_counts = BTreeMap::new();
        for f in frames {
            *class_counts.entry(f.label().name().to_string()).or_insert(0) += 1;
        }
        Self {
            version: MANIFEST_VERSION.to_string(),
            files,
            subject_ids,
            class_counts,
            total_frames: frames.len() as u64,
            seed,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path.as_ref(), json + "\n")
            .map_err(|e| Error::io_context(format!("writing {}", path.as_ref().display()), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| Error::io_context(format!("reading {}", path.as_ref().display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_sheet(rows: usize, cols: usize) -> Vec<Vec<u16>> {
        vec![vec![0; cols]; rows]
    }

    #[test]
    fn label_ids_dense_and_names_unique() {
        for (i, label) in PostureLabel::ALL.iter().enumerate() {
            assert_eq!(label.id(), i);
            assert_eq!(PostureLabel::from_id(i), Some(*label));
            assert_eq!(PostureLabel::from_name(label.name()), Some(*label));
        }
        let mut names: Vec<_> = PostureLabel::ALL.iter().map(|l| l.name()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), NUM_CLASSES);
    }

    #[test]
    fn assemble_all_zero() {
        let out = assemble_frame(&zero_sheet(9, 9), &zero_sheet(10, 9)).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0));
        assert_eq!(out.len() * out[0].len(), 190);
    }

    #[test]
    fn assemble_single_seat_cell() {
        let mut seat = zero_sheet(9, 9);
        seat[0][0] = 500;
        let out = assemble_frame(&seat, &zero_sheet(10, 9)).unwrap();
        assert_eq!(out[10][0], 500);
        assert!(out.iter().all(|row| row[9] == 0));
    }

    // Index-mapping oracle: enumerate all 171 source cells independently and
    // check each lands on its own distinct output cell.
    #[test]
    fn assemble_index_mapping_oracle() {
        let mut seat = zero_sheet(9, 9);
        let mut backrest = zero_sheet(10, 9);
        let mut tag = 1u16;
        for r in 0..10 {
            for c in 0..9 {
                backrest[r][c] = tag;
                tag += 1;
            }
        }
        for r in 0..9 {
            for c in 0..9 {
                seat[r][c] = tag;
                tag += 1;
            }
        }
        assert_eq!(tag, 172); // 171 tagged source cells

        let out = assemble_frame(&seat, &backrest).unwrap();
        let mut seen = vec![false; 172];
        let mut nonzero = 0;
        for (r, row) in out.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if c == 9 {
                    assert_eq!(v, 0, "padding column must stay zero");
                    continue;
                }
                let expected = if r < 10 {
                    (r * 9 + c + 1) as u16
                } else {
                    (90 + (r - 10) * 9 + c + 1) as u16
                };
                assert_eq!(v, expected, "cell ({r},{c})");
                assert!(!seen[v as usize], "duplicate source cell {v}");
                seen[v as usize] = true;
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 171);
    }

    #[test]
    fn assemble_rejects_bad_shapes() {
        assert!(assemble_frame(&zero_sheet(8, 9), &zero_sheet(10, 9)).is_err());
        assert!(assemble_frame(&zero_sheet(9, 9), &zero_sheet(10, 8)).is_err());
        let mut seat = zero_sheet(9, 9);
        seat[3].push(0);
        assert!(assemble_frame(&seat, &zero_sheet(10, 9)).is_err());
    }

    #[test]
    fn assemble_rejects_out_of_range() {
        let mut seat = zero_sheet(9, 9);
        seat[0][0] = 1024;
        assert!(matches!(
            assemble_frame(&seat, &zero_sheet(10, 9)),
            Err(Error::OutOfRange(_))
        ));
    }

    fn frame_with(value: u16) -> PressureFrame {
        PressureFrame::new([[value; FRAME_COLS]; FRAME_ROWS], 1, PostureLabel::Upright).unwrap()
    }

    #[test]
    fn normalize_fixed_range_endpoints() {
        let zero = normalize_to_phase(&frame_with(0), NormalizationMode::FixedRange);
        assert_eq!(zero.phase(0, 0), 0.0);
        let full = normalize_to_phase(&frame_with(1023), NormalizationMode::FixedRange);
        assert_eq!(full.phase(18, 9), std::f64::consts::PI);
    }

    #[test]
    fn normalize_minmax_constant_frame_is_zero() {
        let phases = normalize_to_phase(&frame_with(512), NormalizationMode::PerFrameMinmax);
        for r in 0..FRAME_ROWS {
            for c in 0..FRAME_COLS {
                assert_eq!(phases.phase(r, c), 0.0);
            }
        }
    }

    #[test]
    fn frame_rejects_out_of_range_cell() {
        let mut values = [[0u16; FRAME_COLS]; FRAME_ROWS];
        values[5][5] = 1024;
        assert!(PressureFrame::new(values, 1, PostureLabel::Upright).is_err());
    }

    fn random_frames(n: usize, seed: u64) -> Vec<PressureFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut values = [[0u16; FRAME_COLS]; FRAME_ROWS];
                for row in &mut values {
                    for v in row.iter_mut() {
                        *v = rng.gen_range(0..=MAX_ADC);
                    }
                }
                let label = PostureLabel::from_id(rng.gen_range(0..NUM_CLASSES)).unwrap();
                PressureFrame::new(values, rng.gen_range(1..=19), label).unwrap()
            })
            .collect()
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.csv");
        let frames = random_frames(10, 7);
        save_frames(&frames, &path).unwrap();
        let loaded = load_frames(&path).unwrap();
        assert_eq!(frames, loaded);
    }

    #[test]
    fn load_empty_file_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, format!("{FRAME_FILE_HEADER}\n")).unwrap();
        assert!(load_frames(&path).unwrap().is_empty());
    }

    #[test]
    fn load_rejects_value_1024_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let good: Vec<String> = std::iter::repeat("3".to_string()).take(190).collect();
        let mut bad = good.clone();
        bad[17] = "1024".to_string();
        let body = format!(
            "{FRAME_FILE_HEADER}\n1,upright,{}\n2,leaning left,{}\n",
            good.join(","),
            bad.join(",")
        );
        std::fs::write(&path, body).unwrap();
        match load_frames(&path) {
            Err(Error::FrameFile { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("1024"), "message: {message}");
            }
            other => panic!("expected FrameFile error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_unknown_label_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad_label.csv");
        let values = std::iter::repeat("0").take(190).collect::<Vec<_>>().join(",");
        std::fs::write(
            &path,
            format!("{FRAME_FILE_HEADER}\n1,reclining,{values}\n"),
        )
        .unwrap();
        match load_frames(&path) {
            Err(Error::FrameFile { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("reclining"));
            }
            other => panic!("expected FrameFile error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_missing_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no_header.csv");
        std::fs::write(&path, "1,upright,0\n").unwrap();
        assert!(load_frames(&path).is_err());
    }

    #[test]
    fn manifest_counts_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = random_frames(30, 11);
        let manifest =
            DatasetManifest::from_frames(&frames, vec!["frames.csv".to_string()], 42);
        assert_eq!(manifest.total_frames, 30);
        assert_eq!(
            manifest.class_counts.values().sum::<u64>(),
            30,
            "class counts must cover every frame"
        );
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        assert_eq!(DatasetManifest::load(&path).unwrap(), manifest);
    }

    proptest! {
        // Monotone non-decreasing in the raw value, endpoints pinned.
        #[test]
        fn fixed_range_monotone(a in 0u16..=1023, b in 0u16..=1023) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pa = normalize_to_phase(&frame_with(lo), NormalizationMode::FixedRange).phase(0, 0);
            let pb = normalize_to_phase(&frame_with(hi), NormalizationMode::FixedRange).phase(0, 0);
            prop_assert!(pa <= pb);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&pa));
        }

        #[test]
        fn round_trip_identity(seed in 0u64..1000) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.csv");
            let frames = random_frames(3, seed);
            save_frames(&frames, &path).unwrap();
            prop_assert_eq!(load_frames(&path).unwrap(), frames);
        }
    }
}
