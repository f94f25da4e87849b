//! Loaders for beat annotations, difficulty tags, activation curves and tempo
//! estimates, plus the dataset join that ties them together by track id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use regex::Regex;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::signal::{ActivationCurve, BeatSequence};

/// Ground-truth beats for one track.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatAnnotation {
    pub track_id: String,
    pub beats: BeatSequence,
}

impl BeatAnnotation {
    pub fn new(track_id: impl Into<String>, beats: Vec<f64>) -> Self {
        BeatAnnotation {
            track_id: track_id.into(),
            beats: BeatSequence::from_unsorted(beats),
        }
    }

    pub fn times(&self) -> &[f64] {
        self.beats.times()
    }
}

/// Lowercased filename stem, the default track id.
pub fn track_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default()
}

/// Reads one timestamp per line; anything after the first number is ignored.
pub fn load_beats(path: &Path) -> Result<BeatAnnotation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let beats = parse_beats(&text, path)?;
    Ok(BeatAnnotation {
        track_id: track_id_from_path(path),
        beats,
    })
}

pub fn parse_beats(text: &str, path: &Path) -> Result<BeatSequence> {
    let mut beats: Vec<f64> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let first = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .next()
            .unwrap_or_default();
        let t: f64 = first
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                text: line.to_string(),
            })?;
        if t < 0.0 || beats.last().is_some_and(|&prev| t <= prev) {
            return Err(Error::MalformedAnnotation {
                path: path.to_path_buf(),
                line: line_no,
            });
        }
        beats.push(t);
    }
    Ok(BeatSequence::new(beats))
}

/// Writes beats one per line with millisecond precision, the format
/// [`load_beats`] reads back.
pub fn write_beats(path: &Path, beats: &BeatSequence) -> Result<()> {
    let mut out = String::with_capacity(beats.len() * 8);
    for t in beats.times() {
        out.push_str(&format!("{t:.3}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// The four difficulty axes that group the canonical tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    WeakBeatCues,
    TempoInstability,
    MetricalAmbiguity,
    Structural,
}

impl Axis {
    pub const ALL: [Axis; 4] = [
        Axis::WeakBeatCues,
        Axis::TempoInstability,
        Axis::MetricalAmbiguity,
        Axis::Structural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::WeakBeatCues => "weak_beat_cues",
            Axis::TempoInstability => "tempo_instability",
            Axis::MetricalAmbiguity => "metrical_ambiguity",
            Axis::Structural => "structural",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}`")))
    }
}

/// Tag vocabulary plus the tag → axis assignment.
///
/// File format: `canonical_tag<TAB>axis_name[<TAB>alias,alias...]`, where
/// `axis_name` may be `-` for vocabulary tags that belong to no axis. Lines
/// starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AxisMap {
    entries: BTreeMap<String, Option<Axis>>,
    aliases: HashMap<String, String>,
}

/// Seed vocabulary: the top tags of each axis.
const SEED_MAP: &str = "\
missing_bass\tweak_beat_cues
lack_of_transients\tweak_beat_cues
expressive_timing\ttempo_instability
slow_tempo\ttempo_instability
ternary_meter\tmetrical_ambiguity
strong_syncopation\tmetrical_ambiguity
rich_ornamentation\tstructural
low_familiarity\tstructural
";

impl AxisMap {
    /// The shipped default, covering only the eight seed tags.
    pub fn seed() -> Self {
        AxisMap::parse(SEED_MAP).expect("seed axis map parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AxisMap::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = AxisMap::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let tag = canonical_form(cols.next().unwrap_or_default());
            if tag.is_empty() {
                return Err(Error::Config(format!("line {}: empty tag", idx + 1)));
            }
            let axis = match cols.next().map(str::trim) {
                None | Some("") | Some("-") | Some("none") => None,
                Some(name) => Some(
                    name.parse::<Axis>()
                        .map_err(|_| Error::Config(format!("line {}: unknown axis `{name}`", idx + 1)))?,
                ),
            };
            if let Some(aliases) = cols.next() {
                for alias in aliases.split(',') {
                    let alias = canonical_form(alias);
                    if !alias.is_empty() {
                        map.aliases.insert(alias, tag.clone());
                    }
                }
            }
            if let Some(prev) = map.entries.insert(tag.clone(), axis) {
                if prev != axis {
                    return Err(Error::Config(format!(
                        "line {}: tag `{tag}` mapped to two axes",
                        idx + 1
                    )));
                }
            }
        }
        Ok(map)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.entries.contains_key(tag)
    }

    pub fn axis_of(&self, tag: &str) -> Option<Axis> {
        self.entries.get(tag).copied().flatten()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn resolve(&self, form: &str) -> Option<String> {
        if self.entries.contains_key(form) {
            return Some(form.to_string());
        }
        self.aliases.get(form).cloned()
    }
}

/// Lowercase, drop parenthesized parts, collapse whitespace, join with `_`.
fn canonical_form(raw: &str) -> String {
    let mut stripped = String::with_capacity(raw.len());
    let mut depth = 0usize;
    for c in raw.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => stripped.push(c),
            _ => {}
        }
    }
    stripped
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

fn singular(word: &str) -> String {
    if let Some(stem) = word.strip_suffix("ies") {
        if !stem.is_empty() {
            return format!("{stem}y");
        }
    }
    if word.ends_with("ss") || word.len() <= 3 {
        return word.to_string();
    }
    word.strip_suffix('s').unwrap_or(word).to_string()
}

/// Maps a free-text descriptor onto the vocabulary, or `None` if it does not
/// belong to it.
pub fn normalize_tag(raw: &str, map: &AxisMap) -> Option<String> {
    let form = canonical_form(raw);
    if form.is_empty() {
        return None;
    }
    if let Some(tag) = map.resolve(&form) {
        return Some(tag);
    }
    let singular_form = form.split('_').map(singular).collect::<Vec<_>>().join("_");
    map.resolve(&singular_form)
}

/// Union of the axes of `tags`.
pub fn assign_axes<S: AsRef<str>>(tags: &[S], map: &AxisMap) -> BTreeSet<Axis> {
    tags.iter().filter_map(|t| map.axis_of(t.as_ref())).collect()
}

/// Per-track descriptive metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackMetadata {
    pub track_id: String,
    pub raw_tags: Vec<String>,
    pub canonical_tags: Vec<String>,
    pub axes: BTreeSet<Axis>,
    pub annotator_confidence: Option<u8>,
    pub annotator_id: Option<String>,
    pub is_easy: Option<bool>,
}

/// Raw descriptor strings plus any `key: value` metadata lines of a tag file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagFile {
    pub raw_tags: Vec<String>,
    pub confidence: Option<u8>,
    pub annotator_id: Option<String>,
    pub is_easy: Option<bool>,
}

pub fn parse_tag_file(text: &str) -> TagFile {
    let mut out = TagFile::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            let value = value.trim();
            match key.trim().to_lowercase().as_str() {
                "confidence" => {
                    out.confidence = value.parse().ok().filter(|c| (1..=4).contains(c));
                    continue;
                }
                "annotator" | "annotator_id" => {
                    out.annotator_id = Some(value.to_string());
                    continue;
                }
                "easy" | "is_easy" => {
                    out.is_easy = parse_bool(value);
                    continue;
                }
                _ => {}
            }
        }
        out.raw_tags.extend(
            line.split([',', ';'])
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from),
        );
    }
    out
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_lowercase().as_str() {
        "1" | "true" | "yes" | "easy" => Some(true),
        "0" | "false" | "no" | "hard" => Some(false),
        _ => None,
    }
}

const ACT_MAGIC: &[u8; 4] = b"ACT1";

/// Loads an activation file in either the text or the binary interchange format.
pub fn load_activation(path: &Path) -> Result<ActivationCurve> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let label = track_id_from_path(path);
    if bytes.starts_with(ACT_MAGIC) {
        return decode_activation_binary(&bytes, label);
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| {
        Error::CorruptActivation(format!("{}: neither ACT1 binary nor UTF-8 text", path.display()))
    })?;
    parse_activation_text(text, path, label)
}

pub fn parse_activation_text(text: &str, path: &Path, label: String) -> Result<ActivationCurve> {
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.trim().is_empty());
    let fps = lines
        .next()
        .and_then(|(_, l)| l.trim().strip_prefix("#fps=").map(str::trim))
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| Error::MissingFps(path.to_path_buf()))?;
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            text: line.to_string(),
        })?;
        values.push(v);
    }
    ActivationCurve::new(values, fps, label).map_err(|e| match e {
        Error::CorruptActivation(msg) => {
            Error::CorruptActivation(format!("{}: {msg}", path.display()))
        }
        other => other,
    })
}

pub fn decode_activation_binary(bytes: &[u8], label: String) -> Result<ActivationCurve> {
    const HEADER: usize = 4 + 8 + 8;
    if bytes.len() < HEADER || &bytes[..4] != ACT_MAGIC {
        return Err(Error::CorruptActivation("bad magic or truncated header".into()));
    }
    let fps = f64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = &bytes[HEADER..];
    if count.checked_mul(4) != Some(payload.len() as u64) {
        return Err(Error::CorruptActivation(format!(
            "header declares {count} frames but payload holds {} bytes",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    ActivationCurve::new(values, fps, label)
}

pub fn encode_activation_binary(curve: &ActivationCurve) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * curve.len());
    out.extend_from_slice(ACT_MAGIC);
    out.extend_from_slice(&curve.fps().to_le_bytes());
    out.extend_from_slice(&(curve.len() as u64).to_le_bytes());
    for &v in curve.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn write_activation_text(path: &Path, curve: &ActivationCurve) -> Result<()> {
    let mut out = Vec::with_capacity(curve.len() * 10);
    writeln!(out, "#fps={}", curve.fps()).unwrap();
    for v in curve.values() {
        writeln!(out, "{v:.6}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_activation_binary(path: &Path, curve: &ActivationCurve) -> Result<()> {
    fs::write(path, encode_activation_binary(curve)).map_err(|e| Error::io(path, e))
}

/// One externally produced tempo estimate.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TempoEstimate {
    pub track_id: String,
    pub bpm: f64,
    pub source_label: String,
}

/// Reads a `track_id,bpm,source_label` CSV with a header row.
pub fn load_tempo_estimates(path: &Path) -> Result<Vec<TempoEstimate>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut out = Vec::new();
    for (idx, row) in reader.deserialize::<TempoEstimate>().enumerate() {
        let mut est = row.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if !(est.bpm.is_finite() && est.bpm > 0.0) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 2,
                text: format!("bpm {}", est.bpm),
            });
        }
        est.track_id = est.track_id.to_lowercase();
        out.push(est);
    }
    Ok(out)
}

/// Where each kind of file lives under a dataset root.
#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub beats_dir: PathBuf,
    pub beats_ext: String,
    pub tags_dir: Option<PathBuf>,
    pub tags_ext: String,
    /// `(source label, directory)` pairs; every file in a directory is an
    /// activation for the track named by its stem.
    pub activation_dirs: Vec<(String, PathBuf)>,
    /// Optional pattern applied to lowercased file stems. The `id` group (or
    /// group 1) becomes the track id; optional `confidence` and `annotator`
    /// groups fill metadata.
    pub id_pattern: Option<String>,
    /// Optional `track_id,confidence,annotator_id,is_easy` CSV.
    pub metadata_csv: Option<PathBuf>,
    pub axis_map: AxisMap,
}

impl Default for DatasetLayout {
    fn default() -> Self {
        DatasetLayout {
            beats_dir: PathBuf::from("annotations"),
            beats_ext: "txt".into(),
            tags_dir: Some(PathBuf::from("tags")),
            tags_ext: "txt".into(),
            activation_dirs: Vec::new(),
            id_pattern: None,
            metadata_csv: None,
            axis_map: AxisMap::seed(),
        }
    }
}

/// Everything known about one track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub track_id: String,
    /// Absent for activation-only tracks kept for decode-only use.
    pub annotation: Option<BeatAnnotation>,
    pub metadata: TrackMetadata,
    pub activations: BTreeMap<String, ActivationCurve>,
}

/// Immutable collection of tracks sorted by id.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub tracks: Vec<TrackRecord>,
    /// Unknown descriptors and how often they occurred.
    pub tag_residue: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    /// The vocabulary the tags were normalized against.
    pub axis_map: AxisMap,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn get(&self, track_id: &str) -> Option<&TrackRecord> {
        self.tracks
            .binary_search_by(|t| t.track_id.as_str().cmp(track_id))
            .ok()
            .map(|i| &self.tracks[i])
    }

    /// Tracks that carry a ground-truth annotation.
    pub fn annotated(&self) -> impl Iterator<Item = (&TrackRecord, &BeatAnnotation)> {
        self.tracks
            .iter()
            .filter_map(|t| t.annotation.as_ref().map(|a| (t, a)))
    }

    /// Distinct activation source labels across all tracks.
    pub fn activation_sources(&self) -> BTreeSet<String> {
        self.tracks
            .iter()
            .flat_map(|t| t.activations.keys().cloned())
            .collect()
    }

    /// Builds a dataset from in-memory annotations.
    pub fn from_annotations(annotations: Vec<BeatAnnotation>) -> Self {
        let mut tracks: Vec<TrackRecord> = annotations
            .into_iter()
            .map(|a| TrackRecord {
                track_id: a.track_id.clone(),
                metadata: TrackMetadata {
                    track_id: a.track_id.clone(),
                    ..Default::default()
                },
                annotation: Some(a),
                activations: BTreeMap::new(),
            })
            .collect();
        tracks.sort_by(|a, b| a.track_id.cmp(&b.track_id));
        Dataset {
            tracks,
            axis_map: AxisMap::seed(),
            ..Default::default()
        }
    }
}

struct IdParser {
    pattern: Option<Regex>,
}

struct ParsedStem {
    id: String,
    confidence: Option<u8>,
    annotator: Option<String>,
}

impl IdParser {
    fn new(pattern: Option<&str>) -> Result<Self> {
        let pattern = pattern
            .map(|p| Regex::new(p).map_err(|e| Error::Config(format!("id pattern: {e}"))))
            .transpose()?;
        Ok(IdParser { pattern })
    }

    fn parse(&self, path: &Path) -> ParsedStem {
        let stem = track_id_from_path(path);
        let Some(re) = &self.pattern else {
            return ParsedStem {
                id: stem,
                confidence: None,
                annotator: None,
            };
        };
        match re.captures(&stem) {
            Some(caps) => {
                let id = caps
                    .name("id")
                    .or_else(|| caps.get(1))
                    .map(|m| m.as_str().to_string())
                    .unwrap_or_else(|| stem.clone());
                ParsedStem {
                    id,
                    confidence: caps.name("confidence").and_then(|m| m.as_str().parse().ok()),
                    annotator: caps.name("annotator").map(|m| m.as_str().to_string()),
                }
            }
            None => ParsedStem {
                id: stem,
                confidence: None,
                annotator: None,
            },
        }
    }
}

/// Files in `dir` with extension `ext` (case-insensitive), sorted by path.
fn list_files(dir: &Path, ext: Option<&str>) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let matches = match ext {
            None => true,
            Some(ext) => path
                .extension()
                .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case(ext)),
        };
        if matches {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Deserialize)]
struct MetadataRow {
    track_id: String,
    confidence: Option<u8>,
    annotator_id: Option<String>,
    is_easy: Option<String>,
}

/// Loads every annotation under `root` and joins tags and activations onto it.
/// Run manifests written next to generated files; never treated as data.
pub const MANIFEST_NAME: &str = "manifest.txt";

pub fn load_dataset(root: &Path, layout: &DatasetLayout) -> Result<Dataset> {
    let ids = IdParser::new(layout.id_pattern.as_deref())?;
    let mut warnings = Vec::new();
    let mut records: BTreeMap<String, TrackRecord> = BTreeMap::new();

    for path in list_files(&root.join(&layout.beats_dir), Some(&layout.beats_ext))? {
        let parsed = ids.parse(&path);
        let mut annotation = load_beats(&path)?;
        annotation.track_id = parsed.id.clone();
        if records.contains_key(&parsed.id) {
            let msg = format!("{}: duplicate annotation for `{}`, ignored", path.display(), parsed.id);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        records.insert(
            parsed.id.clone(),
            TrackRecord {
                track_id: parsed.id.clone(),
                annotation: Some(annotation),
                metadata: TrackMetadata {
                    track_id: parsed.id,
                    annotator_confidence: parsed.confidence,
                    annotator_id: parsed.annotator,
                    ..Default::default()
                },
                activations: BTreeMap::new(),
            },
        );
    }

    let mut residue: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(tags_dir) = &layout.tags_dir {
        for path in list_files(&root.join(tags_dir), Some(&layout.tags_ext))? {
            let id = ids.parse(&path).id;
            let Some(record) = records.get_mut(&id) else {
                let msg = format!("{}: tags for unknown track `{id}`", path.display());
                warn!("{msg}");
                warnings.push(msg);
                continue;
            };
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let tag_file = parse_tag_file(&text);
            let meta = &mut record.metadata;
            let mut canonical = BTreeSet::new();
            for raw in &tag_file.raw_tags {
                match normalize_tag(raw, &layout.axis_map) {
                    Some(tag) => {
                        canonical.insert(tag);
                    }
                    None => *residue.entry(raw.trim().to_lowercase()).or_default() += 1,
                }
            }
            meta.raw_tags = tag_file.raw_tags;
            meta.canonical_tags = canonical.into_iter().collect();
            meta.axes = assign_axes(&meta.canonical_tags, &layout.axis_map);
            meta.annotator_confidence = tag_file.confidence.or(meta.annotator_confidence);
            meta.annotator_id = tag_file.annotator_id.or(meta.annotator_id.take());
            meta.is_easy = tag_file.is_easy.or(meta.is_easy);
        }
    }

    if let Some(csv_path) = &layout.metadata_csv {
        let csv_path = root.join(csv_path);
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(&csv_path)
            .map_err(|source| Error::Csv {
                path: csv_path.clone(),
                source,
            })?;
        for row in reader.deserialize::<MetadataRow>() {
            let row = row.map_err(|source| Error::Csv {
                path: csv_path.clone(),
                source,
            })?;
            let id = row.track_id.to_lowercase();
            match records.get_mut(&id) {
                Some(rec) => {
                    let meta = &mut rec.metadata;
                    if row.confidence.is_some() {
                        meta.annotator_confidence = row.confidence;
                    }
                    if row.annotator_id.is_some() {
                        meta.annotator_id = row.annotator_id;
                    }
                    if let Some(easy) = row.is_easy.as_deref().and_then(parse_bool) {
                        meta.is_easy = Some(easy);
                    }
                }
                None => {
                    let msg = format!("{}: metadata for unknown track `{id}`", csv_path.display());
                    warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }
    }

    for (label, dir) in &layout.activation_dirs {
        for path in list_files(&root.join(dir), None)? {
            if path.file_name().is_some_and(|n| n == MANIFEST_NAME) {
                continue;
            }
            let id = ids.parse(&path).id;
            let curve = load_activation(&path)?.with_label(label.clone());
            let record = records.entry(id.clone()).or_insert_with(|| {
                let msg = format!(
                    "{}: activation without annotation for `{id}`, kept for decoding only",
                    path.display()
                );
                warn!("{msg}");
                warnings.push(msg);
                TrackRecord {
                    track_id: id.clone(),
                    annotation: None,
                    metadata: TrackMetadata {
                        track_id: id.clone(),
                        ..Default::default()
                    },
                    activations: BTreeMap::new(),
                }
            });
            record.activations.insert(label.clone(), curve);
        }
    }

    Ok(Dataset {
        tracks: records.into_values().collect(),
        tag_residue: residue,
        warnings,
        axis_map: layout.axis_map.clone(),
    })
}
