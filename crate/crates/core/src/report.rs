//! Run reports: per-track rows, grouped aggregates, named tables, and their
//! CSV / text serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{bpm_band, median, ActivationDiagnostics, FailureCategory, TempoStats};
use crate::error::{Error, Result};
use crate::ingest::{Axis, TrackRecord};
use crate::metrics::EvalResult;

/// One evaluated (track, system, configuration) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub track_id: String,
    pub system: String,
    pub config: String,
    pub eval: Option<EvalResult>,
    pub category: Option<FailureCategory>,
    pub diagnostics: Option<ActivationDiagnostics>,
    pub tempo: Option<TempoStats>,
    pub axes: Vec<Axis>,
    pub confidence: Option<u8>,
    pub tag_count: usize,
}

impl ReportRow {
    pub fn new(track: &TrackRecord, system: impl Into<String>, config: impl Into<String>) -> Self {
        ReportRow {
            track_id: track.track_id.clone(),
            system: system.into(),
            config: config.into(),
            eval: None,
            category: None,
            diagnostics: None,
            tempo: None,
            axes: track.metadata.axes.iter().copied().collect(),
            confidence: track.metadata.annotator_confidence,
            tag_count: track.metadata.canonical_tags.len(),
        }
    }

    pub fn f_measure(&self) -> Option<f64> {
        self.eval.map(|e| e.f_measure)
    }
}

/// Header of `rows.csv`; the column order is fixed.
pub const ROW_HEADER: [&str; 24] = [
    "track_id",
    "system",
    "config",
    "f_measure",
    "cmlc",
    "cmlt",
    "amlc",
    "amlt",
    "n_ref",
    "n_est",
    "category",
    "act_at_gt",
    "max_activation",
    "peak_sharpness",
    "periodicity_strength",
    "entropy",
    "false_positive_activation",
    "gt_bpm",
    "ibi_cv",
    "bpm_band",
    "axes",
    "axis_count",
    "confidence",
    "tag_count",
];

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl ReportRow {
    fn to_record(&self) -> Vec<String> {
        let e = self.eval.as_ref();
        let d = self.diagnostics.as_ref();
        let t = self.tempo.as_ref();
        vec![
            self.track_id.clone(),
            self.system.clone(),
            self.config.clone(),
            num(e.map(|e| e.f_measure)),
            num(e.map(|e| e.cmlc)),
            num(e.map(|e| e.cmlt)),
            num(e.map(|e| e.amlc)),
            num(e.map(|e| e.amlt)),
            e.map(|e| e.n_ref.to_string()).unwrap_or_default(),
            e.map(|e| e.n_est.to_string()).unwrap_or_default(),
            self.category.map(|c| c.to_string()).unwrap_or_default(),
            num(d.map(|d| d.act_at_gt)),
            num(d.map(|d| d.max_activation)),
            num(d.map(|d| d.peak_sharpness)),
            num(d.map(|d| d.periodicity_strength)),
            num(d.map(|d| d.entropy)),
            num(d.map(|d| d.false_positive_activation)),
            num(t.map(|t| t.gt_bpm)),
            num(t.map(|t| t.ibi_cv)),
            t.map(|t| bpm_band(t.gt_bpm).to_string()).unwrap_or_default(),
            self.axes.iter().map(|a| a.name()).collect::<Vec<_>>().join("|"),
            self.axes.len().to_string(),
            self.confidence.map(|c| c.to_string()).unwrap_or_default(),
            self.tag_count.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupBy {
    System,
    Axis,
    AxisCount,
    Confidence,
    TagCount,
    BpmBand,
    Category,
}

impl GroupBy {
    pub const ALL: [GroupBy; 7] = [
        GroupBy::System,
        GroupBy::Axis,
        GroupBy::AxisCount,
        GroupBy::Confidence,
        GroupBy::TagCount,
        GroupBy::BpmBand,
        GroupBy::Category,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupBy::System => "system",
            GroupBy::Axis => "axis",
            GroupBy::AxisCount => "axis_count",
            GroupBy::Confidence => "confidence",
            GroupBy::TagCount => "tag_count",
            GroupBy::BpmBand => "bpm_band",
            GroupBy::Category => "category",
        }
    }

    pub fn parse(s: &str) -> Option<GroupBy> {
        GroupBy::ALL.into_iter().find(|g| g.name() == s.trim().replace('-', "_"))
    }

    /// Group keys of one row. Axis grouping is multi-membership: a row with
    /// two axes counts in both groups, and a row with none goes to `none`.
    fn keys(self, row: &ReportRow) -> Vec<String> {
        match self {
            GroupBy::System => vec!["all".into()],
            GroupBy::Axis if row.axes.is_empty() => vec!["none".into()],
            GroupBy::Axis => row.axes.iter().map(|a| a.name().to_string()).collect(),
            GroupBy::AxisCount => vec![row.axes.len().to_string()],
            GroupBy::Confidence => vec![row
                .confidence
                .map(|c| c.to_string())
                .unwrap_or_else(|| "unknown".into())],
            GroupBy::TagCount => vec![format!("{:02}", row.tag_count)],
            GroupBy::BpmBand => vec![row
                .tempo
                .map(|t| bpm_band(t.gt_bpm).to_string())
                .unwrap_or_else(|| "unknown".into())],
            GroupBy::Category => vec![row
                .category
                .map(|c| c.to_string())
                .unwrap_or_else(|| "unclassified".into())],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub group_by: GroupBy,
    pub key: String,
    pub system: String,
    pub n: usize,
    pub mean: EvalMeans,
    pub median_f: f64,
    pub mean_act_at_gt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalMeans {
    pub f_measure: f64,
    pub cmlc: f64,
    pub cmlt: f64,
    pub amlc: f64,
    pub amlt: f64,
}

impl EvalMeans {
    pub fn of<'a>(results: impl IntoIterator<Item = &'a EvalResult>) -> (usize, EvalMeans) {
        let mut m = EvalMeans::default();
        let mut n = 0usize;
        for r in results {
            m.f_measure += r.f_measure;
            m.cmlc += r.cmlc;
            m.cmlt += r.cmlt;
            m.amlc += r.amlc;
            m.amlt += r.amlt;
            n += 1;
        }
        if n > 0 {
            let k = n as f64;
            m.f_measure /= k;
            m.cmlc /= k;
            m.cmlt /= k;
            m.amlc /= k;
            m.amlt /= k;
        }
        (n, m)
    }
}

/// Per-(system, group) counts and metric means over rows that carry an
/// evaluation. Groups are sorted by system then key.
pub fn aggregate(rows: &[ReportRow], group_by: GroupBy) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String), Vec<&ReportRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.eval.is_some()) {
        for key in group_by.keys(row) {
            groups.entry((row.system.clone(), key)).or_default().push(row);
        }
    }
    groups
        .into_iter()
        .map(|((system, key), members)| {
            let (n, mean) = EvalMeans::of(members.iter().filter_map(|r| r.eval.as_ref()));
            let fs: Vec<f64> = members.iter().filter_map(|r| r.f_measure()).collect();
            let acts: Vec<f64> = members
                .iter()
                .filter_map(|r| r.diagnostics.map(|d| d.act_at_gt))
                .collect();
            AggregateRow {
                group_by,
                key,
                system,
                n,
                mean,
                median_f: median(&fs).unwrap_or(0.0),
                mean_act_at_gt: (!acts.is_empty())
                    .then(|| acts.iter().sum::<f64>() / acts.len() as f64),
            }
        })
        .collect()
}

pub const AGGREGATE_HEADER: [&str; 11] = [
    "group_by",
    "key",
    "system",
    "n",
    "mean_f",
    "mean_cmlc",
    "mean_cmlt",
    "mean_amlc",
    "mean_amlt",
    "median_f",
    "mean_act_at_gt",
];

/// A small named table rendered into the text report and its own CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = format!("== {} ==\n{}\n", self.name, line(&self.header));
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

pub fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

pub fn fmt_opt3(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "-".into())
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<AggregateRow>,
    pub tables: Vec<Table>,
    /// Extra CSV files (figure data) as `(file name, table)`.
    pub figures: Vec<(String, Table)>,
    /// `(track id, reason)` for tracks left out of the run.
    pub skipped: Vec<(String, String)>,
}

impl RunReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        RunReport {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    /// Sorts rows by track id (then system, config) and recomputes aggregates.
    pub fn finish(&mut self, groups: &[GroupBy]) {
        self.rows.sort_by(|a, b| {
            (&a.track_id, &a.system, &a.config).cmp(&(&b.track_id, &b.system, &b.config))
        });
        self.skipped.sort();
        self.aggregates = groups.iter().flat_map(|&g| aggregate(&self.rows, g)).collect();
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ROW_HEADER).unwrap();
        for row in &self.rows {
            w.write_record(row.to_record()).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn aggregate_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(AGGREGATE_HEADER).unwrap();
        for a in &self.aggregates {
            w.write_record([
                a.group_by.name().to_string(),
                a.key.clone(),
                a.system.clone(),
                a.n.to_string(),
                format!("{:.6}", a.mean.f_measure),
                format!("{:.6}", a.mean.cmlc),
                format!("{:.6}", a.mean.cmlt),
                format!("{:.6}", a.mean.amlc),
                format!("{:.6}", a.mean.amlt),
                format!("{:.6}", a.median_f),
                num(a.mean_act_at_gt),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn text(&self) -> String {
        let mut out = format!("experiment: {}\n\n", self.experiment);
        for t in &self.tables {
            out.push_str(&t.render());
            out.push('\n');
        }
        if !self.aggregates.is_empty() {
            let mut agg = Table::new(
                "aggregates",
                &["group_by", "key", "system", "n", "F", "CMLc", "CMLt", "AMLc", "AMLt"],
            );
            for a in &self.aggregates {
                agg.push(vec![
                    a.group_by.name().into(),
                    a.key.clone(),
                    a.system.clone(),
                    a.n.to_string(),
                    fmt3(a.mean.f_measure),
                    fmt3(a.mean.cmlc),
                    fmt3(a.mean.cmlt),
                    fmt3(a.mean.amlc),
                    fmt3(a.mean.amlt),
                ]);
            }
            out.push_str(&agg.render());
            out.push('\n');
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(out, "skipped {} track(s):", self.skipped.len());
            for (id, why) in &self.skipped {
                let _ = writeln!(out, "  {id}: {why}");
            }
        }
        out
    }

    /// Writes `rows.csv`, `aggregate.csv`, `report.txt` and any figure and
    /// table CSVs under `out_dir/<experiment>/`. Returns that directory.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let dir = out_dir.join(&self.experiment);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("rows.csv", self.rows_csv())?;
        put("aggregate.csv", self.aggregate_csv())?;
        put("report.txt", self.text())?;
        for t in &self.tables {
            put(&format!("table_{}.csv", t.name), table_csv(t))?;
        }
        for (name, t) in &self.figures {
            put(name, table_csv(t))?;
        }
        Ok(dir)
    }
}

pub fn table_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header).unwrap();
    for r in &t.rows {
        w.write_record(r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Reads a `rows.csv` back, for re-aggregation by the `report` command.
pub fn read_rows_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    if headers.iter().ne(ROW_HEADER.iter().copied()) {
        return Err(Error::Config(format!("{}: not a rows.csv file", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |col: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            text: format!("column {col}"),
        };
        let f = |idx: usize| -> Result<Option<f64>> {
            let s = &rec[idx];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(ROW_HEADER[idx]))
            }
        };
        let u = |idx: usize| -> Result<usize> { rec[idx].parse().map_err(|_| bad(ROW_HEADER[idx])) };
        let eval = match f(3)? {
            Some(f_measure) => Some(EvalResult {
                f_measure,
                cmlc: f(4)?.unwrap_or(0.0),
                cmlt: f(5)?.unwrap_or(0.0),
                amlc: f(6)?.unwrap_or(0.0),
                amlt: f(7)?.unwrap_or(0.0),
                n_ref: u(8)?,
                n_est: u(9)?,
            }),
            None => None,
        };
        let category = FailureCategory::ALL.into_iter().find(|c| c.name() == &rec[10]);
        let diagnostics = match f(11)? {
            Some(act_at_gt) => Some(ActivationDiagnostics {
                act_at_gt,
                max_activation: f(12)?.unwrap_or(0.0),
                peak_sharpness: f(13)?.unwrap_or(0.0),
                periodicity_strength: f(14)?.unwrap_or(0.0),
                entropy: f(15)?.unwrap_or(0.0),
                false_positive_activation: f(16)?.unwrap_or(0.0),
            }),
            None => None,
        };
        let tempo = match (f(17)?, f(18)?) {
            (Some(gt_bpm), Some(ibi_cv)) => Some(TempoStats { gt_bpm, ibi_cv }),
            _ => None,
        };
        let axes = rec[20]
            .split('|')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Axis>())
            .collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow {
            track_id: rec[0].to_string(),
            system: rec[1].to_string(),
            config: rec[2].to_string(),
            eval,
            category,
            diagnostics,
            tempo,
            axes,
            confidence: if rec[22].is_empty() {
                None
            } else {
                Some(rec[22].parse().map_err(|_| bad("confidence"))?)
            },
            tag_count: u(23)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TrackMetadata;

    fn row(id: &str, f: f64, conf: Option<u8>, axes: Vec<Axis>) -> ReportRow {
        let track = TrackRecord {
            track_id: id.into(),
            annotation: None,
            metadata: TrackMetadata {
                track_id: id.into(),
                axes: axes.into_iter().collect(),
                annotator_confidence: conf,
                ..Default::default()
            },
            activations: Default::default(),
        };
        let mut r = ReportRow::new(&track, "sys", "cfg");
        r.eval = Some(EvalResult {
            f_measure: f,
            cmlc: f,
            cmlt: f,
            amlc: f,
            amlt: f,
            n_ref: 4,
            n_est: 4,
        });
        r
    }

    #[test]
    fn single_row_aggregate() {
        let rows = vec![row("a", 0.7, Some(1), vec![])];
        let agg = aggregate(&rows, GroupBy::Confidence);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].n, 1);
        assert_eq!(agg[0].mean.f_measure, 0.7);
    }

    #[test]
    fn group_totals_sum_to_n() {
        let rows = vec![
            row("a", 0.7, Some(1), vec![Axis::WeakBeatCues]),
            row("b", 0.5, Some(2), vec![]),
            row("c", 0.3, Some(1), vec![Axis::WeakBeatCues, Axis::Structural]),
        ];
        for g in [GroupBy::Confidence, GroupBy::AxisCount, GroupBy::TagCount, GroupBy::System] {
            let total: usize = aggregate(&rows, g).iter().map(|a| a.n).sum();
            assert_eq!(total, 3, "{g:?}");
        }
        let conf = aggregate(&rows, GroupBy::Confidence);
        assert_eq!(conf[0].key, "1");
        assert!((conf[0].mean.f_measure - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rows_csv_round_trip() {
        let mut report = RunReport::new("x");
        report.rows = vec![row("b", 0.5, None, vec![Axis::Structural]), row("a", 0.25, Some(3), vec![])];
        report.finish(&[GroupBy::System]);
        assert_eq!(report.rows[0].track_id, "a");
        let dir = tempfile::tempdir().unwrap();
        let out = report.write(dir.path()).unwrap();
        let back = read_rows_csv(&out.join("rows.csv")).unwrap();
        assert_eq!(back, report.rows);
    }

    #[test]
    fn empty_report_has_headers() {
        let r = RunReport::new("e");
        assert_eq!(r.rows_csv().lines().count(), 1);
        assert!(r.aggregate_csv().starts_with("group_by,"));
    }
}
