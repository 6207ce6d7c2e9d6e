//! Ranked bar-chart tables as static HTML, and score exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::clustering::ClusteringMethod;
use crate::preprocess::MsLevel;
use crate::scoring::{PipelineSetup, ScoreRecord};

pub const COLUMNS: [&str; 6] = ["Method", "SCS Rank", "CHI Rank", "SCS Val", "CHI Val", "Score"];
pub const CSV_COLUMNS: [&str; 10] = [
    "pp", "ms", "function", "clustering", "scs_val", "chi_val", "scs_rank", "chi_rank", "sorc", "degenerate",
];
pub const GRID_TOP: usize = 5;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no records to report")]
    EmptyRecords,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSpec {
    pub title: String,
    pub dataset: String,
    /// Only records of this method are shown; `None` keeps all.
    pub clustering: Option<ClusteringMethod>,
    /// Number of rows kept; `None` keeps all.
    pub top_n: Option<usize>,
    pub records: Vec<ScoreRecord>,
}

/// Descending score, ties by setup order.
pub fn sort_records(records: &mut [ScoreRecord]) {
    records.sort_by(|a, b| b.sorc.total_cmp(&a.sorc).then_with(|| a.setup.cmp(&b.setup)));
}

impl ReportSpec {
    /// Filtered, sorted and truncated rows.
    pub fn rows(&self) -> Vec<ScoreRecord> {
        let mut rows: Vec<ScoreRecord> = self
            .records
            .iter()
            .filter(|r| self.clustering.is_none_or(|c| r.setup.clustering == c))
            .cloned()
            .collect();
        sort_records(&mut rows);
        if let Some(n) = self.top_n {
            rows.truncate(n);
        }
        rows
    }
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn value_text(v: f64) -> String {
    if v == f64::MAX {
        "max".to_string()
    } else {
        format!("{v:.4}")
    }
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em}\
table{border-collapse:collapse;margin-bottom:1.5em}\
th,td{border:1px solid #ccc;padding:2px 6px;text-align:left;font-size:13px}\
td.bar{width:120px}\
div.track{background:#eee;height:10px;width:100px;display:inline-block;vertical-align:middle}\
div.fill{background:#4a78b5;height:10px}\
td.bar span{margin-left:4px}\
tr.degenerate td{color:#999}\
span.flag{color:#b00;font-size:11px;margin-left:6px}\
table.grid>tbody>tr>td{vertical-align:top;border:none}";

fn bar_cell(out: &mut String, v: f64) {
    let pct = (v.clamp(0.0, 1.0) * 100.0).round();
    let _ = write!(
        out,
        "<td class=\"bar\"><div class=\"track\"><div class=\"fill\" style=\"width:{pct:.0}%\"></div></div><span>{v:.4}</span></td>"
    );
}

fn table(out: &mut String, rows: &[ScoreRecord]) {
    out.push_str("<table class=\"scores\">\n<thead><tr>");
    for c in COLUMNS {
        let _ = write!(out, "<th>{c}</th>");
    }
    out.push_str("</tr></thead>\n<tbody>\n");
    for r in rows {
        out.push_str(if r.degenerate { "<tr class=\"degenerate\">" } else { "<tr>" });
        let _ = write!(out, "<td class=\"method\">{}", escape_html(&r.setup.label()));
        if r.degenerate {
            out.push_str("<span class=\"flag\">degenerate</span>");
        }
        out.push_str("</td>");
        bar_cell(out, r.scs_rank);
        bar_cell(out, r.chi_rank);
        let _ = write!(
            out,
            "<td class=\"value\">{}</td><td class=\"value\">{}</td>",
            value_text(r.scs_val),
            value_text(r.chi_val)
        );
        bar_cell(out, r.sorc);
        out.push_str("</tr>\n");
    }
    out.push_str("</tbody>\n</table>\n");
}

fn document(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<h1>{t}</h1>\n{body}</body>\n</html>\n",
        t = escape_html(title)
    )
}

/// One sorted bar-chart table.
pub fn render_barchart_table(spec: &ReportSpec) -> Result<String, ReportError> {
    render_sections(&spec.title, std::slice::from_ref(spec))
}

/// Several bar-chart tables, one after another, in one document.
pub fn render_sections(title: &str, specs: &[ReportSpec]) -> Result<String, ReportError> {
    let mut body = String::new();
    for spec in specs {
        let rows = spec.rows();
        if rows.is_empty() {
            return Err(ReportError::EmptyRecords);
        }
        let total = spec
            .records
            .iter()
            .filter(|r| spec.clustering.is_none_or(|c| r.setup.clustering == c))
            .count();
        if specs.len() > 1 {
            let _ = writeln!(body, "<h2>{}</h2>", escape_html(&spec.title));
        }
        let _ = writeln!(
            body,
            "<p class=\"meta\">Dataset: {}. Clustering: {}. Showing {} of {} setups.</p>",
            escape_html(&spec.dataset),
            spec.clustering.map_or("all", |c| c.display_name()),
            rows.len(),
            total
        );
        table(&mut body, &rows);
    }
    if body.is_empty() {
        return Err(ReportError::EmptyRecords);
    }
    Ok(document(title, &body))
}

/// Top-five tables laid out with one row per dataset and one column per
/// clustering method.
pub fn render_comparison_grid(title: &str, specs: &[ReportSpec]) -> Result<String, ReportError> {
    if specs.is_empty() {
        return Err(ReportError::EmptyRecords);
    }
    let mut datasets: Vec<&str> = Vec::new();
    for s in specs {
        if !datasets.contains(&s.dataset.as_str()) {
            datasets.push(&s.dataset);
        }
    }
    let mut methods: Vec<Option<ClusteringMethod>> = specs.iter().map(|s| s.clustering).collect();
    methods.sort();
    methods.dedup();

    let mut body = String::from("<table class=\"grid\">\n<thead><tr><th></th>");
    for m in &methods {
        let _ = write!(body, "<th>{}</th>", m.map_or("All", |c| c.display_name()));
    }
    body.push_str("</tr></thead>\n<tbody>\n");
    for d in &datasets {
        let _ = write!(body, "<tr><th>{}</th>", escape_html(d));
        for m in &methods {
            body.push_str("<td>");
            if let Some(spec) = specs.iter().find(|s| s.dataset == *d && s.clustering == *m) {
                let mut rows = spec.rows();
                rows.truncate(GRID_TOP);
                table(&mut body, &rows);
            }
            body.push_str("</td>");
        }
        body.push_str("</tr>\n");
    }
    body.push_str("</tbody>\n</table>\n");
    Ok(document(title, &body))
}

fn float_text(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_row(r: &ScoreRecord) -> [String; 10] {
    [
        r.setup.pp.to_string(),
        r.setup.ms.index().to_string(),
        r.setup.function.slug().to_string(),
        r.setup.clustering.slug().to_string(),
        float_text(r.scs_val),
        float_text(r.chi_val),
        float_text(r.scs_rank),
        float_text(r.chi_rank),
        float_text(r.sorc),
        r.degenerate.to_string(),
    ]
}

pub fn scores_csv(records: &[ScoreRecord]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    pp: bool,
    ms: u8,
    function: &'a str,
    clustering: &'a str,
    scs_val: f64,
    chi_val: f64,
    scs_rank: f64,
    chi_rank: f64,
    sorc: f64,
    degenerate: bool,
}

pub fn scores_json(records: &[ScoreRecord]) -> Result<String, ReportError> {
    let rows: Vec<JsonRecord> = records
        .iter()
        .map(|r| JsonRecord {
            pp: r.setup.pp,
            ms: r.setup.ms.index(),
            function: r.setup.function.slug(),
            clustering: r.setup.clustering.slug(),
            scs_val: r.scs_val,
            chi_val: r.chi_val,
            scs_rank: r.scs_rank,
            chi_rank: r.chi_rank,
            sorc: r.sorc,
            degenerate: r.degenerate,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows)?;
    s.push('\n');
    Ok(s)
}

/// Writes `path` as CSV and a JSON twin next to it.
pub fn export_scores(records: &[ScoreRecord], path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    fs::write(path, scores_csv(records)?).map_err(io_error(path))?;
    let json = path.with_extension("json");
    fs::write(&json, scores_json(records)?).map_err(io_error(&json))?;
    Ok(())
}

fn field<T: std::str::FromStr>(line: usize, name: &str, v: &str) -> Result<T, ReportError> {
    v.parse().map_err(|_| ReportError::Parse {
        line,
        reason: format!("bad {name} value {v:?}"),
    })
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>, ReportError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_scores(&text)
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(ReportError::Parse {
            line: 1,
            reason: format!("expected columns {}", CSV_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let ms = MsLevel::from_index(field(line, "ms", &rec[1])?).ok_or_else(|| ReportError::Parse {
            line,
            reason: format!("bad ms value {:?}", &rec[1]),
        })?;
        out.push(ScoreRecord {
            setup: PipelineSetup {
                pp: field(line, "pp", &rec[0])?,
                ms,
                function: field(line, "function", &rec[2])?,
                clustering: field(line, "clustering", &rec[3])?,
            },
            scs_val: field(line, "scs_val", &rec[4])?,
            chi_val: field(line, "chi_val", &rec[5])?,
            scs_rank: field(line, "scs_rank", &rec[6])?,
            chi_rank: field(line, "chi_rank", &rec[7])?,
            sorc: field(line, "sorc", &rec[8])?,
            degenerate: field(line, "degenerate", &rec[9])?,
        });
    }
    Ok(out)
}
