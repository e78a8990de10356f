//! Corpus reports rendered as Markdown or CSV tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::ctph::{Channel, KnownMatch, SimilarityRecord, DEFAULT_FLAG_THRESHOLD};
use crate::scoring::{self, RULE_COUNT};
use crate::source::FunctionAlerts;
use crate::store::SampleRecord;
use crate::vt::Family;

pub const BUCKET_WIDTH: f64 = 0.1;
/// Cut-offs of the detection table, highest first.
pub const DETECTION_CUTS: [f64; 5] = [0.7, 0.6, 0.5, 0.4, 0.3];
/// False-positive rate observed at the default operating point on the
/// benign reference corpus.
pub const REFERENCE_FP_RATE: f64 = 0.57;
pub const FAMILY_COLUMNS: [&str; 3] = ["GAFGYT", "MIRAI", "TSUNAMI"];
pub const OTHER_COLUMN: &str = "UNKNOWN/OTH";

pub const RULE_LABELS: [&str; RULE_COUNT] = [
    "RULE 1: DDOS STRINGS IN BINARY > 50%",
    "RULE 2: USER AGENTS LIST/MASK IN BINARY",
    "RULE 3: HARD-CODED IP ADDRESS IN BINARY",
    "RULE 4: IP BLACKLIST IN BINARY",
    "RULE 5: SYSTEM HISTORY CALLS",
    "RULE 6: SYSTEM NETWORK FILES",
    "RULE 7: SYSTEM PROC FILE",
    "RULE 8: OTHER SYSTEM FILES",
    "RULE 9: AUTO INSTALL COMMANDS",
    "RULE 10: DECOMPILED CODE SUSPICIOUS LINES > 2%",
    "RULE 11: DECOMPILED CODE WHILE TRUE LOOPS RATIO > 20%",
    "RULE 12: DECOMPILED CODE SYSTEM CALLS",
];

pub const SIMILARITY_HEADERS: [&str; 21] = [
    "id(sha1)",
    "DDOS SCORE",
    "FAMILY",
    "SIZE",
    "ARCH",
    "STRIPPED",
    "DECOMPILED",
    "id(sha1)2",
    "DDOS SCORE",
    "FAMILY",
    "SIZE",
    "ARCH",
    "STRIPPED",
    "DECOMPILED",
    "SSDEEP BIN",
    "SSDEEP ASSEM",
    "SDHASH BIN",
    "SDHASH ASSEM",
    "HASH AVERG",
    "DDOS SCORE DIFF",
    "MAX HASH",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table { title: title.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        let line = |cells: &[String]| {
            format!("| {} |\n", cells.iter().map(|c| c.replace('|', "\\|")).collect::<Vec<_>>().join(" | "))
        };
        out.push_str(&line(&self.headers));
        out.push_str(&format!("|{}\n", "---|".repeat(self.headers.len())));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", csv_field(&self.title));
        let line = |cells: &[String]| format!("{}\n", cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push_str(&line(&self.headers));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tables: Vec<Table>,
    pub footer: String,
}

impl Report {
    pub fn table(&self, title_prefix: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.title.starts_with(title_prefix))
    }

    pub fn render(&self, format: ReportFormat) -> String {
        let mut out = String::new();
        match format {
            ReportFormat::Markdown => {
                out.push_str("# DDoS triage report\n\n");
                for t in &self.tables {
                    out.push_str(&t.to_markdown());
                    out.push('\n');
                }
                let _ = writeln!(out, "_{}_", self.footer);
            }
            ReportFormat::Csv => {
                for t in &self.tables {
                    out.push_str(&t.to_csv());
                    out.push('\n');
                }
                let _ = writeln!(out, "{}", csv_field(&self.footer));
            }
        }
        out
    }
}

/// Everything a report draws on.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub records: &'a [SampleRecord],
    pub similarity: &'a [SimilarityRecord],
    pub matches: &'a [KnownMatch],
    /// Analyzed benign reference corpus, for false-positive columns.
    pub benign: Option<&'a [SampleRecord]>,
    pub detect_gds: f64,
    pub alerts: FunctionAlerts,
}

impl<'a> ReportInput<'a> {
    pub fn new(records: &'a [SampleRecord]) -> Self {
        ReportInput {
            records,
            similarity: &[],
            matches: &[],
            benign: None,
            detect_gds: scoring::DEFAULT_DETECT_GDS,
            alerts: FunctionAlerts::default(),
        }
    }
}

pub fn pct(x: f64) -> String {
    format!("{x:.2}%")
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn cut_label(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn share(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

fn analyzed(records: &[SampleRecord]) -> Vec<&SampleRecord> {
    records.iter().filter(|r| r.analysis.is_some()).collect()
}

fn gds_list(records: &[&SampleRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.gds()).collect()
}

/// Report column a family label falls into.
pub fn family_column(f: &Family) -> &'static str {
    FAMILY_COLUMNS.iter().find(|c| **c == f.as_str()).copied().unwrap_or(OTHER_COLUMN)
}

pub fn build_report(input: &ReportInput<'_>) -> Report {
    let samples = analyzed(input.records);
    let tables = vec![
        summary_table(input.records),
        histogram_table(&samples),
        detection_table(&samples, input),
        family_table(&samples),
        rule_table(&samples, input, true),
        rule_table(&samples, input, false),
        stripped_table(&samples),
        function_table(&samples, &input.alerts),
        known_match_table(input.matches),
        similarity_table(input),
    ];
    let footer = format!(
        "Operating point: detect_gds {}. Reference FP rate of {} at detect_gds {}.",
        cut_label(input.detect_gds),
        pct(REFERENCE_FP_RATE),
        cut_label(scoring::DEFAULT_DETECT_GDS)
    );
    Report { tables, footer }
}

fn summary_table(records: &[SampleRecord]) -> Table {
    let mut t = Table::new(
        "Corpus summary",
        &["SAMPLES", "ANALYZED", "DECOMPILED", "STRIPPED", "STATIC", "STRINGS EXTRACTED", "STRINGS LEXICAL"],
    );
    let with = |p: &dyn Fn(&SampleRecord) -> bool| records.iter().filter(|r| p(r)).count();
    let strings = |f: &dyn Fn(&crate::pipeline::StringCounts) -> usize| -> usize {
        records.iter().filter_map(|r| r.analysis.as_ref()).map(|a| f(&a.string_counts)).sum()
    };
    t.push(vec![
        records.len().to_string(),
        with(&|r| r.analysis.is_some()).to_string(),
        with(&|r| r.analysis.as_ref().is_some_and(|a| a.with_source)).to_string(),
        with(&|r| r.profile.is_stripped).to_string(),
        with(&|r| r.profile.is_static).to_string(),
        strings(&|c| c.extracted).to_string(),
        strings(&|c| c.lexical).to_string(),
    ]);
    t
}

fn histogram_table(samples: &[&SampleRecord]) -> Table {
    let mut t = Table::new("Percentage of binaries in each DDoS score range", &["SCORE RANGE", "% OF BINARIES"]);
    if samples.is_empty() {
        return t;
    }
    for b in scoring::bucket_scores(&gds_list(samples), BUCKET_WIDTH) {
        t.push(vec![b.label(), pct(b.percent)]);
    }
    t
}

fn above(scores: &[f64], cut: f64) -> usize {
    scores.iter().filter(|&&g| g > cut + 1e-9).count()
}

fn detection_table(samples: &[&SampleRecord], input: &ReportInput<'_>) -> Table {
    let mut t = Table::new(
        "Number of binaries and FP by DDoS score range",
        &["DDOS SCORE", "% OF BINARIES", "COUNT", "FP RATE"],
    );
    if samples.is_empty() {
        return t;
    }
    let scores = gds_list(samples);
    let benign: Option<Vec<f64>> = input.benign.map(|b| gds_list(&analyzed(b)));
    for cut in DETECTION_CUTS {
        let n = above(&scores, cut);
        let fp = match &benign {
            Some(b) if !b.is_empty() => pct(share(above(b, cut), b.len())),
            _ => "-".to_string(),
        };
        t.push(vec![format!(">{}", cut_label(cut)), pct(share(n, scores.len())), n.to_string(), fp]);
    }
    t
}

fn bucket_matrix<F>(samples: &[&SampleRecord], columns: &[&str], column_of: F) -> Vec<Vec<usize>>
where
    F: Fn(&SampleRecord) -> usize,
{
    let n = (1.0 / BUCKET_WIDTH).round() as usize;
    let mut m = vec![vec![0usize; columns.len()]; n];
    for r in samples {
        if let Some(g) = r.gds() {
            m[scoring::bucket_index(g, BUCKET_WIDTH)][column_of(r)] += 1;
        }
    }
    m
}

fn push_matrix(t: &mut Table, m: &[Vec<usize>], blank_zero: bool) {
    let cell = |v: usize| if blank_zero && v == 0 { String::new() } else { v.to_string() };
    let buckets = scoring::bucket_scores(&[], BUCKET_WIDTH);
    let width = m.first().map_or(0, |r| r.len());
    let mut totals = vec![0usize; width];
    for (b, row) in buckets.iter().zip(m) {
        let mut cells = vec![b.label()];
        cells.extend(row.iter().map(|&v| cell(v)));
        cells.push(row.iter().sum::<usize>().to_string());
        for (t, v) in totals.iter_mut().zip(row) {
            *t += v;
        }
        t.push(cells);
    }
    let mut cells = vec!["TOTAL".to_string()];
    cells.extend(totals.iter().map(|v| v.to_string()));
    cells.push(totals.iter().sum::<usize>().to_string());
    t.push(cells);
}

fn family_table(samples: &[&SampleRecord]) -> Table {
    let mut headers = vec!["DDOS SCORE RANGE"];
    headers.extend(FAMILY_COLUMNS);
    headers.extend([OTHER_COLUMN, "TOTAL"]);
    let mut t = Table::new("Malware in each DDoS score range", &headers);
    if samples.is_empty() {
        return t;
    }
    let m = bucket_matrix(samples, &headers[1..5], |r| {
        let col = family_column(&r.family_or_unknown());
        FAMILY_COLUMNS.iter().position(|c| *c == col).unwrap_or(FAMILY_COLUMNS.len())
    });
    push_matrix(&mut t, &m, true);
    t
}

fn stripped_table(samples: &[&SampleRecord]) -> Table {
    let mut t = Table::new(
        "Stripped and unstripped binaries in each DDoS score range",
        &["DDOS SCORE RANGE", "STRIPPED", "NOT STRIPPED", "TOTAL"],
    );
    if samples.is_empty() {
        return t;
    }
    let m = bucket_matrix(samples, &["STRIPPED", "NOT STRIPPED"], |r| if r.profile.is_stripped { 0 } else { 1 });
    push_matrix(&mut t, &m, false);
    t
}

fn rule_column(samples: &[&SampleRecord], rate_cuts: bool) -> Option<Vec<String>> {
    if samples.is_empty() {
        return None;
    }
    let ratios = scoring::rule_positive_ratios(samples.iter().filter_map(|r| r.scores()));
    Some(
        ratios
            .iter()
            .map(|p| {
                let v = if rate_cuts && p.rate_cut.is_some() { p.rate_cut_pct } else { p.positive_pct };
                v.map_or_else(|| "NA".to_string(), pct)
            })
            .collect(),
    )
}

fn rule_table(samples: &[&SampleRecord], input: &ReportInput<'_>, rate_cuts: bool) -> Table {
    let detected = format!("DDOS SCORE > {}", cut_label(input.detect_gds));
    let headers = ["RULE", "DATASET", "BUSYBOX", "VIRUS TOTAL", detected.as_str()];
    let title = if rate_cuts { "Rules positives ratio" } else { "Rules positives ratio, any non-zero score" };
    let mut t = Table::new(title, &headers);
    if samples.is_empty() {
        return t;
    }
    let benign = input.benign.map(analyzed).unwrap_or_default();
    let labelled: Vec<&SampleRecord> = samples.iter().copied().filter(|r| r.family.is_some()).collect();
    let high: Vec<&SampleRecord> =
        samples.iter().copied().filter(|r| r.gds().is_some_and(|g| g > input.detect_gds + 1e-9)).collect();
    let columns = [
        rule_column(samples, rate_cuts),
        rule_column(&benign, rate_cuts),
        rule_column(&labelled, rate_cuts),
        rule_column(&high, rate_cuts),
    ];
    for (i, label) in RULE_LABELS.iter().enumerate() {
        let mut row =
            vec![if rate_cuts { label.to_string() } else { label.split(" > ").next().unwrap_or(label).to_string() }];
        row.extend(columns.iter().map(|c| c.as_ref().map_or_else(|| "-".to_string(), |c| c[i].clone())));
        t.push(row);
    }
    t
}

fn function_table(samples: &[&SampleRecord], alerts: &FunctionAlerts) -> Table {
    let long = format!("LONG FUNCTIONS (> {} LINES)", alerts.max_lines);
    let args = format!("MANY-ARGUMENT FUNCTIONS (> {} ARGS)", alerts.max_args);
    let mut t = Table::new("Decompiled function alerts", &["id(sha1)", "FUNCTIONS", long.as_str(), args.as_str()]);
    let mut totals = [0usize; 3];
    let mut any = false;
    for r in samples {
        let Some(f) = r.analysis.as_ref().and_then(|a| a.functions) else { continue };
        any = true;
        totals[0] += f.count;
        totals[1] += f.long;
        totals[2] += f.many_args;
        if f.long > 0 || f.many_args > 0 {
            t.push(vec![r.sha1.clone(), f.count.to_string(), f.long.to_string(), f.many_args.to_string()]);
        }
    }
    if any {
        let mut row = vec!["TOTAL".to_string()];
        row.extend(totals.iter().map(|v| v.to_string()));
        t.push(row);
    }
    t
}

/// Score band of a flagged match: 0 for 100-90%, 1 for 90-80%, 2 for 80-70%.
fn match_band(score: u8) -> Option<usize> {
    match score {
        90..=100 => Some(0),
        80..=89 => Some(1),
        s if s >= DEFAULT_FLAG_THRESHOLD => Some(2),
        _ => None,
    }
}

fn known_match_table(matches: &[KnownMatch]) -> Table {
    let mut t = Table::new(
        "Hash compare of known malware samples vs unknown binaries",
        &["", "100-90%", "90-80%", "80-70%", "TOTAL"],
    );
    if matches.is_empty() {
        return t;
    }
    let mut best: BTreeMap<(String, &str), u8> = BTreeMap::new();
    for m in matches {
        let e = best.entry((Family::new(&m.family).as_str().to_string(), m.unknown_id.as_str())).or_insert(0);
        *e = (*e).max(m.score);
    }
    let mut per_family: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for ((fam, _), score) in best {
        if let Some(b) = match_band(score) {
            per_family.entry(fam).or_default()[b] += 1;
        }
    }
    let mut totals = [0usize; 3];
    for (fam, counts) in &per_family {
        let mut row = vec![fam.clone()];
        row.extend(counts.iter().map(|c| c.to_string()));
        row.push(counts.iter().sum::<usize>().to_string());
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
        t.push(row);
    }
    let mut row = vec!["TOTAL".to_string()];
    row.extend(totals.iter().map(|c| c.to_string()));
    row.push(totals.iter().sum::<usize>().to_string());
    t.push(row);
    t
}

/// Pair of samples with their per-channel scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub id_a: String,
    pub id_b: String,
    pub binary: Option<u8>,
    pub disassembly: Option<u8>,
}

impl PairRow {
    pub fn max(&self) -> u8 {
        self.binary.into_iter().chain(self.disassembly).max().unwrap_or(0)
    }
}

/// Merge per-channel similarity records into one row per pair, best first.
pub fn pair_rows(similarity: &[SimilarityRecord]) -> Vec<PairRow> {
    let mut pairs: BTreeMap<(String, String), PairRow> = BTreeMap::new();
    for s in similarity {
        let (a, b) = if s.id_a <= s.id_b { (&s.id_a, &s.id_b) } else { (&s.id_b, &s.id_a) };
        let row = pairs.entry((a.clone(), b.clone())).or_insert_with(|| PairRow {
            id_a: a.clone(),
            id_b: b.clone(),
            binary: None,
            disassembly: None,
        });
        let slot = match s.channel {
            Channel::Binary => &mut row.binary,
            Channel::Disassembly => &mut row.disassembly,
        };
        *slot = Some(slot.map_or(s.score, |v| v.max(s.score)));
    }
    let mut rows: Vec<PairRow> = pairs.into_values().collect();
    rows.sort_by(|x, y| y.max().cmp(&x.max()).then_with(|| x.id_a.cmp(&y.id_a)).then_with(|| x.id_b.cmp(&y.id_b)));
    rows
}

fn sample_cells(r: Option<&SampleRecord>, id: &str) -> Vec<String> {
    match r {
        Some(r) => vec![
            r.sha1.clone(),
            r.gds().map_or_else(|| "-".to_string(), num),
            r.family.as_ref().map(|f| f.as_str().to_string()).unwrap_or_default(),
            r.profile.size.to_string(),
            r.profile.arch.clone(),
            flag(r.profile.is_stripped),
            flag(r.analysis.as_ref().is_some_and(|a| a.with_source)),
        ],
        None => {
            let mut v = vec![id.to_string()];
            v.extend(std::iter::repeat_n("-".to_string(), 6));
            v
        }
    }
}

fn has_channel(r: Option<&SampleRecord>, ch: Channel) -> bool {
    r.and_then(|r| r.analysis.as_ref()).is_some_and(|a| a.digests.get(ch).is_some())
}

fn similarity_table(input: &ReportInput<'_>) -> Table {
    let mut t = Table::new("Top matches using fuzzy hash", &SIMILARITY_HEADERS);
    let by_id: HashMap<&str, &SampleRecord> = input.records.iter().map(|r| (r.sha1.as_str(), r)).collect();
    for p in pair_rows(input.similarity) {
        let (ra, rb) = (by_id.get(p.id_a.as_str()).copied(), by_id.get(p.id_b.as_str()).copied());
        let mut row = sample_cells(ra, &p.id_a);
        row.extend(sample_cells(rb, &p.id_b));
        let mut present = Vec::new();
        for (ch, score) in [(Channel::Binary, p.binary), (Channel::Disassembly, p.disassembly)] {
            if has_channel(ra, ch) && has_channel(rb, ch) || score.is_some() {
                let s = score.unwrap_or(0);
                present.push(s);
                row.push(s.to_string());
            } else {
                row.push("-".to_string());
            }
        }
        row.extend(["-".to_string(), "-".to_string()]);
        let avg = present.iter().map(|&s| s as f64).sum::<f64>() / present.len().max(1) as f64;
        row.push(num(avg));
        let diff = match (ra.and_then(|r| r.gds()), rb.and_then(|r| r.gds())) {
            (Some(a), Some(b)) => num((a - b).abs()),
            _ => "-".to_string(),
        };
        row.push(diff);
        row.push(p.max().to_string());
        t.push(row);
    }
    t
}
