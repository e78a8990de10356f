//! Flat-file corpus: a directory per sample plus a line-delimited index.
//!
//! ```text
//! <root>/index.jsonl                 one SampleRecord per line, ingest order
//! <root>/samples/<short-sha1>/       binary copy, analysis.json, <sha1>.c, <sha1>.asm
//! <root>/similarity.jsonl            SimilarityRecord per line
//! <root>/digests-binary.txt          "<sha1> <digest>" per line
//! <root>/digests-disassembly.txt
//! <root>/vt-cache/<sha256>.json      raw reputation-service responses
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::ctph::{ChannelDigests, DigestEntry, SimilarityRecord, DEFAULT_RECORD_THRESHOLD};
use crate::elf::{self, BinaryProfile, ParseIssue};
use crate::features::{FeatureSet, Lexicon};
use crate::pipeline::{self, Companions, SampleAnalysis, StringCounts};
use crate::scoring::{RuleScores, ScoringConfig, RULE_COUNT};
use crate::source::{CondensedSource, FunctionAlerts};
use crate::vt::{Family, VtCache};

pub const INDEX_FILE: &str = "index.jsonl";
pub const SAMPLES_DIR: &str = "samples";
pub const SIMILARITY_FILE: &str = "similarity.jsonl";
pub const VT_CACHE_DIR: &str = "vt-cache";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const SHORT_ID_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: bad record: {source}")]
    BadRecord { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown sample {0}")]
    UnknownSample(String),
}

trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T, StoreError>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: &Path) -> Result<T, StoreError> {
        self.map_err(|source| StoreError::Io { path: path.to_path_buf(), source })
    }
}

/// Analysis fields of a record; replaced wholesale on re-analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub features: FeatureSet,
    pub scores: RuleScores,
    pub gds: f64,
    pub digests: ChannelDigests,
    pub string_counts: StringCounts,
    pub with_source: bool,
    pub with_disassembly: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub functions: Option<FunctionSummary>,
}

/// Function statistics against the configured alert thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FunctionSummary {
    pub count: usize,
    pub long: usize,
    pub many_args: usize,
}

impl FunctionSummary {
    pub fn from_condensed(c: &CondensedSource, alerts: &FunctionAlerts) -> Self {
        FunctionSummary {
            count: c.functions.len(),
            long: c.functions.iter().filter(|f| alerts.is_long(f)).count(),
            many_args: c.functions.iter().filter(|f| alerts.has_many_args(f)).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sha1: String,
    pub sha256: String,
    /// Sample directory relative to the corpus root.
    pub dir: String,
    pub original_name: String,
    pub profile: BinaryProfile,
    /// Analysis document relative to the corpus root.
    pub inventory_ref: String,
    pub ingested_at: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analysis: Option<AnalysisSummary>,
}

impl SampleRecord {
    pub fn short_id(&self) -> &str {
        &self.sha1[..SHORT_ID_LEN]
    }

    pub fn gds(&self) -> Option<f64> {
        self.analysis.as_ref().map(|a| a.gds)
    }

    pub fn scores(&self) -> Option<&RuleScores> {
        self.analysis.as_ref().map(|a| &a.scores)
    }

    pub fn digests(&self) -> ChannelDigests {
        self.analysis.as_ref().map(|a| a.digests.clone()).unwrap_or_default()
    }

    pub fn family_or_unknown(&self) -> Family {
        self.family.clone().unwrap_or_else(Family::unknown)
    }
}

/// Per-sample analysis JSON.
#[derive(Serialize)]
struct AnalysisDocument<'a> {
    profile: &'a BinaryProfile,
    parse_issues: &'a [ParseIssue],
    strings_by_section: BTreeMap<String, Vec<String>>,
    string_counts: StringCounts,
    features: &'a FeatureSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<&'a CondensedSource>,
    rule_scores: &'a RuleScores,
    gds: f64,
    digests: &'a ChannelDigests,
}

/// Render the analysis document exactly as it is written to disk.
pub fn analysis_json(a: &SampleAnalysis) -> Result<String, serde_json::Error> {
    let doc = AnalysisDocument {
        profile: &a.profile,
        parse_issues: &a.parse_issues,
        strings_by_section: a.inventory.to_section_map(),
        string_counts: a.string_counts,
        features: &a.features,
        source: a.source.as_ref(),
        rule_scores: &a.rule_scores,
        gds: a.gds,
        digests: &a.digests,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestOutcome {
    New(String),
    Duplicate(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub new: usize,
    pub duplicate: usize,
    pub malformed: usize,
    pub companions: usize,
    pub unmatched_companions: usize,
    pub new_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeSummary {
    pub analyzed: usize,
    pub skipped: usize,
    pub failed: Vec<(String, String)>,
    /// Samples with each rule available, rules 1 to 12.
    pub rule_availability: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CompanionKind {
    Source,
    Disassembly,
}

impl CompanionKind {
    fn ext(self) -> &'static str {
        match self {
            CompanionKind::Source => "c",
            CompanionKind::Disassembly => "asm",
        }
    }
}

/// `<40 hex>.c` or `<40 hex>.asm`.
fn companion_of(path: &Path) -> Option<(String, CompanionKind)> {
    let name = path.file_name()?.to_str()?;
    let (stem, ext) = name.rsplit_once('.')?;
    let kind = match ext {
        "c" => CompanionKind::Source,
        "asm" => CompanionKind::Disassembly,
        _ => return None,
    };
    (stem.len() == 40 && stem.bytes().all(|b| b.is_ascii_hexdigit())).then(|| (stem.to_ascii_lowercase(), kind))
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn write_atomic(path: &Path, data: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, data).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

struct Prepared {
    path: PathBuf,
    raw: Vec<u8>,
    profile: BinaryProfile,
    malformed: bool,
}

fn prepare(path: &Path) -> Result<Prepared, StoreError> {
    let raw = fs::read(path).at(path)?;
    let (profile, malformed) = match elf::parse_elf(&raw) {
        Ok(p) => (p.profile, false),
        Err(_) => (BinaryProfile::unparsed(&raw), true),
    };
    Ok(Prepared { path: path.to_path_buf(), raw, profile, malformed })
}

pub struct CorpusStore {
    root: PathBuf,
    records: Vec<SampleRecord>,
    by_sha1: HashMap<String, usize>,
}

impl CorpusStore {
    /// Open a corpus, creating the layout if needed.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(SAMPLES_DIR)).at(&root)?;
        let root = root.canonicalize().at(&root)?;
        let index = root.join(INDEX_FILE);
        let mut records = Vec::new();
        match fs::read_to_string(&index) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: SampleRecord = serde_json::from_str(line).map_err(|source| StoreError::BadRecord {
                        path: index.clone(),
                        line: i + 1,
                        source,
                    })?;
                    records.push(rec);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(StoreError::Io { path: index, source: e }),
        }
        let by_sha1 = records.iter().enumerate().map(|(i, r)| (r.sha1.clone(), i)).collect();
        Ok(CorpusStore { root, records, by_sha1 })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, sha1: &str) -> Option<&SampleRecord> {
        self.by_sha1.get(sha1).map(|&i| &self.records[i])
    }

    pub fn sample_dir(&self, rec: &SampleRecord) -> PathBuf {
        self.root.join(&rec.dir)
    }

    pub fn binary_path(&self, rec: &SampleRecord) -> PathBuf {
        self.sample_dir(rec).join(rec.dir.rsplit('/').next().unwrap_or(&rec.sha1))
    }

    pub fn source_path(&self, rec: &SampleRecord) -> PathBuf {
        self.sample_dir(rec).join(format!("{}.c", rec.sha1))
    }

    pub fn disassembly_path(&self, rec: &SampleRecord) -> PathBuf {
        self.sample_dir(rec).join(format!("{}.asm", rec.sha1))
    }

    pub fn analysis_path(&self, rec: &SampleRecord) -> PathBuf {
        self.root.join(&rec.inventory_ref)
    }

    pub fn vt_cache(&self) -> VtCache {
        VtCache::new(self.root.join(VT_CACHE_DIR))
    }

    fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    fn append_index(&self, rec: &SampleRecord) -> Result<(), StoreError> {
        let path = self.index_path();
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&path).at(&path)?;
        f.write_all(line.as_bytes()).at(&path)
    }

    /// Rewrite the whole index atomically, preserving record order.
    pub fn save_index(&self) -> Result<(), StoreError> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        write_atomic(&self.index_path(), out.as_bytes())
    }

    fn dir_name_for(&self, sha1: &str) -> String {
        let short = &sha1[..SHORT_ID_LEN];
        let taken = self.records.iter().any(|r| r.dir == format!("{SAMPLES_DIR}/{short}"));
        if taken {
            sha1.to_string()
        } else {
            short.to_string()
        }
    }

    fn add_prepared(&mut self, p: Prepared) -> Result<IngestOutcome, StoreError> {
        let sha1 = p.profile.sha1.clone();
        if self.by_sha1.contains_key(&sha1) {
            return Ok(IngestOutcome::Duplicate(sha1));
        }
        let name = self.dir_name_for(&sha1);
        let dir_rel = format!("{SAMPLES_DIR}/{name}");
        let dir = self.root.join(&dir_rel);
        fs::create_dir_all(&dir).at(&dir)?;
        let bin = dir.join(&name);
        fs::write(&bin, &p.raw).at(&bin)?;
        let rec = SampleRecord {
            sha256: p.profile.sha256.clone(),
            sha1: sha1.clone(),
            inventory_ref: format!("{dir_rel}/{ANALYSIS_FILE}"),
            dir: dir_rel,
            original_name: p.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            profile: p.profile,
            ingested_at: now_utc(),
            family: None,
            analysis: None,
        };
        self.append_index(&rec)?;
        self.by_sha1.insert(sha1.clone(), self.records.len());
        self.records.push(rec);
        Ok(IngestOutcome::New(sha1))
    }

    /// Ingest one file. A sample already in the corpus is left unchanged.
    pub fn ingest(&mut self, path: impl AsRef<Path>) -> Result<IngestOutcome, StoreError> {
        let p = prepare(path.as_ref())?;
        self.add_prepared(p)
    }

    fn attach_companion(&self, sha1: &str, kind: CompanionKind, from: &Path) -> Result<bool, StoreError> {
        let Some(rec) = self.get(sha1) else {
            return Ok(false);
        };
        let dest = self.sample_dir(rec).join(format!("{sha1}.{}", kind.ext()));
        let data = fs::read(from).at(from)?;
        if fs::read(&dest).ok().as_deref() != Some(&data[..]) {
            fs::write(&dest, data).at(&dest)?;
        }
        Ok(true)
    }

    /// Recursively ingest every regular file under `dir`. Files named
    /// `<sha1>.c` / `<sha1>.asm` are attached to their sample instead.
    pub fn ingest_dir(&mut self, dir: impl AsRef<Path>) -> Result<IngestSummary, StoreError> {
        let dir = dir.as_ref().canonicalize().at(dir.as_ref())?;
        let dir = dir.as_path();
        let mut files = Vec::new();
        let mut companions = Vec::new();
        for entry in WalkDir::new(dir).follow_links(false).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let path = e.path().unwrap_or(dir).to_path_buf();
                StoreError::Io { path, source: e.into() }
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.into_path();
            if path.starts_with(&self.root) {
                continue;
            }
            match companion_of(&path) {
                Some((sha1, kind)) => companions.push((sha1, kind, path)),
                None => files.push(path),
            }
        }

        let mut summary = IngestSummary::default();
        for batch in files.chunks(64) {
            let prepared: Vec<Result<Prepared, StoreError>> = batch.par_iter().map(|p| prepare(p)).collect();
            for p in prepared {
                let p = p?;
                let malformed = p.malformed;
                match self.add_prepared(p)? {
                    IngestOutcome::New(id) => {
                        summary.new += 1;
                        summary.malformed += malformed as usize;
                        summary.new_ids.push(id);
                    }
                    IngestOutcome::Duplicate(_) => summary.duplicate += 1,
                }
            }
        }
        for (sha1, kind, path) in companions {
            if self.attach_companion(&sha1, kind, &path)? {
                summary.companions += 1;
            } else {
                summary.unmatched_companions += 1;
            }
        }
        Ok(summary)
    }

    fn companions_present(&self, rec: &SampleRecord) -> (bool, bool) {
        (self.source_path(rec).is_file(), self.disassembly_path(rec).is_file())
    }

    /// Whether the record has no analysis or its companions changed since.
    pub fn needs_analysis(&self, rec: &SampleRecord) -> bool {
        let (src, asm) = self.companions_present(rec);
        match &rec.analysis {
            None => true,
            Some(a) => a.with_source != src || a.with_disassembly != asm,
        }
    }

    fn analyze_one(
        &self,
        rec: &SampleRecord,
        lexicon: &Lexicon,
        config: &ScoringConfig,
    ) -> Result<AnalysisSummary, String> {
        let bin = self.binary_path(rec);
        let raw = fs::read(&bin).map_err(|e| format!("{}: {e}", bin.display()))?;
        let source = match fs::read(self.source_path(rec)) {
            Ok(b) => Some(String::from_utf8_lossy(&b).into_owned()),
            Err(_) => None,
        };
        let asm = fs::read(self.disassembly_path(rec)).ok();
        let companions = Companions { source: source.as_deref(), disassembly: asm.as_deref() };
        let a = pipeline::analyze_sample(&raw, companions, lexicon, config).map_err(|e| e.to_string())?;
        let doc = analysis_json(&a).map_err(|e| e.to_string())?;
        let out = self.analysis_path(rec);
        write_atomic(&out, doc.as_bytes()).map_err(|e| e.to_string())?;
        Ok(AnalysisSummary {
            features: a.features,
            scores: a.rule_scores,
            gds: a.gds,
            digests: a.digests,
            string_counts: a.string_counts,
            with_source: source.is_some(),
            with_disassembly: asm.is_some(),
            functions: a.source.as_ref().map(|c| FunctionSummary::from_condensed(c, &config.functions)),
        })
    }

    /// Analyze samples lacking a current analysis (all samples with `force`).
    /// Failures are collected and the run continues.
    pub fn analyze(
        &mut self,
        lexicon: &Lexicon,
        config: &ScoringConfig,
        force: bool,
    ) -> Result<AnalyzeSummary, StoreError> {
        let todo: Vec<usize> =
            (0..self.records.len()).filter(|&i| force || self.needs_analysis(&self.records[i])).collect();
        let results: Vec<(usize, Result<AnalysisSummary, String>)> =
            todo.par_iter().map(|&i| (i, self.analyze_one(&self.records[i], lexicon, config))).collect();
        let mut summary = AnalyzeSummary { skipped: self.records.len() - todo.len(), ..Default::default() };
        for (i, res) in results {
            match res {
                Ok(a) => {
                    self.records[i].analysis = Some(a);
                    summary.analyzed += 1;
                }
                Err(e) => summary.failed.push((self.records[i].sha1.clone(), e)),
            }
        }
        summary.rule_availability = (1..=RULE_COUNT as u8)
            .map(|id| self.records.iter().filter(|r| r.scores().is_some_and(|s| s.is_available(id))).count())
            .collect();
        if summary.analyzed > 0 {
            self.save_index()?;
            self.write_digest_files()?;
        }
        Ok(summary)
    }

    /// Records matching `pred`, in sha1 order.
    pub fn query<F>(&self, pred: F) -> Vec<&SampleRecord>
    where
        F: Fn(&SampleRecord) -> bool,
    {
        let mut out: Vec<&SampleRecord> = self.records.iter().filter(|r| pred(r)).collect();
        out.sort_by(|a, b| a.sha1.cmp(&b.sha1));
        out
    }

    pub fn set_family(&mut self, sha1: &str, family: Family) -> Result<(), StoreError> {
        let i = *self.by_sha1.get(sha1).ok_or_else(|| StoreError::UnknownSample(sha1.to_string()))?;
        self.records[i].family = Some(family);
        Ok(())
    }

    pub fn digest_entries(&self) -> Vec<DigestEntry> {
        self.records
            .iter()
            .filter(|r| r.analysis.is_some())
            .map(|r| DigestEntry { id: r.sha1.clone(), digests: r.digests() })
            .collect()
    }

    /// `digests-<channel>.txt`: one "<sha1> <digest>" line per sample.
    pub fn write_digest_files(&self) -> Result<(), StoreError> {
        for ch in crate::ctph::Channel::ALL {
            let mut out = String::new();
            for r in &self.records {
                if let Some(d) = r.analysis.as_ref().and_then(|a| a.digests.get(ch)) {
                    out.push_str(&format!("{} {}\n", r.sha1, d));
                }
            }
            write_atomic(&self.root.join(format!("digests-{}.txt", ch.as_str())), out.as_bytes())?;
        }
        Ok(())
    }

    /// Replace the similarity file. Records under `threshold` (never less
    /// than the default record threshold) or naming unknown samples are
    /// dropped. Returns the number written.
    pub fn write_similarity(&self, records: &[SimilarityRecord], threshold: u8) -> Result<usize, StoreError> {
        let threshold = threshold.max(DEFAULT_RECORD_THRESHOLD);
        let mut out = String::new();
        let mut n = 0;
        let mut seen = HashSet::new();
        for r in records {
            if r.score < threshold || !self.by_sha1.contains_key(&r.id_a) || !self.by_sha1.contains_key(&r.id_b) {
                continue;
            }
            let (a, b) = if r.id_a <= r.id_b { (&r.id_a, &r.id_b) } else { (&r.id_b, &r.id_a) };
            if !seen.insert((a.clone(), b.clone(), r.channel)) {
                continue;
            }
            let canon = SimilarityRecord { id_a: a.clone(), id_b: b.clone(), channel: r.channel, score: r.score };
            out.push_str(&serde_json::to_string(&canon)?);
            out.push('\n');
            n += 1;
        }
        write_atomic(&self.root.join(SIMILARITY_FILE), out.as_bytes())?;
        Ok(n)
    }

    pub fn read_similarity(&self) -> Result<Vec<SimilarityRecord>, StoreError> {
        let path = self.root.join(SIMILARITY_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::Io { path, source: e }),
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|source| StoreError::BadRecord {
                    path: path.clone(),
                    line: i + 1,
                    source,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elf::testing::{build, Section};

    #[test]
    fn companion_names() {
        let sha = "a".repeat(40);
        assert_eq!(companion_of(Path::new(&format!("x/{sha}.c"))), Some((sha.clone(), CompanionKind::Source)));
        assert_eq!(companion_of(Path::new(&format!("{sha}.asm"))), Some((sha.clone(), CompanionKind::Disassembly)));
        assert_eq!(companion_of(Path::new("main.c")), None);
        assert_eq!(companion_of(Path::new(&format!("{sha}.txt"))), None);
    }

    #[test]
    fn ingest_duplicates_and_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("in");
        fs::create_dir_all(input.join("nested")).unwrap();
        let elf = build(
            false,
            false,
            8,
            &[],
            &[Section { name: ".rodata", sh_type: 1, data: b"udpflood\0/proc/net/route\0" }],
        );
        fs::write(input.join("a"), &elf).unwrap();
        fs::write(input.join("nested/a-renamed"), &elf).unwrap();
        fs::write(input.join("junk"), b"NOTELF at all").unwrap();
        let mut store = CorpusStore::open(tmp.path().join("corpus")).unwrap();
        let s = store.ingest_dir(&input).unwrap();
        assert_eq!((s.new, s.duplicate, s.malformed), (2, 1, 1));
        let again = store.ingest_dir(&input).unwrap();
        assert_eq!((again.new, again.duplicate), (0, 3));

        let reopened = CorpusStore::open(tmp.path().join("corpus")).unwrap();
        assert_eq!(reopened.records(), store.records());
        let rec = &store.records()[0];
        assert_eq!(rec.dir, format!("samples/{}", &rec.sha1[..12]));
        assert!(store.binary_path(rec).is_file());
        assert!(rec.ingested_at.ends_with('Z') && rec.ingested_at.len() == 20);
    }

    #[test]
    fn analyze_and_similarity() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("in");
        fs::create_dir_all(&input).unwrap();
        let body: Vec<u8> = (0..20_000u32).map(|i| (i.wrapping_mul(2654435761) >> 11) as u8).collect();
        let elf = build(true, false, 62, &[], &[Section { name: ".data", sh_type: 1, data: &body }]);
        let sha1 = elf::checksums(&elf).0;
        fs::write(input.join("sample"), &elf).unwrap();
        fs::write(input.join(format!("{sha1}.c")), "int main() {\n while (1) {\n  system(\"id\");\n }\n}\n").unwrap();
        let mut store = CorpusStore::open(tmp.path().join("corpus")).unwrap();
        let s = store.ingest_dir(&input).unwrap();
        assert_eq!(s.companions, 1);
        let lex = Lexicon::builtin();
        let cfg = ScoringConfig::default();
        let a = store.analyze(&lex, &cfg, false).unwrap();
        assert_eq!(a.analyzed, 1);
        assert_eq!(a.rule_availability[9], 1);
        let rec = &store.records()[0];
        assert!(rec.analysis.as_ref().unwrap().scores.is_available(12));
        assert_eq!(rec.analysis.as_ref().unwrap().scores.score(12), 1);
        assert!(store.analysis_path(rec).is_file());
        assert_eq!(store.analyze(&lex, &cfg, false).unwrap().analyzed, 0);

        let recs = vec![SimilarityRecord {
            id_a: sha1.clone(),
            id_b: "f".repeat(40),
            channel: crate::ctph::Channel::Binary,
            score: 90,
        }];
        assert_eq!(store.write_similarity(&recs, 20).unwrap(), 0);
        assert!(store.read_similarity().unwrap().is_empty());
        let digests = fs::read_to_string(tmp.path().join("corpus/digests-binary.txt")).unwrap();
        assert!(digests.starts_with(&sha1));
    }
}
