//! The twelve-rule registry and the Global DDoS Score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Lexicon;
use crate::features::{DetectorThresholds, FeatureSet};
use crate::source::{self, CondensedSource, FunctionAlerts};

pub const RULE_COUNT: usize = 12;
pub const DEFAULT_WEIGHTS: [u32; RULE_COUNT] = [5, 5, 1, 2, 1, 1, 1, 1, 5, 5, 5, 1];
/// Upper bound of the laddered scores.
pub const LADDER_MAX: u32 = 5;
pub const DEFAULT_DETECT_GDS: f64 = 0.4;

pub const RULE_NAMES: [&str; RULE_COUNT] = [
    "DDoS strings in binary",
    "User agents list/mask in binary",
    "Hard-coded IP address in binary",
    "IP blacklist in binary",
    "System history calls",
    "System network files",
    "System proc files",
    "Other system files",
    "Auto install commands",
    "Decompiled code suspicious lines",
    "Decompiled code while true loops ratio",
    "Decompiled code system calls",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Boolean,
    Laddered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDefinition {
    pub id: u8,
    pub name: &'static str,
    pub weight: u32,
    pub kind: RuleKind,
    pub requires_source: bool,
}

fn rule_kind(id: u8) -> RuleKind {
    match id {
        1 | 10 | 11 => RuleKind::Laddered,
        _ => RuleKind::Boolean,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnavailablePolicy {
    /// Unavailable rules drop out of the denominator.
    #[default]
    #[serde(rename = "exclude")]
    Exclude,
    /// Unavailable rules count as zero against their full weight.
    #[serde(rename = "include-as-zero")]
    IncludeAsZero,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown rule id `{0}` in [weights]")]
    UnknownRule(String),
    #[error("weight of rule {0} must be positive")]
    ZeroWeight(u8),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ScoringError {
    #[error("no rule could be evaluated")]
    NoAvailableRules,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub weights: [u32; RULE_COUNT],
    pub unavailable: UnavailablePolicy,
    pub detectors: DetectorThresholds,
    pub functions: FunctionAlerts,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            weights: DEFAULT_WEIGHTS,
            unavailable: UnavailablePolicy::Exclude,
            detectors: DetectorThresholds::default(),
            functions: FunctionAlerts::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    weights: BTreeMap<String, u32>,
    #[serde(default)]
    unavailable: UnavailablePolicy,
    #[serde(default)]
    detectors: DetectorThresholds,
    #[serde(default)]
    functions: FunctionAlerts,
}

impl ScoringConfig {
    /// Parse a TOML config. Every key is optional and falls back to the
    /// defaults:
    ///
    /// ```toml
    /// unavailable = "exclude"      # or "include-as-zero"
    /// [weights]
    /// 4 = 5
    /// [detectors]
    /// blacklist_threshold = 10
    /// auto_install_min_len = 120
    /// auto_install_min_tokens = 3
    /// [functions]
    /// max_lines = 500
    /// max_args = 8
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text)?;
        let mut weights = DEFAULT_WEIGHTS;
        for (key, w) in file.weights {
            let id: usize = key
                .trim()
                .parse()
                .ok()
                .filter(|i| (1..=RULE_COUNT).contains(i))
                .ok_or_else(|| ConfigError::UnknownRule(key.clone()))?;
            if w == 0 {
                return Err(ConfigError::ZeroWeight(id as u8));
            }
            weights[id - 1] = w;
        }
        Ok(ScoringConfig {
            weights,
            unavailable: file.unavailable,
            detectors: file.detectors,
            functions: file.functions,
        })
    }

    pub fn rules(&self) -> Vec<RuleDefinition> {
        (1..=RULE_COUNT as u8)
            .map(|id| RuleDefinition {
                id,
                name: RULE_NAMES[id as usize - 1],
                weight: self.weights[id as usize - 1],
                kind: rule_kind(id),
                requires_source: id >= 10,
            })
            .collect()
    }

    pub fn with_policy(mut self, policy: UnavailablePolicy) -> Self {
        self.unavailable = policy;
        self
    }
}

/// Rules 10 to 12 as measured on decompiled source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceEvidence {
    pub suspicious_line_rate: f64,
    pub s10: u8,
    pub while_true_rate: f64,
    pub s11: u8,
    pub has_system_calls: bool,
}

impl SourceEvidence {
    /// `None` when the source has no countable lines.
    pub fn from_condensed(condensed: &CondensedSource, lexicon: &Lexicon) -> Option<Self> {
        let (suspicious_line_rate, s10) = source::suspicious_line_rate(condensed, lexicon).ok()?;
        let (while_true_rate, s11) = source::while_true_ratio(condensed).ok()?;
        Some(SourceEvidence {
            suspicious_line_rate,
            s10,
            while_true_rate,
            s11,
            has_system_calls: source::detect_system_calls(condensed),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleScore {
    pub id: u8,
    pub score: u32,
    pub weight: u32,
    pub available: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleScores {
    pub rules: Vec<RuleScore>,
    pub points: u32,
    pub max_points: u32,
    pub gds: f64,
    pub policy: UnavailablePolicy,
    pub lexicon_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub suspicious_line_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub while_true_rate: Option<f64>,
}

impl RuleScores {
    /// Combine per-rule scores, `None` marking an unavailable rule. Scores
    /// are clamped to their weights.
    pub fn from_parts(scores: [Option<u32>; RULE_COUNT], config: &ScoringConfig) -> Result<Self, ScoringError> {
        if scores.iter().all(Option::is_none) {
            return Err(ScoringError::NoAvailableRules);
        }
        let rules: Vec<RuleScore> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| RuleScore {
                id: i as u8 + 1,
                score: s.unwrap_or(0).min(config.weights[i]),
                weight: config.weights[i],
                available: s.is_some(),
            })
            .collect();
        let points = rules.iter().map(|r| r.score).sum();
        let max_points = rules
            .iter()
            .filter(|r| r.available || config.unavailable == UnavailablePolicy::IncludeAsZero)
            .map(|r| r.weight)
            .sum::<u32>();
        Ok(RuleScores {
            rules,
            points,
            max_points,
            gds: points as f64 / max_points as f64,
            policy: config.unavailable,
            lexicon_rate: 0.0,
            suspicious_line_rate: None,
            while_true_rate: None,
        })
    }

    pub fn rule(&self, id: u8) -> Option<&RuleScore> {
        self.rules.get(id as usize - 1)
    }

    pub fn score(&self, id: u8) -> u32 {
        self.rule(id).map_or(0, |r| r.score)
    }

    pub fn is_available(&self, id: u8) -> bool {
        self.rule(id).is_some_and(|r| r.available)
    }
}

/// Rule 1 score from the lexicon points: `round(rate / 20)` with halves
/// rounded up, computed in integers so 20% is exactly 1.
pub fn s1_from_points(points: u32, total: u32) -> u32 {
    if total == 0 {
        return 0;
    }
    let (p, t) = (points as u64, total as u64);
    ((10 * p + t) / (2 * t)).min(LADDER_MAX as u64) as u32
}

/// Rule 1 score from a percentage, for callers without the raw points.
pub fn s1_from_rate(rate: f64) -> u32 {
    if rate.is_nan() || rate <= 0.0 {
        return 0;
    }
    ((rate / 20.0 + 0.5 + 1e-9).floor() as u32).min(LADDER_MAX)
}

/// Evaluate all rules for one sample.
pub fn evaluate(
    features: &FeatureSet,
    source: Option<&SourceEvidence>,
    config: &ScoringConfig,
) -> Result<RuleScores, ScoringError> {
    let w = &config.weights;
    let flag = |b: bool, i: usize| Some(if b { w[i] } else { 0 });
    let s1 = if features.lexicon_total > 0 {
        s1_from_points(features.lexicon_points, features.lexicon_total)
    } else {
        s1_from_rate(features.lexicon_rate)
    };
    let scores = [
        Some(s1),
        flag(features.has_user_agents, 1),
        flag(!features.hardcoded_ips.is_empty(), 2),
        flag(features.has_ip_blacklist, 3),
        flag(features.has_history_tampering, 4),
        flag(!features.network_file_refs.is_empty(), 5),
        flag(!features.proc_file_refs.is_empty(), 6),
        flag(!features.root_file_refs.is_empty(), 7),
        flag(features.has_auto_install, 8),
        source.map(|s| s.s10 as u32),
        source.map(|s| s.s11 as u32),
        source.map(|s| if s.has_system_calls { w[11] } else { 0 }),
    ];
    let mut out = RuleScores::from_parts(scores, config)?;
    out.lexicon_rate = features.lexicon_rate;
    out.suspicious_line_rate = source.map(|s| s.suspicious_line_rate);
    out.while_true_rate = source.map(|s| s.while_true_rate);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub percent: f64,
}

impl Bucket {
    /// "0-0.1" style label.
    pub fn label(&self) -> String {
        format!("{}-{}", trim_float(self.lower), trim_float(self.upper))
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{:.2}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.into()
    }
}

/// Index of the left-closed bucket holding `gds`; the last bucket is closed.
pub fn bucket_index(gds: f64, width: f64) -> usize {
    let n = (1.0 / width).round() as usize;
    let idx = (gds / width + 1e-9).floor();
    if idx <= 0.0 {
        0
    } else {
        (idx as usize).min(n - 1)
    }
}

/// Histogram over [0, 1] in buckets of `width`.
pub fn bucket_scores(scores: &[f64], width: f64) -> Vec<Bucket> {
    let n = (1.0 / width).round().max(1.0) as usize;
    let mut counts = vec![0usize; n];
    for &g in scores {
        counts[bucket_index(g, width)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bucket {
            lower: i as f64 * width,
            upper: ((i + 1) as f64 * width).min(1.0),
            count,
            percent: if scores.is_empty() { 0.0 } else { 100.0 * count as f64 / scores.len() as f64 },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulePositives {
    pub id: u8,
    pub name: String,
    /// Percentage of samples with the rule available and S > 0. `None` when
    /// no sample could evaluate the rule.
    pub positive_pct: Option<f64>,
    /// For rules 1, 10 and 11: percentage whose measured rate exceeds the
    /// tabulated cut (50%, 2%, 20%).
    pub rate_cut: Option<f64>,
    pub rate_cut_pct: Option<f64>,
}

/// Rate cut tabulated next to the laddered rules.
pub fn rate_cut(id: u8) -> Option<f64> {
    match id {
        1 => Some(50.0),
        10 => Some(2.0),
        11 => Some(20.0),
        _ => None,
    }
}

fn measured_rate(s: &RuleScores, id: u8) -> Option<f64> {
    match id {
        1 => Some(s.lexicon_rate),
        10 => s.suspicious_line_rate,
        11 => s.while_true_rate,
        _ => None,
    }
}

/// Per-rule share of positives over a corpus.
pub fn rule_positive_ratios<'a, I>(corpus: I) -> Vec<RulePositives>
where
    I: IntoIterator<Item = &'a RuleScores>,
{
    let all: Vec<&RuleScores> = corpus.into_iter().collect();
    if all.is_empty() {
        return Vec::new();
    }
    (1..=RULE_COUNT as u8)
        .map(|id| {
            let avail: Vec<&&RuleScores> = all.iter().filter(|s| s.is_available(id)).collect();
            let pct = |n: usize| 100.0 * n as f64 / avail.len() as f64;
            let positive_pct = (!avail.is_empty()).then(|| pct(avail.iter().filter(|s| s.score(id) > 0).count()));
            let cut = rate_cut(id);
            let rate_cut_pct = cut
                .filter(|_| !avail.is_empty())
                .map(|c| pct(avail.iter().filter(|s| measured_rate(s, id).is_some_and(|r| r > c)).count()));
            RulePositives {
                id,
                name: RULE_NAMES[id as usize - 1].to_string(),
                positive_pct,
                rate_cut: cut,
                rate_cut_pct,
            }
        })
        .collect()
}
