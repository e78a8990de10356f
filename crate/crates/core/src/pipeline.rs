//! One sample end to end: parse, extract, detect, score, digest.

use serde::{Deserialize, Serialize};

use crate::ctph::{self, ChannelDigests};
use crate::elf::{self, BinaryProfile, ParseIssue};
use crate::features::{self, FeatureSet, Lexicon};
use crate::scoring::{self, RuleScores, ScoringConfig, ScoringError, SourceEvidence};
use crate::source::{self, CondensedSource};
use crate::strings::{self, StringInventory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringCounts {
    pub extracted: usize,
    /// Strings that also pass the lexical filter.
    pub lexical: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAnalysis {
    pub profile: BinaryProfile,
    pub parse_issues: Vec<ParseIssue>,
    pub string_counts: StringCounts,
    pub features: FeatureSet,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<CondensedSource>,
    pub rule_scores: RuleScores,
    pub gds: f64,
    pub digests: ChannelDigests,
    #[serde(skip)]
    pub inventory: StringInventory,
}

/// Companion inputs produced by external tools.
#[derive(Debug, Clone, Copy, Default)]
pub struct Companions<'a> {
    /// Decompiled C source.
    pub source: Option<&'a str>,
    /// Disassembly listing.
    pub disassembly: Option<&'a [u8]>,
}

pub fn analyze_sample(
    raw: &[u8],
    companions: Companions<'_>,
    lexicon: &Lexicon,
    config: &ScoringConfig,
) -> Result<SampleAnalysis, ScoringError> {
    let (profile, sections, parse_issues) = match elf::parse_elf(raw) {
        Ok(p) => (p.profile, p.sections, p.issues),
        Err(_) => (BinaryProfile::unparsed(raw), Vec::new(), Vec::new()),
    };
    let inventory = strings::extract_strings(raw, &sections, strings::DEFAULT_MIN_LEN);
    let string_counts = StringCounts {
        extracted: inventory.total_count,
        lexical: strings::lexical_filter(&inventory, strings::DEFAULT_MIN_ALPHA_RUN).total_count,
    };
    let features = features::detect_features(&inventory, lexicon, &config.detectors);
    let condensed = companions.source.map(|src| source::condense(src, lexicon));
    let evidence = condensed.as_ref().and_then(|c| SourceEvidence::from_condensed(c, lexicon));
    let rule_scores = scoring::evaluate(&features, evidence.as_ref(), config)?;
    let digests = ChannelDigests {
        binary: ctph::digest(raw).ok(),
        disassembly: companions.disassembly.and_then(|d| ctph::digest(d).ok()),
    };
    Ok(SampleAnalysis {
        profile,
        parse_issues,
        string_counts,
        features,
        source: condensed,
        gds: rule_scores.gds,
        rule_scores,
        digests,
        inventory,
    })
}
