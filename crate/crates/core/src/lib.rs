//! Static triage of ELF binaries for DDoS capability: string and source
//! heuristics, weighted scoring, fuzzy-hash similarity and a flat-file corpus.

pub mod ctph;
pub mod elf;
pub mod features;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod source;
pub mod store;
pub mod strings;
pub mod vt;

pub use ctph::{
    Channel, ChannelDigests, CtphDigest, CtphError, DigestEntry, KnownMatch, KnownSample, SimilarityRecord,
    DEFAULT_FLAG_THRESHOLD, DEFAULT_RECORD_THRESHOLD,
};
pub use elf::{BinaryProfile, ElfError, ParsedElf};
pub use features::{DetectorThresholds, FeatureSet, Lexicon, LexiconError};
pub use pipeline::{analyze_sample, Companions, SampleAnalysis, StringCounts};
pub use report::{build_report, Report, ReportFormat, ReportInput};
pub use scoring::{ConfigError, RuleScores, ScoringConfig, ScoringError, UnavailablePolicy, DEFAULT_DETECT_GDS};
pub use source::{CondensedSource, FunctionAlerts};
pub use store::{CorpusStore, SampleRecord, StoreError};
pub use strings::StringInventory;
pub use vt::{Family, FamilyClassifier, VendorVerdicts, VtClient, VtError};
