use std::fs;
use std::path::{Path, PathBuf};

use ddtriage_core::pipeline::{analyze_sample, Companions, SampleAnalysis};
use ddtriage_core::store::analysis_json;
use ddtriage_core::{Lexicon, ScoringConfig, UnavailablePolicy};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn analyze(name: &str, with_companions: bool, config: &ScoringConfig) -> SampleAnalysis {
    let raw = fs::read(data(name)).unwrap();
    let source = with_companions.then(|| fs::read_to_string(fixture(&format!("{name}.dec.c"))).unwrap());
    let asm = with_companions.then(|| fs::read(data(&format!("{name}.asm"))).unwrap());
    let companions = Companions { source: source.as_deref(), disassembly: asm.as_deref() };
    analyze_sample(&raw, companions, &Lexicon::builtin(), config).unwrap()
}

fn scores(a: &SampleAnalysis) -> Vec<u32> {
    a.rule_scores.rules.iter().map(|r| r.score).collect()
}

/// Golden documents are regenerated with `UPDATE_GOLDEN=1`.
fn check_golden(name: &str, a: &SampleAnalysis) {
    let path = data(&format!("golden/{name}.json"));
    let doc = analysis_json(a).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &doc).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc, want, "{name} drifted from its golden document");
}

#[test]
fn gafgyt_like_with_companions() {
    let a = analyze("gafgyt_like", true, &ScoringConfig::default());
    assert_eq!(a.profile.arch, "x86");
    assert!(!a.profile.is_static);
    assert!(!a.profile.is_stripped);

    // 34 of 105 lexicon points: round(5 * 34 / 105) = 2
    assert_eq!(a.features.lexicon_points, 34);
    assert_eq!(a.features.hardcoded_ips, ["185.62.190.7"]);
    assert!(a.features.has_user_agents);
    assert!(a.features.has_history_tampering);
    assert!(a.features.has_auto_install);
    assert_eq!(a.features.ip_mask_count, 0);

    let src = a.source.as_ref().unwrap();
    assert_eq!(src.total_lines, 64);
    assert_eq!(src.while_true_lines, 17);
    assert_eq!(src.suspicious_lines, 5);
    assert_eq!(src.system_call_sites.len(), 2);
    assert!(!src.degraded);

    // 5/64 = 7.8% suspicious lines, 17/64 = 26.6% while-true lines
    assert_eq!(scores(&a), [2, 5, 1, 0, 1, 1, 1, 1, 5, 5, 3, 1]);
    assert_eq!(a.rule_scores.points, 26);
    assert_eq!(a.rule_scores.max_points, 33);
    assert_eq!(a.gds, 26.0 / 33.0);
    assert!(a.digests.binary.is_some() && a.digests.disassembly.is_some());
    check_golden("gafgyt_like", &a);
}

#[test]
fn gafgyt_like_binary_only() {
    let a = analyze("gafgyt_like", false, &ScoringConfig::default());
    assert!(a.source.is_none());
    assert_eq!(a.rule_scores.points, 17);
    assert_eq!(a.rule_scores.max_points, 22);
    let zero = analyze("gafgyt_like", false, &ScoringConfig::default().with_policy(UnavailablePolicy::IncludeAsZero));
    assert_eq!(zero.rule_scores.max_points, 33);
    assert_eq!(zero.gds, 17.0 / 33.0);
    assert!(zero.gds < a.gds);
}

#[test]
fn mirai_like_static_stripped() {
    let a = analyze("mirai_like", false, &ScoringConfig::default());
    assert!(a.profile.is_static);
    assert!(a.profile.is_stripped);
    assert_eq!(a.features.ip_mask_count, 43);
    assert!(a.features.has_ip_blacklist);
    assert_eq!(a.features.hardcoded_ips, ["8.8.8.8"]);
    assert!(!a.features.has_user_agents);
    // 26 of 105 lexicon points: round(5 * 26 / 105) = 1
    assert_eq!(a.features.lexicon_points, 26);
    assert_eq!(scores(&a), [1, 0, 1, 2, 0, 0, 1, 1, 0, 0, 0, 0]);
    assert_eq!(a.rule_scores.points, 6);
    assert_eq!(a.rule_scores.max_points, 22);
    assert_eq!(a.gds, 6.0 / 22.0);
    check_golden("mirai_like", &a);
}

#[test]
fn benign_tool_scores_zero() {
    let a = analyze("benign_tool", false, &ScoringConfig::default());
    assert!(a.profile.is_stripped);
    assert!(!a.profile.is_static);
    assert_eq!(a.rule_scores.points, 0);
    assert_eq!(a.gds, 0.0);
    check_golden("benign_tool", &a);
}

#[test]
fn fixture_digests_match_reference() {
    for name in ["gafgyt_like", "mirai_like", "benign_tool", "gafgyt_like.asm"] {
        let raw = fs::read(data(name)).unwrap();
        let ours = ddtriage_core::ctph::digest(&raw).unwrap().to_string();
        let reference = ssdeep::hash_buf(&raw).unwrap().to_string();
        assert_eq!(ours, reference, "{name}");
    }
}

#[test]
fn analysis_is_deterministic() {
    let cfg = ScoringConfig::default();
    let a = analyze("gafgyt_like", true, &cfg);
    let b = analyze("gafgyt_like", true, &cfg);
    assert_eq!(analysis_json(&a).unwrap(), analysis_json(&b).unwrap());
}
