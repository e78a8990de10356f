//! Printable-string extraction, attributed to ELF sections.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::elf::SectionEntry;

/// Section label used when a string does not fall inside any section.
pub const RAW_SECTION: &str = "<raw>";
pub const DEFAULT_MIN_LEN: usize = 3;
pub const DEFAULT_MIN_ALPHA_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedString {
    pub text: String,
    pub offset: u64,
    pub section: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringInventory {
    pub by_section: BTreeMap<String, Vec<ExtractedString>>,
    pub total_count: usize,
}

impl StringInventory {
    /// Build an inventory from bare texts, all filed under [`RAW_SECTION`].
    /// Handy when strings come from somewhere other than a binary.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let list: Vec<ExtractedString> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| ExtractedString { text: t.into(), offset: i as u64, section: RAW_SECTION.into() })
            .collect();
        let mut by_section = BTreeMap::new();
        let total_count = list.len();
        if !list.is_empty() {
            by_section.insert(RAW_SECTION.to_string(), list);
        }
        StringInventory { by_section, total_count }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExtractedString> {
        self.by_section.values().flatten()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.iter().map(|s| s.text.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.total_count == 0
    }

    /// `{section: [strings]}` view written next to each sample.
    pub fn to_section_map(&self) -> BTreeMap<String, Vec<String>> {
        self.by_section.iter().map(|(k, v)| (k.clone(), v.iter().map(|s| s.text.clone()).collect())).collect()
    }

    fn push(&mut self, s: ExtractedString) {
        self.by_section.entry(s.section.clone()).or_default().push(s);
        self.total_count += 1;
    }
}

#[inline]
pub fn is_printable(b: u8) -> bool {
    b == b'\t' || (0x20..=0x7e).contains(&b)
}

/// Every maximal printable run of at least `min_len` bytes, in file order.
///
/// With sections, a string is filed under the first file-resident section
/// whose range contains its starting offset; otherwise under `"<raw>"`.
pub fn extract_strings(raw: &[u8], sections: &[SectionEntry], min_len: usize) -> StringInventory {
    let min_len = min_len.max(1);
    let mut ranges: Vec<(u64, u64, &str)> = sections
        .iter()
        .filter(|s| s.is_file_resident())
        .map(|s| (s.file_offset, s.file_offset.saturating_add(s.file_size), s.name.as_str()))
        .collect();
    ranges.sort_by_key(|r| r.0);

    let locate = |off: u64| -> String {
        // the last range starting at or before `off`, then scan back for overlaps
        let idx = ranges.partition_point(|r| r.0 <= off);
        ranges[..idx]
            .iter()
            .rev()
            .find(|r| off < r.1)
            .map(|r| if r.2.is_empty() { RAW_SECTION.to_string() } else { r.2.to_string() })
            .unwrap_or_else(|| RAW_SECTION.to_string())
    };

    let mut inv = StringInventory::default();
    let mut start = None;
    for (i, &b) in raw.iter().chain(std::iter::once(&0u8)).enumerate() {
        let printable = i < raw.len() && is_printable(b);
        match (printable, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    // printable bytes are ASCII, so this never fails
                    let text = String::from_utf8_lossy(&raw[s..i]).into_owned();
                    inv.push(ExtractedString { text, offset: s as u64, section: locate(s as u64) });
                }
                start = None;
            }
            _ => {}
        }
    }
    inv
}

pub fn longest_alpha_run(s: &str) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for b in s.bytes() {
        if b.is_ascii_alphabetic() {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Keep strings with at least `min_alpha_run` consecutive ASCII letters.
/// Used for frequency reports only; detectors see the unfiltered inventory.
pub fn lexical_filter(inventory: &StringInventory, min_alpha_run: usize) -> StringInventory {
    let mut out = StringInventory::default();
    for s in inventory.iter() {
        if longest_alpha_run(&s.text) >= min_alpha_run {
            out.push(s.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringFrequency {
    pub text: String,
    /// Total occurrences across the corpus.
    pub frequency: usize,
    /// Number of samples containing the string.
    pub binary_count: usize,
}

/// Corpus-wide string tally, most frequent first, ties broken by text.
pub fn corpus_frequencies<'a, I>(inventories: I) -> Vec<StringFrequency>
where
    I: IntoIterator<Item = &'a StringInventory>,
{
    let mut tally: HashMap<&'a str, (usize, usize)> = HashMap::new();
    for inv in inventories {
        let mut seen = HashSet::new();
        for t in inv.texts() {
            let e = tally.entry(t).or_default();
            e.0 += 1;
            if seen.insert(t) {
                e.1 += 1;
            }
        }
    }
    let mut rows: Vec<StringFrequency> = tally
        .into_iter()
        .map(|(t, (f, b))| StringFrequency { text: t.to_string(), frequency: f, binary_count: b })
        .collect();
    rows.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.text.cmp(&b.text)));
    rows
}
