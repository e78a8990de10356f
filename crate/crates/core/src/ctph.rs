//! Context-triggered piecewise hashing, digest-compatible with ssdeep 2.14.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ROLLING_WINDOW: usize = 7;
pub const MIN_BLOCK_SIZE: u64 = 3;
pub const SPAMSUM_LENGTH: usize = 64;
const NUM_BLOCKHASHES: usize = 31;
const HASH_INIT: u8 = 0x27;
const B64: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

pub const DEFAULT_RECORD_THRESHOLD: u8 = 20;
pub const DEFAULT_FLAG_THRESHOLD: u8 = 70;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CtphError {
    #[error("input of {0} bytes is shorter than the rolling window")]
    InputTooSmall(usize),
    #[error("digest is degenerate and cannot be compared")]
    IncomparableDigest,
    #[error("invalid digest text: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtphDigest {
    pub block_size: u64,
    pub sig1: String,
    pub sig2: String,
}

impl CtphDigest {
    /// Both signatures empty: nothing to compare against.
    pub fn is_degenerate(&self) -> bool {
        self.sig1.is_empty() && self.sig2.is_empty()
    }
}

impl fmt::Display for CtphDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.block_size, self.sig1, self.sig2)
    }
}

fn valid_block_size(bs: u64) -> bool {
    bs >= MIN_BLOCK_SIZE && bs.is_multiple_of(MIN_BLOCK_SIZE) && (bs / MIN_BLOCK_SIZE).is_power_of_two()
}

impl FromStr for CtphDigest {
    type Err = CtphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim_end_matches(['\r', '\n']).splitn(3, ':');
        let (Some(bs), Some(sig1), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CtphError::Parse(s.to_string()));
        };
        // ssdeep output may carry a trailing `,"filename"`
        let sig2 = rest.split_once(',').map_or(rest, |(a, _)| a);
        let block_size: u64 = bs.parse().map_err(|_| CtphError::Parse(s.to_string()))?;
        let alphabet_ok = |sig: &str| sig.bytes().all(|b| B64.contains(&b));
        if !valid_block_size(block_size)
            || sig1.len() > SPAMSUM_LENGTH
            || sig2.len() > SPAMSUM_LENGTH
            || !alphabet_ok(sig1)
            || !alphabet_ok(sig2)
        {
            return Err(CtphError::Parse(s.to_string()));
        }
        Ok(CtphDigest { block_size, sig1: sig1.to_string(), sig2: sig2.to_string() })
    }
}

impl Serialize for CtphDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CtphDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Default, Clone)]
struct Roll {
    window: [u8; ROLLING_WINDOW],
    h1: u32,
    h2: u32,
    h3: u32,
    n: usize,
}

impl Roll {
    #[inline]
    fn update(&mut self, c: u8) {
        let c32 = c as u32;
        self.h2 = self.h2.wrapping_sub(self.h1).wrapping_add((ROLLING_WINDOW as u32).wrapping_mul(c32));
        self.h1 = self.h1.wrapping_add(c32).wrapping_sub(self.window[self.n] as u32);
        self.window[self.n] = c;
        self.n = (self.n + 1) % ROLLING_WINDOW;
        self.h3 = (self.h3 << 5) ^ c32;
    }

    #[inline]
    fn sum(&self) -> u32 {
        self.h1.wrapping_add(self.h2).wrapping_add(self.h3)
    }
}

/// Low six bits of the FNV-1 step `h * 0x01000193 ^ c`.
#[inline]
fn sum_hash(c: u8, h: u8) -> u8 {
    (h.wrapping_mul(0x93) ^ c) & 0x3f
}

#[derive(Clone, Copy)]
struct BlockHash {
    digest: [u8; SPAMSUM_LENGTH],
    dindex: usize,
    halfdigest: u8,
    h: u8,
    halfh: u8,
}

impl BlockHash {
    fn new() -> Self {
        BlockHash { digest: [0; SPAMSUM_LENGTH], dindex: 0, halfdigest: 0, h: HASH_INIT, halfh: HASH_INIT }
    }
}

/// Streaming digest state. All candidate block sizes are tracked in one pass.
pub struct CtphHasher {
    bh: Vec<BlockHash>,
    bhstart: usize,
    bhend: usize,
    total_size: u64,
    roll: Roll,
}

impl Default for CtphHasher {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn block_size_at(i: usize) -> u64 {
    MIN_BLOCK_SIZE << i
}

impl CtphHasher {
    pub fn new() -> Self {
        let mut bh = Vec::with_capacity(NUM_BLOCKHASHES);
        bh.push(BlockHash::new());
        CtphHasher { bh, bhstart: 0, bhend: 1, total_size: 0, roll: Roll::default() }
    }

    fn try_fork(&mut self) {
        if self.bhend >= NUM_BLOCKHASHES {
            return;
        }
        let prev = self.bh[self.bhend - 1];
        let mut next = BlockHash::new();
        next.h = prev.h;
        next.halfh = prev.halfh;
        self.bh.push(next);
        self.bhend += 1;
    }

    fn try_reduce(&mut self) {
        if self.bhend - self.bhstart < 2 {
            return;
        }
        if block_size_at(self.bhstart) * SPAMSUM_LENGTH as u64 >= self.total_size {
            return;
        }
        if self.bh[self.bhstart + 1].dindex < SPAMSUM_LENGTH / 2 {
            return;
        }
        self.bhstart += 1;
    }

    #[inline]
    fn step(&mut self, c: u8) {
        self.roll.update(c);
        let h = self.roll.sum().wrapping_add(1);
        for b in &mut self.bh[self.bhstart..self.bhend] {
            b.h = sum_hash(c, b.h);
            b.halfh = sum_hash(c, b.halfh);
        }
        if h == 0 || !(h as u64).is_multiple_of(block_size_at(self.bhstart)) {
            return;
        }
        let mut h = (h / MIN_BLOCK_SIZE as u32) >> self.bhstart;
        let mut i = self.bhstart;
        while i < self.bhend {
            if self.bh[i].dindex == 0 {
                self.try_fork();
            }
            let b = &mut self.bh[i];
            b.digest[b.dindex] = B64[b.h as usize];
            b.halfdigest = B64[b.halfh as usize];
            if b.dindex < SPAMSUM_LENGTH - 1 {
                b.dindex += 1;
                b.digest[b.dindex] = 0;
                b.h = HASH_INIT;
                if b.dindex < SPAMSUM_LENGTH / 2 {
                    b.halfh = HASH_INIT;
                    b.halfdigest = 0;
                }
            } else {
                self.try_reduce();
            }
            if h & 1 != 0 {
                break;
            }
            h >>= 1;
            i += 1;
        }
    }

    pub fn update(&mut self, data: &[u8]) {
        self.total_size = self.total_size.saturating_add(data.len() as u64);
        for &c in data {
            self.step(c);
        }
    }

    pub fn finalize(&self) -> CtphDigest {
        let mut bi = self.bhstart;
        while block_size_at(bi) * (SPAMSUM_LENGTH as u64) < self.total_size {
            bi += 1;
            if bi >= NUM_BLOCKHASHES {
                bi = NUM_BLOCKHASHES - 1;
                break;
            }
        }
        while bi >= self.bhend {
            bi -= 1;
        }
        while bi > self.bhstart && self.bh[bi].dindex < SPAMSUM_LENGTH / 2 {
            bi -= 1;
        }
        let rh = self.roll.sum();

        let b = &self.bh[bi];
        let mut sig1: Vec<u8> = b.digest[..b.dindex].to_vec();
        if rh != 0 {
            sig1.push(B64[b.h as usize]);
        } else if b.digest[b.dindex] != 0 {
            sig1.push(b.digest[b.dindex]);
        }

        let mut sig2 = Vec::new();
        if bi < self.bhend - 1 {
            let n = &self.bh[bi + 1];
            let len = n.dindex.min(SPAMSUM_LENGTH / 2 - 1);
            sig2.extend_from_slice(&n.digest[..len]);
            if rh != 0 {
                sig2.push(B64[n.halfh as usize]);
            } else if n.halfdigest != 0 {
                sig2.push(n.halfdigest);
            }
        } else if rh != 0 {
            // the next level never triggered, so its state equals this one's
            sig2.push(B64[b.h as usize]);
        }

        CtphDigest {
            block_size: block_size_at(bi),
            sig1: String::from_utf8(sig1).expect("alphabet is ASCII"),
            sig2: String::from_utf8(sig2).expect("alphabet is ASCII"),
        }
    }
}

/// Digest of `data`. Inputs shorter than the rolling window are rejected.
pub fn digest(data: &[u8]) -> Result<CtphDigest, CtphError> {
    if data.len() < ROLLING_WINDOW {
        return Err(CtphError::InputTooSmall(data.len()));
    }
    Ok(digest_unchecked(data))
}

/// Digest of `data` with no size check; short inputs give degenerate digests.
pub fn digest_unchecked(data: &[u8]) -> CtphDigest {
    let mut h = CtphHasher::new();
    h.update(data);
    h.finalize()
}

/// Collapse runs of more than three identical characters to three.
fn eliminate_sequences(s: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len());
    for (i, &c) in s.iter().enumerate() {
        if i < 3 || c != s[i - 1] || c != s[i - 2] || c != s[i - 3] {
            out.push(c);
        }
    }
    out
}

fn has_common_substring(a: &[u8], b: &[u8]) -> bool {
    if a.len() < ROLLING_WINDOW || b.len() < ROLLING_WINDOW {
        return false;
    }
    a.windows(ROLLING_WINDOW).any(|w| b.windows(ROLLING_WINDOW).any(|v| v == w))
}

/// Edit distance with unit insert/delete and a replacement cost of two.
fn edit_distance(a: &[u8], b: &[u8]) -> u32 {
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    let mut cur = vec![0u32; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for (j, &cb) in b.iter().enumerate() {
            let replace = prev[j] + if ca == cb { 0 } else { 2 };
            cur[j + 1] = replace.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn score_strings(a: &[u8], b: &[u8], block_size: u64) -> u32 {
    if a.len() > SPAMSUM_LENGTH || b.len() > SPAMSUM_LENGTH || !has_common_substring(a, b) {
        return 0;
    }
    let d = edit_distance(a, b) as u64;
    let mut score = d * SPAMSUM_LENGTH as u64 / (a.len() + b.len()) as u64;
    score = 100 * score / SPAMSUM_LENGTH as u64;
    if score >= 100 {
        return 0;
    }
    let score = 100 - score;
    let window = ROLLING_WINDOW as u64;
    if block_size >= (99 + window) / window * MIN_BLOCK_SIZE {
        return score as u32;
    }
    let cap = block_size / MIN_BLOCK_SIZE * a.len().min(b.len()) as u64;
    score.min(cap) as u32
}

/// Similarity score 0..=100 of two digests.
pub fn compare(a: &CtphDigest, b: &CtphDigest) -> Result<u8, CtphError> {
    if a.is_degenerate() || b.is_degenerate() {
        return Err(CtphError::IncomparableDigest);
    }
    Ok(compare_raw(a, b))
}

fn compare_raw(a: &CtphDigest, b: &CtphDigest) -> u8 {
    let (bs1, bs2) = (a.block_size, b.block_size);
    if bs1 != bs2 && bs1.checked_mul(2) != Some(bs2) && bs2.checked_mul(2) != Some(bs1) {
        return 0;
    }
    let s1b1 = eliminate_sequences(a.sig1.as_bytes());
    let s1b2 = eliminate_sequences(a.sig2.as_bytes());
    let s2b1 = eliminate_sequences(b.sig1.as_bytes());
    let s2b2 = eliminate_sequences(b.sig2.as_bytes());
    let score = if bs1 == bs2 {
        if s1b1 == s2b1 && s1b2 == s2b2 {
            return 100;
        }
        score_strings(&s1b1, &s2b1, bs1).max(score_strings(&s1b2, &s2b2, bs1 * 2))
    } else if bs1 * 2 == bs2 {
        score_strings(&s2b1, &s1b2, bs2)
    } else {
        score_strings(&s1b1, &s2b2, bs1)
    };
    score as u8
}

/// Whether two block sizes are close enough to ever score above zero.
pub fn comparable_block_sizes(a: u64, b: u64) -> bool {
    a == b || a.checked_mul(2) == Some(b) || b.checked_mul(2) == Some(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Binary,
    Disassembly,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Binary, Channel::Disassembly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Binary => "binary",
            Channel::Disassembly => "disassembly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub id_a: String,
    pub id_b: String,
    pub channel: Channel,
    pub score: u8,
}

/// Per-channel digests of one sample.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDigests {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub binary: Option<CtphDigest>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub disassembly: Option<CtphDigest>,
}

impl ChannelDigests {
    pub fn get(&self, channel: Channel) -> Option<&CtphDigest> {
        match channel {
            Channel::Binary => self.binary.as_ref(),
            Channel::Disassembly => self.disassembly.as_ref(),
        }
    }

    /// Scores on each channel present on both sides.
    pub fn channel_scores(&self, other: &ChannelDigests) -> Vec<(Channel, u8)> {
        Channel::ALL
            .iter()
            .filter_map(|&ch| {
                let (a, b) = (self.get(ch)?, other.get(ch)?);
                compare(a, b).ok().map(|s| (ch, s))
            })
            .collect()
    }

    /// Best score over shared channels.
    pub fn best_score(&self, other: &ChannelDigests) -> Option<u8> {
        self.channel_scores(other).into_iter().map(|(_, s)| s).max()
    }
}

/// One corpus entry for pairwise comparison.
#[derive(Debug, Clone)]
pub struct DigestEntry {
    pub id: String,
    pub digests: ChannelDigests,
}

fn pairs_for_channel(corpus: &[DigestEntry], channel: Channel, threshold: u8) -> Vec<SimilarityRecord> {
    let mut buckets: BTreeMap<u64, Vec<(&str, &CtphDigest)>> = BTreeMap::new();
    for e in corpus {
        if let Some(d) = e.digests.get(channel).filter(|d| !d.is_degenerate()) {
            buckets.entry(d.block_size).or_default().push((e.id.as_str(), d));
        }
    }
    // each bucket meets itself and the bucket at twice its block size
    let mut jobs: Vec<(u64, u64)> = Vec::new();
    for &bs in buckets.keys() {
        jobs.push((bs, bs));
        if buckets.contains_key(&(bs * 2)) {
            jobs.push((bs, bs * 2));
        }
    }
    jobs.par_iter()
        .flat_map_iter(|&(x, y)| {
            let left = &buckets[&x];
            let right = &buckets[&y];
            let same = x == y;
            left.iter().enumerate().flat_map(move |(i, &(ia, da))| {
                let start = if same { i + 1 } else { 0 };
                right[start..].iter().filter_map(move |&(ib, db)| {
                    if ia == ib {
                        return None;
                    }
                    let score = compare_raw(da, db);
                    (score >= threshold).then(|| {
                        let (id_a, id_b) = if ia < ib { (ia, ib) } else { (ib, ia) };
                        SimilarityRecord { id_a: id_a.to_string(), id_b: id_b.to_string(), channel, score }
                    })
                })
            })
        })
        .collect()
}

/// Every unordered pair on every channel scoring at least `threshold`
/// (zero scores are never emitted), sorted by ids then channel.
pub fn all_pairs(corpus: &[DigestEntry], threshold: u8) -> Vec<SimilarityRecord> {
    let threshold = threshold.clamp(1, 100);
    let mut out: Vec<SimilarityRecord> =
        Channel::ALL.iter().flat_map(|&ch| pairs_for_channel(corpus, ch, threshold)).collect();
    out.sort();
    out.dedup();
    out
}

/// Known sample carrying a family label.
#[derive(Debug, Clone)]
pub struct KnownSample {
    pub id: String,
    pub family: String,
    pub digests: ChannelDigests,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownMatch {
    pub unknown_id: String,
    pub known_id: String,
    pub family: String,
    pub score: u8,
}

/// Known samples whose best-channel score against each unknown reaches
/// `flag_threshold`. Per unknown, results are sorted by score descending.
pub fn match_against_known(unknown: &[DigestEntry], known: &[KnownSample], flag_threshold: u8) -> Vec<KnownMatch> {
    let flag_threshold = flag_threshold.max(DEFAULT_FLAG_THRESHOLD);
    unknown
        .par_iter()
        .flat_map_iter(|u| {
            let mut hits: Vec<KnownMatch> = known
                .iter()
                .filter(|k| k.id != u.id)
                .filter_map(|k| {
                    let score = u.digests.best_score(&k.digests)?;
                    (score >= flag_threshold).then(|| KnownMatch {
                        unknown_id: u.id.clone(),
                        known_id: k.id.clone(),
                        family: k.family.clone(),
                        score,
                    })
                })
                .collect();
            hits.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.known_id.cmp(&b.known_id)));
            hits
        })
        .collect()
}

/// Slot for a second similarity scheme alongside CTPH.
pub trait SimilarityDigest {
    type Digest;
    type Error;

    fn name(&self) -> &'static str;
    fn digest(&self, data: &[u8]) -> Result<Self::Digest, Self::Error>;
    fn compare(&self, a: &Self::Digest, b: &Self::Digest) -> Result<u8, Self::Error>;
}

/// The CTPH scheme behind the [`SimilarityDigest`] interface.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ctph;

impl SimilarityDigest for Ctph {
    type Digest = CtphDigest;
    type Error = CtphError;

    fn name(&self) -> &'static str {
        "ssdeep"
    }

    fn digest(&self, data: &[u8]) -> Result<CtphDigest, CtphError> {
        digest(data)
    }

    fn compare(&self, a: &CtphDigest, b: &CtphDigest) -> Result<u8, CtphError> {
        compare(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn too_small() {
        assert_eq!(digest(b""), Err(CtphError::InputTooSmall(0)));
        assert_eq!(digest(b"abcdef"), Err(CtphError::InputTooSmall(6)));
        let d = digest_unchecked(b"");
        assert_eq!(d.to_string(), "3::");
        assert_eq!(compare(&d, &d), Err(CtphError::IncomparableDigest));
    }

    #[test]
    fn text_round_trip() {
        let d = digest(&(0..5000u32).map(|i| (i * 7 % 251) as u8).collect::<Vec<_>>()).unwrap();
        let back: CtphDigest = d.to_string().parse().unwrap();
        assert_eq!(back, d);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<CtphDigest>(&json).unwrap(), d);
        let with_name: CtphDigest = "3:AXGBicFlgVNhBGcL6wCrFQEv:AXGHsNhxLsr2C,\"file\"".parse().unwrap();
        assert_eq!(with_name.sig2, "AXGHsNhxLsr2C");
        assert!("5:abc:def".parse::<CtphDigest>().is_err());
        assert!("x:abc:def".parse::<CtphDigest>().is_err());
        assert!("3:ab!:def".parse::<CtphDigest>().is_err());
        assert!("3:abc".parse::<CtphDigest>().is_err());
    }

    #[test]
    fn edit_distance_costs() {
        assert_eq!(edit_distance(b"abc", b"abc"), 0);
        assert_eq!(edit_distance(b"abc", b"abd"), 2);
        assert_eq!(edit_distance(b"abc", b"ab"), 1);
        assert_eq!(edit_distance(b"", b"xyz"), 3);
    }

    #[test]
    fn sequences_collapse() {
        assert_eq!(eliminate_sequences(b"AAAAAB"), b"AAAB");
        assert_eq!(eliminate_sequences(b"AAA"), b"AAA");
    }

    #[test]
    fn far_block_sizes_score_zero() {
        let a: CtphDigest = "3:ABCDEFGHIJ:ABCDEFGHIJ".parse().unwrap();
        let b: CtphDigest = "12:ABCDEFGHIJ:ABCDEFGHIJ".parse().unwrap();
        assert_eq!(compare(&a, &b), Ok(0));
    }

    #[test]
    fn all_pairs_trivial() {
        let data: Vec<u8> = (0..20_000u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
        let d = digest(&data).unwrap();
        let one =
            [DigestEntry { id: "a".into(), digests: ChannelDigests { binary: Some(d.clone()), disassembly: None } }];
        assert!(all_pairs(&one, 20).is_empty());
        let two = [
            one[0].clone(),
            DigestEntry { id: "b".into(), digests: ChannelDigests { binary: Some(d), disassembly: None } },
        ];
        let recs = all_pairs(&two, 20);
        assert_eq!(
            recs,
            [SimilarityRecord { id_a: "a".into(), id_b: "b".into(), channel: Channel::Binary, score: 100 }]
        );
        assert!(match_against_known(&one, &[], 70).is_empty());
    }

    fn bytes(max: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(any::<u8>(), 7..max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reflexive(data in bytes(8192)) {
            let d = digest(&data).unwrap();
            prop_assert_eq!(compare(&d, &d).unwrap(), 100);
        }

        #[test]
        fn symmetric(a in bytes(6000), b in bytes(6000)) {
            let (da, db) = (digest(&a).unwrap(), digest(&b).unwrap());
            prop_assert_eq!(compare(&da, &db), compare(&db, &da));
        }

        #[test]
        fn block_size_shape(data in bytes(20000)) {
            let d = digest(&data).unwrap();
            prop_assert!(valid_block_size(d.block_size));
            prop_assert!(d.sig1.len() <= SPAMSUM_LENGTH);
            prop_assert!(d.sig2.len() <= SPAMSUM_LENGTH / 2);
            prop_assert_eq!(d.to_string().parse::<CtphDigest>().unwrap(), d);
        }

        #[test]
        fn streaming_matches_oneshot(data in bytes(10000), cut in any::<prop::sample::Index>()) {
            let i = cut.index(data.len());
            let mut h = CtphHasher::new();
            h.update(&data[..i]);
            h.update(&data[i..]);
            prop_assert_eq!(h.finalize(), digest(&data).unwrap());
        }
    }
}
