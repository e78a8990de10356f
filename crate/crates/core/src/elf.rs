//! ELF container parsing and sample classification.
//!
//! The parser is deliberately tolerant: honeypot captures are frequently
//! truncated or tampered with, so anything past the identification bytes
//! degrades the result instead of rejecting the file. Every table read is
//! bounds-checked against the input before allocation.

use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Digest, Sha256};
use thiserror::Error;

const ELF_MAGIC: &[u8; 4] = b"\x7fELF";
const EI_NIDENT: usize = 16;

const SHT_SYMTAB: u32 = 2;
const SHT_NOBITS: u32 = 8;
const PT_DYNAMIC: u32 = 2;
const PT_INTERP: u32 = 3;

const SHN_UNDEF: u16 = 0;
const SHN_LORESERVE: u16 = 0xff00;
const SHN_XINDEX: u16 = 0xffff;

/// Section names containing any of these substrings mark the sample as
/// carrying crypto material.
pub const DEFAULT_CRYPTO_MARKERS: &[&str] = &["crypto"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElfError {
    #[error("malformed binary: {0}")]
    MalformedBinary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Little,
    Big,
}

/// Attribute row for one sample, keyed by its checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryProfile {
    pub sha1: String,
    pub sha256: String,
    pub size: u64,
    /// 32 or 64; `None` only for files that are not ELF at all.
    pub bits: Option<u8>,
    pub arch: String,
    pub bin_type: String,
    pub endianness: Option<Endianness>,
    pub os_abi: String,
    pub is_static: bool,
    pub is_stripped: bool,
    pub has_crypto_sections: bool,
    /// Set when some header table could not be read in full.
    pub degraded: bool,
    /// Set when the identification bytes themselves were rejected.
    #[serde(default)]
    pub malformed: bool,
}

impl BinaryProfile {
    /// Profile for input that failed ELF identification. Only the checksums
    /// and the size are meaningful.
    pub fn unparsed(raw: &[u8]) -> Self {
        let (sha1, sha256) = checksums(raw);
        BinaryProfile {
            sha1,
            sha256,
            size: raw.len() as u64,
            bits: None,
            arch: "unknown".to_string(),
            bin_type: "unknown".to_string(),
            endianness: None,
            os_abi: "unknown".to_string(),
            is_static: true,
            is_stripped: true,
            has_crypto_sections: false,
            degraded: true,
            malformed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionEntry {
    pub name: String,
    pub file_offset: u64,
    pub file_size: u64,
    pub kind: String,
    #[serde(skip)]
    pub sh_type: u32,
    pub flags: u64,
}

impl SectionEntry {
    /// Whether the section occupies bytes in the file.
    pub fn is_file_resident(&self) -> bool {
        self.sh_type != SHT_NOBITS && self.sh_type != 0 && self.file_size > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub p_type: u32,
    pub file_offset: u64,
    pub file_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseIssue {
    /// The program header table lies (partly) outside the file.
    TruncatedProgramHeaders,
    /// The section header table lies (partly) outside the file.
    TruncatedTables,
    /// A section claims bytes past the end of the file; its size was clamped.
    SectionOutOfBounds,
    /// The section-name string table index was unusable.
    BadStringTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedElf {
    pub profile: BinaryProfile,
    pub sections: Vec<SectionEntry>,
    pub segments: Vec<SegmentEntry>,
    pub issues: Vec<ParseIssue>,
}

/// Lowercase hex SHA-1 and SHA-256 of `raw`.
pub fn checksums(raw: &[u8]) -> (String, String) {
    (hex::encode(Sha1::digest(raw)), hex::encode(Sha256::digest(raw)))
}

#[derive(Clone, Copy)]
struct Reader<'a> {
    data: &'a [u8],
    big: bool,
}

impl<'a> Reader<'a> {
    fn bytes(&self, off: u64, len: usize) -> Option<&'a [u8]> {
        let start = usize::try_from(off).ok()?;
        let end = start.checked_add(len)?;
        self.data.get(start..end)
    }

    fn u16(&self, off: u64) -> Option<u16> {
        let b: [u8; 2] = self.bytes(off, 2)?.try_into().ok()?;
        Some(if self.big { u16::from_be_bytes(b) } else { u16::from_le_bytes(b) })
    }

    fn u32(&self, off: u64) -> Option<u32> {
        let b: [u8; 4] = self.bytes(off, 4)?.try_into().ok()?;
        Some(if self.big { u32::from_be_bytes(b) } else { u32::from_le_bytes(b) })
    }

    fn u64(&self, off: u64) -> Option<u64> {
        let b: [u8; 8] = self.bytes(off, 8)?.try_into().ok()?;
        Some(if self.big { u64::from_be_bytes(b) } else { u64::from_le_bytes(b) })
    }

    /// Address-sized word: 4 bytes for ELF32, 8 for ELF64.
    fn word(&self, off: u64, is64: bool) -> Option<u64> {
        if is64 {
            self.u64(off)
        } else {
            self.u32(off).map(u64::from)
        }
    }
}

struct Header {
    is64: bool,
    e_type: u16,
    e_machine: u16,
    phoff: u64,
    shoff: u64,
    phentsize: u16,
    phnum: u16,
    shentsize: u16,
    shnum: u16,
    shstrndx: u16,
}

fn read_header(r: Reader<'_>, is64: bool) -> Option<Header> {
    let (phoff_at, shoff_at, rest_at) = if is64 { (32, 40, 48) } else { (28, 32, 36) };
    Some(Header {
        is64,
        e_type: r.u16(16)?,
        e_machine: r.u16(18)?,
        phoff: r.word(phoff_at, is64)?,
        shoff: r.word(shoff_at, is64)?,
        // rest_at: e_flags(4) e_ehsize(2) e_phentsize(2) e_phnum(2) e_shentsize(2) e_shnum(2) e_shstrndx(2)
        phentsize: r.u16(rest_at + 6)?,
        phnum: r.u16(rest_at + 8)?,
        shentsize: r.u16(rest_at + 10)?,
        shnum: r.u16(rest_at + 12)?,
        shstrndx: r.u16(rest_at + 14)?,
    })
}

/// Parse `raw` as an ELF file and classify it.
///
/// Only a bad identification (magic, class, data encoding) or a header shorter
/// than the class requires is an error. Unreadable program or section tables
/// are reported through [`ParsedElf::issues`] and the profile's `degraded`
/// flag.
pub fn parse_elf(raw: &[u8]) -> Result<ParsedElf, ElfError> {
    parse_elf_with_markers(raw, DEFAULT_CRYPTO_MARKERS)
}

pub fn parse_elf_with_markers(raw: &[u8], crypto_markers: &[&str]) -> Result<ParsedElf, ElfError> {
    if raw.len() < EI_NIDENT || &raw[..4] != ELF_MAGIC {
        return Err(ElfError::MalformedBinary("missing ELF magic".into()));
    }
    let is64 = match raw[4] {
        1 => false,
        2 => true,
        c => return Err(ElfError::MalformedBinary(format!("invalid class byte {c}"))),
    };
    let big = match raw[5] {
        1 => false,
        2 => true,
        d => return Err(ElfError::MalformedBinary(format!("invalid data encoding byte {d}"))),
    };
    let reader = Reader { data: raw, big };
    let header = read_header(reader, is64).ok_or_else(|| ElfError::MalformedBinary("truncated ELF header".into()))?;

    let mut issues = Vec::new();
    let segments = read_segments(reader, &header, &mut issues);
    let sections = read_sections(reader, &header, &mut issues);

    let (sha1, sha256) = checksums(raw);
    let degraded = !issues.is_empty();
    let profile = BinaryProfile {
        sha1,
        sha256,
        size: raw.len() as u64,
        bits: Some(if is64 { 64 } else { 32 }),
        arch: arch_name(header.e_machine),
        bin_type: type_name(header.e_type),
        endianness: Some(if big { Endianness::Big } else { Endianness::Little }),
        os_abi: os_abi_name(raw[7]),
        is_static: classify_static(&segments),
        is_stripped: classify_stripped(&sections),
        has_crypto_sections: sections.iter().any(|s| {
            let lower = s.name.to_ascii_lowercase();
            crypto_markers.iter().any(|m| lower.contains(m))
        }),
        degraded,
        malformed: false,
    };
    Ok(ParsedElf { profile, sections, segments, issues })
}

/// Does the table `[off, off + count * entsize)` fit inside the file?
fn table_fits(len: usize, off: u64, count: u64, entsize: u64) -> bool {
    count.checked_mul(entsize).and_then(|total| off.checked_add(total)).is_some_and(|end| end <= len as u64)
}

fn read_segments(r: Reader<'_>, h: &Header, issues: &mut Vec<ParseIssue>) -> Vec<SegmentEntry> {
    let min_entsize = if h.is64 { 56 } else { 32 };
    if h.phnum == 0 {
        return Vec::new();
    }
    if (h.phentsize as usize) < min_entsize || !table_fits(r.data.len(), h.phoff, h.phnum as u64, h.phentsize as u64) {
        issues.push(ParseIssue::TruncatedProgramHeaders);
        return Vec::new();
    }
    (0..h.phnum as u64)
        .filter_map(|i| {
            let base = h.phoff + i * h.phentsize as u64;
            let p_type = r.u32(base)?;
            let (file_offset, file_size) = if h.is64 {
                (r.u64(base + 8)?, r.u64(base + 32)?)
            } else {
                (r.u32(base + 4)? as u64, r.u32(base + 16)? as u64)
            };
            Some(SegmentEntry { p_type, file_offset, file_size })
        })
        .collect()
}

struct RawSection {
    name_off: u32,
    sh_type: u32,
    flags: u64,
    offset: u64,
    size: u64,
    link: u32,
}

fn read_raw_section(r: Reader<'_>, is64: bool, base: u64) -> Option<RawSection> {
    if is64 {
        Some(RawSection {
            name_off: r.u32(base)?,
            sh_type: r.u32(base + 4)?,
            flags: r.u64(base + 8)?,
            offset: r.u64(base + 24)?,
            size: r.u64(base + 32)?,
            link: r.u32(base + 40)?,
        })
    } else {
        Some(RawSection {
            name_off: r.u32(base)?,
            sh_type: r.u32(base + 4)?,
            flags: r.u32(base + 8)? as u64,
            offset: r.u32(base + 16)? as u64,
            size: r.u32(base + 20)? as u64,
            link: r.u32(base + 24)?,
        })
    }
}

fn read_sections(r: Reader<'_>, h: &Header, issues: &mut Vec<ParseIssue>) -> Vec<SectionEntry> {
    if h.shoff == 0 {
        return Vec::new();
    }
    let min_entsize = if h.is64 { 64 } else { 40 };
    let entsize = h.shentsize as u64;
    if (h.shentsize as usize) < min_entsize || !table_fits(r.data.len(), h.shoff, 1, entsize) {
        issues.push(ParseIssue::TruncatedTables);
        return Vec::new();
    }
    let Some(first) = read_raw_section(r, h.is64, h.shoff) else {
        issues.push(ParseIssue::TruncatedTables);
        return Vec::new();
    };
    // Extended numbering: counts that overflow the header live in section 0.
    let count = if h.shnum == 0 { first.size } else { h.shnum as u64 };
    if count == 0 {
        return Vec::new();
    }
    if !table_fits(r.data.len(), h.shoff, count, entsize) {
        issues.push(ParseIssue::TruncatedTables);
        return Vec::new();
    }
    let raws: Vec<RawSection> = (0..count).filter_map(|i| read_raw_section(r, h.is64, h.shoff + i * entsize)).collect();

    let strndx = match h.shstrndx {
        SHN_XINDEX => first.link as u64,
        SHN_UNDEF => u64::MAX,
        i if i >= SHN_LORESERVE => u64::MAX,
        i => i as u64,
    };
    let strtab = usize::try_from(strndx).ok().and_then(|i| raws.get(i)).and_then(|s| {
        let len = usize::try_from(s.size).ok()?;
        r.bytes(s.offset, len)
    });
    if strtab.is_none() {
        issues.push(ParseIssue::BadStringTable);
    }

    let file_len = r.data.len() as u64;
    let mut clamped = false;
    let sections = raws
        .iter()
        .map(|s| {
            let mut file_size = if s.sh_type == SHT_NOBITS { 0 } else { s.size };
            let file_offset = s.offset;
            if file_size > 0 && file_offset.saturating_add(file_size) > file_len {
                clamped = true;
                file_size = file_len.saturating_sub(file_offset);
            }
            SectionEntry {
                name: strtab.map(|t| section_name(t, s.name_off)).unwrap_or_default(),
                file_offset,
                file_size,
                kind: section_kind(s.sh_type),
                sh_type: s.sh_type,
                flags: s.flags,
            }
        })
        .collect();
    if clamped {
        issues.push(ParseIssue::SectionOutOfBounds);
    }
    sections
}

fn section_name(strtab: &[u8], off: u32) -> String {
    let Some(tail) = strtab.get(off as usize..) else {
        return String::new();
    };
    let end = tail.iter().position(|&b| b == 0).unwrap_or(tail.len());
    String::from_utf8_lossy(&tail[..end]).into_owned()
}

/// True iff no interpreter and no dynamic-linking segment is present.
pub fn classify_static(segments: &[SegmentEntry]) -> bool {
    !segments.iter().any(|s| s.p_type == PT_INTERP || s.p_type == PT_DYNAMIC)
}

/// True iff there is no full (non-dynamic) symbol table.
pub fn classify_stripped(sections: &[SectionEntry]) -> bool {
    !sections.iter().any(|s| s.sh_type == SHT_SYMTAB)
}

/// Normalized architecture tag for an `e_machine` value.
pub fn arch_name(machine: u16) -> String {
    let name = match machine {
        2 | 18 | 43 => "sparc",
        3 | 62 => "x86",
        4 => "m68k",
        8 | 10 => "mips",
        20 | 21 => "ppc",
        22 => "s390",
        40 | 183 => "arm",
        42 => "sh",
        50 => "ia64",
        93 | 195 => "arc",
        243 => "riscv",
        258 => "loongarch",
        _ => return format!("unknown({machine})"),
    };
    name.to_string()
}

fn type_name(e_type: u16) -> String {
    match e_type {
        1 => "REL".into(),
        2 => "EXEC".into(),
        3 => "DYN".into(),
        4 => "CORE".into(),
        t => format!("unknown({t})"),
    }
}

fn os_abi_name(abi: u8) -> String {
    match abi {
        0 => "sysv".into(),
        1 => "hpux".into(),
        2 => "netbsd".into(),
        3 => "linux".into(),
        6 => "solaris".into(),
        9 => "freebsd".into(),
        12 => "openbsd".into(),
        97 => "arm".into(),
        255 => "standalone".into(),
        a => format!("unknown({a})"),
    }
}

fn section_kind(sh_type: u32) -> String {
    match sh_type {
        0 => "NULL".into(),
        1 => "PROGBITS".into(),
        2 => "SYMTAB".into(),
        3 => "STRTAB".into(),
        4 => "RELA".into(),
        5 => "HASH".into(),
        6 => "DYNAMIC".into(),
        7 => "NOTE".into(),
        8 => "NOBITS".into(),
        9 => "REL".into(),
        11 => "DYNSYM".into(),
        14 => "INIT_ARRAY".into(),
        15 => "FINI_ARRAY".into(),
        16 => "PREINIT_ARRAY".into(),
        17 => "GROUP".into(),
        0x6fff_fff6 => "GNU_HASH".into(),
        0x6fff_fffd => "VERDEF".into(),
        0x6fff_fffe => "VERNEED".into(),
        0x6fff_ffff => "VERSYM".into(),
        t => format!("0x{t:x}"),
    }
}


#[cfg(test)]
mod tests {
    use super::testing::{build, Section};
    use super::*;

    #[test]
    fn rejects_non_elf() {
        assert!(matches!(parse_elf(b"NOTELF.........."), Err(ElfError::MalformedBinary(_))));
        assert!(parse_elf(b"\x7fELF").is_err());
    }

    #[test]
    fn rejects_bad_class_and_encoding() {
        let mut img = build(true, false, 62, &[], &[]);
        img[4] = 3;
        assert!(parse_elf(&img).is_err());
        let mut img = build(true, false, 62, &[], &[]);
        img[5] = 0;
        assert!(parse_elf(&img).is_err());
    }

    #[test]
    fn truncated_header_is_malformed() {
        let img = build(true, false, 62, &[], &[]);
        assert!(parse_elf(&img[..40]).is_err());
    }

    #[test]
    fn decodes_class_and_endianness() {
        for (is64, big) in [(false, false), (false, true), (true, false), (true, true)] {
            let img = build(is64, big, 8, &[1], &[Section { name: ".text", sh_type: 1, data: b"abc" }]);
            let p = parse_elf(&img).unwrap();
            assert_eq!(p.profile.bits, Some(if is64 { 64 } else { 32 }));
            assert_eq!(p.profile.endianness, Some(if big { Endianness::Big } else { Endianness::Little }));
            assert_eq!(p.profile.arch, "mips");
            assert_eq!(p.sections[1].name, ".text");
            assert!(p.issues.is_empty(), "{:?}", p.issues);
        }
    }

    #[test]
    fn interpreter_segment_means_dynamic() {
        let img = build(true, false, 62, &[6, PT_INTERP, 1], &[]);
        assert!(!parse_elf(&img).unwrap().profile.is_static);
        let img = build(false, false, 40, &[1, PT_DYNAMIC], &[]);
        assert!(!parse_elf(&img).unwrap().profile.is_static);
        let img = build(false, false, 40, &[1, 1], &[]);
        assert!(parse_elf(&img).unwrap().profile.is_static);
    }

    #[test]
    fn symtab_means_not_stripped() {
        let img = build(true, false, 62, &[], &[Section { name: ".symtab", sh_type: SHT_SYMTAB, data: &[0; 24] }]);
        assert!(!parse_elf(&img).unwrap().profile.is_stripped);
        let img = build(true, false, 62, &[], &[Section { name: ".dynsym", sh_type: 11, data: &[0; 24] }]);
        assert!(parse_elf(&img).unwrap().profile.is_stripped);
        assert!(classify_stripped(&[]));
    }

    #[test]
    fn crypto_section_names() {
        let img = build(false, true, 8, &[], &[Section { name: ".crypto_keys", sh_type: 1, data: b"k" }]);
        assert!(parse_elf(&img).unwrap().profile.has_crypto_sections);
        let img = build(false, true, 8, &[], &[Section { name: ".rodata", sh_type: 1, data: b"k" }]);
        assert!(!parse_elf(&img).unwrap().profile.has_crypto_sections);
    }

    #[test]
    fn section_table_past_eof_degrades() {
        let img = build(true, false, 62, &[1], &[Section { name: ".text", sh_type: 1, data: b"xyz" }]);
        let cut = &img[..img.len() - 10];
        let p = parse_elf(cut).unwrap();
        assert!(p.sections.is_empty());
        assert!(p.profile.degraded);
        assert!(p.issues.contains(&ParseIssue::TruncatedTables));
        assert_eq!(p.profile.size, cut.len() as u64);
    }

    #[test]
    fn bad_string_index_gives_empty_names() {
        let mut img = build(true, false, 62, &[], &[Section { name: ".text", sh_type: 1, data: b"xyz" }]);
        // e_shstrndx lives at offset 62 in ELF64
        img[62] = 0x20;
        let p = parse_elf(&img).unwrap();
        assert!(p.sections.iter().all(|s| s.name.is_empty()));
        assert!(p.issues.contains(&ParseIssue::BadStringTable));
    }

    #[test]
    fn unknown_machine_tag() {
        assert_eq!(arch_name(0x1234), "unknown(4660)");
        assert_eq!(arch_name(62), "x86");
        assert_eq!(arch_name(183), "arm");
    }

    #[test]
    fn checksums_are_lowercase_hex() {
        let (s1, s256) = checksums(b"abc");
        assert_eq!(s1, "a9993e364706816aba3e25717850c26c9cd0d89d");
        assert_eq!(s256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
