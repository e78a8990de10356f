//! Heuristics over decompiled C source: function statistics, infinite-loop
//! density, suspicious lines and shell-out call sites.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Lexicon;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SourceError {
    #[error("source has no countable lines")]
    EmptySource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionStat {
    pub name: String,
    pub line_count: usize,
    pub arg_count: usize,
    pub while_true_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedSource {
    pub total_lines: usize,
    pub functions: Vec<FunctionStat>,
    pub while_true_lines: usize,
    pub suspicious_lines: usize,
    pub system_call_sites: Vec<String>,
    /// Braces did not balance; counts cover the text up to the last point
    /// at top level.
    pub degraded: bool,
    /// The retained logical lines, one statement or brace per entry.
    #[serde(skip)]
    pub lines: Vec<String>,
}

impl CondensedSource {
    /// The retained lines joined into a listing that condenses to itself.
    pub fn listing(&self) -> String {
        self.lines.join("\n")
    }
}

/// Alert thresholds for abnormal functions. Reported only; no rule reads them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FunctionAlerts {
    pub max_lines: usize,
    pub max_args: usize,
}

impl Default for FunctionAlerts {
    fn default() -> Self {
        FunctionAlerts { max_lines: 500, max_args: 8 }
    }
}

impl FunctionAlerts {
    pub fn is_long(&self, f: &FunctionStat) -> bool {
        f.line_count > self.max_lines
    }

    pub fn has_many_args(&self, f: &FunctionStat) -> bool {
        f.arg_count > self.max_args
    }
}

#[derive(Debug, Clone)]
struct Line {
    /// Text with comments removed.
    text: String,
    /// Text with comments and literal contents removed.
    code: String,
    depth: usize,
}

enum Lex {
    Code,
    Str,
    Chr,
    LineComment,
    BlockComment,
}

/// Split source into logical lines: a line ends at a newline, at `;` outside
/// parentheses, after `{`, and around `}`. Blank and comment-only lines are
/// dropped. Returns the lines and whether braces balanced.
fn logical_lines(src: &str) -> (Vec<Line>, bool) {
    let mut lines = Vec::new();
    let mut text = String::new();
    let mut code = String::new();
    let mut state = Lex::Code;
    let mut depth = 0usize;
    let mut line_depth = 0usize;
    let mut parens = 0usize;
    let mut balanced_len = 0usize;
    let mut overflow = false;

    let flush = |text: &mut String, code: &mut String, lines: &mut Vec<Line>, depth: usize| {
        let t = text.trim();
        if !t.is_empty() {
            lines.push(Line { text: t.to_string(), code: code.trim().to_string(), depth });
        }
        text.clear();
        code.clear();
    };

    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if text.trim().is_empty() {
            line_depth = depth;
        }
        match state {
            Lex::LineComment => {
                if c == '\n' {
                    state = Lex::Code;
                    flush(&mut text, &mut code, &mut lines, line_depth);
                }
            }
            Lex::BlockComment => {
                if c == '*' && next == Some('/') {
                    state = Lex::Code;
                    i += 1;
                } else if c == '\n' {
                    flush(&mut text, &mut code, &mut lines, line_depth);
                }
            }
            Lex::Str | Lex::Chr => {
                let close = if matches!(state, Lex::Str) { '"' } else { '\'' };
                text.push(c);
                if c == '\\' {
                    if let Some(n) = next {
                        text.push(n);
                        i += 1;
                    }
                } else if c == close {
                    code.push(c);
                    state = Lex::Code;
                } else if c == '\n' {
                    // unterminated literal; resync at the line end
                    state = Lex::Code;
                    text.pop();
                    flush(&mut text, &mut code, &mut lines, line_depth);
                }
            }
            Lex::Code => match c {
                '/' if next == Some('/') => {
                    state = Lex::LineComment;
                    i += 1;
                }
                '/' if next == Some('*') => {
                    state = Lex::BlockComment;
                    i += 1;
                }
                '"' | '\'' => {
                    state = if c == '"' { Lex::Str } else { Lex::Chr };
                    text.push(c);
                    code.push(c);
                }
                '\n' => flush(&mut text, &mut code, &mut lines, line_depth),
                '(' => {
                    parens += 1;
                    text.push(c);
                    code.push(c);
                }
                ')' => {
                    parens = parens.saturating_sub(1);
                    text.push(c);
                    code.push(c);
                }
                ';' if parens == 0 => {
                    text.push(c);
                    code.push(c);
                    flush(&mut text, &mut code, &mut lines, line_depth);
                }
                '{' => {
                    text.push(c);
                    code.push(c);
                    flush(&mut text, &mut code, &mut lines, line_depth);
                    depth += 1;
                    parens = 0;
                }
                '}' => {
                    flush(&mut text, &mut code, &mut lines, line_depth);
                    if depth == 0 {
                        overflow = true;
                        break;
                    }
                    lines.push(Line { text: "}".into(), code: "}".into(), depth });
                    depth -= 1;
                    parens = 0;
                    if depth == 0 {
                        balanced_len = lines.len();
                    }
                }
                _ => {
                    text.push(c);
                    code.push(c);
                }
            },
        }
        i += 1;
    }
    if !overflow {
        if text.trim().is_empty() {
            line_depth = depth;
        }
        flush(&mut text, &mut code, &mut lines, line_depth);
    }
    if depth == 0 && !overflow {
        return (lines, true);
    }
    if depth != 0 {
        lines.truncate(balanced_len);
    }
    (lines, false)
}

const NOT_FUNCTIONS: &[&str] = &["if", "while", "for", "switch", "return", "sizeof", "do", "else"];

/// Name and argument text of a `name(args) {` header, if `code` is one.
fn function_header(code: &str) -> Option<(String, String)> {
    let body = code.strip_suffix('{').unwrap_or(code).trim_end();
    let close = body.strip_suffix(')')?;
    // find the matching open paren from the right
    let bytes = close.as_bytes();
    let mut depth = 1usize;
    let mut open = None;
    for (i, &b) in bytes.iter().enumerate().rev() {
        match b {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open?;
    let args = &close[open + 1..];
    let before = close[..open].trim_end();
    let name: String = before
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if name.is_empty() || name.as_bytes()[0].is_ascii_digit() || NOT_FUNCTIONS.contains(&name.as_str()) {
        return None;
    }
    if before.contains('=') {
        return None;
    }
    Some((name, args.to_string()))
}

fn count_args(args: &str) -> usize {
    let trimmed = args.trim();
    if trimmed.is_empty() || trimmed == "void" {
        return 0;
    }
    let mut depth = 0usize;
    let mut count = 1;
    for c in trimmed.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => count += 1,
            _ => {}
        }
    }
    count
}

fn squash(code: &str) -> String {
    code.chars().filter(|c| !c.is_whitespace()).collect()
}

fn is_while_true_header(code: &str) -> bool {
    let s = squash(code);
    let s = s.strip_prefix('}').unwrap_or(&s);
    s.starts_with("while(true)") || s.starts_with("while(1)") || s.starts_with("for(;;)")
}

static SYSTEM_CALL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:__)?(?:libc_)?system\s*\(").unwrap());

/// Condense decompiled C into line-level statistics.
pub fn condense(source: &str, lexicon: &Lexicon) -> CondensedSource {
    let (lines, balanced) = logical_lines(source);

    let mut in_loop = vec![false; lines.len()];
    let mut loops: Vec<usize> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.code == "}" && loops.last() == Some(&(line.depth - 1)) {
            loops.pop();
            in_loop[i] = !loops.is_empty();
            continue;
        }
        in_loop[i] = !loops.is_empty();
        if is_while_true_header(&line.code) {
            if line.code.ends_with('{') {
                loops.push(line.depth);
            } else if !in_loop[i] && squash(&line.code).ends_with(';') {
                // single-statement body on the header line
                in_loop[i] = true;
            }
        }
    }

    let mut functions = Vec::new();
    let mut system_call_sites = Vec::new();
    let mut current: Option<(String, usize, usize)> = None;
    for (i, line) in lines.iter().enumerate() {
        if line.depth == 0 && current.is_none() && line.code.ends_with('{') {
            let header = function_header(&line.code).map(|h| (h, i)).or_else(|| {
                // brace on its own line after the header
                (line.code == "{" && i > 0 && lines[i - 1].depth == 0)
                    .then(|| function_header(&lines[i - 1].code).map(|h| (h, i - 1)))
                    .flatten()
            });
            if let Some(((name, args), start)) = header {
                current = Some((name, count_args(&args), start));
            }
            continue;
        }
        if let Some((name, args, start)) = &current {
            if SYSTEM_CALL.is_match(&line.code) {
                system_call_sites.push(line.text.clone());
            }
            if line.code == "}" && line.depth == 1 {
                let count = i - start + 1;
                let looped = in_loop[*start..=i].iter().filter(|&&b| b).count();
                functions.push(FunctionStat {
                    name: name.clone(),
                    line_count: count,
                    arg_count: *args,
                    while_true_ratio: 100.0 * looped as f64 / count as f64,
                });
                current = None;
            }
        }
    }

    let while_true_lines = in_loop.iter().filter(|&&b| b).count();
    let suspicious_lines = lines.iter().filter(|l| lexicon.matches_any(&l.text)).count();
    CondensedSource {
        total_lines: lines.len(),
        functions,
        while_true_lines,
        suspicious_lines,
        system_call_sites,
        degraded: !balanced,
        lines: lines.into_iter().map(|l| l.text).collect(),
    }
}

/// Step function from a percentage to a score in 0..=5: zero maps to zero,
/// then one point per `step` with left-closed intervals.
pub fn ladder(rate: f64, step: f64) -> u8 {
    if rate.is_nan() || rate <= 0.0 {
        return 0;
    }
    let steps = (rate / step).floor();
    if steps >= 4.0 {
        5
    } else {
        steps as u8 + 1
    }
}

fn rate(part: usize, total: usize) -> Result<f64, SourceError> {
    if total == 0 {
        return Err(SourceError::EmptySource);
    }
    Ok((100 * part) as f64 / total as f64)
}

/// Percentage of lines naming any lexicon word, and its 0..=5 score.
pub fn suspicious_line_rate(condensed: &CondensedSource, lexicon: &Lexicon) -> Result<(f64, u8), SourceError> {
    let hits = if condensed.lines.is_empty() {
        condensed.suspicious_lines
    } else {
        condensed.lines.iter().filter(|l| lexicon.matches_any(l)).count()
    };
    let r = rate(hits, condensed.total_lines)?;
    Ok((r, ladder(r, 1.0)))
}

/// Percentage of lines inside infinite loops, and its 0..=5 score.
pub fn while_true_ratio(condensed: &CondensedSource) -> Result<(f64, u8), SourceError> {
    let r = rate(condensed.while_true_lines, condensed.total_lines)?;
    Ok((r, ladder(r, 10.0)))
}

pub fn detect_system_calls(condensed: &CondensedSource) -> bool {
    !condensed.system_call_sites.is_empty()
}
