//! Sentence segmentation, tokenization, stopword filtering and clause
//! retention.
//!
//! Every sentence keeps its ordinal `index` for the whole pipeline run. The
//! index is the narrative timestamp that later synchronizes the entity layer
//! with the semantic layer, so filtering marks records instead of removing
//! them.

use std::collections::BTreeSet;
use std::ops::Range;
use std::path::Path;

use regex::Regex;

use crate::error::{read_to_string, Error, Result};

pub const DEFAULT_DELIMITERS: [char; 6] = ['.', '!', '?', '。', '！', '？'];
pub const DEFAULT_ABBREVIATIONS: [&str; 6] = ["mr", "mrs", "ms", "dr", "st", "prof"];

/// Characters that close a sentence after its terminal punctuation, e.g. the
/// quote in `"Run."`.
const CLOSERS: [char; 10] = ['"', '\'', '”', '’', ')', ']', '」', '』', '）', '》'];

/// One narrative unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRecord {
    /// 0-based document position; doubles as the narrative timestamp.
    pub index: usize,
    /// Sentence text including its terminal punctuation.
    pub raw: String,
    /// Byte range of `raw` inside the segmented input.
    pub span: Range<usize>,
    /// Lowercased tokens with stopwords removed.
    pub tokens: Vec<String>,
    /// Original-case form of each entry in `tokens`.
    pub surface: Vec<String>,
    /// Position of each entry in `tokens` within the unfiltered token stream.
    pub source_positions: Vec<usize>,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub clause_patterns: Vec<String>,
    pub sentence_delimiters: BTreeSet<char>,
    /// Lowercased words whose trailing `.` does not end a sentence.
    pub abbreviations: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            clause_patterns: Vec::new(),
            sentence_delimiters: DEFAULT_DELIMITERS.into_iter().collect(),
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PreprocessConfig {
    /// Checks the delimiter set and compiles the clause patterns.
    pub fn validate(&self) -> Result<ClausePatterns> {
        if self.sentence_delimiters.is_empty() {
            return Err(Error::config("sentence delimiter set is empty"));
        }
        ClausePatterns::compile(&self.clause_patterns)
    }
}

/// Compiled clause-retention patterns.
#[derive(Debug, Clone, Default)]
pub struct ClausePatterns {
    patterns: Vec<Regex>,
}

impl ClausePatterns {
    pub fn compile<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        let patterns = patterns
            .iter()
            .map(|p| {
                Regex::new(p.as_ref()).map_err(|e| Error::InvalidPattern {
                    pattern: p.as_ref().to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { patterns })
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn matches(&self, text: &str) -> bool {
        self.patterns.is_empty() || self.patterns.iter().any(|re| re.is_match(text))
    }
}

/// Reads a stopword list: one word per line, `#` starts a comment.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = read_to_string(path)?;
    Ok(parse_word_list(&text))
}

pub(crate) fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect()
}

/// Splits `raw` into sentence records, tokenizing and stopword-filtering each.
///
/// A delimiter run ends a sentence. A `.` only counts when it is followed by
/// whitespace, another delimiter, a closing quote or the end of input, and
/// when the word before it is not a listed abbreviation. Closing quotes and
/// brackets directly after the run stay with the sentence. Segments without
/// any alphanumeric character are discarded.
pub fn segment(raw: &str, config: &PreprocessConfig) -> Vec<SentenceRecord> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let mut records = Vec::new();
    let mut seg_start = 0usize;
    let mut i = 0usize;

    let push = |start: usize, end: usize, records: &mut Vec<SentenceRecord>| {
        let piece = &raw[start..end];
        let trimmed_start = start + (piece.len() - piece.trim_start().len());
        let trimmed_end = end - (piece.len() - piece.trim_end().len());
        if trimmed_start >= trimmed_end {
            return;
        }
        let text = &raw[trimmed_start..trimmed_end];
        if !text.chars().any(char::is_alphanumeric) {
            return;
        }
        let (tokens, surface, source_positions) = filtered_tokens(text, &config.stopwords);
        records.push(SentenceRecord {
            index: records.len(),
            raw: text.to_string(),
            span: trimmed_start..trimmed_end,
            tokens,
            surface,
            source_positions,
            retained: true,
        });
    };

    while i < chars.len() {
        let (_, c) = chars[i];
        if config.sentence_delimiters.contains(&c) && is_boundary(&chars, i, raw, config) {
            let mut j = i;
            while j < chars.len() && config.sentence_delimiters.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(raw.len(), |&(b, _)| b);
            push(seg_start, end, &mut records);
            seg_start = end;
            i = j;
        } else {
            i += 1;
        }
    }
    if seg_start < raw.len() {
        push(seg_start, raw.len(), &mut records);
    }
    records
}

fn is_boundary(chars: &[(usize, char)], i: usize, raw: &str, config: &PreprocessConfig) -> bool {
    let c = chars[i].1;
    if c != '.' {
        return true;
    }
    match chars.get(i + 1) {
        None => {}
        Some(&(_, next)) => {
            let ok = next.is_whitespace()
                || config.sentence_delimiters.contains(&next)
                || CLOSERS.contains(&next);
            if !ok {
                return false;
            }
        }
    }
    // Word immediately before the dot.
    let dot = chars[i].0;
    let mut k = i;
    while k > 0 && chars[k - 1].1.is_alphanumeric() {
        k -= 1;
    }
    if k == i {
        return true;
    }
    let word = raw[chars[k].0..dot].to_lowercase();
    !config.abbreviations.contains(&word)
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // hiragana, katakana
        | 0x3400..=0x4DBF    // CJK extension A
        | 0x4E00..=0x9FFF    // CJK unified ideographs
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0x20000..=0x2A6DF) // extension B
}

/// Splits on whitespace and punctuation keeping original case. CJK
/// characters become single-character tokens.
pub fn surface_tokens(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in sentence.chars() {
        if is_cjk(c) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Lowercased tokens in order, punctuation stripped.
pub fn tokenize(sentence: &str) -> Vec<String> {
    surface_tokens(sentence)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn filter_stopwords(tokens: &[String], stopwords: &BTreeSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .cloned()
        .collect()
}

fn filtered_tokens(
    text: &str,
    stopwords: &BTreeSet<String>,
) -> (Vec<String>, Vec<String>, Vec<usize>) {
    let mut tokens = Vec::new();
    let mut surface = Vec::new();
    let mut positions = Vec::new();
    for (pos, s) in surface_tokens(text).into_iter().enumerate() {
        let lower = s.to_lowercase();
        if lower.is_empty() || stopwords.contains(&lower) {
            continue;
        }
        tokens.push(lower);
        surface.push(s);
        positions.push(pos);
    }
    (tokens, surface, positions)
}

/// Marks records that match no pattern as not retained. Indices are never
/// touched and no record is removed.
pub fn retain_clauses(records: Vec<SentenceRecord>, patterns: &ClausePatterns) -> Vec<SentenceRecord> {
    records
        .into_iter()
        .map(|mut r| {
            r.retained = patterns.matches(&r.raw);
            r
        })
        .collect()
}

/// Indices of retained records, ascending.
pub fn retained_indices(records: &[SentenceRecord]) -> Vec<usize> {
    records.iter().filter(|r| r.retained).map(|r| r.index).collect()
}

/// Summary counts reported by `semtopo ingest`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub retained: usize,
    pub tokens: usize,
    pub vocabulary: usize,
}

pub fn stats(records: &[SentenceRecord]) -> CorpusStats {
    let vocab: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.retained)
        .flat_map(|r| r.tokens.iter().map(String::as_str))
        .collect();
    CorpusStats {
        sentences: records.len(),
        retained: records.iter().filter(|r| r.retained).count(),
        tokens: records.iter().filter(|r| r.retained).map(|r| r.tokens.len()).sum(),
        vocabulary: vocab.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_input_yields_nothing() {
        assert!(segment("", &PreprocessConfig::default()).is_empty());
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn two_sentences() {
        let recs = segment("It rained. She ran!", &PreprocessConfig::default());
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].index, 0);
        assert_eq!(recs[1].index, 1);
        assert_eq!(recs[0].raw, "It rained.");
        assert_eq!(recs[1].raw, "She ran!");
    }

    #[test]
    fn abbreviation_and_decimal_do_not_split() {
        let recs = segment(
            "Mr. Gray paid 3.50 for it. Then he left.",
            &PreprocessConfig::default(),
        );
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].raw, "Mr. Gray paid 3.50 for it.");
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        let recs = segment("He said \"Run.\" She ran?!", &PreprocessConfig::default());
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].raw, "He said \"Run.\"");
        assert_eq!(recs[1].raw, "She ran?!");
    }

    #[test]
    fn cjk_segmentation_and_tokens() {
        let recs = segment("他来了。她走了！", &PreprocessConfig::default());
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].tokens, words(&["他", "来", "了"]));
    }

    #[test]
    fn tokenize_strips_punctuation() {
        assert_eq!(
            tokenize("The Butler, Mr. Gray"),
            words(&["the", "butler", "mr", "gray"])
        );
    }

    #[test]
    fn stopword_filtering() {
        let sw: BTreeSet<String> = ["the", "did", "it"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            filter_stopwords(&words(&["the", "butler", "did", "it"]), &sw),
            words(&["butler"])
        );
        assert!(filter_stopwords(&[], &sw).is_empty());
    }

    #[test]
    fn source_positions_track_unfiltered_stream() {
        let cfg = PreprocessConfig {
            stopwords: ["the"].iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        };
        let recs = segment("The Butler saw the Maid.", &cfg);
        assert_eq!(recs[0].tokens, words(&["butler", "saw", "maid"]));
        assert_eq!(recs[0].surface, words(&["Butler", "saw", "Maid"]));
        assert_eq!(recs[0].source_positions, vec![1, 2, 4]);
    }

    #[test]
    fn empty_pattern_list_retains_all() {
        let recs = segment("A b. C d.", &PreprocessConfig::default());
        let out = retain_clauses(recs, &ClausePatterns::compile::<&str>(&[]).unwrap());
        assert!(out.iter().all(|r| r.retained));
    }

    #[test]
    fn non_matching_pattern_drops_all_but_keeps_indices() {
        let recs = segment("A b. C d. E f.", &PreprocessConfig::default());
        let out = retain_clauses(recs, &ClausePatterns::compile(&["zzz"]).unwrap());
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|r| !r.retained));
        assert_eq!(out.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn invalid_pattern_is_named() {
        let err = ClausePatterns::compile(&["ok", "(unclosed"]).unwrap_err();
        match err {
            Error::InvalidPattern { pattern, .. } => assert_eq!(pattern, "(unclosed"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            PreprocessConfig {
                clause_patterns: vec!["[".into()],
                ..Default::default()
            }
            .validate()
            .unwrap_err()
            .exit_code(),
            1
        );
    }

    #[test]
    fn empty_delimiters_rejected() {
        let cfg = PreprocessConfig {
            sentence_delimiters: BTreeSet::new(),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn segmentation_is_a_partition(s in "[a-cA-C .!?,\"\n。]{0,60}") {
            let cfg = PreprocessConfig::default();
            let recs = segment(&s, &cfg);
            let mut last = 0usize;
            for (i, r) in recs.iter().enumerate() {
                prop_assert_eq!(r.index, i);
                prop_assert!(r.span.start >= last);
                prop_assert_eq!(&s[r.span.clone()], r.raw.as_str());
                prop_assert!(!s[last..r.span.start].chars().any(char::is_alphanumeric));
                last = r.span.end;
            }
            prop_assert!(!s[last..].chars().any(char::is_alphanumeric));
        }

        #[test]
        fn tokenize_is_idempotent_on_clean_streams(s in "[a-zA-Z0-9 ,.;:!?'-]{0,80}") {
            let once = tokenize(&s);
            prop_assert!(once.iter().all(|t| !t.is_empty()));
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn retention_keeps_indices(s in "[a-d .]{0,60}", pat in "[a-d]{1,2}") {
            let recs = segment(&s, &PreprocessConfig::default());
            let before: Vec<usize> = recs.iter().map(|r| r.index).collect();
            let after: Vec<usize> = retain_clauses(recs, &ClausePatterns::compile(&[pat]).unwrap())
                .iter().map(|r| r.index).collect();
            prop_assert_eq!(before, after);
        }
    }
}
