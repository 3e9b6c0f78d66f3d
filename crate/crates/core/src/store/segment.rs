//! Rule-based sentence segmentation.
//!
//! A sentence ends at `.`, `!`, `?` or `…` (optionally followed by closing
//! quotes or brackets) when the next character is whitespace or the end of
//! the text. A period does not end a sentence after a guarded abbreviation or
//! when the next word starts lowercase. Blank lines and markdown heading
//! lines are hard boundaries. Offsets are in Unicode scalar values.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::{ReportDocument, SentenceSpan, StoreError};
use crate::types::ReportId;

const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

const TERMINALS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 7] = ['"', '\'', ')', ']', '”', '’', '»'];

/// Splits `body` into `(start, end)` character spans.
pub fn segment(body: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = body.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut line_start = 0usize;
    let mut i = 0usize;

    let close = |spans: &mut Vec<(usize, usize)>, s: usize, e: usize| {
        let mut end = e;
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > s {
            spans.push((s, end));
        }
    };

    while i < n {
        let c = chars[i];
        if c == '\n' {
            let heading = is_heading_line(&chars, line_start);
            let next_line = i + 1;
            if let Some(s) = start {
                if heading
                    || is_blank_line(&chars, next_line)
                    || is_heading_line(&chars, next_line)
                {
                    close(&mut spans, s, i);
                    start = None;
                }
            }
            line_start = next_line;
            i += 1;
            continue;
        }
        if start.is_none() && !c.is_whitespace() {
            start = Some(i);
        }
        if TERMINALS.contains(&c) {
            let mut j = i + 1;
            while j < n && (TERMINALS.contains(&chars[j]) || CLOSERS.contains(&chars[j])) {
                j += 1;
            }
            let at_boundary = j == n || chars[j].is_whitespace();
            if at_boundary && !(c == '.' && period_is_guarded(&chars, i, j)) {
                if let Some(s) = start.take() {
                    close(&mut spans, s, j);
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        close(&mut spans, s, n);
    }
    spans
}

fn is_blank_line(chars: &[char], from: usize) -> bool {
    let mut k = from;
    while k < chars.len() {
        match chars[k] {
            '\n' => return true,
            c if c.is_whitespace() => k += 1,
            _ => return false,
        }
    }
    // trailing whitespace to end of text behaves like a blank line
    true
}

fn is_heading_line(chars: &[char], from: usize) -> bool {
    let mut k = from;
    while k < chars.len() && (chars[k] == ' ' || chars[k] == '\t') {
        k += 1;
    }
    k < chars.len() && chars[k] == '#'
}

/// `dot` is the index of the period, `after` the first index past it and any closers.
fn period_is_guarded(chars: &[char], dot: usize, after: usize) -> bool {
    let mut k = dot;
    while k > 0 && !chars[k - 1].is_whitespace() {
        k -= 1;
    }
    let token: String = chars[k..dot]
        .iter()
        .skip_while(|c| matches!(c, '(' | '[' | '"' | '\'' | '“' | '‘'))
        .collect::<String>()
        .to_lowercase();
    if !token.is_empty() && abbreviations().contains(token.as_str()) {
        return true;
    }
    // next word starting lowercase: "approx. two", "3 p.m. on"
    let mut m = after;
    while m < chars.len() && chars[m].is_whitespace() {
        m += 1;
    }
    m < chars.len() && chars[m].is_lowercase()
}

/// Segments `body` and wraps the result in a validated [`ReportDocument`].
pub fn ingest_report(
    body: &str,
    report_id: impl Into<ReportId>,
    domain: impl Into<String>,
) -> Result<ReportDocument, StoreError> {
    if body.trim().is_empty() {
        return Err(StoreError::InvalidInput("report body is empty".into()));
    }
    let sentences = segment(body)
        .into_iter()
        .enumerate()
        .map(|(idx, (start, end))| SentenceSpan {
            sentence_id: idx as u32,
            start,
            end,
        })
        .collect();
    let doc = ReportDocument {
        report_id: report_id.into(),
        domain: domain.into(),
        body: body.to_owned(),
        sentences,
    };
    doc.validate()?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(body: &str) -> Vec<String> {
        let doc = ingest_report(body, "r", "d").unwrap();
        doc.sentences
            .iter()
            .map(|s| doc.slice(s.start, s.end).unwrap().to_owned())
            .collect()
    }

    #[test]
    fn two_sentence_case() {
        let doc = ingest_report("A. B.", "r", "d").unwrap();
        let spans: Vec<_> = doc.sentences.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, vec![(0, 2), (3, 5)]);
        assert_eq!(texts("A. B."), vec!["A.", "B."]);
    }

    #[test]
    fn empty_body_rejected() {
        assert!(matches!(
            ingest_report("", "r", "d"),
            Err(StoreError::InvalidInput(_))
        ));
        assert!(matches!(
            ingest_report("  \n ", "r", "d"),
            Err(StoreError::InvalidInput(_))
        ));
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            texts("Results improved, e.g. on QA tasks. Smith et al. reported gains. Fine."),
            vec![
                "Results improved, e.g. on QA tasks.",
                "Smith et al. reported gains.",
                "Fine."
            ]
        );
        assert_eq!(
            texts("See Fig. 3 for details. Dr. Lee agreed."),
            vec!["See Fig. 3 for details.", "Dr. Lee agreed."]
        );
    }

    #[test]
    fn decimals_quotes_and_questions() {
        assert_eq!(
            texts("Accuracy was 83.4 percent. He said \"no.\" Why? Because!"),
            vec![
                "Accuracy was 83.4 percent.",
                "He said \"no.\"",
                "Why?",
                "Because!"
            ]
        );
    }

    #[test]
    fn headings_and_paragraphs_are_boundaries() {
        let body = "# Overview\nThe model works well\n\nA second paragraph without stop\n## Next\nLast one.";
        assert_eq!(
            texts(body),
            vec![
                "# Overview",
                "The model works well",
                "A second paragraph without stop",
                "## Next",
                "Last one."
            ]
        );
    }

    #[test]
    fn wrapped_lines_stay_together() {
        assert_eq!(
            texts("This sentence is\nwrapped across lines. Next."),
            vec!["This sentence is\nwrapped across lines.", "Next."]
        );
    }

    #[test]
    fn multibyte_offsets_are_char_based() {
        let doc = ingest_report("Café ok. Über gut.", "r", "d").unwrap();
        let spans: Vec<_> = doc.sentences.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, vec![(0, 8), (9, 18)]);
        assert_eq!(doc.slice(9, 18).unwrap(), "Über gut.");
    }

    proptest! {
        #[test]
        fn spans_cover_all_text(body in "[A-Za-z .!?\n,é]{1,200}") {
            prop_assume!(!body.trim().is_empty());
            let doc = ingest_report(&body, "r", "d").unwrap();
            let chars: Vec<char> = body.chars().collect();
            let mut cursor = 0;
            for s in &doc.sentences {
                prop_assert!(s.start >= cursor);
                prop_assert!(chars[cursor..s.start].iter().all(|c| c.is_whitespace()));
                cursor = s.end;
            }
            prop_assert!(chars[cursor..].iter().all(|c| c.is_whitespace()));
            prop_assert_eq!(segment(&body), segment(&body));
        }
    }
}
