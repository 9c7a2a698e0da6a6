//! Message body rules: length limits and hashtag extraction.

use thiserror::Error;

pub const MAX_CHARS: usize = 140;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("message text is empty")]
    EmptyText,
    #[error("message text is {chars} characters (limit {MAX_CHARS})")]
    Overlength { chars: usize },
}

/// A hashtag occurrence: the tag including its leading `#`, and its byte offset in the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashtagSpan<'a> {
    pub tag: &'a str,
    pub offset: usize,
}

/// Character count as displayed (Unicode scalar values).
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

fn is_tag_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// All hashtag occurrences in order, including repeats.
///
/// A hashtag is `#` followed by one or more alphanumeric or `_` characters, where the `#`
/// is not itself preceded by a tag character (so `C#` or `a#b` are not tags).
pub fn hashtag_spans(text: &str) -> Vec<HashtagSpan<'_>> {
    let mut out = Vec::new();
    let mut prev: Option<char> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c == '#' && !prev.is_some_and(|p| is_tag_char(p) || p == '#') {
            let start = i;
            let mut end = i + 1;
            while let Some(&(j, d)) = iter.peek() {
                if is_tag_char(d) {
                    end = j + d.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            if end > start + 1 {
                out.push(HashtagSpan { tag: &text[start..end], offset: start });
                prev = text[..end].chars().next_back();
                continue;
            }
        }
        prev = Some(c);
    }
    out
}

/// Hashtags present in `text`, in order of first appearance, deduplicated.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for span in hashtag_spans(text) {
        if !out.iter().any(|t| t == span.tag) {
            out.push(span.tag.to_string());
        }
    }
    out
}

/// Checks the length contract and returns the message's hashtags.
pub fn validate_microblog(text: &str) -> Result<Vec<String>, TextError> {
    check_length(text)?;
    Ok(extract_hashtags(text))
}

pub fn check_length(text: &str) -> Result<(), TextError> {
    let chars = char_len(text);
    if chars == 0 {
        return Err(TextError::EmptyText);
    }
    if chars > MAX_CHARS {
        return Err(TextError::Overlength { chars });
    }
    Ok(())
}

/// `"RT @author: text"`, cut to 140 characters with a trailing ellipsis when it does not fit.
pub fn retweet_text(original_author: &str, original_text: &str) -> String {
    let full = format!("RT @{original_author}: {original_text}");
    if char_len(&full) <= MAX_CHARS {
        return full;
    }
    let mut cut: String = full.chars().take(MAX_CHARS - 1).collect();
    cut.push('…');
    cut
}
