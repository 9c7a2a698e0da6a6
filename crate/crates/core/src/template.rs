//! Parameterized message templates and literal rewrite rules.
//!
//! Template surface syntax: literal text with alternation groups written as
//! `(option one / option two / ...)`. Inside a group every unescaped `/` separates
//! options and surrounding whitespace is trimmed. `\(`, `\)`, `\/` and `\\` produce
//! the literal character anywhere. Groups do not nest.

use std::ops::Range;

use regex::{NoExpand, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, BoundingBox, MicroblogDraft, SourceClass, TextError, VisibilityLevel};

/// Upper bound on variants materialized by [`expand_template`].
pub const MAX_EXPANSION: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("template parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unclosed '('")]
    Unclosed,
    #[error("')' without matching '('")]
    UnmatchedClose,
    #[error("nested group")]
    Nested,
    #[error("group has {0} option(s); at least 2 required")]
    TooFewOptions(usize),
    #[error("empty option")]
    EmptyOption,
    #[error("dangling escape")]
    DanglingEscape,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternationGroup {
    options: Vec<String>,
}

impl AlternationGroup {
    pub fn new(options: Vec<String>) -> Result<Self, ParseErrorKind> {
        if options.len() < 2 {
            return Err(ParseErrorKind::TooFewOptions(options.len()));
        }
        if options.iter().any(String::is_empty) {
            return Err(ParseErrorKind::EmptyOption);
        }
        Ok(Self { options })
    }

    pub fn options(&self) -> &[String] {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    /// `span` is the byte range of the group in the source, parentheses included.
    Group {
        group: AlternationGroup,
        span: Range<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBody {
    segments: Vec<Segment>,
}

pub fn parse_template(src: &str) -> Result<TemplateBody, ParseError> {
    let err = |offset, kind| ParseError { offset, kind };
    let mut segments = Vec::new();
    let mut literal = String::new();
    // (open offset, finished options, current option)
    let mut group: Option<(usize, Vec<String>, String)> = None;
    let mut chars = src.char_indices();

    while let Some((i, c)) = chars.next() {
        let escaped = if c == '\\' {
            match chars.next() {
                Some((_, e)) => Some(e),
                None => return Err(err(i, ParseErrorKind::DanglingEscape)),
            }
        } else {
            None
        };
        match (&mut group, escaped) {
            (None, Some(e)) => literal.push(e),
            (Some((_, _, cur)), Some(e)) => cur.push(e),
            (None, None) => match c {
                '(' => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    group = Some((i, Vec::new(), String::new()));
                }
                ')' => return Err(err(i, ParseErrorKind::UnmatchedClose)),
                _ => literal.push(c),
            },
            (Some((open, opts, cur)), None) => match c {
                '(' => return Err(err(i, ParseErrorKind::Nested)),
                '/' => opts.push(std::mem::take(cur).trim().to_string()),
                ')' => {
                    let open = *open;
                    opts.push(std::mem::take(cur).trim().to_string());
                    let options = std::mem::take(opts);
                    let g = AlternationGroup::new(options).map_err(|k| err(open, k))?;
                    segments.push(Segment::Group { group: g, span: open..i + 1 });
                    group = None;
                }
                _ => cur.push(c),
            },
        }
    }
    if let Some((open, _, _)) = group {
        return Err(err(open, ParseErrorKind::Unclosed));
    }
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    Ok(TemplateBody { segments })
}

impl TemplateBody {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn groups(&self) -> impl Iterator<Item = &AlternationGroup> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Group { group, .. } => Some(group),
            Segment::Literal(_) => None,
        })
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups().map(AlternationGroup::len).collect()
    }

    /// Product of group sizes, saturating.
    pub fn variant_count(&self) -> u64 {
        self.groups().fold(1u64, |acc, g| acc.saturating_mul(g.len() as u64))
    }

    /// Renders the variant choosing `indices[k]` in the k-th group.
    pub fn render(&self, indices: &[usize]) -> String {
        let mut out = String::new();
        let mut k = 0;
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Group { group, .. } => {
                    out.push_str(&group.options[indices[k]]);
                    k += 1;
                }
            }
        }
        out
    }

    /// Option indices of the `n`-th variant in lexicographic order (first group most significant).
    pub fn indices_of(&self, mut n: u64) -> Vec<usize> {
        let sizes = self.group_sizes();
        let mut idx = vec![0; sizes.len()];
        for (slot, size) in idx.iter_mut().zip(&sizes).rev() {
            *slot = (n % *size as u64) as usize;
            n /= *size as u64;
        }
        idx
    }

    pub fn render_variant(&self, n: u64) -> String {
        self.render(&self.indices_of(n))
    }

    /// Finds a variant violating the length contract, if any, without enumerating.
    pub fn check_lengths(&self) -> Result<(), ExpansionError> {
        let fixed: usize = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => corpus::char_len(l),
                Segment::Group { .. } => 0,
            })
            .sum();
        let pick = |longest: bool| -> Vec<usize> {
            self.groups()
                .map(|g| {
                    let lens = g.options.iter().map(|o| corpus::char_len(o));
                    let best = if longest {
                        lens.enumerate().max_by_key(|&(i, l)| (l, std::cmp::Reverse(i)))
                    } else {
                        lens.enumerate().min_by_key(|&(i, l)| (l, i))
                    };
                    best.map(|(i, _)| i).unwrap_or(0)
                })
                .collect()
        };
        let longest = pick(true);
        let max_len = fixed + self.groups().zip(&longest).map(|(g, &i)| corpus::char_len(&g.options[i])).sum::<usize>();
        if max_len > corpus::MAX_CHARS {
            return Err(ExpansionError::Overlength { indices: longest, chars: max_len });
        }
        let shortest = pick(false);
        if corpus::check_length(&self.render(&shortest)).is_err() {
            return Err(ExpansionError::Empty { indices: shortest });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionError {
    #[error("variant with option indices {indices:?} is {chars} characters (limit 140)")]
    Overlength { indices: Vec<usize>, chars: usize },
    #[error("variant with option indices {indices:?} is empty")]
    Empty { indices: Vec<usize> },
    #[error("template has {0} variants; expansion limit is {MAX_EXPANSION}")]
    TooManyVariants(u64),
}

/// A parsed template with its scheduling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub id: String,
    pub category: String,
    pub visibility: VisibilityLevel,
    pub body: TemplateBody,
    pub msel_event: Option<String>,
    pub geo_region: Option<BoundingBox>,
    /// Cap on how many distinct variants are scheduled; `None` uses all of them.
    pub max_variants: Option<u64>,
}

impl Template {
    pub fn parse(
        id: impl Into<String>,
        category: impl Into<String>,
        visibility: VisibilityLevel,
        src: &str,
    ) -> Result<Self, ParseError> {
        Ok(Self {
            id: id.into(),
            category: category.into(),
            visibility,
            body: parse_template(src)?,
            msel_event: None,
            geo_region: None,
            max_variants: None,
        })
    }

    pub fn source_class(&self) -> SourceClass {
        if self.msel_event.is_some() {
            SourceClass::ConstructedMsel
        } else {
            SourceClass::ConstructedGeneric
        }
    }

    pub fn draft(&self, text: String) -> MicroblogDraft {
        let mut d = MicroblogDraft::new(text, self.visibility, self.source_class());
        d.category = Some(self.category.clone());
        d
    }
}

/// Every variant, in lexicographic order of option indices. Fails as a whole if any
/// variant breaks the length contract.
pub fn expand_template(t: &Template) -> Result<Vec<MicroblogDraft>, ExpansionError> {
    let count = t.body.variant_count();
    if count > MAX_EXPANSION {
        return Err(ExpansionError::TooManyVariants(count));
    }
    let mut out = Vec::with_capacity(count as usize);
    for n in 0..count {
        let indices = t.body.indices_of(n);
        let text = t.body.render(&indices);
        match corpus::check_length(&text) {
            Ok(()) => out.push(t.draft(text)),
            Err(TextError::Overlength { chars }) => return Err(ExpansionError::Overlength { indices, chars }),
            Err(TextError::EmptyText) => return Err(ExpansionError::Empty { indices }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub pattern: String,
    pub replacement: String,
    #[serde(default, rename = "ci")]
    pub case_insensitive: bool,
}

impl RewriteRule {
    pub fn new(pattern: impl Into<String>, replacement: impl Into<String>) -> Self {
        Self { pattern: pattern.into(), replacement: replacement.into(), case_insensitive: false }
    }
}

/// Applies rules in order. Each rule replaces all leftmost non-overlapping literal
/// matches in a single pass; its output feeds the next rule. Empty patterns are skipped.
pub fn apply_rewrite_rules(text: &str, rules: &[RewriteRule]) -> String {
    let mut cur = text.to_string();
    for rule in rules {
        if rule.pattern.is_empty() {
            continue;
        }
        if rule.case_insensitive {
            let re = RegexBuilder::new(&regex::escape(&rule.pattern))
                .case_insensitive(true)
                .build()
                .expect("escaped literal is a valid pattern");
            cur = re.replace_all(&cur, NoExpand(&rule.replacement)).into_owned();
        } else {
            cur = cur.replace(&rule.pattern, &rule.replacement);
        }
    }
    cur
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateFileError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateRecord {
    #[serde(default)]
    id: Option<String>,
    category: String,
    visibility: VisibilityLevel,
    body: String,
    #[serde(default)]
    msel_event: Option<String>,
    #[serde(default)]
    geo_bbox: Option<BoundingBox>,
    #[serde(default)]
    max_variants: Option<u64>,
}

/// Reads a JSON-lines template file. Templates without an `id` are named `t<line>`.
pub fn load_templates(input: &str) -> Result<Vec<Template>, TemplateFileError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| TemplateFileError::Line { line: line_no, message };
        let rec: TemplateRecord = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        let body = parse_template(&rec.body).map_err(|e| fail(e.to_string()))?;
        if rec.max_variants == Some(0) {
            return Err(fail("max_variants must be positive".into()));
        }
        out.push(Template {
            id: rec.id.unwrap_or_else(|| format!("t{line_no}")),
            category: rec.category,
            visibility: rec.visibility,
            body,
            msel_event: rec.msel_event,
            geo_region: rec.geo_bbox,
            max_variants: rec.max_variants,
        });
    }
    Ok(out)
}

pub fn load_rewrite_rules(input: &str) -> Result<Vec<RewriteRule>, TemplateFileError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rule: RewriteRule = serde_json::from_str(line)
            .map_err(|e| TemplateFileError::Line { line: idx + 1, message: e.to_string() })?;
        if rule.pattern.is_empty() {
            return Err(TemplateFileError::Line { line: idx + 1, message: "empty pattern".into() });
        }
        out.push(rule);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const EXAMPLE5: &str =
        "(#bananasplits / #hobartarena) (We enjoyed with kids / kids loved) the concert at Hobart last night";

    fn tpl(src: &str) -> Template {
        Template::parse("x", "Fear for children", VisibilityLevel::Medium, src).unwrap()
    }

    #[test]
    fn example5_groups() {
        let body = parse_template(EXAMPLE5).unwrap();
        assert_eq!(body.group_sizes(), vec![2, 2]);
    }

    #[test]
    fn example5_four_messages() {
        let drafts = expand_template(&tpl(EXAMPLE5)).unwrap();
        let texts: Vec<&str> = drafts.iter().map(|d| d.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "#bananasplits We enjoyed with kids the concert at Hobart last night",
                "#bananasplits kids loved the concert at Hobart last night",
                "#hobartarena We enjoyed with kids the concert at Hobart last night",
                "#hobartarena kids loved the concert at Hobart last night",
            ]
        );
        assert!(drafts
            .iter()
            .all(|d| d.visibility == VisibilityLevel::Medium && d.category.as_deref() == Some("Fear for children")));
    }

    #[test]
    fn plain_literal() {
        let body = parse_template("no groups here").unwrap();
        assert_eq!(body.segments(), &[Segment::Literal("no groups here".into())]);
        let drafts = expand_template(&tpl("no groups here")).unwrap();
        assert_eq!(drafts.len(), 1);
        assert_eq!(drafts[0].text, "no groups here");
    }

    #[test]
    fn unbalanced_reports_open_offset() {
        let e = parse_template("broken (a / b").unwrap_err();
        assert_eq!(e, ParseError { offset: 7, kind: ParseErrorKind::Unclosed });
    }

    #[test]
    fn other_parse_errors() {
        assert_eq!(parse_template("x (only)").unwrap_err().kind, ParseErrorKind::TooFewOptions(1));
        assert_eq!(
            parse_template("a ) b").unwrap_err(),
            ParseError { offset: 2, kind: ParseErrorKind::UnmatchedClose }
        );
        assert_eq!(parse_template("(a / (b / c))").unwrap_err().kind, ParseErrorKind::Nested);
        assert_eq!(parse_template("(a /  / c)").unwrap_err().kind, ParseErrorKind::EmptyOption);
        assert_eq!(parse_template("tail \\").unwrap_err().kind, ParseErrorKind::DanglingEscape);
    }

    #[test]
    fn escapes_produce_literals() {
        let body = parse_template(r"call \(937\) 555 (now / today) and\/or (a\/b / c)").unwrap();
        assert_eq!(body.group_sizes(), vec![2, 2]);
        assert_eq!(body.render(&[1, 0]), "call (937) 555 today and/or a/b");
    }

    #[test]
    fn sizes_2_3_2_give_12_distinct() {
        let t = tpl("(a / b) x (c / d / e) y (f / g)");
        let drafts = expand_template(&t).unwrap();
        // Oracle: nested loops over the option lists.
        let mut expected = Vec::new();
        for p in ["a", "b"] {
            for q in ["c", "d", "e"] {
                for r in ["f", "g"] {
                    expected.push(format!("{p} x {q} y {r}"));
                }
            }
        }
        let got: Vec<String> = drafts.into_iter().map(|d| d.text).collect();
        assert_eq!(got, expected);
        assert_eq!(got.iter().collect::<BTreeSet<_>>().len(), 12);
    }

    #[test]
    fn overlength_names_indices() {
        let long = "y".repeat(130);
        let t = tpl(&format!("{long} (ok / this option is too long)"));
        assert_eq!(expand_template(&t), Err(ExpansionError::Overlength { indices: vec![1], chars: 131 + 23 }));
        assert!(
            matches!(t.body.check_lengths(), Err(ExpansionError::Overlength { indices, .. }) if indices == vec![1])
        );
    }

    #[test]
    fn expansion_limit() {
        let t = tpl(&"(a / b / c / d / e / f / g / h / i / j)".repeat(6));
        assert_eq!(expand_template(&t), Err(ExpansionError::TooManyVariants(1_000_000)));
    }

    #[test]
    fn rewrite_reference_rule() {
        let rules = vec![RewriteRule::new("#bostonbombing", "#daytonbombing")];
        assert_eq!(apply_rewrite_rules("RT #bostonbombing update", &rules), "RT #daytonbombing update");
    }

    #[test]
    fn rewrite_identity_and_single_pass() {
        assert_eq!(apply_rewrite_rules("anything at all", &[]), "anything at all");
        // Leftmost match at 0 consumes "aa"; the remaining "a" does not match.
        assert_eq!(apply_rewrite_rules("aaa", &[RewriteRule::new("aa", "b")]), "ba");
        // Replacement text is not rescanned by the same rule.
        assert_eq!(apply_rewrite_rules("ab", &[RewriteRule::new("a", "aa")]), "aab");
    }

    #[test]
    fn rewrite_chained_and_case_insensitive() {
        let rules = vec![
            RewriteRule { pattern: "boston".into(), replacement: "dayton".into(), case_insensitive: true },
            RewriteRule::new("dayton marathon", "dayton convention"),
        ];
        assert_eq!(apply_rewrite_rules("BOSTON marathon, Boston", &rules), "dayton convention, dayton");
        assert_eq!(apply_rewrite_rules("Boston Marathon", &rules), "dayton Marathon");
        // `$` in replacements is literal.
        let r = RewriteRule { pattern: "x".into(), replacement: "$1".into(), case_insensitive: true };
        assert_eq!(apply_rewrite_rules("x", &[r]), "$1");
    }

    #[test]
    fn template_file_loading() {
        let input = concat!(
            r#"{"category": "Prayer", "visibility": "low", "body": "(Praying / Thoughts) for Dayton"}"#,
            "\n\n",
            r#"{"id": "er1", "category": "Injured", "visibility": "high", "body": "at the ER", "msel_event": "E1"}"#,
        );
        let ts = load_templates(input).unwrap();
        assert_eq!(ts[0].id, "t1");
        assert_eq!(ts[0].source_class(), SourceClass::ConstructedGeneric);
        assert_eq!(ts[1].id, "er1");
        assert_eq!(ts[1].source_class(), SourceClass::ConstructedMsel);

        let bad = r#"{"category": "P", "visibility": "low", "body": "(a / b"}"#;
        assert!(matches!(load_templates(bad), Err(TemplateFileError::Line { line: 1, .. })));

        let rules = load_rewrite_rules(r#"{"pattern": "a", "replacement": "b", "ci": true}"#).unwrap();
        assert!(rules[0].case_insensitive);
    }

    fn arb_template() -> impl Strategy<Value = (Vec<String>, Vec<Vec<String>>)> {
        // literals[0] group[0] literals[1] ... group[n-1] literals[n]
        (0usize..=4).prop_flat_map(|n| {
            (
                proptest::collection::vec("[a-z ]{0,6}", n + 1),
                proptest::collection::vec(proptest::collection::vec("[a-z#]{1,5}", 2..=4), n),
            )
        })
    }

    fn source_of(lits: &[String], groups: &[Vec<String>]) -> String {
        let mut src = lits[0].clone();
        for (g, lit) in groups.iter().zip(&lits[1..]) {
            src.push('(');
            src.push_str(&g.join(" / "));
            src.push(')');
            src.push_str(lit);
        }
        src
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn expansion_matches_brute_force((lits, groups) in arb_template()) {
            let src = source_of(&lits, &groups);
            let t = Template::parse("p", "c", VisibilityLevel::Low, &src).unwrap();
            // Brute force: recursive cartesian product rendered straight from the pieces.
            fn walk(lits: &[String], groups: &[Vec<String>], acc: String, out: &mut Vec<String>) {
                match groups.split_first() {
                    None => out.push(acc),
                    Some((g, rest)) => {
                        for opt in g {
                            walk(&lits[1..], rest, format!("{acc}{opt}{}", lits[1]), out);
                        }
                    }
                }
            }
            let mut expected = Vec::new();
            walk(&lits, &groups, lits[0].clone(), &mut expected);
            let expected_count: usize = groups.iter().map(Vec::len).product();
            prop_assert_eq!(expected.len(), expected_count);
            match expand_template(&t) {
                Ok(drafts) => {
                    let got: Vec<String> = drafts.into_iter().map(|d| d.text).collect();
                    prop_assert_eq!(got, expected);
                }
                Err(ExpansionError::Empty { .. }) => {
                    prop_assert!(expected.iter().any(|e| e.is_empty()));
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn variants_differ_only_inside_groups((lits, groups) in arb_template(), pick in any::<u64>()) {
            let src = source_of(&lits, &groups);
            let body = parse_template(&src).unwrap();
            let count = body.variant_count();
            let n = pick % count;
            let indices = body.indices_of(n);
            let rendered = body.render(&indices);
            // Substitute back into the source text, splicing from the right.
            let mut spliced = src.clone();
            let spans: Vec<(Range<usize>, &AlternationGroup)> = body
                .segments()
                .iter()
                .filter_map(|s| match s {
                    Segment::Group { group, span } => Some((span.clone(), group)),
                    _ => None,
                })
                .collect();
            for (k, (span, group)) in spans.iter().enumerate().rev() {
                spliced.replace_range(span.clone(), &group.options()[indices[k]]);
            }
            prop_assert_eq!(spliced, rendered);
        }

        #[test]
        fn disjoint_rules_commute(
            text in "[abcxyz]{0,40}",
            perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
        ) {
            // Patterns over disjoint alphabets, replacements over digits.
            let rules = [
                RewriteRule::new("ab", "1"),
                RewriteRule::new("c", "22"),
                RewriteRule::new("xyz", "3"),
            ];
            let base = apply_rewrite_rules(&text, &rules);
            let permuted: Vec<RewriteRule> = perm.iter().map(|&i| rules[i].clone()).collect();
            prop_assert_eq!(apply_rewrite_rules(&text, &permuted), base);
        }
    }
}
