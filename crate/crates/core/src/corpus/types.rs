use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geo::{BoundingBox, GeoPoint};
use super::text::{self, TextError};

/// Message prominence. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibilityLevel {
    Low,
    Medium,
    High,
}

impl VisibilityLevel {
    /// Highest first.
    pub const ALL: [VisibilityLevel; 3] = [Self::High, Self::Medium, Self::Low];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::High => "high",
            Self::Medium => "medium",
            Self::Low => "low",
        }
    }
}

impl fmt::Display for VisibilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VisibilityLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" | "h" => Ok(Self::High),
            "medium" | "m" => Ok(Self::Medium),
            "low" | "l" => Ok(Self::Low),
            other => Err(format!("unknown visibility level {other:?}")),
        }
    }
}

/// One value per visibility level. Serializes as `{high, medium, low}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerVisibility<T> {
    pub high: T,
    pub medium: T,
    pub low: T,
}

impl<T: Copy> PerVisibility<T> {
    pub fn new(high: T, medium: T, low: T) -> Self {
        Self { high, medium, low }
    }

    pub fn get(&self, level: VisibilityLevel) -> T {
        match level {
            VisibilityLevel::High => self.high,
            VisibilityLevel::Medium => self.medium,
            VisibilityLevel::Low => self.low,
        }
    }

    pub fn get_mut(&mut self, level: VisibilityLevel) -> &mut T {
        match level {
            VisibilityLevel::High => &mut self.high,
            VisibilityLevel::Medium => &mut self.medium,
            VisibilityLevel::Low => &mut self.low,
        }
    }
}

/// Where a message came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceClass {
    Background,
    Authoritative,
    GhostRetweet,
    ConstructedMsel,
    ConstructedGeneric,
    ControllerInjection,
}

impl SourceClass {
    pub const ALL: [SourceClass; 6] = [
        Self::Background,
        Self::Authoritative,
        Self::GhostRetweet,
        Self::ConstructedMsel,
        Self::ConstructedGeneric,
        Self::ControllerInjection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Background => "background",
            Self::Authoritative => "authoritative",
            Self::GhostRetweet => "ghost_retweet",
            Self::ConstructedMsel => "constructed_msel",
            Self::ConstructedGeneric => "constructed_generic",
            Self::ControllerInjection => "controller_injection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountKind {
    Pio,
    Ghost,
    Citizen,
    Controller,
}

pub const MAX_HANDLE_CHARS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccountError {
    #[error("handle is empty")]
    EmptyHandle,
    #[error("handle {0:?} is longer than {MAX_HANDLE_CHARS} characters")]
    HandleTooLong(String),
    #[error("handle {0:?} contains whitespace")]
    HandleWhitespace(String),
}

pub fn validate_handle(handle: &str) -> Result<(), AccountError> {
    if handle.is_empty() {
        return Err(AccountError::EmptyHandle);
    }
    if handle.chars().count() > MAX_HANDLE_CHARS {
        return Err(AccountError::HandleTooLong(handle.to_string()));
    }
    if handle.chars().any(char::is_whitespace) {
        return Err(AccountError::HandleWhitespace(handle.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub handle: String,
    pub kind: AccountKind,
    pub visibility: VisibilityLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_url: Option<String>,
}

impl Account {
    pub fn new(
        handle: impl Into<String>,
        kind: AccountKind,
        visibility: VisibilityLevel,
    ) -> Result<Self, AccountError> {
        let handle = handle.into();
        validate_handle(&handle)?;
        Ok(Self { handle, kind, visibility, profile_url: None })
    }

    pub fn with_profile_url(mut self, url: impl Into<String>) -> Self {
        self.profile_url = Some(url.into());
        self
    }
}

/// Message content before it is timed, attributed and numbered.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroblogDraft {
    pub text: String,
    pub visibility: VisibilityLevel,
    pub source: SourceClass,
    pub geo: Option<GeoPoint>,
    pub retweet_of: Option<u64>,
    pub category: Option<String>,
}

impl MicroblogDraft {
    pub fn new(text: impl Into<String>, visibility: VisibilityLevel, source: SourceClass) -> Self {
        Self { text: text.into(), visibility, source, geo: None, retweet_of: None, category: None }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MicroblogError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("retweet_of {parent} must be smaller than id {id}")]
    RetweetOrder { id: u64, parent: u64 },
    #[error("hashtags {stored:?} do not match text-derived {derived:?}")]
    HashtagMismatch { stored: Vec<String>, derived: Vec<String> },
    #[error(transparent)]
    Author(#[from] AccountError),
}

/// One message of at most 140 characters. `hashtags` is always derived from `text`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microblog {
    pub id: u64,
    pub scenario_time: f64,
    pub author: String,
    pub text: String,
    pub hashtags: Vec<String>,
    pub visibility: VisibilityLevel,
    pub source: SourceClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl Microblog {
    pub fn from_draft(
        id: u64,
        scenario_time: f64,
        author: impl Into<String>,
        draft: MicroblogDraft,
    ) -> Result<Self, MicroblogError> {
        let author = author.into();
        validate_handle(&author)?;
        let hashtags = text::validate_microblog(&draft.text)?;
        if let Some(parent) = draft.retweet_of {
            if parent >= id {
                return Err(MicroblogError::RetweetOrder { id, parent });
            }
        }
        Ok(Self {
            id,
            scenario_time,
            author,
            text: draft.text,
            hashtags,
            visibility: draft.visibility,
            source: draft.source,
            geo: draft.geo,
            retweet_of: draft.retweet_of,
            category: draft.category,
        })
    }

    /// Re-checks every invariant; used on data read back from files.
    pub fn validate(&self) -> Result<(), MicroblogError> {
        validate_handle(&self.author)?;
        let derived = text::validate_microblog(&self.text)?;
        if derived != self.hashtags {
            return Err(MicroblogError::HashtagMismatch { stored: self.hashtags.clone(), derived });
        }
        if let Some(parent) = self.retweet_of {
            if parent >= self.id {
                return Err(MicroblogError::RetweetOrder { id: self.id, parent });
            }
        }
        Ok(())
    }

    pub fn to_draft(&self) -> MicroblogDraft {
        MicroblogDraft {
            text: self.text.clone(),
            visibility: self.visibility,
            source: self.source,
            geo: self.geo,
            retweet_of: self.retweet_of,
            category: self.category.clone(),
        }
    }
}

/// Planned size of one semantic category, split by visibility level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub total: u64,
    #[serde(default)]
    pub high: u64,
    #[serde(default)]
    pub medium: u64,
    #[serde(default)]
    pub low: u64,
}

impl CategorySpec {
    pub fn new(name: impl Into<String>, total: u64, high: u64, medium: u64, low: u64) -> Self {
        Self { name: name.into(), total, high, medium, low }
    }

    /// Per-level quotas. The component counts are authoritative over `total`.
    pub fn quota(&self) -> PerVisibility<u64> {
        PerVisibility::new(self.high, self.medium, self.low)
    }

    pub fn component_sum(&self) -> u64 {
        self.high + self.medium + self.low
    }
}

pub const DEFAULT_BACKGROUND_FRACTION: f64 = 0.76;
/// 4.5 hours.
pub const DEFAULT_EXERCISE_SPAN: f64 = 16_200.0;

fn default_background_fraction() -> f64 {
    DEFAULT_BACKGROUND_FRACTION
}

fn default_exercise_span() -> f64 {
    DEFAULT_EXERCISE_SPAN
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("background_fraction_target {0} outside [0, 1]")]
    Fraction(f64),
    #[error("username_pool is empty")]
    EmptyPool,
    #[error("exercise_span {0} must be positive")]
    Span(f64),
    #[error("category {0:?} listed twice")]
    DuplicateCategory(String),
    #[error("username pool: {0}")]
    Handle(#[from] AccountError),
    #[error("malformed manifest: {0}")]
    Json(String),
}

/// Corpus-wide configuration: category quotas, background share, author pool and region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub categories: Vec<CategorySpec>,
    #[serde(default = "default_background_fraction")]
    pub background_fraction_target: f64,
    pub username_pool: Vec<String>,
    pub bbox: BoundingBox,
    /// Scenario seconds covered by the compiled stream.
    #[serde(default = "default_exercise_span")]
    pub exercise_span: f64,
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if !(0.0..=1.0).contains(&self.background_fraction_target) {
            return Err(ManifestError::Fraction(self.background_fraction_target));
        }
        if self.username_pool.is_empty() {
            return Err(ManifestError::EmptyPool);
        }
        if !(self.exercise_span > 0.0 && self.exercise_span.is_finite()) {
            return Err(ManifestError::Span(self.exercise_span));
        }
        for h in &self.username_pool {
            validate_handle(h)?;
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.categories {
            if !seen.insert(c.name.as_str()) {
                return Err(ManifestError::DuplicateCategory(c.name.clone()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let m: Self = serde_json::from_str(text).map_err(|e| ManifestError::Json(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn category(&self, name: &str) -> Option<&CategorySpec> {
        self.categories.iter().find(|c| c.name == name)
    }
}
