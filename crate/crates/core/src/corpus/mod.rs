//! Domain types, background ingestion and category bookkeeping.

mod authors;
mod category;
mod geo;
mod ingest;
mod text;
mod types;

pub use authors::{assign_author, draw_author, AuthorError};
pub use category::{table1_categories, validate_categories, validate_category_spec, ValidationReport};
pub use geo::{haversine_m, BoundingBox, GeoCircle, GeoError, GeoPoint, EARTH_RADIUS_M, MAX_CIRCLE_RADIUS_M};
pub use ingest::{ingest_background, parse_background_lines, IngestOptions, ParsedRecords, RawRecord, Rejection};
pub use text::{
    char_len, check_length, extract_hashtags, hashtag_spans, retweet_text, validate_microblog, HashtagSpan, TextError,
    MAX_CHARS,
};
pub use types::{
    validate_handle, Account, AccountError, AccountKind, CategorySpec, CorpusManifest, ManifestError, Microblog,
    MicroblogDraft, MicroblogError, PerVisibility, SourceClass, VisibilityLevel, DEFAULT_BACKGROUND_FRACTION,
    DEFAULT_EXERCISE_SPAN, MAX_HANDLE_CHARS,
};
