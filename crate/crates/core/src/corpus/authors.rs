use rand::Rng;
use thiserror::Error;

use super::types::{Microblog, MicroblogDraft, MicroblogError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuthorError {
    #[error("username pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Message(#[from] MicroblogError),
}

/// Uniform draw from the pool. Deterministic for a given generator state.
pub fn draw_author<'a, R: Rng + ?Sized>(pool: &'a [String], rng: &mut R) -> Result<&'a str, AuthorError> {
    if pool.is_empty() {
        return Err(AuthorError::EmptyPool);
    }
    Ok(&pool[rng.gen_range(0..pool.len())])
}

/// Attributes a draft to a uniformly drawn pool member.
pub fn assign_author<R: Rng + ?Sized>(
    draft: MicroblogDraft,
    id: u64,
    scenario_time: f64,
    pool: &[String],
    rng: &mut R,
) -> Result<Microblog, AuthorError> {
    let author = draw_author(pool, rng)?.to_string();
    Ok(Microblog::from_draft(id, scenario_time, author, draft)?)
}
