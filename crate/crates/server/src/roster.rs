use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use stimstream_core::corpus::{validate_handle, Account, AccountError, AccountKind, VisibilityLevel};
use thiserror::Error;

/// One credentialed or synthetic account known to the server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub handle: String,
    /// Absent for accounts that never log in (ghosts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
    pub kind: AccountKind,
    pub visibility: VisibilityLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_url: Option<String>,
}

impl RosterEntry {
    pub fn account(&self) -> Account {
        Account {
            handle: self.handle.clone(),
            kind: self.kind,
            visibility: self.visibility,
            profile_url: self.profile_url.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Roster {
    pub accounts: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RosterError {
    #[error("malformed roster: {0}")]
    Json(String),
    #[error("handle {0:?} appears twice")]
    Duplicate(String),
    #[error(transparent)]
    Handle(#[from] AccountError),
}

impl Roster {
    pub fn from_json(text: &str) -> Result<Self, RosterError> {
        let r: Self = serde_json::from_str(text).map_err(|e| RosterError::Json(e.to_string()))?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), RosterError> {
        let mut seen = HashSet::new();
        for a in &self.accounts {
            validate_handle(&a.handle)?;
            if !seen.insert(a.handle.as_str()) {
                return Err(RosterError::Duplicate(a.handle.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, handle: &str) -> Option<&RosterEntry> {
        self.accounts.iter().find(|a| a.handle == handle)
    }

    pub fn ghosts(&self) -> Vec<Account> {
        self.accounts.iter().filter(|a| a.kind == AccountKind::Ghost).map(RosterEntry::account).collect()
    }

    /// Six agency accounts, one controller and `ghosts` ghost accounts. Passwords are the
    /// handle followed by `-pass`.
    pub fn example(ghosts: usize) -> Self {
        let agency = [
            ("city", VisibilityLevel::High),
            ("county", VisibilityLevel::High),
            ("redcross", VisibilityLevel::Medium),
            ("hospital", VisibilityLevel::Medium),
            ("fire", VisibilityLevel::Medium),
            ("health", VisibilityLevel::Low),
        ];
        let mut accounts: Vec<RosterEntry> = agency
            .iter()
            .map(|(h, v)| RosterEntry {
                handle: h.to_string(),
                password: Some(format!("{h}-pass")),
                kind: AccountKind::Pio,
                visibility: *v,
                profile_url: Some(format!("https://example.org/agencies/{h}")),
            })
            .collect();
        accounts.push(RosterEntry {
            handle: "control".into(),
            password: Some("control-pass".into()),
            kind: AccountKind::Controller,
            visibility: VisibilityLevel::Low,
            profile_url: None,
        });
        for i in 1..=ghosts {
            accounts.push(RosterEntry {
                handle: format!("citizen_{i:03}"),
                password: None,
                kind: AccountKind::Ghost,
                visibility: VisibilityLevel::Low,
                profile_url: None,
            });
        }
        Self { accounts }
    }
}
