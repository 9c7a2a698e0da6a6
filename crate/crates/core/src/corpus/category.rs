//! Category bookkeeping checks and the reference category table.

use serde::{Deserialize, Serialize};

use super::types::CategorySpec;

/// Outcome of checking `total == high + medium + low`. Never an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub ok: bool,
    /// `total - (high + medium + low)`.
    pub discrepancy: i64,
    pub total: u64,
    pub component_sum: u64,
}

pub fn validate_category_spec(spec: &CategorySpec) -> ValidationReport {
    let sum = spec.component_sum();
    let discrepancy = spec.total as i64 - sum as i64;
    ValidationReport {
        name: spec.name.clone(),
        ok: discrepancy == 0,
        discrepancy,
        total: spec.total,
        component_sum: sum,
    }
}

pub fn validate_categories(specs: &[CategorySpec]) -> Vec<ValidationReport> {
    specs.iter().map(validate_category_spec).collect()
}

const TABLE1_JSON: &str = include_str!("../../fixtures/table1_categories.json");

/// The semantic categories of the reference exercise corpus, counts as published
/// (including the rows whose total disagrees with their components).
pub fn table1_categories() -> Vec<CategorySpec> {
    serde_json::from_str(TABLE1_JSON).expect("bundled category table is valid JSON")
}
