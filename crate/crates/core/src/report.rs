use serde::{Deserialize, Serialize};

/// One named check: the observed quantity, what it is compared against and
/// whether it passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub observed: f64,
    pub bound_or_target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Passes when `observed <= bound + tolerance`.
    pub fn upper(name: &str, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            observed,
            bound_or_target: bound,
            tolerance,
            pass: observed.is_finite() && observed <= bound + tolerance,
        }
    }

    /// Passes when `observed >= bound - tolerance`.
    pub fn lower(name: &str, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            observed,
            bound_or_target: bound,
            tolerance,
            pass: observed.is_finite() && observed >= bound - tolerance,
        }
    }

    /// Passes when `|observed - target| <= tolerance`.
    pub fn near(name: &str, observed: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            observed,
            bound_or_target: target,
            tolerance,
            pass: (observed - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub nr: usize,
    pub ntheta: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl VerificationReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}
