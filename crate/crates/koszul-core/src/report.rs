//! Check results in a serialization-friendly shape.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub status: Status,
    pub witness: Option<String>,
    pub seed: u64,
    pub window: u32,
    pub millis: u64,
}

impl Report {
    pub fn pass(check: impl Into<String>) -> Report {
        Report {
            check: check.into(),
            status: Status::Pass,
            witness: None,
            seed: 0,
            window: crate::superalgebra::DEFAULT_WINDOW,
            millis: 0,
        }
    }

    pub fn fail(check: impl Into<String>, witness: impl Into<String>) -> Report {
        Report {
            status: Status::Fail,
            witness: Some(witness.into()),
            ..Report::pass(check)
        }
    }

    pub fn skipped(check: impl Into<String>, why: impl Into<String>) -> Report {
        Report {
            status: Status::Skipped,
            witness: Some(why.into()),
            ..Report::pass(check)
        }
    }

    /// Pass when `witness` is `None`.
    pub fn from_witness(check: impl Into<String>, witness: Option<String>) -> Report {
        match witness {
            None => Report::pass(check),
            Some(w) => Report::fail(check, w),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Report {
        self.seed = seed;
        self
    }

    pub fn with_window(mut self, window: u32) -> Report {
        self.window = window;
        self
    }

    pub fn with_millis(mut self, millis: u64) -> Report {
        self.millis = millis;
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Overall status of a list: fail iff any member fails.
pub fn overall(reports: &[Report]) -> Status {
    if reports.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

/// Sort by check id so output is independent of scheduling.
pub fn canonical_order(reports: &mut [Report]) {
    reports.sort_by(|a, b| a.check.cmp(&b.check));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_status() {
        assert_eq!(overall(&[]), Status::Pass);
        let r = vec![Report::pass("a"), Report::fail("b", "x")];
        assert_eq!(overall(&r), Status::Fail);
        assert_eq!(overall(&r[..1]), Status::Pass);
    }
}
