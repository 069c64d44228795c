//! Check records and reports emitted by the verification routines.

use serde::Serialize;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    SkipOutOfWindow,
    UnprovedInSource,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// Equation or statement tag, e.g. "Eq.5.136".
    pub tag: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckRecord {
    pub fn pass(id: impl Into<String>, tag: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            tag: tag.into(),
            status: Status::Pass,
            witness: None,
        }
    }

    pub fn fail(id: impl Into<String>, tag: impl Into<String>, witness: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            tag: tag.into(),
            status: Status::Fail,
            witness: Some(witness.into()),
        }
    }

    pub fn skip(id: impl Into<String>, tag: impl Into<String>, witness: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            tag: tag.into(),
            status: Status::SkipOutOfWindow,
            witness: Some(witness.into()),
        }
    }

    pub fn check(id: impl Into<String>, tag: impl Into<String>, ok: bool, witness: &str) -> Self {
        if ok {
            CheckRecord::pass(id, tag)
        } else {
            CheckRecord::fail(id, tag, witness)
        }
    }

    pub fn from_cmp(
        id: impl Into<String>,
        tag: impl Into<String>,
        cmp: &crate::series::WindowCmp,
    ) -> Self {
        if cmp.equal {
            let mut r = CheckRecord::pass(id, tag);
            if cmp.skipped > 0 {
                r.witness = Some(format!(
                    "{} coefficients checked, {} out-of-window extractions skipped",
                    cmp.checked, cmp.skipped
                ));
            }
            r
        } else {
            CheckRecord::fail(id, tag, cmp.witness.clone().unwrap_or_default())
        }
    }

    /// For equalities whose two sides are finite log-polynomials.
    pub fn from_eq(
        id: impl Into<String>,
        tag: impl Into<String>,
        lhs: &crate::logpoly::LogPoly,
        rhs: &crate::logpoly::LogPoly,
    ) -> Self {
        if lhs == rhs {
            CheckRecord::pass(id, tag)
        } else {
            let diff = lhs.sub(rhs);
            let key = diff.terms.keys().next().cloned();
            CheckRecord::fail(
                id,
                tag,
                match key {
                    Some(k) => format!(
                        "first discrepancy at monomial {:?}: difference {:?}",
                        k,
                        diff.terms.get(&k).unwrap()
                    ),
                    None => "sides differ".into(),
                },
            )
        }
    }

    /// Mark a passing record as verified-but-unproved-in-source.
    pub fn annotate_unproved(mut self) -> Self {
        if self.status == Status::Pass {
            self.status = Status::UnprovedInSource;
        }
        self
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Report {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, rec: CheckRecord) {
        self.checks.push(rec);
    }

    pub fn extend(&mut self, recs: Vec<CheckRecord>) {
        self.checks.extend(recs);
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn n_failed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn n_passed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Pass)
            .count()
    }

    pub fn all_passed(&self) -> bool {
        self.n_failed() == 0
    }

    /// Deterministic ordering by (suite, id).
    pub fn sort(&mut self) {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
    }
}
