//! Alignment-audit bookkeeping: per-record grades with error multisets,
//! tallied into the three-way alignment counts plus per-error and
//! per-subtype counts.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("record `{0}` is graded perfect but carries error tags")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentGrade {
    Zero,
    Partial,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// e.g. left leg in the text, right leg in the motion.
    Inversion,
    /// Partial texts not matching motion clips.
    Mismatch,
    /// Stating more than the motion performs.
    Redundancy,
    /// Lacking descriptions of motion clips.
    Deficiency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSubtype {
    BeginningPose,
    EndingPose,
    InsufficientRepetition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subtype: Option<ErrorSubtype>,
}

/// One audited text-motion pair. A pair may carry several errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub record_id: String,
    pub alignment: AlignmentGrade,
    #[serde(default)]
    pub errors: Vec<AuditEntry>,
}

/// Tally in the three-block table layout: alignment counts, error counts,
/// subtype counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditSummary {
    pub alignment: BTreeMap<AlignmentGrade, usize>,
    pub errors: BTreeMap<ErrorKind, usize>,
    pub subtypes: BTreeMap<ErrorSubtype, usize>,
}

impl AuditSummary {
    pub fn alignment_count(&self, grade: AlignmentGrade) -> usize {
        self.alignment.get(&grade).copied().unwrap_or(0)
    }

    pub fn error_count(&self, kind: ErrorKind) -> usize {
        self.errors.get(&kind).copied().unwrap_or(0)
    }

    pub fn subtype_count(&self, sub: ErrorSubtype) -> usize {
        self.subtypes.get(&sub).copied().unwrap_or(0)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "alignment  zero : partial : perfect = {} : {} : {}\n",
            self.alignment_count(AlignmentGrade::Zero),
            self.alignment_count(AlignmentGrade::Partial),
            self.alignment_count(AlignmentGrade::Perfect),
        ));
        out.push_str(&format!(
            "errors     inversion {} | mismatch {} | redundancy {} | deficiency {}\n",
            self.error_count(ErrorKind::Inversion),
            self.error_count(ErrorKind::Mismatch),
            self.error_count(ErrorKind::Redundancy),
            self.error_count(ErrorKind::Deficiency),
        ));
        out.push_str(&format!(
            "subtypes   beginning pose {} | ending pose {} | insufficient repetition {}\n",
            self.subtype_count(ErrorSubtype::BeginningPose),
            self.subtype_count(ErrorSubtype::EndingPose),
            self.subtype_count(ErrorSubtype::InsufficientRepetition),
        ));
        out
    }
}

/// Tallies audits. Perfect records must carry no errors; error tags on
/// zero-alignment records are ignored (the pair as a whole failed).
pub fn tally_audits(audits: &[AuditRecord]) -> Result<AuditSummary, AuditError> {
    let mut summary = AuditSummary::default();
    for audit in audits {
        if audit.alignment == AlignmentGrade::Perfect && !audit.errors.is_empty() {
            return Err(AuditError::InvariantViolation(audit.record_id.clone()));
        }
        *summary.alignment.entry(audit.alignment).or_insert(0) += 1;
        if audit.alignment == AlignmentGrade::Partial {
            for entry in &audit.errors {
                *summary.errors.entry(entry.kind).or_insert(0) += 1;
                if let Some(sub) = entry.subtype {
                    *summary.subtypes.entry(sub).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(summary)
}

/// Builds a deterministic 100-record audit fixture with the reference
/// tallies: alignment 2 : 68 : 30; errors inversion 26, mismatch 32,
/// redundancy 22 (subtypes: beginning pose 8, ending pose 12), deficiency
/// 11 (subtype: insufficient repetition 5).
pub fn reference_audit_fixture() -> Vec<AuditRecord> {
    let mut records = Vec::new();
    for i in 0..2 {
        records.push(AuditRecord {
            record_id: format!("zero_{i:02}"),
            alignment: AlignmentGrade::Zero,
            errors: Vec::new(),
        });
    }
    for i in 0..30 {
        records.push(AuditRecord {
            record_id: format!("perfect_{i:02}"),
            alignment: AlignmentGrade::Perfect,
            errors: Vec::new(),
        });
    }
    // 91 error instances spread over 68 partial records: every record
    // gets one, the first 23 get a second.
    let mut pool: Vec<AuditEntry> = Vec::new();
    for i in 0..26 {
        let _ = i;
        pool.push(AuditEntry { kind: ErrorKind::Inversion, subtype: None });
    }
    for _ in 0..32 {
        pool.push(AuditEntry { kind: ErrorKind::Mismatch, subtype: None });
    }
    for i in 0..22 {
        let subtype = if i < 8 {
            Some(ErrorSubtype::BeginningPose)
        } else if i < 20 {
            Some(ErrorSubtype::EndingPose)
        } else {
            None
        };
        pool.push(AuditEntry { kind: ErrorKind::Redundancy, subtype });
    }
    for i in 0..11 {
        let subtype = (i < 5).then_some(ErrorSubtype::InsufficientRepetition);
        pool.push(AuditEntry { kind: ErrorKind::Deficiency, subtype });
    }
    let mut partials: Vec<AuditRecord> = (0..68)
        .map(|i| AuditRecord {
            record_id: format!("partial_{i:02}"),
            alignment: AlignmentGrade::Partial,
            errors: Vec::new(),
        })
        .collect();
    for (i, entry) in pool.into_iter().enumerate() {
        partials[i % 68].errors.push(entry);
    }
    records.extend(partials);
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_fixture_reproduces_the_tallies() {
        let summary = tally_audits(&reference_audit_fixture()).unwrap();
        assert_eq!(summary.alignment_count(AlignmentGrade::Zero), 2);
        assert_eq!(summary.alignment_count(AlignmentGrade::Partial), 68);
        assert_eq!(summary.alignment_count(AlignmentGrade::Perfect), 30);
        assert_eq!(summary.error_count(ErrorKind::Inversion), 26);
        assert_eq!(summary.error_count(ErrorKind::Mismatch), 32);
        assert_eq!(summary.error_count(ErrorKind::Redundancy), 22);
        assert_eq!(summary.error_count(ErrorKind::Deficiency), 11);
        assert_eq!(summary.subtype_count(ErrorSubtype::BeginningPose), 8);
        assert_eq!(summary.subtype_count(ErrorSubtype::EndingPose), 12);
        assert_eq!(summary.subtype_count(ErrorSubtype::InsufficientRepetition), 5);
    }

    #[test]
    fn empty_audit_list_is_all_zeros() {
        let summary = tally_audits(&[]).unwrap();
        assert_eq!(summary.alignment_count(AlignmentGrade::Partial), 0);
        assert_eq!(summary.error_count(ErrorKind::Inversion), 0);
    }

    #[test]
    fn perfect_with_errors_is_an_invariant_violation() {
        let bad = AuditRecord {
            record_id: "r1".into(),
            alignment: AlignmentGrade::Perfect,
            errors: vec![AuditEntry { kind: ErrorKind::Mismatch, subtype: None }],
        };
        assert_eq!(
            tally_audits(&[bad]).unwrap_err(),
            AuditError::InvariantViolation("r1".into())
        );
    }

    #[test]
    fn zero_alignment_errors_are_ignored_in_tallies() {
        let rec = AuditRecord {
            record_id: "z".into(),
            alignment: AlignmentGrade::Zero,
            errors: vec![AuditEntry { kind: ErrorKind::Inversion, subtype: None }],
        };
        let summary = tally_audits(&[rec]).unwrap();
        assert_eq!(summary.error_count(ErrorKind::Inversion), 0);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = reference_audit_fixture();
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        let back: Vec<AuditRecord> =
            lines.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(records, back);
    }

    #[test]
    fn table_renders_reference_ratio() {
        let summary = tally_audits(&reference_audit_fixture()).unwrap();
        let table = summary.render_table();
        assert!(table.contains("2 : 68 : 30"));
        assert!(table.contains("inversion 26"));
    }
}
