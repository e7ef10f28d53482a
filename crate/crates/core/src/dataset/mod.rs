//! Corpus assembly: pairing fine texts with motions, mirroring
//! augmentation, motion-disjoint splits, corpus statistics, and
//! alignment-audit tallies.

mod audit;
mod stats;

pub use audit::{
    reference_audit_fixture, tally_audits, AlignmentGrade, AuditEntry, AuditError, AuditRecord,
    AuditSummary, ErrorKind, ErrorSubtype,
};
pub use stats::{compute_stats, CorpusStats, PosTag, PosTagger, RuleTagger};

use crate::motion::{
    load_motion, mirror_motion, save_motion, swap_lr_words, MotionError, MotionSequence,
    SchemaRegistry,
};
use crate::stepmark::{parse_stepmarks, serialize, CorpusLine, ParseError, StepMarkedText};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing motion for `{id}`: {path}")]
    MissingMotion { id: String, path: String },
    #[error("fine text of `{id}` does not parse: {source}")]
    ParseFailure { id: String, source: ParseError },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line: {0}")]
    Line(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One paired description/motion record.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    /// Motion id this record's descriptions belong to (mirror twins share
    /// the source id with a marker suffix).
    pub motion_id: String,
    pub motion_file: PathBuf,
    pub coarse: String,
    pub fine: StepMarkedText,
    pub mirrored: bool,
    pub split: Option<Split>,
}

impl CorpusRecord {
    /// The id motions group under when splitting: a mirrored twin follows
    /// its source.
    pub fn group_id(&self) -> &str {
        self.motion_id.strip_suffix("_mirror").unwrap_or(&self.motion_id)
    }
}

/// Reads expansion output (JSON Lines), checks every referenced motion
/// loads, and optionally adds mirrored twins (mirrored motion file written
/// next to the original with an `_mirror` stem suffix; lateral words
/// swapped in the coarse text and every step body).
pub fn build_corpus(
    expansion_jsonl: &Path,
    motion_root: &Path,
    mirror: bool,
    registry: &SchemaRegistry,
) -> Result<Vec<CorpusRecord>, DatasetError> {
    let text = std::fs::read_to_string(expansion_jsonl)?;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parsed: CorpusLine = serde_json::from_str(line)?;
        let motion_path = motion_root.join(&parsed.motion_file);
        if !motion_path.with_extension("json").exists() {
            return Err(DatasetError::MissingMotion {
                id: parsed.source_id.clone(),
                path: motion_path.display().to_string(),
            });
        }
        let (motion, sidecar) = load_motion(&motion_path)?;
        let mut fine = parse_stepmarks(&parsed.fine)
            .map_err(|source| DatasetError::ParseFailure { id: parsed.source_id.clone(), source })?;
        fine.coarse = Some(parsed.coarse.clone());
        fine.source_id = parsed.source_id.clone();
        records.push(CorpusRecord {
            motion_id: parsed.source_id.clone(),
            motion_file: motion_path.clone(),
            coarse: parsed.coarse.clone(),
            fine: fine.clone(),
            mirrored: false,
            split: None,
        });
        if mirror {
            let Some(schema) = registry.get(&sidecar.schema_id) else {
                return Err(DatasetError::Motion(MotionError::UnknownSchema(
                    sidecar.schema_id.clone(),
                )));
            };
            let twin_motion = mirror_motion(&motion, schema)?;
            let twin_id = format!("{}_mirror", parsed.source_id);
            let stem = motion_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| parsed.source_id.clone());
            let twin_path = motion_path.with_file_name(format!("{stem}_mirror.json"));
            save_motion(&twin_path, &twin_motion, &schema.skeleton)?;
            let twin_coarse = swap_lr_words(&parsed.coarse);
            let mut twin_fine = fine.clone();
            for step in &mut twin_fine.steps {
                step.body = swap_lr_words(&step.body);
            }
            twin_fine.coarse = Some(twin_coarse.clone());
            twin_fine.source_id = twin_id.clone();
            records.push(CorpusRecord {
                motion_id: twin_id,
                motion_file: twin_path,
                coarse: twin_coarse,
                fine: twin_fine,
                mirrored: true,
                split: None,
            });
        }
    }
    Ok(records)
}

/// Deterministic split by motion: every description of one motion (and
/// any mirror twin) lands on the same side.
pub fn split_corpus(
    records: &mut [CorpusRecord],
    test_fraction: f64,
    seed: u64,
) -> (usize, usize) {
    assert!(
        0.0 < test_fraction && test_fraction < 1.0,
        "test fraction must be in (0, 1)"
    );
    let mut groups: Vec<String> = Vec::new();
    for r in records.iter() {
        let g = r.group_id().to_string();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    groups.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let n_test = ((groups.len() as f64) * test_fraction).round() as usize;
    let n_test = n_test.clamp(1, groups.len().saturating_sub(1).max(1));
    let test_set: std::collections::BTreeSet<&String> = groups.iter().take(n_test).collect();
    let mut counts = (0usize, 0usize);
    for r in records.iter_mut() {
        if test_set.contains(&r.group_id().to_string()) {
            r.split = Some(Split::Test);
            counts.1 += 1;
        } else {
            r.split = Some(Split::Train);
            counts.0 += 1;
        }
    }
    counts
}

/// Motions grouped per split, counted at motion granularity.
pub fn split_motion_counts(records: &[CorpusRecord]) -> BTreeMap<Split, usize> {
    let mut seen: BTreeMap<Split, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        if let Some(split) = r.split {
            seen.entry(split).or_default().insert(r.motion_id.as_str());
        }
    }
    seen.into_iter().map(|(k, v)| (k, v.len())).collect()
}

/// Writes records back to the canonical JSON Lines form.
pub fn write_corpus_lines(records: &[CorpusRecord], path: &Path) -> Result<(), DatasetError> {
    use std::io::Write;
    let mut out = std::fs::File::create(path)?;
    for r in records {
        let line = CorpusLine {
            source_id: r.motion_id.clone(),
            coarse: r.coarse.clone(),
            fine: serialize(&r.fine),
            pseudocode: None,
            motion_file: r.motion_file.display().to_string(),
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

/// Loads a record's motion from disk.
pub fn load_record_motion(record: &CorpusRecord) -> Result<MotionSequence, DatasetError> {
    Ok(load_motion(&record.motion_file)?.0)
}
