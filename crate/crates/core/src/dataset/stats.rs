//! Corpus statistics over fine texts (tags stripped).
//!
//! Tokenization and POS tagging sit behind an interface; CI uses the
//! bundled deterministic rule tagger, real-tagger numbers are
//! documentation-only.

use super::CorpusRecord;
use crate::stepmark::strip_steps;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosTag {
    Verb,
    Noun,
    Adposition,
    Pronoun,
    Other,
}

/// Tokenize + part-of-speech contract used by [`compute_stats`].
pub trait PosTagger {
    fn tokenize(&self, text: &str) -> Vec<String>;
    fn tag(&self, token: &str) -> PosTag;
}

/// Deterministic lexicon tagger for tests and CI. Tokens are lowercased
/// whitespace words with sentence punctuation split off; tags come from
/// small word lists covering the motion domain.
#[derive(Debug, Default, Clone)]
pub struct RuleTagger;

const VERBS: &[&str] = &[
    "walks", "walk", "walking", "jumps", "jump", "squats", "squat", "bends", "bend", "lifts",
    "lift", "raises", "raise", "holds", "hold", "kicks", "kick", "stands", "stand", "swings",
    "swing", "plants", "lowers", "lower", "extends", "extend", "shifts", "shift", "moves",
    "move", "begins", "begin", "stays", "stay", "comes", "remain", "remains", "reach",
    "reaches", "returning", "alternating", "keeping",
];
const NOUNS: &[&str] = &[
    "man", "men", "person", "arm", "arms", "leg", "legs", "foot", "feet", "knee", "knees",
    "hip", "hips", "head", "torso", "ground", "hand", "hands", "side", "sides", "position",
    "pose", "weight", "heels", "body", "shoulder", "ceiling", "height", "step", "steps",
    "balance", "target", "figure",
];
const ADPOSITIONS: &[&str] = &[
    "up", "down", "above", "below", "onto", "on", "in", "into", "towards", "toward", "with",
    "at", "of", "to", "off", "forward", "back", "from", "under", "over",
];
const PRONOUNS: &[&str] =
    &["he", "she", "it", "they", "his", "her", "its", "their", "him", "them", "himself"];

impl PosTagger for RuleTagger {
    fn tokenize(&self, text: &str) -> Vec<String> {
        crate::textenc::tokenize_words(text)
    }

    fn tag(&self, token: &str) -> PosTag {
        if VERBS.contains(&token) {
            PosTag::Verb
        } else if NOUNS.contains(&token) {
            PosTag::Noun
        } else if ADPOSITIONS.contains(&token) {
            PosTag::Adposition
        } else if PRONOUNS.contains(&token) {
            PosTag::Pronoun
        } else {
            PosTag::Other
        }
    }
}

/// Corpus statistics over fine descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_motions: usize,
    pub n_descriptions: usize,
    pub vocab_size: usize,
    pub ave_len: f64,
    pub n_verbs: usize,
    pub n_nouns: usize,
    pub n_adpositions: usize,
    pub n_pronouns: usize,
}

impl CorpusStats {
    pub fn render_table(&self) -> String {
        format!(
            "{:<14} {:>10} {:>14} {:>8} {:>8} {:>8} {:>8} {:>8}\n{:<14} {:>10} {:>14} {:>8.1} {:>8} {:>8} {:>8} {:>8}\n",
            "#Motions",
            "#Descr",
            "#Vocabulary",
            "AveLen",
            "#Verbs",
            "#Nouns",
            "#Adpos",
            "#Pron",
            self.n_motions,
            self.n_descriptions,
            self.vocab_size,
            self.ave_len,
            self.n_verbs,
            self.n_nouns,
            self.n_adpositions,
            self.n_pronouns,
        )
    }
}

/// Vocabulary and length statistics over the fine texts (tags stripped,
/// bodies joined). Permutation-invariant over records.
pub fn compute_stats(records: &[CorpusRecord], tagger: &dyn PosTagger) -> CorpusStats {
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    let mut motions: BTreeSet<&str> = BTreeSet::new();
    let mut total_tokens = 0usize;
    let mut counts = [0usize; 4];
    for record in records {
        motions.insert(record.motion_id.as_str());
        let joined = strip_steps(&record.fine).join(" ");
        let tokens = tagger.tokenize(&joined);
        total_tokens += tokens.len();
        for token in tokens {
            match tagger.tag(&token) {
                PosTag::Verb => counts[0] += 1,
                PosTag::Noun => counts[1] += 1,
                PosTag::Adposition => counts[2] += 1,
                PosTag::Pronoun => counts[3] += 1,
                PosTag::Other => {}
            }
            vocab.insert(token);
        }
    }
    let n_descriptions = records.len();
    CorpusStats {
        n_motions: motions.len(),
        n_descriptions,
        vocab_size: vocab.len(),
        ave_len: if n_descriptions == 0 { 0.0 } else { total_tokens as f64 / n_descriptions as f64 },
        n_verbs: counts[0],
        n_nouns: counts[1],
        n_adpositions: counts[2],
        n_pronouns: counts[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepmark::{Step, StepMarkedText};
    use std::path::PathBuf;

    fn record(id: &str, body: &str) -> CorpusRecord {
        CorpusRecord {
            motion_id: id.into(),
            motion_file: PathBuf::from(format!("{id}.json")),
            coarse: String::new(),
            fine: StepMarkedText::new(vec![Step::new(1, "pose", body).unwrap()]).unwrap(),
            mirrored: false,
            split: None,
        }
    }

    /// Hand-counted toy corpus: "the man walks." tokenizes to
    /// [the, man, walks, .] (4 tokens) and "he jumps up" to
    /// [he, jumps, up] (3 tokens); 7 distinct tokens, mean length 3.5.
    #[test]
    fn toy_corpus_matches_hand_count() {
        let records = vec![record("m1", "the man walks."), record("m2", "he jumps up")];
        let stats = compute_stats(&records, &RuleTagger);
        assert_eq!(stats.n_descriptions, 2);
        assert_eq!(stats.n_motions, 2);
        assert_eq!(stats.ave_len, 3.5);
        assert_eq!(stats.vocab_size, 7);
        assert_eq!(stats.n_verbs, 2); // walks, jumps
        assert_eq!(stats.n_nouns, 1); // man
        assert_eq!(stats.n_adpositions, 1); // up
        assert_eq!(stats.n_pronouns, 1); // he
    }

    #[test]
    fn empty_corpus_is_all_zeros() {
        let stats = compute_stats(&[], &RuleTagger);
        assert_eq!(stats.n_descriptions, 0);
        assert_eq!(stats.vocab_size, 0);
        assert_eq!(stats.ave_len, 0.0);
        assert_eq!(stats.n_verbs, 0);
    }

    #[test]
    fn stats_are_permutation_invariant() {
        let a = record("m1", "the man walks.");
        let b = record("m2", "he jumps up");
        let c = record("m3", "she raises her left arm");
        let forward = compute_stats(&[a.clone(), b.clone(), c.clone()], &RuleTagger);
        let backward = compute_stats(&[c, b, a], &RuleTagger);
        assert_eq!(forward, backward);
    }

    #[test]
    fn descriptions_of_one_motion_count_separately() {
        let records = vec![record("m1", "the man walks."), record("m1", "he walks")];
        let stats = compute_stats(&records, &RuleTagger);
        assert_eq!(stats.n_motions, 1);
        assert_eq!(stats.n_descriptions, 2);
    }

    #[test]
    fn table_renders_all_columns() {
        let stats = compute_stats(&[record("m1", "the man walks.")], &RuleTagger);
        let table = stats.render_table();
        assert!(table.contains("#Vocabulary"));
        assert!(table.contains("AveLen"));
    }
}
