//! Left-right mirroring of motions and texts.

use super::schema::FeatureSchema;
use super::{MotionError, MotionSequence};
use regex::Regex;
use std::sync::OnceLock;

/// Reflects a motion across the sagittal plane: lateral channels flip sign
/// and left/right joint channels are exchanged, per the schema's channel
/// map. Exact involution.
pub fn mirror_motion(
    m: &MotionSequence,
    schema: &FeatureSchema,
) -> Result<MotionSequence, MotionError> {
    if schema.id != m.schema_id || schema.dim != m.dim() {
        return Err(MotionError::UnknownSchema(m.schema_id.clone()));
    }
    let (perm, sign) = schema.mirror_map();
    let mut out = m.clone();
    for (f, row) in m.features.rows().into_iter().enumerate() {
        for c in 0..schema.dim {
            out.features[(f, c)] = sign[c] * row[perm[c]];
        }
    }
    Ok(out)
}

/// The lateral word families swapped by [`swap_lr_words`]; each entry swaps
/// with its partner in both directions, whole-word, case-preserving.
pub const LR_WORD_PAIRS: &[(&str, &str)] = &[
    ("left", "right"),
    ("leftward", "rightward"),
    ("leftwards", "rightwards"),
    ("leftmost", "rightmost"),
];

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z]+").unwrap())
}

fn apply_case(pattern: &str, word: &str) -> String {
    let chars: Vec<char> = pattern.chars().collect();
    if !chars.is_empty() && chars.iter().all(|c| c.is_uppercase()) && chars.len() > 1 {
        return word.to_uppercase();
    }
    if chars.first().is_some_and(|c| c.is_uppercase()) {
        let mut out = String::new();
        let mut it = word.chars();
        if let Some(first) = it.next() {
            out.extend(first.to_uppercase());
        }
        out.extend(it);
        return out;
    }
    word.to_string()
}

/// Whole-word, case-preserving simultaneous swap of the left/right token
/// families. A single pass makes the swap simultaneous, so the function is
/// an exact involution.
pub fn swap_lr_words(text: &str) -> String {
    word_re()
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let token = &caps[0];
            let lower = token.to_lowercase();
            for &(l, r) in LR_WORD_PAIRS {
                if lower == l {
                    return apply_case(token, r);
                }
                if lower == r {
                    return apply_case(token, l);
                }
            }
            token.to_string()
        })
        .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::schema::{stick5, stick5_schema};
    use crate::motion::DEFAULT_FPS;
    use ndarray::Array2;

    fn motion(features: Array2<f64>) -> MotionSequence {
        MotionSequence::new(features, DEFAULT_FPS, "stick5").unwrap()
    }

    #[test]
    fn symmetric_motion_is_a_fixed_point() {
        let schema = stick5_schema();
        // All joints on the sagittal plane (x = 0), left/right identical.
        let mut feats = Array2::zeros((3, stick5::DIM));
        for f in 0..3 {
            feats[(f, stick5::y(stick5::ROOT))] = 0.9;
            for j in [stick5::LEFT_ARM, stick5::RIGHT_ARM] {
                feats[(f, stick5::y(j))] = 0.8;
                feats[(f, stick5::z(j))] = 0.1 * f as f64;
            }
            for j in [stick5::LEFT_LEG, stick5::RIGHT_LEG] {
                feats[(f, stick5::z(j))] = 0.05;
            }
            feats[(f, stick5::ROOT_HEIGHT_COL)] = 0.9;
        }
        let m = motion(feats);
        let mirrored = mirror_motion(&m, &schema).unwrap();
        assert_eq!(m.features, mirrored.features);
    }

    #[test]
    fn mirror_is_an_involution() {
        let schema = stick5_schema();
        let feats = Array2::from_shape_fn((4, stick5::DIM), |(f, c)| {
            ((f * 31 + c * 7) % 13) as f64 * 0.25 - 1.0
        });
        let m = motion(feats);
        let twice = mirror_motion(&mirror_motion(&m, &schema).unwrap(), &schema).unwrap();
        assert_eq!(m.features, twice.features);
    }

    #[test]
    fn left_arm_raise_becomes_right_arm_raise() {
        let schema = stick5_schema();
        // Left arm rises over 5 frames; everything else rests. Checked
        // channel by channel against the hand-built expectation.
        let frames = 5;
        let mut feats = Array2::zeros((frames, stick5::DIM));
        for f in 0..frames {
            let t = f as f64 / (frames - 1) as f64;
            feats[(f, stick5::x(stick5::LEFT_ARM))] = -0.25;
            feats[(f, stick5::y(stick5::LEFT_ARM))] = 0.8 + 0.5 * t;
            feats[(f, stick5::x(stick5::RIGHT_ARM))] = 0.25;
            feats[(f, stick5::y(stick5::RIGHT_ARM))] = 0.8;
            feats[(f, stick5::x(stick5::LEFT_LEG))] = -0.15;
            feats[(f, stick5::x(stick5::RIGHT_LEG))] = 0.15;
            feats[(f, stick5::y(stick5::ROOT))] = 0.9;
            feats[(f, stick5::ROOT_HEIGHT_COL)] = 0.9;
        }
        let m = motion(feats);
        let mir = mirror_motion(&m, &schema).unwrap();
        for f in 0..frames {
            let t = f as f64 / (frames - 1) as f64;
            // Right arm now carries the raise; left arm is at rest.
            assert_eq!(mir.features[(f, stick5::y(stick5::RIGHT_ARM))], 0.8 + 0.5 * t);
            assert_eq!(mir.features[(f, stick5::y(stick5::LEFT_ARM))], 0.8);
            // Lateral positions flip sign and swap joints.
            assert_eq!(mir.features[(f, stick5::x(stick5::RIGHT_ARM))], 0.25);
            assert_eq!(mir.features[(f, stick5::x(stick5::LEFT_ARM))], -0.25);
            assert_eq!(mir.features[(f, stick5::ROOT_HEIGHT_COL)], 0.9);
        }
        // Left-arm y channel shows zero activity after mirroring.
        let spread: f64 = (0..frames)
            .map(|f| (mir.features[(f, stick5::y(stick5::LEFT_ARM))] - 0.8).abs())
            .sum();
        assert_eq!(spread, 0.0);
    }

    #[test]
    fn mirror_preserves_per_frame_energy() {
        let schema = stick5_schema();
        let feats = Array2::from_shape_fn((6, stick5::DIM), |(f, c)| {
            (f as f64 * 0.3 + c as f64 * 0.11).sin()
        });
        let m = motion(feats);
        let mir = mirror_motion(&m, &schema).unwrap();
        for f in 0..6 {
            let a: f64 = m.features.row(f).iter().map(|v| v * v).sum();
            let b: f64 = mir.features.row(f).iter().map(|v| v * v).sum();
            assert!((a - b).abs() < 1e-6 * a.max(1.0));
        }
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let schema = stick5_schema();
        let mut m = motion(Array2::zeros((2, stick5::DIM)));
        m.schema_id = "mystery".into();
        assert!(matches!(mirror_motion(&m, &schema), Err(MotionError::UnknownSchema(_))));
    }

    #[test]
    fn swap_words_basic() {
        assert_eq!(swap_lr_words("raises left arm"), "raises right arm");
        assert_eq!(swap_lr_words("walks forward"), "walks forward");
        assert_eq!(swap_lr_words("Left foot, then RIGHT foot"), "Right foot, then LEFT foot");
        assert_eq!(swap_lr_words("leftward lean"), "rightward lean");
        // Whole-word only: no substring rewriting.
        assert_eq!(swap_lr_words("he lefted nothing"), "he lefted nothing");
        assert_eq!(swap_lr_words("copyright"), "copyright");
        // Hyphenated compounds swap their lateral component.
        assert_eq!(swap_lr_words("left-hand side"), "right-hand side");
    }

    #[test]
    fn swap_words_involution_over_sentences() {
        let sentences = [
            "The man lifts his left foot off the ground.",
            "He swings his right foot forward while shifting his weight.",
            "Left arm up, RIGHT arm down, then leftwards.",
            "A person walks forward and stops.",
        ];
        for s in sentences {
            assert_eq!(swap_lr_words(&swap_lr_words(s)), s);
        }
    }
}
