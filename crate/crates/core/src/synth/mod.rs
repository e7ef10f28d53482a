//! Parameterized synthetic motion families on the `stick5` schema.
//!
//! Four families — squat, arm raise, walk, kick — each drawn from a small
//! parameter range with matching step-marked descriptions, so a full
//! train/eval cycle runs at desk scale without any licensed motion data.
//! Wording tracks the parameters (e.g. "slightly" vs "deeply", "slowly"
//! vs "briskly", "right leg") so texts are informative about motions.

pub mod fixtures;

use crate::motion::schema::{stick5, stick5_schema};
use crate::motion::{MotionSequence, DEFAULT_FPS};
use crate::stepmark::{parse_stepmarks, serialize, CorpusLine, Step, StepMarkedText};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::path::Path;

pub const FAMILIES: &[&str] = &["squat", "arm_raise", "walk", "kick"];

const REST_ROOT_Y: f64 = 0.9;
const REST_ARM_Y: f64 = 0.8;
const ARM_X: f64 = 0.25;
const LEG_X: f64 = 0.15;
const FEATURE_NOISE: f64 = 0.004;

/// One synthetic motion with its paired texts.
#[derive(Debug, Clone)]
pub struct SynthRecord {
    pub id: String,
    pub family: String,
    pub coarse: String,
    pub fine: StepMarkedText,
    pub motion: MotionSequence,
}

fn rest_frame(feats: &mut Array2<f64>, f: usize) {
    feats[(f, stick5::x(stick5::ROOT))] = 0.0;
    feats[(f, stick5::y(stick5::ROOT))] = REST_ROOT_Y;
    feats[(f, stick5::z(stick5::ROOT))] = 0.0;
    feats[(f, stick5::x(stick5::LEFT_ARM))] = -ARM_X;
    feats[(f, stick5::y(stick5::LEFT_ARM))] = REST_ARM_Y;
    feats[(f, stick5::z(stick5::LEFT_ARM))] = 0.0;
    feats[(f, stick5::x(stick5::RIGHT_ARM))] = ARM_X;
    feats[(f, stick5::y(stick5::RIGHT_ARM))] = REST_ARM_Y;
    feats[(f, stick5::z(stick5::RIGHT_ARM))] = 0.0;
    feats[(f, stick5::x(stick5::LEFT_LEG))] = -LEG_X;
    feats[(f, stick5::y(stick5::LEFT_LEG))] = 0.0;
    feats[(f, stick5::z(stick5::LEFT_LEG))] = 0.0;
    feats[(f, stick5::x(stick5::RIGHT_LEG))] = LEG_X;
    feats[(f, stick5::y(stick5::RIGHT_LEG))] = 0.0;
    feats[(f, stick5::z(stick5::RIGHT_LEG))] = 0.0;
    feats[(f, stick5::ROOT_HEIGHT_COL)] = REST_ROOT_Y;
}

/// Ramp to 1 over `ramp` of the clip, then hold.
fn ramp_hold(t: f64, ramp: f64) -> f64 {
    let x = (t / ramp).clamp(0.0, 1.0);
    // smoothstep
    x * x * (3.0 - 2.0 * x)
}

/// Single smooth bump centered mid-clip.
fn bump(t: f64) -> f64 {
    (std::f64::consts::PI * t).sin().powi(2)
}

fn finish(mut feats: Array2<f64>, rng: &mut ChaCha8Rng) -> MotionSequence {
    let noise = Normal::new(0.0, FEATURE_NOISE).unwrap();
    for v in feats.iter_mut() {
        *v += noise.sample(rng);
    }
    MotionSequence::new(feats, DEFAULT_FPS, stick5_schema().id.as_str()).unwrap()
}

/// Root dips by `depth` and holds; arms ride along with the root.
pub fn squat_motion(depth: f64, frames: usize, rng: &mut ChaCha8Rng) -> MotionSequence {
    let mut feats = Array2::zeros((frames, stick5::DIM));
    for f in 0..frames {
        rest_frame(&mut feats, f);
        let t = f as f64 / (frames - 1).max(1) as f64;
        let dip = depth * ramp_hold(t, 0.45);
        let root_y = REST_ROOT_Y - dip;
        feats[(f, stick5::y(stick5::ROOT))] = root_y;
        feats[(f, stick5::ROOT_HEIGHT_COL)] = root_y;
        for j in [stick5::LEFT_ARM, stick5::RIGHT_ARM] {
            feats[(f, stick5::y(j))] = root_y - (REST_ROOT_Y - REST_ARM_Y);
        }
    }
    finish(feats, rng)
}

/// Arms rise by `raise` above the resting shoulder line and hold.
pub fn arm_raise_motion(raise: f64, frames: usize, rng: &mut ChaCha8Rng) -> MotionSequence {
    let mut feats = Array2::zeros((frames, stick5::DIM));
    for f in 0..frames {
        rest_frame(&mut feats, f);
        let t = f as f64 / (frames - 1).max(1) as f64;
        let lift = raise * ramp_hold(t, 0.5);
        for j in [stick5::LEFT_ARM, stick5::RIGHT_ARM] {
            feats[(f, stick5::y(j))] = REST_ARM_Y + lift;
            // Hands drift inward toward the head as they rise.
            let sign = if j == stick5::LEFT_ARM { -1.0 } else { 1.0 };
            feats[(f, stick5::x(j))] = sign * (ARM_X - 0.15 * (lift / 0.5_f64.max(raise)));
        }
    }
    finish(feats, rng)
}

/// Forward travel at `speed` with antiphase leg swings of length `stride`.
pub fn walk_motion(speed: f64, stride: f64, frames: usize, rng: &mut ChaCha8Rng) -> MotionSequence {
    let mut feats = Array2::zeros((frames, stick5::DIM));
    let cycles = 2.0;
    for f in 0..frames {
        rest_frame(&mut feats, f);
        let t = f as f64 / (frames - 1).max(1) as f64;
        let phase = 2.0 * std::f64::consts::PI * cycles * t;
        let root_z = speed * t;
        feats[(f, stick5::z(stick5::ROOT))] = root_z;
        let bob = REST_ROOT_Y + 0.02 * (2.0 * phase).sin();
        feats[(f, stick5::y(stick5::ROOT))] = bob;
        feats[(f, stick5::ROOT_HEIGHT_COL)] = bob;
        // Legs swing antiphase; feet lift on the forward swing.
        feats[(f, stick5::z(stick5::LEFT_LEG))] = root_z + stride * phase.sin();
        feats[(f, stick5::y(stick5::LEFT_LEG))] = 0.06 * phase.sin().max(0.0);
        feats[(f, stick5::z(stick5::RIGHT_LEG))] = root_z - stride * phase.sin();
        feats[(f, stick5::y(stick5::RIGHT_LEG))] = 0.06 * (-phase.sin()).max(0.0);
        // Arms swing gently opposite the legs, carried with the root.
        feats[(f, stick5::z(stick5::LEFT_ARM))] = root_z - 0.10 * phase.sin();
        feats[(f, stick5::z(stick5::RIGHT_ARM))] = root_z + 0.10 * phase.sin();
    }
    finish(feats, rng)
}

/// One right-leg kick: the foot sweeps forward and up mid-clip. Left-leg
/// kicks come from mirroring.
pub fn kick_motion(height: f64, frames: usize, rng: &mut ChaCha8Rng) -> MotionSequence {
    let mut feats = Array2::zeros((frames, stick5::DIM));
    for f in 0..frames {
        rest_frame(&mut feats, f);
        let t = f as f64 / (frames - 1).max(1) as f64;
        let b = bump(t);
        feats[(f, stick5::z(stick5::RIGHT_LEG))] = 0.45 * b;
        feats[(f, stick5::y(stick5::RIGHT_LEG))] = height * b;
        // Slight counterlean of the root.
        feats[(f, stick5::z(stick5::ROOT))] = -0.04 * b;
    }
    finish(feats, rng)
}

fn steps(parts: &[(&str, String)]) -> StepMarkedText {
    StepMarkedText::new(
        parts
            .iter()
            .enumerate()
            .map(|(i, (name, body))| Step::new(i as u32 + 1, name, body).unwrap())
            .collect(),
    )
    .unwrap()
}

const BEGIN_BODY: &str =
    "The man begins standing upright with his feet hip-width apart and his arms relaxed at his sides.";
const END_BODY: &str = "He holds this position for a moment.";

pub fn squat_step_body(word: &str) -> String {
    format!(
        "He bends his knees {word}, lowering his hips towards the ground while his torso remains upright and his feet stay flat."
    )
}

pub fn raise_step_body() -> String {
    "He lifts both arms up simultaneously, his hands moving upwards until his arms reach straight above his head.".to_string()
}

fn walk_step_bodies(word: &str) -> [String; 2] {
    [
        format!("He lifts his left foot and swings it forward {word} while shifting his weight onto his right foot."),
        format!("He plants the foot, then swings his right foot forward {word}, alternating feet to continue walking."),
    ]
}

fn kick_step_bodies() -> [String; 2] {
    [
        "He lifts his right leg, bending at the knee and bringing the foot up.".to_string(),
        "He extends his right leg forward, kicking with the foot while keeping his body stable.".to_string(),
    ]
}

/// Generates one record of the given family, with parameters drawn from
/// the rng.
pub fn generate_record(family: &str, id: &str, rng: &mut ChaCha8Rng) -> Option<SynthRecord> {
    let (motion, coarse, fine) = match family {
        "squat" => {
            let depth = rng.gen_range(0.12..0.40);
            let word = if depth < 0.26 { "slightly" } else { "deeply" };
            let motion = squat_motion(depth, 40, rng);
            let coarse = format!("A person {word} squats.");
            let fine = steps(&[
                ("beginning pose", BEGIN_BODY.into()),
                ("squat", squat_step_body(word)),
                ("end pose", END_BODY.into()),
            ]);
            (motion, coarse, fine)
        }
        "arm_raise" => {
            let raise = rng.gen_range(0.35..0.55);
            let motion = arm_raise_motion(raise, 40, rng);
            let coarse = "A man raises both arms above his head.".to_string();
            let fine = steps(&[
                ("beginning pose", BEGIN_BODY.into()),
                ("raise arms", raise_step_body()),
                ("end pose", END_BODY.into()),
            ]);
            (motion, coarse, fine)
        }
        "walk" => {
            let speed = rng.gen_range(0.35..0.95);
            let word = if speed < 0.65 { "slowly" } else { "briskly" };
            let stride = rng.gen_range(0.12..0.2);
            let motion = walk_motion(speed, stride, 48, rng);
            let coarse = format!("A man walks {word} forward.");
            let bodies = walk_step_bodies(word);
            let fine = steps(&[
                ("beginning pose", "The man stands upright with his feet together.".into()),
                ("lift foot", bodies[0].clone()),
                ("swing foot", bodies[1].clone()),
                ("end pose", "He comes to a stop and stands still.".into()),
            ]);
            (motion, coarse, fine)
        }
        "kick" => {
            let height = rng.gen_range(0.3..0.5);
            let motion = kick_motion(height, 40, rng);
            let coarse = "A man kicks with his right leg.".to_string();
            let bodies = kick_step_bodies();
            let fine = steps(&[
                ("beginning pose", BEGIN_BODY.into()),
                ("lift leg", bodies[0].clone()),
                ("extend leg", bodies[1].clone()),
                ("end pose", "He lowers his leg back to the ground, returning to his starting position.".into()),
            ]);
            (motion, coarse, fine)
        }
        _ => return None,
    };
    let mut fine = fine;
    fine.coarse = Some(coarse.clone());
    fine.source_id = id.to_string();
    Some(SynthRecord { id: id.into(), family: family.into(), coarse, fine, motion })
}

/// A deterministic corpus of `per_family` records per listed family.
pub fn generate_set(families: &[&str], per_family: usize, seed: u64) -> Vec<SynthRecord> {
    let mut out = Vec::new();
    for family in families {
        for i in 0..per_family {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ fnv1a(family.as_bytes()) ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15),
            );
            let id = format!("{family}_{i:04}");
            out.push(generate_record(family, &id, &mut rng).expect("known family"));
        }
    }
    out
}

/// The combined "squat with arms raised" request used by composition
/// probes: step bodies reuse the exact training-family wording.
pub fn combined_squat_arms() -> (String, StepMarkedText) {
    let coarse = "A man slightly squats with both arms raised above his head.".to_string();
    let mut fine = steps(&[
        ("beginning pose", BEGIN_BODY.into()),
        ("squat", squat_step_body("slightly")),
        ("raise arms", raise_step_body()),
        ("end pose", END_BODY.into()),
    ]);
    fine.coarse = Some(coarse.clone());
    fine.source_id = "probe_squat_arms".into();
    (coarse, fine)
}

/// Writes motions + a corpus JSONL under `dir`; returns the JSONL path.
pub fn write_corpus(
    dir: &Path,
    records: &[SynthRecord],
) -> Result<std::path::PathBuf, crate::motion::MotionError> {
    use std::io::Write;
    let schema = stick5_schema();
    let motions_dir = dir.join("motions");
    std::fs::create_dir_all(&motions_dir)?;
    let jsonl = dir.join("corpus.jsonl");
    let mut out = std::fs::File::create(&jsonl)?;
    for rec in records {
        let motion_path = motions_dir.join(format!("{}.json", rec.id));
        crate::motion::save_motion(&motion_path, &rec.motion, &schema.skeleton)?;
        let line = CorpusLine {
            source_id: rec.id.clone(),
            coarse: rec.coarse.clone(),
            fine: serialize(&rec.fine),
            pseudocode: None,
            motion_file: format!("motions/{}.json", rec.id),
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("serializable"))?;
    }
    Ok(jsonl)
}

/// Parses a written corpus line's fine text back into steps.
pub fn parse_line_fine(line: &CorpusLine) -> StepMarkedText {
    let mut fine = parse_stepmarks(&line.fine).expect("corpus lines hold canonical text");
    fine.coarse = Some(line.coarse.clone());
    fine.source_id = line.source_id.clone();
    fine
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
