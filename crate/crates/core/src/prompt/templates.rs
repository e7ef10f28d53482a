//! The P1..P8 template catalog.
//!
//! The source material describes each template's properties (time order,
//! spatial changes, the no-muscle clause, named step marks, pseudo-code
//! summaries, shot counts) without printing the strings, so these texts
//! are functional reconstructions implementing exactly those properties,
//! shipped as versioned fixtures.

use crate::synth::fixtures;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("coarse description is empty")]
    EmptyCoarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl std::str::FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P1" => Ok(Self::P1),
            "P2" => Ok(Self::P2),
            "P3" => Ok(Self::P3),
            "P4" => Ok(Self::P4),
            "P5" => Ok(Self::P5),
            "P6" => Ok(Self::P6),
            "P7" => Ok(Self::P7),
            "P8" => Ok(Self::P8),
            other => Err(format!("unknown template `{other}` (expected P1..P8)")),
        }
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", *self as usize + 1)
    }
}

/// One in-context instance: a coarse description, its fine-grained
/// version, and (for pseudo-code templates) the per-step codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub coarse: String,
    pub fine: String,
    pub pseudocode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub instruction: String,
    pub shots: Vec<Shot>,
    pub requires_pseudocode: bool,
    pub requires_named_steps: bool,
}

const TIME_ORDER: &str = "Expand the coarse-grained motion description below into a fine-grained one. \
Describe the motion strictly in time order and specify the spatial position changes \
(including angle changes) of every relevant body part.";

const NO_MUSCLE: &str = "Do not mention anything related to muscles.";

const NAMED_MARKS: &str = "Split the description into steps and wrap each step in named step marks, \
for example <step 1: beginning pose>...</step 1: beginning pose>. \
Number the steps in order starting from 1.";

const PSEUDO_CLAUSE: &str = "After the step-marked description, also summarize each step into a \
pseudo-code sequence of short function calls, one group of calls per step, \
introduced by a line reading `pseudo-code:`. Separate step groups with blank lines.";

fn arm_raise_shot(with_codes: bool) -> Shot {
    Shot {
        coarse: fixtures::ARM_RAISE_COARSE.to_string(),
        fine: fixtures::ARM_RAISE_FINE.to_string(),
        pseudocode: with_codes.then(|| {
            "stand(arms=sides)\n\nraise(arms, target=above_head)\n\nhold()\nlower(arms)"
                .to_string()
        }),
    }
}

fn walk_shot(with_codes: bool) -> Shot {
    Shot {
        coarse: fixtures::WALK_COARSE.to_string(),
        fine: fixtures::WALK_FINE.to_string(),
        pseudocode: with_codes.then(|| {
            "stand(feet=together)\n\nlift(foot)\nswing(foot)\n\nplant(foot)\nshift(weight)\n\nswing(foot)\n\nrepeat(steps, from=2, to=4)"
                .to_string()
        }),
    }
}

/// The richer-code second instance: the same call grammar with more
/// argument variants (numbers, key=value pairs, bare calls).
fn kick_shot_rich_codes() -> Shot {
    Shot {
        coarse: fixtures::KICK_COARSE.to_string(),
        fine: fixtures::KICK_FINE.to_string(),
        pseudocode: Some(
            "stand(feet=shoulder_width, arms=sides)\n\nlift(leg, bend=knee)\nraise(foot, target=buttocks)\n\nextend(leg, direction=forward, speed=0.8)\nkick(foot)\nstabilize(body)\n\nlower(leg)\nreturn_to(start)"
                .to_string(),
        ),
    }
}

/// The full catalog in id order.
pub fn template_catalog() -> Vec<PromptTemplate> {
    vec![
        PromptTemplate {
            id: TemplateId::P1,
            instruction: TIME_ORDER.to_string(),
            shots: vec![],
            requires_pseudocode: false,
            requires_named_steps: false,
        },
        PromptTemplate {
            id: TemplateId::P2,
            instruction: format!("{TIME_ORDER} Keep the description concise."),
            shots: vec![arm_raise_shot(false)],
            requires_pseudocode: false,
            requires_named_steps: false,
        },
        PromptTemplate {
            id: TemplateId::P3,
            instruction: format!(
                "{TIME_ORDER} First write a short thinking process about how the motion unfolds, \
                 then give the expanded description."
            ),
            shots: vec![arm_raise_shot(false)],
            requires_pseudocode: false,
            requires_named_steps: false,
        },
        PromptTemplate {
            id: TemplateId::P4,
            instruction: format!(
                "{TIME_ORDER} Explicitly mark the number of steps in order, wrapping each step as \
                 <step n>...</step n>. {NO_MUSCLE}"
            ),
            shots: vec![],
            requires_pseudocode: false,
            requires_named_steps: false,
        },
        PromptTemplate {
            id: TemplateId::P5,
            instruction: format!("{TIME_ORDER} {NAMED_MARKS} {NO_MUSCLE}"),
            shots: vec![arm_raise_shot(false)],
            requires_pseudocode: false,
            requires_named_steps: true,
        },
        PromptTemplate {
            id: TemplateId::P6,
            instruction: format!("{TIME_ORDER} {NAMED_MARKS} {NO_MUSCLE} {PSEUDO_CLAUSE}"),
            shots: vec![arm_raise_shot(true)],
            requires_pseudocode: true,
            requires_named_steps: true,
        },
        PromptTemplate {
            id: TemplateId::P7,
            instruction: format!("{TIME_ORDER} {NAMED_MARKS} {NO_MUSCLE} {PSEUDO_CLAUSE}"),
            shots: vec![arm_raise_shot(true), walk_shot(true)],
            requires_pseudocode: true,
            requires_named_steps: true,
        },
        PromptTemplate {
            id: TemplateId::P8,
            instruction: format!("{TIME_ORDER} {NAMED_MARKS} {NO_MUSCLE} {PSEUDO_CLAUSE}"),
            shots: vec![arm_raise_shot(true), kick_shot_rich_codes()],
            requires_pseudocode: true,
            requires_named_steps: true,
        },
    ]
}

pub fn template(id: TemplateId) -> PromptTemplate {
    template_catalog().into_iter().find(|t| t.id == id).expect("catalog covers P1..P8")
}

/// Deterministic prompt rendering: instruction, then shots in order, then
/// the query slot holding the target coarse description.
pub fn render_prompt(t: &PromptTemplate, coarse: &str) -> Result<String, RenderError> {
    if coarse.trim().is_empty() {
        return Err(RenderError::EmptyCoarse);
    }
    let mut out = String::new();
    out.push_str(&t.instruction);
    out.push_str("\n\n");
    for (i, shot) in t.shots.iter().enumerate() {
        out.push_str(&format!("Example {}:\n", i + 1));
        out.push_str(&format!("Coarse: {}\n", shot.coarse));
        out.push_str(&format!("Fine: {}\n", shot.fine));
        if let Some(code) = &shot.pseudocode {
            out.push_str(&format!("pseudo-code:\n{code}\n"));
        }
        out.push('\n');
    }
    out.push_str(&format!("Coarse: {}\nFine:", coarse.trim()));
    Ok(out)
}
