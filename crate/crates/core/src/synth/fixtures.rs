//! Sample step-marked descriptions used as test fixtures across the crate.

/// "A man walks." — five named steps.
pub const WALK_COARSE: &str = "A man walks.";
pub const WALK_FINE: &str = "<step 1: beginning pose>The man stands upright with his feet together.</step 1: beginning pose> <step 2: lift foot>He lifts his left foot off the ground and swings it forward while simultaneously shifting his weight onto his right foot.</step 2: lift foot> <step 3: place foot>He plants his left foot on the ground and transfers his weight onto it while simultaneously lifting his right foot off the ground.</step 3: place foot> <step 4: swing foot>He swings his right foot forward while simultaneously shifting his weight onto his left foot, as he prepares to take another step.</step 4: swing foot> <step 5: end pose>He repeats steps 2-4, alternating between his left and right foot, to continue walking.</step 5: end pose>";

/// "A man kicks with one leg." — four named steps.
pub const KICK_COARSE: &str = "A man kicks with one leg.";
pub const KICK_FINE: &str = "<step 1: beginning pose>The man begins standing with his feet shoulder-width apart and his arms at his sides.</step 1: beginning pose> <step 2: lift leg>He lifts one leg, bending at the knee and bringing his foot up towards his buttocks.</step 2: lift leg> <step 3: extend leg>He then extends his leg forward, kicking with the foot while keeping the rest of his body stable. His arms remain at his sides for balance.</step 3: extend leg> <step 4: lower leg>After the kick, he lowers his leg back to the ground, returning to his starting position.</step 4: lower leg>";

/// "A man raises both arms above his head." — three named steps.
pub const ARM_RAISE_COARSE: &str = "A man raises both arms above his head.";
pub const ARM_RAISE_FINE: &str = "<step 1: beginning pose>The man begins in a standing position with his arms at his sides.</step 1: beginning pose> <step 2: raise arms>He lifts both arms up simultaneously, his hands moving upwards towards the ceiling. His shoulders and elbows straighten as his arms reach their maximum height straight above his head.</step 2: raise arms> <step 3: end pose>He holds this position momentarily before lowering his arms back down to his sides.</step 3: end pose>";

/// "A person slightly squats." — three named steps.
pub const SQUAT_COARSE: &str = "A person slightly squats.";
pub const SQUAT_FINE: &str = "<step 1: beginning pose>The man begins standing upright with his feet hip-width apart and his arms relaxed at his sides.</step 1: beginning pose> <step 2: slight squat>He bends his knees slightly, lowering his hips and shifting his weight slightly towards his heels. His torso remains upright, and his feet remain flat on the ground.</step 2: slight squat> <step 3: end pose>He holds this slightly squatted position.</step 3: end pose>";

/// "A man slightly squats with both arms raised above head."
pub const SQUAT_ARMS_COARSE: &str = "A man slightly squats with both arms raised above head.";
pub const SQUAT_ARMS_FINE: &str = "<step 1: beginning pose>The man begins in a standing position with his feet shoulder-width apart and his arms at his sides.</step 1: beginning pose> <step 2: squat>He slightly squats down, bending his knees and lowering his hips a few inches towards the ground. His torso remains upright and his arms are raised straight above his head, palms facing each other.</step 2: squat> <step 3: end pose>He holds this position for a moment before standing back up again to the starting position with his feet shoulder-width apart and arms at his sides.</step 3: end pose>";

/// "A man walks, then kicks with one leg."
pub const WALK_KICK_COARSE: &str = "A man walks, then kicks with one leg.";
pub const WALK_KICK_FINE: &str = "<step 1: beginning pose>The man begins in a standing position with his feet together and his arms at his sides.</step 1: beginning pose> <step 2: taking a step>He lifts his right foot and takes a step forward with it, placing it on the ground in front of him.</step 2: taking a step> <step 3: kicking>He then swings his left leg forward in a kicking motion, keeping it straight and extending it towards an imaginary target. As he kicks, he leans his torso back slightly for balance.</step 3: kicking> <step 4: end pose>He then lowers his left leg back to the ground and resumes the standing position with his feet together and his arms at his sides.</step 4: end pose>";

/// All sample (coarse, fine) pairs.
pub const SAMPLE_PAIRS: &[(&str, &str)] = &[
    (WALK_COARSE, WALK_FINE),
    (KICK_COARSE, KICK_FINE),
    (ARM_RAISE_COARSE, ARM_RAISE_FINE),
    (SQUAT_COARSE, SQUAT_FINE),
    (SQUAT_ARMS_COARSE, SQUAT_ARMS_FINE),
    (WALK_KICK_COARSE, WALK_KICK_FINE),
];
