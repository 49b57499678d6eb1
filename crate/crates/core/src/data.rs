//! Default configuration files compiled into the library.

pub const AFFORDANCES: &str = include_str!("../data/affordances.tsv");
pub const OAM: &str = include_str!("../data/oam.txt");
pub const CAPABILITIES: &str = include_str!("../data/capabilities.txt");
pub const CONDITIONS: &str = include_str!("../data/conditions.txt");
pub const OAM_LOGICAL: &str = include_str!("../data/oam_logical.txt");

/// Default prompt templates by id.
pub const PROMPTS: &[(&str, &str)] = &[
    ("goal", include_str!("../data/prompts/goal.txt")),
    ("goal-correction", include_str!("../data/prompts/goal-correction.txt")),
    ("partial-goal", include_str!("../data/prompts/partial-goal.txt")),
    ("tool-selection", include_str!("../data/prompts/tool-selection.txt")),
    ("affordance-relevance", include_str!("../data/prompts/affordance-relevance.txt")),
    ("suggest-with-affordance", include_str!("../data/prompts/suggest-with-affordance.txt")),
    ("suggest-direct", include_str!("../data/prompts/suggest-direct.txt")),
    ("oam-list", include_str!("../data/prompts/oam-list.txt")),
    ("oam-yesno", include_str!("../data/prompts/oam-yesno.txt")),
    ("baseline-plan", include_str!("../data/prompts/baseline-plan.txt")),
];
