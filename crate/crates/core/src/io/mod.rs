//! Text formats for models, scenarios and QBF instances.

mod model_text;
mod qbf_text;
mod scenario;

pub use model_text::{
    expand_range, parse_model, write_expr, Item, LoadError, LoadedModel, ModelDocument, RangeItem,
    Value,
};
pub use qbf_text::parse_qbf;
pub use scenario::{
    load_scenario_file, parse_scenario, LoadedScenario, ModelSource, ScenarioDocument,
    ScenarioError, SituationEntry,
};
