use causa::io::ScenarioError;
use causa::{BlameError, CausalityError, QbfError};

pub const USAGE: u8 = 1;
pub const PARSE: u8 = 2;
pub const INVALID: u8 = 3;
pub const BINDING: u8 = 4;
pub const INCONCLUSIVE: u8 = 5;

/// A failed command: exit code, message for stderr, and optionally a
/// partial result that is still printed to stdout.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub output: Option<String>,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            output: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(PARSE, message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(INVALID, message)
    }

    pub fn binding(message: impl Into<String>) -> Self {
        Self::new(BINDING, message)
    }

    pub fn with_output(mut self, output: String) -> Self {
        self.output = Some(output);
        self
    }
}

impl From<CausalityError> for Failure {
    fn from(e: CausalityError) -> Self {
        let code = match &e {
            CausalityError::InvalidModel(_) => INVALID,
            CausalityError::CapReached { .. } => INCONCLUSIVE,
            _ => BINDING,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<BlameError> for Failure {
    fn from(e: BlameError) -> Self {
        let code = match &e {
            BlameError::InvalidState(_) => INVALID,
            BlameError::Binding { source, .. } => Failure::from(source.clone()).code,
            BlameError::Inconclusive { .. } => INCONCLUSIVE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            ScenarioError::Parse { .. } | ScenarioError::LabelInPattern(_) => PARSE,
            ScenarioError::Io { .. } => USAGE,
            ScenarioError::Load { .. } => INVALID,
            ScenarioError::UnknownContext { .. } => BINDING,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<QbfError> for Failure {
    fn from(e: QbfError) -> Self {
        let code = match &e {
            QbfError::Causality(c) => Failure::from(c.clone()).code,
            QbfError::NotExistential(_) => BINDING,
            QbfError::TooLarge { .. } | QbfError::TooManyVariables(_) => INVALID,
            QbfError::Duplicate(_) | QbfError::Undeclared(_) => PARSE,
        };
        Failure::new(code, e.to_string())
    }
}
