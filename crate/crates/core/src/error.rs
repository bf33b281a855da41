use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("fluent names must be non-empty")]
    EmptyFluentName,
    #[error("action names must be non-empty")]
    EmptyActionName,
    #[error("duplicate fluent `{0}`")]
    DuplicateFluent(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("unknown action `{name}` at plan step {step}")]
    UnknownAction { name: String, step: usize },
    #[error("action `{0}` adds and deletes the same fluent")]
    AddDeleteOverlap(String),
    #[error("action `{action}` has invalid cost {cost}")]
    NegativeCost { action: String, cost: f64 },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("action `{action}` is not applicable{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Inapplicable { action: String, step: Option<usize> },
    #[error("candidate goal set is empty")]
    NoGoals,
    #[error("goal labels do not match goals")]
    GoalLabels,
    #[error("true goal index {index} out of range for {len} goals")]
    TrueGoalOutOfRange { index: usize, len: usize },
    #[error("candidate goals {first} and {second} are identical")]
    DuplicateGoal { first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("sensor {observer}: no catch-all rule, the model is not total")]
    MissingCatchall { observer: char },
    #[error("sensor {observer}: rule {later} is shadowed by rule {earlier} with a different symbol")]
    ShadowedRule { observer: char, earlier: usize, later: usize },
    #[error("sensor {observer}: unknown action `{name}`")]
    UnknownAction { observer: char, name: String },
    #[error("sensor {observer}: unknown fluent `{name}`")]
    UnknownFluent { observer: char, name: String },
    #[error("sensor {observer}: misreport symbol `{symbol}` is not in the alphabet")]
    UnknownSymbol { observer: char, symbol: String },
    #[error("the actor's sensor is implicit and cannot be given rules")]
    ActorSensor,
}

/// Parse failure with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("lexical error: {0}")]
    Lexical(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error("duplicate section `{0}`")]
    DuplicateSection(String),
    #[error("missing section `{0}`")]
    MissingSection(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("cell ({0}, {1}) is outside the grid")]
    OutOfRange(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("reachable state set exceeds the cap of {cap} states at horizon {horizon}; use the search solver")]
    Capacity { cap: usize, horizon: usize },
    #[error("{name} = {value} is outside [1, {goals}]")]
    Bounds { name: &'static str, value: usize, goals: usize },
    #[error("beta = {0} is outside [0, 1]")]
    Beta(f64),
    #[error("true goal is unreachable within horizon {0}")]
    GoalUnreachable(usize),
    #[error("the IP encoding needs sensor models for both C and X")]
    MissingObserver,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("assignment length {got} does not match {expected} variables")]
    Length { got: usize, expected: usize },
    #[error("more than one action at step {0}")]
    MultipleActions(usize),
    #[error("decoded plan is not executable: {0}")]
    Plan(#[from] ModelError),
    #[error("encoding soundness violated: {0}")]
    Soundness(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid goal specification: {0}")]
    InvalidSpec(String),
    #[error("node limit reached")]
    NodeLimit,
    #[error("time limit reached")]
    TimeLimit,
    #[error("search space exhausted without a solution")]
    Exhausted,
    #[error("solution failed independent re-verification: {0}")]
    Verification(String),
}
