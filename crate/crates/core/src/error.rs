use alloc::string::String;

/// Lookup failures raised by queries over a [`Dataset`](crate::Dataset).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown classifier run `{0}`")]
    UnknownRun(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{name}` (lines {first} and {second})")]
    DuplicateLabel {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("label names must be non-empty (line {0})")]
    EmptyLabel(usize),
    #[error("label registry is empty")]
    EmptyRegistry,
}
