use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An agent or candidate index is out of range for the profile it is
    /// applied to, or a matrix has the wrong shape.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A finite schedule was asked for an event past its end.
    #[error("schedule exhausted at step {0}")]
    ScheduleExhausted(u64),

    /// A simulation configuration failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A trace file or trace value is internally inconsistent.
    #[error("corrupt trace: {0}")]
    CorruptTrace(String),

    /// An analysis was asked of a trace produced under the wrong policy.
    #[error("policy mismatch: {0}")]
    PolicyMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
