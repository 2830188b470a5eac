use std::fmt;

/// Exit status for a failed check (invalid set, structural failure).
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad arguments, unreadable files and config errors.
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ks21_core::Error> for Failure {
    fn from(err: ks21_core::Error) -> Self {
        match err {
            ks21_core::Error::InvalidConfig(_) | ks21_core::Error::OutOfRange { .. } => {
                Failure::usage(err.to_string())
            }
            other => Failure::check(other.to_string()),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
