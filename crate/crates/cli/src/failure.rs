use std::fmt;

pub const CONFIG: u8 = 1;
pub const SOLVER: u8 = 2;
pub const VERIFICATION: u8 = 3;

/// An exit code with the message printed before exiting.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: CONFIG, message: message.into() }
    }
}

impl From<hetlab::Error> for Failure {
    fn from(e: hetlab::Error) -> Self {
        use hetlab::Error::*;
        let code = match e {
            Config(_) | Construction(_) | HypothesisViolation(_) => CONFIG,
            _ => SOLVER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
