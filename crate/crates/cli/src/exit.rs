use std::fmt;

/// A command-line misuse that clap cannot catch on its own.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub const USAGE: u8 = 2;
pub const DATA: u8 = 3;
pub const RUN: u8 = 4;

/// Exit code for a failed command: 2 usage, 3 data validation, 4 run failure.
pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<kcenter::Error>() {
            return classify(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return DATA;
        }
    }
    RUN
}

pub fn classify(e: &kcenter::Error) -> u8 {
    use kcenter::Error as E;
    match e {
        E::InvalidInput(_)
        | E::ModelMismatch(_)
        | E::IndexOutOfBounds { .. }
        | E::TooLarge { .. } => USAGE,
        E::Io { .. } => DATA,
        e if e.is_data_error() => DATA,
        _ => RUN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(code(&usage("x")), USAGE);
        let e: anyhow::Error = kcenter::Error::StageCap { stage: 2, cap: 9 }.into();
        assert_eq!(code(&e), RUN);
        let e: anyhow::Error = kcenter::Error::NonFinite { row: 0, dim: 1 }.into();
        assert_eq!(code(&e.context("loading")), DATA);
        let e: anyhow::Error = kcenter::Error::ModelMismatch("ds".into()).into();
        assert_eq!(code(&e), USAGE);
    }
}
