use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("no coexistence equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("simulation failed: {0}")]
    BlowUp(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::NoEquilibrium(_) => 4,
            CliError::BlowUp(_) => 5,
            CliError::Io(_) => 1,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Model(_) => "model_error",
            CliError::NoEquilibrium(_) => "no_equilibrium",
            CliError::BlowUp(_) => "blowup",
            CliError::Io(_) => "io_error",
        }
    }
}

impl From<preytaxis_core::Error> for CliError {
    fn from(e: preytaxis_core::Error) -> Self {
        use preytaxis_core::Error as E;
        match e {
            E::BlowUp { .. } | E::NonPhysical { .. } => CliError::BlowUp(e.to_string()),
            other => CliError::Model(other.to_string()),
        }
    }
}
