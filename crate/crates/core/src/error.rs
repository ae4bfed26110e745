use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("template parse error at byte {offset}: {message}")]
    TemplateParse { offset: usize, message: String },

    #[error("unknown slot category `{0}`")]
    UnknownCategory(String),

    #[error("expansion space is empty")]
    EmptyExpansionSpace,

    #[error("token `{0}` has no entry in the sign lexicon")]
    UnresolvedToken(String),

    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u32),

    /// Malformed file content. `location` names the line, frame or byte offset.
    #[error("{location}: {message}")]
    Data { location: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn data(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// True for errors caused by bad input data rather than by misuse.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_))
    }
}
