//! Label, language and split tags shared by every corpus.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary check-worthiness verdict. `Yes` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Yes, Label::No];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "Yes",
            Label::No => "No",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Yes => Label::No,
            Label::No => Label::Yes,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Yes
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTag(pub alloc::string::String);

impl fmt::Display for UnknownTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown tag {:?}", self.0)
    }
}

/// Exact match on `"Yes"` / `"No"`; nothing else is a label.
impl FromStr for Label {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Yes" => Ok(Label::Yes),
            "No" => Ok(Label::No),
            other => Err(UnknownTag(other.into())),
        }
    }
}

/// Corpus languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Nl,
    Ar,
    Es,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::Nl, Language::Ar, Language::Es];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Nl => "nl",
            Language::Ar => "ar",
            Language::Es => "es",
        }
    }

    /// English name, as substituted into prompt templates.
    pub fn name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Nl => "Dutch",
            Language::Ar => "Arabic",
            Language::Es => "Spanish",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL.into_iter().find(|l| l.code() == s).ok_or_else(|| UnknownTag(s.into()))
    }
}

/// Dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "dev")]
    Dev,
    #[serde(rename = "dev-test")]
    DevTest,
    #[serde(rename = "test")]
    Test,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::DevTest, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::DevTest => "dev-test",
            Split::Test => "test",
        }
    }

    /// Every split except `test` must be fully labeled.
    pub fn requires_labels(self) -> bool {
        self != Split::Test
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL.into_iter().find(|sp| sp.as_str() == s).ok_or_else(|| UnknownTag(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_strings_are_exact() {
        assert_eq!("Yes".parse::<Label>(), Ok(Label::Yes));
        assert_eq!("No".parse::<Label>(), Ok(Label::No));
        assert!("yes".parse::<Label>().is_err());
        assert!("maybe".parse::<Label>().is_err());
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>(), Ok(l));
        }
    }

    #[test]
    fn tags_round_trip() {
        for l in Language::ALL {
            assert_eq!(l.code().parse::<Language>(), Ok(l));
        }
        for s in Split::ALL {
            assert_eq!(s.as_str().parse::<Split>(), Ok(s));
        }
        assert!("devtest".parse::<Split>().is_err());
    }
}
