//! Few-shot check-worthiness prompt rendering and response parsing.
//!
//! Templates are plain UTF-8 files with `{name}` placeholders. Substitution
//! is a single left-to-right pass, so placeholder-looking text inside a
//! substituted value is never expanded. One trailing newline of the template
//! file is dropped.

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::Label;

pub const DEFAULT_TEMPLATE_ID: &str = "cot-v1";

/// Built-in templates, keyed by file stem.
pub const BUILTIN_TEMPLATES: &[(&str, &str)] = &[
    ("cot-v1", include_str!("../templates/cot-v1.txt")),
    ("cot-v1-fixed", include_str!("../templates/cot-v1-fixed.txt")),
    ("style-transfer-v1", include_str!("../templates/style-transfer-v1.txt")),
];

pub fn builtin_template(id: &str) -> Option<&'static str> {
    BUILTIN_TEMPLATES.iter().find(|(k, _)| *k == id).map(|(_, v)| *v)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("unparseable response {raw:?}")]
    UnparseableResponse { raw: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// The whole response, minus whitespace and quotes, must be yes or no.
    Strict,
    /// Exactly one of the words yes/no must occur somewhere.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub language_name: String,
    pub template_id: String,
    pub parse_mode: ParseMode,
    pub fallback_label: Option<Label>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            language_name: "English".into(),
            template_id: DEFAULT_TEMPLATE_ID.into(),
            parse_mode: ParseMode::Lenient,
            fallback_label: Some(Label::No),
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        builtin_template(&self.template_id)
            .map(|_| ())
            .ok_or_else(|| PromptError::UnknownTemplate(self.template_id.clone()))
    }
}

/// Fills `{key}` placeholders from `vars`; unknown placeholders stay as-is.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let template = template.strip_suffix('\n').unwrap_or(template);
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[1..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = &after[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders the check-worthiness prompt for one instance text.
pub fn build_checkworthy_prompt(text: &str, config: &PromptConfig) -> Result<String, PromptError> {
    let template = builtin_template(&config.template_id)
        .ok_or_else(|| PromptError::UnknownTemplate(config.template_id.clone()))?;
    Ok(render_template(template, &[("lang", &config.language_name), ("text", text)]))
}

/// A parsed verdict. `fallback` marks labels that came from
/// `PromptConfig::fallback_label` rather than from the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParsedLabel {
    pub label: Label,
    pub fallback: bool,
}

const QUOTES: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

fn word_label(word: &str) -> Option<Label> {
    if word.eq_ignore_ascii_case("yes") {
        Some(Label::Yes)
    } else if word.eq_ignore_ascii_case("no") {
        Some(Label::No)
    } else {
        None
    }
}

fn parse_strict(raw: &str) -> Option<Label> {
    word_label(raw.trim_matches(|c: char| c.is_whitespace() || QUOTES.contains(&c)))
}

fn parse_lenient(raw: &str) -> Option<Label> {
    let mut found = None;
    for word in raw.split(|c: char| !c.is_alphanumeric()) {
        if let Some(l) = word_label(word) {
            match found {
                None => found = Some(l),
                Some(prev) if prev != l => return None,
                Some(_) => {}
            }
        }
    }
    found
}

/// Maps a raw model response to a label under the configured mode, falling
/// back to `fallback_label` when the response is not usable.
pub fn parse_label(raw: &str, config: &PromptConfig) -> Result<ParsedLabel, PromptError> {
    let parsed = match config.parse_mode {
        ParseMode::Strict => parse_strict(raw),
        ParseMode::Lenient => parse_lenient(raw),
    };
    match (parsed, config.fallback_label) {
        (Some(label), _) => Ok(ParsedLabel { label, fallback: false }),
        (None, Some(label)) => Ok(ParsedLabel { label, fallback: true }),
        (None, None) => Err(PromptError::UnparseableResponse { raw: raw.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(mode: ParseMode, fallback: Option<Label>) -> PromptConfig {
        PromptConfig { parse_mode: mode, fallback_label: fallback, ..PromptConfig::default() }
    }

    #[test]
    fn trailing_call_line() {
        let p = build_checkworthy_prompt("Apple's CEO is Tim Cook.", &PromptConfig::default()).unwrap();
        assert!(p.ends_with("\n\ncheckworthy(Apple's CEO is Tim Cook.)"));
        assert!(p.starts_with("Your task is to identify whether a given tweet text in the English language"));
        assert!(p.contains("he return value should be a strings"));
        assert!(p.contains("Note that your response will be passed to the python interpreter, SO NO OTHER WORDS!"));
    }

    #[test]
    fn dutch_differs_only_at_language() {
        let en = build_checkworthy_prompt("x", &PromptConfig::default()).unwrap();
        let nl_cfg = PromptConfig { language_name: "Dutch".into(), ..PromptConfig::default() };
        let nl = build_checkworthy_prompt("x", &nl_cfg).unwrap();
        assert_ne!(en, nl);
        assert_eq!(en.replacen("English", "Dutch", 1), nl);
        assert_eq!(en.matches("English").count(), 1);
    }

    #[test]
    fn unknown_template() {
        let c = PromptConfig { template_id: "nope".into(), ..PromptConfig::default() };
        assert_eq!(build_checkworthy_prompt("x", &c), Err(PromptError::UnknownTemplate("nope".into())));
        assert!(c.validate().is_err());
    }

    #[test]
    fn substituted_text_is_not_expanded() {
        let p = build_checkworthy_prompt("{lang} {text}", &PromptConfig::default()).unwrap();
        assert!(p.ends_with("checkworthy({lang} {text})"));
        assert_eq!(render_template("a {b} {c", &[("b", "B")]), "a B {c");
    }

    #[test]
    fn canonical_response() {
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            let r = parse_label(" Yes\n", &cfg(mode, None)).unwrap();
            assert_eq!(r, ParsedLabel { label: Label::Yes, fallback: false });
        }
        assert_eq!(parse_label("\"no\"", &cfg(ParseMode::Strict, None)).unwrap().label, Label::No);
    }

    #[test]
    fn answer_prefix() {
        assert_eq!(parse_label("Answer: No.", &cfg(ParseMode::Lenient, None)).unwrap().label, Label::No);
        assert_eq!(
            parse_label("Answer: No.", &cfg(ParseMode::Strict, None)),
            Err(PromptError::UnparseableResponse { raw: "Answer: No.".into() })
        );
    }

    #[test]
    fn both_words_fall_back() {
        let r = parse_label("Yes and no", &cfg(ParseMode::Lenient, Some(Label::No))).unwrap();
        assert_eq!(r, ParsedLabel { label: Label::No, fallback: true });
        assert!(parse_label("Yes and no", &cfg(ParseMode::Lenient, None)).is_err());
        assert!(parse_label("maybe", &cfg(ParseMode::Lenient, None)).is_err());
        // "nothing" and "eyes" are not whole words
        assert!(parse_label("nothing eyes", &cfg(ParseMode::Lenient, None)).is_err());
        assert_eq!(parse_label("yes, YES!", &cfg(ParseMode::Lenient, None)).unwrap().label, Label::Yes);
    }

    proptest! {
        #[test]
        fn strict_accepts_subset_of_lenient(raw in "[ \"'a-zA-Z.:!\n]{0,12}") {
            let strict = parse_label(&raw, &cfg(ParseMode::Strict, None));
            let lenient = parse_label(&raw, &cfg(ParseMode::Lenient, None));
            if let Ok(s) = strict {
                prop_assert_eq!(lenient, Ok(s));
            }
        }

        #[test]
        fn label_round_trip(yes in any::<bool>(), strict in any::<bool>(), fb in prop::option::of(prop::sample::select(vec![Label::Yes, Label::No]))) {
            let label = if yes { Label::Yes } else { Label::No };
            let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
            prop_assert_eq!(parse_label(label.as_str(), &cfg(mode, fb)).unwrap(), ParsedLabel { label, fallback: false });
        }

        #[test]
        fn text_substituted_once(body in "[a-z ]{1,20}") {
            let text = alloc::format!("\u{2063}{body}\u{2063}");
            let p = build_checkworthy_prompt(&text, &PromptConfig::default()).unwrap();
            prop_assert_eq!(p.matches(text.as_str()).count(), 1);
            let call = alloc::format!("checkworthy({text})");
            prop_assert!(p.ends_with(call.as_str()));
        }
    }
}
