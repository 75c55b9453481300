//! Translation interface and the debate-to-tweet style-transfer prompt.

use alloc::format;
use alloc::string::String;

use thiserror::Error;

use crate::label::Language;
use crate::prompt::{builtin_template, render_template};
use crate::retry::Retryable;

pub const STYLE_TRANSFER_TEMPLATE_ID: &str = "style-transfer-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("translator temporarily unavailable: {0}")]
    Transient(String),
    #[error("translator failed: {0}")]
    Fatal(String),
}

impl Retryable for TranslateError {
    fn is_retryable(&self) -> bool {
        matches!(self, TranslateError::Transient(_))
    }
}

/// A machine-translation service.
pub trait Translator {
    /// Stable identity recorded in corpus provenance.
    fn id(&self) -> String;

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String, TranslateError>;
}

/// Deterministic stand-in: prefixes `[src→tgt] ` to the text.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTranslator;

impl Translator for MockTranslator {
    fn id(&self) -> String {
        "mock".into()
    }

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String, TranslateError> {
        Ok(format!("[{source}→{target}] {text}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("style transfer needs exactly 3 non-empty example tweets")]
pub struct ExemplarError;

/// Three example tweets in the target style.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleTransferExemplars {
    examples: [String; 3],
}

impl StyleTransferExemplars {
    pub fn new(examples: [String; 3]) -> Result<Self, ExemplarError> {
        if examples.iter().any(|e| e.trim().is_empty()) {
            return Err(ExemplarError);
        }
        Ok(Self { examples })
    }

    pub fn from_slice(examples: &[String]) -> Result<Self, ExemplarError> {
        match examples {
            [a, b, c] => Self::new([a.clone(), b.clone(), c.clone()]),
            _ => Err(ExemplarError),
        }
    }

    pub fn examples(&self) -> &[String; 3] {
        &self.examples
    }
}

/// Style-transfer prompt targeting Arabic tweets.
pub fn build_style_transfer_prompt(text: &str, exemplars: &StyleTransferExemplars) -> String {
    build_style_transfer_prompt_in(text, exemplars, Language::Ar.name())
}

/// Style-transfer prompt for an arbitrary target language name.
pub fn build_style_transfer_prompt_in(text: &str, exemplars: &StyleTransferExemplars, language_name: &str) -> String {
    let template = builtin_template(STYLE_TRANSFER_TEMPLATE_ID).expect("style-transfer template is built in");
    let [a, b, c] = &exemplars.examples;
    render_template(template, &[("lang", language_name), ("text", text), ("ex1", a), ("ex2", b), ("ex3", c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex() -> StyleTransferExemplars {
        StyleTransferExemplars::new(["A".into(), "B".into(), "C".into()]).unwrap()
    }

    #[test]
    fn renders_template() {
        assert_eq!(
            build_style_transfer_prompt("T", &ex()),
            "Rephrase the following statement as if somebody was Tweeting about it in Arabic. Output might use hashtags, emoticons, images and links. Statement: (T) Here are a few examples: (A | B | C)"
        );
        assert_eq!(build_style_transfer_prompt("T", &ex()), build_style_transfer_prompt("T", &ex()));
    }

    #[test]
    fn empty_statement_keeps_parentheses() {
        assert!(build_style_transfer_prompt("", &ex()).contains("Statement: () Here"));
    }

    #[test]
    fn exemplar_validation() {
        assert!(StyleTransferExemplars::new(["A".into(), " ".into(), "C".into()]).is_err());
        assert!(StyleTransferExemplars::from_slice(&["A".into(), "B".into()]).is_err());
    }

    #[test]
    fn mock_translation() {
        let t = MockTranslator.translate("x", Language::Ar, Language::En).unwrap();
        assert_eq!(t, "[ar→en] x");
    }
}
