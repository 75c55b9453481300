//! Tweet-style normalization with independently switchable passes.
//!
//! Passes run in a fixed order: username masking, URL masking, whitespace
//! collapsing. The default configuration switches all of them off, which
//! makes `normalize_text` the identity.

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_USERNAME_TOKEN: &str = "@USER";
pub const DEFAULT_URL_TOKEN: &str = "HTTPURL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeConfigError {
    #[error("replacement token {0:?} is empty or contains whitespace")]
    BadToken(String),
    #[error("replacement token {0:?} would be re-masked on a second pass")]
    UnstableToken(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeConfig {
    pub mask_usernames: bool,
    pub mask_urls: bool,
    pub collapse_whitespace: bool,
    pub username_token: String,
    pub url_token: String,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            mask_usernames: false,
            mask_urls: false,
            collapse_whitespace: false,
            username_token: DEFAULT_USERNAME_TOKEN.into(),
            url_token: DEFAULT_URL_TOKEN.into(),
        }
    }
}

impl NormalizeConfig {
    pub fn all_on() -> Self {
        Self { mask_usernames: true, mask_urls: true, collapse_whitespace: true, ..Self::default() }
    }

    pub fn is_identity(&self) -> bool {
        !(self.mask_usernames || self.mask_urls || self.collapse_whitespace)
    }

    /// Rejects tokens that are empty, contain whitespace, or would be matched
    /// again by one of the masking passes (normalization must be idempotent).
    pub fn validate(&self) -> Result<(), NormalizeConfigError> {
        for token in [&self.username_token, &self.url_token] {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(NormalizeConfigError::BadToken(token.clone()));
            }
            if token.contains("http://") || token.contains("https://") {
                return Err(NormalizeConfigError::UnstableToken(token.clone()));
            }
        }
        let user = &self.username_token;
        if let Some(rest) = user.strip_prefix('@') {
            let starts_word = rest.chars().next().is_some_and(is_word_char);
            if starts_word && !rest.chars().all(is_word_char) {
                return Err(NormalizeConfigError::UnstableToken(user.clone()));
            }
        }
        if self.url_token.starts_with('@') {
            return Err(NormalizeConfigError::UnstableToken(self.url_token.clone()));
        }
        Ok(())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Applies the enabled passes of `config` to `text`.
pub fn normalize_text(text: &str, config: &NormalizeConfig) -> String {
    let mut out = String::from(text);
    if config.mask_usernames {
        out = mask_usernames(&out, &config.username_token);
    }
    if config.mask_urls {
        out = mask_urls(&out, &config.url_token);
    }
    if config.collapse_whitespace {
        out = collapse_whitespace(&out);
    }
    out
}

/// Replaces `@` + one or more word characters when the `@` opens a
/// whitespace-delimited token. `a@b.com` is left alone.
pub fn mask_usernames(text: &str, token: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    let mut at_boundary = true;
    while let Some((start, c)) = chars.next() {
        if c == '@' && at_boundary {
            let mut end = start + 1;
            while let Some(&(i, next)) = chars.peek() {
                if !is_word_char(next) {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
            if end > start + 1 {
                out.push_str(token);
                at_boundary = false;
                continue;
            }
        }
        out.push(c);
        at_boundary = c.is_whitespace();
    }
    out
}

/// Replaces every `http://` or `https://` run up to the next whitespace.
pub fn mask_urls(text: &str, token: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let next = match (rest.find("http://"), rest.find("https://")) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let Some(start) = next else {
            out.push_str(rest);
            return out;
        };
        out.push_str(&rest[..start]);
        out.push_str(token);
        let tail = &rest[start..];
        let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
        rest = &tail[end..];
    }
}

/// Whitespace runs become one space; leading and trailing whitespace goes.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
