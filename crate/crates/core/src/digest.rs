//! Stable content digests: response-cache keys and corpus fingerprints.
//!
//! All digests are SHA-256 rendered as 64 lowercase hex characters. Inputs
//! are framed (domain tag, then each field as a little-endian `u64` length
//! followed by its bytes) so that no two distinct field tuples share a
//! preimage.

use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::corpus::Corpus;

fn framed(tag: &str, fields: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update([0u8]);
    for f in fields {
        h.update((f.len() as u64).to_le_bytes());
        h.update(f);
    }
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Response-cache key for a `(model, prompt)` pair.
pub fn cache_key(model_name: &str, prompt: &str) -> String {
    framed("claimcheck/cache/v1", &[model_name.as_bytes(), prompt.as_bytes()])
}

/// Identity of a corpus: its tags plus its canonical TSV serialization.
pub fn corpus_fingerprint(corpus: &Corpus) -> String {
    framed(
        "claimcheck/corpus/v1",
        &[corpus.language().code().as_bytes(), corpus.split().as_str().as_bytes(), corpus.to_tsv().as_bytes()],
    )
}

/// Digest of an arbitrary canonical byte string under a caller-chosen tag.
pub fn tagged_digest(tag: &str, bytes: &[u8]) -> String {
    framed(tag, &[bytes])
}
