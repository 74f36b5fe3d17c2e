//! Content digests for provenance.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Canonical JSON text: object keys sorted, no insignificant whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json's `Value` map is ordered by key unless `preserve_order` is on.
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string(&v).expect("JSON value serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON form of `value`.
pub fn sha256_canonical<T: Serialize + ?Sized>(value: &T) -> String {
    sha256_hex(canonical_json(value).as_bytes())
}
