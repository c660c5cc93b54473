//! Versioned, checksummed text files: a `#<magic> v1 <sha256>` line followed
//! by a body whose digest the line records.

use sha2::{Digest, Sha256};

pub const VERSION: &str = "v1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SealError {
    Version(String),
    Checksum { expected: String, found: String },
}

pub(crate) fn seal(magic: &str, body: &str) -> String {
    format!("#{magic} {VERSION} {}\n{body}", sha256_hex(body.as_bytes()))
}

/// Verifies the header line and digest, returning the body.
pub(crate) fn unseal<'a>(magic: &str, text: &'a str) -> Result<&'a str, SealError> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let mut parts = first.split(' ');
    let expected_magic = format!("#{magic}");
    match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(VERSION), Some(sum), None) if m == expected_magic => {
            let found = sha256_hex(body.as_bytes());
            if found == sum {
                Ok(body)
            } else {
                Err(SealError::Checksum {
                    expected: sum.to_string(),
                    found,
                })
            }
        }
        _ => Err(SealError::Version(format!(
            "expected '#{magic} {VERSION} <sha256>', found {:?}",
            first.chars().take(80).collect::<String>()
        ))),
    }
}
