//! QTOK token files.
//!
//! Binary layout: 16-byte header (`b"QTOK"`, version `u16`, bits `u16`, token
//! count `u64`, all little-endian) followed by one `u16` per token. The text
//! form holds one decimal token per line and carries no bit count.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::tokenizer::{TokenError, TokenSequence};

pub const MAGIC: &[u8; 4] = b"QTOK";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum TokFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a QTOK file")]
    BadMagic,
    #[error("unsupported QTOK version {0}")]
    UnsupportedVersion(u16),
    #[error("header declares {declared} tokens but {actual} are present")]
    LengthMismatch { declared: u64, actual: usize },
    #[error("token {0} does not fit in 16 bits")]
    TokenTooLarge(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Token(#[from] TokenError),
}

pub fn encode_binary(seq: &TokenSequence) -> Result<Vec<u8>, TokFileError> {
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * seq.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.bits() as u16).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    for &t in seq.tokens() {
        let t16 = u16::try_from(t).map_err(|_| TokFileError::TokenTooLarge(t))?;
        out.extend_from_slice(&t16.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<TokenSequence, TokFileError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(TokFileError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(TokFileError::UnsupportedVersion(version));
    }
    let bits = u16::from_le_bytes([bytes[6], bytes[7]]) as u32;
    let declared = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(2) || body.len() as u64 / 2 != declared {
        return Err(TokFileError::LengthMismatch { declared, actual: body.len() / 2 });
    }
    let tokens = body.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as u32).collect();
    Ok(TokenSequence::new(tokens, bits)?)
}

pub fn encode_text(seq: &TokenSequence) -> String {
    let mut out = String::with_capacity(seq.len() * 5);
    for t in seq.tokens() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn decode_text(text: &str, bits: u32) -> Result<TokenSequence, TokFileError> {
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t = line.parse().map_err(|_| TokFileError::Parse { line: i + 1, msg: format!("bad token {line:?}") })?;
        tokens.push(t);
    }
    Ok(TokenSequence::new(tokens, bits)?)
}

pub fn write_qtok(path: impl AsRef<Path>, seq: &TokenSequence) -> Result<(), TokFileError> {
    Ok(fs::write(path, encode_binary(seq)?)?)
}

pub fn read_qtok(path: impl AsRef<Path>) -> Result<TokenSequence, TokFileError> {
    decode_binary(&fs::read(path)?)
}
