//! Numeric rating reply parsing.
//!
//! A decimal token is `sign? (digits ('.' digits?)? | '.' digits)`; no
//! exponent form, matching the reply contract the phase prompts state.
//! Strict mode demands the whole (whitespace-trimmed) reply be one token;
//! lenient mode takes the first in-range token anywhere in the text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Rating;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("no number in reply {raw:?}")]
    NoNumber { raw: String },
    #[error("rating {value} outside [0, 1] in reply {raw:?}")]
    OutOfRange { raw: String, value: f64 },
    #[error("reply {raw:?} contains more than a single number")]
    ExtraText { raw: String },
}

/// End of the decimal token starting at `start`, if one starts there.
/// Maximal munch: consumes sign, integer digits, and one fractional part.
fn token_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut i = start;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = i - int_start;
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        let frac_start = i + 1;
        let mut j = frac_start;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        frac_digits = j - frac_start;
        // A bare dot with no digits on either side is not a number.
        if int_digits + frac_digits > 0 {
            i = j;
        }
    }
    if int_digits + frac_digits == 0 {
        None
    } else {
        Some(i)
    }
}

/// All decimal tokens in `raw`, left to right.
fn scan_tokens(raw: &str) -> Vec<&str> {
    let bytes = raw.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match token_end(bytes, i) {
            Some(end) => {
                tokens.push(&raw[i..end]);
                i = end;
            }
            None => i += 1,
        }
    }
    tokens
}

fn token_value(token: &str) -> f64 {
    // The token grammar is a strict subset of Rust float syntax.
    // `+ 0.0` folds the "-0" case onto plain zero.
    token.parse::<f64>().expect("token grammar parses") + 0.0
}

pub fn parse_rating(raw: &str, mode: ParseMode) -> Result<Rating, ParseError> {
    match mode {
        ParseMode::Strict => {
            let trimmed = raw.trim();
            if token_end(trimmed.as_bytes(), 0) == Some(trimmed.len()) && !trimmed.is_empty() {
                let value = token_value(trimmed);
                if (0.0..=1.0).contains(&value) {
                    Ok(value)
                } else {
                    Err(ParseError::OutOfRange {
                        raw: raw.to_string(),
                        value,
                    })
                }
            } else if scan_tokens(trimmed).is_empty() {
                Err(ParseError::NoNumber {
                    raw: raw.to_string(),
                })
            } else {
                Err(ParseError::ExtraText {
                    raw: raw.to_string(),
                })
            }
        }
        ParseMode::Lenient => {
            let tokens = scan_tokens(raw);
            if tokens.is_empty() {
                return Err(ParseError::NoNumber {
                    raw: raw.to_string(),
                });
            }
            for token in &tokens {
                let value = token_value(token);
                if (0.0..=1.0).contains(&value) {
                    return Ok(value);
                }
            }
            Err(ParseError::OutOfRange {
                raw: raw.to_string(),
                value: token_value(tokens[0]),
            })
        }
    }
}
