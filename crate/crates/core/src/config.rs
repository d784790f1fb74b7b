//! `key=value` settings files shared by the pipeline and the command line.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are trimmed and
//! normalized so that `min_count` and `min-count` name the same setting.
//! Values are trimmed of surrounding whitespace; a value wrapped in double
//! quotes keeps its inner text verbatim.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::parse(context, lineno + 1, "expected key=value"))?;
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(Error::parse(context, lineno + 1, "empty key"));
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if values.insert(key.clone(), value.to_owned()).is_some() {
                return Err(Error::parse(
                    context,
                    lineno + 1,
                    format!("duplicate key '{key}'"),
                ));
            }
        }
        Ok(Settings { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_bool(v)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("{key}: expected a boolean, got '{v}'"))),
        }
    }
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_lowercase()
}

pub fn parse_bool(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Parses a whitespace-separated list of characters. Each item is either a
/// single character or a `U+XXXX` code point.
pub fn parse_char_list(value: &str) -> Result<Vec<char>> {
    value
        .split_whitespace()
        .map(|item| {
            let mut chars = item.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => parse_code_point(item),
            }
        })
        .collect()
}

fn parse_code_point(item: &str) -> Result<char> {
    let hex = item
        .strip_prefix("U+")
        .or_else(|| item.strip_prefix("u+"))
        .ok_or_else(|| Error::Config(format!("'{item}' is neither a character nor U+XXXX")))?;
    u32::from_str_radix(hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| Error::Config(format!("'{item}' is not a valid code point")))
}

/// Renders characters in the form accepted by [`parse_char_list`].
pub fn format_char_list<'a>(chars: impl IntoIterator<Item = &'a char>) -> String {
    chars
        .into_iter()
        .map(|c| {
            if c.is_ascii_graphic() && *c != '#' && *c != '"' {
                c.to_string()
            } else {
                format!("U+{:04X}", *c as u32)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
