//! Small helpers shared by the `tag:key=value,...` spec-string parsers.

use crate::error::{Error, Result};

pub(crate) fn split_tag(input: &str) -> Result<(&str, &str)> {
    let trimmed = input.trim();
    match trimmed.split_once(':') {
        Some((tag, body)) => Ok((tag.trim(), body.trim())),
        None => Ok((trimmed, "")),
    }
}

/// Parses `k=v,k=v` into ordered pairs, rejecting duplicates and empty keys.
pub(crate) fn key_values<'a>(input: &str, body: &'a str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    if body.is_empty() {
        return Ok(out);
    }
    for item in body.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::parse(input, format!("expected key=value, found `{item}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::parse(input, format!("empty key or value in `{item}`")));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::parse(input, format!("duplicate key `{k}`")));
        }
        out.push((k, v));
    }
    Ok(out)
}

pub(crate) fn lookup<'a>(input: &str, pairs: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    pairs
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::parse(input, format!("missing key `{key}`")))
}

pub(crate) fn reject_unknown(input: &str, pairs: &[(&str, &str)], allowed: &[&str]) -> Result<()> {
    match pairs.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => Err(Error::parse(input, format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

pub(crate) fn real(input: &str, key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| Error::parse(input, format!("`{key}` is not a number: `{value}`")))?;
    if !x.is_finite() {
        return Err(Error::parse(input, format!("`{key}` must be finite")));
    }
    Ok(x)
}

pub(crate) fn integer(input: &str, key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::parse(input, format!("`{key}` is not a nonnegative integer: `{value}`")))
}

/// Shortest decimal form that parses back to the same `f64`.
pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x}")
}
