//! Plain-text spec files.
//!
//! ```text
//! # comment
//! alphabet: 0 1
//! window: cross            (or offsets such as `0,0 1,0 0,1`)
//! allowed:
//! 0 0 0 0 0
//! forbidden:               (alternative to `allowed:`; `*` matches anything)
//! 1 1 *
//! ```

use std::fmt::Write as _;

use super::SftSpec;
use crate::error::{Error, Result};
use crate::lattice::{Site, Symbol, Window};

pub fn write_spec(spec: &SftSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "alphabet: {}", spec.names().join(" "));
    if spec.window().is_cross() {
        let _ = writeln!(out, "window: cross");
    } else {
        let offs: Vec<String> = spec.window().offsets().iter().map(|o| format!("{},{}", o.x, o.y)).collect();
        let _ = writeln!(out, "window: {}", offs.join(" "));
    }
    let name = |s: Symbol| spec.names()[s as usize].as_str();
    if let Some(patterns) = spec.forbidden_patterns() {
        let _ = writeln!(out, "forbidden:");
        for p in patterns {
            let row: Vec<&str> = p.iter().map(|s| s.map_or("*", name)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    } else {
        let _ = writeln!(out, "allowed:");
        for p in spec.allowed_patches().unwrap_or_default() {
            let row: Vec<&str> = p.iter().map(|&s| name(s)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_spec(text: &str) -> Result<SftSpec> {
    let mut names: Option<Vec<String>> = None;
    let mut window: Option<Window> = None;
    let mut section = "";
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse(format!("line {}: {m}", lineno + 1));
        if let Some(rest) = line.strip_prefix("alphabet:") {
            names = Some(rest.split_whitespace().map(String::from).collect());
        } else if let Some(rest) = line.strip_prefix("window:") {
            let rest = rest.trim();
            window = Some(if rest == "cross" {
                Window::cross()
            } else {
                let offs = rest
                    .split_whitespace()
                    .map(|t| {
                        let (x, y) = t.split_once(',').ok_or_else(|| err("offset must be x,y"))?;
                        Ok(Site::new(
                            x.parse().map_err(|_| err("bad offset"))?,
                            y.parse().map_err(|_| err("bad offset"))?,
                        ))
                    })
                    .collect::<Result<Vec<Site>>>()?;
                Window::new(offs)?
            });
        } else if line == "allowed:" || line == "forbidden:" {
            if !section.is_empty() {
                return Err(err("only one of allowed:/forbidden: may appear"));
            }
            section = if line == "allowed:" { "allowed" } else { "forbidden" };
        } else if section.is_empty() {
            return Err(err(&format!("unexpected line `{line}`")));
        } else {
            rows.push(line.split_whitespace().map(String::from).collect());
        }
    }
    let names = names.ok_or_else(|| Error::Parse("missing alphabet".into()))?;
    let window = window.ok_or_else(|| Error::Parse("missing window".into()))?;
    let lookup = |n: &str| -> Result<Symbol> {
        names.iter().position(|m| m == n).map(|i| i as Symbol).ok_or_else(|| Error::UnknownSymbol(n.to_string()))
    };
    for r in &rows {
        if r.len() != window.len() {
            return Err(Error::Parse(format!("pattern `{}` does not match the window size", r.join(" "))));
        }
    }
    if section == "forbidden" {
        let pats = rows
            .iter()
            .map(|r| r.iter().map(|n| if n == "*" { Ok(None) } else { lookup(n).map(Some) }).collect())
            .collect::<Result<Vec<Vec<Option<Symbol>>>>>()?;
        SftSpec::from_forbidden(names, window, pats)
    } else {
        let pats = rows.iter().map(|r| r.iter().map(|n| lookup(n)).collect()).collect::<Result<Vec<Vec<Symbol>>>>()?;
        SftSpec::from_allowed(names, window, pats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# two symbols\nalphabet: a b\nwindow: 0,0 1,0\nallowed:\na b\nb a\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.allowed_count(), Some(2));
        let again = parse_spec(&write_spec(&spec)).unwrap();
        assert_eq!(again.allowed_patches(), spec.allowed_patches());
        let f = parse_spec("alphabet: 0 1\nwindow: 0,0 1,0\nforbidden:\n1 *\n").unwrap();
        assert!(!f.admits(&[1, 0]));
        assert!(write_spec(&f).contains("1 *"));
        assert!(parse_spec("alphabet: a\nwindow: cross\nallowed:\na a\n").is_err());
    }
}
