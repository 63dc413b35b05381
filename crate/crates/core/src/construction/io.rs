//! Profile files: a line `N K`, then the `K` information positions
//! (1-based, ascending), one per line.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pretransform::RateProfile;

pub fn format_profile(profile: &RateProfile) -> String {
    let mut out = format!("{} {}\n", profile.len(), profile.k());
    for p in profile.positions() {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_profile(text: &str) -> Result<RateProfile> {
    let mut tokens = text.split_whitespace().map(|t| {
        t.parse::<usize>().map_err(|_| Error::Parse(format!("not a non-negative integer: {t:?}")))
    });
    let mut next = |what: &str| {
        tokens.next().unwrap_or_else(|| Err(Error::Parse(format!("missing {what}"))))
    };
    let n = next("N")?;
    let k = next("K")?;
    let positions = (0..k).map(|_| next("position")).collect::<Result<Vec<_>>>()?;
    if let Some(extra) = tokens.next() {
        return Err(Error::Parse(format!("trailing data after {k} positions: {extra:?}")));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("positions must be strictly ascending".into()));
    }
    RateProfile::from_positions(n, &positions)
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<RateProfile> {
    parse_profile(&std::fs::read_to_string(path)?)
}

pub fn write_profile(path: impl AsRef<Path>, profile: &RateProfile) -> Result<()> {
    std::fs::write(path, format_profile(profile))?;
    Ok(())
}
