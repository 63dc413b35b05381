use super::NodeCutoffTree;
use crate::error::{Error, Result};
use crate::polar::row_weight;
use crate::pretransform::RateProfile;

fn check(profile: &RateProfile, tree: &NodeCutoffTree, level: usize) -> Result<()> {
    if profile.len() != tree.n {
        return Err(Error::LengthMismatch { expected: tree.n, actual: profile.len() });
    }
    if level > tree.depth() {
        return Err(Error::InvalidConfig(format!(
            "level {level} deeper than the tree (depth {})",
            tree.depth()
        )));
    }
    Ok(())
}

/// Enforces the level-`level` caps: in every node holding more information
/// bits than its cap, the excess is frozen starting from the smallest positions.
pub fn tame_profile(profile: &RateProfile, tree: &NodeCutoffTree, level: usize) -> Result<RateProfile> {
    check(profile, tree, level)?;
    let mut out = profile.clone();
    for node in tree.level(level) {
        let info: Vec<usize> = (node.start..=node.end()).filter(|&p| out.is_info(p)).collect();
        let excess = info.len().saturating_sub(node.cap);
        for &p in &info[..excess] {
            out.set(p, false);
        }
    }
    Ok(out)
}

/// Enforces the caps of every level `1..=level`, shallowest first.
pub fn tame_profile_multilevel(
    profile: &RateProfile,
    tree: &NodeCutoffTree,
    level: usize,
) -> Result<RateProfile> {
    check(profile, tree, level)?;
    let mut out = profile.clone();
    for s in 1..=level {
        out = tame_profile(&out, tree, s)?;
    }
    Ok(out)
}

/// Grows `base` to `target_k` with positions of `donor` whose row weight is
/// `weight`, in increasing order, skipping any that would push a level-`level`
/// node of `tree` over its cap.
pub fn merge_profiles(
    base: &RateProfile,
    donor: &RateProfile,
    target_k: usize,
    weight: usize,
    tree: &NodeCutoffTree,
    level: usize,
) -> Result<RateProfile> {
    check(base, tree, level)?;
    if donor.len() != base.len() {
        return Err(Error::LengthMismatch { expected: base.len(), actual: donor.len() });
    }
    if target_k < base.k() {
        return Err(Error::InvalidConfig(format!(
            "target K={target_k} below the base dimension {}",
            base.k()
        )));
    }
    let n = base.len();
    let mut out = base.clone();
    let mut counts: Vec<usize> = tree
        .level(level)
        .iter()
        .map(|node| out.count_in(node.start, node.end()))
        .collect();
    let span = n >> level;
    for p in donor.positions() {
        if out.k() == target_k {
            break;
        }
        if out.is_info(p) || row_weight(n, p)? != weight {
            continue;
        }
        let j = (p - 1) / span;
        if counts[j] < tree.level(level)[j].cap {
            out.set(p, true);
            counts[j] += 1;
        }
    }
    if out.k() < target_k {
        return Err(Error::Unsatisfiable { achieved: out.k(), target: target_k });
    }
    Ok(out)
}
