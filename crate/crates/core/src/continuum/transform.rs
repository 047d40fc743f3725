use super::{ContinuumProfile, Jump};
use crate::effective::EffectiveProfile;
use crate::error::{Error, Result};
use crate::potentials::ExternalLoad;

const X_SAMPLES: usize = 2049;
const W_SAMPLES: usize = 65;

/// Sign of ∂Φ/∂u(x, ·) over the sampled displacements: +1, -1, or 0 when it
/// vanishes at every sample. Zero samples are compatible with either sign.
fn sign_at(load: &ExternalLoad, x: f64, ws: &[f64]) -> Result<i8> {
    let mut seen: Option<(i8, f64)> = None;
    for &w in ws {
        let d = load.dphi_du(x, w);
        let s = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            continue;
        };
        match seen {
            None => seen = Some((s, w)),
            Some((t, w1)) if t != s => return Err(Error::SignStructureViolation { x, w1, w2: w }),
            _ => {}
        }
    }
    Ok(seen.map_or(0, |(s, _)| s))
}

/// Pieces of [0, 1] on which ∂Φ/∂u keeps one sign, as (start, end, sign).
fn sign_pieces(load: &ExternalLoad, ws: &[f64]) -> Result<Vec<(f64, f64, i8)>> {
    let xs: Vec<f64> = (0..X_SAMPLES).map(|k| k as f64 / (X_SAMPLES - 1) as f64).collect();
    let mut pieces = Vec::new();
    let mut start = 0.0;
    let mut current = 0i8;
    let mut last_x = 0.0;
    for &x in &xs {
        let s = sign_at(load, x, ws)?;
        if s == 0 {
            continue;
        }
        if current == 0 {
            current = s;
        } else if s != current {
            let (mut lo, mut hi) = (last_x, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if sign_at(load, mid, ws)? == s {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let cut = 0.5 * (lo + hi);
            pieces.push((start, cut, current));
            start = cut;
            current = s;
        }
        last_x = x;
    }
    pieces.push((start, 1.0, current));
    Ok(pieces)
}

/// Caps the slope at γ and moves the removed length, together with the
/// interior jumps, to one end of each piece on which ∂Φ/∂u has a fixed sign:
/// to the right end where Φ is nondecreasing in u (so ũ ≤ u) and to the left
/// end where it is nonincreasing (so ũ ≥ u). A final jump at x = 1 restores
/// the total elongation. The energy does not increase.
///
/// Sign constancy in w is checked on 2049 points in x against 65 displacements
/// spanning [0, ℓ] plus the node values of the profile.
pub fn cap_and_relocate(
    profile: &ContinuumProfile,
    load: &ExternalLoad,
    effective: &EffectiveProfile,
) -> Result<ContinuumProfile> {
    profile.validate_feasible()?;
    let gamma = effective.gamma();
    let ell = profile.ell();
    let top = ell.max(0.0);
    let mut ws: Vec<f64> = (0..W_SAMPLES).map(|k| top * k as f64 / (W_SAMPLES - 1) as f64).collect();
    ws.extend(profile.left_values());
    ws.extend(profile.right_values());
    let pieces = sign_pieces(load, &ws)?;

    let breaks: Vec<Jump> = pieces[1..].iter().map(|&(a, _, _)| Jump { x: a, size: 0.0 }).collect();
    let mut jumps = profile.jumps();
    jumps.extend(breaks);
    let refined = ContinuumProfile::new(profile.nodes().to_vec(), profile.slopes().to_vec(), jumps, ell)?;
    let nodes = refined.nodes();
    let rv = refined.right_values();
    let widths: Vec<f64> = refined.widths().collect();

    let slopes: Vec<f64> = refined.slopes().iter().map(|&s| s.min(gamma)).collect();
    let mut node_jumps = vec![0.0; nodes.len()];
    let mut u_left = 0.0;
    for &(a, b, sign) in &pieces {
        let ks = nodes.partition_point(|&t| t < a);
        let ke = nodes.partition_point(|&t| t < b);
        let excess: f64 = (ks..ke).map(|j| widths[j] * (refined.slopes()[j] - gamma).max(0.0)).sum::<f64>()
            + refined.node_jumps()[ks + 1..ke].iter().sum::<f64>();
        let start = if sign < 0 { rv[ks] + excess } else { rv[ks] };
        node_jumps[ks] = start - u_left;
        u_left = start + (ks..ke).map(|j| widths[j] * slopes[j]).sum::<f64>();
    }
    let last = nodes.len() - 1;
    node_jumps[last] = ell - u_left;
    for a in node_jumps.iter_mut() {
        if *a < 0.0 && *a >= -1e-12 * (1.0 + ell.abs()) {
            *a = 0.0;
        }
    }
    let out = ContinuumProfile::from_node_data(nodes.to_vec(), slopes, node_jumps, ell);
    out.validate_feasible()?;
    Ok(out)
}
