//! Edge-cued, segmentation-limited half-maximum boundary search.

use super::RayPair;
use crate::{Error, Result};

/// Boundary found on one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwhmHit {
    /// Distance from the plane centre, mm.
    pub distance: f64,
    /// `I_max - I_min` on the ray, HU.
    pub contrast: f64,
}

/// Interior strict local maxima of `r`, as inclusive plateau ranges.
fn local_maxima(r: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < r.len() {
        if r[i] > r[i - 1] {
            let mut j = i;
            while j + 1 < r.len() && r[j + 1] == r[i] {
                j += 1;
            }
            if j + 1 < r.len() && r[j + 1] < r[i] {
                out.push((i, j));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Boundary distance on a ray pair.
///
/// The search is cued by the first sample where the mask profile drops below
/// 0.5. The CT local maximum nearest that sample (ties to the smaller index)
/// gives `I_max`, the minimum between the centre and that maximum gives
/// `I_min`, and the boundary is where the CT profile crosses their mean,
/// scanning back from the maximum and interpolating linearly.
pub fn fwhm_boundary(ray: &RayPair) -> Result<FwhmHit> {
    let (rb, rc) = (&ray.rb, &ray.rc);
    let s = rb
        .iter()
        .position(|&v| v < 0.5)
        .ok_or(Error::RayRejected("mask never drops below 0.5"))?;
    let x_max = local_maxima(rc)
        .into_iter()
        .map(|(a, b)| {
            let nearest = s.clamp(a, b);
            (nearest.abs_diff(s), nearest)
        })
        .min()
        .map(|(_, x)| x)
        .ok_or(Error::RayRejected("no local maximum"))?;
    let i_max = rc[x_max];
    let i_min = rc[..=x_max].iter().copied().fold(f64::INFINITY, f64::min);
    if i_max <= i_min {
        return Err(Error::RayRejected("no contrast"));
    }
    let half = 0.5 * (i_max + i_min);
    let j = (1..=x_max)
        .rev()
        .find(|&j| rc[j - 1] < half && rc[j] >= half)
        .ok_or(Error::RayRejected("no half-maximum crossing"))?;
    let frac = (half - rc[j - 1]) / (rc[j] - rc[j - 1]);
    Ok(FwhmHit {
        distance: (j as f64 - 1.0 + frac) * ray.step,
        contrast: i_max - i_min,
    })
}
