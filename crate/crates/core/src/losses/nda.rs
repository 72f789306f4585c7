//! Neighborhood dynamic alignment: effective-edge matching within a pixel
//! neighborhood, comparing how far (and at what orientation) the other
//! modality's edges sit versus how far the warped image's edges moved.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::LossConfig;
use crate::error::{ensure_same_dims, Result};
use crate::imgcore::{ensure_min_size, sobel, EdgeMap, Image};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePixel {
    pub x: usize,
    pub y: usize,
    pub magnitude: f64,
    pub angle: f64,
}

/// Pixels whose Sobel magnitude strictly exceeds the threshold, in scan order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectiveEdgeSet {
    pub pixels: Vec<EdgePixel>,
}

impl EffectiveEdgeSet {
    pub fn count(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

pub fn effective_edges(img: &Image, mu: f64) -> Result<EffectiveEdgeSet> {
    let e = sobel(img)?;
    Ok(edges_from_map(&e, mu))
}

pub(crate) fn edges_from_map(e: &EdgeMap, mu: f64) -> EffectiveEdgeSet {
    let pixels = e
        .magnitude
        .iter()
        .zip(&e.angle)
        .enumerate()
        .filter(|(_, (&m, _))| m > mu)
        .map(|(i, (&m, &a))| EdgePixel {
            x: i % e.width,
            y: i / e.width,
            magnitude: m,
            angle: a,
        })
        .collect();
    EffectiveEdgeSet { pixels }
}

/// Square search window offsets ordered by Euclidean length, ties broken
/// by scan order of the candidate pixel.
#[derive(Debug, Clone)]
pub(crate) struct SearchOrder {
    offsets: Vec<(isize, isize, f64)>,
}

impl SearchOrder {
    pub fn new(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets: Vec<(isize, isize, isize)> = Vec::with_capacity((2 * radius + 1).pow(2));
        for dy in -r..=r {
            for dx in -r..=r {
                offsets.push((dx, dy, dx * dx + dy * dy));
            }
        }
        offsets.sort_by_key(|&(dx, dy, d2)| (d2, dy, dx));
        SearchOrder {
            offsets: offsets
                .into_iter()
                .map(|(dx, dy, d2)| (dx, dy, (d2 as f64).sqrt()))
                .collect(),
        }
    }

    /// Nearest effective edge (magnitude above `mu`) to `(x, y)`: `(index, distance)`.
    #[inline]
    pub fn nearest(&self, mag: &[f64], mu: f64, width: usize, height: usize, x: usize, y: usize) -> Option<(usize, f64)> {
        let (xi, yi) = (x as isize, y as isize);
        for &(dx, dy, d) in &self.offsets {
            let (cx, cy) = (xi + dx, yi + dy);
            if cx < 0 || cy < 0 || cx >= width as isize || cy >= height as isize {
                continue;
            }
            let idx = cy as usize * width + cx as usize;
            if mag[idx] > mu {
                return Some((idx, d));
            }
        }
        None
    }
}

/// Orientation difference treating gradient direction as sign-free, in [0, pi/2].
#[inline]
pub(crate) fn orientation_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdaTerms {
    pub distance: f64,
    pub angle: f64,
    pub matched: usize,
}

impl NdaTerms {
    pub fn total(&self) -> f64 {
        self.distance + self.angle
    }
}

/// First half of a source pixel's match: distance to and orientation gap
/// with the nearest edge of the other modality.
#[inline]
pub(crate) fn first_match(
    order: &SearchOrder,
    mu: f64,
    (width, height): (usize, usize),
    (x, y): (usize, usize),
    source_angle: f64,
    (mag, angle): (&[f64], &[f64]),
) -> Option<(f64, f64)> {
    let (m, p) = order.nearest(mag, mu, width, height, x, y)?;
    Some((p, orientation_gap(source_angle, angle[m])))
}

/// Per-source-pixel contribution `(squared distance gap, angle gap)` given
/// the first match; `None` when the aligned image has no edge in range.
#[inline]
pub(crate) fn second_match(
    order: &SearchOrder,
    mu: f64,
    (width, height): (usize, usize),
    (x, y): (usize, usize),
    source_angle: f64,
    (p1, q1): (f64, f64),
    (mag, angle): (&[f64], &[f64]),
) -> Option<(f64, f64)> {
    let (m, p2) = order.nearest(mag, mu, width, height, x, y)?;
    let q2 = orientation_gap(source_angle, angle[m]);
    Some(((p1 - p2) * (p1 - p2), (q1 - q2).abs()))
}

/// Distance term plus angle term, each averaged over the source edges that
/// found a partner in both searches. Zero when no pixel matched.
pub fn nda_loss(source: &Image, other: &Image, aligned: &Image, cfg: &LossConfig) -> Result<NdaTerms> {
    ensure_same_dims(source.dims(), other.dims())?;
    ensure_same_dims(source.dims(), aligned.dims())?;
    ensure_min_size(source, 3)?;
    let (w, h) = source.dims();
    let es = sobel(source)?;
    let eo = sobel(other)?;
    let ea = sobel(aligned)?;
    let order = SearchOrder::new(cfg.radius);
    let (mut di, mut an, mut matched) = (0.0, 0.0, 0usize);
    for (i, &m) in es.magnitude.iter().enumerate() {
        if m <= cfg.mu {
            continue;
        }
        let at = (i % w, i / w);
        let Some(first) = first_match(&order, cfg.mu, (w, h), at, es.angle[i], (&eo.magnitude, &eo.angle)) else {
            continue;
        };
        if let Some((d, a)) = second_match(&order, cfg.mu, (w, h), at, es.angle[i], first, (&ea.magnitude, &ea.angle)) {
            di += d;
            an += a;
            matched += 1;
        }
    }
    if matched == 0 {
        return Ok(NdaTerms {
            distance: 0.0,
            angle: 0.0,
            matched: 0,
        });
    }
    Ok(NdaTerms {
        distance: di / matched as f64,
        angle: an / matched as f64,
        matched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_order_prefers_scan_order_on_ties() {
        let order = SearchOrder::new(2);
        let mut mag = vec![0.0; 25];
        // (2,1) and (1,2) are both at distance 1 from (2,2); (2,1) comes first
        mag[1 * 5 + 2] = 1.0;
        mag[2 * 5 + 1] = 1.0;
        assert_eq!(order.nearest(&mag, 0.5, 5, 5, 2, 2), Some((7, 1.0)));
        assert_eq!(order.nearest(&mag, 1.0, 5, 5, 2, 2), None);
    }

    #[test]
    fn orientation_gap_ignores_polarity() {
        assert!(orientation_gap(0.3, 0.3 + PI).abs() < 1e-12);
        assert!((orientation_gap(0.0, PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert!((orientation_gap(-PI + 0.1, 0.0) - 0.1).abs() < 1e-12);
    }
}
