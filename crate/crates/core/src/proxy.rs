//! Proxy data generation: patchwise flips and quarter-turn rotations that are
//! recorded in a transcript so they can be undone exactly, on images and on
//! displacement fields alike.
//!
//! A [`PatchOp`] acts on positions (relative to the patch center) as the
//! linear map `M = R^k * Fv * Fh`: flips first, then `k` counter-clockwise
//! quarter turns. Images transform as `out(M u) = in(u)`. Displacement
//! fields additionally have their vectors rotated: `psi(M u) = M phi(u)`,
//! which is what keeps warping equivariant under the transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{DisplacementField, Image};

/// One element of the dihedral group D4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatchOp {
    /// Counter-clockwise rotation in degrees: 0, 90, 180 or 270.
    pub rot: u16,
    pub fh: bool,
    pub fv: bool,
}

impl PatchOp {
    pub const IDENTITY: PatchOp = PatchOp {
        rot: 0,
        fh: false,
        fv: false,
    };

    fn quarter_turns(self) -> u8 {
        ((self.rot / 90) % 4) as u8
    }

    fn is_valid(self) -> bool {
        matches!(self.rot, 0 | 90 | 180 | 270)
    }

    /// True when the op swaps the axes (odd number of quarter turns).
    pub fn transposes(self) -> bool {
        self.quarter_turns() % 2 == 1
    }

    /// Forward linear action on a vector (or a centered position).
    #[inline]
    pub fn apply_vec<T: std::ops::Neg<Output = T>>(self, x: T, y: T) -> (T, T) {
        let (mut x, mut y) = (x, y);
        if self.fh {
            x = -x;
        }
        if self.fv {
            y = -y;
        }
        for _ in 0..self.quarter_turns() {
            let nx = -y;
            y = x;
            x = nx;
        }
        (x, y)
    }

    /// Inverse linear action.
    #[inline]
    pub fn invert_vec<T: std::ops::Neg<Output = T>>(self, x: T, y: T) -> (T, T) {
        let (mut x, mut y) = (x, y);
        for _ in 0..self.quarter_turns() {
            let nx = y;
            y = -x;
            x = nx;
        }
        if self.fv {
            y = -y;
        }
        if self.fh {
            x = -x;
        }
        (x, y)
    }

    /// Canonical index 0..8 of the group element this op represents.
    pub fn group_element(self) -> usize {
        let matrix = |op: PatchOp| (op.apply_vec(1i32, 0i32), op.apply_vec(0i32, 1i32));
        let target = matrix(self);
        (0..8)
            .position(|i| {
                let canonical = PatchOp {
                    rot: (i % 4) as u16 * 90,
                    fh: i >= 4,
                    fv: false,
                };
                matrix(canonical) == target
            })
            .expect("every PatchOp is a D4 element")
    }
}

/// Record of one proxy transform: grid parameter, source size and per-patch ops.
///
/// `n < 0` is the identity, `n == 0` a single global flip, `n >= 1` an
/// `n x n` grid of patches each with its own op (row-major).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformTranscript {
    pub n: i32,
    pub width: usize,
    pub height: usize,
    pub ops: Vec<PatchOp>,
}

impl TransformTranscript {
    pub fn identity(width: usize, height: usize) -> Self {
        TransformTranscript {
            n: -1,
            width,
            height,
            ops: vec![PatchOp::IDENTITY],
        }
    }

    pub fn global(width: usize, height: usize, op: PatchOp) -> Self {
        TransformTranscript {
            n: 0,
            width,
            height,
            ops: vec![op],
        }
    }

    pub fn patches_per_side(&self) -> usize {
        if self.n >= 1 {
            self.n as usize
        } else {
            1
        }
    }

    pub fn patch_size(&self) -> (usize, usize) {
        let k = self.patches_per_side();
        (self.width / k, self.height / k)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.patches_per_side();
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("transcript for an empty raster".into()));
        }
        if !self.width.is_multiple_of(k) || !self.height.is_multiple_of(k) {
            return Err(Error::Indivisible {
                width: self.width,
                height: self.height,
                n: self.n,
            });
        }
        if self.ops.len() != k * k {
            return Err(Error::Malformed(format!(
                "transcript with n={} carries {} ops",
                self.n,
                self.ops.len()
            )));
        }
        let (pw, ph) = self.patch_size();
        for op in &self.ops {
            if !op.is_valid() {
                return Err(Error::Malformed(format!("rotation {} is not a quarter turn", op.rot)));
            }
            if op.transposes() && pw != ph {
                return Err(Error::InvalidParameter(format!(
                    "quarter-turn rotation of a non-square {pw}x{ph} patch"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: TransformTranscript = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    /// Per-pixel correspondence: `map[u]` is the index of `M u` for the op of
    /// the patch containing `u`; `patch[u]` is that patch's index.
    pub(crate) fn pixel_map(&self) -> Result<PixelMap> {
        self.validate()?;
        let k = self.patches_per_side();
        let (pw, ph) = self.patch_size();
        let mut map = vec![0u32; self.width * self.height];
        let mut patch = vec![0u16; self.width * self.height];
        for py in 0..k {
            for px in 0..k {
                let pi = py * k + px;
                let op = self.ops[pi];
                for ly in 0..ph {
                    for lx in 0..pw {
                        let (mx, my) = map_local(op, pw, ph, lx, ly);
                        let u = (py * ph + ly) * self.width + px * pw + lx;
                        let v = (py * ph + my) * self.width + px * pw + mx;
                        map[u] = v as u32;
                        patch[u] = pi as u16;
                    }
                }
            }
        }
        Ok(PixelMap {
            map,
            patch,
            ops: self.ops.clone(),
        })
    }

    /// Rectangles (global frame, exclusive ends) of pixels `u` whose image
    /// `M u` lands in `rect` (transformed frame).
    pub(crate) fn preimage_rects(&self, rect: Rect) -> Vec<Rect> {
        let k = self.patches_per_side();
        let (pw, ph) = self.patch_size();
        let mut out = Vec::new();
        for py in 0..k {
            for px in 0..k {
                let patch_rect = Rect {
                    x0: px * pw,
                    y0: py * ph,
                    x1: (px + 1) * pw,
                    y1: (py + 1) * ph,
                };
                let Some(r) = rect.intersect(&patch_rect) else { continue };
                let op = self.ops[py * k + px];
                // corners in patch-local coordinates, mapped back by M^-1
                let corners = [
                    (r.x0 - patch_rect.x0, r.y0 - patch_rect.y0),
                    (r.x1 - 1 - patch_rect.x0, r.y1 - 1 - patch_rect.y0),
                ];
                let mapped: Vec<(usize, usize)> = corners
                    .iter()
                    .map(|&(x, y)| unmap_local(op, pw, ph, x, y))
                    .collect();
                let (ax, ay) = mapped[0];
                let (bx, by) = mapped[1];
                out.push(Rect {
                    x0: patch_rect.x0 + ax.min(bx),
                    y0: patch_rect.y0 + ay.min(by),
                    x1: patch_rect.x0 + ax.max(bx) + 1,
                    y1: patch_rect.y0 + ay.max(by) + 1,
                });
            }
        }
        out
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        };
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn dilate(&self, by: usize, width: usize, height: usize) -> Rect {
        Rect {
            x0: self.x0.saturating_sub(by),
            y0: self.y0.saturating_sub(by),
            x1: (self.x1 + by).min(width),
            y1: (self.y1 + by).min(height),
        }
    }
}

pub(crate) struct PixelMap {
    pub map: Vec<u32>,
    pub patch: Vec<u16>,
    pub ops: Vec<PatchOp>,
}

impl PixelMap {
    #[inline]
    pub fn op_at(&self, u: usize) -> PatchOp {
        self.ops[self.patch[u] as usize]
    }
}

/// Local position of `M (lx, ly)` inside a `pw x ph` patch.
fn map_local(op: PatchOp, pw: usize, ph: usize, lx: usize, ly: usize) -> (usize, usize) {
    let cx = 2 * lx as i64 - (pw as i64 - 1);
    let cy = 2 * ly as i64 - (ph as i64 - 1);
    let (mx, my) = op.apply_vec(cx, cy);
    (((mx + pw as i64 - 1) / 2) as usize, ((my + ph as i64 - 1) / 2) as usize)
}

/// Local position of `M^-1 (lx, ly)`.
fn unmap_local(op: PatchOp, pw: usize, ph: usize, lx: usize, ly: usize) -> (usize, usize) {
    let cx = 2 * lx as i64 - (pw as i64 - 1);
    let cy = 2 * ly as i64 - (ph as i64 - 1);
    let (mx, my) = op.invert_vec(cx, cy);
    (((mx + pw as i64 - 1) / 2) as usize, ((my + ph as i64 - 1) / 2) as usize)
}

fn check_dims(t: &TransformTranscript, dims: (usize, usize)) -> Result<()> {
    ensure_same_dims((t.width, t.height), dims)
}

/// Forward transform of an image: each patch is flipped/rotated in place.
pub fn pdg_apply(img: &Image, t: &TransformTranscript) -> Result<Image> {
    check_dims(t, img.dims())?;
    let pm = t.pixel_map()?;
    let src = img.data();
    let mut out = vec![0.0; src.len()];
    for (u, &v) in pm.map.iter().enumerate() {
        out[v as usize] = src[u];
    }
    Image::new(t.width, t.height, out)
}

/// Exact inverse of [`pdg_apply`].
pub fn ipdg_image(img: &Image, t: &TransformTranscript) -> Result<Image> {
    check_dims(t, img.dims())?;
    let pm = t.pixel_map()?;
    let src = img.data();
    let out = pm.map.iter().map(|&v| src[v as usize]).collect();
    Image::new(t.width, t.height, out)
}

/// Forward transform of a displacement field: positions move like image
/// pixels and every vector is acted on by its patch's op.
pub fn pdg_field_apply(field: &DisplacementField, t: &TransformTranscript) -> Result<DisplacementField> {
    check_dims(t, field.dims())?;
    let pm = t.pixel_map()?;
    let mut out = DisplacementField::zeros(t.width, t.height);
    for (u, &v) in pm.map.iter().enumerate() {
        let (dx, dy) = pm.op_at(u).apply_vec(field.dx[u], field.dy[u]);
        out.dx[v as usize] = dx;
        out.dy[v as usize] = dy;
    }
    Ok(out)
}

/// Exact inverse of [`pdg_field_apply`]: maps a field predicted on the
/// transformed image back into the original frame.
pub fn ipdg_field(field: &DisplacementField, t: &TransformTranscript) -> Result<DisplacementField> {
    check_dims(t, field.dims())?;
    let pm = t.pixel_map()?;
    let mut out = DisplacementField::zeros(t.width, t.height);
    for (u, &v) in pm.map.iter().enumerate() {
        let v = v as usize;
        let (dx, dy) = pm.op_at(u).invert_vec(field.dx[v], field.dy[v]);
        out.dx[u] = dx;
        out.dy[u] = dy;
    }
    Ok(out)
}

fn sample_op(rng: &mut impl Rng, allow_quarter_turns: bool, flips_only: bool) -> PatchOp {
    if flips_only {
        return PatchOp {
            rot: 0,
            fh: rng.gen(),
            fv: rng.gen(),
        };
    }
    let rot = if allow_quarter_turns {
        rng.gen_range(0..4u16) * 90
    } else {
        rng.gen_range(0..2u16) * 180
    };
    PatchOp {
        rot,
        fh: rng.gen(),
        fv: rng.gen(),
    }
}

/// Draws a transcript from `rng`. Grid patches get uniformly random D4
/// elements; non-square patches are restricted to the subgroup that keeps
/// their shape (flips and half turns).
pub fn pdg_sample_with(rng: &mut impl Rng, width: usize, height: usize, n: i32) -> TransformTranscript {
    if n < 0 {
        return TransformTranscript::identity(width, height);
    }
    if n == 0 {
        return TransformTranscript::global(width, height, sample_op(rng, false, true));
    }
    let k = n as usize;
    let square = width / k == height / k;
    let ops = (0..k * k).map(|_| sample_op(rng, square, false)).collect();
    TransformTranscript {
        n,
        width,
        height,
        ops,
    }
}

pub fn pdg_sample(width: usize, height: usize, n: i32, seed: u64) -> TransformTranscript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pdg_sample_with(&mut rng, width, height, n)
}
