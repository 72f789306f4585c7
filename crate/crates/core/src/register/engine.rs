//! Incremental evaluation of the dual-branch objective.
//!
//! A control parameter only moves the dense field inside its support
//! rectangle, so a perturbed objective is the cached base objective plus
//! the change of per-pixel contributions over the affected region. Every
//! per-pixel value is computed by the same routine in the full refresh and
//! in the local update, so both paths agree term by term.

use super::config::{RegisterConfig, Weights};
use super::grid::{ControlGrid, GridLayout};
use super::objective::ObjectiveTerms;
use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{blur_region, gaussian_kernel, sample_plane, sobel_at, Image};
use crate::losses::{epr_at, first_match, second_match, smooth_at, SearchOrder};
use crate::proxy::{pdg_apply, PixelMap, Rect, TransformTranscript};

// Per-branch planes; direction `d` is 0 for the forward field (T warped)
// and 1 for the backward field (V warped).
const BRANCH_PLANES: usize = 10;
const FIELD: usize = 0; // dx at FIELD + 2d, dy at FIELD + 2d + 1
const ALIGNED: usize = 4; // + d
const MAG: usize = 6; // + 2d
const ANG: usize = 7; // + 2d

// Global-frame planes derived from the proxy branch, plus reconstructions.
const COUPLING: usize = 2 * BRANCH_PLANES;
const C_ALIGNED: usize = COUPLING; // + d
const C_FIELD: usize = COUPLING + 2; // dx at + 2d, dy at + 2d + 1
const C_RECON_G: usize = COUPLING + 6; // + d
const C_RECON_P: usize = COUPLING + 8; // + d
const NUM_PLANES: usize = COUPLING + 10;

/// Fixed inputs of one branch frame.
struct Frame {
    src: [Vec<f64>; 2],
    mag: [Vec<f64>; 2],
    ang: [Vec<f64>; 2],
    /// Nearest other-modality edge for each source edge pixel.
    first: [Vec<Option<(f64, f64)>>; 2],
}

#[derive(Default)]
struct BranchCache {
    nda: [Vec<Option<(f64, f64)>>; 2],
    el2: [Vec<f64>; 2],
    epr: [Vec<f64>; 2],
    smooth: [Vec<(f64, f64)>; 2],
    ic: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct BranchSums {
    di: [f64; 2],
    an: [f64; 2],
    m: [f64; 2],
    el2: [f64; 2],
    epr: [f64; 2],
    sx: [f64; 2],
    sy: [f64; 2],
    ic: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    b: [BranchSums; 2],
    ss: f64,
}

/// One optimizable scalar: branch, field direction, flat grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ParamId {
    pub branch: usize,
    pub dir: usize,
    pub k: usize,
}

pub(crate) struct Engine {
    w: usize,
    h: usize,
    weights: Weights,
    mu: f64,
    w1: f64,
    w2: f64,
    order: SearchOrder,
    radius: usize,
    layout: GridLayout,
    taps: Vec<f64>,
    blur_radius: usize,
    frames: Vec<Frame>,
    pmap: Option<PixelMap>,
    transcript: TransformTranscript,
    grids: Vec<[ControlGrid; 2]>,
    planes: Vec<Vec<f64>>,
    caches: Vec<BranchCache>,
    ss_cache: Vec<f64>,
    sums: Sums,
    max_forward: [f64; 2],
    undo: Vec<(usize, usize, f64)>,
    tmp: Vec<f64>,
    scratch: Vec<f64>,
    stamp: Vec<u32>,
    stamp_id: u32,
    active: Vec<ParamId>,
}

#[inline]
fn write(planes: &mut [Vec<f64>], undo: &mut Vec<(usize, usize, f64)>, p: usize, i: usize, v: f64) {
    let slot = &mut planes[p][i];
    undo.push((p, i, *slot));
    *slot = v;
}

#[inline]
fn pb(b: usize, off: usize) -> usize {
    b * BRANCH_PLANES + off
}

fn rect_pixels(r: Rect, w: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (r.y0..r.y1).flat_map(move |y| (r.x0..r.x1).map(move |x| (x, y, y * w + x)))
}

impl Engine {
    /// `proxy` must be `Some` exactly when the configuration keeps the
    /// branch coupling.
    pub fn new(
        t: &Image,
        v: &Image,
        transcript: &TransformTranscript,
        global: [ControlGrid; 2],
        proxy: Option<[ControlGrid; 2]>,
        cfg: &RegisterConfig,
    ) -> Result<Engine> {
        ensure_same_dims(t.dims(), v.dims())?;
        ensure_same_dims(t.dims(), (transcript.width, transcript.height))?;
        let (w, h) = t.dims();
        if w < 3 || h < 3 {
            return Err(Error::TooSmall {
                width: w,
                height: h,
                min_width: 3,
                min_height: 3,
            });
        }
        let weights = cfg.weights();
        if weights.coupling != proxy.is_some() {
            return Err(Error::InvalidParameter("proxy grids must be given exactly when branches are coupled".into()));
        }
        let mut grids = vec![global];
        if let Some(p) = proxy {
            grids.push(p);
        }
        for g in grids.iter().flatten() {
            ensure_same_dims((w, h), (g.width, g.height))?;
            ensure_same_dims((cfg.grid_w, cfg.grid_h), (g.gw, g.gh))?;
        }
        let order = SearchOrder::new(cfg.loss.radius);
        let mut frames = vec![make_frame(t, v, &order, cfg.loss.mu)?];
        let pmap = if weights.coupling {
            let tp = pdg_apply(t, transcript)?;
            let vp = pdg_apply(v, transcript)?;
            frames.push(make_frame(&tp, &vp, &order, cfg.loss.mu)?);
            Some(transcript.pixel_map()?)
        } else {
            None
        };
        let taps = gaussian_kernel(cfg.recon_sigma)?;
        let n = w * h;
        let nb = grids.len();
        let mut active = Vec::new();
        for branch in 0..nb {
            for dir in 0..if weights.optimize_n { 2 } else { 1 } {
                for k in 0..grids[branch][dir].num_params() {
                    active.push(ParamId { branch, dir, k });
                }
            }
        }
        let mut e = Engine {
            w,
            h,
            weights,
            mu: cfg.loss.mu,
            w1: cfg.loss.w1,
            w2: cfg.loss.w2,
            order,
            radius: cfg.loss.radius,
            layout: GridLayout::new(cfg.grid_w, cfg.grid_h, w, h),
            blur_radius: taps.len() / 2,
            taps,
            frames,
            pmap,
            transcript: transcript.clone(),
            grids,
            planes: vec![vec![0.0; n]; NUM_PLANES],
            caches: (0..nb).map(|_| BranchCache::default()).collect(),
            ss_cache: Vec::new(),
            sums: Sums::default(),
            max_forward: [0.0; 2],
            undo: Vec::new(),
            tmp: vec![0.0; n],
            scratch: Vec::new(),
            stamp: vec![0; n],
            stamp_id: 0,
            active,
        };
        e.refresh()?;
        Ok(e)
    }

    pub fn grids(&self) -> &[[ControlGrid; 2]] {
        &self.grids
    }

    pub fn active(&self) -> &[ParamId] {
        &self.active
    }

    pub fn params(&self) -> Vec<f64> {
        self.active
            .iter()
            .map(|p| self.grids[p.branch][p.dir].param(p.k))
            .collect()
    }

    /// Sets the active parameters and recomputes everything.
    pub fn set_params(&mut self, values: &[f64]) -> Result<ObjectiveTerms> {
        for (p, &v) in self.active.iter().zip(values) {
            self.grids[p.branch][p.dir].set_param(p.k, v);
        }
        self.refresh()?;
        Ok(self.terms())
    }

    pub fn terms(&self) -> ObjectiveTerms {
        self.terms_from(&self.sums)
    }

    fn terms_from(&self, s: &Sums) -> ObjectiveTerms {
        let wt = &self.weights;
        let n = (self.w * self.h) as f64;
        let nx = ((self.w - 1) * self.h) as f64;
        let ny = (self.w * (self.h - 1)) as f64;
        let mut acc = ObjectiveTerms::default();
        for bs in &s.b[..self.grids.len()] {
            let nda_dir = |d: usize| {
                if bs.m[d] > 0.0 {
                    bs.di[d] / bs.m[d] + bs.an[d] / bs.m[d]
                } else {
                    0.0
                }
            };
            let part = ObjectiveTerms::from_parts(
                if wt.nda > 0.0 { wt.nda * (nda_dir(0) + nda_dir(1)) } else { 0.0 },
                if wt.edge_l2 > 0.0 { wt.edge_l2 * (bs.el2[0] / n + bs.el2[1] / n) } else { 0.0 },
                if wt.epr > 0.0 { wt.epr * (bs.epr[0] / n + bs.epr[1] / n) } else { 0.0 },
                if wt.smooth > 0.0 {
                    wt.smooth * ((bs.sx[0] / nx + bs.sy[0] / ny) + (bs.sx[1] / nx + bs.sy[1] / ny))
                } else {
                    0.0
                },
                if wt.ic > 0.0 { wt.ic * (bs.ic / n) } else { 0.0 },
                0.0,
            );
            acc = ObjectiveTerms::from_parts(
                acc.nda + part.nda,
                acc.edge_l2 + part.edge_l2,
                acc.epr + part.epr,
                acc.smooth + part.smooth,
                acc.ic + part.ic,
                0.0,
            );
        }
        let ss = if self.coupled() { wt.ss * (s.ss / n) } else { 0.0 };
        ObjectiveTerms::from_parts(acc.nda, acc.edge_l2, acc.epr, acc.smooth, acc.ic, ss)
    }

    fn coupled(&self) -> bool {
        self.grids.len() == 2 && self.weights.ss > 0.0
    }

    // ---- per-pixel values shared by the refresh and the local updates ----

    #[inline]
    fn field_value(&self, b: usize, d: usize, comp: usize, x: usize, y: usize) -> f64 {
        let g = &self.grids[b][d];
        let vals = if comp == 0 { &g.dx } else { &g.dy };
        self.layout.interpolate(vals, x, y)
    }

    #[inline]
    fn warp_value(&self, b: usize, d: usize, x: usize, y: usize) -> f64 {
        let i = y * self.w + x;
        let fx = self.planes[pb(b, FIELD + 2 * d)][i];
        let fy = self.planes[pb(b, FIELD + 2 * d + 1)][i];
        sample_plane(&self.frames[b].src[d], self.w, self.h, x as f64 + fx, y as f64 + fy)
    }

    #[inline]
    fn sobel_value(&self, b: usize, d: usize, x: usize, y: usize) -> (f64, f64) {
        let (gx, gy) = sobel_at(&self.planes[pb(b, ALIGNED + d)], self.w, self.h, x, y);
        ((gx * gx + gy * gy).sqrt(), gy.atan2(gx))
    }

    #[inline]
    fn nda_value(&self, b: usize, d: usize, i: usize) -> Option<(f64, f64)> {
        let f = &self.frames[b];
        let first = f.first[d][i]?;
        second_match(
            &self.order,
            self.mu,
            (self.w, self.h),
            (i % self.w, i / self.w),
            f.ang[d][i],
            first,
            (&self.planes[pb(b, MAG + 2 * d)], &self.planes[pb(b, ANG + 2 * d)]),
        )
    }

    #[inline]
    fn el2_value(&self, b: usize, d: usize, i: usize) -> f64 {
        let e = self.planes[pb(b, MAG + 2 * d)][i] - self.frames[b].mag[1 - d][i];
        e * e
    }

    #[inline]
    fn epr_value(&self, b: usize, d: usize, i: usize) -> f64 {
        let f = &self.frames[b];
        epr_at(f.src[d][i], f.src[1 - d][i], self.planes[pb(b, ALIGNED + d)][i])
    }

    #[inline]
    fn smooth_value(&self, b: usize, d: usize, x: usize, y: usize) -> (f64, f64) {
        smooth_at(
            &self.planes[pb(b, FIELD + 2 * d)],
            &self.planes[pb(b, FIELD + 2 * d + 1)],
            self.w,
            self.h,
            x,
            y,
        )
    }

    #[inline]
    fn ic_value(&self, b: usize, x: usize, y: usize) -> f64 {
        let i = y * self.w + x;
        let px = self.planes[pb(b, FIELD)][i];
        let py = self.planes[pb(b, FIELD + 1)][i];
        let (sx, sy) = (x as f64 + px, y as f64 + py);
        let nx = sample_plane(&self.planes[pb(b, FIELD + 2)], self.w, self.h, sx, sy);
        let ny = sample_plane(&self.planes[pb(b, FIELD + 3)], self.w, self.h, sx, sy);
        let (rx, ry) = (px + nx, py + ny);
        rx * rx + ry * ry
    }

    /// Proxy-branch values pulled back to global pixel `u`: aligned
    /// intensity and displacement vector.
    #[inline]
    fn pullback(&self, d: usize, u: usize) -> (f64, (f64, f64)) {
        let pm = self.pmap.as_ref().expect("coupled engine has a pixel map");
        let m = pm.map[u] as usize;
        let a = self.planes[pb(1, ALIGNED + d)][m];
        let fx = self.planes[pb(1, FIELD + 2 * d)][m];
        let fy = self.planes[pb(1, FIELD + 2 * d + 1)][m];
        (a, pm.op_at(u).invert_vec(fx, fy))
    }

    #[inline]
    fn ss_value(&self, i: usize) -> f64 {
        let (w1, w2) = (self.w1, self.w2);
        let pair = |e: f64| w1 * e.abs() + w2 * e * e;
        let p = &self.planes;
        let mut s = pair(p[pb(0, ALIGNED)][i] - p[C_ALIGNED][i]) + pair(p[pb(0, ALIGNED + 1)][i] - p[C_ALIGNED + 1][i]);
        if self.weights.recon {
            s += pair(p[C_RECON_G][i] - p[C_RECON_P][i]) + pair(p[C_RECON_G + 1][i] - p[C_RECON_P + 1][i]);
        }
        for d in 0..2 {
            let ex = p[pb(0, FIELD + 2 * d)][i] - p[C_FIELD + 2 * d][i];
            let ey = p[pb(0, FIELD + 2 * d + 1)][i] - p[C_FIELD + 2 * d + 1][i];
            s += w1 * (ex.abs() + ey.abs()) + w2 * (ex * ex + ey * ey);
        }
        s
    }

    // ---- full recomputation ----

    fn refresh(&mut self) -> Result<()> {
        if self.grids.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("control grid"));
        }
        let (w, h) = (self.w, self.h);
        let n = w * h;
        let full = Rect {
            x0: 0,
            y0: 0,
            x1: w,
            y1: h,
        };
        let nb = self.grids.len();
        let wt = self.weights;
        for b in 0..nb {
            for d in 0..2 {
                for comp in 0..2 {
                    let vals: Vec<f64> = rect_pixels(full, w).map(|(x, y, _)| self.field_value(b, d, comp, x, y)).collect();
                    self.planes[pb(b, FIELD + 2 * d + comp)] = vals;
                }
                let vals: Vec<f64> = rect_pixels(full, w).map(|(x, y, _)| self.warp_value(b, d, x, y)).collect();
                self.planes[pb(b, ALIGNED + d)] = vals;
                let (mag, ang): (Vec<f64>, Vec<f64>) = rect_pixels(full, w).map(|(x, y, _)| self.sobel_value(b, d, x, y)).unzip();
                self.planes[pb(b, MAG + 2 * d)] = mag;
                self.planes[pb(b, ANG + 2 * d)] = ang;
            }
            self.max_forward[b] = self.planes[pb(b, FIELD)]
                .iter()
                .chain(&self.planes[pb(b, FIELD + 1)])
                .fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        let mut sums = Sums::default();
        for b in 0..nb {
            let mut cache = BranchCache::default();
            let s = &mut sums.b[b];
            for d in 0..2 {
                if wt.nda > 0.0 {
                    cache.nda[d] = (0..n).map(|i| self.nda_value(b, d, i)).collect();
                    for c in cache.nda[d].iter().flatten() {
                        s.di[d] += c.0;
                        s.an[d] += c.1;
                        s.m[d] += 1.0;
                    }
                }
                if wt.edge_l2 > 0.0 {
                    cache.el2[d] = (0..n).map(|i| self.el2_value(b, d, i)).collect();
                    s.el2[d] = cache.el2[d].iter().sum();
                }
                if wt.epr > 0.0 {
                    cache.epr[d] = (0..n).map(|i| self.epr_value(b, d, i)).collect();
                    s.epr[d] = cache.epr[d].iter().sum();
                }
                if wt.smooth > 0.0 {
                    cache.smooth[d] = rect_pixels(full, w).map(|(x, y, _)| self.smooth_value(b, d, x, y)).collect();
                    for c in &cache.smooth[d] {
                        s.sx[d] += c.0;
                        s.sy[d] += c.1;
                    }
                }
            }
            if wt.ic > 0.0 {
                cache.ic = rect_pixels(full, w).map(|(x, y, _)| self.ic_value(b, x, y)).collect();
                s.ic = cache.ic.iter().sum();
            }
            self.caches[b] = cache;
        }
        if self.coupled() {
            for d in 0..2 {
                let pulled: Vec<(f64, (f64, f64))> = (0..n).map(|u| self.pullback(d, u)).collect();
                self.planes[C_ALIGNED + d] = pulled.iter().map(|p| p.0).collect();
                self.planes[C_FIELD + 2 * d] = pulled.iter().map(|p| p.1 .0).collect();
                self.planes[C_FIELD + 2 * d + 1] = pulled.iter().map(|p| p.1 .1).collect();
                if wt.recon {
                    for (src, dst) in [(pb(0, ALIGNED + d), C_RECON_G + d), (C_ALIGNED + d, C_RECON_P + d)] {
                        blur_region(
                            &self.planes[src],
                            w,
                            h,
                            &self.taps,
                            (0, 0, w, h),
                            &mut self.scratch,
                            &mut self.tmp,
                        );
                        self.planes[dst].copy_from_slice(&self.tmp);
                    }
                }
            }
            self.ss_cache = (0..n).map(|i| self.ss_value(i)).collect();
            sums.ss = self.ss_cache.iter().sum();
        }
        self.sums = sums;
        Ok(())
    }

    // ---- local update ----

    /// Objective with one parameter set to `value`; state is restored.
    pub fn perturbed(&mut self, id: ParamId, value: f64) -> ObjectiveTerms {
        let ParamId { branch: b, dir: d, k } = id;
        let old = self.grids[b][d].param(k);
        self.grids[b][d].set_param(k, value);
        let (w, h) = (self.w, self.h);
        let wt = self.weights;
        let comp = k / (self.layout.gw * self.layout.gh);
        let s = self.layout.support_rect(k);

        let fplane = pb(b, FIELD + 2 * d + comp);
        for (x, y, i) in rect_pixels(s, w) {
            let v = self.field_value(b, d, comp, x, y);
            write(&mut self.planes, &mut self.undo, fplane, i, v);
        }
        let aplane = pb(b, ALIGNED + d);
        for (x, y, i) in rect_pixels(s, w) {
            let v = self.warp_value(b, d, x, y);
            write(&mut self.planes, &mut self.undo, aplane, i, v);
        }
        let s1 = s.dilate(1, w, h);
        for (x, y, i) in rect_pixels(s1, w) {
            let (m, a) = self.sobel_value(b, d, x, y);
            write(&mut self.planes, &mut self.undo, pb(b, MAG + 2 * d), i, m);
            write(&mut self.planes, &mut self.undo, pb(b, ANG + 2 * d), i, a);
        }

        let mut sums = self.sums;
        {
            let cache = &self.caches[b];
            let bs = &mut sums.b[b];
            if wt.nda > 0.0 {
                let first = &self.frames[b].first[d];
                for (_, _, i) in rect_pixels(s.dilate(1 + self.radius, w, h), w) {
                    if first[i].is_none() {
                        continue;
                    }
                    if let Some((di, an)) = self.nda_value(b, d, i) {
                        bs.di[d] += di;
                        bs.an[d] += an;
                        bs.m[d] += 1.0;
                    }
                    if let Some((di, an)) = cache.nda[d][i] {
                        bs.di[d] -= di;
                        bs.an[d] -= an;
                        bs.m[d] -= 1.0;
                    }
                }
            }
            if wt.edge_l2 > 0.0 {
                for (_, _, i) in rect_pixels(s1, w) {
                    bs.el2[d] += self.el2_value(b, d, i) - cache.el2[d][i];
                }
            }
            if wt.epr > 0.0 {
                for (_, _, i) in rect_pixels(s, w) {
                    bs.epr[d] += self.epr_value(b, d, i) - cache.epr[d][i];
                }
            }
            if wt.smooth > 0.0 {
                let r = Rect {
                    x0: s.x0.saturating_sub(1),
                    y0: s.y0.saturating_sub(1),
                    ..s
                };
                for (x, y, i) in rect_pixels(r, w) {
                    let (a, c) = self.smooth_value(b, d, x, y);
                    bs.sx[d] += a - cache.smooth[d][i].0;
                    bs.sy[d] += c - cache.smooth[d][i].1;
                }
            }
            if wt.ic > 0.0 {
                let r = if d == 0 {
                    s
                } else {
                    s.dilate(self.max_forward[b].ceil() as usize + 1, w, h)
                };
                for (x, y, i) in rect_pixels(r, w) {
                    bs.ic += self.ic_value(b, x, y) - cache.ic[i];
                }
            }
        }
        if self.coupled() {
            sums.ss += self.coupling_delta(b, d, s);
        }
        let terms = self.terms_from(&sums);

        while let Some((p, i, v)) = self.undo.pop() {
            self.planes[p][i] = v;
        }
        self.grids[b][d].set_param(k, old);
        terms
    }

    /// Updates coupling planes for a change inside `s` (frame of branch
    /// `b`) and returns the resulting change of the consistency sum.
    fn coupling_delta(&mut self, b: usize, d: usize, s: Rect) -> f64 {
        let (w, h) = (self.w, self.h);
        let br = self.blur_radius;
        let recon = self.weights.recon;
        let rects: Vec<Rect> = if b == 0 {
            vec![s]
        } else {
            self.transcript.preimage_rects(s)
        };
        if b == 1 {
            for &r in &rects {
                for (_, _, u) in rect_pixels(r, w) {
                    let (a, (fx, fy)) = self.pullback(d, u);
                    write(&mut self.planes, &mut self.undo, C_ALIGNED + d, u, a);
                    write(&mut self.planes, &mut self.undo, C_FIELD + 2 * d, u, fx);
                    write(&mut self.planes, &mut self.undo, C_FIELD + 2 * d + 1, u, fy);
                }
            }
        }
        let (src, dst) = if b == 0 {
            (pb(0, ALIGNED + d), C_RECON_G + d)
        } else {
            (C_ALIGNED + d, C_RECON_P + d)
        };
        let affected: Vec<Rect> = if recon {
            rects.iter().map(|r| r.dilate(br, w, h)).collect()
        } else {
            rects
        };
        if recon {
            for &r in &affected {
                blur_region(
                    &self.planes[src],
                    w,
                    h,
                    &self.taps,
                    (r.x0, r.y0, r.x1, r.y1),
                    &mut self.scratch,
                    &mut self.tmp,
                );
                for (_, _, i) in rect_pixels(r, w) {
                    let v = self.tmp[i];
                    write(&mut self.planes, &mut self.undo, dst, i, v);
                }
            }
        }
        self.stamp_id = self.stamp_id.wrapping_add(1);
        if self.stamp_id == 0 {
            self.stamp.fill(0);
            self.stamp_id = 1;
        }
        let mut delta = 0.0;
        for &r in &affected {
            for (_, _, i) in rect_pixels(r, w) {
                if self.stamp[i] == self.stamp_id {
                    continue;
                }
                self.stamp[i] = self.stamp_id;
                delta += self.ss_value(i) - self.ss_cache[i];
            }
        }
        delta
    }

    /// Central-difference gradient over the active parameters.
    pub fn gradient(&mut self, eps: f64) -> Result<Vec<f64>> {
        let mut g = Vec::with_capacity(self.active.len());
        for a in 0..self.active.len() {
            let id = self.active[a];
            let theta = self.grids[id.branch][id.dir].param(id.k);
            let fp = self.perturbed(id, theta + eps).total;
            let fm = self.perturbed(id, theta - eps).total;
            if !fp.is_finite() || !fm.is_finite() {
                return Err(Error::NonFinite("objective"));
            }
            g.push((fp - fm) / (2.0 * eps));
        }
        Ok(g)
    }
}

fn make_frame(t: &Image, v: &Image, order: &SearchOrder, mu: f64) -> Result<Frame> {
    let (w, h) = t.dims();
    let et = crate::imgcore::sobel(t)?;
    let ev = crate::imgcore::sobel(v)?;
    let first = |src: &crate::imgcore::EdgeMap, other: &crate::imgcore::EdgeMap| -> Vec<Option<(f64, f64)>> {
        (0..w * h)
            .map(|i| {
                if src.magnitude[i] <= mu {
                    return None;
                }
                first_match(order, mu, (w, h), (i % w, i / w), src.angle[i], (&other.magnitude, &other.angle))
            })
            .collect()
    };
    let first_t = first(&et, &ev);
    let first_v = first(&ev, &et);
    Ok(Frame {
        src: [t.data().to_vec(), v.data().to_vec()],
        first: [first_t, first_v],
        mag: [et.magnitude, ev.magnitude],
        ang: [et.angle, ev.angle],
    })
}
