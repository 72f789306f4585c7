//! Procedural infrared/visible scene pairs.
//!
//! Each scene is a painter's-order stack of rectangles, disks and thick
//! line segments. Most objects appear in both modalities with inverted
//! polarity in the infrared rendering; some are hot (bright in infrared
//! only by intensity), some are visible-only and some infrared-only.
//! Both renderings get the same mild blur and are quantized to 8 bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imgcore::{gaussian_blur, Image};

pub const CORPUS_SIZE: usize = 112;
pub const CORPUS_PAIRS: usize = 10;
pub const CORPUS_SEED: u64 = 0x5EED_0001;
const RENDER_BLUR: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub id: String,
    /// Infrared rendering (the moving image).
    pub ir: Image,
    /// Visible rendering (the reference image).
    pub vis: Image,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
    Line { ax: f64, ay: f64, bx: f64, by: f64, half: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Line { ax, ay, bx, by, half } => {
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0);
                let (px, py) = (ax + t * dx - x, ay + t * dy - y);
                px * px + py * py <= half * half
            }
        }
    }
}

struct Object {
    shape: Shape,
    vis: Option<f64>,
    ir: Option<f64>,
}

fn random_shape(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Shape {
    let scale = w.min(h);
    match rng.gen_range(0..3) {
        0 => {
            let (x0, y0) = (rng.gen_range(-0.1..0.9) * w, rng.gen_range(-0.1..0.9) * h);
            Shape::Rect {
                x0,
                y0,
                x1: x0 + rng.gen_range(0.08..0.4) * scale,
                y1: y0 + rng.gen_range(0.08..0.4) * scale,
            }
        }
        1 => Shape::Disk {
            cx: rng.gen_range(0.0..1.0) * w,
            cy: rng.gen_range(0.0..1.0) * h,
            r: rng.gen_range(0.04..0.16) * scale,
        },
        _ => Shape::Line {
            ax: rng.gen_range(0.0..1.0) * w,
            ay: rng.gen_range(0.0..1.0) * h,
            bx: rng.gen_range(0.0..1.0) * w,
            by: rng.gen_range(0.0..1.0) * h,
            half: rng.gen_range(0.8..2.5),
        },
    }
}

fn quantize(img: &Image) -> Image {
    img.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
}

/// One scene pair of the given size.
pub fn generate_pair(width: usize, height: usize, seed: u64) -> Result<ScenePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let bg_vis: f64 = rng.gen_range(0.35..0.6);
    let bg_ir = 0.9 - 0.7 * bg_vis;
    let count = rng.gen_range(14..20);
    let objects: Vec<Object> = (0..count)
        .map(|_| {
            let shape = random_shape(&mut rng, w, h);
            let v: f64 = rng.gen_range(0.05..0.95);
            let inverted = (0.9 - 0.7 * v + rng.gen_range(-0.08..0.08)).clamp(0.0, 1.0);
            let (vis, ir) = match rng.gen_range(0..10) {
                0 => (Some(v), Some(rng.gen_range(0.85..1.0))),
                1 => (Some(v), None),
                2 => (None, Some(rng.gen_range(0.6..1.0))),
                _ => (Some(v), Some(inverted)),
            };
            Object { shape, vis, ir }
        })
        .collect();
    let render = |pick: fn(&Object) -> Option<f64>, bg: f64| {
        Image::from_fn(width, height, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            objects
                .iter()
                .filter(|o| o.shape.contains(px, py))
                .filter_map(pick)
                .next_back()
                .unwrap_or(bg)
        })
    };
    let vis = render(|o| o.vis, bg_vis);
    let ir = render(|o| o.ir, bg_ir);
    Ok(ScenePair {
        id: format!("pair{seed:016x}"),
        ir: quantize(&gaussian_blur(&ir, RENDER_BLUR)?),
        vis: quantize(&gaussian_blur(&vis, RENDER_BLUR)?),
    })
}

/// The bundled corpus: `CORPUS_PAIRS` scenes of `CORPUS_SIZE` pixels.
pub fn bundled_corpus() -> Result<Vec<ScenePair>> {
    corpus(CORPUS_PAIRS, CORPUS_SIZE, CORPUS_SIZE, CORPUS_SEED)
}

pub fn corpus(count: usize, width: usize, height: usize, seed: u64) -> Result<Vec<ScenePair>> {
    (0..count)
        .map(|i| {
            let mut p = generate_pair(width, height, seed.wrapping_add(i as u64))?;
            p.id = format!("pair{i:02}");
            Ok(p)
        })
        .collect()
}
