//! Literal reference implementations shared by the integration tests.
//! Written loop by loop from the metric definitions; they share no code
//! with the library beyond the `Image` container.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfreg::imgcore::Image;

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| rng.gen_range(0.0..1.0))
}

pub fn random_triple(seed: u64, w: usize, h: usize) -> (Image, Image, Image) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_image(&mut rng, w, h), random_image(&mut rng, w, h), random_image(&mut rng, w, h))
}

pub fn textured(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (0.5 + 0.22 * (0.9 * x).sin() + 0.18 * (0.55 * y + 0.2 * x).cos() + 0.05 * (1.7 * x * y / 9.0).sin()).clamp(0.0, 1.0)
    })
}

fn px(img: &Image, x: isize, y: isize) -> f64 {
    let xx = x.clamp(0, img.width() as isize - 1) as usize;
    let yy = y.clamp(0, img.height() as isize - 1) as usize;
    img.get(xx, yy)
}

/// 3x3 Sobel correlation with replicated borders.
pub fn sobel_ref(img: &Image, x: usize, y: usize) -> (f64, f64) {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (mut gx, mut gy) = (0.0, 0.0);
    for j in 0..3 {
        for i in 0..3 {
            let v = px(img, x as isize + i as isize - 1, y as isize + j as isize - 1);
            gx += KX[j][i] * v;
            gy += KY[j][i] * v;
        }
    }
    (gx, gy)
}

pub fn ag_ref(f: &Image) -> f64 {
    let (w, h) = f.dims();
    let mut s = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let dx = 255.0 * f.get(x + 1, y) - 255.0 * f.get(x, y);
            let dy = 255.0 * f.get(x, y + 1) - 255.0 * f.get(x, y);
            s += ((dx.powi(2) + dy.powi(2)) / 2.0).sqrt();
        }
    }
    s / ((w - 1) * (h - 1)) as f64
}

pub fn mg_ref(f: &Image) -> f64 {
    let (w, h) = f.dims();
    let mut s = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let dx = 255.0 * f.get(x + 1, y) - 255.0 * f.get(x, y);
            let dy = 255.0 * f.get(x, y + 1) - 255.0 * f.get(x, y);
            s += 0.5 * dx.abs() + 0.5 * dy.abs();
        }
    }
    s / ((w - 1) * (h - 1)) as f64
}

pub fn ei_ref(f: &Image) -> f64 {
    let (w, h) = f.dims();
    let mut s = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = sobel_ref(f, x, y);
            s += 255.0 * gx.hypot(gy);
        }
    }
    s / (w * h) as f64
}

pub fn sf_ref(f: &Image) -> f64 {
    let (w, h) = f.dims();
    let mut rf = 0.0;
    for y in 0..h {
        for x in 1..w {
            rf += (255.0 * (f.get(x, y) - f.get(x - 1, y))).powi(2);
        }
    }
    let mut cf = 0.0;
    for y in 1..h {
        for x in 0..w {
            cf += (255.0 * (f.get(x, y) - f.get(x, y - 1))).powi(2);
        }
    }
    let rf = (rf / (h * (w - 1)) as f64).sqrt();
    let cf = (cf / ((h - 1) * w) as f64).sqrt();
    (rf * rf + cf * cf).sqrt()
}

fn orientation(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (gy / gx).atan()
    }
}

fn q_ref(gs: f64, as_: f64, gf: f64, af: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let g = if gs > gf {
        gf / gs
    } else if gs < gf {
        gs / gf
    } else {
        1.0
    };
    let mut d = (as_ - af).abs();
    if d > FRAC_PI_2 {
        d = PI - d;
    }
    let a = 1.0 - d / FRAC_PI_2;
    let qg = 0.9994 / (1.0 + (-15.0 * (g - 0.5)).exp());
    let qa = 0.9879 / (1.0 + (-22.0 * (a - 0.8)).exp());
    qg * qa
}

pub fn qabf_ref(a: &Image, b: &Image, f: &Image) -> f64 {
    let (w, h) = a.dims();
    let (mut num, mut den) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (ax, ay) = sobel_ref(a, x, y);
            let (bx, by) = sobel_ref(b, x, y);
            let (fx, fy) = sobel_ref(f, x, y);
            let (ga, gb, gf) = (ax.hypot(ay), bx.hypot(by), fx.hypot(fy));
            let af = orientation(fx, fy);
            if ga > 0.0 {
                num += ga * q_ref(ga, orientation(ax, ay), gf, af);
            }
            if gb > 0.0 {
                num += gb * q_ref(gb, orientation(bx, by), gf, af);
            }
            den += ga + gb;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Direct 2-D Gaussian (sigma 1, radius 3) with taps `step` pixels apart and
/// replicated borders.
fn dilated_blur_ref(img: &Image, step: isize) -> Image {
    let taps: Vec<f64> = (-3i32..=3).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
    let norm: f64 = taps.iter().sum();
    let (w, h) = img.dims();
    Image::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (j, tj) in taps.iter().enumerate() {
            for (i, ti) in taps.iter().enumerate() {
                let dx = (i as isize - 3) * step;
                let dy = (j as isize - 3) * step;
                acc += ti * tj / (norm * norm) * px(img, x as isize + dx, y as isize + dy);
            }
        }
        acc
    })
}

pub fn viff_ref(a: &Image, b: &Image, f: &Image) -> f64 {
    let (w, h) = a.dims();
    let (mut a, mut b, mut f) = (a.clone(), b.clone(), f.clone());
    let mut ratios = Vec::new();
    for scale in 0..4 {
        let step = 1usize << scale;
        if scale > 0 {
            a = dilated_blur_ref(&a, step as isize / 2);
            b = dilated_blur_ref(&b, step as isize / 2);
            f = dilated_blur_ref(&f, step as isize / 2);
        }
        let bw = w.div_ceil(step).min(8);
        let bh = h.div_ceil(step).min(8);
        let (mut num, mut den) = (0.0, 0.0);
        for by in 0..h {
            for bx in 0..w {
                if bx + (bw - 1) * step >= w || by + (bh - 1) * step >= h {
                    continue;
                }
                let mut cells = Vec::new();
                for j in 0..bh {
                    for i in 0..bw {
                        cells.push((bx + i * step, by + j * step));
                    }
                }
                let n = cells.len() as f64;
                let info = |r: &Image| {
                    let mr = cells.iter().map(|&(x, y)| 255.0 * r.get(x, y)).sum::<f64>() / n;
                    let mf = cells.iter().map(|&(x, y)| 255.0 * f.get(x, y)).sum::<f64>() / n;
                    let vr = cells.iter().map(|&(x, y)| (255.0 * r.get(x, y) - mr).powi(2)).sum::<f64>() / n;
                    let vf = cells.iter().map(|&(x, y)| (255.0 * f.get(x, y) - mf).powi(2)).sum::<f64>() / n;
                    let c = cells
                        .iter()
                        .map(|&(x, y)| (255.0 * r.get(x, y) - mr) * (255.0 * f.get(x, y) - mf))
                        .sum::<f64>()
                        / n;
                    let mut g = if vr > 0.0 { c / vr } else { 0.0 };
                    let mut sv = vf - g * c;
                    if g < 0.0 || vr <= 0.0 {
                        g = 0.0;
                        sv = vf;
                    }
                    let sv = sv.max(0.0);
                    ((1.0 + g * g * vr / (sv + 2.0)).log2(), (1.0 + vr / 2.0).log2())
                };
                let (ia, ib) = (info(&a), info(&b));
                let pick = if ib.1 > ia.1 { ib } else { ia };
                num += pick.0;
                den += pick.1;
            }
        }
        if den > 0.0 {
            ratios.push(num / den);
        }
    }
    if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    }
}
