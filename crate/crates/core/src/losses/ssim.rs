use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

fn window_taps() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Gaussian-weighted "valid" filtering (no padding): output is
/// `(w - 10) x (h - 10)`.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * data[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * horiz[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11x11 windows
/// (Gaussian sigma 1.5, C1 = 0.01^2, C2 = 0.03^2 for unit dynamic range).
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: SSIM_WINDOW,
            min_height: SSIM_WINDOW,
        });
    }
    let taps = window_taps();
    let (da, db) = (a.data(), b.data());
    let aa: Vec<f64> = da.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = db.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = da.iter().zip(db).map(|(p, q)| p * q).collect();
    let mu_a = filter_valid(da, w, h, &taps);
    let mu_b = filter_valid(db, w, h, &taps);
    let e_aa = filter_valid(&aa, w, h, &taps);
    let e_bb = filter_valid(&bb, w, h, &taps);
    let e_ab = filter_valid(&ab, w, h, &taps);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    Ok(total / mu_a.len() as f64)
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / a.len() as f64)
}

/// Reconstruction loss: `1 - SSIM + MSE`.
pub fn recp_loss(aligned: &Image, reconstructed: &Image) -> Result<f64> {
    Ok(1.0 - ssim(aligned, reconstructed)? + mse(aligned, reconstructed)?)
}
