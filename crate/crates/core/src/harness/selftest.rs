//! Built-in analytic checks run by `selftest`.

use crate::fuse::fuse_max;
use crate::imgcore::{decode_field, encode_field, gaussian_blur, sobel, warp, DisplacementField, Image};
use crate::losses::{smooth_loss, LossConfig};
use crate::metrics::{ag, sf, viff};
use crate::proxy::{ipdg_field, ipdg_image, pdg_apply, pdg_field_apply, pdg_sample};

use super::misalign::{synth_misalign, MisalignmentKind, MisalignmentSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

fn textured(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| 0.5 + 0.3 * ((x as f64) * 0.8).sin() * ((y as f64) * 0.5).cos())
}

fn check(name: &'static str, f: impl FnOnce() -> crate::Result<bool>) -> Check {
    Check {
        name,
        passed: f().unwrap_or(false),
    }
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        check("warp_identity", || {
            let a = textured(9, 7);
            Ok(warp(&a, &DisplacementField::zeros(9, 7))? == a)
        }),
        check("warp_clamped_half_pixel", || {
            let a = Image::new(2, 2, vec![0.0, 1.0, 2.0, 3.0])?;
            let out = warp(&a, &DisplacementField::constant(2, 2, 0.5, 0.0))?;
            Ok(out.data() == [0.5, 1.0, 2.5, 3.0])
        }),
        check("sobel_negation", || {
            let a = textured(12, 12);
            let e = sobel(&a)?;
            let n = sobel(&a.map(|v| 1.0 - v))?;
            Ok(e.magnitude.iter().zip(&n.magnitude).all(|(p, q)| (p - q).abs() < 1e-12))
        }),
        check("blur_preserves_constant", || {
            let c = Image::filled(10, 10, 0.3);
            Ok(gaussian_blur(&c, 1.5)?.data().iter().all(|v| (v - 0.3).abs() < 1e-12))
        }),
        check("proxy_roundtrip", || {
            let a = textured(16, 16);
            let f = DisplacementField::from_fn(16, 16, |x, y| (x as f64 * 0.25, -(y as f64) * 0.5));
            for n in [0, 1, 2, 4] {
                let t = pdg_sample(16, 16, n, 11 + n as u64);
                if ipdg_image(&pdg_apply(&a, &t)?, &t)? != a || ipdg_field(&pdg_field_apply(&f, &t)?, &t)? != f {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        check("smooth_of_ramp", || {
            // dx = x: every horizontal difference is 1, every vertical one 0
            let f = DisplacementField::from_fn(4, 3, |x, _| (x as f64, 0.0));
            Ok((smooth_loss(&f)? - 1.0).abs() < 1e-12)
        }),
        check("field_codec", || {
            let f = DisplacementField::from_fn(5, 4, |x, y| (x as f64 * 0.5, y as f64 - 2.0));
            Ok(decode_field(&encode_field(&f))? == f)
        }),
        check("shift_moves_line", || {
            let img = Image::from_fn(30, 4, |x, _| if x == 10 { 1.0 } else { 0.0 });
            let out = synth_misalign(&img, MisalignmentSpec { kind: MisalignmentKind::Shift, level: 5 })?;
            Ok(out.get(15, 0) == 1.0 && out.get(10, 0) == 0.0)
        }),
        check("max_fusion", || {
            let a = Image::filled(3, 3, 0.3);
            let b = Image::filled(3, 3, 0.7);
            Ok(fuse_max(&a, &b)? == b)
        }),
        check("checkerboard_sf", || {
            let c = Image::from_fn(8, 8, |x, y| ((x + y) % 2) as f64);
            Ok((sf(&c)? - 255.0 * 2f64.sqrt()).abs() < 1e-9 && ag(&Image::filled(5, 5, 0.2))? == 0.0)
        }),
        check("viff_identity", || {
            let a = textured(32, 32);
            Ok((viff(&a, &a, &a)? - 1.0).abs() < 1e-6)
        }),
        check("loss_config_valid", || Ok(LossConfig::default().validate().is_ok())),
    ]
}
