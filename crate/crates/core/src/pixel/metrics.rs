//! Per-plane MSE/PSNR and the combined PSNR over all planes.

use super::{PixelError, QualityReport, RasterImage};

/// PSNR reported when the MSE is exactly zero, instead of infinity.
pub const PSNR_SENTINEL_DB: f64 = 999.0;

fn mse_to_psnr(mse: f64, max_value: f64) -> f64 {
    if mse == 0.0 {
        PSNR_SENTINEL_DB
    } else {
        10.0 * (max_value * max_value / mse).log10()
    }
}

/// Compare two images of identical geometry, bit depth, and color space.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<QualityReport, PixelError> {
    a.same_geometry(b)?;
    if a.color_space() != b.color_space() {
        return Err(PixelError::ColorSpace {
            expected: a.color_space(),
            got: b.color_space(),
        });
    }
    let n = (a.width() * a.height()) as f64;
    let max = a.max_value() as f64;
    let mut mse_per_plane = [0.0f64; 3];
    for p in 0..3 {
        let sum: u64 = a
            .plane(p)
            .iter()
            .zip(b.plane(p))
            .map(|(&x, &y)| {
                let d = (x as i64 - y as i64).unsigned_abs();
                d * d
            })
            .sum();
        mse_per_plane[p] = sum as f64 / n;
    }
    let psnr_per_plane = [
        mse_to_psnr(mse_per_plane[0], max),
        mse_to_psnr(mse_per_plane[1], max),
        mse_to_psnr(mse_per_plane[2], max),
    ];
    let mean_mse = (mse_per_plane[0] + mse_per_plane[1] + mse_per_plane[2]) / 3.0;
    Ok(QualityReport {
        mse_per_plane,
        psnr_per_plane,
        psnr_combined: mse_to_psnr(mean_mse, max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::ColorSpace;

    #[test]
    fn identical_images_hit_the_sentinel() {
        let img = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [10, 20, 30]).unwrap();
        let report = psnr(&img, &img).unwrap();
        assert_eq!(report.psnr_combined, PSNR_SENTINEL_DB);
        assert_eq!(report.psnr_per_plane, [PSNR_SENTINEL_DB; 3]);
        assert_eq!(report.mse_per_plane, [0.0; 3]);
    }

    #[test]
    fn constant_offset_of_16_matches_closed_form() {
        // 20*log10(255/16) = 24.04840...
        let a = RasterImage::constant(8, 8, 8, ColorSpace::Rgb, [100, 100, 100]).unwrap();
        let b = RasterImage::constant(8, 8, 8, ColorSpace::Rgb, [116, 116, 116]).unwrap();
        let report = psnr(&a, &b).unwrap();
        assert!((report.psnr_combined - 24.0483).abs() < 0.001);
        for p in 0..3 {
            assert_eq!(report.mse_per_plane[p], 256.0);
        }
    }

    #[test]
    fn mismatched_sizes_error() {
        let a = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [0, 0, 0]).unwrap();
        let b = RasterImage::constant(4, 2, 8, ColorSpace::Rgb, [0, 0, 0]).unwrap();
        assert!(matches!(
            psnr(&a, &b),
            Err(PixelError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn mismatched_depths_error() {
        let a = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [0, 0, 0]).unwrap();
        let b = RasterImage::constant(4, 4, 10, ColorSpace::Rgb, [0, 0, 0]).unwrap();
        assert!(matches!(psnr(&a, &b), Err(PixelError::DepthMismatch(8, 10))));
    }

    #[test]
    fn doubling_the_residual_costs_six_db() {
        let base = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [100, 100, 100]).unwrap();
        let off1 = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [110, 105, 103]).unwrap();
        let off2 = RasterImage::constant(4, 4, 8, ColorSpace::Rgb, [120, 110, 106]).unwrap();
        let p1 = psnr(&base, &off1).unwrap().psnr_combined;
        let p2 = psnr(&base, &off2).unwrap().psnr_combined;
        assert!((p1 - p2 - 20.0 * 2f64.log10()).abs() < 1e-9);
    }
}
