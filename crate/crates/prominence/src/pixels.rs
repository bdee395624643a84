use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use prominence_core::GrayImage;

use crate::error::{AppError, Result};

/// Decodes a PNG or JPEG into luma intensities in `[0, 255]`. 8-bit gray
/// images are taken as is; anything else goes through RGB luma weights.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| AppError::parse(path, e.to_string()))?;
    if let DynamicImage::ImageLuma8(buf) = &img {
        let (w, h) = buf.dimensions();
        return GrayImage::from_luma8(w as usize, h as usize, buf.as_raw())
            .ok_or_else(|| AppError::parse(path, "inconsistent raster size"));
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    GrayImage::from_rgb8(w as usize, h as usize, rgb.as_raw())
        .ok_or_else(|| AppError::parse(path, "inconsistent raster size"))
}

/// Writes intensities, rounded and clamped to 8 bits, as a grayscale PNG.
pub fn save_gray_png(path: &Path, img: &GrayImage) -> Result<()> {
    let bytes: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, bytes)
            .ok_or_else(|| AppError::Input("raster size mismatch".into()))?;
    let mut encoded = Vec::new();
    buf.write_to(&mut std::io::Cursor::new(&mut encoded), image::ImageFormat::Png)
        .map_err(|e| AppError::Input(e.to_string()))?;
    crate::io::write_atomic(path, &encoded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_lossless_for_gray() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        let data: Vec<f64> = (0..12).map(|i| (i * 20) as f64).collect();
        let img = GrayImage::new(4, 3, data).unwrap();
        save_gray_png(&p, &img).unwrap();
        let back = load_gray(&p).unwrap();
        assert_eq!((back.width(), back.height()), (4, 3));
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unreadable_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"not an image").unwrap();
        assert!(matches!(load_gray(&p), Err(AppError::Parse { .. })));
    }
}
