//! PNG/JPEG reading for image targets and PNG writing for snapshots.

use std::path::Path;

use image::imageops::FilterType;
use image::{ImageBuffer, Rgb, RgbImage};
use meshstyle_core::Image;

use crate::error::{Error, Result};

/// Side length the encoders expect.
pub const TARGET_SIDE: u32 = 224;

/// Loads an image, resizes it to 224x224 and scales channels to `[0, 1]`.
pub fn load_target_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| Error::Image { path: path.to_path_buf(), message: e.to_string() })?;
    let rgb = img.to_rgb8();
    let rgb = if rgb.dimensions() == (TARGET_SIDE, TARGET_SIDE) {
        rgb
    } else {
        image::imageops::resize(&rgb, TARGET_SIDE, TARGET_SIDE, FilterType::Triangle)
    };
    Ok(from_rgb8(&rgb))
}

pub fn from_rgb8(rgb: &RgbImage) -> Image {
    let (w, h) = rgb.dimensions();
    let data = rgb.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    Image::from_raw(w as usize, h as usize, data)
}

pub fn write_png(image: &Image, path: &Path) -> Result<()> {
    let buf: RgbImage = ImageBuffer::<Rgb<u8>, _>::from_raw(image.width() as u32, image.height() as u32, image.to_rgb8())
        .expect("buffer matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let data: Vec<f64> = (0..224 * 224 * 3).map(|i| ((i * 37) % 256) as f64 / 255.0).collect();
        let img = Image::from_raw(224, 224, data);
        write_png(&img, &path).unwrap();
        let back = load_target_image(&path).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn other_sizes_are_resized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.png");
        write_png(&Image::filled(40, 30, [1.0, 0.0, 0.0]), &path).unwrap();
        let back = load_target_image(&path).unwrap();
        assert_eq!((back.width(), back.height()), (224, 224));
        assert!((back.pixel(100, 100)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_file_is_an_image_error() {
        assert!(matches!(load_target_image(Path::new("/no/such.png")), Err(Error::Image { .. })));
    }
}
