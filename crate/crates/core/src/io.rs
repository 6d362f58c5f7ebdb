//! Raster file I/O: PNG (lossless) and JPEG at an explicit quality.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use jpeg_encoder::{ColorType, Encoder, SamplingFactor};

use crate::error::{Error, Result};
use crate::heterogeneity::QualityFactor;
use crate::image::{BinaryMask, GrayBuffer, ImageBuffer};

fn read_dynamic(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg) => {}
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
    reader.decode().map_err(|e| match e {
        image::ImageError::Limits(l) => Error::DimensionOverflow(l.to_string()),
        image::ImageError::IoError(source) => Error::Unreadable {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Codec(format!("{}: {other}", path.display())),
    })
}

fn from_dynamic(img: DynamicImage) -> Result<ImageBuffer> {
    let rgb = img.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ImageBuffer::new(w, h, rgb.into_raw())
}

/// Loads a PNG or JPEG file as 8-bit RGB; gray inputs are expanded and alpha dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    from_dynamic(read_dynamic(path.as_ref())?)
}

/// Loads a mask raster; any nonzero luma sample is part of the region.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let luma = read_dynamic(path.as_ref())?.into_luma8();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    BinaryMask::new(w, h, luma.into_raw().into_iter().map(|v| v != 0).collect())
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::DimensionOverflow(format!("{v} exceeds u32")))
}

fn write_png(path: &Path, bytes: Vec<u8>, w: usize, h: usize, color: image::ExtendedColorType) -> Result<()> {
    if !matches!(ImageFormat::from_path(path), Ok(ImageFormat::Png)) {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    image::save_buffer_with_format(path, &bytes, to_u32(w)?, to_u32(h)?, color, ImageFormat::Png)
        .map_err(|e| Error::Unwritable {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Saves as PNG; the path must carry a `.png` extension.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    write_png(
        path.as_ref(),
        img.data().to_vec(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )
}

/// Saves a single-channel PNG with 0 for background and 255 for the region.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_png(
        path.as_ref(),
        bytes,
        mask.width(),
        mask.height(),
        image::ExtendedColorType::L8,
    )
}

pub fn save_gray(gray: &GrayBuffer, path: impl AsRef<Path>) -> Result<()> {
    write_png(
        path.as_ref(),
        gray.data().to_vec(),
        gray.width(),
        gray.height(),
        image::ExtendedColorType::L8,
    )
}

/// Writes a baseline JPEG file at quality `q` with 4:4:4 sampling.
pub fn save_jpeg(img: &ImageBuffer, path: impl AsRef<Path>, q: QualityFactor) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_jpeg(img, q)?;
    std::fs::write(path, bytes).map_err(|e| Error::Unwritable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// PNG bytes of `img`, as carried in segmentation requests.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::write_buffer_with_format(
        &mut Cursor::new(&mut out),
        img.data(),
        to_u32(img.width())?,
        to_u32(img.height())?,
        image::ExtendedColorType::Rgb8,
        ImageFormat::Png,
    )
    .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// Baseline JPEG bytes at quality `q`, no chroma subsampling.
pub fn encode_jpeg(img: &ImageBuffer, q: QualityFactor) -> Result<Vec<u8>> {
    let (w, h) = img.dimensions();
    let w16 = u16::try_from(w).map_err(|_| Error::Codec(format!("width {w} exceeds JPEG limit")))?;
    let h16 = u16::try_from(h).map_err(|_| Error::Codec(format!("height {h} exceeds JPEG limit")))?;
    let mut out = Vec::new();
    let mut encoder = Encoder::new(&mut out, q.get());
    encoder.set_sampling_factor(SamplingFactor::R_4_4_4);
    encoder
        .encode(img.data(), w16, h16, ColorType::Rgb)
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// Decodes PNG or JPEG bytes to RGB.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Codec(e.to_string()))?;
    from_dynamic(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn png_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = ImageBuffer::new(16, 16, (0..16 * 16 * 3).map(|_| rng.random()).collect()).unwrap();
        let path = dir.path().join("noise.png");
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn mask_round_trip_and_nonzero_rule() {
        let dir = tempfile::tempdir().unwrap();
        let mut mask = BinaryMask::empty(5, 4).unwrap();
        mask.set(1, 2, true);
        mask.set(4, 0, true);
        let path = dir.path().join("m.png");
        save_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);

        let gray = GrayBuffer::new(3, 1, vec![0, 1, 255]).unwrap();
        let gpath = dir.path().join("g.png");
        save_gray(&gray, &gpath).unwrap();
        assert_eq!(load_mask(&gpath).unwrap().bits(), &[false, true, true]);
    }

    #[test]
    fn gray_png_expands_to_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let gray = GrayBuffer::new(2, 1, vec![10, 200]).unwrap();
        let path = dir.path().join("g.png");
        save_gray(&gray, &path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.pixel(0, 0), [10, 10, 10]);
        assert_eq!(img.pixel(1, 0), [200, 200, 200]);
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_image("/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, Error::Unreadable { .. }));
    }

    #[test]
    fn unsupported_format_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        std::fs::write(&path, b"hello world, not an image").unwrap();
        assert!(matches!(load_image(&path), Err(Error::UnsupportedFormat(_))));
        let img = ImageBuffer::filled(2, 2, [1, 2, 3]).unwrap();
        assert!(matches!(
            save_image(&img, dir.path().join("x.bmp")),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn jpeg_file_loads_with_same_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageBuffer::from_fn(19, 13, |x, y| [(x * 10) as u8, (y * 15) as u8, 90]).unwrap();
        let path = dir.path().join("a.jpg");
        save_jpeg(&img, &path, QualityFactor::new(75).unwrap()).unwrap();
        assert_eq!(load_image(&path).unwrap().dimensions(), (19, 13));
    }
}
