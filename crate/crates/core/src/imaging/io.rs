use std::io::ErrorKind;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};

use super::{ImageError, RasterImage};

/// Reads a PNG or JPEG file. Grayscale sources decode to 1 channel, everything else to RGB.
pub fn decode_image(path: &Path) -> Result<RasterImage, ImageError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => ImageError::FileNotFound(path.to_path_buf()),
        _ => ImageError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    // Content decides the format; the extension is ignored.
    let format = match image::guess_format(&bytes) {
        Ok(f @ (ImageFormat::Png | ImageFormat::Jpeg)) => f,
        Ok(other) => return Err(ImageError::UnsupportedFormat(format!("{other:?}"))),
        Err(_) => {
            return Err(ImageError::UnsupportedFormat(format!(
                "unrecognized content in {}",
                path.display()
            )))
        }
    };
    let decoded = image::load_from_memory_with_format(&bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(u) => ImageError::UnsupportedFormat(u.to_string()),
        other => ImageError::CorruptImage(format!("{}: {other}", path.display())),
    })?;
    from_dynamic(decoded)
}

fn from_dynamic(img: DynamicImage) -> Result<RasterImage, ImageError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => {
            RasterImage::from_bytes(w, h, 1, img.into_luma8().into_raw())
        }
        _ => RasterImage::from_bytes(w, h, 3, img.into_rgb8().into_raw()),
    }
}

/// Writes an 8-bit non-interlaced PNG. UnitFloat images are quantized with `round(v * 255)`.
pub fn encode_image(img: &RasterImage, path: &Path) -> Result<(), ImageError> {
    let bytes = img.to_byte();
    let color = if img.channels() == 1 {
        ColorType::L8
    } else {
        ColorType::Rgb8
    };
    image::save_buffer_with_format(
        path,
        bytes.as_bytes().expect("to_byte yields Byte depth"),
        img.width() as u32,
        img.height() as u32,
        color,
        ImageFormat::Png,
    )
    .map_err(|e| {
        let source = match e {
            image::ImageError::IoError(io) => io,
            other => std::io::Error::new(ErrorKind::Other, other.to_string()),
        };
        ImageError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}
