use super::ImageError;

/// Pixel storage depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Depth {
    /// 8-bit values in `0..=255`.
    Byte,
    /// 32-bit reals in `[0.0, 1.0]`.
    UnitFloat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PixelData {
    Byte(Vec<u8>),
    UnitFloat(Vec<f32>),
}

impl PixelData {
    pub fn len(&self) -> usize {
        match self {
            PixelData::Byte(v) => v.len(),
            PixelData::UnitFloat(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A decoded 2-D image with 1 or 3 interleaved channels, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: PixelData,
}

impl RasterImage {
    fn check_layout(width: usize, height: usize, channels: usize, len: usize) -> Result<(), ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidLayout(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::InvalidLayout(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if len != width * height * channels {
            return Err(ImageError::InvalidLayout(format!(
                "data length {len} != {width}x{height}x{channels}"
            )));
        }
        Ok(())
    }

    pub fn from_bytes(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        Self::check_layout(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data: PixelData::Byte(data),
        })
    }

    pub fn from_unit(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self, ImageError> {
        Self::check_layout(width, height, channels, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageError::InvalidLayout(format!(
                "unit-float pixel {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data: PixelData::UnitFloat(data),
        })
    }

    /// A Byte image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, ImageError> {
        Self::from_bytes(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn depth(&self) -> Depth {
        match self.data {
            PixelData::Byte(_) => Depth::Byte,
            PixelData::UnitFloat(_) => Depth::UnitFloat,
        }
    }

    pub fn data(&self) -> &PixelData {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match &self.data {
            PixelData::Byte(v) => Some(v),
            PixelData::UnitFloat(_) => None,
        }
    }

    pub fn as_unit(&self) -> Option<&[f32]> {
        match &self.data {
            PixelData::UnitFloat(v) => Some(v),
            PixelData::Byte(_) => None,
        }
    }

    pub fn into_bytes(self) -> Option<Vec<u8>> {
        match self.data {
            PixelData::Byte(v) => Some(v),
            PixelData::UnitFloat(_) => None,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    /// Sample value in the image's own scale (0..255 for Byte, 0..1 for UnitFloat).
    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> f32 {
        let i = self.index(x, y, c);
        match &self.data {
            PixelData::Byte(v) => v[i] as f32,
            PixelData::UnitFloat(v) => v[i],
        }
    }

    /// Byte view of the image; UnitFloat values are quantized by `round(v * 255)`.
    pub fn to_byte(&self) -> RasterImage {
        match &self.data {
            PixelData::Byte(_) => self.clone(),
            PixelData::UnitFloat(v) => RasterImage {
                width: self.width,
                height: self.height,
                channels: self.channels,
                data: PixelData::Byte(v.iter().map(|&x| quantize(x)).collect()),
            },
        }
    }

    /// Unit-float samples regardless of depth (Byte values are divided by 255).
    pub fn unit_samples(&self) -> Vec<f32> {
        match &self.data {
            PixelData::Byte(v) => v.iter().map(|&b| b as f32 / 255.0).collect(),
            PixelData::UnitFloat(v) => v.clone(),
        }
    }

    /// Builds an image with the same layout and depth using a per-index gather.
    pub(crate) fn gather(&self, width: usize, height: usize, mut src: impl FnMut(usize) -> Option<usize>) -> RasterImage {
        let n = width * height * self.channels;
        let data = match &self.data {
            PixelData::Byte(v) => PixelData::Byte((0..n).map(|i| src(i).map_or(0, |s| v[s])).collect()),
            PixelData::UnitFloat(v) => {
                PixelData::UnitFloat((0..n).map(|i| src(i).map_or(0.0, |s| v[s])).collect())
            }
        };
        RasterImage {
            width,
            height,
            channels: self.channels,
            data,
        }
    }

    pub(crate) fn with_data(width: usize, height: usize, channels: usize, data: PixelData) -> RasterImage {
        debug_assert_eq!(data.len(), width * height * channels);
        RasterImage {
            width,
            height,
            channels,
            data,
        }
    }
}

#[inline]
pub(crate) fn quantize(v: f32) -> u8 {
    (v as f64 * 255.0).round().clamp(0.0, 255.0) as u8
}
