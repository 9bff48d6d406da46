use std::io::Cursor;

use thiserror::Error;

use crate::program::Color;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("buffer length {got} does not match {width}x{height}x3")]
    BadLength { width: u32, height: u32, got: usize },
    #[error("png decode: {0}")]
    Decode(String),
    #[error("png encode: {0}")]
    Encode(String),
}

/// Row-major RGB8 raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: Color) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&color.channels());
        }
        Self { width, height, data }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(ImageError::BadLength { width, height, got: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// 8-bit RGB PNG without alpha.
    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(|e| ImageError::Encode(e.to_string()))?;
            writer.write_image_data(&self.data).map_err(|e| ImageError::Encode(e.to_string()))?;
            writer.finish().map_err(|e| ImageError::Encode(e.to_string()))?;
        }
        Ok(buf)
    }

    /// Decodes any 8/16-bit PNG to RGB8; alpha is composited over white.
    pub fn decode_png(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info().map_err(|e| ImageError::Decode(e.to_string()))?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| ImageError::Decode("image too large".to_string()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(|e| ImageError::Decode(e.to_string()))?;
        let buf = &buf[..info.buffer_size()];
        let over_white = |v: u8, a: u8| -> u8 {
            let a = f64::from(a) / 255.0;
            (a * f64::from(v) + (1.0 - a) * 255.0).round() as u8
        };
        let data: Vec<u8> = match info.color_type {
            png::ColorType::Rgb => buf.to_vec(),
            png::ColorType::Rgba => buf
                .chunks_exact(4)
                .flat_map(|p| [over_white(p[0], p[3]), over_white(p[1], p[3]), over_white(p[2], p[3])])
                .collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => buf
                .chunks_exact(2)
                .flat_map(|p| {
                    let g = over_white(p[0], p[1]);
                    [g, g, g]
                })
                .collect(),
            png::ColorType::Indexed => {
                return Err(ImageError::Decode("palette was not expanded".to_string()))
            }
        };
        Self::from_raw(info.width, info.height, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let mut img = RasterImage::filled(3, 2, Color::rgb(1, 2, 3));
        img.data_mut()[5] = 200;
        let back = RasterImage::decode_png(&img.encode_png().unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rejects_bad_length_and_garbage() {
        assert!(RasterImage::from_raw(2, 2, vec![0; 11]).is_err());
        assert!(RasterImage::decode_png(b"not a png").is_err());
    }
}
