//! Netpbm I/O. Reads 8-bit bitmaps, graymaps and pixmaps; writes binary
//! `P6` colour and `P5` grayscale.

use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageFormat};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage, RgbImage};

/// A decoded raster of either flavour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Raster {
    Rgb(RgbImage),
    Gray(GrayImage),
}

impl Raster {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Raster::Rgb(img) => img.dims(),
            Raster::Gray(img) => img.dims(),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageRgb8(buf) => {
            let pixels = buf.pixels().map(|p| p.0).collect();
            Ok(Raster::Rgb(RgbImage::new(w, h, pixels)?))
        }
        DynamicImage::ImageLuma8(buf) => Ok(Raster::Gray(GrayImage::new(w, h, buf.into_raw())?)),
        other => Err(Error::Format(format!(
            "only 8-bit grayscale or RGB rasters are supported, got {:?}",
            other.color()
        ))),
    }
}

fn encode(samples: &[u8], width: usize, height: usize, color: ExtendedColorType) -> Vec<u8> {
    let subtype = match color {
        ExtendedColorType::Rgb8 => PnmSubtype::Pixmap(SampleEncoding::Binary),
        _ => PnmSubtype::Graymap(SampleEncoding::Binary),
    };
    let mut out = Vec::with_capacity(samples.len() + 32);
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .encode(samples, width as u32, height as u32, color)
        .expect("buffer length matches the image dimensions");
    out
}

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let flat: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    encode(&flat, image.width(), image.height(), ExtendedColorType::Rgb8)
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    encode(image.values(), image.width(), image.height(), ExtendedColorType::L8)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    with_path(path, decode(&read_bytes(path)?))
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    match read_raster(path)? {
        Raster::Rgb(img) => Ok(img),
        Raster::Gray(_) => Err(Error::Format(format!("{}: expected P6, found P5", path.display()))),
    }
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    match read_raster(path)? {
        Raster::Gray(img) => Ok(img),
        Raster::Rgb(_) => Err(Error::Format(format!("{}: expected P5, found P6", path.display()))),
    }
}

/// Reads a 0/255 PGM mask; any other level is rejected.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    with_path(path, BinaryMask::from_gray(&read_pgm(path)?))
}

pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    write_bytes(path, &encode_ppm(image))
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    write_bytes(path, &encode_pgm(image))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_pgm(path, &mask.to_gray())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let img = RgbImage::from_fn(3, 2, |x, y| [x as u8, y as u8, 200]);
        let bytes = encode_ppm(&img);
        assert!(bytes.starts_with(b"P6"));
        assert_eq!(decode(&bytes).unwrap(), Raster::Rgb(img));
    }

    #[test]
    fn header_comments_and_whitespace() {
        let mut bytes = b"P5 # comment\n# another\n 2\t1\n255\n".to_vec();
        bytes.extend([7, 9]);
        let Raster::Gray(g) = decode(&bytes).unwrap() else { panic!("expected gray") };
        assert_eq!(g.values(), &[7, 9]);
    }

    #[test]
    fn payload_may_start_with_whitespace_bytes() {
        let mut bytes = b"P5\n2 1\n255\n".to_vec();
        bytes.extend(*b"\n ");
        let Raster::Gray(g) = decode(&bytes).unwrap() else { panic!("expected gray") };
        assert_eq!(g.values(), &[10, 32]);
    }

    #[test]
    fn rejects_unsupported_inputs() {
        assert!(decode(b"P9\n1 1\n255\n\0").is_err());
        assert!(decode(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(decode(b"P6\n2 2\n255\n\0\0\0").is_err());
        assert!(decode(b"P5\n0 3\n255\n").is_err());
        assert!(decode(b"P5").is_err());
    }

    #[test]
    fn masks_accept_only_0_and_255() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = BinaryMask::from_fn(4, 3, |x, y| (x + y) % 2 == 0);
        write_mask(&path, &mask).unwrap();
        assert_eq!(read_mask(&path).unwrap(), mask);

        write_pgm(&path, &GrayImage::new(2, 1, vec![0, 128]).unwrap()).unwrap();
        let err = read_mask(&path).unwrap_err().to_string();
        assert!(err.contains("128"), "{err}");
    }
}
