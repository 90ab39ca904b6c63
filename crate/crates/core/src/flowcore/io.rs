//! Middlebury `.flo` and 8-bit PGM frame I/O.

use std::fs;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use super::frame::{FlowField, Frame};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sentinel stored in the first four bytes of every `.flo` file.
pub const FLO_MAGIC: f32 = 202021.25;

const FLO_HEADER_BYTES: usize = 12;

pub fn encode_flo<T: Scalar>(flow: &FlowField<T>) -> Vec<u8> {
    let n = flow.width() * flow.height();
    let mut out = Vec::with_capacity(FLO_HEADER_BYTES + 8 * n);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&(u.as_f64() as f32).to_le_bytes());
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo<T: Scalar>(bytes: &[u8], path: &Path) -> Result<FlowField<T>> {
    if bytes.len() < FLO_HEADER_BYTES {
        return Err(Error::format(path, "truncated .flo header"));
    }
    let word = |k: usize| -> [u8; 4] { bytes[4 * k..4 * k + 4].try_into().expect("4 bytes") };
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(Error::format(path, format!("bad .flo magic {magic}")));
    }
    let width = i32::from_le_bytes(word(1));
    let height = i32::from_le_bytes(word(2));
    if width <= 0 || height <= 0 {
        return Err(Error::format(path, format!("invalid .flo size {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(path, "size overflow"))?;
    let expected = FLO_HEADER_BYTES + 8 * n;
    if bytes.len() < expected {
        return Err(Error::format(
            path,
            format!("truncated .flo: {} of {expected} bytes", bytes.len()),
        ));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        u.push(T::lit(f32::from_le_bytes(word(3 + 2 * k)) as f64));
        v.push(T::lit(f32::from_le_bytes(word(4 + 2 * k)) as f64));
    }
    FlowField::new(width, height, u, v)
}

pub fn write_flo<T: Scalar>(flow: &FlowField<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_flo(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_flo<T: Scalar>(path: impl AsRef<Path>) -> Result<FlowField<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes, path)
}

/// Reads an 8-bit grayscale image (PGM or any format the decoder recognises),
/// mapping intensities to `[0, 1]` by `/255`.
pub fn read_pgm<T: Scalar>(path: impl AsRef<Path>) -> Result<Frame<T>> {
    let path = path.as_ref();
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?
        .to_luma8();
    let scale = T::lit(1.0 / 255.0);
    let data = img.as_raw().iter().map(|&p| T::from_u8(p).expect("u8") * scale).collect();
    Frame::new(img.width() as usize, img.height() as usize, data)
}

/// Quantizes `[0, 1]` intensities to 8 bits.
pub fn frame_to_bytes<T: Scalar>(frame: &Frame<T>) -> Vec<u8> {
    frame
        .data()
        .iter()
        .map(|v| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Writes raw 8-bit samples as a binary (P5) PGM.
pub fn write_gray_pgm(bytes: &[u8], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PnmEncoder::new(std::io::BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(bytes, width as u32, height as u32, ExtendedColorType::L8)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_pgm<T: Scalar>(frame: &Frame<T>, path: impl AsRef<Path>) -> Result<()> {
    write_gray_pgm(&frame_to_bytes(frame), frame.width(), frame.height(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flo_round_trip_2x2() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.flo");
        let flow = FlowField::new(2, 2, vec![0.1, -2.5, 3.25, 1e-3], vec![7.0, 0.0, -0.3, 1.5]).unwrap();
        write_flo(&flow, &path).unwrap();
        let back: FlowField<f64> = read_flo(&path).unwrap();
        for (a, b) in flow.u().iter().chain(flow.v()).zip(back.u().iter().chain(back.v())) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn flo_file_size_3x1() {
        let flow = FlowField::uniform(3, 1, 1.5f64, -0.25);
        let bytes = encode_flo(&flow);
        assert_eq!(bytes.len(), 12 + 3 * 8);
        assert_eq!(&bytes[0..4], &202021.25f32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1.5f32.to_le_bytes());
        assert_eq!(&bytes[16..20], &(-0.25f32).to_le_bytes());
    }

    #[test]
    fn flo_bad_magic() {
        let mut bytes = encode_flo(&FlowField::uniform(2, 2, 1.0f64, 1.0));
        bytes[0..4].copy_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(
            decode_flo::<f64>(&bytes, Path::new("x.flo")),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn flo_truncated() {
        let bytes = encode_flo(&FlowField::uniform(4, 4, 1.0f64, 1.0));
        assert!(decode_flo::<f64>(&bytes[..bytes.len() - 1], Path::new("x.flo")).is_err());
        assert!(decode_flo::<f64>(&bytes[..7], Path::new("x.flo")).is_err());
    }

    #[test]
    fn pgm_round_trip_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let frame = Frame::from_fn(17, 19, |x, y| ((x * 13 + y * 7) % 256) as f64 / 255.0);
        write_pgm(&frame, &path).unwrap();
        let back: Frame<f64> = read_pgm(&path).unwrap();
        assert_eq!(back.width(), 17);
        for (a, b) in frame.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(&raw[..2], b"P5");
    }
}
