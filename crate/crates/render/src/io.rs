//! Image file output: 8-bit PNG and the raw "IGSI" float format.
//!
//! IGSI layout (all little-endian): magic `IGSI`, u32 width, u32 height,
//! u32 channels, then `width*height*channels` f32 values row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use igs_core::Image;

use crate::RenderError;

pub const IGSI_MAGIC: &[u8; 4] = b"IGSI";

pub fn write_png(img: &Image, path: &Path) -> Result<(), RenderError> {
    let (w, h) = (img.width(), img.height());
    let to_u8 = |v: f32| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    match img.channels() {
        3 => {
            let buf: Vec<u8> = img.values().iter().copied().map(to_u8).collect();
            image::save_buffer(path, &buf, w, h, image::ColorType::Rgb8)
                .map_err(|e| RenderError::BadImageFile(e.to_string()))?;
        }
        1 => {
            let buf: Vec<u8> = img.values().iter().copied().map(to_u8).collect();
            image::save_buffer(path, &buf, w, h, image::ColorType::L8)
                .map_err(|e| RenderError::BadImageFile(e.to_string()))?;
        }
        c => {
            return Err(RenderError::BadImageFile(format!(
                "cannot write {c}-channel PNG"
            )))
        }
    }
    Ok(())
}

pub fn write_igsi(img: &Image, path: &Path) -> Result<(), RenderError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(IGSI_MAGIC)?;
    w.write_all(&img.width().to_le_bytes())?;
    w.write_all(&img.height().to_le_bytes())?;
    w.write_all(&img.channels().to_le_bytes())?;
    for v in img.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_igsi(path: &Path) -> Result<Image, RenderError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != IGSI_MAGIC {
        return Err(RenderError::BadImageFile(format!(
            "bad magic {magic:?} in {}",
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32, RenderError> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let width = read_u32(&mut r)?;
    let height = read_u32(&mut r)?;
    let channels = read_u32(&mut r)?;
    let count = (width as usize) * (height as usize) * (channels as usize);
    let mut values = Vec::with_capacity(count);
    let mut f32buf = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut f32buf)?;
        values.push(f32::from_le_bytes(f32buf));
    }
    Image::new(width, height, channels, values).map_err(RenderError::from)
}
