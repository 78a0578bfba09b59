//! Wavefront OBJ, PNG and CSV plumbing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use diffrast_core::{ImageGrid, IndexBuffer};
use thiserror::Error;

use crate::log::ConvergenceLog;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unsupported PNG format: {0}")]
    UnsupportedPngFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("png decode: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Triangle mesh with separately indexed positions, texcoords and normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjMesh {
    pub positions: Vec<[f32; 3]>,
    pub texcoords: Vec<[f32; 2]>,
    pub normals: Vec<[f32; 3]>,
    pub pos_idx: Vec<[u32; 3]>,
    /// Present when every face has texcoord references.
    pub tex_idx: Option<Vec<[u32; 3]>>,
    pub nrm_idx: Option<Vec<[u32; 3]>>,
}

impl ObjMesh {
    pub fn position_index(&self) -> IndexBuffer {
        IndexBuffer::new(self.pos_idx.clone())
    }

    pub fn texcoord_index(&self) -> Option<IndexBuffer> {
        self.tex_idx.clone().map(IndexBuffer::new)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::ParseError {
        line,
        message: message.into(),
    }
}

fn floats<const N: usize>(line: usize, fields: &[&str], min: usize) -> IoResult<[f32; N]> {
    if fields.len() < min || fields.len() > N.max(min) + 1 {
        return Err(parse_err(line, format!("expected {min} coordinates, got {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(line, format!("bad number {f:?}")))?;
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(line: usize, s: &str, count: usize) -> IoResult<u32> {
    let i: i64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("bad index {s:?}")))?;
    let r = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || r < 0 || r >= count as i64 {
        return Err(parse_err(line, format!("index {i} out of range (have {count})")));
    }
    Ok(r as u32)
}

pub fn parse_obj(text: &str) -> IoResult<ObjMesh> {
    let mut m = ObjMesh::default();
    let mut tex: Vec<[u32; 3]> = Vec::new();
    let mut nrm: Vec<[u32; 3]> = Vec::new();
    let (mut has_vt, mut has_vn): (Option<bool>, Option<bool>) = (None, None);

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((&tag, rest)) = fields.split_first() else {
            continue;
        };
        match tag {
            "v" => m.positions.push(floats::<3>(line, rest, 3)?),
            // Optional third texcoord component is ignored.
            "vt" => m.texcoords.push(floats::<2>(line, rest, 2)?),
            "vn" => m.normals.push(floats::<3>(line, rest, 3)?),
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(line, "face needs at least 3 vertices"));
                }
                let mut corners = Vec::with_capacity(rest.len());
                for c in rest {
                    let parts: Vec<&str> = c.split('/').collect();
                    if parts.len() > 3 || parts[0].is_empty() {
                        return Err(parse_err(line, format!("malformed face vertex {c:?}")));
                    }
                    let p = resolve(line, parts[0], m.positions.len())?;
                    let t = match parts.get(1) {
                        Some(s) if !s.is_empty() => Some(resolve(line, s, m.texcoords.len())?),
                        _ => None,
                    };
                    let nn = match parts.get(2) {
                        Some(s) if !s.is_empty() => Some(resolve(line, s, m.normals.len())?),
                        _ => None,
                    };
                    corners.push((p, t, nn));
                }
                let vt = corners[0].1.is_some();
                let vn = corners[0].2.is_some();
                if corners.iter().any(|c| c.1.is_some() != vt || c.2.is_some() != vn)
                    || has_vt.is_some_and(|h| h != vt)
                    || has_vn.is_some_and(|h| h != vn)
                {
                    return Err(parse_err(line, "inconsistent texcoord/normal references"));
                }
                has_vt = Some(vt);
                has_vn = Some(vn);
                // Fan triangulation for polygons.
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    m.pos_idx.push(tri.map(|c| c.0));
                    if vt {
                        tex.push(tri.map(|c| c.1.unwrap()));
                    }
                    if vn {
                        nrm.push(tri.map(|c| c.2.unwrap()));
                    }
                }
            }
            _ => {}
        }
    }
    m.tex_idx = has_vt.unwrap_or(false).then_some(tex);
    m.nrm_idx = has_vn.unwrap_or(false).then_some(nrm);
    Ok(m)
}

pub fn load_obj(path: &Path) -> IoResult<ObjMesh> {
    parse_obj(&std::fs::read_to_string(path)?)
}

pub fn write_obj(mesh: &ObjMesh, path: &Path) -> IoResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for p in &mesh.positions {
        writeln!(f, "v {} {} {}", p[0], p[1], p[2])?;
    }
    for t in &mesh.texcoords {
        writeln!(f, "vt {} {}", t[0], t[1])?;
    }
    for n in &mesh.normals {
        writeln!(f, "vn {} {} {}", n[0], n[1], n[2])?;
    }
    for (i, p) in mesh.pos_idx.iter().enumerate() {
        write!(f, "f")?;
        for k in 0..3 {
            write!(f, " {}", p[k] + 1)?;
            let t = mesh.tex_idx.as_ref().map(|t| t[i][k] + 1);
            let n = mesh.nrm_idx.as_ref().map(|n| n[i][k] + 1);
            match (t, n) {
                (Some(t), Some(n)) => write!(f, "/{t}/{n}")?,
                (Some(t), None) => write!(f, "/{t}")?,
                (None, Some(n)) => write!(f, "//{n}")?,
                (None, None) => {}
            }
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

pub fn linear_to_srgb(x: f32) -> f32 {
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_linear(x: f32) -> f32 {
    if x <= 0.040_45 {
        x / 12.92
    } else {
        ((x + 0.055) / 1.055).powf(2.4)
    }
}

/// Writes 1–4 channel images, clamped to `[0, 1]`. With `srgb` the values
/// are treated as linear, encoded to sRGB and tagged with an sRGB chunk.
pub fn write_png(img: &ImageGrid<f32>, path: &Path, depth: BitDepth, srgb: bool) -> IoResult<()> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        2 => png::ColorType::GrayscaleAlpha,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        c => return Err(IoError::UnsupportedPngFormat(format!("{c} channels"))),
    };
    let w = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(w, img.width() as u32, img.height() as u32);
    enc.set_color(color);
    enc.set_depth(match depth {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    });
    if srgb {
        enc.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    }
    let c = img.channels();
    // Alpha stays linear.
    let encode = |i: usize, v: f32| {
        let alpha = (c == 2 || c == 4) && i % c == c - 1;
        let v = if srgb && !alpha { linear_to_srgb(v.clamp(0.0, 1.0)) } else { v };
        v.clamp(0.0, 1.0)
    };
    let bytes: Vec<u8> = match depth {
        BitDepth::Eight => img
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| (encode(i, v) * 255.0).round() as u8)
            .collect(),
        BitDepth::Sixteen => img
            .data()
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| ((encode(i, v) * 65535.0).round() as u16).to_be_bytes())
            .collect(),
    };
    let mut writer = enc.write_header()?;
    writer.write_image_data(&bytes)?;
    writer.finish()?;
    Ok(())
}

/// Reads 8- or 16-bit grayscale/RGB(A) PNGs into `[0, 1]`. With `srgb` the
/// color channels are decoded from sRGB to linear.
pub fn read_png(path: &Path, srgb: bool) -> IoResult<ImageGrid<f32>> {
    let dec = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = dec.read_info()?;
    let info = reader.info();
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(IoError::UnsupportedPngFormat("indexed color".into()))
        }
    };
    let depth = match info.bit_depth {
        png::BitDepth::Eight => BitDepth::Eight,
        png::BitDepth::Sixteen => BitDepth::Sixteen,
        d => return Err(IoError::UnsupportedPngFormat(format!("bit depth {d:?}"))),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| IoError::UnsupportedPngFormat("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf)?;
    buf.truncate(frame.buffer_size());
    let raw: Vec<f32> = match depth {
        BitDepth::Eight => buf.iter().map(|&b| b as f32 / 255.0).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f32 / 65535.0)
            .collect(),
    };
    let data = raw
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let alpha = (channels == 2 || channels == 4) && i % channels == channels - 1;
            if srgb && !alpha {
                srgb_to_linear(v)
            } else {
                v
            }
        })
        .collect();
    ImageGrid::from_data(w, h, channels, data)
        .map_err(|e| IoError::UnsupportedPngFormat(e.to_string()))
}

/// `iteration,loss,metric` with a header row.
pub fn write_csv(log: &ConvergenceLog, path: &Path) -> IoResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "iteration,loss,metric")?;
    for r in log.records() {
        writeln!(f, "{},{},{}", r.iteration, r.loss, r.metric)?;
    }
    f.flush()?;
    Ok(())
}

/// Inverse of [`write_csv`].
pub fn read_csv(path: &Path) -> IoResult<ConvergenceLog> {
    let f = BufReader::new(File::open(path)?);
    let mut log = ConvergenceLog::default();
    for (n, line) in f.lines().enumerate().skip(1) {
        let line_no = n + 1;
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(parse_err(line_no, "expected 3 columns"));
        }
        let bad = |s: &str| parse_err(line_no, format!("bad value {s:?}"));
        let it = cols[0].parse().map_err(|_| bad(cols[0]))?;
        let loss = cols[1].parse().map_err(|_| bad(cols[1]))?;
        let metric = cols[2].parse().map_err(|_| bad(cols[2]))?;
        log.push(it, loss, metric)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
    }
    Ok(log)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> IoResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
