//! 8-bit grayscale file formats: binary PGM (`P5`, maxval 255) and PNG.
//!
//! Samples map to `[0, 1]` by division by 255; writing quantizes with
//! `round(clamp(v, 0, 1) * 255)`.

use std::fs;
use std::path::Path;

use super::{GrayImage, Kernel};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads a PGM or PNG file, detected from its leading bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&PNG_SIGNATURE) {
        read_png(&bytes)
    } else {
        read_pgm(&bytes)
    }
}

/// Writes PNG when the extension is `.png`, binary PGM otherwise.
pub fn write_image(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        write_png(image)?
    } else {
        write_pgm(image)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                offset: start,
                message: format!("{what} out of range"),
            })
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(cur.err("missing P5 magic number"));
    }
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Parse {
            offset: maxval_at,
            message: format!("unsupported maxval {maxval}, only 8-bit (255) is supported"),
        });
    }
    if width == 0 || height == 0 {
        return Err(cur.err("zero image dimension"));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected single whitespace after maxval")),
    }
    let need = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < need {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "truncated payload: expected {need} bytes, found {}",
                payload.len()
            ),
        });
    }
    let data = payload[..need].iter().map(|&b| b as f64 / 255.0).collect();
    GrayImage::new(width, height, data)
}

pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

pub fn read_png(bytes: &[u8]) -> Result<GrayImage> {
    let png_err = |e: png::DecodingError| Error::Parse {
        offset: 0,
        message: format!("png: {e}"),
    };
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Parse {
            offset: 25,
            message: format!("unsupported png color type {:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Parse {
            offset: 24,
            message: format!("unsupported png bit depth {:?}", info.bit_depth),
        });
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(width * height)];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let stride = frame.line_size;
    let mut data = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        data.extend(row[..width].iter().map(|&b| b as f64 / 255.0));
    }
    GrayImage::new(width, height, data)
}

pub fn write_png(image: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let enc_err = |e: png::EncodingError| Error::Numeric(format!("png encoding: {e}"));
        let mut writer = encoder.write_header().map_err(enc_err)?;
        let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
        writer.write_image_data(&bytes).map_err(enc_err)?;
    }
    Ok(out)
}

/// Exact kernel values as text: a `width height` header line followed by one
/// line per row. Values use the shortest representation that round-trips.
pub fn format_kernel_table(k: &Kernel) -> String {
    let mut out = format!("{} {}\n", k.width(), k.height());
    for i in 0..k.height() {
        let row: Vec<String> = (0..k.width()).map(|j| format!("{}", k.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_kernel_table(text: &str) -> Result<Kernel> {
    let mut offset = 0;
    let mut tokens = Vec::new();
    for line in text.split_inclusive('\n') {
        let content = line.split('#').next().unwrap_or("");
        let mut pos = 0;
        for tok in content.split_whitespace() {
            let start = content[pos..].find(tok).map_or(pos, |p| p + pos);
            tokens.push((offset + start, tok));
            pos = start + tok.len();
        }
        offset += line.len();
    }
    let mut it = tokens.into_iter();
    let mut dim = |name: &str| -> Result<usize> {
        let (at, tok) = it.next().ok_or(Error::Parse {
            offset: text.len(),
            message: format!("missing kernel {name}"),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            offset: at,
            message: format!("bad kernel {name} {tok:?}"),
        })
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let mut data = Vec::with_capacity(width * height);
    for (at, tok) in it {
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            offset: at,
            message: format!("bad kernel value {tok:?}"),
        })?;
        data.push(v);
    }
    if data.len() != width * height {
        return Err(Error::Parse {
            offset: text.len(),
            message: format!("expected {} kernel values, found {}", width * height, data.len()),
        });
    }
    Kernel::new(width, height, data)
}

pub fn write_kernel_table(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_kernel_table(k)).map_err(|e| Error::io(path, e))
}

pub fn read_kernel_table(path: impl AsRef<Path>) -> Result<Kernel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kernel_table(&text)
}
