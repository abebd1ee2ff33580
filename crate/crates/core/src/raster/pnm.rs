//! Netpbm pixmap/graymap codec (P2, P3, P5, P6).

use std::io::Write;

use crate::error::{Error, Result};

const FORMAT: &str = "netpbm image";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Gray,
    Rgb,
}

impl Kind {
    fn channels(self) -> usize {
        match self {
            Kind::Gray => 1,
            Kind::Rgb => 3,
        }
    }
}

#[derive(Debug)]
pub(crate) struct Image {
    pub kind: Kind,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples, `channels` per pixel.
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        let tok = self
            .token()
            .ok_or_else(|| Error::format(FORMAT, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::format(
                    FORMAT,
                    format!("bad {what} `{}`", String::from_utf8_lossy(tok)),
                )
            })
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur
        .token()
        .ok_or_else(|| Error::format(FORMAT, "empty file"))?;
    let (kind, binary) = match magic {
        b"P2" => (Kind::Gray, false),
        b"P3" => (Kind::Rgb, false),
        b"P5" => (Kind::Gray, true),
        b"P6" => (Kind::Rgb, true),
        other => {
            return Err(Error::format(
                FORMAT,
                format!("unsupported magic `{}`", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("max value")?;
    if width == 0 || height == 0 {
        return Err(Error::format(FORMAT, "zero image dimension"));
    }
    if maxval == 0 || maxval > u64::from(u16::MAX) {
        return Err(Error::format(FORMAT, format!("max value {maxval} out of range")));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(kind.channels()))
        .ok_or_else(|| Error::format(FORMAT, "image dimensions overflow"))?;

    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::format(FORMAT, "missing separator before pixel data")),
        }
        let data = &bytes[cur.pos..];
        let wide = maxval > 255;
        let need = if wide { count * 2 } else { count };
        if data.len() < need {
            return Err(Error::format(
                FORMAT,
                format!("truncated pixel data: {} of {need} bytes", data.len()),
            ));
        }
        if wide {
            data[..need]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            data[..need].iter().map(|&b| u16::from(b)).collect()
        }
    } else {
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let value = cur.number("sample").map_err(|_| {
                Error::format(FORMAT, format!("truncated pixel data: {i} of {count} samples"))
            })?;
            if value > u64::from(maxval) {
                return Err(Error::format(
                    FORMAT,
                    format!("sample {value} exceeds max value {maxval}"),
                ));
            }
            samples.push(value as u16);
        }
        samples
    };
    if let Some(bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::format(
            FORMAT,
            format!("sample {bad} exceeds max value {maxval}"),
        ));
    }
    Ok(Image {
        kind,
        width,
        height,
        maxval,
        samples,
    })
}

pub(crate) fn encode(image: &Image, ascii: bool, out: &mut impl Write) -> std::io::Result<()> {
    let magic = match (image.kind, ascii) {
        (Kind::Gray, true) => "P2",
        (Kind::Rgb, true) => "P3",
        (Kind::Gray, false) => "P5",
        (Kind::Rgb, false) => "P6",
    };
    write!(out, "{magic}\n{} {}\n{}\n", image.width, image.height, image.maxval)?;
    let row_len = image.width * image.kind.channels();
    if ascii {
        for row in image.samples.chunks(row_len) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    } else if image.maxval > 255 {
        let bytes: Vec<u8> = image.samples.iter().flat_map(|s| s.to_be_bytes()).collect();
        out.write_all(&bytes)?;
    } else {
        let bytes: Vec<u8> = image.samples.iter().map(|&s| s as u8).collect();
        out.write_all(&bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_comments() {
        let img = decode(b"P3\n# made by hand\n2 1 # dims\n255\n1 2 3\n4 5 6\n").unwrap();
        assert_eq!(img.kind, Kind::Rgb);
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.samples, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn wide_binary_graymap() {
        let img = decode(b"P5 2 1 1000\n\x01\x00\x03\xe8").unwrap();
        assert_eq!(img.samples, vec![256, 1000]);
        let mut buf = Vec::new();
        encode(&img, false, &mut buf).unwrap();
        assert_eq!(decode(&buf).unwrap().samples, img.samples);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"").is_err());
        assert!(decode(b"P7 1 1 255\n").is_err());
        assert!(decode(b"P6 2 2 255\n\x00\x00\x00").is_err());
        assert!(decode(b"P3 1 1 255\n1 2").is_err());
        assert!(decode(b"P3 1 1 255\n1 2 300").is_err());
        assert!(decode(b"P6 0 1 255\n").is_err());
        assert!(decode(b"P6 1 1 70000\n").is_err());
        assert!(decode(b"P6 x 1 255\n").is_err());
    }
}
