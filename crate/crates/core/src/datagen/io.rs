//! Plain-text frame files: a header line `rows cols T`, then one line per
//! frame with `rows * cols` whitespace-separated values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub rows: usize,
    pub cols: usize,
    pub frames: Vec<Vector>,
}

impl FrameFile {
    pub fn new(rows: usize, cols: usize, frames: Vec<Vector>) -> Result<Self> {
        if let Some((t, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != rows * cols) {
            return Err(Error::DimensionMismatch(format!(
                "frame {t} has {} values, expected {rows} x {cols}",
                f.len()
            )));
        }
        Ok(Self { rows, cols, frames })
    }

    /// Vector data stored as a single row per frame.
    pub fn vectors(frames: Vec<Vector>) -> Result<Self> {
        let cols = frames.first().map_or(0, |f| f.len());
        Self::new(1, cols, frames)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.frames.len());
        for f in &self.frames {
            let line: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty frame file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad header value {s:?}"))))
            .collect::<Result<_>>()?;
        let [rows, cols, steps] = dims[..] else {
            return Err(Error::Parse("header must be `rows cols T`".into()));
        };
        let mut frames = Vec::with_capacity(steps);
        for (t, line) in lines.enumerate() {
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("frame {t}: bad value {s:?}"))))
                .collect::<Result<_>>()?;
            if values.len() != rows * cols {
                return Err(Error::Parse(format!(
                    "frame {t} has {} values, expected {}",
                    values.len(),
                    rows * cols
                )));
            }
            frames.push(Vector::from_vec(values));
        }
        if frames.len() != steps {
            return Err(Error::Parse(format!("header declares {steps} frames, found {}", frames.len())));
        }
        Ok(Self { rows, cols, frames })
    }
}

pub fn write_frames(path: impl AsRef<Path>, file: &FrameFile) -> Result<()> {
    fs::write(path, file.to_text())?;
    Ok(())
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<FrameFile> {
    FrameFile::parse(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let frames = vec![
            Vector::from_vec(vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0]),
            Vector::from_vec(vec![f64::MAX, 0.0, -0.0, 1e-9]),
        ];
        let file = FrameFile::new(2, 2, frames).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.txt");
        write_frames(&path, &file).unwrap();
        assert_eq!(read_frames(&path).unwrap(), file);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(FrameFile::parse("").is_err());
        assert!(FrameFile::parse("1 2\n1 2\n").is_err());
        assert!(FrameFile::parse("1 2 1\n1\n").is_err());
        assert!(FrameFile::parse("1 2 2\n1 2\n").is_err());
        assert!(FrameFile::parse("1 1 1\nx\n").is_err());
        assert!(FrameFile::new(2, 2, vec![Vector::zeros(3)]).is_err());
    }
}
