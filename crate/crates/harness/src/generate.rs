//! Dataset export to frame files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lock_core::datagen::{write_frames, FrameFile};
use lock_core::{GridSpec, Vector};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::build_dataset;
use crate::output::{write_file, write_manifest, Format};

/// Grayscale heat map of one image frame.
pub fn frame_svg(grid: GridSpec, frame: &Vector) -> String {
    const CELL: usize = 12;
    let lo = frame.min();
    let span = (frame.max() - lo).max(f64::MIN_POSITIVE);
    let (w, h) = (grid.width * CELL, grid.height * CELL);
    let mut out = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    out.push('\n');
    for i in 0..grid.len() {
        let (r, c) = grid.cell(i);
        let level = (255.0 * (frame[i] - lo) / span).round() as u8;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({level},{level},{level})"/>"#,
            c * CELL,
            r * CELL
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `truth.txt` and `observed.txt` for every seed in `cfg`, under
/// `seed-<n>/` when there is more than one seed.
pub fn generate(cfg: &ExperimentConfig, out: &Path, format: Format) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut files = Vec::new();
    for &seed in &cfg.seeds {
        let data = build_dataset(cfg, seed)?;
        let dir = if cfg.seeds.len() == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("seed-{seed}"))
        };
        std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let (rows, cols) = match data.grid() {
            Some(g) => (g.height, g.width),
            None => (1, data.seq.dim()),
        };
        for (name, frames) in [("truth.txt", &data.seq.truth), ("observed.txt", &data.seq.observed)] {
            let path = dir.join(name);
            write_frames(&path, &FrameFile::new(rows, cols, frames.clone())?).map_err(|e| match e {
                lock_core::Error::Io(source) => Error::Io { path: path.clone(), source },
                e => Error::Core(e),
            })?;
            files.push(path);
        }
        if let (Format::Svg, Some(g)) = (format, data.grid()) {
            let path = dir.join("observed-0.svg");
            write_file(&path, frame_svg(g, &data.seq.observed[0]))?;
            files.push(path);
        }
    }
    write_manifest(out, "generate", cfg, &files)?;
    Ok(files)
}
