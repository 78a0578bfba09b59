//! Artifact sink for experiment runs.

use std::path::{Path, PathBuf};

use diffrast_core::ImageGrid;

use crate::io::{write_png, BitDepth, IoResult};

/// Writes frames and files under an optional directory; a sink without a
/// directory discards everything.
#[derive(Debug, Clone, Default)]
pub struct Output {
    dir: Option<PathBuf>,
    every: usize,
}

impl Output {
    pub fn new(dir: Option<&Path>, every: usize) -> IoResult<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            every,
        })
    }

    pub fn discard() -> Self {
        Self::default()
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub fn wants_frame(&self, iteration: usize) -> bool {
        self.dir.is_some() && self.every > 0 && iteration % self.every == 0
    }

    /// `frame_%06d.png` in sRGB, when `iteration` is on the snapshot grid.
    pub fn frame(&self, iteration: usize, img: &ImageGrid<f32>) -> IoResult<()> {
        if self.wants_frame(iteration) {
            let p = self.path(&format!("frame_{iteration:06}.png")).unwrap();
            write_png(img, &p, BitDepth::Eight, true)?;
        }
        Ok(())
    }
}
