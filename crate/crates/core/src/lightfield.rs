//! 4D light field data model and per-view file ingestion.
//!
//! A light field is a dense grid of per-view RGB images indexed by centered
//! angular coordinates: the grid center is view (0, 0), `s` is the vertical
//! (grid-row) offset and `t` the horizontal (grid-column) offset. On disk a
//! light field is a directory of `view_{ss}_{tt}.png` files with zero-based
//! row-major grid indices.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Centered, signed angular coordinates of one view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewCoord {
    /// Vertical offset from the center view (grid row minus center row).
    pub s: i32,
    /// Horizontal offset from the center view (grid column minus center column).
    pub t: i32,
}

impl ViewCoord {
    pub fn new(s: i32, t: i32) -> Self {
        Self { s, t }
    }

    /// Chebyshev radius from the grid center.
    pub fn radius(&self) -> i32 {
        self.s.abs().max(self.t.abs())
    }

    pub fn chebyshev(&self, other: &Self) -> i32 {
        (self.s - other.s).abs().max((self.t - other.t).abs())
    }
}

/// Dense grid of per-view images, all with identical dimensions and samples
/// in [0, 1]. Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct LightField {
    pub angular_rows: usize,
    pub angular_cols: usize,
    pub height: usize,
    pub width: usize,
    views: Vec<RgbImage>,
}

impl LightField {
    /// Assembles a light field from row-major views. Every view must be
    /// present, share dimensions, and hold finite samples in [0, 1].
    pub fn from_views(rows: usize, cols: usize, views: Vec<RgbImage>) -> Result<Self> {
        if views.len() != rows * cols || views.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} views, got {}",
                rows * cols,
                views.len()
            )));
        }
        let (h, w) = (views[0].height, views[0].width);
        for v in &views {
            if v.height != h || v.width != w {
                return Err(Error::ShapeMismatch(
                    "views have mixed dimensions".to_string(),
                ));
            }
            v.validate_unit()?;
        }
        Ok(Self {
            angular_rows: rows,
            angular_cols: cols,
            height: h,
            width: w,
            views,
        })
    }

    #[inline]
    fn center(&self) -> (i32, i32) {
        (
            (self.angular_rows as i32 - 1) / 2,
            (self.angular_cols as i32 - 1) / 2,
        )
    }

    /// Converts a centered coordinate to zero-based grid indices.
    pub fn grid_index(&self, coord: ViewCoord) -> (usize, usize) {
        let (cr, cc) = self.center();
        ((coord.s + cr) as usize, (coord.t + cc) as usize)
    }

    pub fn contains(&self, coord: ViewCoord) -> bool {
        let (cr, cc) = self.center();
        let r = coord.s + cr;
        let c = coord.t + cc;
        r >= 0 && c >= 0 && (r as usize) < self.angular_rows && (c as usize) < self.angular_cols
    }

    pub fn view(&self, coord: ViewCoord) -> &RgbImage {
        let (r, c) = self.grid_index(coord);
        &self.views[r * self.angular_cols + c]
    }

    pub fn view_at(&self, row: usize, col: usize) -> &RgbImage {
        &self.views[row * self.angular_cols + col]
    }

    pub fn views(&self) -> &[RgbImage] {
        &self.views
    }

    /// All coordinates in row-major grid order.
    pub fn coords(&self) -> Vec<ViewCoord> {
        let (cr, cc) = self.center();
        let mut out = Vec::with_capacity(self.angular_rows * self.angular_cols);
        for r in 0..self.angular_rows as i32 {
            for c in 0..self.angular_cols as i32 {
                out.push(ViewCoord::new(r - cr, c - cc));
            }
        }
        out
    }

    /// Collects `(coord, view)` pairs for a subset of coordinates.
    pub fn subset(&self, coords: &[ViewCoord]) -> Vec<(ViewCoord, RgbImage)> {
        coords.iter().map(|&c| (c, self.view(c).clone())).collect()
    }
}

fn view_file_name(row: usize, col: usize) -> String {
    format!("view_{row:02}_{col:02}.png")
}

/// Loads a light field from a directory of `view_{ss}_{tt}.png` files.
///
/// Files are 8-bit RGB; samples are scaled to [0, 1]. A hole in the grid, a
/// dimension mismatch, or an unreadable file each produce a distinct error
/// naming the offending view.
pub fn load_lightfield(dir: &Path, rows: usize, cols: usize) -> Result<LightField> {
    if rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch("empty grid".to_string()));
    }
    let mut views = Vec::with_capacity(rows * cols);
    let mut dims: Option<(usize, usize)> = None;
    for r in 0..rows {
        for c in 0..cols {
            let path = dir.join(view_file_name(r, c));
            if !path.exists() {
                return Err(Error::MissingView { row: r, col: c });
            }
            let img = read_png(&path)?;
            match dims {
                None => dims = Some((img.height, img.width)),
                Some((h, w)) => {
                    if img.height != h || img.width != w {
                        return Err(Error::DimensionMismatch {
                            file: path,
                            want_w: w,
                            want_h: h,
                            got_w: img.width,
                            got_h: img.height,
                        });
                    }
                }
            }
            views.push(img);
        }
    }
    LightField::from_views(rows, cols, views)
}

/// Writes a light field as the standard view directory layout.
pub fn save_lightfield(lf: &LightField, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for r in 0..lf.angular_rows {
        for c in 0..lf.angular_cols {
            let path = dir.join(view_file_name(r, c));
            write_png(lf.view_at(r, c), &path)?;
        }
    }
    Ok(())
}

fn read_png(path: &Path) -> Result<RgbImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let dynimg = reader.decode().map_err(|e| Error::UnreadableImage {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = dynimg.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut img = RgbImage::new(h, w);
    for (i, px) in rgb.pixels().enumerate() {
        img.planes[0][i] = px.0[0] as f64 / 255.0;
        img.planes[1][i] = px.0[1] as f64 / 255.0;
        img.planes[2][i] = px.0[2] as f64 / 255.0;
    }
    Ok(img)
}

/// Writes one image as an 8-bit RGB PNG.
pub fn save_image_png(img: &RgbImage, path: &Path) -> Result<()> {
    write_png(img, path)
}

fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    let mut buf = vec![0u8; img.height * img.width * 3];
    for i in 0..img.height * img.width {
        for ch in 0..3 {
            buf[i * 3 + ch] = (img.planes[ch][i].clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    let out = image::RgbImage::from_raw(img.width as u32, img.height as u32, buf)
        .expect("buffer sized to dimensions");
    out.save(path).map_err(|e| Error::UnreadableImage {
        file: PathBuf::from(path),
        reason: e.to_string(),
    })
}

/// Extracts the centered `inner`x`inner` sub-grid. Both grids must be odd so
/// they share the center view; view images are unchanged.
pub fn crop_inner_grid(lf: &LightField, inner: usize) -> Result<LightField> {
    let rows = lf.angular_rows;
    let cols = lf.angular_cols;
    if inner.is_multiple_of(2)
        || rows.is_multiple_of(2)
        || cols.is_multiple_of(2)
        || inner > rows.min(cols)
        || inner == 0
    {
        return Err(Error::InvalidCrop { inner, rows, cols });
    }
    let r0 = (rows - inner) / 2;
    let c0 = (cols - inner) / 2;
    let mut views = Vec::with_capacity(inner * inner);
    for r in 0..inner {
        for c in 0..inner {
            views.push(lf.view_at(r0 + r, c0 + c).clone());
        }
    }
    LightField::from_views(inner, inner, views)
}
