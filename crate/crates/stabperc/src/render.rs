//! Portable pixmap pictures of 2D allocations and masks.
//!
//! Rows are written top to bottom with the `y` axis pointing up, so cell
//! `(i, j)` lands at pixel column `i` and row `ny - 1 - j`.

use stabperc_core::allocation::{Allocation, UNCLAIMED};
use stabperc_core::lattice::Mask;
use stabperc_core::pointprocess::CenterSet;
use stabperc_core::rng::splitmix64;

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];
const GUTTER: Rgb = [128, 128, 128];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Image {
        Image {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = c;
        }
    }

    /// Binary `P6` encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Option<Image> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return None;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
        }
        pos += 1;
        if fields[0] != "P6" || fields[3] != "255" {
            return None;
        }
        let width: usize = fields[1].parse().ok()?;
        let height: usize = fields[2].parse().ok()?;
        let body = bytes.get(pos..)?;
        if body.len() != width * height * 3 {
            return None;
        }
        let pixels = body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Some(Image { width, height, pixels })
    }
}

/// Stable, reasonably saturated colour for a territory.
pub fn territory_color(center: usize) -> Rgb {
    let z = splitmix64(center as u64 ^ 0x5bd1_e995);
    let mut c = [(z & 0xff) as u8, (z >> 8 & 0xff) as u8, (z >> 16 & 0xff) as u8];
    // keep away from white and black
    for v in &mut c {
        *v = 40 + (*v as u16 * 170 / 255) as u8;
    }
    c
}

fn require_2d(dims: &[usize]) -> Result<(usize, usize)> {
    match dims {
        [nx, ny] => Ok((*nx, *ny)),
        _ => Err(Error::Runtime(format!("render is 2D only, got {} axes", dims.len()))),
    }
}

fn block(img: &mut Image, x: usize, y: usize, scale: usize, c: Rgb) {
    for dy in 0..scale {
        for dx in 0..scale {
            img.set(x * scale + dx, y * scale + dy, c);
        }
    }
}

/// Territories in hashed colours, unclaimed cells white, disputed cells
/// drawn as a black outline and centers as black dots.
pub fn render_allocation(alloc: &Allocation, centers: &CenterSet, scale: usize) -> Result<Image> {
    let grid = alloc.grid();
    let (nx, ny) = require_2d(grid.cells_per_axis())?;
    let scale = scale.max(1);
    let mut img = Image::new(nx * scale, ny * scale, WHITE);
    for (cell, &o) in alloc.owners().iter().enumerate() {
        let (i, j) = (cell % nx, cell / nx);
        let row = ny - 1 - j;
        if o != UNCLAIMED {
            block(&mut img, i, row, scale, territory_color(o as usize));
        }
        if alloc.disputed_flags()[cell] {
            for d in 0..scale {
                img.set(i * scale + d, row * scale, BLACK);
                img.set(i * scale + d, row * scale + scale - 1, BLACK);
                img.set(i * scale, row * scale + d, BLACK);
                img.set(i * scale + scale - 1, row * scale + d, BLACK);
            }
        }
    }
    draw_centers(&mut img, centers, grid.h(), ny, scale);
    Ok(img)
}

fn draw_centers(img: &mut Image, centers: &CenterSet, h: f64, ny: usize, scale: usize) {
    let px = scale as f64 / h;
    let radius = ((img.width().max(img.height()) as f64) / 250.0).max(1.0);
    let r = radius.ceil() as i64;
    for p in centers.iter() {
        let cx = p[0] * px;
        let cy = (ny * scale) as f64 - p[1] * px;
        for dy in -r..=r {
            for dx in -r..=r {
                if ((dx * dx + dy * dy) as f64) <= radius * radius {
                    let x = cx.floor() as i64 + dx;
                    let y = cy.floor() as i64 + dy;
                    if x >= 0 && y >= 0 {
                        img.set(x as usize, y as usize, BLACK);
                    }
                }
            }
        }
    }
}

/// Mask cells in `on`, the rest white.
pub fn render_mask(mask: &Mask, on: Rgb, scale: usize) -> Result<Image> {
    let (nx, ny) = require_2d(mask.shape().dims())?;
    let scale = scale.max(1);
    let mut img = Image::new(nx * scale, ny * scale, WHITE);
    for cell in 0..mask.len() {
        if mask.get(cell) {
            block(&mut img, cell % nx, ny - 1 - cell / nx, scale, on);
        }
    }
    Ok(img)
}

/// Places panels side by side, separated by a grey gutter and top-aligned.
pub fn panels(images: &[Image], gutter: usize) -> Image {
    let height = images.iter().map(Image::height).max().unwrap_or(0);
    let width = images.iter().map(Image::width).sum::<usize>() + gutter * images.len().saturating_sub(1);
    let mut out = Image::new(width, height, GUTTER);
    let mut x0 = 0;
    for img in images {
        for y in 0..img.height() {
            for x in 0..img.width() {
                out.set(x0 + x, y, img.get(x, y));
            }
        }
        x0 += img.width() + gutter;
    }
    out
}
