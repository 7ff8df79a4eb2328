use serde::{Deserialize, Serialize};

use super::Scene;

/// 8-bit luminance raster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    /// (height, width) in pixels.
    pub resolution: (usize, usize),
    /// Row-major pixel values.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn filled(resolution: (usize, usize), value: u8) -> Self {
        Image {
            resolution,
            pixels: vec![value; resolution.0 * resolution.1],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.resolution.1 + col]
    }
}

/// Luminance of palette entry `color` on an evenly spaced 0..=255 ladder.
pub fn luminance(color: u8, palette_size: u8) -> u8 {
    if palette_size <= 1 {
        return 255;
    }
    let step = color.min(palette_size - 1) as u32;
    ((step * 255 + (palette_size as u32 - 1) / 2) / (palette_size as u32 - 1)) as u8
}

/// Renders a scene as filled rectangles over the background.
///
/// Objects are painted in ascending id order, so later ids overdraw earlier
/// ones regardless of their position in the object list. Grid cell `r` spans
/// pixel rows `r*H/rows .. (r+1)*H/rows`.
pub fn render(scene: &Scene, palette_size: u8, resolution: (usize, usize)) -> Image {
    assert!(
        resolution.0 > 0 && resolution.1 > 0,
        "resolution must be positive"
    );
    let (ph, pw) = resolution;
    let (gh, gw) = (scene.canvas.0 as usize, scene.canvas.1 as usize);
    let mut img = Image::filled(resolution, luminance(scene.background, palette_size));
    for obj in scene.objects_by_id() {
        let value = luminance(obj.color, palette_size);
        let r0 = obj.row as usize * ph / gh;
        let r1 = ((obj.row as usize + obj.size as usize) * ph / gh).min(ph);
        let c0 = obj.col as usize * pw / gw;
        let c1 = ((obj.col as usize + obj.size as usize) * pw / gw).min(pw);
        for r in r0..r1 {
            img.pixels[r * pw + c0..r * pw + c1].fill(value);
        }
    }
    img
}
