//! Deterministic stick-figure rendering: orthographic projection of the
//! 5-joint schema onto the lateral/vertical plane, drawn with a
//! flip-symmetric point-sampled line rasterizer, written as PNG frames or
//! one animated GIF.

use crate::motion::schema::{stick5, FeatureSchema};
use crate::motion::MotionSequence;
use image::codecs::gif::GifEncoder;
use image::{Frame, Rgba, RgbaImage};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("unknown feature schema `{0}` (only stick5 renders)")]
    UnknownSchema(String),
    #[error("write: {0}")]
    Write(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    PngFrames,
    Animated,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "png_frames" | "png-frames" => Ok(Self::PngFrames),
            "animated" | "gif" => Ok(Self::Animated),
            other => Err(format!("unknown render format `{other}`")),
        }
    }
}

/// Canvas configuration. The width is odd so the horizontal center is a
/// pixel column and mirrored motions render as exact horizontal flips.
#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub bone_color: [u8; 4],
    pub joint_color: [u8; 4],
    pub background: [u8; 4],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 241,
            height: 241,
            scale: 80.0,
            bone_color: [40, 40, 48, 255],
            joint_color: [200, 60, 60, 255],
            background: [245, 245, 245, 255],
        }
    }
}

/// Round half away from zero: symmetric under negation, which makes the
/// mirrored render an exact pixel flip.
fn round_sym(v: f64) -> i64 {
    (v.abs() + 0.5).floor() as i64 * v.signum() as i64
}

struct Canvas {
    img: RgbaImage,
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Canvas {
    fn new(config: &RenderConfig) -> Self {
        let img = RgbaImage::from_pixel(config.width, config.height, Rgba(config.background));
        Self {
            cx: (config.width - 1) as f64 / 2.0,
            cy: (config.height - 1) as f64 * 0.85,
            scale: config.scale,
            img,
        }
    }

    fn to_pixel(&self, x: f64, y: f64) -> (i64, i64) {
        let px = self.cx as i64 + round_sym(x * self.scale);
        let py = self.cy as i64 - round_sym(y * self.scale);
        (px, py)
    }

    fn plot(&mut self, px: i64, py: i64, color: [u8; 4]) {
        if px >= 0 && py >= 0 && (px as u32) < self.img.width() && (py as u32) < self.img.height()
        {
            self.img.put_pixel(px as u32, py as u32, Rgba(color));
        }
    }

    /// Dense point-sampled segment: symmetric under horizontal mirroring
    /// of the endpoints, unlike classic Bresenham stepping.
    fn segment(&mut self, a: (f64, f64), b: (f64, f64), color: [u8; 4]) {
        let (ax, ay) = self.to_pixel(a.0, a.1);
        let (bx, by) = self.to_pixel(b.0, b.1);
        let steps = (ax - bx).abs().max((ay - by).abs()).max(1) * 2;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = a.0 + (b.0 - a.0) * t;
            let y = a.1 + (b.1 - a.1) * t;
            let (px, py) = self.to_pixel(x, y);
            self.plot(px, py, color);
        }
    }

    fn blob(&mut self, p: (f64, f64), color: [u8; 4]) {
        let (px, py) = self.to_pixel(p.0, p.1);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                self.plot(px + dx, py + dy, color);
            }
        }
    }
}

/// One frame rendered to an RGBA image: bones from the root to each limb
/// end-effector in the (lateral, vertical) plane.
pub fn render_frame(
    motion: &MotionSequence,
    frame: usize,
    schema: &FeatureSchema,
    config: &RenderConfig,
) -> Result<RgbaImage, RenderError> {
    if schema.id != "stick5" || motion.schema_id != "stick5" {
        return Err(RenderError::UnknownSchema(motion.schema_id.clone()));
    }
    let mut canvas = Canvas::new(config);
    let row = motion.features.row(frame);
    let joint = |j: usize| (row[stick5::x(j)], row[stick5::y(j)]);
    let root = joint(stick5::ROOT);
    for limb in [stick5::LEFT_ARM, stick5::RIGHT_ARM, stick5::LEFT_LEG, stick5::RIGHT_LEG] {
        canvas.segment(root, joint(limb), config.bone_color);
    }
    // Head above the root keeps the figure readable.
    let head = (root.0, root.1 + 0.22);
    canvas.segment(root, head, config.bone_color);
    canvas.blob(head, config.joint_color);
    canvas.blob(root, config.joint_color);
    Ok(canvas.img)
}

/// Renders every frame; returns the written file paths.
pub fn render_motion(
    motion: &MotionSequence,
    schema: &FeatureSchema,
    config: &RenderConfig,
    format: RenderFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RenderError> {
    std::fs::create_dir_all(out_dir).map_err(|e| RenderError::Write(e.to_string()))?;
    match format {
        RenderFormat::PngFrames => {
            let mut paths = Vec::with_capacity(motion.frames());
            for f in 0..motion.frames() {
                let img = render_frame(motion, f, schema, config)?;
                let path = out_dir.join(format!("frame_{f:04}.png"));
                img.save(&path).map_err(|e| RenderError::Write(e.to_string()))?;
                paths.push(path);
            }
            Ok(paths)
        }
        RenderFormat::Animated => {
            let path = out_dir.join("motion.gif");
            let file = std::fs::File::create(&path)
                .map_err(|e| RenderError::Write(e.to_string()))?;
            let mut encoder = GifEncoder::new(file);
            encoder
                .set_repeat(image::codecs::gif::Repeat::Infinite)
                .map_err(|e| RenderError::Write(e.to_string()))?;
            let delay_ms = (1000.0 / motion.fps.max(1.0)) as u32;
            for f in 0..motion.frames() {
                let img = render_frame(motion, f, schema, config)?;
                let frame = Frame::from_parts(
                    img,
                    0,
                    0,
                    image::Delay::from_numer_denom_ms(delay_ms, 1),
                );
                encoder.encode_frame(frame).map_err(|e| RenderError::Write(e.to_string()))?;
            }
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::schema::stick5_schema;
    use crate::motion::{mirror_motion, DEFAULT_FPS};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arm_raise() -> MotionSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = crate::synth::arm_raise_motion(0.4, 8, &mut rng);
        // Make it asymmetric so the flip test is meaningful.
        for f in 0..m.frames() {
            m.features[(f, stick5::y(stick5::LEFT_ARM))] += 0.2;
        }
        m
    }

    #[test]
    fn png_frames_one_file_per_frame_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let schema = stick5_schema();
        let m = arm_raise();
        let cfg = RenderConfig::default();
        let paths =
            render_motion(&m, &schema, &cfg, RenderFormat::PngFrames, &dir.path().join("a"))
                .unwrap();
        assert_eq!(paths.len(), 8);
        let paths2 =
            render_motion(&m, &schema, &cfg, RenderFormat::PngFrames, &dir.path().join("b"))
                .unwrap();
        let a = std::fs::read(&paths[3]).unwrap();
        let b = std::fs::read(&paths2[3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn animated_gif_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let schema = stick5_schema();
        let m = arm_raise();
        let cfg = RenderConfig::default();
        let paths =
            render_motion(&m, &schema, &cfg, RenderFormat::Animated, dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let bytes = std::fs::read(&paths[0]).unwrap();
        assert!(bytes.starts_with(b"GIF8"));
    }

    #[test]
    fn mirrored_motion_renders_as_horizontal_flip() {
        let schema = stick5_schema();
        let m = arm_raise();
        let mirrored = mirror_motion(&m, &schema).unwrap();
        let cfg = RenderConfig::default();
        for f in [0usize, 4, 7] {
            let img = render_frame(&m, f, &schema, &cfg).unwrap();
            let img_mirrored = render_frame(&mirrored, f, &schema, &cfg).unwrap();
            let w = img.width();
            for y in 0..img.height() {
                for x in 0..w {
                    assert_eq!(
                        img.get_pixel(x, y),
                        img_mirrored.get_pixel(w - 1 - x, y),
                        "pixel mismatch at ({x},{y}) frame {f}"
                    );
                }
            }
        }
    }

    #[test]
    fn unknown_schema_is_rejected() {
        let schema = stick5_schema();
        let mut m = MotionSequence::new(Array2::zeros((2, 16)), DEFAULT_FPS, "stick5").unwrap();
        m.schema_id = "mystery".into();
        let cfg = RenderConfig::default();
        assert!(matches!(
            render_frame(&m, 0, &schema, &cfg),
            Err(RenderError::UnknownSchema(_))
        ));
    }
}
