//! Procedural test data: piecewise-smooth scenes, random-walk motion kernels
//! and the blur-plus-noise forward model.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a `u64`; Gaussian variates
//! use the ziggurat sampler of `rand_distr::StandardNormal`. Both are
//! platform-independent, so a seed reproduces the same bits everywhere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{convolve, ConvMode, GrayImage, Kernel};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `y = clamp(valid(sharp * k) + n)` with IID Gaussian `n ~ N(0, sigma^2)`.
pub fn synth_blur(sharp: &GrayImage, k: &Kernel, sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma >= 0.0) {
        return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
    }
    let clean = convolve(sharp, k, ConvMode::Valid)?;
    let noisy = add_gaussian_noise(&clean, sigma, seed);
    Ok(noisy.clamp01())
}

/// Adds `N(0, sigma^2)` noise without clamping.
pub fn add_gaussian_noise(image: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    if sigma == 0.0 {
        return image.clone();
    }
    let mut rng = rng_from_seed(seed);
    image.map(|v| {
        let z: f64 = rng.sample(StandardNormal);
        v + sigma * z
    })
}

fn point_in_polygon(x: f64, y: f64, poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

enum Shape {
    Polygon(Vec<(f64, f64)>),
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        angle: f64,
    },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Shape::Polygon(p) => point_in_polygon(x, y, p),
            Shape::Ellipse {
                cx,
                cy,
                rx,
                ry,
                angle,
            } => {
                let (dx, dy) = (x - cx, y - cy);
                let (c, s) = (angle.cos(), angle.sin());
                let u = (dx * c + dy * s) / rx;
                let v = (-dx * s + dy * c) / ry;
                u * u + v * v <= 1.0
            }
        }
    }
}

struct Layer {
    shape: Shape,
    base: f64,
    slope_x: f64,
    slope_y: f64,
}

/// Piecewise-smooth scene: a shaded background, overlapping anti-aliased
/// polygons and ellipses with their own linear shading, and a faint texture.
pub fn piecewise_smooth_image(size: usize, seed: u64) -> GrayImage {
    let mut rng = rng_from_seed(seed);
    let n = size as f64;
    let bg = (
        rng.random_range(0.25..0.75),
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
    );
    let layer_count = rng.random_range(8..14);
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let cx = rng.random_range(0.05..0.95) * n;
        let cy = rng.random_range(0.05..0.95) * n;
        let radius = rng.random_range(0.08..0.3) * n;
        let shape = if rng.random_bool(0.65) {
            let vertices = rng.random_range(3..8);
            let mut angles: Vec<f64> = (0..vertices).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            angles.sort_by(f64::total_cmp);
            Shape::Polygon(
                angles
                    .iter()
                    .map(|a| {
                        let r = radius * rng.random_range(0.5..1.0);
                        (cx + r * a.cos(), cy + r * a.sin())
                    })
                    .collect(),
            )
        } else {
            Shape::Ellipse {
                cx,
                cy,
                rx: radius * rng.random_range(0.4..1.0),
                ry: radius * rng.random_range(0.4..1.0),
                angle: rng.random_range(0.0..PI),
            }
        };
        layers.push(Layer {
            shape,
            base: rng.random_range(0.0..1.0),
            slope_x: rng.random_range(-0.3..0.3),
            slope_y: rng.random_range(-0.3..0.3),
        });
    }
    let texture_amp = rng.random_range(0.02..0.05);
    let texture: Vec<f64> = (0..size * size)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();

    const SUB: usize = 4;
    let mut img = GrayImage::from_fn(size, size, |i, j| {
        let mut acc = 0.0;
        for si in 0..SUB {
            for sj in 0..SUB {
                let y = i as f64 + (si as f64 + 0.5) / SUB as f64;
                let x = j as f64 + (sj as f64 + 0.5) / SUB as f64;
                let mut v = bg.0 + bg.1 * (x / n - 0.5) + bg.2 * (y / n - 0.5);
                for layer in &layers {
                    if layer.shape.contains(x, y) {
                        v = layer.base + layer.slope_x * (x / n - 0.5) + layer.slope_y * (y / n - 0.5);
                    }
                }
                acc += v;
            }
        }
        acc / (SUB * SUB) as f64
    });
    // faint texture: white noise under a 3x3 box filter
    let tex = GrayImage::from_vec_unchecked(size, size, texture);
    let smooth_tex = GrayImage::from_fn(size, size, |i, j| {
        let mut s = 0.0;
        for di in -1..=1 {
            for dj in -1..=1 {
                s += tex.get_clamped(i as isize + di, j as isize + dj);
            }
        }
        s / 9.0
    });
    for (v, t) in img.data_mut().iter_mut().zip(smooth_tex.data()) {
        *v = (*v + texture_amp * 3.0 * t).clamp(0.0, 1.0);
    }
    img
}

/// Camera-shake style kernel: a random walk with smoothly varying velocity,
/// rasterized with bilinear splatting into a `size x size` support and
/// projected onto the simplex.
pub fn motion_kernel(size: usize, seed: u64) -> Result<Kernel> {
    if size % 2 == 0 || size < 3 {
        return Err(Error::param(format!("motion kernel size must be odd and >= 3, got {size}")));
    }
    let mut rng = rng_from_seed(seed);
    const STEPS: usize = 96;
    let mut angle: f64 = rng.random_range(0.0..2.0 * PI);
    let turn_rate = rng.random_range(0.02..0.12);
    let mut points = Vec::with_capacity(STEPS);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut speed = 1.0;
    for _ in 0..STEPS {
        points.push((x, y));
        let z: f64 = rng.sample(StandardNormal);
        angle += turn_rate * z * 2.0;
        speed = (speed + 0.1 * rng.sample::<f64, _>(StandardNormal)).clamp(0.3, 1.7);
        x += speed * angle.cos();
        y += speed * angle.sin();
    }
    let (min_x, max_x) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (min_y, max_y) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let extent = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let target = (size as f64 - 1.0) * rng.random_range(0.55..0.95) - 1.0;
    let scale = target.max(1.0) / extent;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let c = (size / 2) as f64;
    let mut data = vec![0.0; size * size];
    for &(px, py) in &points {
        let u = (px - mx) * scale + c;
        let v = (py - my) * scale + c;
        let (j0, i0) = (u.floor(), v.floor());
        let (fx, fy) = (u - j0, v - i0);
        for (di, wy) in [(0, 1.0 - fy), (1, fy)] {
            for (dj, wx) in [(0, 1.0 - fx), (1, fx)] {
                let (i, j) = (i0 as isize + di, j0 as isize + dj);
                if i >= 0 && j >= 0 && (i as usize) < size && (j as usize) < size {
                    data[i as usize * size + j as usize] += wx * wy;
                }
            }
        }
    }
    Ok(Kernel::square(size, data)?.project())
}
