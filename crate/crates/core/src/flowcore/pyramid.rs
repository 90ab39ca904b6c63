//! Derivative stencils and pyramid resampling.

use super::frame::{FlowField, Frame};
use crate::scalar::Scalar;

/// Central-difference gradient with border replication.
pub(crate) fn gradient<T: Scalar>(img: &Frame<T>) -> (Frame<T>, Frame<T>) {
    let half = T::lit(0.5);
    let gx = Frame::from_fn(img.width(), img.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        (img.get_clamped(x + 1, y) - img.get_clamped(x - 1, y)) * half
    });
    let gy = Frame::from_fn(img.width(), img.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        (img.get_clamped(x, y + 1) - img.get_clamped(x, y - 1)) * half
    });
    (gx, gy)
}

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

fn binomial_blur<T: Scalar>(img: &Frame<T>) -> Frame<T> {
    let taps: Vec<T> = BINOMIAL.iter().map(|&c| T::lit(c)).collect();
    let horizontal = Frame::from_fn(img.width(), img.height(), |x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, &c)| c * img.get_clamped(x as isize + k as isize - 2, y as isize))
            .sum()
    });
    Frame::from_fn(img.width(), img.height(), |x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, &c)| c * horizontal.get_clamped(x as isize, y as isize + k as isize - 2))
            .sum()
    })
}

/// Pixel-center aligned bilinear resample to `(width, height)`.
fn resample<T: Scalar>(img: &Frame<T>, width: usize, height: usize) -> Frame<T> {
    let sx = T::from_usize_lossy(img.width()) / T::from_usize_lossy(width);
    let sy = T::from_usize_lossy(img.height()) / T::from_usize_lossy(height);
    let half = T::lit(0.5);
    Frame::from_fn(width, height, |x, y| {
        img.sample(
            (T::from_usize_lossy(x) + half) * sx - half,
            (T::from_usize_lossy(y) + half) * sy - half,
        )
    })
}

fn scaled_dims(width: usize, height: usize, factor: f64) -> (usize, usize) {
    (
        ((width as f64) * factor).round() as usize,
        ((height as f64) * factor).round() as usize,
    )
}

/// Finest-first image pyramid. Levels are added while both sides stay at or
/// above `min_size`.
pub(crate) fn build_pyramid<T: Scalar>(img: &Frame<T>, factor: f64, min_size: usize) -> Vec<Frame<T>> {
    let mut levels = vec![img.clone()];
    loop {
        let last = levels.last().expect("non-empty");
        let (w, h) = scaled_dims(last.width(), last.height(), factor);
        if w < min_size || h < min_size || (w == last.width() && h == last.height()) {
            break;
        }
        let next = resample(&binomial_blur(last), w, h);
        levels.push(next);
    }
    levels
}

/// Bilinear upsampling of a coarse flow with displacements rescaled to the
/// finer grid.
pub(crate) fn upsample_flow<T: Scalar>(flow: &FlowField<T>, width: usize, height: usize) -> FlowField<T> {
    let cw = flow.width();
    let ch = flow.height();
    let su = T::from_usize_lossy(width) / T::from_usize_lossy(cw);
    let sv = T::from_usize_lossy(height) / T::from_usize_lossy(ch);
    let u = Frame::new(cw, ch, flow.u().to_vec()).expect("finite flow");
    let v = Frame::new(cw, ch, flow.v().to_vec()).expect("finite flow");
    let u = resample(&u, width, height);
    let v = resample(&v, width, height);
    FlowField::from_fn(width, height, |x, y| (u.get(x, y) * su, v.get(x, y) * sv))
}
