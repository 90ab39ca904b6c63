use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Grayscale image with intensities nominally in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("empty frame {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "frame {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frame intensities"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with border replication.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample; coordinates outside the frame clamp to the border.
    pub fn sample(&self, x: T, y: T) -> T {
        let max_x = T::from_usize_lossy(self.width - 1);
        let max_y = T::from_usize_lossy(self.height - 1);
        let x = x.max(T::zero()).min(max_x);
        let y = y.max(T::zero()).min(max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let xi = x0.to_usize().unwrap_or(0);
        let yi = y0.to_usize().unwrap_or(0);
        let xj = (xi + 1).min(self.width - 1);
        let yj = (yi + 1).min(self.height - 1);
        let one = T::one();
        let top = self.get(xi, yi) * (one - fx) + self.get(xj, yi) * fx;
        let bottom = self.get(xi, yj) * (one - fx) + self.get(xj, yj) * fx;
        top * (one - fy) + bottom * fy
    }

    pub fn same_shape<U>(&self, other: &Frame<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Mean absolute per-pixel difference.
    pub fn mean_abs_diff(&self, other: &Self) -> Result<T> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch("mean_abs_diff".into()));
        }
        let sum: T = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        Ok(sum / T::from_usize_lossy(self.data.len()))
    }

    pub fn cast<U: Scalar>(&self) -> Frame<U> {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Dense displacement field; `u` is the horizontal and `v` the vertical component.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T> {
    width: usize,
    height: usize,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(width: usize, height: usize, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "flow {width}x{height} with component lengths {} and {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("flow field"));
        }
        Ok(Self { width, height, u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, T::zero(), T::zero())
    }

    pub fn uniform(width: usize, height: usize, du: T, dv: T) -> Self {
        Self {
            width,
            height,
            u: vec![du; width * height],
            v: vec![dv; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self { width, height, u, v }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn u(&self) -> &[T] {
        &self.u
    }

    #[inline]
    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub(crate) fn u_mut(&mut self) -> &mut [T] {
        &mut self.u
    }

    pub(crate) fn v_mut(&mut self) -> &mut [T] {
        &mut self.v
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (T, T) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> (T, T) {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, value: (T, T)) {
        let i = y * self.width + x;
        self.u[i] = value.0;
        self.v[i] = value.1;
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|&x| x * c).collect(),
            v: self.v.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn mean_magnitude(&self) -> T {
        let sum: T = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(&a, &b)| a.hypot(b))
            .sum();
        sum / T::from_usize_lossy(self.u.len())
    }

    /// Mean endpoint error against a constant displacement.
    pub fn mean_endpoint_error_to(&self, du: T, dv: T) -> T {
        let sum: T = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(&a, &b)| (a - du).hypot(b - dv))
            .sum();
        sum / T::from_usize_lossy(self.u.len())
    }

    pub fn cast<U: Scalar>(&self) -> FlowField<U> {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|x| U::lit(x.as_f64())).collect(),
            v: self.v.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }
}

/// Samples `b` at `(x + u, y + v)` for every pixel.
pub fn warp<T: Scalar>(b: &Frame<T>, flow: &FlowField<T>) -> Result<Frame<T>> {
    if b.width() != flow.width() || b.height() != flow.height() {
        return Err(Error::DimensionMismatch(format!(
            "warp: frame {}x{} vs flow {}x{}",
            b.width(),
            b.height(),
            flow.width(),
            flow.height()
        )));
    }
    let w = b.width();
    Ok(Frame::from_fn(w, b.height(), |x, y| {
        let i = y * w + x;
        b.sample(
            T::from_usize_lossy(x) + flow.u[i],
            T::from_usize_lossy(y) + flow.v[i],
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Frame<f64> {
        Frame::from_fn(w, h, |x, _| x as f64 / w as f64)
    }

    #[test]
    fn zero_flow_warp_is_identity() {
        let b = Frame::from_fn(20, 17, |x, y| ((x * 7 + y * 3) % 11) as f64 / 11.0);
        let out = warp(&b, &FlowField::zeros(20, 17)).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn integer_flow_is_exact_lookup() {
        let b = ramp(32, 8);
        let out = warp(&b, &FlowField::uniform(32, 8, 1.0, 0.0)).unwrap();
        for y in 0..8 {
            for x in 0..31 {
                assert_eq!(out.get(x, y), (x + 1) as f64 / 32.0);
            }
        }
    }

    #[test]
    fn half_pixel_flow_on_ramp_is_exact() {
        let b = ramp(32, 8);
        let out = warp(&b, &FlowField::uniform(32, 8, 0.5, 0.0)).unwrap();
        for y in 0..8 {
            for x in 0..31 {
                assert!((out.get(x, y) - (x as f64 + 0.5) / 32.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn out_of_bounds_clamps_to_border() {
        let b = ramp(16, 4);
        let out = warp(&b, &FlowField::uniform(16, 4, 100.0, -50.0)).unwrap();
        for y in 0..4 {
            for x in 0..16 {
                assert_eq!(out.get(x, y), 15.0 / 16.0);
            }
        }
    }

    #[test]
    fn warp_dimension_mismatch() {
        let b = ramp(16, 4);
        assert!(matches!(
            warp(&b, &FlowField::zeros(16, 5)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn frame_rejects_non_finite() {
        assert!(matches!(
            Frame::new(2, 1, vec![0.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }
}
