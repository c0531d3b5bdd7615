//! Dense row-major tensors with up to four axes.
//!
//! Four-axis tensors follow the semantic order `[batch, channel, frequency,
//! time]`; two-axis feature grids are `[frequency, time]`. Data is always
//! row-major and owned, so iteration order (and therefore floating-point
//! summation order) is fixed regardless of how callers parallelize.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

/// Maximum number of axes a tensor may carry.
pub const MAX_RANK: usize = 4;

/// Dense row-major tensor over a [`Scalar`] element type.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Build a tensor from a shape and matching row-major data.
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        validate_shape(shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::invalid(
                "tensor",
                format!(
                    "shape {:?} implies {} elements, got {}",
                    shape,
                    expected,
                    data.len()
                ),
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// All-zero tensor. Panics on an invalid shape; shapes here are always
    /// produced by the library itself.
    pub fn zeros(shape: &[usize]) -> Self {
        validate_shape(shape).expect("invalid tensor shape");
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    /// Tensor filled with a constant.
    pub fn full(shape: &[usize], value: T) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    /// Tensor with elements drawn i.i.d. uniform from `[lo, hi)`.
    pub fn random_uniform<R: Rng>(shape: &[usize], lo: T, hi: T, rng: &mut R) -> Self {
        let dist = Uniform::new(lo, hi);
        let mut t = Self::zeros(shape);
        for v in t.data.iter_mut() {
            *v = dist.sample(rng);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Extent of axis `i`.
    pub fn dim(&self, i: usize) -> usize {
        self.shape[i]
    }

    /// Flat offset of a 2-D index.
    #[inline]
    pub fn off2(&self, i: usize, j: usize) -> usize {
        debug_assert_eq!(self.rank(), 2);
        i * self.shape[1] + j
    }

    /// Flat offset of a 3-D index.
    #[inline]
    pub fn off3(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert_eq!(self.rank(), 3);
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    /// Flat offset of a 4-D index.
    #[inline]
    pub fn off4(&self, b: usize, c: usize, f: usize, t: usize) -> usize {
        debug_assert_eq!(self.rank(), 4);
        ((b * self.shape[1] + c) * self.shape[2] + f) * self.shape[3] + t
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> T {
        self.data[self.off2(i, j)]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.off3(i, j, k)]
    }

    #[inline]
    pub fn at4(&self, b: usize, c: usize, f: usize, t: usize) -> T {
        self.data[self.off4(b, c, f, t)]
    }

    /// Elementwise map into a tensor of the same shape.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Reinterpret the same data under a new shape with equal element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape, other.shape, "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Convert elementwise to another scalar width.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&v| U::from(v).expect("scalar cast"))
                .collect(),
        }
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::invalid(
            "tensor",
            format!("rank must be 1..={MAX_RANK}, got {}", shape.len()),
        ));
    }
    if shape.contains(&0) {
        return Err(Error::invalid(
            "tensor",
            format!("all extents must be >= 1, got {shape:?}"),
        ));
    }
    Ok(())
}

/// Checks one axis of an operation's input against an expected extent.
pub(crate) fn expect_axis(
    op: &'static str,
    axis: &'static str,
    expected: usize,
    actual: usize,
) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::AxisMismatch {
            op,
            axis,
            expected,
            actual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_validates_element_count() {
        assert!(Tensor::<f32>::new(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn zero_extents_rejected() {
        assert!(Tensor::<f32>::new(&[2, 0], vec![]).is_err());
        assert!(Tensor::<f32>::new(&[], vec![]).is_err());
        assert!(Tensor::<f32>::new(&[1, 1, 1, 1, 1], vec![0.0]).is_err());
    }

    #[test]
    fn row_major_offsets() {
        let t = Tensor::<f64>::new(&[2, 3], (0..6).map(|i| i as f64).collect()).unwrap();
        assert_eq!(t.at2(0, 0), 0.0);
        assert_eq!(t.at2(0, 2), 2.0);
        assert_eq!(t.at2(1, 0), 3.0);

        let u = Tensor::<f64>::new(&[2, 2, 2, 2], (0..16).map(|i| i as f64).collect()).unwrap();
        assert_eq!(u.at4(1, 0, 1, 0), 10.0);
        assert_eq!(u.at4(0, 1, 1, 1), 7.0);
    }

    #[test]
    fn cast_round_trip_widens_exactly() {
        let t = Tensor::<f32>::new(&[3], vec![0.1, -2.5, 7.0]).unwrap();
        let wide: Tensor<f64> = t.cast();
        let back: Tensor<f32> = wide.cast();
        assert_eq!(t, back);
    }
}
