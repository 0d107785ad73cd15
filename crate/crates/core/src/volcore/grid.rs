use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense 2-D grid stored x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type Image2 = Grid2<f64>;
pub type Mask2 = Grid2<bool>;

impl<T: Copy> Grid2<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self { width, height, data: vec![fill; width * height] }
    }

    /// Panics if `data.len() != width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length mismatch");
        Self { width, height, data }
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Value at a possibly out-of-bounds signed coordinate.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> Option<T> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.data[y as usize * self.width + x as usize])
        }
    }

    pub fn same_shape<U>(&self, other: &Grid2<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid2<U> {
        Grid2 { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Iterator over `(x, y, value)`.
    pub fn iter_xy(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, &v)| (i % w, i / w, v))
    }
}

impl<T> Index<(usize, usize)> for Grid2<T> {
    type Output = T;
    #[inline]
    fn index(&self, (x, y): (usize, usize)) -> &T {
        &self.data[y * self.width + x]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid2<T> {
    #[inline]
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut T {
        &mut self.data[y * self.width + x]
    }
}

impl Grid2<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert!(self.same_shape(other), "mask shape mismatch");
        Grid2 {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    /// Set difference `self \ other`.
    pub fn minus(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> Self {
        self.map(|b| !b)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.same_shape(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Mean pixel position of the set, `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y, v) in self.iter_xy() {
            if v {
                sx += x as f64;
                sy += y as f64;
                n += 1;
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }
}

impl Grid2<f64> {
    /// Values at set positions of `mask`.
    pub fn values_in(&self, mask: &Mask2) -> Vec<f64> {
        assert!(self.same_shape(mask), "mask shape mismatch");
        self.data.iter().zip(mask.data()).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Dense 3-D grid with physical voxel spacing in mm, stored x-fastest then y then z.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid3<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<T>,
}

/// Scalar image volume.
pub type Volume = Grid3<f64>;
/// Binary volume aligned with a [`Volume`].
pub type Mask = Grid3<bool>;

fn check_geometry(dims: [usize; 3], spacing: [f64; 3]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Shape(format!("dims must be >= 1, got {dims:?}")));
    }
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::Spacing(format!("spacing must be positive, got {spacing:?}")));
    }
    Ok(())
}

impl<T: Copy> Grid3<T> {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], fill: T) -> Result<Self> {
        check_geometry(dims, spacing)?;
        Ok(Self { dims, spacing, data: vec![fill; dims[0] * dims[1] * dims[2]] })
    }

    pub fn from_vec(dims: [usize; 3], spacing: [f64; 3], data: Vec<T>) -> Result<Self> {
        check_geometry(dims, spacing)?;
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, spacing, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Voxel volume in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[(z * self.dims[1] + y) * self.dims[0] + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: T) {
        self.data[(z * self.dims[1] + y) * self.dims[0] + x] = v;
    }

    pub fn same_geometry<U>(&self, other: &Grid3<U>) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub fn slice(&self, z: usize) -> Grid2<T> {
        let n = self.dims[0] * self.dims[1];
        Grid2::from_vec(self.dims[0], self.dims[1], self.data[z * n..(z + 1) * n].to_vec())
    }

    pub fn set_slice(&mut self, z: usize, s: &Grid2<T>) {
        assert_eq!((s.width(), s.height()), (self.dims[0], self.dims[1]), "slice shape mismatch");
        let n = self.dims[0] * self.dims[1];
        self.data[z * n..(z + 1) * n].copy_from_slice(s.data());
    }

    /// Assemble a volume from equally sized slices.
    pub fn from_slices(slices: &[Grid2<T>], spacing: [f64; 3]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::Shape("no slices".into()))?;
        let dims = [first.width(), first.height(), slices.len()];
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for s in slices {
            if !s.same_shape(first) {
                return Err(Error::Shape("slices differ in shape".into()));
            }
            data.extend_from_slice(s.data());
        }
        Self::from_vec(dims, spacing, data)
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid3<U> {
        Grid3 { dims: self.dims, spacing: self.spacing, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

impl Grid3<f64> {
    /// Rejects NaN and infinite samples.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::DegenerateData(format!("non-finite voxel at index {i}"))),
            None => Ok(()),
        }
    }
}

impl Grid3<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn or(&self, other: &Self) -> Self {
        assert!(self.same_geometry(other), "mask geometry mismatch");
        Grid3 {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dims == other.dims && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// An empty mask with this mask's geometry.
    pub fn empty_like<U>(other: &Grid3<U>) -> Self {
        Grid3 { dims: other.dims, spacing: other.spacing, data: vec![false; other.data.len()] }
    }
}
