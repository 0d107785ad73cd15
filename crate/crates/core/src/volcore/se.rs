use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeKind {
    Disk { radius: usize },
    Bar { length: usize, angle_deg: f64 },
    /// Anything produced by reflection or hand construction.
    Custom,
}

/// Flat 2-D structuring element: a set of integer offsets around an anchor at (0, 0).
#[derive(Clone, Debug, PartialEq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
    kind: SeKind,
}

impl StructuringElement {
    /// All offsets with Euclidean norm at most `radius`.
    pub fn disk(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        Self { offsets, kind: SeKind::Disk { radius } }
    }

    /// A rasterised line segment of `length` pixels oriented `angle_deg`
    /// counter-clockwise from the +x axis (image y points down).
    ///
    /// Pixels are placed by stepping the dominant axis of (cos θ, −sin θ) one
    /// pixel at a time and rounding the minor coordinate. The anchor is member
    /// ⌊L/2⌋ counted from the positive end, so an even-length bar carries its
    /// extra pixel on the positive side.
    pub fn bar(length: usize, angle_deg: f64) -> Self {
        assert!(length >= 1, "bar length must be >= 1");
        let theta = angle_deg.to_radians();
        let (dx, dy) = (theta.cos(), -theta.sin());
        let half = (length / 2) as isize;
        let neg = length as isize - 1 - half;
        let offsets = (0..length as isize)
            .map(|i| {
                let t = half - i;
                if dx.abs() >= dy.abs() {
                    (t * dx.signum() as isize, (t as f64 * dy / dx.abs()).round() as isize)
                } else {
                    ((t as f64 * dx / dy.abs()).round() as isize, t * dy.signum() as isize)
                }
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(offsets.len(), (half + neg + 1) as usize);
        Self { offsets, kind: SeKind::Bar { length, angle_deg } }
    }

    /// Build from explicit offsets; the anchor is added if missing.
    pub fn from_offsets(mut offsets: Vec<(isize, isize)>) -> Self {
        if !offsets.contains(&(0, 0)) {
            offsets.push((0, 0));
        }
        Self { offsets, kind: SeKind::Custom }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn kind(&self) -> SeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains(&self, offset: (isize, isize)) -> bool {
        self.offsets.contains(&offset)
    }

    /// Point reflection through the anchor.
    pub fn reflected(&self) -> Self {
        Self { offsets: self.offsets.iter().map(|&(x, y)| (-x, -y)).collect(), kind: SeKind::Custom }
    }

    /// Bounding half-extent (max |dx|, max |dy|).
    pub fn radius(&self) -> (usize, usize) {
        self.offsets.iter().fold((0, 0), |(rx, ry), &(x, y)| {
            (rx.max(x.unsigned_abs()), ry.max(y.unsigned_abs()))
        })
    }
}
