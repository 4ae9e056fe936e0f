use crate::geometry::CurveId;
use serde::{Serialize, Serializer};

/// Subset of a boundary curve, resolved on `n` equal parameter cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryRegion {
    curve: CurveId,
    mask: Vec<bool>,
}

impl BoundaryRegion {
    pub fn from_mask(curve: CurveId, mask: Vec<bool>) -> Self {
        Self { curve, mask }
    }

    pub fn empty(curve: CurveId, n: usize) -> Self {
        Self::from_mask(curve, vec![false; n])
    }

    pub fn full(curve: CurveId, n: usize) -> Self {
        Self::from_mask(curve, vec![true; n])
    }

    /// Cells whose midpoint lies in one of the given parameter intervals.
    pub fn from_intervals(curve: CurveId, n: usize, intervals: &[(f64, f64)]) -> Self {
        let mask = (0..n)
            .map(|i| {
                let s = Self::cell_center(n, i);
                intervals.iter().any(|&(a, b)| a <= s && s < b)
            })
            .collect();
        Self { curve, mask }
    }

    pub fn cell_center(n: usize, i: usize) -> f64 {
        (i as f64 + 0.5) / n as f64
    }

    pub fn curve(&self) -> CurveId {
        self.curve
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn cell_of(&self, s: f64) -> usize {
        let n = self.n();
        ((s.rem_euclid(1.0) * n as f64) as usize).min(n - 1)
    }

    pub fn contains(&self, s: f64) -> bool {
        !self.mask.is_empty() && self.mask[self.cell_of(s)]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.n()
    }

    /// Total parameter length.
    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.n() as f64
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.curve, self.mask.iter().map(|b| !b).collect())
    }

    pub fn is_subset_of(&self, o: &BoundaryRegion) -> bool {
        self.mask.len() == o.mask.len() && self.mask.iter().zip(&o.mask).all(|(a, b)| !a || *b)
    }

    pub fn symmetric_difference(&self, o: &BoundaryRegion) -> usize {
        self.mask.iter().zip(&o.mask).filter(|(a, b)| a != b).count()
    }

    /// Disjoint sorted parameter intervals in `[0, 1)`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            if self.mask[i] {
                let start = i;
                while i < n && self.mask[i] {
                    i += 1;
                }
                out.push((start as f64 / n as f64, i as f64 / n as f64));
            } else {
                i += 1;
            }
        }
        out
    }

    /// Connected components as runs of cell indices, merging across `s = 0`.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        if self.is_full() {
            return vec![(0..n).collect()];
        }
        let Some(gap) = self.mask.iter().position(|b| !b) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        for k in 1..=n {
            let i = (gap + k) % n;
            if self.mask[i] {
                cur.push(i);
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }
}

impl Serialize for BoundaryRegion {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            curve: CurveId,
            n_samples: usize,
            intervals: Vec<(f64, f64)>,
            measure: f64,
        }
        Repr {
            curve: self.curve,
            n_samples: self.n(),
            intervals: self.intervals(),
            measure: self.measure(),
        }
        .serialize(ser)
    }
}
