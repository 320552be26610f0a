use crate::error::{Error, Result};

/// Rectangular grid flattened row-major: `index = row * width + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub height: usize,
    pub width: usize,
}

impl GridSpec {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        Ok(Self { height, width })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    /// Cell reached from `index` by `(d_row, d_col)`, if it stays on the grid.
    pub fn offset(&self, index: usize, d_row: isize, d_col: isize) -> Option<usize> {
        let (r, c) = self.cell(index);
        let r = r.checked_add_signed(d_row)?;
        let c = c.checked_add_signed(d_col)?;
        (r < self.height && c < self.width).then(|| self.index(r, c))
    }

    pub fn chebyshev(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.cell(a);
        let (rb, cb) = self.cell(b);
        ra.abs_diff(rb).max(ca.abs_diff(cb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening_round_trip() {
        let g = GridSpec::new(3, 4).unwrap();
        assert_eq!(g.len(), 12);
        for i in 0..g.len() {
            let (r, c) = g.cell(i);
            assert_eq!(g.index(r, c), i);
        }
        assert_eq!(g.index(1, 2), 6);
    }

    #[test]
    fn offsets_respect_borders() {
        let g = GridSpec::new(2, 3).unwrap();
        assert_eq!(g.offset(0, 0, 1), Some(1));
        assert_eq!(g.offset(0, -1, 0), None);
        assert_eq!(g.offset(2, 0, 1), None);
        assert_eq!(g.offset(2, 1, -1), Some(4));
        assert_eq!(g.chebyshev(0, 5), 2);
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(GridSpec::new(0, 3).is_err());
    }
}
