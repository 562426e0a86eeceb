//! Block-Hankel (time-delay) lifting of a window of snapshots.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::timeseries::{SnapshotMatrix, WindowSpec};

/// `(d * n_h) x (m_h + 1)` block-Hankel matrix. Block `(r, c)` holds snapshot
/// `f_{start + r + c}`, with the observable index varying fastest inside a block.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    data: DMatrix<f64>,
    d: usize,
    window: WindowSpec,
}

impl HankelMatrix {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_h(&self) -> usize {
        self.window.n_h
    }

    pub fn m_h(&self) -> usize {
        self.window.m_h
    }

    pub fn start(&self) -> usize {
        self.window.start
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    /// Lifted dimension `d * n_h`.
    pub fn lifted_dim(&self) -> usize {
        self.data.nrows()
    }

    /// First `m_h` columns.
    pub fn x(&self) -> DMatrixView<'_, f64> {
        self.data.columns(0, self.window.m_h)
    }

    /// Last `m_h` columns (`x` shifted by one step).
    pub fn y(&self) -> DMatrixView<'_, f64> {
        self.data.columns(1, self.window.m_h)
    }

    /// Absolute time index of the snapshot in the last block row of column 0.
    pub fn first_tail_index(&self) -> usize {
        self.window.start + self.window.n_h - 1
    }
}

pub fn build_hankel(s: &SnapshotMatrix, spec: WindowSpec) -> Result<HankelMatrix> {
    spec.check(s.len())?;
    let d = s.d();
    let v = s.values();
    let data = DMatrix::from_fn(d * spec.n_h, spec.m_h + 1, |row, col| {
        let (block, obs) = (row / d, row % d);
        v[(obs, spec.start + block + col)]
    });
    Ok(HankelMatrix {
        data,
        d,
        window: spec,
    })
}

/// Trailing `d` entries of a lifted vector: the block matching the most recent
/// delay, i.e. the original observables.
pub fn extract_tail<T: Clone>(mode: &[T], d: usize, n_h: usize) -> Result<Vec<T>> {
    if d == 0 || mode.len() != d * n_h {
        return Err(Error::Shape(format!(
            "lifted vector of length {} does not match d = {d}, n_h = {n_h}",
            mode.len()
        )));
    }
    Ok(mode[(n_h - 1) * d..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn series(rows: &[Vec<f64>]) -> SnapshotMatrix {
        SnapshotMatrix::from_time_rows(rows).unwrap()
    }

    #[test]
    fn scalar_hand_example() {
        let s = series(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let h = build_hankel(&s, WindowSpec::new(0, 2, 2)).unwrap();
        assert_eq!(
            h.data(),
            &DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
        assert_eq!(h.x().ncols(), 2);
        assert_eq!(h.y()[(1, 1)], 4.0);
    }

    #[test]
    fn window_past_the_end() {
        let s = series(&[vec![1.0], vec![2.0], vec![3.0]]);
        assert!(matches!(
            build_hankel(&s, WindowSpec::new(1, 2, 1)),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn influenza_sized_window() {
        let rows: Vec<Vec<f64>> = (0..400).map(|k| vec![k as f64, (k * k) as f64]).collect();
        let h = build_hankel(&series(&rows), WindowSpec::new(50, 104, 104)).unwrap();
        assert_eq!(h.data().shape(), (208, 105));
        assert_eq!(h.x().shape(), (208, 104));
        assert_eq!(h.data()[(207, 104)], (50.0f64 + 103.0 + 104.0).powi(2));
    }

    #[test]
    fn block_structure_by_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (d, n_h, m_h) = (3, 4, 5);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let s = series(&rows);
        let b = 2;
        let h = build_hankel(&s, WindowSpec::new(b, n_h, m_h)).unwrap();
        for r in 0..n_h {
            for c in 0..=m_h {
                for i in 0..d {
                    assert_eq!(h.data()[(r * d + i, c)], rows[b + r + c][i]);
                    if r > 0 && c < m_h {
                        assert_eq!(h.data()[(r * d + i, c)], h.data()[((r - 1) * d + i, c + 1)]);
                    }
                }
            }
        }
        // Last block row replays f_{b+n_h-1} .. f_{b+n_h+m_h-1}.
        for c in 0..=m_h {
            let col: Vec<f64> = h.data().column(c).iter().copied().collect();
            assert_eq!(extract_tail(&col, d, n_h).unwrap(), rows[b + n_h - 1 + c]);
        }
        assert_eq!(h.first_tail_index(), b + n_h - 1);
    }

    #[test]
    fn constant_input_has_rank_one() {
        let rows = vec![vec![2.5, -1.0]; 9];
        let h = build_hankel(&series(&rows), WindowSpec::new(0, 4, 5)).unwrap();
        assert_eq!(h.data().clone().svd(false, false).rank(1e-12), 1);
    }

    #[test]
    fn tail_slices() {
        let mode = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(extract_tail(&mode, 2, 3).unwrap(), vec![5.0, 6.0]);
        assert_eq!(extract_tail(&mode, 1, 6).unwrap(), vec![6.0]);
        assert!(matches!(extract_tail(&mode, 4, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn tail_matches_reshape() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (d, n_h) in [(1, 7), (2, 5), (4, 3)] {
            let mode: Vec<f64> = (0..d * n_h).map(|_| rng.gen()).collect();
            let blocks: Vec<&[f64]> = mode.chunks(d).collect();
            assert_eq!(extract_tail(&mode, d, n_h).unwrap(), blocks[n_h - 1]);
        }
    }
}
