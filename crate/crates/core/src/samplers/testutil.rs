use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mpl::NodeScore;
use crate::gaussian::{sample_mvn, DataMatrix, PrecisionMatrix};

/// Score that ignores the data.
pub struct Flat(pub usize);

impl NodeScore for Flat {
    fn p(&self) -> usize {
        self.0
    }
    fn local(&mut self, _: usize, _: &[usize]) -> f64 {
        0.0
    }
}

/// 30 draws from a three-node chain model with one weak link.
pub fn three_node_data(seed: u64) -> DataMatrix {
    let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.45, 0.0, 0.45, 1.0, 0.3, 0.0, 0.3, 1.0]);
    let k = PrecisionMatrix::new(k).unwrap();
    sample_mvn(&k, 30, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}
