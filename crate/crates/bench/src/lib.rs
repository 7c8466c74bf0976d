//! Fixtures shared by the benchmarks.

use lrldl_core::{degrade, synth_lowrank, Dataset, Degradation, MultiLabelMatrix};

/// Synthetic dataset with two label groups and mild noise.
pub fn dataset(n: usize, d: usize, m: usize) -> Dataset {
    synth_lowrank(n, d, m, 2, 0.1, 7).expect("valid synthetic sizes")
}

pub fn labels(ds: &Dataset, k: usize) -> MultiLabelMatrix {
    degrade(&ds.distributions, Degradation::TopK { k }).expect("k within label count")
}
