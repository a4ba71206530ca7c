//! Shared fixtures for the engine benchmarks.

use predbridge_core::synth::{default_planted_box, uniform_unit, PlantedBox};
use predbridge_core::{Dataset, LabeledSelection, NormalizedView};

pub struct Fixture {
    pub planted: PlantedBox,
    pub view: NormalizedView,
}

/// The 1000 x 10 planted-box dataset with its normalization.
pub fn planted(seed: u64) -> Fixture {
    let planted = default_planted_box(seed).expect("fixture parameters are valid");
    let view = predbridge_core::normalize(&planted.dataset);
    Fixture { planted, view }
}

/// `n` x 3 uniform rows with a diagonal band as the selection, for RPI.
pub fn rpi_instance(n: usize, seed: u64) -> (Dataset, LabeledSelection) {
    let rows = uniform_unit(n, 3, seed);
    let labels = rows.iter().map(|r| (r[0] - r[1]).abs() < 0.2 && r[2] > 0.3).collect();
    let ds = Dataset::from_rows(vec!["a".into(), "b".into(), "c".into()], &rows, vec![[0.0, 0.0]; n])
        .expect("fixture rows are finite");
    (ds, LabeledSelection::new(labels).expect("band selects some rows"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let f = planted(0);
        assert_eq!(f.view.n_rows(), 1000);
        let (ds, sel) = rpi_instance(200, 1);
        assert_eq!(ds.n_rows(), sel.len());
    }
}
