//! Fixtures shared by the criterion benches.

use coartic::synth::{gen_viseme_track, StandardCorpus};
use coartic::{MeshSequence, VertexRegionMask};

/// First track of the reference corpus and its lip mask.
pub fn standard_track() -> (MeshSequence, VertexRegionMask) {
    let corpus = StandardCorpus::default();
    let specs = corpus.specs().expect("valid corpus");
    let (seq, _) = gen_viseme_track(&specs[0]).expect("valid spec");
    (seq, corpus.lips().expect("valid mask"))
}
