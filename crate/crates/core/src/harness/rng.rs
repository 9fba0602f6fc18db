use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a random stream is used for. Each purpose gets disjoint streams so
/// that, e.g., changing how initial points are drawn never alters the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Per-replication simulated data.
    Data = 0,
    /// Per-replication initial parameters.
    Init = 1,
    /// A data set shared by every replication.
    FixedData = 2,
    /// Random scan orders.
    Scan = 3,
}

/// Master seed from which every random stream of an experiment is derived.
///
/// Stream `(purpose, group, r)` is ChaCha8 seeded with the master seed and
/// positioned on a stream index packing the three keys, so the draws of
/// replication `r` do not depend on which worker runs it or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// `group` distinguishes e.g. the sample sizes of one experiment; it must
    /// stay below 2^16 and `r` below 2^40.
    pub fn stream(&self, purpose: StreamPurpose, group: u64, r: u64) -> ChaCha8Rng {
        assert!(group < 1 << 16 && r < 1 << 40, "stream key out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(((purpose as u64) << 56) | (group << 40) | r);
        rng
    }

    /// Stream for the data of replication `r`.
    pub fn replication(&self, r: u64) -> ChaCha8Rng {
        self.stream(StreamPurpose::Data, 0, r)
    }
}
