//! Seeded synthetic study collections for exercising power schemes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::DataTable;
use crate::model::Study;

/// Shape of a generated collection.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub studies: usize,
    pub r_range: (f64, f64),
    pub n_range: (u64, u64),
    /// Sample sizes and correlations pinned onto the largest studies, smallest
    /// first.
    pub largest: Vec<(u64, f64)>,
    /// Upper bound on n for the other studies.
    pub bulk_n_max: u64,
}

impl Default for SynthSpec {
    /// 56 studies, r in [0.01, 0.52], n in [50, 2136]. The two largest studies
    /// (n = 1212 and 2136) carry above-average correlations.
    fn default() -> Self {
        SynthSpec {
            studies: 56,
            r_range: (0.01, 0.52),
            n_range: (50, 2136),
            largest: vec![(1212, 0.34), (2136, 0.45)],
            bulk_n_max: 1000,
        }
    }
}

/// Generates the collection. The bulk has log-uniform sample sizes up to
/// `bulk_n_max` and correlations from a triangular distribution peaking at a
/// quarter of the range; the first bulk study takes the smallest r and n and
/// the second the largest r, so both ranges are attained exactly.
pub fn synthetic_studies(spec: &SynthSpec, seed: u64) -> Result<Vec<Study>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r_lo, r_hi) = spec.r_range;
    let (n_lo, n_hi) = spec.n_range;
    let bulk = spec.studies.saturating_sub(spec.largest.len());
    let n_cap = spec.bulk_n_max.min(n_hi);
    let mode = r_lo + 0.25 * (r_hi - r_lo);
    let mut out = Vec::with_capacity(spec.studies);
    for i in 0..bulk {
        let (r, n) = match i {
            0 => (r_lo, n_lo),
            1 => (r_hi, sample_n(&mut rng, n_lo, n_cap)),
            _ => (triangular(&mut rng, r_lo, mode, r_hi), sample_n(&mut rng, n_lo, n_cap)),
        };
        let r = (r * 1000.0).round() / 1000.0;
        out.push(Study::new(format!("s{:02}", i + 1), r, n)?);
    }
    for (k, &(n, r)) in spec.largest.iter().enumerate() {
        out.push(Study::new(format!("s{:02}", bulk + k + 1), r, n)?);
    }
    Ok(out)
}

fn sample_n(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> u64 {
    let u: f64 = rng.random();
    let v = ((lo as f64).ln() + u * ((hi as f64).ln() - (lo as f64).ln())).exp();
    (v.round() as u64).clamp(lo, hi)
}

fn triangular(rng: &mut ChaCha8Rng, lo: f64, mode: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    let cut = (mode - lo) / (hi - lo);
    if u < cut {
        lo + ((hi - lo) * (mode - lo) * u).sqrt()
    } else {
        hi - ((hi - lo) * (hi - mode) * (1.0 - u)).sqrt()
    }
}

/// The studies as a table with columns `id r n`.
pub fn to_table(studies: &[Study]) -> DataTable {
    DataTable {
        header: vec!["id".into(), "r".into(), "n".into()],
        rows: studies
            .iter()
            .enumerate()
            .map(|(i, s)| vec![Some((i + 1) as f64), Some(s.r), Some(s.n as f64)])
            .collect(),
    }
}
