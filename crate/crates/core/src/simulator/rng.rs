//! Random streams for the simulator.
//!
//! Every replication gets one ChaCha substream per purpose, keyed by the
//! master seed and the replication index, so two systems built from the same
//! key see exactly the same arrival times and job triplets and nothing else
//! is shared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::model::ModelParams;

/// Service requirements of one job under every mode it could be given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobTriplet {
    /// Cloud time if assigned SM1.
    pub sigma_c1: f64,
    /// Local time if assigned SM2; always `mu_c1 / mu_l2 * sigma_c1`.
    pub sigma_l2: f64,
    /// Cloud time if assigned SM2.
    pub sigma_c2: f64,
}

/// Draws a coupled triplet: `sigma_l2` is a deterministic rescaling of
/// `sigma_c1`, `sigma_c2` is independent.
pub fn gen_triplet<R: Rng + ?Sized>(rng: &mut R, p: &ModelParams) -> JobTriplet {
    let sigma_c1 = Exp::new(p.mu_c1).expect("positive rate").sample(rng);
    let sigma_c2 = Exp::new(p.mu_c2).expect("positive rate").sample(rng);
    JobTriplet {
        sigma_c1,
        sigma_l2: (p.mu_c1 / p.mu_l2) * sigma_c1,
        sigma_c2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 1,
    Triplets = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Substream for `(master seed, replication, system tag, purpose)`. Tag 0 is
/// the shared stream; independent comparisons use a different tag for the
/// second system.
pub fn substream(seed: u64, replication: u64, tag: u64, stream: Stream) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(replication.wrapping_add(splitmix64(tag))));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream as u64);
    rng
}

/// Poisson arrivals with a triplet per job, in arrival order.
#[derive(Debug, Clone)]
pub struct JobSource {
    arrivals: ChaCha8Rng,
    triplets: ChaCha8Rng,
    interarrival: Option<Exp<f64>>,
    params: ModelParams,
}

impl JobSource {
    pub fn new(params: &ModelParams, seed: u64, replication: u64, tag: u64) -> Self {
        let interarrival = (params.lambda > 0.0).then(|| Exp::new(params.lambda).expect("positive rate"));
        Self {
            arrivals: substream(seed, replication, tag, Stream::Arrivals),
            triplets: substream(seed, replication, tag, Stream::Triplets),
            interarrival,
            params: *params,
        }
    }

    /// Time to the next arrival; infinite without arrivals.
    pub fn next_gap(&mut self) -> f64 {
        match &self.interarrival {
            Some(d) => d.sample(&mut self.arrivals),
            None => f64::INFINITY,
        }
    }

    pub fn next_triplet(&mut self) -> JobTriplet {
        gen_triplet(&mut self.triplets, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_a() -> ModelParams {
        ModelParams::derive_rates(3.6, 1.0, 8.0, 0.4).unwrap()
    }

    #[test]
    fn ratio_is_exact_for_every_draw() {
        let p = config_a();
        let mut rng = substream(1, 0, 0, Stream::Triplets);
        for _ in 0..10_000 {
            let t = gen_triplet(&mut rng, &p);
            assert!(t.sigma_c1 > 0.0 && t.sigma_c2 > 0.0);
            assert!(((t.sigma_l2 / t.sigma_c1) - 3.2).abs() <= 4.0 * f64::EPSILON * 3.2);
            assert!(t.sigma_l2 > t.sigma_c1);
        }
    }

    #[test]
    fn sigma_c1_mean() {
        let p = config_a();
        let mut rng = substream(2, 0, 0, Stream::Triplets);
        let n = 1_000_000;
        let mean = (0..n).map(|_| gen_triplet(&mut rng, &p).sigma_c1).sum::<f64>() / n as f64;
        assert!((mean - 0.125).abs() < 0.01 * 0.125, "mean {mean}");
    }

    #[test]
    fn stage_times_uncorrelated() {
        let p = config_a();
        let mut rng = substream(3, 0, 0, Stream::Triplets);
        let n = 200_000;
        let draws: Vec<JobTriplet> = (0..n).map(|_| gen_triplet(&mut rng, &p)).collect();
        let m1 = draws.iter().map(|t| t.sigma_c1).sum::<f64>() / n as f64;
        let m2 = draws.iter().map(|t| t.sigma_c2).sum::<f64>() / n as f64;
        let (mut c, mut v1, mut v2) = (0.0, 0.0, 0.0);
        for t in &draws {
            c += (t.sigma_c1 - m1) * (t.sigma_c2 - m2);
            v1 += (t.sigma_c1 - m1).powi(2);
            v2 += (t.sigma_c2 - m2).powi(2);
        }
        let corr = c / (v1 * v2).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn local_stage_is_exponential() {
        // Kolmogorov-Smirnov against Exp(mu_l2), 1% level: D < 1.628 / sqrt(n)
        let p = config_a();
        let mut rng = substream(4, 0, 0, Stream::Triplets);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| gen_triplet(&mut rng, &p).sigma_l2).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let cdf = 1.0 - (-p.mu_l2 * x).exp();
            d = d.max((cdf - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - cdf).abs());
        }
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let mut a = substream(9, 3, 0, Stream::Arrivals);
        let mut b = substream(9, 3, 0, Stream::Arrivals);
        let mut c = substream(9, 3, 0, Stream::Triplets);
        let mut d = substream(9, 4, 0, Stream::Arrivals);
        let xa: u64 = a.random();
        assert_eq!(xa, b.random::<u64>());
        assert_ne!(xa, c.random::<u64>());
        assert_ne!(xa, d.random::<u64>());
    }

    #[test]
    fn no_arrivals_without_lambda() {
        let p = config_a().without_arrivals();
        let mut src = JobSource::new(&p, 1, 0, 0);
        assert!(src.next_gap().is_infinite());
    }
}
