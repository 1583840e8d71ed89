//! Exact-or-sampled evaluation of expectations.

use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::rng::{self, par_map, SeededRng};

/// Exact sums are used in `Auto` mode while the work estimate stays below this.
pub const EXACT_WORK_CAP: f64 = 1e9;

/// Monte Carlo work is split into this many independently seeded chunks, so
/// results do not depend on the thread count.
const CHUNKS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Auto,
    Exact,
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
}

/// Default sample count when `Auto` falls back to sampling.
pub const DEFAULT_SAMPLES: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub mode: Mode,
    pub threads: usize,
    /// Seed used when `Auto` has to sample.
    pub fallback_seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mode: Mode::Auto,
            threads: 1,
            fallback_seed: 0,
        }
    }
}

impl Options {
    pub fn exact() -> Self {
        Options {
            mode: Mode::Exact,
            ..Self::default()
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Options {
            mode: Mode::MonteCarlo { samples, seed },
            ..Self::default()
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    /// `None` means evaluate exactly; otherwise `(samples, seed)`.
    pub(crate) fn plan(&self, exact_work: f64) -> Option<(u64, u64)> {
        match self.mode {
            Mode::Exact => None,
            Mode::MonteCarlo { samples, seed } => Some((samples, seed)),
            Mode::Auto if exact_work <= EXACT_WORK_CAP => None,
            Mode::Auto => Some((DEFAULT_SAMPLES, self.fallback_seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactSum,
    MonteCarlo,
}

/// A real value with its provenance; exact sums carry zero standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    pub samples: u64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            method: Method::ExactSum,
            samples: 0,
            stderr: 0.0,
        }
    }
}

/// A complex value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub method: Method,
    pub samples: u64,
    pub stderr: f64,
}

impl ComplexEstimate {
    pub fn exact(value: Complex64) -> Self {
        ComplexEstimate {
            value,
            method: Method::ExactSum,
            samples: 0,
            stderr: 0.0,
        }
    }

    pub fn map_real(&self, f: impl Fn(Complex64) -> f64) -> Estimate {
        Estimate {
            value: f(self.value),
            method: self.method,
            samples: self.samples,
            stderr: self.stderr,
        }
    }
}

impl Serialize for ComplexEstimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ComplexEstimate", 4)?;
        st.serialize_field("value", &[self.value.re, self.value.im])?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("samples", &self.samples)?;
        st.serialize_field("stderr", &self.stderr)?;
        st.end()
    }
}

/// Sample mean of `draw` with its standard error, deterministic in `seed`.
pub fn monte_carlo<F>(samples: u64, seed: u64, threads: usize, draw: F) -> ComplexEstimate
where
    F: Fn(&mut SeededRng) -> Complex64 + Sync,
{
    let samples = samples.max(2);
    let chunks = CHUNKS.min(samples);
    let per = samples / chunks;
    let extra = samples % chunks;
    let parts = par_map(chunks as usize, threads, |c| {
        let c = c as u64;
        let count = per + u64::from(c < extra);
        let mut r = rng::stream(seed, c);
        let (mut sum, mut sq) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..count {
            let v = draw(&mut r);
            sum += v;
            sq += v.norm_sqr();
        }
        (sum, sq)
    });
    let n = samples as f64;
    let (sum, sq) = parts
        .into_iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(a, b), (s, q)| (a + s, b + q));
    let mean = sum / n;
    let var = ((sq / n - mean.norm_sqr()) * n / (n - 1.0)).max(0.0);
    ComplexEstimate {
        value: mean,
        method: Method::MonteCarlo,
        samples,
        stderr: (var / n).sqrt(),
    }
}
