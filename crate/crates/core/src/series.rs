use std::fmt;

/// Which layer produced a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Abm,
    Analytic,
    Ode,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Abm => "abm",
            Source::Analytic => "analytic",
            Source::Ode => "ode",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMeta {
    pub p: f64,
    pub kappa: f64,
    pub replicate: u64,
    /// Free-form mode tag: ODE mode, ABM sampling mode, or `closed-form`.
    pub mode: String,
}

/// Observations `(t, γ)` of the mean active degree of an opinion-A node.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub source: Source,
    pub meta: SeriesMeta,
    samples: Vec<(f64, f64)>,
}

impl TimeSeries {
    pub fn new(source: Source, meta: SeriesMeta) -> Self {
        TimeSeries { source, meta, samples: Vec::new() }
    }

    /// Appends a sample. Times must be strictly increasing and `gamma`
    /// non-negative; violations are programming errors.
    pub fn push(&mut self, t: f64, gamma: f64) {
        if let Some(&(last, _)) = self.samples.last() {
            assert!(t > last, "sample times must increase ({t} after {last})");
        }
        assert!(gamma >= 0.0, "negative gamma {gamma} at t = {t}");
        self.samples.push((t, gamma));
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        self.samples.last().copied()
    }

    /// γ at the latest sample with time `<= t`.
    pub fn value_at_or_before(&self, t: f64) -> Option<f64> {
        let idx = self.samples.partition_point(|&(s, _)| s <= t + 1e-9);
        idx.checked_sub(1).map(|i| self.samples[i].1)
    }
}

/// Sample times `0, h, 2h, ...` up to and including `t_end`.
pub fn sample_times(t_end: f64, interval: f64) -> Vec<f64> {
    let count = (t_end / interval + 1e-9).floor() as usize;
    (0..=count).map(|i| i as f64 * interval).collect()
}
