//! Uniformly sampled, named time series.

use crate::scalar::Real;

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceMetadata {
    pub scenario: String,
    pub model: String,
    pub config_hash: String,
}

/// Rows of named channels sampled at strictly increasing times.
///
/// Built through [`TraceBuilder`]; read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    names: Vec<String>,
    t: Vec<T>,
    rows: Vec<Vec<T>>,
    metadata: TraceMetadata,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("row {row} has {got} values, expected {expected}")]
    Arity { row: usize, got: usize, expected: usize },
    #[error("sample time {t} does not exceed previous time {prev}")]
    NonIncreasing { t: f64, prev: f64 },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
}

impl<T: Real> Trace<T> {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn metadata(&self) -> &TraceMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel_index(&self, name: &str) -> Result<usize, TraceError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| TraceError::UnknownChannel(name.to_owned()))
    }

    /// Copy of one channel.
    pub fn channel(&self, name: &str) -> Result<Vec<T>, TraceError> {
        let i = self.channel_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Linear interpolation of every channel at `t`, clamped to the span.
    pub fn sample(&self, t: T) -> Vec<T> {
        let k = self.t.partition_point(|&s| s <= t);
        if k == 0 {
            return self.rows[0].clone();
        }
        if k == self.t.len() {
            return self.rows[k - 1].clone();
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        if t == t0 {
            return self.rows[k - 1].clone();
        }
        let w = (t - t0) / (t1 - t0);
        self.rows[k - 1]
            .iter()
            .zip(&self.rows[k])
            .map(|(&a, &b)| a + (b - a) * w)
            .collect()
    }

    /// Re-samples onto `t_k = t_0 + k·dt`, keeping the final time.
    pub fn resample(&self, dt: T) -> Self {
        let (Some(&t0), Some(&t1)) = (self.t.first(), self.t.last()) else {
            return self.clone();
        };
        let grid = uniform_grid(t0, t1, dt);
        let rows = grid.iter().map(|&t| self.sample(t)).collect();
        Self { names: self.names.clone(), t: grid, rows, metadata: self.metadata.clone() }
    }

    pub fn with_metadata(mut self, metadata: TraceMetadata) -> Self {
        self.metadata = metadata;
        self
    }
}

/// `t0, t0 + dt, …` up to `t1`, with `t1` appended unless the last grid
/// point is within `1e-9·dt` of it (in which case it is replaced by `t1`).
pub fn uniform_grid<T: Real>(t0: T, t1: T, dt: T) -> Vec<T> {
    assert!(dt > T::zero(), "grid spacing must be positive");
    let slack = dt * T::lit(1e-9);
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t0 + dt * T::from_usize(k).expect("grid index");
        if t >= t1 - slack {
            out.push(t1);
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

/// Accumulates rows, then freezes them into a [`Trace`].
#[derive(Debug, Clone)]
pub struct TraceBuilder<T> {
    inner: Trace<T>,
}

impl<T: Real> TraceBuilder<T> {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            inner: Trace {
                names: names.into_iter().map(Into::into).collect(),
                t: Vec::new(),
                rows: Vec::new(),
                metadata: TraceMetadata::default(),
            },
        }
    }

    pub fn push(&mut self, t: T, row: Vec<T>) -> Result<(), TraceError> {
        let expected = self.inner.names.len();
        if row.len() != expected {
            return Err(TraceError::Arity { row: self.inner.t.len(), got: row.len(), expected });
        }
        if let Some(&prev) = self.inner.t.last() {
            if !(t > prev) {
                return Err(TraceError::NonIncreasing { t: t.to_f64_lossy(), prev: prev.to_f64_lossy() });
            }
        }
        self.inner.t.push(t);
        self.inner.rows.push(row);
        Ok(())
    }

    pub fn finish(self, metadata: TraceMetadata) -> Trace<T> {
        self.inner.with_metadata(metadata)
    }
}
