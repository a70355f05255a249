//! Per-sensor ring buffers with windowed queries and summaries.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reading::{SensorKey, SensorReading};

/// 24 hours at one sample per second.
pub const DEFAULT_CAPACITY: usize = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown sensor {0}")]
    UnknownKey(SensorKey),
    #[error("no samples in window [{from_ms}, {to_ms}]")]
    EmptyWindow { from_ms: u64, to_ms: u64 },
    #[error("invalid query: {0}")]
    InvalidRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestOutcome {
    Stored,
    Duplicate,
    /// Older than the oldest retained sample; dropped.
    Stale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seq: u32,
    pub timestamp_ms: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub timestamp_ms: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub low: f64,
    pub high: f64,
    pub mean: f64,
    pub count: usize,
    pub latest: f64,
}

/// Inclusive millisecond time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    pub from_ms: u64,
    pub to_ms: u64,
}

impl TimeRange {
    pub fn new(from_ms: u64, to_ms: u64) -> Result<Self, StoreError> {
        if from_ms > to_ms {
            return Err(StoreError::InvalidRange(format!("from {from_ms} > to {to_ms}")));
        }
        Ok(TimeRange { from_ms, to_ms })
    }

    pub fn all() -> Self {
        TimeRange {
            from_ms: 0,
            to_ms: u64::MAX,
        }
    }

    fn contains(&self, ts: u64) -> bool {
        (self.from_ms..=self.to_ms).contains(&ts)
    }
}

#[derive(Debug)]
struct RingBuffer {
    capacity: usize,
    samples: VecDeque<Sample>,
    seqs: HashSet<u32>,
}

impl RingBuffer {
    fn new(capacity: usize) -> Self {
        RingBuffer {
            capacity,
            samples: VecDeque::new(),
            seqs: HashSet::new(),
        }
    }

    fn insert(&mut self, sample: Sample) -> IngestOutcome {
        if self.seqs.contains(&sample.seq) {
            return IngestOutcome::Duplicate;
        }
        if let Some(oldest) = self.samples.front() {
            if sample.timestamp_ms < oldest.timestamp_ms {
                return IngestOutcome::Stale;
            }
        }
        // Samples stay sorted by timestamp; equal timestamps keep arrival order.
        let pos = self
            .samples
            .partition_point(|s| s.timestamp_ms <= sample.timestamp_ms);
        self.samples.insert(pos, sample);
        self.seqs.insert(sample.seq);
        while self.samples.len() > self.capacity {
            if let Some(evicted) = self.samples.pop_front() {
                self.seqs.remove(&evicted.seq);
            }
        }
        IngestOutcome::Stored
    }

    fn window(&self, range: TimeRange) -> impl Iterator<Item = &Sample> {
        let start = self.samples.partition_point(|s| s.timestamp_ms < range.from_ms);
        self.samples
            .range(start..)
            .take_while(move |s| range.contains(s.timestamp_ms))
    }
}

/// Thread-safe time-series store keyed by sensor.
///
/// Writers take the map write lock for the duration of a single insert, so
/// readers always observe whole samples.
#[derive(Debug)]
pub struct Store {
    capacity: usize,
    buffers: RwLock<BTreeMap<SensorKey, RingBuffer>>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new(DEFAULT_CAPACITY)
    }
}

impl Store {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        Store {
            capacity,
            buffers: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn ingest(&self, reading: &SensorReading) -> IngestOutcome {
        let sample = Sample {
            seq: reading.seq,
            timestamp_ms: reading.timestamp_ms,
            value: reading.value,
        };
        let mut buffers = self.buffers.write().unwrap_or_else(|e| e.into_inner());
        buffers
            .entry(reading.key())
            .or_insert_with(|| RingBuffer::new(self.capacity))
            .insert(sample)
    }

    pub fn keys(&self) -> Vec<SensorKey> {
        self.read().keys().cloned().collect()
    }

    pub fn len(&self, key: &SensorKey) -> Option<usize> {
        self.read().get(key).map(|b| b.samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.read().is_empty()
    }

    /// Most recently timestamped sample of every known sensor, in key order.
    pub fn latest_all(&self) -> Vec<(SensorKey, Sample)> {
        self.read()
            .iter()
            .filter_map(|(k, b)| b.samples.back().map(|s| (k.clone(), *s)))
            .collect()
    }

    pub fn latest(&self, key: &SensorKey) -> Option<Sample> {
        self.read().get(key).and_then(|b| b.samples.back().copied())
    }

    pub fn query_series(
        &self,
        key: &SensorKey,
        range: TimeRange,
        max_points: usize,
    ) -> Result<Vec<SeriesPoint>, StoreError> {
        if max_points < 2 {
            return Err(StoreError::InvalidRange(format!("max_points {max_points} < 2")));
        }
        let buffers = self.read();
        let buffer = buffers
            .get(key)
            .ok_or_else(|| StoreError::UnknownKey(key.clone()))?;
        let points: Vec<SeriesPoint> = buffer
            .window(range)
            .map(|s| SeriesPoint {
                timestamp_ms: s.timestamp_ms,
                value: s.value,
            })
            .collect();
        drop(buffers);
        Ok(downsample(&points, max_points))
    }

    pub fn summarize(&self, key: &SensorKey, range: TimeRange) -> Result<SeriesSummary, StoreError> {
        let buffers = self.read();
        let buffer = buffers
            .get(key)
            .ok_or_else(|| StoreError::UnknownKey(key.clone()))?;
        summarize_values(buffer.window(range).map(|s| s.value)).ok_or(StoreError::EmptyWindow {
            from_ms: range.from_ms,
            to_ms: range.to_ms,
        })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, BTreeMap<SensorKey, RingBuffer>> {
        self.buffers.read().unwrap_or_else(|e| e.into_inner())
    }
}

/// Low/high/mean/count/latest over values in order; `None` when empty.
pub fn summarize_values(values: impl IntoIterator<Item = f64>) -> Option<SeriesSummary> {
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    let mut latest = f64::NAN;
    for v in values {
        count += 1;
        sum += v;
        low = low.min(v);
        high = high.max(v);
        latest = v;
    }
    if count == 0 {
        return None;
    }
    // Rounding in the sum can push the mean a hair outside [low, high].
    let mean = (sum / count as f64).clamp(low, high);
    Some(SeriesSummary {
        low,
        high,
        mean,
        count,
        latest,
    })
}

/// Bucket-mean downsampling over equal time buckets spanning the first to the
/// last timestamp. Returns the input unchanged when it already fits.
pub fn downsample(points: &[SeriesPoint], max_points: usize) -> Vec<SeriesPoint> {
    if points.len() <= max_points {
        return points.to_vec();
    }
    let first = points[0].timestamp_ms;
    let span = (points[points.len() - 1].timestamp_ms - first) as u128 + 1;
    let buckets = max_points as u128;
    let mut sums = vec![(0u128, 0.0f64, 0usize); max_points];
    for p in points {
        let idx = ((p.timestamp_ms - first) as u128 * buckets / span) as usize;
        let slot = &mut sums[idx];
        slot.0 += p.timestamp_ms as u128;
        slot.1 += p.value;
        slot.2 += 1;
    }
    sums.into_iter()
        .filter(|(_, _, n)| *n > 0)
        .map(|(ts, v, n)| SeriesPoint {
            timestamp_ms: (ts / n as u128) as u64,
            value: v / n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reading::{NodeId, SensorType};
    use proptest::prelude::*;

    fn key() -> SensorKey {
        SensorKey::new(NodeId::new("lab-a").unwrap(), SensorType::Temperature)
    }

    fn reading(seq: u32, ts: u64, v: f64) -> SensorReading {
        SensorReading::new(NodeId::new("lab-a").unwrap(), SensorType::Temperature, seq, ts, v)
            .unwrap()
    }

    #[test]
    fn stores_and_detects_duplicates() {
        let store = Store::new(10);
        assert_eq!(store.ingest(&reading(0, 1000, 1.0)), IngestOutcome::Stored);
        assert_eq!(store.len(&key()), Some(1));
        assert_eq!(store.ingest(&reading(0, 1000, 1.0)), IngestOutcome::Duplicate);
        assert_eq!(store.len(&key()), Some(1));
    }

    #[test]
    fn ring_keeps_newest() {
        let store = Store::new(3);
        for i in 0..4 {
            store.ingest(&reading(i, 1000 * i as u64, i as f64));
        }
        let series = store.query_series(&key(), TimeRange::all(), 10).unwrap();
        let values: Vec<f64> = series.iter().map(|p| p.value).collect();
        assert_eq!(values, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn out_of_order_inserted_sorted_or_dropped() {
        let store = Store::new(3);
        store.ingest(&reading(0, 1000, 0.0));
        store.ingest(&reading(2, 3000, 2.0));
        assert_eq!(store.ingest(&reading(1, 2000, 1.0)), IngestOutcome::Stored);
        let ts: Vec<u64> = store
            .query_series(&key(), TimeRange::all(), 10)
            .unwrap()
            .iter()
            .map(|p| p.timestamp_ms)
            .collect();
        assert_eq!(ts, [1000, 2000, 3000]);
        assert_eq!(store.ingest(&reading(9, 500, 9.0)), IngestOutcome::Stale);
        assert_eq!(store.len(&key()), Some(3));
    }

    #[test]
    fn query_edge_cases() {
        let store = Store::new(100);
        assert_eq!(
            store.query_series(&key(), TimeRange::all(), 10),
            Err(StoreError::UnknownKey(key()))
        );
        for i in 0..10 {
            store.ingest(&reading(i, 1000 * i as u64, i as f64));
        }
        let series = store.query_series(&key(), TimeRange::all(), 10).unwrap();
        assert_eq!(series.len(), 10);
        assert_eq!(series[3], SeriesPoint { timestamp_ms: 3000, value: 3.0 });
        let empty = store
            .query_series(&key(), TimeRange::new(20_000, 30_000).unwrap(), 10)
            .unwrap();
        assert!(empty.is_empty());
        assert!(store.query_series(&key(), TimeRange::all(), 1).is_err());
        assert!(TimeRange::new(5, 4).is_err());
    }

    #[test]
    fn bucket_means_of_one_to_hundred() {
        let store = Store::new(1000);
        for i in 0..100u32 {
            store.ingest(&reading(i, 1_700_000_000_000 + 1000 * i as u64, (i + 1) as f64));
        }
        let series = store.query_series(&key(), TimeRange::all(), 10).unwrap();
        // Brute force: consecutive groups of ten values.
        let expected: Vec<f64> = (0..10)
            .map(|b| (1..=100).skip(b * 10).take(10).map(f64::from).sum::<f64>() / 10.0)
            .collect();
        assert_eq!(expected[0], 5.5);
        assert_eq!(expected[9], 95.5);
        let got: Vec<f64> = series.iter().map(|p| p.value).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn summaries() {
        let store = Store::new(100);
        for (i, v) in [10.0, 20.0, 30.0].into_iter().enumerate() {
            store.ingest(&reading(i as u32, i as u64, v));
        }
        let s = store.summarize(&key(), TimeRange::all()).unwrap();
        assert_eq!(
            s,
            SeriesSummary { low: 10.0, high: 30.0, mean: 20.0, count: 3, latest: 30.0 }
        );
        let single = store.summarize(&key(), TimeRange::new(1, 1).unwrap()).unwrap();
        assert_eq!((single.low, single.high, single.mean, single.latest), (20.0, 20.0, 20.0, 20.0));
        assert!(matches!(
            store.summarize(&key(), TimeRange::new(50, 60).unwrap()),
            Err(StoreError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn summary_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let store = Store::new(1000);
        let values: Vec<f64> = (0..500).map(|_| rng.random_range(-1000.0..1000.0)).collect();
        for (i, v) in values.iter().enumerate() {
            store.ingest(&reading(i as u32, i as u64 * 10, *v));
        }
        let s = store.summarize(&key(), TimeRange::all()).unwrap();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((s.low - min).abs() < 1e-9);
        assert!((s.high - max).abs() < 1e-9);
        assert!((s.mean - mean).abs() < 1e-9);
        assert_eq!(s.count, 500);
        assert_eq!(s.latest, values[499]);
    }

    proptest! {
        #[test]
        fn ring_length_bounded_and_newest_retained(
            cap in 1usize..20,
            n in 0u32..60,
        ) {
            let store = Store::new(cap);
            for i in 0..n {
                store.ingest(&reading(i, i as u64, i as f64));
                prop_assert!(store.len(&key()).unwrap() <= cap);
            }
            if n > 0 {
                let series = store.query_series(&key(), TimeRange::all(), cap.max(2)).unwrap();
                let kept: Vec<u32> = series.iter().map(|p| p.value as u32).collect();
                let expected: Vec<u32> = (n.saturating_sub(cap as u32)..n).collect();
                prop_assert_eq!(kept, expected);
            }
        }

        #[test]
        fn summary_ordering(values in proptest::collection::vec(-1e6f64..1e6, 1..200), lo in 0u64..200, width in 0u64..200) {
            let store = Store::new(1000);
            for (i, v) in values.iter().enumerate() {
                store.ingest(&reading(i as u32, i as u64, *v));
            }
            let range = TimeRange::new(lo, lo + width).unwrap();
            let in_range = (0..values.len() as u64).filter(|t| range.contains(*t)).count();
            match store.summarize(&key(), range) {
                Ok(s) => {
                    prop_assert!(s.low <= s.mean && s.mean <= s.high);
                    prop_assert_eq!(s.count, in_range);
                }
                Err(StoreError::EmptyWindow { .. }) => prop_assert_eq!(in_range, 0),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn equal_buckets_preserve_mean(
            per_bucket in 1usize..8,
            buckets in 2usize..12,
            values in proptest::collection::vec(-1e3f64..1e3, 96),
        ) {
            let n = per_bucket * buckets;
            prop_assume!(n <= values.len() && n > buckets);
            let points: Vec<SeriesPoint> = (0..n)
                .map(|i| SeriesPoint { timestamp_ms: i as u64, value: values[i] })
                .collect();
            let down = downsample(&points, buckets);
            prop_assert_eq!(down.len(), buckets);
            let global = values[..n].iter().sum::<f64>() / n as f64;
            let down_mean = down.iter().map(|p| p.value).sum::<f64>() / buckets as f64;
            prop_assert!((global - down_mean).abs() < 1e-9);
        }
    }
}
