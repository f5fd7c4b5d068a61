//! Error-bounded linear spline over the CDF, built with the greedy
//! spline-corridor method in a single pass.
//!
//! The builder keeps the last emitted knot and a slope interval `[lo, hi]`:
//! every CDF point seen since that knot must stay within `epsilon` positions
//! of the line, which constrains the slope of the next segment. When the
//! slope to the current point falls outside the interval, the previous point
//! becomes a knot and the corridor restarts from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::{CdfPoint, Key, KeyWidth};

/// A knot of the spline. Always one of the CDF points.
pub type SplinePoint = CdfPoint;

/// Bytes occupied by one stored spline point (key + position).
pub const SPLINE_POINT_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    points: Vec<SplinePoint>,
    epsilon: u64,
    num_keys: u64,
    width: KeyWidth,
}

/// Streaming greedy corridor. Feed CDF points in key order with
/// [`push`](GreedySplineBuilder::push); every returned point is a knot.
#[derive(Debug, Clone)]
pub struct GreedySplineBuilder {
    epsilon: f64,
    base: Option<SplinePoint>,
    prev: Option<SplinePoint>,
    slope_lo: f64,
    slope_hi: f64,
}

impl GreedySplineBuilder {
    pub fn new(epsilon: u64) -> Self {
        GreedySplineBuilder {
            epsilon: epsilon as f64,
            base: None,
            prev: None,
            slope_lo: f64::NEG_INFINITY,
            slope_hi: f64::INFINITY,
        }
    }

    #[inline]
    fn slope(from: &SplinePoint, key: Key, position: f64) -> f64 {
        (position - from.position as f64) / (key - from.key) as f64
    }

    /// Adds the next CDF point. Returns a knot when one is emitted; the very
    /// first point is always emitted immediately.
    #[inline]
    pub fn push(&mut self, pt: CdfPoint) -> Option<SplinePoint> {
        let Some(base) = self.base else {
            self.base = Some(pt);
            return Some(pt);
        };
        let y = pt.position as f64;
        let lower = Self::slope(&base, pt.key, y - self.epsilon);
        let upper = Self::slope(&base, pt.key, y + self.epsilon);
        let Some(prev) = self.prev else {
            self.prev = Some(pt);
            self.slope_lo = lower;
            self.slope_hi = upper;
            return None;
        };

        let s = Self::slope(&base, pt.key, y);
        if s < self.slope_lo || s > self.slope_hi {
            self.base = Some(prev);
            self.slope_lo = Self::slope(&prev, pt.key, y - self.epsilon);
            self.slope_hi = Self::slope(&prev, pt.key, y + self.epsilon);
            self.prev = Some(pt);
            return Some(prev);
        }
        self.slope_lo = self.slope_lo.max(lower);
        self.slope_hi = self.slope_hi.min(upper);
        self.prev = Some(pt);
        None
    }

    /// Emits the final knot (the last CDF point), unless it was already the
    /// base knot.
    pub fn finish(self) -> Option<SplinePoint> {
        self.prev
    }
}

/// Builds an epsilon-bounded spline from a stream of CDF points.
pub fn build_spline(
    cdf: impl IntoIterator<Item = CdfPoint>,
    epsilon: u64,
    num_keys: u64,
    width: KeyWidth,
) -> Result<SplineModel> {
    if epsilon == 0 {
        return Err(Error::InvalidParameter("epsilon must be >= 1".into()));
    }
    let mut builder = GreedySplineBuilder::new(epsilon);
    let mut points = Vec::new();
    let mut last: Option<CdfPoint> = None;
    for (i, pt) in cdf.into_iter().enumerate() {
        width.check(pt.key)?;
        if let Some(l) = last {
            if pt.key <= l.key || pt.position <= l.position {
                return Err(Error::Unsorted { position: i });
            }
        }
        last = Some(pt);
        points.extend(builder.push(pt));
    }
    points.extend(builder.finish());
    SplineModel::from_points(points, epsilon, num_keys, width)
}

impl SplineModel {
    /// Assembles a model from already selected knots.
    pub fn from_points(
        points: Vec<SplinePoint>,
        epsilon: u64,
        num_keys: u64,
        width: KeyWidth,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if epsilon == 0 {
            return Err(Error::InvalidParameter("epsilon must be >= 1".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].key <= w[0].key || w[1].position <= w[0].position {
                return Err(Error::Unsorted { position: i + 1 });
            }
        }
        if points.last().unwrap().position >= num_keys.max(1) {
            return Err(Error::InvalidParameter(
                "spline position beyond the number of keys".into(),
            ));
        }
        Ok(SplineModel {
            points,
            epsilon,
            num_keys,
            width,
        })
    }

    #[inline]
    pub fn points(&self) -> &[SplinePoint] {
        &self.points
    }

    pub fn keys(&self) -> Vec<Key> {
        self.points.iter().map(|p| p.key).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn epsilon(&self) -> u64 {
        self.epsilon
    }

    #[inline]
    pub fn num_keys(&self) -> u64 {
        self.num_keys
    }

    #[inline]
    pub fn width(&self) -> KeyWidth {
        self.width
    }

    pub fn size_bytes(&self) -> usize {
        self.points.len() * SPLINE_POINT_BYTES
    }

    /// Number of segments a lookup can land in (at least one, even for a
    /// single-point model).
    #[inline]
    fn last_segment(&self) -> usize {
        self.points.len().saturating_sub(2)
    }

    /// Estimated position of `key` inside segment `segment`, rounded to the
    /// nearest integer and clamped to the segment's endpoints.
    pub fn interpolate(&self, segment: usize, key: Key) -> Result<u64> {
        if segment > self.last_segment() {
            return Err(Error::SegmentOutOfRange {
                index: segment,
                len: self.points.len(),
            });
        }
        Ok(self.interpolate_unchecked(segment, key))
    }

    #[inline]
    pub(crate) fn interpolate_unchecked(&self, segment: usize, key: Key) -> u64 {
        let a = self.points[segment];
        let Some(b) = self.points.get(segment + 1) else {
            return a.position;
        };
        if key <= a.key {
            return a.position;
        }
        if key >= b.key {
            return b.position;
        }
        let dx = (key - a.key) as f64;
        let span = (b.key - a.key) as f64;
        let dy = (b.position - a.position) as f64;
        let est = (a.position as f64 + dx * dy / span).round() as u64;
        est.clamp(a.position, b.position)
    }

    /// Segment index for `key`: the last knot with key `<= key` inside
    /// `[range_start, range_start + range_len)`, or `range_start - 1` when
    /// every knot of the range is larger. Clamped to a valid segment.
    #[inline]
    pub fn segment_search(&self, range_start: usize, range_len: usize, key: Key) -> usize {
        self.segment_search_counted(range_start, range_len, key).0
    }

    /// Like [`segment_search`](Self::segment_search), also returning the
    /// number of binary-search halving steps taken.
    #[inline]
    pub fn segment_search_counted(
        &self,
        range_start: usize,
        range_len: usize,
        key: Key,
    ) -> (usize, u32) {
        let n = self.points.len();
        let start = range_start.min(n - 1);
        let mut size = range_len.min(n - start);
        let mut steps = 0;
        let mut lo = start;
        while size > 1 {
            let half = size / 2;
            if self.points[lo + half].key <= key {
                lo += half;
            }
            size -= half;
            steps += 1;
        }
        if self.points[lo].key > key {
            lo = lo.saturating_sub(1);
        }
        (lo.min(self.last_segment()), steps)
    }

    /// Global segment search without a subindex.
    #[inline]
    pub fn segment_of(&self, key: Key) -> usize {
        self.segment_search(0, self.points.len(), key)
    }

    /// Spline prediction for `key` using a full binary search over the knots.
    pub fn predict(&self, key: Key) -> u64 {
        self.interpolate_unchecked(self.segment_of(key), key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::cdf_points;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(key: Key, position: u64) -> CdfPoint {
        CdfPoint { key, position }
    }

    fn spline_for(data: &[Key], eps: u64) -> SplineModel {
        build_spline(
            cdf_points(data).map(|(p, _)| p),
            eps,
            data.len() as u64,
            KeyWidth::FULL,
        )
        .unwrap()
    }

    fn max_error(model: &SplineModel, data: &[Key]) -> u64 {
        cdf_points(data)
            .map(|(p, _)| model.predict(p.key).abs_diff(p.position))
            .max()
            .unwrap()
    }

    #[test]
    fn linear_cdf_needs_two_points() {
        let data: Vec<Key> = (0..1000).collect();
        let model = spline_for(&data, 4);
        assert_eq!(model.len(), 2);
        assert_eq!(model.points()[0], pt(0, 0));
        assert_eq!(model.points()[1], pt(999, 999));
    }

    #[test]
    fn affine_cdf_needs_two_points() {
        let data: Vec<Key> = (0..5000).map(|i| 17 + 31 * i).collect();
        assert_eq!(spline_for(&data, 1).len(), 2);
    }

    #[test]
    fn single_point() {
        let model = spline_for(&[42], 3);
        assert_eq!(model.len(), 1);
        assert_eq!(model.interpolate(0, 42).unwrap(), 0);
        assert_eq!(model.interpolate(0, 7).unwrap(), 0);
        assert_eq!(model.predict(1000), 0);
    }

    #[test]
    fn empty_and_bad_input() {
        let err = build_spline(std::iter::empty(), 4, 0, KeyWidth::FULL).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
        assert!(build_spline([pt(1, 0)], 0, 1, KeyWidth::FULL).is_err());
        assert!(build_spline([pt(5, 0), pt(3, 1)], 2, 2, KeyWidth::FULL).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let model =
            SplineModel::from_points(vec![pt(0, 0), pt(8, 4)], 1, 5, KeyWidth::FULL).unwrap();
        assert_eq!(model.interpolate(0, 0).unwrap(), 0);
        assert_eq!(model.interpolate(0, 8).unwrap(), 4);
        assert_eq!(model.interpolate(0, 4).unwrap(), 2);
        assert!(model.interpolate(1, 4).is_err());
    }

    #[test]
    fn segment_search_on_example_keys() {
        let keys = [0u64, 5, 6, 7, 8, 10, 11, 15];
        let points = keys
            .iter()
            .enumerate()
            .map(|(i, &k)| pt(k, i as u64))
            .collect();
        let model = SplineModel::from_points(points, 1, 8, KeyWidth::new(4).unwrap()).unwrap();
        assert_eq!(model.segment_search(0, 8, 6), 2);
        assert_eq!(model.segment_search(0, 8, 0), 0);
        // Above the last knot clamps to the last segment.
        assert_eq!(model.segment_search(0, 8, 15), 6);
        // Range whose first knot is already too large falls back one slot.
        assert_eq!(model.segment_search(4, 4, 7), 3);
    }

    #[test]
    fn segment_search_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..300);
            let mut keys: Vec<Key> = (0..n).map(|_| rng.random_range(0..10_000)).collect();
            keys.sort_unstable();
            keys.dedup();
            let points: Vec<_> = keys
                .iter()
                .enumerate()
                .map(|(i, &k)| pt(k, i as u64))
                .collect();
            let model =
                SplineModel::from_points(points, 1, keys.len() as u64, KeyWidth::FULL).unwrap();
            let last_segment = keys.len().saturating_sub(2);
            for _ in 0..50 {
                let k = rng.random_range(0..10_100);
                let scan = keys
                    .iter()
                    .rposition(|&s| s <= k)
                    .unwrap_or(0)
                    .min(last_segment);
                assert_eq!(model.segment_of(k), scan);
            }
        }
    }

    #[test]
    fn lognormal_keys_respect_epsilon() {
        use rand_distr::{Distribution, LogNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dist = LogNormal::new(0.0, 2.0).unwrap();
        let mut data: Vec<Key> = (0..10_000)
            .map(|_| (dist.sample(&mut rng) * 1e9) as u64)
            .collect();
        data.sort_unstable();
        let model = spline_for(&data, 32);
        assert!(max_error(&model, &data) <= 32);
        assert!(model.len() <= data.len());
    }

    #[test]
    fn duplicates_bound_first_occurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data: Vec<Key> = (0..20_000).map(|_| rng.random_range(0..3_000)).collect();
        data.sort_unstable();
        for eps in [1, 2, 8, 64] {
            let model = spline_for(&data, eps);
            assert!(max_error(&model, &data) <= eps, "eps = {eps}");
        }
    }

    #[test]
    fn interpolation_is_monotone_in_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut data: Vec<Key> = (0..5000).map(|_| rng.random()).collect();
        data.sort_unstable();
        let model = spline_for(&data, 4);
        for seg in 0..model.len() - 1 {
            let (a, b) = (model.points()[seg], model.points()[seg + 1]);
            let mut last = 0;
            for i in 0..=64u64 {
                let k = a.key + ((b.key - a.key) as u128 * i as u128 / 64) as u64;
                let p = model.interpolate(seg, k).unwrap();
                assert!(p >= last);
                last = p;
            }
        }
    }
}
