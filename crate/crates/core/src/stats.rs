//! Monthly default and rejection series with trailing moving statistics.

use alloc::vec::Vec;

use crate::dataset::YearMonth;
use crate::math;

/// Trailing window length in months: month `t` averages months `t-5..=t`.
pub const MOVING_WINDOW_MONTHS: i32 = 6;

/// Raw counts for one calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonthCounts {
    pub month: YearMonth,
    pub accepted: usize,
    /// Accepted loans whose status maps to a default.
    pub defaulted: usize,
    pub rejected: usize,
}

impl MonthCounts {
    pub fn requested(&self) -> usize {
        self.accepted + self.rejected
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesPoint {
    pub month: YearMonth,
    pub value: f64,
    pub moving_average: f64,
    /// Population standard deviation over the same window.
    pub moving_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonthlyStats {
    pub months: Vec<MonthCounts>,
    /// Defaulted over accepted, for months with accepted loans.
    pub default_fraction: Vec<SeriesPoint>,
    /// Rejected over requested, for months with requests.
    pub rejected_fraction: Vec<SeriesPoint>,
    pub total_requested: Vec<SeriesPoint>,
}

/// Moving mean and population std over months `t - window + 1 ..= t` that have data.
/// `series` must be sorted by month with no duplicates.
pub fn trailing_moving(series: &[(YearMonth, f64)], window: i32) -> Vec<SeriesPoint> {
    let mut out = Vec::with_capacity(series.len());
    let mut start = 0;
    for (i, &(month, value)) in series.iter().enumerate() {
        while month.months_since(series[start].0) >= window {
            start += 1;
        }
        let win = &series[start..=i];
        let n = win.len() as f64;
        let mean = win.iter().map(|p| p.1).sum::<f64>() / n;
        let var = win.iter().map(|p| (p.1 - mean) * (p.1 - mean)).sum::<f64>() / n;
        out.push(SeriesPoint { month, value, moving_average: mean, moving_std: math::sqrt(var) });
    }
    out
}

/// Builds the three series from per-month counts. Counts are sorted by month first.
pub fn monthly_stats(counts: &[MonthCounts]) -> MonthlyStats {
    let mut months = counts.to_vec();
    months.sort_by_key(|m| m.month);
    let default: Vec<(YearMonth, f64)> = months
        .iter()
        .filter(|m| m.accepted > 0)
        .map(|m| (m.month, m.defaulted as f64 / m.accepted as f64))
        .collect();
    let rejected: Vec<(YearMonth, f64)> = months
        .iter()
        .filter(|m| m.requested() > 0)
        .map(|m| (m.month, m.rejected as f64 / m.requested() as f64))
        .collect();
    let total: Vec<(YearMonth, f64)> = months.iter().map(|m| (m.month, m.requested() as f64)).collect();
    MonthlyStats {
        default_fraction: trailing_moving(&default, MOVING_WINDOW_MONTHS),
        rejected_fraction: trailing_moving(&rejected, MOVING_WINDOW_MONTHS),
        total_requested: trailing_moving(&total, MOVING_WINDOW_MONTHS),
        months,
    }
}

/// Minimum relative drop of the final moving average below the typical level.
const CUTOFF_MIN_DROP: f64 = 0.4;

/// Advisory cutoff for a sustained trailing decline in the default fraction.
///
/// Let `typical` be the median moving average and `last` the final one. If
/// `last <= (1 - 0.4) * typical`, the suggestion is the last month whose moving
/// average is still within a quarter of the drop from `typical`. Needs at least
/// 12 months of data; `None` when no decline qualifies.
pub fn suggest_cutoff(default_fraction: &[SeriesPoint]) -> Option<YearMonth> {
    if default_fraction.len() < 12 {
        return None;
    }
    let mut sorted: Vec<f64> = default_fraction.iter().map(|p| p.moving_average).collect();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let typical = if sorted.len().is_multiple_of(2) { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] };
    let last = default_fraction.last()?.moving_average;
    if !(typical > 0.0) || last > (1.0 - CUTOFF_MIN_DROP) * typical {
        return None;
    }
    let level = typical - 0.25 * (typical - last);
    default_fraction.iter().rev().find(|p| p.moving_average >= level).map(|p| p.month)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ym(y: i32, m: u8) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    #[test]
    fn constant_series_has_zero_std() {
        let s: Vec<_> = (0..20).map(|i| (ym(2010, 1).add_months(i), 0.2)).collect();
        for p in trailing_moving(&s, 6) {
            assert!((p.moving_average - 0.2).abs() < 1e-15);
            assert!(p.moving_std < 1e-15);
        }
    }

    #[test]
    fn single_month_average_is_raw_value() {
        let p = trailing_moving(&[(ym(2012, 3), 0.37)], 6);
        assert_eq!(p[0].moving_average, 0.37);
        assert_eq!(p[0].moving_std, 0.0);
    }

    #[test]
    fn window_is_trailing_and_clipped() {
        let s: Vec<_> = (0..8).map(|i| (ym(2010, 1).add_months(i), i as f64)).collect();
        let p = trailing_moving(&s, 6);
        assert_eq!(p[0].moving_average, 0.0);
        assert_eq!(p[2].moving_average, 1.0);
        assert_eq!(p[5].moving_average, 2.5);
        assert_eq!(p[7].moving_average, 4.5);
    }

    #[test]
    fn gaps_shrink_the_window() {
        let s = vec![(ym(2010, 1), 1.0), (ym(2010, 5), 3.0), (ym(2010, 8), 5.0)];
        let p = trailing_moving(&s, 6);
        assert_eq!(p[1].moving_average, 2.0);
        assert_eq!(p[2].moving_average, 4.0);
    }

    #[test]
    fn requested_is_accepted_plus_rejected() {
        let counts = vec![
            MonthCounts { month: ym(2011, 2), accepted: 10, defaulted: 2, rejected: 90 },
            MonthCounts { month: ym(2011, 1), accepted: 0, defaulted: 0, rejected: 5 },
        ];
        let st = monthly_stats(&counts);
        assert_eq!(st.months[0].month, ym(2011, 1));
        assert_eq!(st.default_fraction.len(), 1);
        assert_eq!(st.default_fraction[0].value, 0.2);
        assert_eq!(st.rejected_fraction[0].value, 1.0);
        assert_eq!(st.rejected_fraction[1].value, 0.9);
        assert_eq!(st.total_requested[1].value, 100.0);
    }

    #[test]
    fn cutoff_found_in_declining_tail() {
        let mut s = Vec::new();
        for i in 0..48 {
            let v = if i < 36 { 0.2 + 0.01 * ((i % 3) as f64 - 1.0) } else { 0.2 * (1.0 - (i - 35) as f64 / 12.0) };
            s.push((ym(2012, 1).add_months(i), v));
        }
        let p = trailing_moving(&s, 6);
        let cut = suggest_cutoff(&p).unwrap();
        assert!(cut >= ym(2015, 1) && cut <= ym(2015, 12), "{cut}");
    }

    #[test]
    fn flat_series_has_no_cutoff() {
        let s: Vec<_> = (0..40).map(|i| (ym(2010, 1).add_months(i), 0.15)).collect();
        assert_eq!(suggest_cutoff(&trailing_moving(&s, 6)), None);
    }
}
