//! Hourly acquisition grid with February 29 removed.

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
pub const DAYS_PER_YEAR: usize = 365;
pub const HOURS_PER_YEAR: usize = HOURS_PER_DAY * DAYS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LeapDayPolicy {
    #[default]
    DropFeb29,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_date: NaiveDate,
    pub n_years: u32,
    #[serde(default)]
    pub leap_day_policy: LeapDayPolicy,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            n_years: 3,
            leap_day_policy: LeapDayPolicy::DropFeb29,
        }
    }
}

/// Ordered hourly timestamps. Every year of the grid has exactly 8760 hours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeGrid {
    spec: GridSpec,
    days: Vec<NaiveDate>,
}

fn is_feb29(d: NaiveDate) -> bool {
    d.month() == 2 && d.day() == 29
}

impl TimeGrid {
    pub fn build(start: NaiveDate, n_years: i64) -> Result<Self> {
        if n_years < 1 {
            return Err(Error::param("n_years", format!("must be ≥ 1, got {n_years}")));
        }
        let spec = GridSpec {
            start_date: start,
            n_years: n_years as u32,
            leap_day_policy: LeapDayPolicy::DropFeb29,
        };
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        if spec.n_years < 1 {
            return Err(Error::param("n_years", "must be ≥ 1"));
        }
        let n_days = spec.n_years as usize * DAYS_PER_YEAR;
        let mut days = Vec::with_capacity(n_days);
        let mut d = spec.start_date;
        while days.len() < n_days {
            if !is_feb29(d) {
                days.push(d);
            }
            d = d.succ_opt().ok_or_else(|| Error::param("start_date", "calendar overflow"))?;
        }
        Ok(Self {
            spec: spec.clone(),
            days,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.days.len() * HOURS_PER_DAY
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> Result<NaiveDateTime> {
        let day = self.days.get(index / HOURS_PER_DAY).ok_or(Error::IndexOutOfRange {
            index,
            len: self.len(),
        })?;
        let hour = (index % HOURS_PER_DAY) as u32;
        Ok(day.and_time(NaiveTime::from_hms_opt(hour, 0, 0).unwrap()))
    }

    /// Inverse of [`TimeGrid::timestamp`]; `None` for off-grid instants,
    /// including every hour of February 29.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        if ts.time().minute() != 0 || ts.time().second() != 0 || ts.time().nanosecond() != 0 {
            return None;
        }
        let day = self.days.binary_search(&ts.date()).ok()?;
        Some(day * HOURS_PER_DAY + ts.time().hour() as usize)
    }

    /// Index of 00:00 on `date`, or of the first grid day after it.
    pub fn index_at_or_after(&self, date: NaiveDate) -> Option<usize> {
        let day = match self.days.binary_search(&date) {
            Ok(d) | Err(d) => d,
        };
        (day < self.days.len()).then_some(day * HOURS_PER_DAY)
    }

    /// Calendar year containing hour `index`.
    pub fn year_of(&self, index: usize) -> Option<i32> {
        self.days.get(index / HOURS_PER_DAY).map(|d| d.year())
    }

    /// Indices belonging to calendar year `year`.
    pub fn year_range(&self, year: i32) -> std::ops::Range<usize> {
        let first = self.days.partition_point(|d| d.year() < year);
        let last = self.days.partition_point(|d| d.year() <= year);
        first * HOURS_PER_DAY..last * HOURS_PER_DAY
    }

    /// Fractional day-of-year for hour `index` on a 365-day calendar.
    pub fn day_of_year(&self, index: usize) -> f64 {
        let d = self.days[index / HOURS_PER_DAY];
        let mut ordinal = d.ordinal0();
        // Shift post-Feb-29 days back so every year runs 0..365.
        if d.month() > 2 && NaiveDate::from_ymd_opt(d.year(), 2, 29).is_some() {
            ordinal -= 1;
        }
        ordinal as f64 + (index % HOURS_PER_DAY) as f64 / HOURS_PER_DAY as f64
    }

    pub fn hour_of_day(index: usize) -> usize {
        index % HOURS_PER_DAY
    }

    /// Index of 00:00 on the first day of each calendar month, starting at
    /// the month containing `from` and yielding `count` consecutive months.
    pub fn month_starts(&self, from: NaiveDate, count: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(count);
        let (mut y, mut m) = (from.year(), from.month());
        for _ in 0..count {
            let date = NaiveDate::from_ymd_opt(y, m, 1).unwrap();
            if let Some(i) = self.index_of(date.and_time(NaiveTime::MIN)) {
                out.push(i);
            }
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
        out
    }

    pub fn end_date(&self) -> NaiveDate {
        *self.days.last().unwrap()
    }
}
