//! Piecewise-constant functions on `[0, 1]` (or `[0, 2]` after a 2π-extension).
//!
//! Pieces are right-open `[x_{i-1}, x_i)` with the final point closed. Every
//! function is kept in canonical form: adjacent pieces never share a value and
//! no piece is narrower than [`BREAK_TOL`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Breakpoints closer than this are treated as the same point.
pub const BREAK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("a step function needs at least one piece")]
    Empty,
    #[error("{breakpoints} breakpoints need {} values, got {values}", breakpoints.saturating_sub(1))]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("breakpoints must start at 0 and increase strictly")]
    NotMonotone,
    #[error("non-finite breakpoint or value")]
    NonFinite,
    #[error("domains differ: [0, {left}] vs [0, {right}]")]
    DomainMismatch { left: f64, right: f64 },
    #[error("operation needs domain [0, {expected}], got [0, {got}]")]
    WrongDomain { expected: f64, got: f64 },
    #[error("x = {x} lies outside [0, {end}]")]
    OutOfDomain { x: f64, end: f64 },
    #[error("slide offset {0} lies outside [0, 1]")]
    BadSlide(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawStep {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    domain_end: f64,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = StepError;

    fn try_from(raw: RawStep) -> Result<Self, StepError> {
        let f = StepFunction::make(&raw.breakpoints, &raw.values)?;
        if (f.domain_end() - raw.domain_end).abs() > BREAK_TOL {
            return Err(StepError::WrongDomain { expected: raw.domain_end, got: f.domain_end() });
        }
        Ok(f)
    }
}

impl From<StepFunction> for RawStep {
    fn from(f: StepFunction) -> Self {
        let domain_end = f.domain_end();
        RawStep { breakpoints: f.breakpoints, values: f.values, domain_end }
    }
}

impl StepFunction {
    /// Builds a function from breakpoints `0 = x_0 < … < x_n` and the `n` piece
    /// values. The domain end is the last breakpoint.
    pub fn make(breakpoints: &[f64], values: &[f64]) -> Result<Self, StepError> {
        if values.is_empty() || breakpoints.len() < 2 {
            return Err(StepError::Empty);
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(StepError::LengthMismatch { breakpoints: breakpoints.len(), values: values.len() });
        }
        if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(StepError::NonFinite);
        }
        if breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(StepError::NotMonotone);
        }
        Ok(Self::canonical(breakpoints.to_vec(), values.to_vec()))
    }

    pub fn constant(value: f64) -> Self {
        Self { breakpoints: vec![0.0, 1.0], values: vec![value] }
    }

    /// Canonicalizes raw parts: drops sub-tolerance pieces and merges equal
    /// neighbours. Callers guarantee non-decreasing breakpoints.
    pub(crate) fn canonical(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        let end = *breakpoints.last().unwrap();
        let mut bps = vec![0.0];
        let mut vals: Vec<f64> = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            let hi = breakpoints[i + 1];
            if hi - breakpoints[i] < BREAK_TOL && values.len() > 1 {
                continue;
            }
            match vals.last() {
                Some(&last) if last == v => {
                    *bps.last_mut().unwrap() = hi;
                }
                _ => {
                    vals.push(v);
                    bps.push(hi);
                }
            }
        }
        if vals.is_empty() {
            vals.push(values[0]);
            bps.push(end);
        }
        *bps.last_mut().unwrap() = end;
        Self { breakpoints: bps, values: vals }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    /// `(start, end, value)` for every piece, left to right.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.breakpoints[i], self.breakpoints[i + 1], v))
    }

    /// Interior breakpoints, i.e. the points where the canonical form jumps.
    pub fn discontinuities(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    pub fn evaluate(&self, x: f64) -> Result<f64, StepError> {
        let end = self.domain_end();
        if !(0.0..=end).contains(&x) {
            return Err(StepError::OutOfDomain { x, end });
        }
        Ok(self.at(x))
    }

    /// Evaluation without the domain check; points past either end take the
    /// nearest end value.
    pub(crate) fn at(&self, x: f64) -> f64 {
        let idx = self.breakpoints[1..].partition_point(|&b| b <= x);
        self.values[idx.min(self.values.len() - 1)]
    }

    pub fn minimum(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn maximum(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn span(&self) -> f64 {
        self.maximum() - self.minimum()
    }

    /// The function raised by `alpha`.
    pub fn shifted(&self, alpha: f64) -> Self {
        let values = self.values.iter().map(|v| v + alpha).collect();
        Self::canonical(self.breakpoints.clone(), values)
    }

    fn require_unit(&self) -> Result<(), StepError> {
        if self.domain_end() == 1.0 {
            Ok(())
        } else {
            Err(StepError::WrongDomain { expected: 1.0, got: self.domain_end() })
        }
    }

    /// Integral over `[0, 1]`.
    pub fn mean(&self) -> Result<f64, StepError> {
        self.require_unit()?;
        Ok(self.pieces().map(|(lo, hi, v)| (hi - lo) * v).sum())
    }

    /// The zero-mean vertical translate `f - mean(f)`.
    pub fn mean_reduce(&self) -> Result<Self, StepError> {
        Ok(self.shifted(-self.mean()?))
    }

    /// The function on `[0, 2]` that repeats `f` on `(1, 2]` raised by 2π.
    pub fn extend_2pi(&self) -> Result<Self, StepError> {
        self.require_unit()?;
        let mut bps = self.breakpoints.clone();
        bps.extend(self.breakpoints[1..].iter().map(|b| b + 1.0));
        let mut vals = self.values.clone();
        vals.extend(self.values.iter().map(|v| v + TAU));
        Ok(Self::canonical(bps, vals))
    }

    /// `x ↦ self(x + u)` on `[0, 1]`; `self` must live on `[0, 2]`.
    pub fn slide(&self, u: f64) -> Result<Self, StepError> {
        if self.domain_end() != 2.0 {
            return Err(StepError::WrongDomain { expected: 2.0, got: self.domain_end() });
        }
        if !(-BREAK_TOL..=1.0 + BREAK_TOL).contains(&u) {
            return Err(StepError::BadSlide(u));
        }
        let u = u.clamp(0.0, 1.0);
        let first = self.breakpoints[1..].partition_point(|&b| b <= u);
        let mut bps = vec![0.0];
        let mut vals = Vec::new();
        for i in first..self.values.len() {
            let hi = self.breakpoints[i + 1] - u;
            vals.push(self.values[i]);
            if hi >= 1.0 {
                break;
            }
            bps.push(hi);
        }
        bps.push(1.0);
        Ok(Self::canonical(bps, vals))
    }

    /// Entry `i` is `f(i/n)/√n` for `i = 0, …, n-1`.
    pub fn sample_vec(&self, n: usize) -> Result<Vec<f64>, StepError> {
        self.require_unit()?;
        let scale = 1.0 / (n as f64).sqrt();
        let mut piece = 0;
        Ok((0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                while piece + 1 < self.values.len() && self.breakpoints[piece + 1] <= x {
                    piece += 1;
                }
                self.values[piece] * scale
            })
            .collect())
    }

    /// Pointwise combination over the common refinement of both partitions.
    pub fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self, StepError> {
        check_domains(self, other)?;
        let mut bps = vec![0.0];
        let mut vals = Vec::new();
        for (_, hi, a, b) in overlay(self, other) {
            bps.push(hi);
            vals.push(op(a, b));
        }
        Ok(Self::canonical(bps, vals))
    }
}

fn check_domains(f: &StepFunction, g: &StepFunction) -> Result<(), StepError> {
    if (f.domain_end() - g.domain_end()).abs() > BREAK_TOL {
        return Err(StepError::DomainMismatch { left: f.domain_end(), right: g.domain_end() });
    }
    Ok(())
}

/// Walks the merged partition of two functions on the same domain, yielding
/// `(lo, hi, f value, g value)` per cell.
pub(crate) fn overlay<'a>(
    f: &'a StepFunction,
    g: &'a StepFunction,
) -> impl Iterator<Item = (f64, f64, f64, f64)> + 'a {
    let (mut i, mut j, mut x) = (0usize, 0usize, 0.0f64);
    std::iter::from_fn(move || {
        if i >= f.values.len() || j >= g.values.len() {
            return None;
        }
        let (fe, ge) = (f.breakpoints[i + 1], g.breakpoints[j + 1]);
        let hi = fe.min(ge);
        let cell = (x, hi, f.values[i], g.values[j]);
        if fe - hi < BREAK_TOL {
            i += 1;
        }
        if ge - hi < BREAK_TOL {
            j += 1;
        }
        x = hi;
        Some(cell)
    })
}

/// Exact `∫|f - g|`.
pub fn l1_distance(f: &StepFunction, g: &StepFunction) -> Result<f64, StepError> {
    check_domains(f, g)?;
    Ok(overlay(f, g).map(|(lo, hi, a, b)| (hi - lo) * (a - b).abs()).sum())
}

/// Exact `(∫|f - g|²)^{1/2}`.
pub fn l2_distance(f: &StepFunction, g: &StepFunction) -> Result<f64, StepError> {
    check_domains(f, g)?;
    Ok(overlay(f, g).map(|(lo, hi, a, b)| (hi - lo) * (a - b).powi(2)).sum::<f64>().sqrt())
}
