//! Cox construction: `τ = inf{t >= 0 : A(t) >= Z}` with `Z ~ Exp(1)`
//! independent of `A`.
//!
//! Independence is operational: each sample consumes its own stream, and
//! nothing else reads from it.

use serde::Serialize;

use crate::compensator::Compensator;
use crate::error::{Error, Result};
use crate::rng::{draw_exponential, RngStream};
use crate::time::TimePoint;

/// One draw of the Cox construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoxSample {
    pub z: f64,
    pub tau: TimePoint,
    /// `A(τ)`; equal to `z` whenever `τ` is finite. For infinite `τ` this is
    /// `sup A`.
    pub a_at_tau: f64,
    #[serde(flatten)]
    pub stream: RngStream,
}

/// `A⁻¹(z)`; infinite when `A` never reaches `z`.
pub fn cox_time(a: &Compensator, z: f64) -> Result<TimePoint> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("exponential level must be > 0, got {z}")));
    }
    a.generalized_inverse(z)
}

/// Draws `Z` from `stream` and applies [`cox_time`].
pub fn cox_sample(a: &Compensator, stream: RngStream) -> Result<CoxSample> {
    cox_sample_from_level(a, draw_exponential(&stream), stream)
}

/// [`cox_sample`] with the exponential level supplied by the caller.
pub fn cox_sample_from_level(a: &Compensator, z: f64, stream: RngStream) -> Result<CoxSample> {
    let tau = cox_time(a, z)?;
    let a_at_tau = match tau {
        TimePoint::Finite(t) => a.value(t),
        TimePoint::Infinite => a.range_sup().unwrap_or(f64::INFINITY),
    };
    Ok(CoxSample {
        z,
        tau,
        a_at_tau,
        stream,
    })
}

/// Reuses `A(τ)` as the exponential level: `inf{t : A(t) >= A(τ)}`.
///
/// For `τ` produced by a model whose compensator is `A` this returns `τ`;
/// the caller is responsible for that pairing.
pub fn cox_round_trip(a: &Compensator, tau: TimePoint) -> Result<TimePoint> {
    let t = tau.expect_finite("tau")?;
    if t <= 0.0 {
        return Err(Error::Domain(format!("tau must be > 0, got {t}")));
    }
    cox_time(a, a.value(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::FLAT_KNOTS;

    fn fin(t: f64) -> TimePoint {
        TimePoint::Finite(t)
    }

    #[test]
    fn cox_time_examples() {
        assert_eq!(cox_time(&Compensator::linear(1.0).unwrap(), 0.7).unwrap(), fin(0.7));
        assert_eq!(cox_time(&Compensator::power(2.0).unwrap(), 4.0).unwrap(), fin(2.0));
        let sat = Compensator::saturating(1.0, 1.0).unwrap();
        assert_eq!(cox_time(&sat, 2.0).unwrap(), TimePoint::Infinite);
        assert!(cox_time(&sat, 0.0).is_err());
        assert!(cox_time(&sat, -1.0).is_err());
    }

    #[test]
    fn cox_sample_examples() {
        let s = RngStream::new(1, 0);
        let c = cox_sample_from_level(&Compensator::linear(1.0).unwrap(), 1.0, s).unwrap();
        assert_eq!((c.z, c.tau, c.a_at_tau), (1.0, fin(1.0), 1.0));
        let c = cox_sample_from_level(&Compensator::linear(2.0).unwrap(), 1.0, s).unwrap();
        assert_eq!((c.tau, c.a_at_tau), (fin(0.5), 1.0));
        let sat = Compensator::saturating(1.0, 1.0).unwrap();
        let c = cox_sample_from_level(&sat, 2.0, s).unwrap();
        assert_eq!((c.tau, c.a_at_tau), (TimePoint::Infinite, 1.0));
    }

    #[test]
    fn cox_sample_uses_the_stream() {
        let a = Compensator::linear(1.0).unwrap();
        let s = RngStream::new(42, 17);
        let c = cox_sample(&a, s).unwrap();
        assert_eq!(c.z, draw_exponential(&s));
        assert_eq!(c.stream, s);
        assert_eq!(c, cox_sample(&a, s).unwrap());
    }

    #[test]
    fn round_trip_examples() {
        assert_eq!(cox_round_trip(&Compensator::linear(1.0).unwrap(), fin(0.7)).unwrap(), fin(0.7));
        assert_eq!(cox_round_trip(&Compensator::power(2.0).unwrap(), fin(2.0)).unwrap(), fin(2.0));
        let flat = Compensator::tabulated(FLAT_KNOTS.to_vec(), 1.0).unwrap();
        assert_eq!(flat.value(2.5), 1.5);
        assert_eq!(cox_round_trip(&flat, fin(2.5)).unwrap(), fin(2.5));
        assert!(cox_round_trip(&flat, TimePoint::Infinite).is_err());
    }

    #[test]
    fn json_shape() {
        let c = cox_sample_from_level(&Compensator::linear(2.0).unwrap(), 1.0, RngStream::new(42, 3))
            .unwrap();
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"z":1.0,"tau":0.5,"a_at_tau":1.0,"seed":"42","stream_id":3}"#
        );
    }
}
