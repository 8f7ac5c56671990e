//! Van Aerde single-regime speed–flow–density model.
//!
//! Units: speeds mph, flows veh/hour/lane, densities veh/mile/lane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KM_PER_MILE: f64 = 1.609344;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDiagram {
    pub u_free: f64,
    pub u_capacity: f64,
    pub q_capacity: f64,
    pub k_jam: f64,
}

impl FundamentalDiagram {
    pub fn new(u_free: f64, u_capacity: f64, q_capacity: f64, k_jam: f64) -> Result<Self> {
        let all_finite = [u_free, u_capacity, q_capacity, k_jam].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidFd("parameters must be finite".into()));
        }
        if !(u_capacity > 0.0 && u_capacity < u_free) {
            return Err(Error::InvalidFd(format!(
                "need 0 < u_capacity < u_free, got {u_capacity} and {u_free}"
            )));
        }
        if !(q_capacity > 0.0) {
            return Err(Error::InvalidFd("q_capacity must be positive".into()));
        }
        if !(k_jam > q_capacity / u_capacity) {
            return Err(Error::InvalidFd(format!(
                "jam density {k_jam} must exceed density at capacity {}",
                q_capacity / u_capacity
            )));
        }
        let fd = FundamentalDiagram {
            u_free,
            u_capacity,
            q_capacity,
            k_jam,
        };
        if !(fd.shockwave_bracket() > 0.0) {
            return Err(Error::InvalidFd(
                "maximum shockwave speed is undefined for these parameters".into(),
            ));
        }
        Ok(fd)
    }

    /// Same as [`FundamentalDiagram::new`] with jam density in veh/km/lane.
    pub fn from_metric_jam_density(u_free: f64, u_capacity: f64, q_capacity: f64, k_jam_per_km: f64) -> Result<Self> {
        Self::new(u_free, u_capacity, q_capacity, k_jam_per_km * KM_PER_MILE)
    }

    fn scale(&self) -> f64 {
        self.u_free / (self.k_jam * self.u_capacity * self.u_capacity)
    }

    pub fn c1(&self) -> f64 {
        self.scale() * (2.0 * self.u_capacity - self.u_free)
    }

    pub fn c2(&self) -> f64 {
        self.scale() * (self.u_free - self.u_capacity).powi(2)
    }

    pub fn c3(&self) -> f64 {
        1.0 / self.q_capacity - self.scale()
    }

    fn shockwave_bracket(&self) -> f64 {
        let (uf, uc) = (self.u_free, self.u_capacity);
        (self.k_jam / self.q_capacity - uf / (uc * uc)) + (uf - uc).powi(2) / (uf * uc * uc)
    }

    /// Magnitude of the backward wave speed at jam density.
    pub fn max_shockwave_speed(&self) -> f64 {
        1.0 / self.shockwave_bracket()
    }

    /// Flow per lane carried at speed `u`.
    pub fn flow(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0 && u < self.u_free) {
            return Err(Error::OutOfRange {
                speed: u,
                u_free: self.u_free,
            });
        }
        Ok(u / (self.c1() + self.c2() / (self.u_free - u) + self.c3() * u))
    }
}

/// Maximum back-propagation shockwave speed for raw parameters.
pub fn max_shockwave_speed(u_free: f64, u_capacity: f64, q_capacity: f64, k_jam: f64) -> Result<f64> {
    FundamentalDiagram::new(u_free, u_capacity, q_capacity, k_jam).map(|fd| fd.max_shockwave_speed())
}

pub fn van_aerde_flow(u: f64, fd: &FundamentalDiagram) -> Result<f64> {
    fd.flow(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_study() -> FundamentalDiagram {
        FundamentalDiagram::from_metric_jam_density(60.0, 45.0, 2500.0, 150.0).unwrap()
    }

    #[test]
    fn case_study_max_shockwave() {
        let w = case_study().max_shockwave_speed();
        assert!((w - 14.6).abs() <= 0.2, "{w}");
        // Hand evaluation: 1 / (241.4016/2500 - 60/2025 + 225/121500).
        let hand = 1.0 / (241.4016 / 2500.0 - 60.0 / 2025.0 + 225.0 / 121500.0);
        assert!((w - hand).abs() < 1e-9);
    }

    #[test]
    fn doubling_jam_density_slows_the_wave() {
        let fd = case_study();
        let doubled = FundamentalDiagram { k_jam: fd.k_jam * 2.0, ..fd };
        assert!(doubled.max_shockwave_speed() < fd.max_shockwave_speed());
    }

    #[test]
    fn capacity_speed_limit_of_bracket() {
        let (uf, qc, kj) = (60.0, 2500.0, 241.4016);
        let limit = 1.0 / (kj / qc - 1.0 / uf);
        let near = max_shockwave_speed(uf, uf - 1e-7, qc, kj).unwrap();
        assert!((near - limit).abs() / limit < 1e-6);
    }

    #[test]
    fn flow_identities() {
        let fd = case_study();
        assert!((fd.flow(45.0).unwrap() - 2500.0).abs() < 2500.0 * 1e-9);
        assert_eq!(fd.flow(0.0).unwrap(), 0.0);
        assert!(fd.flow(60.0).is_err());
        assert!(fd.flow(-1.0).is_err());
    }

    #[test]
    fn flow_at_thirty_by_hand() {
        let fd = case_study();
        let kj = 150.0 * 1.609344;
        let s = 60.0 / (kj * 45.0 * 45.0);
        let (c1, c2, c3) = (s * 30.0, s * 225.0, 1.0 / 2500.0 - s);
        let q = 30.0 / (c1 + c2 / 30.0 + c3 * 30.0);
        assert!((fd.flow(30.0).unwrap() - q).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FundamentalDiagram::new(60.0, 70.0, 2500.0, 240.0).is_err());
        assert!(FundamentalDiagram::new(60.0, 45.0, 2500.0, 50.0).is_err());
        assert!(FundamentalDiagram::new(60.0, 45.0, 0.0, 240.0).is_err());
    }
}
