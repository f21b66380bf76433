//! Closed-form shell volumes against the Monte Carlo oracle.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::norm::Norm;
use crate::psi::ApproxFunction;
use crate::rng::derive_rng;
use crate::target::TargetFunction;
use crate::volume::{monte_carlo_region_volume, shell_volume, VolumeResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeCase {
    pub target: TargetFunction,
    pub psi: ApproxFunction,
    pub norm: Norm,
    pub s: f64,
    pub t: f64,
}

/// Three parameter points for each closed-form family.
pub fn volume_test_matrix() -> Vec<VolumeCase> {
    let case = |f: &str, psi: &str, norm: Norm, s: f64, t: f64| VolumeCase {
        target: f.parse().expect("valid target"),
        psi: psi.parse().expect("valid psi"),
        norm,
        s,
        t,
    };
    vec![
        case(
            "spf:p=1,q=1,d=2",
            "pl:C=1,s=0,j=0",
            Norm::split(1, 1, 2.0).unwrap(),
            2.0,
            10.0,
        ),
        case(
            "spf:p=2,q=1,d=2",
            "pl:C=1,s=0.5,j=0",
            Norm::split(2, 1, 2.0).unwrap(),
            2.0,
            8.0,
        ),
        case(
            "spf:p=1,q=2,d=1.5",
            "pl:C=2,s=0.5,j=1",
            Norm::split(1, 2, 1.5).unwrap(),
            2.0,
            6.0,
        ),
        case("prod:n=2", "pl:C=1,s=0,j=0", Norm::max(2), 2.0, 10.0),
        case("prod:n=3", "pl:C=2,s=1,j=0", Norm::max(3), 2.0, 6.0),
        case("prod:n=2", "pl:C=1,s=0.5,j=1", Norm::max(2), 2.0, 8.0),
        case("maxpow:a=1,n=2", "pl:C=0.5,s=0,j=0", Norm::max(2), 1.0, 8.0),
        case("maxpow:a=2|1,n=3", "pl:C=1,s=0.5,j=0", Norm::max(3), 1.5, 6.0),
        case(
            "maxpow:a=1,n=3,at=0;maxpow:a=1,n=3,at=1",
            "pl:C=1,s=0.5,j=0;pl:C=1,s=0,j=0",
            Norm::max(3),
            2.0,
            6.0,
        ),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeCheck {
    pub case: VolumeCase,
    pub closed_form: VolumeResult,
    pub monte_carlo: VolumeResult,
    /// `(closed − mc)/combined standard error`.
    pub z_score: f64,
}

/// Evaluates every case both ways; case `i` uses stream `i` of the seed.
pub fn volume_cross_validation(cases: &[VolumeCase], samples: u64, master_seed: u64) -> Result<Vec<VolumeCheck>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let closed_form = shell_volume(&c.target, &c.psi, &c.norm, c.s, c.t)?;
            let mut rng = derive_rng(master_seed, i as u64);
            let monte_carlo = monte_carlo_region_volume(&c.target, &c.psi, &c.norm, c.s, c.t, samples, &mut rng)?;
            let se = monte_carlo.stderr.unwrap_or(0.0).hypot(closed_form.abs_error);
            let z_score = (closed_form.value - monte_carlo.value) / se;
            Ok(VolumeCheck {
                case: c.clone(),
                closed_form,
                monte_carlo,
                z_score,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_has_three_cases_per_family() {
        let m = volume_test_matrix();
        assert_eq!(m.len(), 9);
        for c in &m {
            assert!(shell_volume(&c.target, &c.psi, &c.norm, c.s, c.t).is_ok(), "{c:?}");
        }
    }

    #[test]
    fn quick_cross_validation() {
        for check in volume_cross_validation(&volume_test_matrix(), 200_000, 1).unwrap() {
            assert!(check.z_score.abs() < 4.5, "{check:?}");
        }
    }
}
