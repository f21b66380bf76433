//! Run parameters from a TOML file and command-line flags.
//!
//! Every key is optional at this level; flags override the file, and each
//! command asks for the keys it needs, so missing or malformed keys are
//! reported by name. TOML integers are 64-bit signed, so seeds and sample
//! counts in a config file stop at `i64::MAX`; flags take the full `u64`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use lattice_approx::enumerate::NormSpace;
use lattice_approx::experiments::Group;
use lattice_approx::haar::{CompactWindow, LatticeSampler, UnimodularMap};
use lattice_approx::{ApproxFunction, DyadicSchedule, Norm, NormSpec, PointClass, TargetFunction};
use serde::{Deserialize, Serialize};

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Ambient dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Target function, e.g. `spf:p=2,q=1,d=2`, `prod:n=3`, `maxpow:a=1,n=2`.
    #[arg(long = "f")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Overrides the exponent of a signed power form.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Approximation function, e.g. `pl:C=1,s=1,j=0`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    /// Fixed bound vector instead of ψ.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    /// Norm: `max`, `ld:2`, `block:2:2,1:2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    /// Second norm for `normcheck`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm2: Option<String>,
    /// `nonzero`, `primitive` or `all`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_class: Option<String>,
    /// `sl` or `asl`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Lattice sampler: `hecke`, `hecke:p=<prime>` or `gaussian`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<String>,
    /// Window bound on the operator norms of `h` and `h⁻¹`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_norm_bound: Option<f64>,
    /// Window bound on the translation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_bound: Option<f64>,
    /// Schedule, e.g. `geo:t0=1,r=2,k0=4,k1=9`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    /// Number of sampled maps or lattices.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Master seed; sample `i` uses the stream derived from `(seed, i)`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo points per volume estimate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
    /// Inner radius of a volume shell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Inner radius of a counting shell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Outer radius of a shell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Inner radius of the far shell in `zerofull`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_split: Option<f64>,
    /// Outer radius of the far shell in `zerofull`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Ball volumes for the lattice experiments.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volumes: Option<Vec<f64>>,
    /// Rogers exponent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Variance/volume level above which Rogers points are flagged.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
    /// Volume threshold separating large from small in `normcheck`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// `source` or `image`: where the shell condition is imposed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    /// Row-major text file with the matrix (and optional translation).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    /// Margin `δ` of the window sandwich.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Inflation factors of the window sandwich.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflations: Option<Vec<f64>>,
    /// `asymptotic` or `uniform` for `classify`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Params { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Params {
    /// Flags take precedence over file values.
    pub fn over(self, file: Params) -> Params {
        overlay!(
            self,
            file,
            n,
            f,
            d,
            psi,
            epsilon,
            norm,
            norm2,
            point_class,
            group,
            sampler,
            op_norm_bound,
            shift_bound,
            schedule,
            samples,
            seed,
            mc_samples,
            s,
            t0,
            t,
            t_split,
            t_max,
            volumes,
            r,
            ceiling,
            threshold,
            space,
            matrix_file,
            delta,
            inflations,
            criterion
        )
    }

    pub fn from_toml(text: &str) -> Result<Params> {
        toml::from_str(text).map_err(|e| anyhow!("config: {}", e.message()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Params> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Params::from_toml(&text)
    }

    pub fn target(&self) -> Result<TargetFunction> {
        let spec = self.f.as_deref().ok_or_else(|| missing("f"))?;
        let mut f: TargetFunction = spec.parse().map_err(|e| invalid("f", e))?;
        if let Some(new_d) = self.d {
            match &mut f {
                TargetFunction::SignedPowerForm { d, .. } => *d = new_d,
                _ => bail!("invalid value for `d`: only signed power forms take an exponent"),
            }
            f.validate()?;
        }
        if let Some(n) = self.n {
            if n != f.dim() {
                bail!(
                    "invalid value for `n`: {n} does not match the dimension {} of `f`",
                    f.dim()
                );
            }
        }
        Ok(f)
    }

    /// `n`, falling back to the dimension of `f`.
    pub fn dim(&self) -> Result<usize> {
        match (self.n, &self.f) {
            (Some(n), _) if n >= 1 => Ok(n),
            (Some(_), _) => bail!("invalid value for `n`: must be positive"),
            (None, Some(_)) => Ok(self.target()?.dim()),
            (None, None) => Err(missing("n")),
        }
    }

    pub fn psi(&self) -> Result<ApproxFunction> {
        let spec = self.psi.as_deref().ok_or_else(|| missing("psi"))?;
        spec.parse().map_err(|e| invalid("psi", e))
    }

    fn resolve_norm(&self, key: &str, spec: Option<&str>, n: usize, default: Option<Norm>) -> Result<Norm> {
        match spec {
            Some(s) => {
                let spec: NormSpec = s.parse().map_err(|e| invalid(key, e))?;
                spec.resolve(n).map_err(|e| invalid(key, e))
            }
            None => default.ok_or_else(|| missing(key)),
        }
    }

    /// The norm, defaulting to the one with a closed-form volume for `f`.
    pub fn norm(&self, n: usize) -> Result<Norm> {
        let default = match self.f.as_ref().map(|_| self.target()).transpose()? {
            Some(TargetFunction::SignedPowerForm { p, q, d }) => Some(Norm::split(p, q, d)?),
            Some(_) => Some(Norm::max(n)),
            None => None,
        };
        self.resolve_norm("norm", self.norm.as_deref(), n, default)
    }

    /// The norm for lattice counts in balls, defaulting to Euclidean.
    pub fn ball_norm(&self, n: usize) -> Result<Norm> {
        self.resolve_norm("norm", self.norm.as_deref(), n, Some(Norm::ld(n, 2.0)?))
    }

    pub fn norm2(&self, n: usize) -> Result<Norm> {
        self.resolve_norm("norm2", self.norm2.as_deref(), n, None)
    }

    pub fn point_class(&self, default: PointClass) -> Result<PointClass> {
        match &self.point_class {
            Some(s) => s.parse().map_err(|e| invalid("point_class", e)),
            None => Ok(default),
        }
    }

    pub fn group(&self) -> Result<Group> {
        match self.group.as_deref() {
            None | Some("sl") => Ok(Group::Sl),
            Some("asl") => Ok(Group::Asl),
            Some(other) => bail!("invalid value for `group`: expected `sl` or `asl`, found `{other}`"),
        }
    }

    pub fn sampler(&self) -> Result<LatticeSampler> {
        match self.sampler.as_deref() {
            None | Some("hecke") => Ok(LatticeSampler::default()),
            Some("gaussian") => Ok(LatticeSampler::Gaussian),
            Some(s) => {
                let prime = s
                    .strip_prefix("hecke:p=")
                    .and_then(|p| p.parse::<u64>().ok())
                    .filter(|p| *p >= 2)
                    .ok_or_else(|| {
                        anyhow!("invalid value for `sampler`: expected `hecke`, `hecke:p=<prime>` or `gaussian`")
                    })?;
                Ok(LatticeSampler::Hecke { prime })
            }
        }
    }

    pub fn window(&self) -> Result<Option<CompactWindow>> {
        match (self.op_norm_bound, self.shift_bound) {
            (None, None) => Ok(None),
            (Some(a), b) => Ok(Some(
                CompactWindow::new(a, b.unwrap_or(0.0)).map_err(|e| invalid("op_norm_bound", e))?,
            )),
            (None, Some(_)) => Err(missing("op_norm_bound")),
        }
    }

    pub fn schedule(&self) -> Result<DyadicSchedule> {
        let spec = self.schedule.as_deref().ok_or_else(|| missing("schedule"))?;
        spec.parse().map_err(|e| invalid("schedule", e))
    }

    pub fn samples(&self) -> Result<usize> {
        match self.samples {
            Some(0) => bail!("invalid value for `samples`: must be at least 1"),
            Some(k) => Ok(k),
            None => Err(missing("samples")),
        }
    }

    pub fn space(&self) -> Result<NormSpace> {
        match self.space.as_deref() {
            None | Some("source") => Ok(NormSpace::Source),
            Some("image") => Ok(NormSpace::Image),
            Some(other) => bail!("invalid value for `space`: expected `source` or `image`, found `{other}`"),
        }
    }

    pub fn matrix(&self) -> Result<Option<UnimodularMap>> {
        match &self.matrix_file {
            None => Ok(None),
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading matrix {}", path.display()))?;
                Ok(Some(
                    UnimodularMap::from_text(&text).map_err(|e| invalid("matrix_file", e))?,
                ))
            }
        }
    }

    pub fn require(value: Option<f64>, key: &str) -> Result<f64> {
        match value {
            Some(v) if v.is_finite() => Ok(v),
            Some(_) => bail!("invalid value for `{key}`: must be finite"),
            None => Err(missing(key)),
        }
    }
}

fn missing(key: &str) -> anyhow::Error {
    anyhow!("missing key `{key}`")
}

fn invalid(key: &str, e: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("invalid value for `{key}`: {e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flags_override_file() {
        let file = Params::from_toml("n = 3\nsamples = 10\npsi = \"pl:C=1,s=1,j=0\"").unwrap();
        let flags = Params {
            samples: Some(20),
            ..Params::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.samples, Some(20));
        assert_eq!(merged.n, Some(3));
        assert_eq!(merged.psi.as_deref(), Some("pl:C=1,s=1,j=0"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Params::from_toml("bogus = 1").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn exponent_below_one_is_rejected() {
        let p = Params {
            f: Some("spf:p=2,q=1,d=2".into()),
            d: Some(0.5),
            ..Params::default()
        };
        let err = p.target().unwrap_err().to_string();
        assert!(err.contains("`d`"), "{err}");
    }

    #[test]
    fn dimension_comes_from_f_or_is_missing() {
        let p = Params {
            f: Some("spf:p=2,q=1,d=2".into()),
            psi: Some("pl:C=1,s=1,j=0".into()),
            norm: Some("max".into()),
            ..Params::default()
        };
        assert_eq!(p.dim().unwrap(), 3);
        assert_eq!(p.norm(3).unwrap(), Norm::max(3));
        assert!(p.psi().is_ok());
        let err = Params::default().dim().unwrap_err().to_string();
        assert!(err.contains("`n`"), "{err}");
    }

    #[test]
    fn default_norm_follows_the_family() {
        let p = Params {
            f: Some("spf:p=2,q=1,d=2".into()),
            ..Params::default()
        };
        assert_eq!(p.norm(3).unwrap(), Norm::split(2, 1, 2.0).unwrap());
        assert_eq!(Params::default().ball_norm(2).unwrap(), Norm::ld(2, 2.0).unwrap());
    }

    fn spec_string() -> impl Strategy<Value = Option<String>> {
        prop::option::of(prop_oneof![
            Just("spf:p=2,q=1,d=2".to_string()),
            Just("prod:n=3".to_string()),
            "[a-z:=,0-9.]{0,12}",
        ])
    }

    fn real() -> impl Strategy<Value = Option<f64>> {
        prop::option::of(prop_oneof![-1e6f64..1e6, Just(0.0), Just(1e-300)])
    }

    prop_compose! {
        fn params()(
            n in prop::option::of(0usize..10),
            f in spec_string(),
            d in real(),
            psi in spec_string(),
            epsilon in prop::option::of(prop::collection::vec(0.0f64..10.0, 0..4)),
            norm in spec_string(),
            point_class in prop::option::of(prop_oneof![Just("nonzero".to_string()), Just("primitive".to_string())]),
            samples in prop::option::of(0usize..100_000),
            mc_samples in prop::option::of(0..=i64::MAX as u64),
            seed in prop::option::of(0..=i64::MAX as u64),
            t in real(),
            t0 in real(),
            volumes in prop::option::of(prop::collection::vec(0.0f64..1e4, 1..5)),
            matrix_file in prop::option::of("[a-z/]{1,10}"),
        ) -> Params {
            Params {
                n, f, d, psi, epsilon, norm, point_class, samples, seed, mc_samples, t, t0, volumes,
                matrix_file: matrix_file.map(PathBuf::from),
                ..Params::default()
            }
        }
    }

    proptest! {
        #[test]
        fn toml_round_trip(p in params()) {
            let text = p.to_toml().unwrap();
            prop_assert_eq!(Params::from_toml(&text).unwrap(), p);
        }
    }
}
