//! Line-based `key = value` run configuration with dotted section keys.

use crate::error::{HsError, Result};
use crate::field::{DiffMethod, Gaussian, ProfileKind, ProfileSpec, DEFAULT_EPSILON0, DEFAULT_TAIL_TOL};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Every key the parser accepts; anything else is rejected as a likely typo.
pub const KNOWN_KEYS: &[&str] = &[
    "profile.kind",
    "profile.A",
    "profile.sigma",
    "profile.center",
    "profile.amplitudes",
    "profile.sigmas",
    "profile.centers",
    "profile.path",
    "profile.epsilon0",
    "profile.tail_tol",
    "grid.L",
    "grid.N",
    "k.count",
    "k.max",
    "k.refine_factor",
    "k.refine_width",
    "asympt.xi",
    "asympt.t",
    "asympt.p",
    "asympt.delta_stride",
    "evolve.t",
    "evolve.L",
    "evolve.N",
    "evolve.dt",
    "evolve.check_every",
    "evolve.method",
    "compare.xi",
    "compare.t",
    "tol.unitarity",
    "tol.symmetry",
    "tol.slope_min",
    "tol.conservation",
    "tol.reality",
    "tol.ratio",
    "tol.decay_slope_lo",
    "tol.decay_slope_hi",
    "tol.fast_variation",
    "output.dir",
    "run.threads",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub unitarity: f64,
    pub symmetry: f64,
    pub slope_min: f64,
    /// Relative to `max(|c(0)|, 1)`.
    pub conservation: f64,
    pub reality: f64,
    pub ratio: f64,
    pub decay_slope_lo: f64,
    pub decay_slope_hi: f64,
    pub fast_variation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-8,
            symmetry: 1e-9,
            slope_min: 2.7,
            conservation: 1e-6,
            reality: 1e-6,
            ratio: 0.15,
            decay_slope_lo: -0.55,
            decay_slope_hi: -0.45,
            fast_variation: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KGridConfig {
    pub count: usize,
    pub max: f64,
    /// Extra resolution around each stationary point; 0 disables.
    pub refine_factor: usize,
    pub refine_width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveConfig {
    pub times: Vec<f64>,
    /// `None` picks a domain wide enough for the requested run.
    pub half_width: Option<f64>,
    pub node_count: usize,
    pub dt: Option<f64>,
    pub check_every: usize,
    pub method: DiffMethod,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// SHA-256 of the config text, hex encoded.
    pub hash: String,
    pub profile: ProfileSpec,
    pub profile_kind: String,
    pub k: KGridConfig,
    pub xi: Vec<f64>,
    pub t: Vec<f64>,
    pub p: f64,
    pub delta_stride: usize,
    pub evolve: EvolveConfig,
    pub compare_xi: Vec<f64>,
    pub compare_t: Vec<f64>,
    pub tol: Tolerances,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Raw `key -> value` pairs in file order of last assignment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HsError::Config(format!("line {}: expected `key = value`, got `{raw}`", n + 1)))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(HsError::Config(format!("line {}: unknown key `{key}`", n + 1)));
        }
        let value = value.trim().trim_matches('"').to_string();
        if map.insert(key.to_string(), value).is_some() {
            return Err(HsError::Config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(map)
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Pairs<'a>(&'a BTreeMap<String, String>);

impl Pairs<'_> {
    fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.str(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| HsError::Config(format!("`{key}` must be a non-negative integer, got `{v}`"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.str(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_f64(key, s))
                .collect(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(HsError::Config(format!("`{key}` must be a finite number, got `{v}`"))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(HsError::Config(format!("`{key}` must be positive, got {v}")))
    }
}

fn positive_times(key: &str, ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(HsError::Config(format!("`{key}` must list at least one time")));
    }
    for &t in ts {
        positive(key, t)?;
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HsError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parses config text; relative `profile.path` entries resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let map = parse_pairs(text)?;
        let kv = Pairs(&map);
        let half_width = positive("grid.L", kv.f64("grid.L", 12.0)?)?;
        let node_count = kv.usize("grid.N", 2048)?;
        let kind_name = kv.str("profile.kind").unwrap_or("gaussian").to_string();
        let mut profile = match kind_name.as_str() {
            "zero" => ProfileSpec::zero(half_width, node_count),
            "gaussian" => ProfileSpec::gaussian(
                kv.f64("profile.A", 0.1)?,
                positive("profile.sigma", kv.f64("profile.sigma", 1.0)?)?,
                kv.f64("profile.center", 0.0)?,
                half_width,
                node_count,
            ),
            "gaussian_sum" => {
                let a = kv.list("profile.amplitudes", &[])?;
                let s = kv.list("profile.sigmas", &[])?;
                let c = kv.list("profile.centers", &[])?;
                if a.is_empty() || a.len() != s.len() || a.len() != c.len() {
                    return Err(HsError::Config(
                        "gaussian_sum needs equally long, non-empty profile.amplitudes, profile.sigmas, profile.centers"
                            .into(),
                    ));
                }
                let terms = (0..a.len())
                    .map(|i| Ok(Gaussian::new(a[i], positive("profile.sigmas", s[i])?, c[i])))
                    .collect::<Result<Vec<_>>>()?;
                ProfileSpec::new(ProfileKind::GaussianSum(terms), half_width, node_count)
            }
            "file" => {
                let rel = kv
                    .str("profile.path")
                    .ok_or_else(|| HsError::Config("profile.kind = file needs profile.path".into()))?;
                let mut path = PathBuf::from(rel);
                if path.is_relative() {
                    if let Some(b) = base {
                        path = b.join(path);
                    }
                }
                ProfileSpec::from_csv(&path)
                    .map_err(|e| HsError::Config(format!("profile file {}: {e}", path.display())))?
            }
            other => {
                return Err(HsError::Config(format!(
                    "profile.kind must be zero, gaussian, gaussian_sum or file, got `{other}`"
                )))
            }
        };
        profile.epsilon0 = positive("profile.epsilon0", kv.f64("profile.epsilon0", DEFAULT_EPSILON0)?)?;
        profile.tail_tol = positive("profile.tail_tol", kv.f64("profile.tail_tol", DEFAULT_TAIL_TOL)?)?;

        let k = KGridConfig {
            count: kv.usize("k.count", 1024)?,
            max: positive("k.max", kv.f64("k.max", 8.0)?)?,
            refine_factor: kv.usize("k.refine_factor", 4)?,
            refine_width: positive("k.refine_width", kv.f64("k.refine_width", 0.1)?)?,
        };
        if k.count < 2 {
            return Err(HsError::Config("k.count must be at least 2".into()));
        }

        let xi = kv.list("asympt.xi", &[-0.5])?;
        let t = kv.list("asympt.t", &[25.0, 50.0, 100.0, 200.0])?;
        positive_times("asympt.t", &t)?;
        let p = kv.f64("asympt.p", 3.0)?;
        if !(p > 2.0) {
            return Err(HsError::Config(format!("asympt.p must exceed 2, got {p}")));
        }

        let method = match kv.str("evolve.method").unwrap_or("fd4") {
            "fd4" => DiffMethod::FiniteDifference4,
            "spectral" => DiffMethod::Spectral,
            other => return Err(HsError::Config(format!("evolve.method must be fd4 or spectral, got `{other}`"))),
        };
        let evolve = EvolveConfig {
            times: kv.list("evolve.t", &[1.0])?,
            half_width: kv.opt_f64("evolve.L")?.map(|v| positive("evolve.L", v)).transpose()?,
            node_count: kv.usize("evolve.N", 4096)?,
            dt: kv.opt_f64("evolve.dt")?.map(|v| positive("evolve.dt", v)).transpose()?,
            check_every: kv.usize("evolve.check_every", 50)?.max(1),
            method,
        };
        positive_times("evolve.t", &evolve.times)?;

        let compare_xi = kv.list("compare.xi", &[-0.5, 0.5])?;
        let compare_t = kv.list("compare.t", &[25.0, 50.0, 100.0, 200.0])?;
        positive_times("compare.t", &compare_t)?;

        let d = Tolerances::default();
        let tol = Tolerances {
            unitarity: positive("tol.unitarity", kv.f64("tol.unitarity", d.unitarity)?)?,
            symmetry: positive("tol.symmetry", kv.f64("tol.symmetry", d.symmetry)?)?,
            slope_min: positive("tol.slope_min", kv.f64("tol.slope_min", d.slope_min)?)?,
            conservation: positive("tol.conservation", kv.f64("tol.conservation", d.conservation)?)?,
            reality: positive("tol.reality", kv.f64("tol.reality", d.reality)?)?,
            ratio: positive("tol.ratio", kv.f64("tol.ratio", d.ratio)?)?,
            decay_slope_lo: kv.f64("tol.decay_slope_lo", d.decay_slope_lo)?,
            decay_slope_hi: kv.f64("tol.decay_slope_hi", d.decay_slope_hi)?,
            fast_variation: positive("tol.fast_variation", kv.f64("tol.fast_variation", d.fast_variation)?)?,
        };
        if tol.decay_slope_lo > tol.decay_slope_hi {
            return Err(HsError::Config("tol.decay_slope_lo exceeds tol.decay_slope_hi".into()));
        }

        let threads = match kv.str("run.threads") {
            None => None,
            Some(_) => Some(kv.usize("run.threads", 0)?).filter(|&n| n > 0),
        };

        Ok(Self {
            hash: config_hash(text),
            profile,
            profile_kind: kind_name,
            k,
            xi,
            t,
            p,
            delta_stride: kv.usize("asympt.delta_stride", 8)?.max(1),
            evolve,
            compare_xi,
            compare_t,
            tol,
            out_dir: kv.str("output.dir").map(PathBuf::from),
            threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys_and_lists() {
        let text = "# run\nprofile.kind = gaussian\nprofile.A = 0.05  # small\ngrid.L = 10\ngrid.N = 1024\nasympt.xi = -1, -0.5,0.5\nasympt.p = 4\n";
        let c = RunConfig::parse(text, None).unwrap();
        assert_eq!(c.profile.half_width, 10.0);
        assert_eq!(c.profile.node_count, 1024);
        assert_eq!(c.profile.kind, ProfileKind::Gaussian(Gaussian::new(0.05, 1.0, 0.0)));
        assert_eq!(c.xi, vec![-1.0, -0.5, 0.5]);
        assert_eq!(c.p, 4.0);
        assert_eq!(c.hash.len(), 64);
        assert_eq!(c.hash, config_hash(text));
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "grid.L = -1",
            "nonsense",
            "grid.Lx = 3",
            "profile.kind = triangle",
            "asympt.t = 1, -2",
            "tol.unitarity = 0",
            "grid.N = 12.5",
            "grid.L = 1\ngrid.L = 2",
            "profile.kind = gaussian_sum\nprofile.amplitudes = 0.1\nprofile.sigmas = 1, 2\nprofile.centers = 0",
        ] {
            assert!(matches!(RunConfig::parse(bad, None), Err(HsError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn defaults_are_the_reference_run() {
        let c = RunConfig::parse("", None).unwrap();
        assert_eq!(c.k.count, 1024);
        assert_eq!(c.evolve.node_count, 4096);
        assert_eq!(c.tol, Tolerances::default());
        assert_eq!(c.compare_t, vec![25.0, 50.0, 100.0, 200.0]);
    }
}
