//! INI run configuration: sections `[run]`, `[domain]`, `[targets]`, `[fit]`, `[search]`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;
use zeta_recurrence::complexfn::{build_domain, validate_scales, Domain, Polynomial, TargetFn};
use zeta_recurrence::eulerfit::FitConfig;
use zeta_recurrence::recurrence::{ExperimentSpec, Mode};
use zeta_recurrence::Complex64;

/// Every accepted key, by section.
pub const KEYS: &[(&str, &[&str])] = &[
    ("run", &["mode", "output_dir", "oracle_table", "verify_tol", "seed", "workers"]),
    ("domain", &["sigma_lo", "sigma_hi", "t_lo", "t_hi", "resolution", "margin"]),
    ("targets", &["a", "b", "d", "f_a", "f_b"]),
    ("fit", &["l", "y", "max_primes", "epsilon_fit", "sweeps"]),
    (
        "search",
        &[
            "epsilon",
            "T",
            "tau_step",
            "delta",
            "hard_primes",
            "poly_degree",
            "cert_refine",
            "scan_refine",
            "max_certify",
            "best_count",
            "target_abs_err",
            "scan_abs_err",
            "use_lattice",
            "primes",
            "theta",
            "tau_max",
        ],
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Joint,
    SelfApprox,
    ScanPhases,
    FitOnly,
    FindTau,
    Verify,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Joint => "joint",
            RunMode::SelfApprox => "self",
            RunMode::ScanPhases => "scan-phases",
            RunMode::FitOnly => "fit-only",
            RunMode::FindTau => "find-tau",
            RunMode::Verify => "verify",
        }
    }
}

impl FromStr for RunMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "joint" => RunMode::Joint,
            "self" => RunMode::SelfApprox,
            "scan-phases" => RunMode::ScanPhases,
            "fit-only" => RunMode::FitOnly,
            "find-tau" => RunMode::FindTau,
            "verify" => RunMode::Verify,
            _ => bail!("expected one of joint, self, scan-phases, fit-only, find-tau, verify, got {s:?}"),
        })
    }
}

/// Flat `section.key -> value` map after overrides.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, ks)| ks.contains(&key)).map(|(s, _)| *s)
}

fn qualify(key: &str) -> Result<String> {
    let key = key.replace('-', "_");
    if let Some((sec, k)) = key.split_once('.') {
        match KEYS.iter().find(|(s, _)| *s == sec) {
            Some((_, ks)) if ks.contains(&k) => return Ok(key),
            Some(_) => bail!("unknown key `{k}` in section [{sec}]"),
            None => bail!("unknown section [{sec}]"),
        }
    }
    section_of(&key).map(|s| format!("{s}.{key}")).ok_or_else(|| anyhow!("unknown key `{key}`"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).context("malformed config")?;
        let mut values = BTreeMap::new();
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    bail!("key `{k}` outside any section; use [run], [domain], [targets], [fit] or [search]");
                }
                continue;
            };
            let Some((_, known)) = KEYS.iter().find(|(s, _)| *s == sec) else {
                bail!("unknown section [{sec}]");
            };
            for (k, v) in props.iter() {
                if !known.contains(&k) {
                    bail!("unknown key `{k}` in section [{sec}]");
                }
                values.insert(format!("{sec}.{k}"), v.trim().to_string());
            }
        }
        Ok(RawConfig { values })
    }

    /// Applies `--key value` / `--key=value` / `--section.key value` pairs.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(flag) = arg.strip_prefix("--") else {
                bail!("unexpected argument {arg:?}; overrides take the form --key value");
            };
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| anyhow!("missing value for --{flag}"))?;
                    (flag.to_string(), v.clone())
                }
            };
            self.values.insert(qualify(&key)?, value.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.values.insert(qualify(key)?, value.to_string());
        Ok(())
    }

    /// Canonical `section.key = value` listing, sorted, used for hashing.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw<'a>(&'a self, key: &'a str) -> Option<(&'a str, &'a str)> {
        let q = qualify(key).expect("internal key list");
        self.values.get(&q).map(|v| (key, v.as_str()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((k, v)) => v.parse().map(Some).map_err(|e| anyhow!("invalid value for key `{k}`: {v:?} ({e})")),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| anyhow!("missing required key `{key}`"))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((k, v)) => v
                .split(',')
                .map(|x| x.trim().parse::<T>().map_err(|e| anyhow!("invalid value for key `{k}`: {x:?} ({e})")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn mode(&self) -> Result<RunMode> {
        self.require("mode")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.raw("output_dir").map(|(_, v)| PathBuf::from(v)).unwrap_or_else(|| PathBuf::from("zrec-out"))
    }

    pub fn oracle_table(&self) -> Option<PathBuf> {
        self.raw("oracle_table").map(|(_, v)| PathBuf::from(v))
    }

    pub fn domain(&self) -> Result<Domain> {
        let sigma_lo: f64 = self.require("sigma_lo")?;
        let sigma_hi: f64 = self.require("sigma_hi")?;
        let t_lo: f64 = self.require("t_lo")?;
        let t_hi: f64 = self.require("t_hi")?;
        let res: usize = self.get_or("resolution", 8)?;
        let d = match self.get::<f64>("margin")? {
            Some(m) => Domain::with_margin(sigma_lo, sigma_hi, t_lo, t_hi, res, m),
            None => build_domain(sigma_lo, sigma_hi, t_lo, t_hi, res),
        };
        d.map_err(|e| anyhow!("invalid [domain] section: {e}"))
    }

    pub fn fit_config(&self, epsilon: Option<f64>) -> Result<FitConfig> {
        let base = FitConfig { epsilon_fit: epsilon.map_or(FitConfig::default().epsilon_fit, |e| e / 2.0), ..FitConfig::default() };
        let cfg = FitConfig {
            l: self.get_or("l", base.l)?,
            y: self.get_or("y", base.y)?,
            max_primes: self.get_or("max_primes", base.max_primes)?,
            epsilon_fit: self.get_or("epsilon_fit", base.epsilon_fit)?,
            sweeps: self.get_or("sweeps", base.sweeps)?,
        };
        cfg.validate().map_err(|e| anyhow!("invalid [fit] section: {e}"))?;
        Ok(cfg)
    }

    /// Target pair for joint and fit-only runs.
    pub fn joint_targets(&self) -> Result<(i64, i64, TargetFn, TargetFn)> {
        let a: i64 = self.require("a")?;
        let b: i64 = self.require("b")?;
        validate_scales(a, b).map_err(|e| anyhow!("invalid keys `a`, `b`: {e}"))?;
        let f_a = parse_target(self.raw("f_a").map(|(_, v)| v).unwrap_or("1")).context("invalid value for key `f_a`")?;
        let f_b = parse_target(self.raw("f_b").map(|(_, v)| v).unwrap_or("1")).context("invalid value for key `f_b`")?;
        Ok((a, b, f_a, f_b))
    }

    pub fn experiment(&self, mode: RunMode) -> Result<ExperimentSpec> {
        let domain = self.domain()?;
        let epsilon: f64 = self.require("epsilon")?;
        let m = match mode {
            RunMode::SelfApprox => {
                let d: f64 = self.require("d")?;
                if d == 0.0 || !d.is_finite() {
                    bail!("invalid value for key `d`: must be a nonzero real");
                }
                Mode::SelfApprox { d }
            }
            _ => {
                let (a, b, f_a, f_b) = self.joint_targets()?;
                Mode::Joint { a, b, f_a, f_b }
            }
        };
        let mut s = ExperimentSpec::new(domain, m, epsilon);
        s.t_max = self.get_or("T", s.t_max)?;
        s.tau_step = self.get_or("tau_step", s.tau_step)?;
        s.fit = self.fit_config(Some(epsilon))?;
        s.delta = self.get("delta")?;
        s.hard_primes = self.get_or("hard_primes", s.hard_primes)?;
        s.poly_degree = self.get_or("poly_degree", s.poly_degree)?;
        s.cert_refine = self.get_or("cert_refine", s.cert_refine)?;
        s.scan_refine = self.get_or("scan_refine", s.scan_refine)?;
        s.max_certify = self.get_or("max_certify", s.max_certify)?;
        s.best_count = self.get_or("best_count", s.best_count)?;
        s.target_abs_err = self.get_or("target_abs_err", s.target_abs_err)?;
        s.scan_abs_err = self.get_or("scan_abs_err", s.scan_abs_err)?;
        s.use_lattice = self.get_or("use_lattice", s.use_lattice)?;
        s.seed = self.get_or("seed", s.seed)?;
        s.validate().map_err(|e| anyhow!("invalid experiment: {e}"))?;
        Ok(s)
    }
}

/// Complex number written `re`, `re+imi`, `re-imi` or `imi`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        bail!("empty complex number");
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().with_context(|| format!("bad number {t:?}"))?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse().with_context(|| format!("bad imaginary part {s:?}")),
        }
    };
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().with_context(|| format!("bad real part {:?}", &body[..i]))?;
            Ok(Complex64::new(re, imag(&body[i..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Target polynomial in `s`, given by its monomial coefficients `c0; c1; ...`.
pub fn parse_target(text: &str) -> Result<TargetFn> {
    let coeffs = text.split(';').map(parse_complex).collect::<Result<Vec<_>>>()?;
    if coeffs.len() == 1 {
        return Ok(TargetFn::constant(coeffs[0]));
    }
    Ok(TargetFn::Polynomial(Polynomial::from_monomial(coeffs)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[run]\nmode = self\n[domain]\nsigma_lo = 0.73\nsigma_hi = 0.77\nt_lo = -0.03\nt_hi = 0.03\n[targets]\nd = 1\n[search]\nepsilon = 0.8\n";

    #[test]
    fn unknown_key_is_named() {
        let e = RawConfig::parse("[search]\nepsilonn = 0.5\n").unwrap_err();
        let msg = format!("{e:#}");
        assert!(msg.contains("unknown key") && msg.contains("epsilonn"), "{msg}");
        let mut c = RawConfig::parse(BASE).unwrap();
        let e = c.apply_overrides(&["--epsilonn".into(), "1".into()]).unwrap_err();
        assert!(e.to_string().contains("unknown key `epsilonn`"));
    }

    #[test]
    fn overrides_beat_file() {
        let mut c = RawConfig::parse(BASE).unwrap();
        c.apply_overrides(&["--epsilon=0.5".into(), "--search.T".into(), "100".into(), "--tau-step".into(), "0.1".into()])
            .unwrap();
        let s = c.experiment(RunMode::SelfApprox).unwrap();
        assert_eq!(s.epsilon, 0.5);
        assert_eq!(s.t_max, 100.0);
        assert_eq!(s.tau_step, 0.1);
    }

    #[test]
    fn physical_constraints_revalidated() {
        let mut c = RawConfig::parse(BASE).unwrap();
        c.set("d", "0").unwrap();
        assert!(format!("{:#}", c.experiment(RunMode::SelfApprox).unwrap_err()).contains("`d`"));
        let mut c = RawConfig::parse(BASE).unwrap();
        c.set("a", "2").unwrap();
        c.set("b", "-2").unwrap();
        assert!(format!("{:#}", c.experiment(RunMode::Joint).unwrap_err()).contains("conjugat"));
        let mut c = RawConfig::parse(BASE).unwrap();
        c.set("sigma_lo", "0.4").unwrap();
        assert!(c.experiment(RunMode::SelfApprox).is_err());
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("0.5-0.25i").unwrap(), Complex64::new(0.5, -0.25));
        assert_eq!(parse_complex("-2i").unwrap(), Complex64::new(0.0, -2.0));
        assert_eq!(parse_complex("1e-3+2.5e-2i").unwrap(), Complex64::new(1e-3, 2.5e-2));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert!(parse_complex("1+x").is_err());
        let f = parse_target("1; 0.5i").unwrap();
        let s = Complex64::new(0.75, 0.0);
        assert!((f.eval(s) - Complex64::new(1.0, 0.375)).norm() < 1e-15);
    }
}
