//! Run configuration: a `key=value` file merged with command-line flags,
//! flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tamelocal::tamefield::TowerParams;
use tamelocal::verifier::CocycleChoice;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "pretty" => Ok(Format::Pretty),
            _ => Err(format!("unknown format '{s}' (json, csv, pretty)")),
        }
    }
}

/// Raw settings, each optional, from one source.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub p: Option<u64>,
    pub f0: Option<u64>,
    pub e: Option<u64>,
    pub f: Option<u64>,
    pub m: Option<u64>,
    pub r: Option<u64>,
    pub theta_index: Option<usize>,
    pub cocycle: Option<String>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub primes: Option<Vec<u64>>,
    pub n_values: Option<Vec<u64>>,
    pub m_values: Option<Vec<u64>>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("invalid value '{v}' for {key}"))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<u64>, String> {
    v.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| parse(key, x))
        .collect()
}

impl Settings {
    /// Reads `key=value` lines; `#` starts a comment, `-` and `_` are
    /// interchangeable in keys.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
            map.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        let mut s = Settings::default();
        for (k, v) in &map {
            match k.as_str() {
                "p" => s.p = Some(parse(k, v)?),
                "f0" => s.f0 = Some(parse(k, v)?),
                "e" => s.e = Some(parse(k, v)?),
                "f" => s.f = Some(parse(k, v)?),
                "m" => s.m = Some(parse(k, v)?),
                "r" => s.r = Some(parse(k, v)?),
                "theta_index" => s.theta_index = Some(parse(k, v)?),
                "cocycle" => s.cocycle = Some(v.clone()),
                "seed" => s.seed = Some(parse(k, v)?),
                "format" => s.format = Some(v.clone()),
                "cache_dir" => s.cache_dir = Some(PathBuf::from(v)),
                "jobs" => s.jobs = Some(parse(k, v)?),
                "primes" => s.primes = Some(parse_list(k, v)?),
                "n_values" => s.n_values = Some(parse_list(k, v)?),
                "m_values" => s.m_values = Some(parse_list(k, v)?),
                _ => return Err(format!("{}: unknown key '{k}'", path.display())),
            }
        }
        Ok(s)
    }

    /// `self` with every unset field taken from `base`.
    #[must_use]
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            p: self.p.or(base.p),
            f0: self.f0.or(base.f0),
            e: self.e.or(base.e),
            f: self.f.or(base.f),
            m: self.m.or(base.m),
            r: self.r.or(base.r),
            theta_index: self.theta_index.or(base.theta_index),
            cocycle: self.cocycle.or(base.cocycle),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            cache_dir: self.cache_dir.or(base.cache_dir),
            jobs: self.jobs.or(base.jobs),
            primes: self.primes.or(base.primes),
            n_values: self.n_values.or(base.n_values),
            m_values: self.m_values.or(base.m_values),
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub settings: Settings,
    pub cocycle: CocycleChoice,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Config {
    pub fn resolve(settings: Settings) -> Result<Self, String> {
        let seed = settings.seed.unwrap_or(0);
        let cocycle = match settings.cocycle.as_deref().unwrap_or("trivial") {
            "trivial" => CocycleChoice::Trivial,
            "cyclic" => CocycleChoice::Cyclic,
            "random" => CocycleChoice::Random(seed),
            other => {
                return Err(format!(
                    "unknown cocycle '{other}' (trivial, cyclic, random)"
                ))
            }
        };
        let format = settings.format.as_deref().unwrap_or("json").parse()?;
        let jobs = settings.jobs.unwrap_or(1);
        if jobs == 0 {
            return Err("jobs must be at least 1".into());
        }
        if let Some(dir) = &settings.cache_dir {
            std::fs::create_dir_all(dir)
                .map_err(|e| format!("cache dir {}: {e}", dir.display()))?;
            if !dir.is_dir() {
                return Err(format!("cache dir {} is not a directory", dir.display()));
            }
        }
        let cache_dir = settings.cache_dir.clone();
        Ok(Config {
            settings,
            cocycle,
            format,
            cache_dir,
            jobs,
        })
    }

    /// Tower parameters; `f0 = 1`, `m = 0` and `r = 4` by default.
    pub fn tower(&self) -> Result<TowerParams, String> {
        let s = &self.settings;
        let need = |v: Option<u64>, k: &str| v.ok_or_else(|| format!("missing --{k}"));
        Ok(TowerParams::new(
            need(s.p, "p")?,
            s.f0.unwrap_or(1),
            need(s.e, "e")?,
            need(s.f, "f")?,
            s.m.unwrap_or(0),
            s.r.unwrap_or(4),
        ))
    }
}
