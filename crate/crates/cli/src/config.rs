//! Run configuration: defaults, an optional flat `key = value` file and
//! command-line flags, resolved in that order of increasing precedence.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Observable {
    Rate,
    Probability,
    Rho11,
    Teleport,
}

impl Observable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rate" => Some(Self::Rate),
            "probability" => Some(Self::Probability),
            "rho11" => Some(Self::Rho11),
            "teleport" => Some(Self::Teleport),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Rate => "rate",
            Self::Probability => "probability",
            Self::Rho11 => "rho11",
            Self::Teleport => "teleport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Real scalar; a list turns it into a sweep axis.
    Num,
    /// Integer scalar, sweepable like `Num`.
    Int,
    /// Intrinsic grid of the observable (never an axis).
    Grid,
    Choice(&'static [&'static str]),
    Text,
}

pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub kind: Kind,
}

const fn key(name: &'static str, default: &'static str, kind: Kind) -> KeySpec {
    KeySpec { name, default, kind }
}

const TRAJECTORIES: &[&str] = &["inertial", "uniform", "asymptotic", "truncated", "static"];

const COMMON: &[KeySpec] = &[key("format", "csv", Kind::Choice(&["csv", "json"])), key("output", "-", Kind::Text)];

const WORLDLINE: &[KeySpec] = &[
    key("d", "4", Kind::Int),
    key("trajectory", "uniform", Kind::Choice(TRAJECTORIES)),
    key("a", "1", Kind::Num),
    key("width", "1", Kind::Num),
    key("tau2", "1", Kind::Num),
    key("x", "1", Kind::Num),
    key("mu", "1", Kind::Num),
    key("omega", "1", Kind::Num),
    key("rel_tol", "1e-8", Kind::Num),
    key("abs_tol", "1e-12", Kind::Num),
];

const RATE: &[KeySpec] = &[key("tau", "0", Kind::Num), key("dtau", "inf", Kind::Num)];

const PROBABILITY: &[KeySpec] = &[key("tau0", "0", Kind::Num), key("tau", "10", Kind::Num), key("delta", "1", Kind::Num)];

const OSCILLATOR: &[KeySpec] = &[
    key("m0", "1", Kind::Num),
    key("lambda0", "20", Kind::Num),
    key("lambda1", "20", Kind::Num),
    key("omega", "2.3", Kind::Num),
    key("rel_tol", "1e-6", Kind::Num),
    key("abs_tol", "1e-10", Kind::Num),
];

const RHO11: &[KeySpec] = &[key("gamma", "1e-3", Kind::Num), key("a", "6", Kind::Num), key("eta", "0:100:101", Kind::Grid)];

const TELEPORT: &[KeySpec] = &[
    key("gamma", "0.05", Kind::Num),
    key("a", "2", Kind::Num),
    key("b", "4", Kind::Num),
    key("r1", "1", Kind::Num),
    key("r2", "8", Kind::Num),
    key("alpha_re", "0.5", Kind::Num),
    key("alpha_im", "0", Kind::Num),
    key("foliation", "minkowski", Kind::Choice(&["minkowski", "quasi-rindler"])),
    key("mode", "pseudo", Kind::Choice(&["pseudo", "physical"])),
    key("tau2", "1", Kind::Num),
    key("t1", "0:10:101", Kind::Grid),
    key("mc_samples", "0", Kind::Int),
    key("seed", "0", Kind::Int),
];

/// Every key the observable accepts, with its default.
pub fn keys(obs: Observable) -> Vec<&'static KeySpec> {
    let groups: &[&[KeySpec]] = match obs {
        Observable::Rate => &[COMMON, WORLDLINE, RATE],
        Observable::Probability => &[COMMON, WORLDLINE, PROBABILITY],
        Observable::Rho11 => &[COMMON, OSCILLATOR, RHO11],
        Observable::Teleport => &[COMMON, OSCILLATOR, TELEPORT],
    };
    groups.iter().flat_map(|g| g.iter()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub raw: String,
    pub source: Source,
    pub kind: Kind,
}

/// A flag value that replaced one given in the config file.
#[derive(Debug, Clone)]
pub struct Override {
    pub key: String,
    pub file: String,
    pub flag: String,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: String,
    pub observable: Observable,
    pub config_file: Option<String>,
    pub entries: BTreeMap<String, Entry>,
    pub overrides: Vec<Override>,
    /// Swept keys in row-major order with their values.
    pub axes: Vec<(String, Vec<f64>)>,
}

pub const MAX_AXES: usize = 3;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Values of a grid or list: `start:stop:count` (inclusive) or `v1,v2,…`.
pub fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    let number = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s.trim().parse().map_err(|_| config_err(format!("key `{key}`: `{}` is not a number", s.trim())))?;
        if v.is_nan() {
            return Err(config_err(format!("key `{key}`: NaN is not allowed")));
        }
        Ok(v)
    };
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.len() {
        1 => raw.split(',').map(number).collect(),
        3 => {
            let (lo, hi) = (number(parts[0])?, number(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| config_err(format!("key `{key}`: grid count `{}` is not a positive integer", parts[2].trim())))?;
            if n == 0 || !lo.is_finite() || !hi.is_finite() {
                return Err(config_err(format!("key `{key}`: grid `{raw}` needs finite ends and a positive count")));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            let step = (hi - lo) / (n - 1) as f64;
            Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect())
        }
        _ => Err(config_err(format!("key `{key}`: expected `start:stop:count` or a comma list, got `{raw}`"))),
    }
}

fn check_value(key: &str, kind: Kind, raw: &str) -> Result<(), CliError> {
    match kind {
        Kind::Choice(options) if !options.contains(&raw) => Err(config_err(format!("key `{key}`: `{raw}` is not one of {}", options.join(", ")))),
        Kind::Num | Kind::Int | Kind::Grid => {
            let values = parse_list(key, raw)?;
            if kind == Kind::Int && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
                return Err(config_err(format!("key `{key}`: expected nonnegative integers, got `{raw}`")));
            }
            if key == "d" && values.iter().any(|&d| !(2.0..=6.0).contains(&d)) {
                return Err(config_err(format!("key `d`: dimension must be in the range 2-6, got `{raw}`")));
            }
            if kind == Kind::Grid && values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err(format!("key `{key}`: grid must be strictly ascending")));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn normalise(flag: &str) -> String {
    flag.replace('-', "_")
}

/// Flat `key = value` lines; `#` starts a comment.
fn read_file(path: &Path) -> Result<Vec<(String, String, usize)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read config file {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("{}:{}: expected `key = value`", path.display(), n + 1)))?;
        out.push((normalise(k.trim()), v.trim().to_string(), n + 1));
    }
    Ok(out)
}

/// Parse `subcommand [--config FILE] [--key value | --key=value]…`.
pub fn parse_config(args: &[String]) -> Result<RunConfig, CliError> {
    let subcommand = args.first().ok_or_else(|| config_err("missing subcommand (rate, probability, rho11, teleport, sweep)"))?.clone();
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut config_file = None;
    let mut rest = args[1..].iter();
    while let Some(arg) = rest.next() {
        let name = arg.strip_prefix("--").ok_or_else(|| config_err(format!("unexpected argument `{arg}`")))?;
        let (k, v) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = rest.next().ok_or_else(|| config_err(format!("flag `--{name}` needs a value")))?;
                (name.to_string(), v.clone())
            }
        };
        if k == "config" {
            config_file = Some(v);
        } else {
            flags.push((normalise(&k), v));
        }
    }
    let file = match &config_file {
        Some(p) => read_file(Path::new(p))?,
        None => Vec::new(),
    };

    let observable = if subcommand == "sweep" {
        let of = flags
            .iter()
            .rev()
            .find(|(k, _)| k == "of")
            .map(|(_, v)| v.clone())
            .or_else(|| file.iter().rev().find(|(k, _, _)| k == "of").map(|(_, v, _)| v.clone()))
            .ok_or_else(|| config_err("sweep needs key `of` naming rate, probability, rho11 or teleport"))?;
        Observable::parse(&of).ok_or_else(|| config_err(format!("key `of`: `{of}` is not one of rate, probability, rho11, teleport")))?
    } else {
        Observable::parse(&subcommand).ok_or_else(|| config_err(format!("unknown subcommand `{subcommand}`")))?
    };

    let specs = keys(observable);
    let spec_of = |k: &str| specs.iter().rev().find(|s| s.name == k).copied();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for s in &specs {
        entries.insert(
            s.name.to_string(),
            Entry {
                raw: s.default.to_string(),
                source: Source::Default,
                kind: s.kind,
            },
        );
    }
    let sweeping = subcommand == "sweep";
    let accept = |k: &str, origin: &str| -> Result<Option<&KeySpec>, CliError> {
        if sweeping && k == "of" {
            return Ok(None);
        }
        spec_of(k)
            .map(Some)
            .ok_or_else(|| config_err(format!("unknown key `{k}` for {} ({origin})", observable.name())))
    };
    for (k, v, line) in &file {
        if let Some(s) = accept(k, &format!("config file line {line}"))? {
            check_value(k, s.kind, v)?;
            entries.insert(
                k.clone(),
                Entry {
                    raw: v.clone(),
                    source: Source::File,
                    kind: s.kind,
                },
            );
        }
    }
    let mut overrides = Vec::new();
    for (k, v) in &flags {
        if let Some(s) = accept(k, "flag")? {
            check_value(k, s.kind, v)?;
            let previous = &entries[k];
            if previous.source == Source::File && previous.raw != *v {
                overrides.push(Override {
                    key: k.clone(),
                    file: previous.raw.clone(),
                    flag: v.clone(),
                });
            }
            entries.insert(
                k.clone(),
                Entry {
                    raw: v.clone(),
                    source: Source::Flag,
                    kind: s.kind,
                },
            );
        }
    }

    // The Monte-Carlo oracle samples the slice state, which physical mode never uses.
    if observable == Observable::Teleport && entries["mode"].raw == "physical" && parse_list("mc_samples", &entries["mc_samples"].raw)?.iter().any(|&n| n > 0.0) {
        return Err(config_err("key `mc_samples`: the Monte-Carlo oracle is only available with mode = pseudo"));
    }

    let mut axes = Vec::new();
    for (k, e) in &entries {
        if matches!(e.kind, Kind::Num | Kind::Int) {
            let values = parse_list(k, &e.raw)?;
            if values.len() > 1 {
                if !sweeping {
                    return Err(config_err(format!("key `{k}` holds several values; use `udw sweep --of {}` to sweep it", observable.name())));
                }
                axes.push((k.clone(), values));
            }
        }
    }
    if axes.len() > MAX_AXES {
        let names: Vec<_> = axes.iter().map(|(k, _)| k.as_str()).collect();
        return Err(config_err(format!("at most {MAX_AXES} sweep axes are supported, got {}", names.join(", "))));
    }
    Ok(RunConfig {
        subcommand,
        observable,
        config_file,
        entries,
        overrides,
        axes,
    })
}

impl RunConfig {
    pub fn raw(&self, key: &str) -> &str {
        &self.entries[key].raw
    }

    /// Every sweep point as a map from key to value, in lexicographic axis order.
    pub fn points(&self) -> Vec<Point> {
        let mut points = vec![Point::default()];
        for (k, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.axes.push((k.clone(), v));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// One sweep point: the swept values; everything else comes from the config.
#[derive(Debug, Clone, Default)]
pub struct Point {
    pub axes: Vec<(String, f64)>,
}

impl Point {
    pub fn num(&self, cfg: &RunConfig, key: &str) -> f64 {
        if let Some((_, v)) = self.axes.iter().find(|(k, _)| k == key) {
            return *v;
        }
        // Validated at parse time.
        parse_list(key, cfg.raw(key)).expect("validated")[0]
    }

    pub fn int(&self, cfg: &RunConfig, key: &str) -> u64 {
        self.num(cfg, key) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("k", "1,2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_list("k", "0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_list("k", "inf").unwrap(), vec![f64::INFINITY]);
        assert!(parse_list("k", "0:1").is_err());
        assert!(parse_list("k", "0:1:0").is_err());
    }

    #[test]
    fn example_rate_invocation() {
        let c = parse_config(&args("rate --d 4 --trajectory uniform --a 6 --omega 2.3 --dtau 50")).unwrap();
        assert_eq!(c.observable, Observable::Rate);
        assert_eq!(c.raw("a"), "6");
        assert_eq!(c.entries["dtau"].source, Source::Flag);
        assert_eq!(c.entries["tau"].source, Source::Default);
        assert!(c.axes.is_empty());
    }

    #[test]
    fn rejections() {
        let err = |s: &str| parse_config(&args(s)).unwrap_err().to_string();
        assert!(err("rate --d 7").contains("2-6"));
        assert!(err("rate --gamma 1").contains("unknown key `gamma`"));
        assert!(err("rate --omega 1,2").contains("udw sweep"));
        assert!(err("sweep --omega 1,2").contains("`of`"));
        assert!(err("sweep --of rate --a 1,2 --omega 1,2 --tau 0,1 --d 3,4").contains("at most 3"));
        assert!(err("teleport --foliation rindler").contains("quasi-rindler"));
        assert!(err("rho11 --eta 0,2,1").contains("ascending"));
    }

    #[test]
    fn points_are_row_major_in_key_order() {
        let c = parse_config(&args("sweep --of rate --omega 1,2,3 --a 4,5")).unwrap();
        let pts: Vec<(f64, f64)> = c.points().iter().map(|p| (p.num(&c, "a"), p.num(&c, "omega"))).collect();
        assert_eq!(pts, vec![(4.0, 1.0), (4.0, 2.0), (4.0, 3.0), (5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]);
    }
}
