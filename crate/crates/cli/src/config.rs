//! Run-configuration parsing: flat `key = value` lines grouped under
//! `[section]` headers, with strict unknown-key rejection and line-numbered
//! errors.

use pabv_core::pipeline::PipelineParams;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

/// A parse or validation failure, pointing at the offending line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a `run` invocation needs: the map, the scale list, the RNG
/// seed, the quantitative constants and thresholds, and output plumbing.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub emit_csv: bool,
    pub emit_svg: bool,
    pub emit_manifest: bool,
    pub c: f64,
    pub beta: f64,
    pub blend: f64,
    pub budget: usize,
    pub k_min: u32,
    pub k_max: u32,
    pub xi: f64,
    pub tau_geom: f64,
    pub tau_cont: f64,
    pub tau_density: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineParams::default();
        RunConfig {
            kind: "identity".to_string(),
            params: BTreeMap::new(),
            eps: vec![0.2],
            seed: p.seed,
            out_dir: PathBuf::from("out"),
            emit_csv: true,
            emit_svg: true,
            emit_manifest: true,
            c: p.c,
            beta: p.beta,
            blend: p.blend,
            budget: p.budget,
            k_min: p.k_min,
            k_max: p.k_max,
            xi: 0.1,
            tau_geom: 1e-9,
            tau_cont: pabv_core::grid::TAU_CONT,
            tau_density: pabv_core::grid::TAU_DENSITY,
        }
    }
}

impl RunConfig {
    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams {
            c: self.c,
            beta: self.beta,
            budget: self.budget,
            seed: self.seed,
            blend: self.blend,
            k_max: self.k_max,
            k_min: self.k_min,
        }
    }

    /// Serialises the config in the same format `parse_config` accepts.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        writeln!(s, "[map]").unwrap();
        writeln!(s, "kind = {}", self.kind).unwrap();
        for (k, v) in &self.params {
            writeln!(s, "{k} = {v}").unwrap();
        }
        writeln!(s, "\n[run]").unwrap();
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        writeln!(s, "eps = {}", eps.join(", ")).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "out_dir = {}", self.out_dir.display()).unwrap();
        writeln!(s, "\n[emit]").unwrap();
        writeln!(s, "csv = {}", self.emit_csv).unwrap();
        writeln!(s, "svg = {}", self.emit_svg).unwrap();
        writeln!(s, "manifest = {}", self.emit_manifest).unwrap();
        writeln!(s, "\n[constants]").unwrap();
        writeln!(s, "c = {}", self.c).unwrap();
        writeln!(s, "beta = {}", self.beta).unwrap();
        writeln!(s, "blend = {}", self.blend).unwrap();
        writeln!(s, "budget = {}", self.budget).unwrap();
        writeln!(s, "k_min = {}", self.k_min).unwrap();
        writeln!(s, "k_max = {}", self.k_max).unwrap();
        writeln!(s, "xi = {}", self.xi).unwrap();
        writeln!(s, "tau_geom = {}", self.tau_geom).unwrap();
        writeln!(s, "tau_cont = {}", self.tau_cont).unwrap();
        writeln!(s, "tau_density = {}", self.tau_density).unwrap();
        s
    }
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        msg: msg.into(),
    })
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|_| ConfigError {
            line,
            msg: format!("{key}: `{v}` is not a number"),
        })
        .and_then(|x| {
            if x.is_finite() {
                Ok(x)
            } else {
                err(line, format!("{key}: value must be finite"))
            }
        })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => err(line, format!("{key}: expected true or false, got `{v}`")),
    }
}

/// Parses the flat `key = value` config text. Unknown sections and keys are
/// rejected; omitted keys keep their defaults; the scale list is validated
/// to be in (0,1) and strictly decreasing, and budgets must be positive.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut eps_line = 0usize;
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return err(n, "unterminated section header");
            };
            section = name.trim().to_string();
            match section.as_str() {
                "map" | "run" | "emit" | "constants" => continue,
                _ => return err(n, format!("unknown section [{section}]")),
            }
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(n, "expected `key = value`");
        };
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return err(n, format!("{key}: missing value"));
        }
        match (section.as_str(), key) {
            ("", _) => return err(n, "key outside any [section]"),
            ("map", "kind") => cfg.kind = value.to_string(),
            // Any other key in [map] is a numeric parameter of the map;
            // unknown names are rejected by the catalogue constructor.
            ("map", _) => {
                cfg.params
                    .insert(key.to_string(), parse_f64(n, key, value)?);
            }
            ("run", "eps") => {
                eps_line = n;
                cfg.eps = value
                    .split([',', ' '])
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_f64(n, "eps", t))
                    .collect::<Result<_, _>>()?;
            }
            ("run", "seed") => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| ConfigError {
                        line: n,
                        msg: format!("seed: `{value}` is not a non-negative integer"),
                    })?;
            }
            ("run", "out_dir") => cfg.out_dir = PathBuf::from(value),
            ("emit", "csv") => cfg.emit_csv = parse_bool(n, key, value)?,
            ("emit", "svg") => cfg.emit_svg = parse_bool(n, key, value)?,
            ("emit", "manifest") => cfg.emit_manifest = parse_bool(n, key, value)?,
            ("constants", "c") => cfg.c = parse_f64(n, key, value)?,
            ("constants", "beta") => cfg.beta = parse_f64(n, key, value)?,
            ("constants", "blend") => cfg.blend = parse_f64(n, key, value)?,
            ("constants", "budget") => {
                cfg.budget = value.parse().map_err(|_| ConfigError {
                    line: n,
                    msg: format!("budget: `{value}` is not a positive integer"),
                })?;
                if cfg.budget == 0 {
                    return err(n, "budget must be positive");
                }
            }
            ("constants", "k_min") => {
                cfg.k_min = value.parse().map_err(|_| ConfigError {
                    line: n,
                    msg: format!("k_min: `{value}` is not an integer"),
                })?;
            }
            ("constants", "k_max") => {
                cfg.k_max = value.parse().map_err(|_| ConfigError {
                    line: n,
                    msg: format!("k_max: `{value}` is not an integer"),
                })?;
            }
            ("constants", "xi") => cfg.xi = parse_f64(n, key, value)?,
            ("constants", "tau_geom") => cfg.tau_geom = parse_f64(n, key, value)?,
            ("constants", "tau_cont") => cfg.tau_cont = parse_f64(n, key, value)?,
            ("constants", "tau_density") => cfg.tau_density = parse_f64(n, key, value)?,
            (s, k) => return err(n, format!("unknown key `{k}` in section [{s}]")),
        }
    }
    validate(&cfg, eps_line)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, eps_line: usize) -> Result<(), ConfigError> {
    if cfg.eps.is_empty() {
        return err(eps_line, "eps: at least one scale is required");
    }
    for &e in &cfg.eps {
        if !(0.0 < e && e < 1.0) {
            return err(eps_line, format!("eps: {e} is not in (0,1)"));
        }
    }
    for w in cfg.eps.windows(2) {
        if w[1] >= w[0] {
            return err(
                eps_line,
                format!("eps: list must be strictly decreasing ({} !> {})", w[0], w[1]),
            );
        }
    }
    if cfg.k_min < 1 || cfg.k_min > cfg.k_max {
        return err(0, format!("k_min..k_max range {}..{} is empty", cfg.k_min, cfg.k_max));
    }
    for (name, v) in [
        ("c", cfg.c),
        ("beta", cfg.beta),
        ("blend", cfg.blend),
        ("xi", cfg.xi),
        ("tau_geom", cfg.tau_geom),
        ("tau_cont", cfg.tau_cont),
        ("tau_density", cfg.tau_density),
    ] {
        if !(v > 0.0) {
            return err(0, format!("{name} must be positive, got {v}"));
        }
    }
    Ok(())
}

/// Reads and parses a config file.
pub fn parse_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str("[map]\nkind = identity\n[run]\neps = 0.2\n").unwrap();
        assert_eq!(cfg.kind, "identity");
        assert_eq!(cfg.eps, vec![0.2]);
        let d = RunConfig::default();
        assert_eq!(cfg.seed, d.seed);
        assert_eq!(cfg.c, d.c);
        assert_eq!(cfg.k_max, d.k_max);
        assert!(cfg.emit_svg && cfg.emit_csv && cfg.emit_manifest);
    }

    #[test]
    fn increasing_eps_list_is_rejected_with_line_number() {
        let e = parse_config_str("[run]\neps = 0.1, 0.2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("strictly decreasing"), "{e}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let e = parse_config_str("[run]\nepsilon = 0.2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("unknown key"), "{e}");
        let e = parse_config_str("[misc]\nx = 1\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("unknown section"), "{e}");
    }

    #[test]
    fn full_fracture_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.kind = "fracture".to_string();
        cfg.params.insert("d".to_string(), 0.2);
        cfg.params.insert("a".to_string(), 0.5);
        cfg.eps = vec![0.2, 0.1, 0.05];
        cfg.seed = 11;
        cfg.out_dir = PathBuf::from("artifacts/fracture");
        cfg.emit_svg = false;
        cfg.c = 32.0;
        cfg.k_max = 8;
        cfg.xi = 0.25;
        let reparsed = parse_config_str(&cfg.serialize()).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(parse_config_str("[run]\neps = 1.5\n").is_err());
        assert!(parse_config_str("[run]\neps = 0.2\n[constants]\nbudget = 0\n").is_err());
        assert!(parse_config_str("[run]\neps = 0.2\n[constants]\nbeta = -1\n").is_err());
    }
}
