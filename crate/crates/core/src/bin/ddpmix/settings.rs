//! Run settings resolved from defaults, a config file and command-line flags
//! (flags win over the file, the file over defaults).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ddpmix::gibbs::{GammaPrior, SamplerConfig};
use ddpmix::measure::{StickKind, TimeScale};
use ddpmix::mixture::CenteringMeasure;
use ddpmix::{Error, Result};

/// Keys accepted in config files and their command-line flag equivalents.
pub const KEYS: &[&str] = &[
    "data",
    "date_column",
    "output",
    "telemetry",
    "checkpoint",
    "checkpoint_every",
    "chains",
    "burn_in",
    "iters",
    "thin",
    "seed",
    "stick_law",
    "theta",
    "sigma",
    "c",
    "time_scale",
    "fix_theta",
    "fix_c",
    "theta_prior",
    "c_prior",
    "centering",
    "slice_eta",
    "trans_slice_eta",
    "m_cap",
    "truncate_at_cap",
    "mh_initial_step",
];

pub type Settings = BTreeMap<String, String>;

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn insert(map: &mut Settings, key: &str, value: String, origin: &str) -> Result<()> {
    let key = key.trim().replace('-', "_");
    if !KEYS.contains(&key.as_str()) {
        return Err(usage(format!("{origin}: unknown setting `{key}`")));
    }
    map.insert(key, value);
    Ok(())
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        serde_json::Value::Null => None,
        serde_json::Value::Array(items) => {
            let parts: Option<Vec<String>> = items.iter().map(json_scalar).collect();
            parts.map(|p| p.join(","))
        }
        serde_json::Value::Object(_) => None,
    }
}

/// Parses a config file: a JSON object (scalars, or arrays for the
/// comma-separated tuple settings) or `key = value` lines with `#` comments.
pub fn parse_config(text: &str, origin: &str) -> Result<Settings> {
    let mut map = Settings::new();
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Data(format!("{origin}: {e}")))?;
        let obj = v.as_object().ok_or_else(|| Error::Data(format!("{origin}: expected a JSON object")))?;
        for (k, v) in obj {
            if v.is_null() {
                continue;
            }
            let s = json_scalar(v)
                .ok_or_else(|| Error::Data(format!("{origin}: `{k}` must be a scalar or an array of scalars")))?;
            insert(&mut map, k, s, origin)?;
        }
        return Ok(map);
    }
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Data(format!("{origin}:{}: expected key = value", i + 1)))?;
        insert(&mut map, k, v.trim().to_string(), &format!("{origin}:{}", i + 1))?;
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Overlays `flags` onto `base`.
pub fn merge(mut base: Settings, flags: Settings) -> Settings {
    base.extend(flags);
    base
}

fn num<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<Option<T>> {
    s.get(key).map(|v| v.parse::<T>().map_err(|_| usage(format!("`{key}` has invalid value `{v}`")))).transpose()
}

fn tuple(s: &Settings, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
    let Some(v) = s.get(key) else { return Ok(None) };
    let parts: std::result::Result<Vec<f64>, _> = v.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(p) if p.len() == n => Ok(Some(p)),
        _ => Err(usage(format!("`{key}` needs {n} comma-separated numbers, got `{v}`"))),
    }
}

fn flag(s: &Settings, key: &str) -> Result<Option<bool>> {
    match s.get(key).map(|v| v.to_ascii_lowercase()) {
        None => Ok(None),
        Some(v) if matches!(v.as_str(), "true" | "1" | "yes") => Ok(Some(true)),
        Some(v) if matches!(v.as_str(), "false" | "0" | "no") => Ok(Some(false)),
        Some(v) => Err(usage(format!("`{key}` must be true or false, got `{v}`"))),
    }
}

/// Sampler configuration from resolved settings.
pub fn sampler_config(s: &Settings) -> Result<SamplerConfig> {
    let mut cfg = SamplerConfig::default();
    if let Some(v) = num(s, "burn_in")? {
        cfg.burn_in = v;
    }
    if let Some(v) = num(s, "iters")? {
        cfg.iters = v;
    }
    if let Some(v) = num(s, "thin")? {
        cfg.thin = v;
    }
    if let Some(v) = num(s, "seed")? {
        cfg.rng_seed = v;
    }
    let theta: f64 = num(s, "theta")?.unwrap_or(1.0);
    cfg.stick_config.kind = match s.get("stick_law").map(String::as_str).unwrap_or("dirichlet") {
        "dirichlet" => StickKind::Dirichlet { theta },
        "pitman_yor" | "pitman-yor" => StickKind::PitmanYor { theta, sigma: num(s, "sigma")?.unwrap_or(0.25) },
        other => return Err(usage(format!("unknown stick_law `{other}` (dirichlet, pitman_yor)"))),
    };
    cfg.stick_config.time_scale = match s.get("time_scale").map(String::as_str).unwrap_or("shared") {
        "shared" => TimeScale::Shared(num(s, "c")?.unwrap_or(0.5)),
        "standard" => TimeScale::Standard,
        other => return Err(usage(format!("unknown time_scale `{other}` (shared, standard)"))),
    };
    cfg.fix_theta = num(s, "fix_theta")?;
    cfg.fix_c = num(s, "fix_c")?;
    if let Some(p) = tuple(s, "theta_prior", 2)? {
        cfg.theta_prior = GammaPrior::new(p[0], p[1])?;
    }
    if let Some(p) = tuple(s, "c_prior", 2)? {
        cfg.c_prior = GammaPrior::new(p[0], p[1])?;
    }
    if let Some(p) = tuple(s, "centering", 4)? {
        cfg.centering = CenteringMeasure::new(p[0], p[1], p[2], p[3])?;
    }
    if let Some(v) = num(s, "slice_eta")? {
        cfg.slice_eta = v;
    }
    if let Some(v) = num(s, "trans_slice_eta")? {
        cfg.trans_slice_eta = v;
    }
    if let Some(v) = num(s, "m_cap")? {
        cfg.m_cap = v;
    }
    if let Some(v) = flag(s, "truncate_at_cap")? {
        cfg.truncate_at_cap = v;
    }
    if let Some(v) = num(s, "mh_initial_step")? {
        cfg.mh_initial_step = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn path(s: &Settings, key: &str) -> Option<PathBuf> {
    s.get(key).map(PathBuf::from)
}

pub fn chains(s: &Settings) -> Result<usize> {
    let n = num(s, "chains")?.unwrap_or(1);
    if n == 0 {
        return Err(usage("chains must be at least 1"));
    }
    Ok(n)
}

pub fn checkpoint_every(s: &Settings) -> Result<usize> {
    Ok(num(s, "checkpoint_every")?.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = parse_config("burn_in = 10\n# comment\niters=20 \ntheta_prior = 3, 1\n", "kv").unwrap();
        let js = parse_config(r#"{"burn-in": 10, "iters": 20, "theta_prior": [3, 1]}"#, "js").unwrap();
        assert_eq!(sampler_config(&kv).unwrap(), sampler_config(&js).unwrap());
        assert_eq!(sampler_config(&kv).unwrap().theta_prior, GammaPrior { shape: 3.0, rate: 1.0 });
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("thin = 2\nburn_in = 50\niters = 100\n", "f").unwrap();
        let mut flags = Settings::new();
        flags.insert("thin".into(), "5".into());
        let cfg = sampler_config(&merge(file, flags)).unwrap();
        assert_eq!((cfg.thin, cfg.iters), (5, 100));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(parse_config("colour = red", "f").is_err());
        assert!(parse_config("thin 5", "f").is_err());
        let bad = parse_config("thin = five", "f").unwrap();
        assert!(sampler_config(&bad).is_err());
        let bad = parse_config("c_prior = 1", "f").unwrap();
        assert!(sampler_config(&bad).is_err());
    }

    #[test]
    fn standard_time_scale_and_pitman_yor() {
        let s = parse_config("stick_law = pitman_yor\nsigma = 0.3\ntime_scale = standard\nfix_c = 1", "f").unwrap();
        // fix_c needs a shared rate
        assert!(sampler_config(&s).is_err());
        let s = parse_config("stick_law = pitman_yor\nsigma = 0.3\ntime_scale = standard", "f").unwrap();
        let cfg = sampler_config(&s).unwrap();
        assert_eq!(cfg.stick_config.kind, StickKind::PitmanYor { theta: 1.0, sigma: 0.3 });
        assert_eq!(cfg.stick_config.time_scale, TimeScale::Standard);
    }
}
