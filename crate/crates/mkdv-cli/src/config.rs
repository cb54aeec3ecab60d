//! Flat `key = value` experiment configuration with total validation: a
//! config that parses cannot violate a module precondition downstream.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use mkdv_lab::estimates::check_admissible;
use mkdv_lab::flows::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Evolve,
    Norms,
    Strichartz,
    Bilinear,
    Resonance,
    Inflate,
    Continuity,
    Embed,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::Norms => "norms",
            Experiment::Strichartz => "strichartz",
            Experiment::Bilinear => "bilinear",
            Experiment::Resonance => "resonance",
            Experiment::Inflate => "inflate",
            Experiment::Continuity => "continuity",
            Experiment::Embed => "embed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "evolve" => Experiment::Evolve,
            "norms" => Experiment::Norms,
            "strichartz" => Experiment::Strichartz,
            "bilinear" => Experiment::Bilinear,
            "resonance" => Experiment::Resonance,
            "inflate" => Experiment::Inflate,
            "continuity" => Experiment::Continuity,
            "embed" => Experiment::Embed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub length: f64,
    pub n: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub s: f64,
    pub q: f64,
    pub p: f64,
    /// Time horizon T of the measured interval.
    pub t_max: f64,
    pub dt: f64,
    /// Time samples / quadrature nodes (M).
    pub samples: usize,
    pub t_eval: f64,
    pub delta: f64,
    pub sign: Sign,
    pub n_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub draws: usize,
    pub stride: usize,
    pub amplitude: f64,
    /// Spectral extent of synthetic data families.
    pub band: f64,
    /// Bump width of the bilinear pair family.
    pub width: f64,
    /// Output directory for reports and experiment artifacts.
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Canonical `key = value` listing (sorted), echoed into reports.
    pub fn echo(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("experiment", self.experiment.name().to_string());
        map.insert("L", trim_float(self.length));
        map.insert("n", self.n.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert(
            "format",
            match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Json => "json".into(),
                OutputFormat::Both => "both".into(),
            },
        );
        map.insert("s", trim_float(self.s));
        map.insert("q", trim_float(self.q));
        map.insert("p", trim_float(self.p));
        map.insert("T", trim_float(self.t_max));
        map.insert("dt", trim_float(self.dt));
        map.insert("M", self.samples.to_string());
        map.insert("t_eval", trim_float(self.t_eval));
        map.insert("delta", trim_float(self.delta));
        map.insert(
            "sign",
            match self.sign {
                Sign::Focusing => "focusing".into(),
                Sign::Defocusing => "defocusing".into(),
            },
        );
        map.insert(
            "N_list",
            self.n_list.iter().map(|v| trim_float(*v)).collect::<Vec<_>>().join(","),
        );
        map.insert(
            "eps_list",
            self.eps_list.iter().map(|v| trim_float(*v)).collect::<Vec<_>>().join(","),
        );
        map.insert("draws", self.draws.to_string());
        map.insert("stride", self.stride.to_string());
        map.insert("amplitude", trim_float(self.amplitude));
        map.insert("band", trim_float(self.band));
        map.insert("width", trim_float(self.width));
        map.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join("\n")
    }
}

fn trim_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v}");
    s
}

/// All violations found in a config, not just the first.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "L",
    "n",
    "seed",
    "format",
    "s",
    "q",
    "p",
    "T",
    "dt",
    "M",
    "t_eval",
    "delta",
    "sign",
    "N_list",
    "eps_list",
    "draws",
    "stride",
    "amplitude",
    "band",
    "width",
    "out",
];

/// Parse and fully validate a flat `key = value` config. Later occurrences of
/// a key override earlier ones, which is how CLI flags layer on top of a file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            errors.push(format!("line {}: unknown key `{key}`", lineno + 1));
            continue;
        }
        map.insert(key.to_string(), value.to_string());
    }

    let Some(exp_name) = map.get("experiment") else {
        errors.push(
            "missing required key `experiment` (one of: evolve, norms, strichartz, bilinear, \
             resonance, inflate, continuity, embed); all other keys have per-experiment defaults"
                .to_string(),
        );
        return Err(ConfigErrors(errors));
    };
    let Some(experiment) = Experiment::from_name(exp_name) else {
        errors.push(format!(
            "experiment `{exp_name}` is not one of: evolve, norms, strichartz, bilinear, \
             resonance, inflate, continuity, embed"
        ));
        return Err(ConfigErrors(errors));
    };

    let mut cfg = defaults_for(experiment);

    // Typed extraction with per-key error messages.
    macro_rules! get {
        ($key:literal, $field:expr, $parse:expr, $ty:literal) => {
            if let Some(v) = map.get($key) {
                match $parse(v.as_str()) {
                    Some(parsed) => $field = parsed,
                    None => errors.push(format!(
                        "key `{}`: expected {}, got `{v}`",
                        $key, $ty
                    )),
                }
            }
        };
    }

    let parse_f64 = |v: &str| -> Option<f64> {
        match v {
            "inf" | "infinity" => Some(f64::INFINITY),
            _ => v.parse::<f64>().ok().filter(|x| !x.is_nan()),
        }
    };
    let parse_usize = |v: &str| v.parse::<usize>().ok();
    let parse_u64 = |v: &str| v.parse::<u64>().ok();
    let parse_list = |v: &str| -> Option<Vec<f64>> {
        let parts: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if parts.is_empty() {
            return None;
        }
        parts.iter().map(|p| parse_f64(p)).collect()
    };
    let parse_sign = |v: &str| -> Option<Sign> {
        match v {
            "focusing" | "+1" | "1" => Some(Sign::Focusing),
            "defocusing" | "-1" => Some(Sign::Defocusing),
            _ => None,
        }
    };
    let parse_format = |v: &str| -> Option<OutputFormat> {
        match v {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            "both" => Some(OutputFormat::Both),
            _ => None,
        }
    };

    get!("L", cfg.length, parse_f64, "a positive real");
    get!("n", cfg.n, parse_usize, "a power-of-two integer");
    get!("seed", cfg.seed, parse_u64, "a 64-bit unsigned integer");
    get!("format", cfg.format, parse_format, "csv | json | both");
    get!("s", cfg.s, parse_f64, "a real");
    get!("q", cfg.q, parse_f64, "a real in [1, inf]");
    get!("p", cfg.p, parse_f64, "a real in [1, inf]");
    get!("T", cfg.t_max, parse_f64, "a positive real");
    get!("dt", cfg.dt, parse_f64, "a positive real");
    get!("M", cfg.samples, parse_usize, "a positive integer");
    get!("t_eval", cfg.t_eval, parse_f64, "a positive real");
    get!("delta", cfg.delta, parse_f64, "a real in [1e-3, 1)");
    get!("sign", cfg.sign, parse_sign, "focusing | defocusing | +1 | -1");
    get!("N_list", cfg.n_list, parse_list, "a comma-separated list of reals");
    get!("eps_list", cfg.eps_list, parse_list, "a comma-separated list of reals");
    get!("draws", cfg.draws, parse_usize, "a positive integer");
    get!("stride", cfg.stride, parse_usize, "a positive integer");
    get!("amplitude", cfg.amplitude, parse_f64, "a positive real");
    get!("band", cfg.band, parse_f64, "a positive real");
    get!("width", cfg.width, parse_f64, "a positive real");
    if let Some(v) = map.get("out") {
        cfg.out = Some(PathBuf::from(v));
    }

    validate(&cfg, &mut errors);

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn defaults_for(experiment: Experiment) -> RunConfig {
    let mut cfg = RunConfig {
        experiment,
        length: 128.0,
        n: 4096,
        seed: 20260808,
        format: OutputFormat::Both,
        s: 0.0,
        q: 2.0,
        p: 8.0,
        t_max: 1.0,
        dt: 1e-3,
        samples: 256,
        t_eval: 0.1,
        delta: 1e-2,
        sign: Sign::Defocusing,
        n_list: vec![],
        eps_list: vec![1e-2, 1e-3, 1e-4],
        draws: 20,
        stride: 10,
        amplitude: 0.1,
        band: 20.0,
        width: 0.5,
        out: None,
    };
    match experiment {
        Experiment::Evolve => {
            cfg.length = 64.0;
            cfg.n = 1024;
            cfg.band = 8.0;
        }
        Experiment::Norms => {
            cfg.length = 256.0;
            cfg.n = 8192;
            cfg.band = 64.0;
            cfg.s = 0.25;
            cfg.draws = 50;
        }
        Experiment::Strichartz => {
            cfg.length = 256.0;
            cfg.n = 131072;
            cfg.q = 4.0;
            cfg.n_list = vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
        }
        Experiment::Bilinear => {
            cfg.length = 8192.0;
            cfg.n = 131072;
            cfg.t_max = 1.0;
            cfg.samples = 1024;
            cfg.draws = 3;
            cfg.n_list = vec![4.0, 8.0, 16.0, 32.0];
        }
        Experiment::Resonance => {
            cfg.draws = 10_000;
        }
        Experiment::Inflate => {
            cfg.n_list = vec![16.0, 32.0, 64.0, 128.0, 256.0];
            cfg.samples = 128;
        }
        Experiment::Continuity => {
            cfg.length = 64.0;
            cfg.n = 1024;
            cfg.band = 8.0;
            cfg.s = 0.25;
            cfg.t_max = 0.1;
            cfg.dt = 2e-3;
            cfg.stride = 10;
            cfg.amplitude = 0.05;
        }
        Experiment::Embed => {
            cfg.length = 256.0;
            cfg.n = 8192;
            cfg.band = 64.0;
            cfg.q = 4.0;
            cfg.draws = 100;
        }
    }
    cfg
}

fn validate(cfg: &RunConfig, errors: &mut Vec<String>) {
    if !(cfg.length.is_finite() && cfg.length > 0.0) {
        errors.push(format!("L must be positive and finite, got {}", cfg.length));
    }
    if cfg.n < 4 || !cfg.n.is_power_of_two() {
        errors.push(format!("n must be a power of two >= 4, got {}", cfg.n));
    }
    let max_xi = std::f64::consts::PI * cfg.n as f64 / cfg.length;
    let dxi = 2.0 * std::f64::consts::PI / cfg.length;
    let needs_modulation = matches!(
        cfg.experiment,
        Experiment::Norms | Experiment::Inflate | Experiment::Continuity | Experiment::Embed
    );
    if needs_modulation && dxi > 0.25 {
        errors.push(format!(
            "frequency spacing 2*pi/L = {dxi:.4} > 1/4: modulation norms need >= 4 modes per \
             unit box (L >= {:.1})",
            8.0 * std::f64::consts::PI
        ));
    }
    match cfg.experiment {
        Experiment::Evolve | Experiment::Continuity => {
            if !(cfg.dt > 0.0 && cfg.t_max > 0.0) {
                errors.push("dt and T must be positive".into());
            } else {
                let steps_f = cfg.t_max / cfg.dt;
                let steps = steps_f.round();
                if steps < 1.0 || (steps_f - steps).abs() > 1e-9 * steps_f {
                    errors.push(format!(
                        "dt = {} must divide T = {} into whole steps",
                        cfg.dt, cfg.t_max
                    ));
                } else if cfg.stride == 0 || !(steps as usize).is_multiple_of(cfg.stride) {
                    errors.push(format!(
                        "stride = {} must divide the {} time steps",
                        cfg.stride, steps
                    ));
                }
            }
            if cfg.band * 1.05 > max_xi / 2.0 {
                errors.push(format!(
                    "band = {} does not fit the dealiasing band {:.2} on this grid",
                    cfg.band,
                    max_xi / 2.0
                ));
            }
            if cfg.amplitude.is_nan() || cfg.amplitude <= 0.0 {
                errors.push("amplitude must be positive".into());
            }
            if cfg.experiment == Experiment::Continuity {
                if cfg.eps_list.is_empty() {
                    errors.push("eps_list must be nonempty".into());
                }
                if !(1e-3..1.0).contains(&cfg.delta) {
                    errors.push(format!("delta must lie in [1e-3, 1), got {}", cfg.delta));
                }
                if cfg.q < 1.0 {
                    errors.push(format!("q must lie in [1, inf], got {}", cfg.q));
                }
            }
        }
        Experiment::Norms | Experiment::Embed => {
            if cfg.band > max_xi {
                errors.push(format!(
                    "band = {} exceeds the grid frequency range {max_xi:.1}",
                    cfg.band
                ));
            }
            if cfg.draws < 2 {
                errors.push("draws must be >= 2".into());
            }
            if cfg.q < 1.0 {
                errors.push(format!("q must lie in [1, inf], got {}", cfg.q));
            }
        }
        Experiment::Strichartz => {
            if let Err(e) = check_admissible(cfg.p, cfg.q) {
                errors.push(e.to_string());
            }
            if cfg.n_list.len() < 3 {
                errors.push("N_list needs at least 3 dyadic bands".into());
            }
            for &nv in &cfg.n_list {
                let as_int = nv.round();
                if (nv - as_int).abs() > 0.0 || as_int < 1.0 || !(as_int as u64).is_power_of_two()
                {
                    errors.push(format!("N_list entries must be dyadic integers, got {nv}"));
                } else if nv > max_xi {
                    errors.push(format!(
                        "band N = {nv} exceeds the grid frequency range {max_xi:.1}"
                    ));
                } else if 4.0 * nv >= 2.0 * max_xi {
                    errors.push(format!(
                        "L^4 quadrature for band N = {nv} aliases on this grid; \
                         need 2*pi*n/L > {}",
                        4.0 * nv
                    ));
                }
            }
            if cfg.samples < 2 {
                errors.push("M must be >= 2 time samples".into());
            }
            if cfg.t_max.is_nan() || cfg.t_max <= 0.0 {
                errors.push("T must be positive".into());
            }
            if cfg.draws == 0 {
                errors.push("draws must be >= 1".into());
            }
        }
        Experiment::Bilinear => {
            if cfg.n_list.len() < 3 {
                errors.push("N_list needs at least 3 separations".into());
            }
            for &l in &cfg.n_list {
                if l.is_nan() || l <= 0.0 {
                    errors.push(format!("separations must be positive, got {l}"));
                } else if l + 1.5 * cfg.width > max_xi {
                    errors.push(format!(
                        "separation {l} with width {} exceeds the grid band {max_xi:.1}",
                        cfg.width
                    ));
                }
            }
            if cfg.width.is_nan() || cfg.width <= 0.0 {
                errors.push("width must be positive".into());
            }
            if cfg.samples < 2 {
                errors.push("M must be >= 2 time samples".into());
            }
        }
        Experiment::Resonance => {
            if cfg.draws == 0 {
                errors.push("draws must be >= 1".into());
            }
        }
        Experiment::Inflate => {
            if cfg.n_list.len() < 3 {
                errors.push("N_list needs at least 3 bump frequencies".into());
            }
            for &nv in &cfg.n_list {
                if nv < 8.0 {
                    errors.push(format!("bump frequency N must be >= 8, got {nv}"));
                }
            }
            if cfg.samples < 64 {
                errors.push(format!("M must be >= 64 quadrature nodes, got {}", cfg.samples));
            }
            if cfg.t_eval.is_nan() || cfg.t_eval <= 0.0 {
                errors.push("t_eval must be positive".into());
            }
            if cfg.q < 1.0 {
                errors.push(format!("q must lie in [1, inf], got {}", cfg.q));
            }
        }
    }
}
