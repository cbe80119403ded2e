//! Line-based run configuration: `[section]` headers with `key = value`
//! pairs, expressions quoted. Round-trips through [`RunConfig::to_config_string`].
//!
//! ```text
//! [domain]
//! dim = 1
//! lengths = 1.0
//! interior_counts = 200
//!
//! [species.u]
//! growth = "15 - u - 0.1*v"
//!
//! [species.v]
//! growth = "15 - 0.1*u - v"
//!
//! [solver]
//! tol_outer = 1e-8
//! tol_inner = 1e-10
//! max_iter = 100000
//!
//! [outputs]
//! fields_path = fields.csv
//! report_path = report.json
//!
//! [sweep]            # optional
//! parameter = a
//! from = 8.0
//! to = 16.0
//! step = 0.5
//! ```

use coexist_core::expr;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "config line {}: {}", self.line, self.message)
        } else {
            write!(f, "config: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub interior_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesConfig {
    pub name: String,
    pub growth: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_iter: usize,
    /// Constant potential for eigenvalue runs (v1 restriction).
    pub potential: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_outer: 1e-8,
            tol_inner: 1e-10,
            max_iter: 100_000,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputsConfig {
    pub fields_path: PathBuf,
    pub report_path: PathBuf,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            fields_path: PathBuf::from("fields.csv"),
            report_path: PathBuf::from("report.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepConfig {
    /// Sweep values from `from` to `to` inclusive (empty when from > to).
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = self.from + self.step * k as f64;
            if v > self.to + 1e-9 * self.step {
                return out;
            }
            out.push(v);
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub species: Vec<SpeciesConfig>,
    pub solver: SolverConfig,
    pub outputs: OutputsConfig,
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut species: Vec<SpeciesConfig> = Vec::new();
        let mut solver = SolverConfig::default();
        let mut outputs = OutputsConfig::default();
        let mut sweep: Option<SweepConfig> = None;

        #[derive(PartialEq)]
        enum Section {
            None,
            Domain,
            Species(usize),
            Solver,
            Outputs,
            Sweep,
        }
        let mut section = Section::None;
        // Raw values collected per section, validated below.
        let mut dom_dim: Option<usize> = None;
        let mut dom_lengths: Option<Vec<f64>> = None;
        let mut dom_counts: Option<Vec<usize>> = None;
        let mut sweep_raw: [Option<f64>; 3] = [None, None, None];
        let mut sweep_param: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(lineno, "unterminated section header"))?
                    .trim();
                section = match name {
                    "domain" => Section::Domain,
                    "solver" => Section::Solver,
                    "outputs" => Section::Outputs,
                    "sweep" => {
                        if sweep.is_some() || sweep_param.is_some() {
                            return Err(err(lineno, "duplicate [sweep] section"));
                        }
                        Section::Sweep
                    }
                    other => match other.strip_prefix("species.") {
                        Some(sp) if !sp.trim().is_empty() => {
                            let sp = sp.trim().to_string();
                            if species.iter().any(|s| s.name == sp) {
                                return Err(err(lineno, format!("duplicate species '{sp}'")));
                            }
                            species.push(SpeciesConfig {
                                name: sp,
                                growth: String::new(),
                            });
                            Section::Species(species.len() - 1)
                        }
                        _ => return Err(err(lineno, format!("unknown section '[{other}]'"))),
                    },
                };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(lineno, "expected 'key = value'"))?;
            let key = key.trim();
            let value = value.trim();
            let unquoted = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);

            match section {
                Section::None => return Err(err(lineno, "key outside any [section]")),
                Section::Domain => match key {
                    "dim" => dom_dim = Some(parse_num(lineno, value)?),
                    "lengths" => dom_lengths = Some(parse_list(lineno, value)?),
                    "interior_counts" => {
                        dom_counts = Some(
                            parse_list(lineno, value)?
                                .into_iter()
                                .map(|v: f64| v as usize)
                                .collect(),
                        )
                    }
                    _ => return Err(err(lineno, format!("unknown domain key '{key}'"))),
                },
                Section::Species(i) => match key {
                    "growth" => species[i].growth = unquoted.to_string(),
                    _ => return Err(err(lineno, format!("unknown species key '{key}'"))),
                },
                Section::Solver => match key {
                    "tol_outer" => solver.tol_outer = parse_num(lineno, value)?,
                    "tol_inner" => solver.tol_inner = parse_num(lineno, value)?,
                    "max_iter" => solver.max_iter = parse_num::<f64>(lineno, value)? as usize,
                    "potential" => solver.potential = parse_num(lineno, value)?,
                    _ => return Err(err(lineno, format!("unknown solver key '{key}'"))),
                },
                Section::Outputs => match key {
                    "fields_path" => outputs.fields_path = PathBuf::from(unquoted),
                    "report_path" => outputs.report_path = PathBuf::from(unquoted),
                    _ => return Err(err(lineno, format!("unknown outputs key '{key}'"))),
                },
                Section::Sweep => match key {
                    "parameter" => sweep_param = Some(unquoted.to_string()),
                    "from" => sweep_raw[0] = Some(parse_num(lineno, value)?),
                    "to" => sweep_raw[1] = Some(parse_num(lineno, value)?),
                    "step" => sweep_raw[2] = Some(parse_num(lineno, value)?),
                    _ => return Err(err(lineno, format!("unknown sweep key '{key}'"))),
                },
            }
        }

        if let Some(param) = sweep_param {
            sweep = Some(SweepConfig {
                parameter: param,
                from: sweep_raw[0].ok_or_else(|| err(0, "[sweep] missing 'from'"))?,
                to: sweep_raw[1].ok_or_else(|| err(0, "[sweep] missing 'to'"))?,
                step: sweep_raw[2].ok_or_else(|| err(0, "[sweep] missing 'step'"))?,
            });
        }

        let dim = dom_dim.ok_or_else(|| err(0, "[domain] missing 'dim'"))?;
        let lengths = dom_lengths.ok_or_else(|| err(0, "[domain] missing 'lengths'"))?;
        let interior_counts = dom_counts.ok_or_else(|| err(0, "[domain] missing 'interior_counts'"))?;

        let config = RunConfig {
            domain: DomainConfig {
                dim,
                lengths,
                interior_counts,
            },
            species,
            solver,
            outputs,
            sweep,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.domain;
        if d.dim != 1 && d.dim != 2 {
            return Err(err(0, format!("dim must be 1 or 2, got {}", d.dim)));
        }
        if d.lengths.len() != d.dim || d.interior_counts.len() != d.dim {
            return Err(err(
                0,
                "lengths and interior_counts must have exactly 'dim' entries".to_string(),
            ));
        }
        if d.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(err(0, "lengths must be positive".to_string()));
        }
        if d.interior_counts.iter().any(|c| *c < 3) {
            return Err(err(0, "interior_counts must be at least 3".to_string()));
        }
        if !(self.solver.tol_outer.is_finite() && self.solver.tol_outer > 0.0)
            || !(self.solver.tol_inner.is_finite() && self.solver.tol_inner > 0.0)
        {
            return Err(err(0, "tolerances must be positive".to_string()));
        }
        if self.solver.max_iter == 0 {
            return Err(err(0, "max_iter must be at least 1".to_string()));
        }
        if !self.solver.potential.is_finite() {
            return Err(err(0, "potential must be finite".to_string()));
        }

        let n = self.species.len();
        let constants: Vec<(String, f64)> = match &self.sweep {
            Some(s) => vec![(s.parameter.clone(), s.from)],
            None => vec![],
        };
        for sp in &self.species {
            if sp.growth.trim().is_empty() {
                return Err(err(0, format!("species '{}' has no growth expression", sp.name)));
            }
            expr::parse_with_constants(&sp.growth, n.max(1), &constants).map_err(|e| {
                err(0, format!("species '{}': {e}", sp.name))
            })?;
        }

        if let Some(s) = &self.sweep {
            if !(s.step.is_finite() && s.step > 0.0) {
                return Err(err(0, "sweep step must be positive".to_string()));
            }
            if s.parameter == "u" || s.parameter == "v" || looks_like_variable(&s.parameter) {
                return Err(err(
                    0,
                    format!("sweep parameter '{}' collides with a variable name", s.parameter),
                ));
            }
            let referencing: Vec<&str> = self
                .species
                .iter()
                .filter(|sp| expr::identifiers(&sp.growth).contains(&s.parameter))
                .map(|sp| sp.name.as_str())
                .collect();
            if referencing.len() != 1 {
                return Err(err(
                    0,
                    format!(
                        "sweep parameter '{}' must appear in exactly one growth expression, found in {:?}",
                        s.parameter, referencing
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Serialize back to the config format; `parse` of the result yields an
    /// identical configuration.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str("[domain]\n");
        out.push_str(&format!("dim = {}\n", self.domain.dim));
        out.push_str(&format!("lengths = {}\n", join_f64(&self.domain.lengths)));
        out.push_str(&format!(
            "interior_counts = {}\n",
            self.domain
                .interior_counts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        for sp in &self.species {
            out.push_str(&format!("\n[species.{}]\n", sp.name));
            out.push_str(&format!("growth = \"{}\"\n", sp.growth));
        }
        out.push_str("\n[solver]\n");
        out.push_str(&format!("tol_outer = {:?}\n", self.solver.tol_outer));
        out.push_str(&format!("tol_inner = {:?}\n", self.solver.tol_inner));
        out.push_str(&format!("max_iter = {}\n", self.solver.max_iter));
        out.push_str(&format!("potential = {:?}\n", self.solver.potential));
        out.push_str("\n[outputs]\n");
        out.push_str(&format!(
            "fields_path = {}\n",
            self.outputs.fields_path.display()
        ));
        out.push_str(&format!(
            "report_path = {}\n",
            self.outputs.report_path.display()
        ));
        if let Some(s) = &self.sweep {
            out.push_str("\n[sweep]\n");
            out.push_str(&format!("parameter = {}\n", s.parameter));
            out.push_str(&format!("from = {:?}\n", s.from));
            out.push_str(&format!("to = {:?}\n", s.to));
            out.push_str(&format!("step = {:?}\n", s.step));
        }
        out
    }
}

fn looks_like_variable(name: &str) -> bool {
    name.strip_prefix('u')
        .map(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        .unwrap_or(false)
}

fn parse_num<T: std::str::FromStr>(line: usize, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| err(line, format!("malformed number '{value}'")))
}

fn parse_list(line: usize, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|v| parse_num(line, v))
        .collect()
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}
