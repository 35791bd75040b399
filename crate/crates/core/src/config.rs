//! Flat key-value scenario files.
//!
//! Files are TOML restricted to dotted scalar keys. Top-level keys give
//! defaults; each `[[cell]]` block overrides them for one cell. Without any
//! `[[cell]]` block the top level describes a single cell. `model.rho`,
//! `innov.kind` and `init.kind` accept an array, expanding the cell into the
//! Cartesian product.
//!
//! ```toml
//! seed = 7
//! reps = 2000
//! model.n = 150
//!
//! [[cell]]
//! innov.kind = ["iid", "garch1"]
//! init.kind = "fixed"
//! model.rho = [0.0, 0.5, 0.9]
//! ```
//!
//! | key | meaning |
//! |-----|---------|
//! | `id` | cell label |
//! | `seed`, `reps`, `alpha`, `grid_step` | simulation controls |
//! | `model.n`, `model.mu`, `model.rho` | AR(1) parameters |
//! | `innov.kind` | `iid`, `garch11`, `arch4` or a preset (`garch1`, `garch2`, `garch3`) |
//! | `innov.ma`, `innov.ar`, `innov.intercept` | GARCH(1,1) parameters |
//! | `innov.ar1` .. `innov.ar4`, `innov.intercept` | ARCH(4) parameters |
//! | `init.kind` | `fixed`, `stationary`, `scaled`, `explosive` |
//! | `init.burn_in` | truncation of the pre-sample sum |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{IcrError, Result};
use crate::inference::DEFAULT_GRID_STEP;
use crate::mc::ScenarioSpec;
use crate::tssim::{InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams};

const KEYS: &[&str] = &[
    "id",
    "seed",
    "reps",
    "alpha",
    "grid_step",
    "model.n",
    "model.mu",
    "model.rho",
    "innov.kind",
    "innov.ma",
    "innov.ar",
    "innov.intercept",
    "innov.ar1",
    "innov.ar2",
    "innov.ar3",
    "innov.ar4",
    "init.kind",
    "init.burn_in",
];

const LIST_KEYS: &[&str] = &["model.rho", "innov.kind", "init.kind"];

type Flat = BTreeMap<String, Value>;

fn flatten(prefix: &str, table: &Table, out: &mut Flat) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            _ => {
                if !KEYS.contains(&key.as_str()) {
                    return Err(IcrError::config(key, "unknown key"));
                }
                if matches!(v, Value::Array(_)) && !LIST_KEYS.contains(&key.as_str()) {
                    return Err(IcrError::config(key, "does not accept a list"));
                }
                out.insert(key, v.clone());
            }
        }
    }
    Ok(())
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(IcrError::config(key, format!("expected a number, found {v}"))),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(IcrError::config(key, format!("expected a nonnegative integer, found {v}"))),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| IcrError::config(key, format!("expected a string, found {v}")))
}

struct Cell<'a>(&'a Flat);

impl Cell<'_> {
    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.0.get(key).map_or(Ok(default), |v| as_f64(key, v))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.0.get(key).map_or(Ok(default), |v| as_u64(key, v))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.0.get(key).ok_or_else(|| IcrError::config(key, "missing")).and_then(|v| as_f64(key, v))
    }

    fn innovation(&self) -> Result<InnovationSpec> {
        let key = "innov.kind";
        let kind = match self.0.get(key) {
            Some(v) => as_str(key, v)?.to_ascii_lowercase(),
            None => "iid".into(),
        };
        let spec = match kind.as_str() {
            "iid" => InnovationSpec::Iid,
            "garch11" => InnovationSpec::Garch11 {
                ma: self.f64_req("innov.ma")?,
                ar: self.f64_req("innov.ar")?,
                intercept: self.f64_req("innov.intercept")?,
            },
            "arch4" if self.0.contains_key("innov.ar1") => InnovationSpec::Arch4 {
                ar: [
                    self.f64_req("innov.ar1")?,
                    self.f64_req("innov.ar2")?,
                    self.f64_req("innov.ar3")?,
                    self.f64_req("innov.ar4")?,
                ],
                intercept: self.f64_req("innov.intercept")?,
            },
            other => InnovationSpec::preset(other).ok_or_else(|| IcrError::config(key, format!("unknown kind `{other}`")))?,
        };
        spec.validate().map_err(|e| IcrError::config(key, e.to_string()))?;
        Ok(spec)
    }

    fn scenario(&self) -> Result<ScenarioSpec> {
        let init_kind = match self.0.get("init.kind") {
            Some(v) => {
                let s = as_str("init.kind", v)?;
                InitialCondition::parse(s).ok_or_else(|| IcrError::config("init.kind", format!("unknown kind `{s}`")))?
            }
            None => InitialCondition::Fixed0,
        };
        let burn_in = match self.0.get("init.burn_in") {
            Some(v) => match as_u64("init.burn_in", v)? {
                0 => return Err(IcrError::config("init.burn_in", "must be at least 1")),
                b => Some(b as usize),
            },
            None => None,
        };
        let n = self.u64_or("model.n", 150)?;
        let model = ModelParams { mu: self.f64_or("model.mu", 0.0)?, rho: self.f64_req("model.rho")?, n: n as usize };
        model.validate().map_err(|e| IcrError::config("model", e.to_string()))?;
        let reps = self.u64_or("reps", 2000)?;
        if reps == 0 {
            return Err(IcrError::config("reps", "must be at least 1"));
        }
        let alpha = self.f64_or("alpha", 0.05)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(IcrError::config("alpha", format!("{alpha} must lie in (0, 1)")));
        }
        let grid_step = self.f64_or("grid_step", DEFAULT_GRID_STEP)?;
        if !(grid_step > 0.0 && grid_step < 1.0) {
            return Err(IcrError::config("grid_step", format!("{grid_step} must lie in (0, 1)")));
        }
        let id = match self.0.get("id") {
            Some(v) => as_str("id", v)?.to_string(),
            None => String::new(),
        };
        let spec = ScenarioSpec {
            id,
            model,
            innov: self.innovation()?,
            init: InitialConditionSpec { kind: init_kind, burn_in },
            reps: reps as usize,
            alpha,
            seed: self.u64_or("seed", 1)?,
            grid_step,
        };
        spec.validate().map_err(|e| match e {
            IcrError::Config { .. } => e,
            other => IcrError::config("init.kind", other.to_string()),
        })?;
        Ok(spec)
    }
}

/// Expands list-valued keys into one flat map per combination.
fn expand(cell: Flat) -> Vec<Flat> {
    let mut out = vec![cell];
    for key in LIST_KEYS {
        out = out
            .into_iter()
            .flat_map(|c| match c.get(*key) {
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|item| {
                        let mut c2 = c.clone();
                        c2.insert(key.to_string(), item.clone());
                        c2
                    })
                    .collect::<Vec<_>>(),
                _ => vec![c],
            })
            .collect();
    }
    out
}

pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioSpec>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
            .unwrap_or(0);
        IcrError::Parse { path: "<scenario config>".into(), line, msg: e.message().to_string() }
    })?;
    let mut defaults = root.clone();
    let cells = defaults.remove("cell");
    let mut base = Flat::new();
    flatten("", &defaults, &mut base)?;
    let raw_cells: Vec<Flat> = match cells {
        None => vec![base.clone()],
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| match item {
                Value::Table(t) => {
                    let mut c = base.clone();
                    let mut own = Flat::new();
                    flatten("", t, &mut own)?;
                    c.extend(own);
                    Ok(c)
                }
                _ => Err(IcrError::config("cell", "each [[cell]] must be a table")),
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(IcrError::config("cell", "use [[cell]] blocks")),
    };
    let mut specs = Vec::new();
    for cell in raw_cells {
        let expanded = expand(cell);
        let many = expanded.len() > 1;
        for (k, flat) in expanded.iter().enumerate() {
            let mut spec = Cell(flat).scenario()?;
            // Keep ids unique when one labelled cell expands into several.
            if many && !spec.id.is_empty() {
                spec.id = format!("{}-{}", spec.id, k + 1);
            }
            specs.push(spec);
        }
    }
    Ok(specs)
}

pub fn read_scenarios(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| IcrError::io(path, e))?;
    parse_scenarios(&text).map_err(|e| match e {
        IcrError::Parse { line, msg, .. } => IcrError::Parse { path: path.display().to_string(), line, msg },
        other => other,
    })
}

/// Writes a single cell as a top-level key-value block.
pub fn scenario_to_config(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let num = |x: f64| format!("{x:?}");
    if !spec.id.is_empty() {
        let _ = writeln!(out, "id = {:?}", spec.id);
    }
    let _ = writeln!(out, "seed = {}", spec.seed);
    let _ = writeln!(out, "reps = {}", spec.reps);
    let _ = writeln!(out, "alpha = {}", num(spec.alpha));
    let _ = writeln!(out, "grid_step = {}", num(spec.grid_step));
    let _ = writeln!(out, "model.n = {}", spec.model.n);
    let _ = writeln!(out, "model.mu = {}", num(spec.model.mu));
    let _ = writeln!(out, "model.rho = {}", num(spec.model.rho));
    match spec.innov {
        InnovationSpec::Iid => {
            let _ = writeln!(out, "innov.kind = \"iid\"");
        }
        InnovationSpec::Garch11 { ma, ar, intercept } => {
            let _ = writeln!(out, "innov.kind = \"garch11\"");
            let _ = writeln!(out, "innov.ma = {}", num(ma));
            let _ = writeln!(out, "innov.ar = {}", num(ar));
            let _ = writeln!(out, "innov.intercept = {}", num(intercept));
        }
        InnovationSpec::Arch4 { ar, intercept } => {
            let _ = writeln!(out, "innov.kind = \"arch4\"");
            for (k, a) in ar.iter().enumerate() {
                let _ = writeln!(out, "innov.ar{} = {}", k + 1, num(*a));
            }
            let _ = writeln!(out, "innov.intercept = {}", num(intercept));
        }
    }
    let _ = writeln!(out, "init.kind = \"{}\"", spec.init.kind.label());
    if let Some(b) = spec.init.burn_in {
        let _ = writeln!(out, "init.burn_in = {b}");
    }
    out
}
