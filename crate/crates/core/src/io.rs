//! Symbol-spec parsing, deterministic report emission and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::symbols::{AnnuliConfig, RadialPiece, RadialSymbol, SymbolComponent, SymbolError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl From<SymbolError> for IoError {
    fn from(e: SymbolError) -> Self {
        IoError::Validation(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub pieces: Vec<PieceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PieceSpec {
    Power {
        alpha: f64,
        #[serde(default)]
        support: Option<[f64; 2]>,
    },
    Annuli {
        n_min: u32,
        n_max: u32,
        c: f64,
        #[serde(default)]
        smooth: bool,
    },
    Annulus {
        a: f64,
        rho: f64,
        d: f64,
        #[serde(default)]
        smooth: bool,
    },
}

impl PieceSpec {
    fn numbers(&self) -> Vec<(&'static str, f64)> {
        match *self {
            PieceSpec::Power { alpha, support } => {
                let mut v = vec![("alpha", alpha)];
                if let Some([lo, hi]) = support {
                    v.extend([("support[0]", lo), ("support[1]", hi)]);
                }
                v
            }
            PieceSpec::Annuli { c, .. } => vec![("c", c)],
            PieceSpec::Annulus { a, rho, d, .. } => vec![("a", a), ("rho", rho), ("d", d)],
        }
    }

    fn component(&self) -> SymbolComponent {
        match *self {
            PieceSpec::Power { alpha, support } => SymbolComponent::Piece(RadialPiece::Power {
                exponent: alpha,
                support: support.map(|[lo, hi]| (lo, hi)),
            }),
            PieceSpec::Annuli { n_min, n_max, c, smooth } => SymbolComponent::Family(AnnuliConfig {
                n_min,
                n_max,
                c,
                smooth,
            }),
            PieceSpec::Annulus { a, rho, d, smooth } => {
                let (center_radius, half_width, amplitude) = (a, rho, d);
                SymbolComponent::Piece(if smooth {
                    RadialPiece::SmoothAnnulusBump {
                        center_radius,
                        half_width,
                        amplitude,
                    }
                } else {
                    RadialPiece::AnnulusIndicator {
                        center_radius,
                        half_width,
                        amplitude,
                    }
                })
            }
        }
    }

    fn from_component(component: &SymbolComponent) -> Self {
        match component {
            SymbolComponent::Family(cfg) => PieceSpec::Annuli {
                n_min: cfg.n_min,
                n_max: cfg.n_max,
                c: cfg.c,
                smooth: cfg.smooth,
            },
            SymbolComponent::Piece(RadialPiece::Power { exponent, support }) => PieceSpec::Power {
                alpha: *exponent,
                support: support.map(|(lo, hi)| [lo, hi]),
            },
            SymbolComponent::Piece(RadialPiece::AnnulusIndicator {
                center_radius,
                half_width,
                amplitude,
            }) => PieceSpec::Annulus {
                a: *center_radius,
                rho: *half_width,
                d: *amplitude,
                smooth: false,
            },
            SymbolComponent::Piece(RadialPiece::SmoothAnnulusBump {
                center_radius,
                half_width,
                amplitude,
            }) => PieceSpec::Annulus {
                a: *center_radius,
                rho: *half_width,
                d: *amplitude,
                smooth: true,
            },
        }
    }
}

/// A parsed spec: a bare annuli family is kept as its configuration so the
/// suite can run on it directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Annuli(AnnuliConfig),
    Symbol(RadialSymbol),
}

impl Parsed {
    pub fn symbol(&self) -> Result<RadialSymbol, IoError> {
        match self {
            Parsed::Annuli(cfg) => Ok(crate::symbols::build_annuli_symbol(*cfg)?),
            Parsed::Symbol(sym) => Ok(sym.clone()),
        }
    }

    pub fn to_spec(&self) -> SymbolSpec {
        match self {
            Parsed::Annuli(cfg) => SymbolSpec {
                name: None,
                pieces: vec![PieceSpec::from_component(&SymbolComponent::Family(*cfg))],
            },
            Parsed::Symbol(sym) => SymbolSpec {
                name: Some(sym.name().to_string()),
                pieces: sym.components().iter().map(PieceSpec::from_component).collect(),
            },
        }
    }
}

pub fn parse_symbol_spec(text: &str) -> Result<Parsed, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: SymbolSpec = serde_path_to_error::deserialize(de).map_err(|e| IoError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate_spec(spec)
}

pub fn validate_spec(spec: SymbolSpec) -> Result<Parsed, IoError> {
    if spec.pieces.is_empty() {
        return Err(IoError::Validation("`pieces` must not be empty".into()));
    }
    for (i, piece) in spec.pieces.iter().enumerate() {
        for (key, v) in piece.numbers() {
            if !v.is_finite() {
                return Err(IoError::Validation(format!("pieces[{i}].{key} is not finite")));
            }
        }
    }
    if let (None, [PieceSpec::Annuli { .. }]) = (&spec.name, spec.pieces.as_slice()) {
        if let SymbolComponent::Family(cfg) = spec.pieces[0].component() {
            cfg.validate()?;
            return Ok(Parsed::Annuli(cfg));
        }
    }
    let components = spec.pieces.iter().map(PieceSpec::component).collect();
    let name = spec.name.unwrap_or_else(|| "symbol".to_string());
    Ok(Parsed::Symbol(RadialSymbol::from_components(name, components)?))
}

pub fn read_symbol_spec(path: &Path) -> Result<Parsed, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_symbol_spec(&text)
}

/// Floats at 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => write!(out, "{i}").unwrap(),
            (_, Some(u), _) => write!(out, "{u}").unwrap(),
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Deterministic JSON text: keys sorted, floats at 17 significant digits,
/// non-finite floats as `null`.
pub fn to_deterministic_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let v = serde_json::to_value(value).map_err(|e| IoError::Validation(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, IoError> {
        let csv_err = |e: csv::Error| IoError::Csv {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| IoError::Csv {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Reproducibility record. Timestamps live only in the sidecar file so
/// reports stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<f64>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    /// `config` is hashed through its deterministic JSON rendering.
    pub fn new<C: Serialize>(command: &str, config: &C, tolerances: BTreeMap<String, f64>) -> Result<Self, IoError> {
        let canonical = to_deterministic_json(config)?;
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(b"\n");
        hasher.update(canonical.as_bytes());
        Ok(Self {
            command: command.to_string(),
            config_hash: format!("{:x}", hasher.finalize()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            tolerances,
            started_unix: None,
            finished_unix: None,
        })
    }

    fn timeless(&self) -> Self {
        Self {
            started_unix: None,
            finished_unix: None,
            ..self.clone()
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Renders a JSON report with the (timestamp-free) manifest embedded under
/// `"manifest"`. Non-object reports are wrapped under `"report"`.
pub fn render_json_report<T: Serialize>(report: &T, manifest: &RunManifest) -> Result<String, IoError> {
    let mut v = serde_json::to_value(report).map_err(|e| IoError::Validation(e.to_string()))?;
    let m = serde_json::to_value(manifest.timeless()).map_err(|e| IoError::Validation(e.to_string()))?;
    let obj = match v {
        Value::Object(ref mut map) => map,
        other => {
            v = serde_json::json!({ "report": other });
            v.as_object_mut().expect("just built an object")
        }
    };
    obj.insert("manifest".into(), m);
    to_deterministic_json(&v)
}

/// Writes `body` to `out` (or stdout) and, for files, the manifest sidecar.
pub fn emit(body: &str, out: Option<&Path>, manifest: &RunManifest) -> Result<(), IoError> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, body).map_err(io_err(path))?;
            let sidecar = sidecar_path(path);
            let text = to_deterministic_json(manifest)?;
            fs::write(&sidecar, text).map_err(io_err(&sidecar))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_power_spec() {
        let p = parse_symbol_spec(r#"{"name":"power","pieces":[{"kind":"power","alpha":-1.5,"support":[0,1]}]}"#)
            .unwrap();
        match p {
            Parsed::Symbol(s) => {
                assert_eq!(s.name(), "power");
                assert_eq!(s.pieces().len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_annuli_spec() {
        let p = parse_symbol_spec(r#"{"pieces":[{"kind":"annuli","n_min":2,"n_max":200,"c":0.001,"smooth":false}]}"#)
            .unwrap();
        assert_eq!(p, Parsed::Annuli(AnnuliConfig::new(2, 200)));
    }

    #[test]
    fn rejects_large_sector_constant() {
        let e = parse_symbol_spec(r#"{"pieces":[{"kind":"annuli","n_min":2,"n_max":200,"c":0.5,"smooth":false}]}"#)
            .unwrap_err();
        assert!(matches!(e, IoError::Validation(_)), "{e}");
    }

    #[test]
    fn unknown_key_reports_path() {
        let e = parse_symbol_spec(r#"{"pieces":[{"kind":"power","alpha":1.0},{"kind":"power","alpah":1.0}]}"#)
            .unwrap_err();
        match e {
            IoError::Parse { path, .. } => assert!(path.starts_with("pieces[1]"), "{path}"),
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_symbol_spec(r#"{"pieces":[],"extra":1}"#),
            Err(IoError::Parse { .. })
        ));
        assert!(matches!(parse_symbol_spec(r#"{"pieces":[]}"#), Err(IoError::Validation(_))));
    }

    #[test]
    fn overlapping_annuli_rejected() {
        let text = r#"{"pieces":[{"kind":"annulus","a":2,"rho":0.5,"d":1},{"kind":"annulus","a":2.5,"rho":0.5,"d":1}]}"#;
        assert!(matches!(parse_symbol_spec(text), Err(IoError::Validation(_))));
    }

    #[test]
    fn json_is_deterministic_and_sorted() {
        #[derive(Serialize)]
        struct R {
            z: f64,
            a: Vec<f64>,
            passed: bool,
            n: u32,
        }
        let r = R {
            z: 0.1,
            a: vec![1.0, f64::INFINITY],
            passed: true,
            n: 3,
        };
        let s = to_deterministic_json(&r).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [\n    1.0000000000000000e0,\n    null\n  ],\n  \"n\": 3,\n  \"passed\": true,\n  \"z\": 1.0000000000000001e-1\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["z"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_quotes_per_rfc4180() {
        let mut t = Table::new(&["center", "label"]);
        t.push(vec![Cell::Float(0.5), Cell::Text("a,\"b\"".into())]);
        assert_eq!(t.to_csv().unwrap(), "center,label\n5.0000000000000000e-1,\"a,\"\"b\"\"\"\n");
    }

    #[test]
    fn manifest_hash_depends_on_config() {
        let a = RunManifest::new("heat", &(1, 2.0), BTreeMap::new()).unwrap();
        let b = RunManifest::new("heat", &(1, 2.5), BTreeMap::new()).unwrap();
        assert_eq!(a.config_hash.len(), 64);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(sidecar_path(Path::new("/tmp/x.json")), PathBuf::from("/tmp/x.json.manifest.json"));
    }
}
