//! JSON schemas for inputs and small CSV helpers.

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cluster::Graph;
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeUnitary, C64};
use crate::resource::{default_usqz, paper_profile, ResourceSpec, SqueezingProfile};
use crate::secret::{SecretState, SharingNetwork};

/// Parses JSON, reporting failures as `source:line:column: message`.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
        Error::Parse(format!("{source}:{}:{}: {msg}", e.line(), e.column()))
    })
}

fn rows_to_matrix(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim {
        return Err(Error::Parse(format!(
            "`{field}` has {} rows, expected {dim}",
            rows.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Parse(format!(
                "`{field}` row {i} has {} entries, expected {dim}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// `{"dim", "re", "im"}`, rows of the real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    /// Replace the matrix with its nearest unitary before validation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub project: bool,
}

impl UnitaryJson {
    pub fn from_unitary(u: &ModeUnitary) -> Self {
        Self {
            dim: u.dim(),
            re: matrix_to_rows(&u.re()),
            im: matrix_to_rows(&u.im()),
            project: false,
        }
    }

    pub fn to_unitary(&self) -> Result<ModeUnitary> {
        let re = rows_to_matrix(&self.re, self.dim, "re")?;
        let im = rows_to_matrix(&self.im, self.dim, "im")?;
        if self.project {
            let m = re.zip_map(&im, C64::new);
            Ok(ModeUnitary::nearest(&m)?.0)
        } else {
            ModeUnitary::from_parts(&re, &im)
        }
    }
}

/// `{"dim", "data"}` for real square matrices of size `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub data: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dim: m.nrows(),
            data: matrix_to_rows(m),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        rows_to_matrix(&self.data, self.dim, "data")
    }

    pub fn to_covariance(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::new(self.to_matrix()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UsqzJson {
    Named(String),
    Matrix(UnitaryJson),
}

impl Default for UsqzJson {
    fn default() -> Self {
        Self::Named("default".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossJson {
    Uniform(f64),
    PerMode(Vec<f64>),
}

impl Default for LossJson {
    fn default() -> Self {
        Self::Uniform(0.0)
    }
}

impl LossJson {
    pub fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            Self::Uniform(v) => vec![*v; n],
            Self::PerMode(v) => v.clone(),
        }
    }
}

/// Resource description. Without `profile_db` the shipped profile is used,
/// rescaled to `leading_db` when given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceJson {
    pub profile_db: Option<Vec<f64>>,
    pub leading_db: Option<f64>,
    pub u_sqz: UsqzJson,
    pub loss: LossJson,
    pub dark_noise: f64,
}

impl ResourceJson {
    pub fn profile(&self) -> Result<SqueezingProfile> {
        match (&self.profile_db, self.leading_db) {
            (Some(db), None) => SqueezingProfile::from_db(db),
            (Some(db), Some(lead)) => SqueezingProfile::from_db(db)?.scaled_to_leading_db(lead),
            (None, lead) => paper_profile(lead.unwrap_or(crate::resource::SHIPPED_LEADING_DB)),
        }
    }

    pub fn to_spec(&self) -> Result<ResourceSpec> {
        let profile = self.profile()?;
        let n = profile.len();
        let u = match &self.u_sqz {
            UsqzJson::Named(name) if name == "default" => default_usqz(n),
            UsqzJson::Named(name) => {
                return Err(Error::Parse(format!(
                    "unknown u_sqz `{name}`; use \"default\" or a unitary object"
                )))
            }
            UsqzJson::Matrix(m) => m.to_unitary()?,
        };
        ResourceSpec::new(profile, u, self.loss.expand(n), self.dark_noise)
    }
}

/// `{"n", "edges": [[i, j, w], ...]}` with 0-indexed nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphJson {
    pub fn from_graph(g: &Graph) -> Self {
        Self {
            n: g.n(),
            edges: g.edges(),
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        Graph::from_edges(self.n, &self.edges)
    }
}

fn default_dealer() -> usize {
    5
}

/// A unitary object extended with `dealer_index` and `secret`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub project: bool,
    #[serde(default = "default_dealer")]
    pub dealer_index: usize,
    #[serde(default)]
    pub secret: SecretState,
}

impl NetworkJson {
    pub fn from_network(net: &SharingNetwork) -> Self {
        let u = UnitaryJson::from_unitary(net.unitary());
        Self {
            dim: u.dim,
            re: u.re,
            im: u.im,
            project: false,
            dealer_index: net.dealer(),
            secret: net.secret(),
        }
    }

    pub fn to_network(&self) -> Result<SharingNetwork> {
        let u = UnitaryJson {
            dim: self.dim,
            re: self.re.clone(),
            im: self.im.clone(),
            project: self.project,
        }
        .to_unitary()?;
        SharingNetwork::new(u, self.dealer_index, self.secret)
    }
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Comma-separated table with a header line and `\n` line endings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Rows as JSON objects keyed by the header; numeric cells become numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| {
                        let val = v
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map(serde_json::Value::Number)
                            .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                        (k.clone(), val)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secret::u6se;

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_json::<GraphJson>("{\n  \"n\": 3,\n  \"edges\": [[0, 1]]\n}", "g.json")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("g.json:3:"), "{msg}");
        let err = parse_json::<GraphJson>("{\"n\": 3, \"edge\": []}", "g.json").unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn unitary_round_trip() {
        let u = u6se();
        let text = serde_json::to_string(&UnitaryJson::from_unitary(&u)).unwrap();
        let back = parse_json::<UnitaryJson>(&text, "u")
            .unwrap()
            .to_unitary()
            .unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn non_unitary_needs_projection() {
        let printed = crate::secret::u6se_printed();
        let mut j = UnitaryJson {
            dim: 6,
            re: matrix_to_rows(&printed.map(|c| c.re)),
            im: matrix_to_rows(&printed.map(|c| c.im)),
            project: false,
        };
        assert!(matches!(j.to_unitary(), Err(Error::NonUnitary { .. })));
        j.project = true;
        assert_eq!(j.to_unitary().unwrap(), u6se());
    }

    #[test]
    fn resource_defaults() {
        let r: ResourceJson = parse_json("{}", "r").unwrap();
        let spec = r.to_spec().unwrap();
        assert_eq!(spec.dim(), 16);
        let r: ResourceJson = parse_json(
            r#"{"profile_db": [-3, -1], "loss": [0.1, 0.2], "u_sqz": "default"}"#,
            "r",
        )
        .unwrap();
        assert_eq!(r.to_spec().unwrap().dim(), 2);
        let r: ResourceJson = parse_json(r#"{"u_sqz": "other"}"#, "r").unwrap();
        assert!(r.to_spec().is_err());
    }

    #[test]
    fn network_defaults() {
        let mut j = NetworkJson::from_network(&SharingNetwork::standard());
        let text = serde_json::to_string(&j).unwrap();
        let net = parse_json::<NetworkJson>(&text, "n")
            .unwrap()
            .to_network()
            .unwrap();
        assert_eq!(net, SharingNetwork::standard());
        j.dealer_index = 9;
        assert!(j.to_network().is_err());
    }

    #[test]
    fn table_output() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x".into(), fmt_float(0.25)]);
        assert_eq!(t.to_csv(), "a,b\nx,0.25\n");
        assert_eq!(t.to_json()[0]["b"], 0.25);
        assert_eq!(fmt_float(-0.0), "0");
    }
}
