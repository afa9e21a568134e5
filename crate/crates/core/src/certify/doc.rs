//! The `cert-v1` JSON document.
//!
//! ```json
//! {"version":"cert-v1","spec":{"d":4,"m":1,"n":16},"method":"degeneration",
//!  "vec_dim":0,"n1":4,"n2":4,"k":2,"case":"A","dim_L0":0,"children":[...]}
//! ```
//!
//! Oracle leaves carry `prime`, `seed` and `trial`. Only the root has
//! `version`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Certificate, Method};
use crate::calculus::{CaseLabel, SystemSpec, VecDim};

pub const CERT_VERSION: &str = "cert-v1";

#[derive(Debug, Error)]
pub enum CertDocError {
    #[error("unsupported certificate version {0:?}")]
    Version(Option<String>),
    #[error("node {spec}: {reason}")]
    Shape { spec: SystemSpec, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Node {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    spec: SystemSpec,
    method: String,
    vec_dim: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n1: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n2: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    case: Option<CaseLabel>,
    #[serde(default, rename = "dim_L0", skip_serializing_if = "Option::is_none")]
    dim_l0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prime: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trial: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<Node>,
}

impl Node {
    fn bare(cert: &Certificate) -> Node {
        Node {
            version: None,
            spec: cert.spec,
            method: cert.method.name().to_string(),
            vec_dim: cert.proven_dim().0,
            n1: None,
            n2: None,
            k: None,
            case: None,
            dim_l0: None,
            prime: None,
            seed: None,
            trial: None,
            children: Vec::new(),
        }
    }

    fn from_cert(cert: &Certificate) -> Node {
        let mut node = Node::bare(cert);
        match &cert.method {
            Method::OracleWitness { prime, seed, trial } => {
                node.prime = Some(*prime);
                node.seed = Some(*seed);
                node.trial = Some(*trial);
            }
            Method::Degeneration { n1, n2, k, case, dim_l0, children } => {
                node.n1 = Some(*n1);
                node.n2 = Some(*n2);
                node.k = Some(*k);
                node.case = Some(*case);
                node.dim_l0 = Some(dim_l0.0);
                node.children = children.iter().map(Node::from_cert).collect();
            }
            Method::TrivialEmpty | Method::TrivialFull => {}
        }
        node
    }

    fn into_cert(self) -> Result<Certificate, CertDocError> {
        let spec = self.spec;
        let missing = |field: &str| CertDocError::Shape { spec, reason: format!("missing {field}") };
        let method = match self.method.as_str() {
            "oracle_witness" => Method::OracleWitness {
                prime: self.prime.ok_or_else(|| missing("prime"))?,
                seed: self.seed.ok_or_else(|| missing("seed"))?,
                trial: self.trial.ok_or_else(|| missing("trial"))?,
            },
            "degeneration" => {
                let n = self.children.len();
                let children: Vec<Certificate> =
                    self.children.into_iter().map(Node::into_cert).collect::<Result<_, _>>()?;
                let children: [Certificate; 4] = children.try_into().map_err(|_| CertDocError::Shape {
                    spec,
                    reason: format!("degeneration needs 4 children, found {n}"),
                })?;
                Method::Degeneration {
                    n1: self.n1.ok_or_else(|| missing("n1"))?,
                    n2: self.n2.ok_or_else(|| missing("n2"))?,
                    k: self.k.ok_or_else(|| missing("k"))?,
                    case: self.case.ok_or_else(|| missing("case"))?,
                    dim_l0: VecDim(self.dim_l0.ok_or_else(|| missing("dim_L0"))?),
                    children: Box::new(children),
                }
            }
            "trivial_empty" => Method::TrivialEmpty,
            "trivial_full" => Method::TrivialFull,
            other => {
                return Err(CertDocError::Shape { spec, reason: format!("unknown method {other:?}") });
            }
        };
        Ok(Certificate { spec, method })
    }
}

impl Certificate {
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut root = Node::from_cert(self);
        root.version = Some(CERT_VERSION.to_string());
        serde_json::to_value(root).expect("certificate nodes serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("certificate nodes serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("certificate nodes serialize")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Certificate, CertDocError> {
        let root: Node = serde_json::from_value(value)?;
        if root.version.as_deref() != Some(CERT_VERSION) {
            return Err(CertDocError::Version(root.version));
        }
        root.into_cert()
    }

    pub fn from_json(text: &str) -> Result<Certificate, CertDocError> {
        Self::from_json_value(serde_json::from_str(text)?)
    }
}

impl Serialize for Certificate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Certificate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        Certificate::from_json_value(value).map_err(serde::de::Error::custom)
    }
}
