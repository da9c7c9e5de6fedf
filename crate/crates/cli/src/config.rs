//! Problem definitions in TOML.
//!
//! ```toml
//! order = 1
//! delay = 1.0
//!
//! [[edges]]
//! id = 1
//! parent = 0
//! length = 3.0
//!
//! [[coefficients]]
//! family = "b"          # "b": undelayed term, "c": delayed term
//! order = 1             # derivative order k
//! edges = [1]           # optional, default every edge
//! kind = "constant"
//! value = [1.0, 0.0]    # complex values are [re, im]
//!
//! [history]
//! kind = "polynomial"   # monomials in t on [-delay, 0]
//! coefficients = [[1.0, 0.0], [1.0, 0.0]]
//!
//! [solver]
//! q = 8
//! tolerance = 1e-8
//! ```
//!
//! `polynomial` data are monomial coefficients in global time. `piecewise`
//! data give `breaks` and per-piece monomials in `t - breaks[i]`. Missing
//! coefficients are zero, except the leading `b` of order `n`, which every edge
//! must have.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use treedamp_core::{CoefficientSet, PiecewisePoly, SolverOptions, Tree, C64};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub order: usize,
    pub delay: f64,
    pub edges: Vec<EdgeConfig>,
    #[serde(default)]
    pub coefficients: Vec<CoefficientConfig>,
    pub history: FunctionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub id: u64,
    pub parent: u64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientConfig {
    pub family: Family,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<u64>>,
    #[serde(flatten)]
    pub function: FunctionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionConfig {
    Constant { value: [f64; 2] },
    Polynomial { coefficients: Vec<[f64; 2]> },
    Piecewise { breaks: Vec<f64>, pieces: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
}

fn default_q() -> usize {
    8
}

fn default_tolerance() -> f64 {
    1e-8
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q: default_q(),
            tolerance: default_tolerance(),
            quadrature_order: None,
            degree: None,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            q: self.q,
            degree: self.degree,
            tolerance: self.tolerance,
            quadrature_order: self.quadrature_order,
        }
    }
}

fn complex(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl FunctionConfig {
    pub fn constant(re: f64, im: f64) -> Self {
        FunctionConfig::Constant { value: [re, im] }
    }

    /// The function on `[a, b]`.
    pub fn build(&self, a: f64, b: f64) -> Result<PiecewisePoly, String> {
        match self {
            FunctionConfig::Constant { value } => Ok(PiecewisePoly::constant(a, b, complex(*value))),
            FunctionConfig::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err("polynomial needs at least one coefficient".into());
                }
                let c: Vec<C64> = coefficients.iter().copied().map(complex).collect();
                Ok(PiecewisePoly::polynomial(a, b, &c))
            }
            FunctionConfig::Piecewise { breaks, pieces } => {
                let (first, last) = match (breaks.first(), breaks.last()) {
                    (Some(f), Some(l)) => (*f, *l),
                    _ => return Err("piecewise function needs breaks".into()),
                };
                let eps = 1e-11 * a.abs().max(b.abs()).max(1.0);
                if (first - a).abs() > eps || (last - b).abs() > eps {
                    return Err(format!("breaks span [{first}, {last}], expected [{a}, {b}]"));
                }
                let pieces = pieces
                    .iter()
                    .map(|p| p.iter().copied().map(complex).collect())
                    .collect();
                PiecewisePoly::from_pieces(breaks.clone(), pieces).map_err(|e| e.to_string())
            }
        }
    }
}

/// A validated problem ready for the solvers.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub tree: Arc<Tree>,
    pub coeffs: CoefficientSet,
    pub history: PiecewisePoly,
}

impl ProblemConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::parse(origin, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Sorted edges, one explicit edge list per coefficient entry, entries
    /// sorted by family, order and edges.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        out.edges.sort_by_key(|e| e.id);
        let all: Vec<u64> = out.edges.iter().map(|e| e.id).collect();
        for c in &mut out.coefficients {
            let mut ids = c.edges.clone().unwrap_or_else(|| all.clone());
            ids.sort_unstable();
            ids.dedup();
            c.edges = Some(ids);
        }
        out.coefficients
            .sort_by(|a, b| (a.family, a.order, &a.edges).cmp(&(b.family, b.order, &b.edges)));
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize")
    }

    pub fn validate(&self) -> Result<Problem, CliError> {
        let invalid = |msg: String| CliError::Validation(msg);
        if self.order == 0 {
            return Err(invalid("order must be at least 1".into()));
        }
        if !(self.delay.is_finite() && self.delay > 0.0) {
            return Err(invalid(format!("delay must be positive, got {}", self.delay)));
        }
        if self.solver.q == 0 {
            return Err(invalid("solver.q must be at least 1".into()));
        }
        let tree = Arc::new(Tree::from_edges(
            &self.edges.iter().map(|e| (e.id, e.parent, e.length)).collect::<Vec<_>>(),
        )?);
        tree.check_delay(self.delay)?;
        let m = tree.num_edges();
        let n = self.order;

        let mut table: BTreeMap<(Family, usize, usize), PiecewisePoly> = BTreeMap::new();
        for (idx, entry) in self.coefficients.iter().enumerate() {
            if entry.order > n {
                return Err(invalid(format!(
                    "coefficients[{idx}]: order {} exceeds the equation order {n}",
                    entry.order
                )));
            }
            let ids: Vec<u64> = match &entry.edges {
                Some(ids) => ids.clone(),
                None => (1..=m).map(|j| tree.original_id(j)).collect(),
            };
            for id in ids {
                let j = tree
                    .canonical_index(id)
                    .ok_or_else(|| invalid(format!("coefficients[{idx}]: unknown edge id {id}")))?;
                let f = entry
                    .function
                    .build(0.0, tree.length(j))
                    .map_err(|e| invalid(format!("coefficients[{idx}] on edge {id}: {e}")))?;
                if table.insert((entry.family, entry.order, j), f).is_some() {
                    return Err(invalid(format!(
                        "coefficients[{idx}]: {:?}[{}] given twice for edge {id}",
                        entry.family, entry.order
                    )));
                }
            }
        }
        for j in 1..=m {
            if !table.contains_key(&(Family::B, n, j)) {
                return Err(invalid(format!(
                    "missing coefficient b[{n}] for edge {} (the leading coefficient is mandatory)",
                    tree.original_id(j)
                )));
            }
        }
        let mut take = |family, k, j: usize| {
            table
                .remove(&(family, k, j))
                .unwrap_or_else(|| PiecewisePoly::zero(0.0, tree.length(j)))
        };
        let b: Vec<Vec<PiecewisePoly>> = (0..=n).map(|k| (1..=m).map(|j| take(Family::B, k, j)).collect()).collect();
        let c: Vec<Vec<PiecewisePoly>> = (0..=n).map(|k| (1..=m).map(|j| take(Family::C, k, j)).collect()).collect();
        let coeffs = CoefficientSet::new(tree.clone(), n, self.delay, b, c)?;
        let history = self
            .history
            .build(-self.delay, 0.0)
            .map_err(|e| invalid(format!("history: {e}")))?;
        Ok(Problem {
            config: self.clone(),
            tree,
            coeffs,
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INTERVAL: &str = r#"
order = 1
delay = 1.0

[[edges]]
id = 1
parent = 0
length = 3.0

[[coefficients]]
family = "b"
order = 1
kind = "constant"
value = [1.0, 0.0]

[history]
kind = "constant"
value = [1.0, 0.0]
"#;

    fn parse(text: &str) -> Result<ProblemConfig, CliError> {
        ProblemConfig::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn parses_minimal_interval() {
        let cfg = parse(INTERVAL).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        let problem = cfg.validate().unwrap();
        assert_eq!(problem.tree.num_edges(), 1);
        assert_eq!(problem.coeffs.b(1, 1).eval(2.0, 0), C64::new(1.0, 0.0));
        assert!(problem.coeffs.c(0, 1).is_zero());
    }

    #[test]
    fn missing_leading_coefficient_is_named() {
        let text = INTERVAL.replace("order = 1\nkind", "order = 0\nkind");
        let err = parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("b[1]"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse("order = 1\ndelay = \"x\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_long_delay_and_duplicates() {
        let text = INTERVAL.replace("delay = 1.0", "delay = 3.0");
        assert!(parse(&text).unwrap().validate().is_err());
        let dup = INTERVAL.replacen("[history]", "[[coefficients]]\nfamily = \"b\"\norder = 1\nkind = \"constant\"\nvalue = [2.0, 0.0]\n\n[history]", 1);
        let err = parse(&dup).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("twice"), "{err}");
    }

    #[test]
    fn piecewise_history_must_cover_window() {
        let text = INTERVAL.replace(
            "[history]\nkind = \"constant\"\nvalue = [1.0, 0.0]",
            "[history]\nkind = \"piecewise\"\nbreaks = [-0.5, 0.0]\npieces = [[[1.0, 0.0]]]",
        );
        let err = parse(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("history"), "{err}");
    }

    fn arb_function() -> impl Strategy<Value = FunctionConfig> {
        let val = || (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| [a, b]);
        prop_oneof![
            val().prop_map(|value| FunctionConfig::Constant { value }),
            prop::collection::vec(val(), 1..4).prop_map(|coefficients| FunctionConfig::Polynomial { coefficients }),
        ]
    }

    fn arb_config() -> impl Strategy<Value = ProblemConfig> {
        (
            1usize..3,
            prop::collection::vec(1.5..4.0f64, 1..5),
            prop::collection::vec((any::<bool>(), 0usize..3, arb_function(), any::<bool>()), 0..6),
            arb_function(),
        )
            .prop_map(|(order, lengths, coeffs, history)| {
                let edges: Vec<EdgeConfig> = lengths
                    .iter()
                    .enumerate()
                    .map(|(i, &length)| EdgeConfig {
                        id: (i + 1) as u64,
                        parent: if i == 0 { 0 } else { 1 },
                        length,
                    })
                    .collect();
                let coefficients = coeffs
                    .into_iter()
                    .map(|(is_b, k, function, all)| CoefficientConfig {
                        family: if is_b { Family::B } else { Family::C },
                        order: k.min(order),
                        edges: if all { None } else { Some(vec![edges.len() as u64, 1]) },
                        function,
                    })
                    .collect();
                ProblemConfig {
                    order,
                    delay: 0.75,
                    edges: edges.into_iter().rev().collect(),
                    coefficients,
                    history,
                    solver: SolverConfig::default(),
                }
            })
    }

    proptest! {
        #[test]
        fn canonical_form_is_idempotent(cfg in arb_config()) {
            let canon = cfg.canonical();
            let text = canon.to_toml();
            let reparsed = parse(&text).unwrap();
            prop_assert_eq!(&reparsed, &canon);
            prop_assert_eq!(reparsed.canonical().to_toml(), text);
        }
    }
}
