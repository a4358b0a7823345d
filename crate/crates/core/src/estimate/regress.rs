use serde::{Deserialize, Serialize};

use super::ols::{ols, OlsResult};
use crate::error::{Error, Result};
use crate::panel::{EntityAverages, EntityTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Mu,
    Kappa,
}

impl Response {
    pub fn name(self) -> &'static str {
        match self {
            Response::Mu => "mu",
            Response::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainedShare {
    pub covariate: String,
    /// Squared semi-partial correlation: the drop in r^2 when the covariate
    /// is removed.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub response: Response,
    pub ols: OlsResult,
    pub shares: Vec<ExplainedShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuKappaRegression {
    pub mu_model: ModelFit,
    pub kappa_model: ModelFit,
    /// Entities with averages but no covariate row.
    pub dropped: Vec<String>,
}

/// Responses and the selected covariate columns over entities present in both
/// inputs, in the order of `avgs`.
pub(crate) struct Design {
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub dropped: Vec<String>,
}

pub(crate) fn design(avgs: &EntityAverages, table: &EntityTable, names: &[&str]) -> Result<Design> {
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| Error::InvalidParams(format!("no covariate column '{n}'")))
        })
        .collect::<Result<_>>()?;
    let mut d = Design {
        mu: Vec::new(),
        kappa: Vec::new(),
        columns: names.iter().map(|n| (n.to_string(), Vec::new())).collect(),
        dropped: Vec::new(),
    };
    for a in &avgs.rows {
        match table.row_of(&a.entity) {
            Some(r) => {
                d.mu.push(a.mu());
                d.kappa.push(a.kappa());
                for (slot, col) in d.columns.iter_mut().zip(&cols) {
                    slot.1.push(col[r]);
                }
            }
            None => d.dropped.push(a.entity.clone()),
        }
    }
    if d.mu.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(d)
}

/// OLS with an intercept plus the semi-partial share of each covariate.
pub fn fit_with_shares(y: &[f64], columns: &[(String, Vec<f64>)], response: Response) -> Result<ModelFit> {
    let full = ols(y, columns, true)?;
    let shares = (0..columns.len())
        .map(|j| {
            let reduced: Vec<(String, Vec<f64>)> = columns
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, c)| c.clone())
                .collect();
            let r2_without = if reduced.is_empty() {
                0.0
            } else {
                ols(y, &reduced, true)?.r_squared
            };
            Ok(ExplainedShare {
                covariate: columns[j].0.clone(),
                share: (full.r_squared - r2_without).max(0.0),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ModelFit {
        response,
        ols: full,
        shares,
    })
}

/// Regresses both eigen-coordinates of the entity averages on the same
/// covariates.
pub fn regress_mu_kappa(avgs: &EntityAverages, table: &EntityTable, names: &[&str]) -> Result<MuKappaRegression> {
    let d = design(avgs, table, names)?;
    Ok(MuKappaRegression {
        mu_model: fit_with_shares(&d.mu, &d.columns, Response::Mu)?,
        kappa_model: fit_with_shares(&d.kappa, &d.columns, Response::Kappa)?,
        dropped: d.dropped,
    })
}

/// Regression of the response on `x` and `x^2`.
pub fn quadratic_term_check(
    avgs: &EntityAverages,
    table: &EntityTable,
    name: &str,
    response: Response,
) -> Result<OlsResult> {
    let d = design(avgs, table, &[name])?;
    let x = &d.columns[0].1;
    let cols = vec![
        (name.to_string(), x.clone()),
        (format!("{name}^2"), x.iter().map(|v| v * v).collect()),
    ];
    let y = match response {
        Response::Mu => &d.mu,
        Response::Kappa => &d.kappa,
    };
    ols(y, &cols, true)
}
