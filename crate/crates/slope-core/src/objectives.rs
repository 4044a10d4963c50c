//! Smooth convex loss families: least squares, logistic, Poisson, and
//! multinomial, together with data standardization and deviance accounting.
//!
//! Losses are unnormalized (no 1/n factor) so that the penalty entry point
//! sigma_max applies verbatim to the gradient at zero. The multinomial
//! coefficient matrix is flattened column-major and penalized as one vector of
//! length p * K.

use serde::Serialize;

use crate::design::{Design, DesignMatrix};
use crate::error::{Result, SlopeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Logistic,
    Poisson,
    Multinomial,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Gaussian => "gaussian",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
            Family::Multinomial => "multinomial",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = SlopeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            "multinomial" => Ok(Family::Multinomial),
            other => Err(SlopeError::InvalidParameter(format!(
                "unknown family '{other}'"
            ))),
        }
    }
}

/// Family-typed response vector.
#[derive(Debug, Clone)]
pub enum Response {
    Gaussian { values: Vec<f64>, centered: bool },
    Logistic { values: Vec<f64> },
    Poisson { values: Vec<f64> },
    /// Labels are stored zero-based; external formats use 1..=K.
    Multinomial { labels: Vec<usize>, classes: usize },
}

impl Response {
    /// Validates raw numeric labels against a family. Multinomial labels are
    /// expected in 1..=K and are re-based internally.
    pub fn from_values(family: Family, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SlopeError::InvalidParameter("empty response".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SlopeError::NonFinite("response"));
        }
        match family {
            Family::Gaussian => Ok(Response::Gaussian {
                values,
                centered: false,
            }),
            Family::Logistic => {
                if values.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(SlopeError::InvalidParameter(
                        "logistic response must be binary 0/1".into(),
                    ));
                }
                Ok(Response::Logistic { values })
            }
            Family::Poisson => {
                if values.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                    return Err(SlopeError::InvalidParameter(
                        "poisson response must be nonnegative integers".into(),
                    ));
                }
                Ok(Response::Poisson { values })
            }
            Family::Multinomial => {
                let mut classes = 0usize;
                let mut labels = Vec::with_capacity(values.len());
                for &v in &values {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(SlopeError::InvalidParameter(
                            "multinomial labels must be integers in 1..=K".into(),
                        ));
                    }
                    let label = v as usize;
                    classes = classes.max(label);
                    labels.push(label - 1);
                }
                if classes < 2 {
                    return Err(SlopeError::InvalidParameter(
                        "multinomial response needs at least two classes".into(),
                    ));
                }
                Ok(Response::Multinomial { labels, classes })
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Response::Gaussian { .. } => Family::Gaussian,
            Response::Logistic { .. } => Family::Logistic,
            Response::Poisson { .. } => Family::Poisson,
            Response::Multinomial { .. } => Family::Multinomial,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Response::Gaussian { values, .. } => values.len(),
            Response::Logistic { values } => values.len(),
            Response::Poisson { values } => values.len(),
            Response::Multinomial { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of linear predictor columns: 1, or K for multinomial.
    pub fn classes(&self) -> usize {
        match self {
            Response::Multinomial { classes, .. } => *classes,
            _ => 1,
        }
    }
}

/// Coefficient vector; p entries for single-response families, p * K flattened
/// column-major for multinomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    values: Vec<f64>,
    predictors: usize,
    classes: usize,
}

impl Coefficients {
    pub fn zeros(predictors: usize, classes: usize) -> Self {
        Self {
            values: vec![0.0; predictors * classes],
            predictors,
            classes,
        }
    }

    pub fn from_vec(values: Vec<f64>, predictors: usize, classes: usize) -> Result<Self> {
        if values.len() != predictors * classes {
            return Err(SlopeError::DimensionMismatch {
                context: "Coefficients::from_vec",
                expected: predictors * classes,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SlopeError::NonFinite("coefficients"));
        }
        Ok(Self {
            values,
            predictors,
            classes,
        })
    }

    pub fn predictors(&self) -> usize {
        self.predictors
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, predictor: usize, class: usize) -> f64 {
        self.values[class * self.predictors + predictor]
    }

    pub fn nonzero_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Centers dense columns to mean zero and rescales every column to unit ℓ2
/// norm; sparse designs are scaled only. Gaussian responses are centered to
/// mean zero. Constant columns are rejected with their index.
pub fn standardize(design: &Design, response: &Response) -> Result<(Design, Response)> {
    let n = design.n();
    if n < 2 {
        return Err(SlopeError::InvalidParameter(
            "standardization needs at least two observations".into(),
        ));
    }
    if response.len() != n {
        return Err(SlopeError::DimensionMismatch {
            context: "standardize",
            expected: n,
            got: response.len(),
        });
    }
    let p = design.p();
    let mut centers = vec![0.0; p];
    let mut scales = vec![1.0; p];

    let matrix = match &design.matrix {
        DesignMatrix::Dense(m) => {
            let mut out = m.clone();
            for j in 0..p {
                let col = out.col_mut(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                for x in col.iter_mut() {
                    *x -= mean;
                }
                let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= 1e-10 * (1.0 + mean.abs()) {
                    return Err(SlopeError::ConstantColumn { index: j });
                }
                for x in col.iter_mut() {
                    *x /= norm;
                }
                centers[j] = mean;
                scales[j] = norm;
            }
            DesignMatrix::Dense(out)
        }
        DesignMatrix::Sparse(m) => {
            let mut out = m.clone();
            for j in 0..p {
                let (_, vals) = out.col(j);
                let norm = vals.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= 1e-12 {
                    return Err(SlopeError::ConstantColumn { index: j });
                }
                out.scale_col(j, 1.0 / norm);
                scales[j] = norm;
            }
            DesignMatrix::Sparse(out)
        }
    };
    let centered = matches!(matrix, DesignMatrix::Dense(_));

    let response = match response {
        Response::Gaussian { values, .. } => {
            let mean = values.iter().sum::<f64>() / n as f64;
            Response::Gaussian {
                values: values.iter().map(|y| y - mean).collect(),
                centered: true,
            }
        }
        other => other.clone(),
    };

    Ok((
        Design {
            matrix,
            column_centers: centers,
            column_scales: scales,
            standardized: true,
            centered,
        },
        response,
    ))
}

/// Linear predictors eta = X * beta, one column per class (n * K,
/// column-major). `subset` lists flattened coefficient positions; only those
/// coefficients contribute.
pub(crate) fn linear_predictor(
    design: &Design,
    subset: &[usize],
    coef: &[f64],
    classes: usize,
) -> Vec<f64> {
    let n = design.n();
    let p = design.p();
    let mut eta = vec![0.0; n * classes];
    for (t, &v) in subset.iter().enumerate() {
        let j = v % p;
        let class = v / p;
        design.col_axpy(j, coef[t], &mut eta[class * n..(class + 1) * n]);
    }
    eta
}

/// Loss value from linear predictors; may return +inf on overflow, which the
/// solver's line search treats as an always-rejected step.
pub(crate) fn loss_from_eta(response: &Response, eta: &[f64]) -> f64 {
    match response {
        Response::Gaussian { values, .. } => 0.5
            * values
                .iter()
                .zip(eta)
                .map(|(y, e)| (y - e) * (y - e))
                .sum::<f64>(),
        Response::Logistic { values } => values
            .iter()
            .zip(eta)
            .map(|(y, &e)| softplus(e) - y * e)
            .sum(),
        Response::Poisson { values } => values
            .iter()
            .zip(eta)
            .map(|(y, &e)| e.exp() - y * e)
            .sum(),
        Response::Multinomial { labels, classes } => {
            let n = labels.len();
            let mut total = 0.0;
            for (i, &label) in labels.iter().enumerate() {
                let mut max = f64::NEG_INFINITY;
                for l in 0..*classes {
                    max = max.max(eta[l * n + i]);
                }
                let mut sum = 0.0;
                for l in 0..*classes {
                    sum += (eta[l * n + i] - max).exp();
                }
                total += max + sum.ln() - eta[label * n + i];
            }
            total
        }
    }
}

/// Pointwise loss derivative w = d loss / d eta (n * K, column-major). The
/// negative of this is the residual used to build dual points.
pub(crate) fn dloss_deta(response: &Response, eta: &[f64]) -> Vec<f64> {
    match response {
        Response::Gaussian { values, .. } => {
            values.iter().zip(eta).map(|(y, e)| e - y).collect()
        }
        Response::Logistic { values } => values
            .iter()
            .zip(eta)
            .map(|(y, &e)| sigmoid(e) - y)
            .collect(),
        Response::Poisson { values } => values
            .iter()
            .zip(eta)
            .map(|(y, &e)| e.exp() - y)
            .collect(),
        Response::Multinomial { labels, classes } => {
            let n = labels.len();
            let mut w = vec![0.0; n * classes];
            for (i, &label) in labels.iter().enumerate() {
                let mut max = f64::NEG_INFINITY;
                for l in 0..*classes {
                    max = max.max(eta[l * n + i]);
                }
                let mut sum = 0.0;
                for l in 0..*classes {
                    sum += (eta[l * n + i] - max).exp();
                }
                for l in 0..*classes {
                    let prob = (eta[l * n + i] - max).exp() / sum;
                    w[l * n + i] = prob - if l == label { 1.0 } else { 0.0 };
                }
            }
            w
        }
    }
}

/// Gradient entries X^T w for the flattened coefficient positions in `subset`.
pub(crate) fn gradient_entries(
    design: &Design,
    subset: &[usize],
    w: &[f64],
    _classes: usize,
) -> Vec<f64> {
    let n = design.n();
    let p = design.p();
    subset
        .iter()
        .map(|&v| {
            let j = v % p;
            let class = v / p;
            design.col_dot(j, &w[class * n..(class + 1) * n])
        })
        .collect()
}

/// Conjugate value f*(-theta) of the summed pointwise losses, used in the
/// duality gap. Returns None when theta is outside the conjugate domain.
pub(crate) fn conjugate_neg(response: &Response, theta: &[f64]) -> Option<f64> {
    match response {
        Response::Gaussian { values, .. } => Some(
            values
                .iter()
                .zip(theta)
                .map(|(y, t)| 0.5 * t * t - t * y)
                .sum(),
        ),
        Response::Logistic { values } => {
            let mut total = 0.0;
            for (y, t) in values.iter().zip(theta) {
                let a = y - t;
                if !(0.0..=1.0).contains(&a) {
                    return None;
                }
                total += xlogx(a) + xlogx(1.0 - a);
            }
            Some(total)
        }
        Response::Poisson { values } => {
            let mut total = 0.0;
            for (y, t) in values.iter().zip(theta) {
                let a = y - t;
                if a < 0.0 {
                    return None;
                }
                total += xlogx(a) - a;
            }
            Some(total)
        }
        Response::Multinomial { .. } => None,
    }
}

/// Smallest curvature bound for d^2 loss / d eta^2, used to seed the step
/// size; Poisson curvature is unbounded so the line search owns it there.
pub(crate) fn curvature_bound(family: Family) -> f64 {
    match family {
        Family::Gaussian => 1.0,
        Family::Logistic => 0.25,
        Family::Poisson => 1.0,
        Family::Multinomial => 0.5,
    }
}

fn saturated_loss(response: &Response) -> f64 {
    match response {
        Response::Gaussian { .. } | Response::Logistic { .. } | Response::Multinomial { .. } => {
            0.0
        }
        Response::Poisson { values } => values.iter().map(|&y| y - xlogx(y)).sum(),
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn full_index_set(len: usize) -> Vec<usize> {
    (0..len).collect()
}

fn check_dims(design: &Design, response: &Response, coef: &Coefficients) -> Result<()> {
    if response.len() != design.n() {
        return Err(SlopeError::DimensionMismatch {
            context: "objective",
            expected: design.n(),
            got: response.len(),
        });
    }
    if coef.predictors() != design.p() || coef.classes() != response.classes() {
        return Err(SlopeError::DimensionMismatch {
            context: "objective coefficients",
            expected: design.p() * response.classes(),
            got: coef.len(),
        });
    }
    Ok(())
}

/// f(beta) for the response family.
pub fn loss_value(design: &Design, response: &Response, coef: &Coefficients) -> Result<f64> {
    check_dims(design, response, coef)?;
    let subset = full_index_set(coef.len());
    let eta = linear_predictor(design, &subset, coef.as_slice(), response.classes());
    let value = loss_from_eta(response, &eta);
    if !value.is_finite() {
        return Err(SlopeError::NonFinite("loss value"));
    }
    Ok(value)
}

/// Gradient of f with respect to the flattened coefficients.
pub fn loss_gradient(
    design: &Design,
    response: &Response,
    coef: &Coefficients,
) -> Result<Vec<f64>> {
    check_dims(design, response, coef)?;
    let subset = full_index_set(coef.len());
    let eta = linear_predictor(design, &subset, coef.as_slice(), response.classes());
    let w = dloss_deta(response, &eta);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(SlopeError::NonFinite("loss gradient"));
    }
    Ok(gradient_entries(design, &subset, &w, response.classes()))
}

/// Deviance 2 * (loss(beta) - saturated loss).
pub fn deviance(design: &Design, response: &Response, coef: &Coefficients) -> Result<f64> {
    let loss = loss_value(design, response, coef)?;
    Ok(2.0 * (loss - saturated_loss(response)))
}

/// Deviance of the null model (beta = 0, after any centering).
pub fn null_deviance(design: &Design, response: &Response) -> Result<f64> {
    let coef = Coefficients::zeros(design.p(), response.classes());
    deviance(design, response, &coef)
}

/// Fraction of deviance explained: 1 - dev / null. Undefined when the null
/// deviance vanishes.
pub fn deviance_ratio(dev: f64, null_dev: f64) -> Result<f64> {
    if null_dev == 0.0 {
        return Err(SlopeError::InvalidParameter(
            "deviance ratio undefined: null deviance is zero".into(),
        ));
    }
    Ok(1.0 - dev / null_dev)
}
