//! Matrix norm families: entrywise, columnwise/rowwise mixed, Schatten and the
//! induced norms that reduce to mixed norms (`ℓ1→ℓq`, `ℓp→ℓ∞`).
//!
//! Exponents are `f64` with `f64::INFINITY` standing for `∞`. Exponents below
//! one are accepted for evaluation (quasi-norms) but such specs are not
//! convex-valid and are rejected by the solvers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Selects a matrix norm and its exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    /// `ℓp` norm of the vectorized matrix.
    Entrywise { p: f64 },
    /// `ℓq` norm of the vector of column `ℓp` norms.
    Columnwise { p: f64, q: f64 },
    /// `ℓq` norm of the vector of row `ℓp` norms.
    Rowwise { p: f64, q: f64 },
    /// `ℓp` norm of the singular values, `p ≥ 1`.
    Schatten { p: f64 },
    /// Induced `ℓ1→ℓq`, the largest column `ℓq` norm.
    Induced1ToQ { q: f64 },
    /// Induced `ℓp→ℓ∞`, the largest row `ℓp*` norm, `p ≥ 1`.
    InducedPToInf { p: f64 },
    /// Induced `ℓ2→ℓ2`, the largest singular value.
    Spectral,
}

/// `p*` with `1/p + 1/p* = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn check_exponent(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidNorm(format!(
            "exponent {name} must lie in (0, inf], got {x}"
        )));
    }
    Ok(())
}

impl NormSpec {
    pub fn entrywise(p: f64) -> Result<Self> {
        NormSpec::Entrywise { p }.validated()
    }

    pub fn columnwise(p: f64, q: f64) -> Result<Self> {
        NormSpec::Columnwise { p, q }.validated()
    }

    pub fn rowwise(p: f64, q: f64) -> Result<Self> {
        NormSpec::Rowwise { p, q }.validated()
    }

    pub fn schatten(p: f64) -> Result<Self> {
        NormSpec::Schatten { p }.validated()
    }

    pub fn induced_1_to_q(q: f64) -> Result<Self> {
        NormSpec::Induced1ToQ { q }.validated()
    }

    pub fn induced_p_to_inf(p: f64) -> Result<Self> {
        NormSpec::InducedPToInf { p }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            NormSpec::Entrywise { p } => check_exponent("p", p)?,
            NormSpec::Columnwise { p, q } | NormSpec::Rowwise { p, q } => {
                check_exponent("p", p)?;
                check_exponent("q", q)?;
            }
            NormSpec::Schatten { p } => {
                check_exponent("p", p)?;
                if p < 1.0 {
                    return Err(Error::InvalidNorm(format!(
                        "schatten exponent must be >= 1, got {p}"
                    )));
                }
            }
            NormSpec::Induced1ToQ { q } => check_exponent("q", q)?,
            NormSpec::InducedPToInf { p } => {
                check_exponent("p", p)?;
                if p < 1.0 {
                    return Err(Error::InvalidNorm(format!(
                        "induced p->inf exponent must be >= 1, got {p}"
                    )));
                }
            }
            NormSpec::Spectral => {}
        }
        Ok(self)
    }

    /// True when the spec evaluates a genuine (convex) norm.
    pub fn is_convex_valid(&self) -> bool {
        match *self {
            NormSpec::Entrywise { p } => p >= 1.0,
            NormSpec::Columnwise { p, q } | NormSpec::Rowwise { p, q } => p >= 1.0 && q >= 1.0,
            NormSpec::Schatten { p } => p >= 1.0,
            NormSpec::Induced1ToQ { q } => q >= 1.0,
            NormSpec::InducedPToInf { p } => p >= 1.0,
            NormSpec::Spectral => true,
        }
    }

    /// True when the norm coincides with the Frobenius norm.
    pub fn is_frobenius(&self) -> bool {
        match *self {
            NormSpec::Entrywise { p } | NormSpec::Schatten { p } => p == 2.0,
            NormSpec::Columnwise { p, q } | NormSpec::Rowwise { p, q } => p == 2.0 && q == 2.0,
            _ => false,
        }
    }

    pub fn evaluate(&self, m: &Matrix) -> f64 {
        match *self {
            NormSpec::Entrywise { p } => entrywise(m, p),
            NormSpec::Columnwise { p, q } => columnwise_mixed(m, p, q),
            NormSpec::Rowwise { p, q } => rowwise_mixed(m, p, q),
            NormSpec::Schatten { p } => schatten(m, p),
            NormSpec::Induced1ToQ { q } => induced_1_to_q(m, q),
            NormSpec::InducedPToInf { p } => induced_p_to_inf(m, p),
            NormSpec::Spectral => schatten(m, f64::INFINITY),
        }
    }
}

fn fmt_exponent(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormSpec::Entrywise { p } => write!(f, "entrywise:{}", fmt_exponent(p)),
            NormSpec::Columnwise { p, q } => {
                write!(f, "col:{},{}", fmt_exponent(p), fmt_exponent(q))
            }
            NormSpec::Rowwise { p, q } => {
                write!(f, "row:{},{}", fmt_exponent(p), fmt_exponent(q))
            }
            NormSpec::Schatten { p } => write!(f, "schatten:{}", fmt_exponent(p)),
            NormSpec::Induced1ToQ { q } => write!(f, "ind1q:{}", fmt_exponent(q)),
            NormSpec::InducedPToInf { p } => write!(f, "indpinf:{}", fmt_exponent(p)),
            NormSpec::Spectral => write!(f, "spectral"),
        }
    }
}

fn parse_exponent(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|_| Error::InvalidNorm(format!("cannot parse exponent {s:?}")))
}

impl FromStr for NormSpec {
    type Err = Error;

    /// Parses the canonical forms `entrywise:p`, `col:p,q`, `row:p,q`,
    /// `schatten:p`, `ind1q:q`, `indpinf:p` and `spectral`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "spectral" {
            return Ok(NormSpec::Spectral);
        }
        let (family, args) = s.split_once(':').ok_or_else(|| {
            Error::InvalidNorm(format!("expected family:exponents, got {s:?}"))
        })?;
        let args: Vec<f64> = args
            .split(',')
            .map(parse_exponent)
            .collect::<Result<_>>()?;
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidNorm(format!(
                    "{family} takes {k} exponent(s), got {}",
                    args.len()
                )))
            }
        };
        let spec = match family {
            "entrywise" => {
                arity(1)?;
                NormSpec::Entrywise { p: args[0] }
            }
            "col" => {
                arity(2)?;
                NormSpec::Columnwise { p: args[0], q: args[1] }
            }
            "row" => {
                arity(2)?;
                NormSpec::Rowwise { p: args[0], q: args[1] }
            }
            "schatten" => {
                arity(1)?;
                NormSpec::Schatten { p: args[0] }
            }
            "ind1q" => {
                arity(1)?;
                NormSpec::Induced1ToQ { q: args[0] }
            }
            "indpinf" => {
                arity(1)?;
                NormSpec::InducedPToInf { p: args[0] }
            }
            other => {
                return Err(Error::InvalidNorm(format!("unknown norm family {other:?}")))
            }
        };
        spec.validated()
    }
}

/// `ℓp` (quasi-)norm of a sequence. Scaled by the largest magnitude so that
/// large exponents do not overflow.
pub fn lp_norm<I>(values: I, p: f64) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = values.into_iter();
    let scale = it.clone().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return scale;
    }
    if p == 1.0 {
        return it.map(f64::abs).sum();
    }
    if p == 2.0 {
        return scale * it.map(|x| (x / scale).powi(2)).sum::<f64>().sqrt();
    }
    scale * it.map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn entrywise(m: &Matrix, p: f64) -> f64 {
    lp_norm(m.iter().copied(), p)
}

pub fn column_norms(m: &Matrix, p: f64) -> Vec<f64> {
    m.column_iter()
        .map(|c| lp_norm(c.iter().copied(), p))
        .collect()
}

pub fn row_norms(m: &Matrix, p: f64) -> Vec<f64> {
    m.row_iter().map(|r| lp_norm(r.iter().copied(), p)).collect()
}

pub fn columnwise_mixed(m: &Matrix, p: f64, q: f64) -> f64 {
    lp_norm(column_norms(m, p), q)
}

pub fn rowwise_mixed(m: &Matrix, p: f64, q: f64) -> f64 {
    lp_norm(row_norms(m, p), q)
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

pub fn schatten(m: &Matrix, p: f64) -> f64 {
    lp_norm(singular_values(m), p)
}

pub fn induced_1_to_q(m: &Matrix, q: f64) -> f64 {
    columnwise_mixed(m, q, f64::INFINITY)
}

pub fn induced_p_to_inf(m: &Matrix, p: f64) -> f64 {
    rowwise_mixed(m, conjugate_exponent(p), f64::INFINITY)
}

/// Number of entries with magnitude strictly above `threshold`.
pub fn nonzero_census(m: &Matrix, threshold: f64) -> usize {
    m.iter().filter(|x| x.abs() > threshold).count()
}

/// Descriptor of the dual norm.
pub fn dual_spec(spec: &NormSpec) -> Result<NormSpec> {
    if !spec.is_convex_valid() {
        return Err(Error::NoDual(spec.to_string()));
    }
    let c = conjugate_exponent;
    Ok(match *spec {
        NormSpec::Entrywise { p } => NormSpec::Entrywise { p: c(p) },
        NormSpec::Columnwise { p, q } => NormSpec::Columnwise { p: c(p), q: c(q) },
        NormSpec::Rowwise { p, q } => NormSpec::Rowwise { p: c(p), q: c(q) },
        NormSpec::Schatten { p } => NormSpec::Schatten { p: c(p) },
        NormSpec::Induced1ToQ { q } => NormSpec::Columnwise { p: c(q), q: 1.0 },
        NormSpec::InducedPToInf { p } => NormSpec::Rowwise { p, q: 1.0 },
        NormSpec::Spectral => NormSpec::Schatten { p: 1.0 },
    })
}
