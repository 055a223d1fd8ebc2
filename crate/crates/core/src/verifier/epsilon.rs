use serde::Serialize;

use super::{check_taylor, sup_error, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::network::combine::combine;
use crate::network::{Carry, FeedforwardNetwork};
use crate::numeric::json_f64;
use crate::polynomial::SparsePolynomial;

/// Smallest δ the halving search will try.
pub const DELTA_FLOOR: f64 = 1e-8;
/// Relative coefficient deviation accepted as a Taylor match.
pub const TAYLOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Taylor,
    Epsilon,
}

/// One evaluation in the δ search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchStep {
    pub part: usize,
    #[serde(serialize_with = "json_f64::one")]
    pub delta: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub sup_error: f64,
}

/// The δ chosen for one summand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartDelta {
    pub target: String,
    pub degree: u32,
    #[serde(serialize_with = "json_f64::one")]
    pub budget: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub delta: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub sup_error: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub confirmed_error: f64,
}

/// What was shown about a network and a target polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationCertificate {
    pub target: String,
    pub kind: CertificateKind,
    #[serde(serialize_with = "json_f64::opt")]
    pub epsilon: Option<f64>,
    #[serde(serialize_with = "json_f64::one")]
    pub radius: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub delta: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub part_deltas: Vec<PartDelta>,
    #[serde(serialize_with = "json_f64::one")]
    pub max_coeff_deviation: f64,
    #[serde(serialize_with = "json_f64::opt")]
    pub measured_sup_error: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub neurons: usize,
    pub padding_neurons: usize,
    pub correction_neurons: usize,
    pub method: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub search: Vec<SearchStep>,
}

impl ApproximationCertificate {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    /// True when the stored evidence supports the claim.
    pub fn holds(&self) -> bool {
        match self.kind {
            CertificateKind::Taylor => true,
            CertificateKind::Epsilon => matches!(
                (self.epsilon, self.measured_sup_error),
                (Some(e), Some(m)) if m < e
            ),
        }
    }
}

/// Sampling parameters for the δ search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsilonOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for EpsilonOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
        }
    }
}

fn coefficient_scale(p: &SparsePolynomial) -> f64 {
    p.monomials()
        .iter()
        .fold(1.0f64, |m, (c, _)| m.max(c.abs()))
}

/// A Taylor certificate, optionally with a sampled error on `(−R, R)ⁿ`.
pub fn taylor_certificate(
    net: &FeedforwardNetwork,
    p: &SparsePolynomial,
    radius: f64,
    options: EpsilonOptions,
) -> Result<ApproximationCertificate> {
    let deviation = check_taylor(net, p)?;
    let measured = sup_error(net, p, radius, options.samples, options.seed)?;
    Ok(ApproximationCertificate {
        target: p.to_string(),
        kind: CertificateKind::Taylor,
        epsilon: None,
        radius,
        delta: 1.0,
        part_deltas: Vec::new(),
        max_coeff_deviation: deviation,
        measured_sup_error: Some(measured.max_abs_error),
        samples: options.samples,
        seed: options.seed,
        neurons: net.neuron_count(),
        padding_neurons: net.padding_count(),
        correction_neurons: net.correction_count(),
        method: "taylor-expansion".into(),
        search: Vec::new(),
    })
}

/// Rescales a Taylor approximation of `p` until it is uniformly within
/// `epsilon` on `(−R, R)ⁿ`.
///
/// Each summand is rescaled on its own as `Nⱼ(δⱼx)/δⱼ^{dⱼ}` where `dⱼ` is
/// the lowest degree in its expansion, with error budget `ε / c` for `c`
/// summands. `δⱼ` halves from 1 until a sweep and a confirmation sweep
/// with twice the samples and a different seed both come in under budget.
/// The reassembled network is measured once more against `p` itself.
pub fn epsilonize(
    net: &FeedforwardNetwork,
    p: &SparsePolynomial,
    epsilon: f64,
    radius: f64,
    options: EpsilonOptions,
) -> Result<(FeedforwardNetwork, ApproximationCertificate)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let deviation = check_taylor(net, p)?;
    if deviation > TAYLOR_TOL * coefficient_scale(p) {
        return Err(Error::Invalid(format!(
            "network does not Taylor-approximate {p} (coefficient deviation {deviation:e})"
        )));
    }
    let cap = p.degree();
    let constant = p.constant_term();
    let parts = match net.split_parts() {
        Some(parts) if parts.len() > 1 => parts,
        _ => vec![net.shift_output(-constant)],
    };
    let budget = epsilon / parts.len() as f64;

    let mut rescaled = Vec::with_capacity(parts.len());
    let mut part_deltas = Vec::with_capacity(parts.len());
    let mut search = Vec::new();
    for (j, part) in parts.iter().enumerate() {
        let series = part.taylor_expand(cap)?;
        let scale = (0..=cap).fold(0.0f64, |m, d| m.max(series.degree_magnitude(d)));
        let Some(degree) = series.lowest_degree(SUPPORT_TOL * scale.max(f64::MIN_POSITIVE)) else {
            rescaled.push(part.clone());
            continue;
        };
        let target = SparsePolynomial::from_series(&series.homogeneous_part(degree));
        let mut delta = 1.0;
        let mut best = f64::INFINITY;
        let chosen = loop {
            if delta < DELTA_FLOOR {
                return Err(Error::DeltaFloor {
                    floor: DELTA_FLOOR,
                    epsilon: budget,
                    best,
                });
            }
            let candidate = part.rescale(degree, delta)?;
            let err = sup_error(&candidate, &target, radius, options.samples, options.seed)?.max_abs_error;
            search.push(SearchStep {
                part: j,
                delta,
                sup_error: err,
            });
            best = best.min(err);
            if err < budget {
                let confirm = sup_error(
                    &candidate,
                    &target,
                    radius,
                    2 * options.samples,
                    options.seed.wrapping_add(1),
                )?
                .max_abs_error;
                if confirm < budget {
                    part_deltas.push(PartDelta {
                        target: target.to_string(),
                        degree,
                        budget,
                        delta,
                        sup_error: err,
                        confirmed_error: confirm,
                    });
                    break candidate;
                }
            }
            delta *= 0.5;
        };
        rescaled.push(chosen);
    }

    let joined = if rescaled.len() == 1 {
        rescaled.pop().expect("one part")
    } else {
        combine(&rescaled, Carry::Identity, true)?
    };
    let result = joined.shift_output(constant);
    let measured = sup_error(&result, p, radius, options.samples, options.seed)?.max_abs_error;
    if measured.partial_cmp(&epsilon) != Some(std::cmp::Ordering::Less) {
        return Err(Error::EpsilonNotReached { epsilon, measured });
    }
    let delta = part_deltas.iter().map(|d| d.delta).fold(1.0, f64::min);
    let certificate = ApproximationCertificate {
        target: p.to_string(),
        kind: CertificateKind::Epsilon,
        epsilon: Some(epsilon),
        radius,
        delta,
        part_deltas,
        max_coeff_deviation: check_taylor(&result, p)?,
        measured_sup_error: Some(measured),
        samples: options.samples,
        seed: options.seed,
        neurons: result.neuron_count(),
        padding_neurons: result.padding_count(),
        correction_neurons: result.correction_count(),
        method: "geometric-halving".into(),
        search,
    };
    Ok((result, certificate))
}
