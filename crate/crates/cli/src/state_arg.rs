//! The `--rho` / `--sigma` mini-language.
//!
//! - `mixed`
//! - `product:x,y,z[;x,y,z...]`, written like a Pauli string: the last triple is qubit 0
//! - `needle:<letters>:<eps>`
//! - `dense:<path>` (JSON `{"n", "re", "im"}`)
//! - `random-product:<seed>`

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qit_core::sampling::stream_rng;
use qit_core::{DenseState, NeedleState, PauliString, ProductState, StateSpec};

/// A parsed state argument; `mixed` waits for a qubit count.
#[derive(Clone, Debug)]
pub enum StateArg {
    Mixed,
    Resolved { spec: StateSpec, label: String },
    RandomProduct { seed: u64 },
}

impl StateArg {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "mixed" {
            return Ok(StateArg::Mixed);
        }
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| anyhow!("unrecognized state {text:?}"))?;
        match kind {
            "product" => {
                let mut blochs = body
                    .split(';')
                    .map(parse_triple)
                    .collect::<Result<Vec<_>>>()?;
                blochs.reverse();
                let spec = StateSpec::Product(ProductState::new(blochs)?);
                Ok(StateArg::Resolved {
                    label: spec.to_string(),
                    spec,
                })
            }
            "needle" => {
                let (letters, eps) = body
                    .split_once(':')
                    .ok_or_else(|| anyhow!("needle state needs <letters>:<eps>, got {body:?}"))?;
                let eps: f64 = eps.parse().with_context(|| format!("needle eps {eps:?}"))?;
                let spec = StateSpec::Needle(NeedleState::new(PauliString::encode(letters)?, eps)?);
                Ok(StateArg::Resolved {
                    label: spec.to_string(),
                    spec,
                })
            }
            "dense" => {
                let state = DenseState::load_json(Path::new(body))
                    .with_context(|| format!("loading dense state {body:?}"))?;
                Ok(StateArg::Resolved {
                    spec: StateSpec::Dense(state),
                    label: text.to_string(),
                })
            }
            "random-product" => Ok(StateArg::RandomProduct {
                seed: body
                    .parse()
                    .with_context(|| format!("random-product seed {body:?}"))?,
            }),
            other => bail!("unknown state kind {other:?}"),
        }
    }

    /// Qubit count fixed by the argument itself.
    pub fn n(&self) -> Option<usize> {
        match self {
            StateArg::Resolved { spec, .. } => Some(spec.n()),
            _ => None,
        }
    }

    pub fn resolve(self, n: usize) -> Result<(StateSpec, String)> {
        let (spec, label) = match self {
            StateArg::Mixed => (StateSpec::maximally_mixed(n)?, "mixed".to_string()),
            StateArg::Resolved { spec, label } => (spec, label),
            StateArg::RandomProduct { seed } => {
                let spec = StateSpec::Product(ProductState::random(n, &mut stream_rng(seed))?);
                (spec.clone(), spec.to_string())
            }
        };
        if spec.n() != n {
            bail!("state {label} has {} qubits, expected {n}", spec.n());
        }
        Ok((spec, label))
    }
}

fn parse_triple(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("Bloch vector needs three components, got {text:?}");
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .with_context(|| format!("Bloch component {part:?}"))?;
    }
    Ok(v)
}

/// Resolves both states against `--n` or each other's qubit count.
pub fn resolve_pair(
    rho: StateArg,
    sigma: StateArg,
    n: Option<usize>,
) -> Result<(StateSpec, String, StateSpec, String)> {
    let n = n
        .or(rho.n())
        .or(sigma.n())
        .ok_or_else(|| anyhow!("qubit count is ambiguous; pass --n"))?;
    let (rho, rho_label) = rho.resolve(n)?;
    let (sigma, sigma_label) = sigma.resolve(n)?;
    Ok((rho, rho_label, sigma, sigma_label))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_letters_run_high_to_low() {
        let (spec, _) = StateArg::parse("product:1,0,0;0,0,1")
            .unwrap()
            .resolve(2)
            .unwrap();
        let xz = PauliString::encode("XZ").unwrap();
        assert!((spec.expectation(&xz).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(spec.to_string(), "product:1,0,0;0,0,1");
    }

    #[test]
    fn needle_and_mixed() {
        let arg = StateArg::parse("needle:ZZZ:0.5").unwrap();
        assert_eq!(arg.n(), Some(3));
        let (_, label) = arg.resolve(3).unwrap();
        assert_eq!(label, "needle:ZZZ:0.5");
        assert!(StateArg::parse("mixed").unwrap().n().is_none());
    }

    #[test]
    fn random_product_is_seeded() {
        let a = StateArg::parse("random-product:4")
            .unwrap()
            .resolve(3)
            .unwrap();
        let b = StateArg::parse("random-product:4")
            .unwrap()
            .resolve(3)
            .unwrap();
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "product:1,0",
            "product:1,1,1",
            "needle:ZQ:0.5",
            "needle:Z",
            "pure:0",
        ] {
            assert!(StateArg::parse(bad).is_err(), "{bad}");
        }
        let arg = StateArg::parse("needle:XX:0.5").unwrap();
        assert!(resolve_pair(arg, StateArg::Mixed, Some(3)).is_err());
        assert!(resolve_pair(StateArg::Mixed, StateArg::Mixed, None).is_err());
    }
}
