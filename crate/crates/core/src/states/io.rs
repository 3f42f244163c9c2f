use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DensityMatrix, PureState};
use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Density,
    Pure,
}

/// On-disk state: `{"n_qubits": N, "kind": "density"|"pure", "data": [[re, im], ...]}`,
/// matrices flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub n_qubits: usize,
    pub kind: StateKind,
    pub data: Vec<[f64; 2]>,
}

/// Either kind of state read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Density(DensityMatrix),
}

impl State {
    pub fn n_qubits(&self) -> usize {
        match self {
            State::Pure(p) => p.n_qubits(),
            State::Density(d) => d.n_qubits(),
        }
    }

    /// Density-matrix view (projector for pure states).
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.to_density(),
            State::Density(d) => d.clone(),
        }
    }

    pub fn to_spec(&self) -> StateSpec {
        let (kind, values): (StateKind, &[C64]) = match self {
            State::Pure(p) => (StateKind::Pure, p.amplitudes()),
            State::Density(d) => (StateKind::Density, d.matrix().as_slice()),
        };
        StateSpec { n_qubits: self.n_qubits(), kind, data: values.iter().map(|z| [z.re, z.im]).collect() }
    }

    /// Validates a parsed spec against the physical invariants.
    pub fn from_spec(spec: StateSpec) -> Result<Self> {
        if spec.data.iter().any(|[re, im]| !re.is_finite() || !im.is_finite()) {
            return Err(Error::invariant("finite", "state data contains NaN or Inf"));
        }
        let values: Vec<C64> = spec.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        if spec.n_qubits == 0 || spec.n_qubits > crate::qmath::MAX_QUBITS {
            return Err(Error::SizeLimit(format!("{} qubits", spec.n_qubits)));
        }
        let dim = 1usize << spec.n_qubits;
        match spec.kind {
            StateKind::Pure => Ok(State::Pure(PureState::new(spec.n_qubits, values)?)),
            StateKind::Density => {
                let m = ComplexMatrix::from_vec(dim, dim, values)?;
                Ok(State::Density(DensityMatrix::new(spec.n_qubits, m)?))
            }
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityMatrix> for State {
    fn from(d: DensityMatrix) -> Self {
        State::Density(d)
    }
}

pub fn load_state(path: impl AsRef<Path>) -> Result<State> {
    let text = fs::read_to_string(path)?;
    let spec: StateSpec = serde_json::from_str(&text)?;
    State::from_spec(spec)
}

pub fn save_state(state: &State, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string(&state.to_spec())?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ghz, target_state, TargetStateParams};

    #[test]
    fn pure_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.json");
        let phi = ghz(2, false, 1.0).unwrap();
        save_state(&State::Pure(phi.clone()), &path).unwrap();
        assert_eq!(load_state(&path).unwrap(), State::Pure(phi));
    }

    #[test]
    fn density_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("target.json");
        let rho = target_state(&TargetStateParams::experimental()).unwrap();
        save_state(&State::Density(rho.clone()), &path).unwrap();
        match load_state(&path).unwrap() {
            State::Density(back) => {
                assert_eq!(back.n_qubits(), 3);
                assert_eq!(back, rho);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_trace_violation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"n_qubits":1,"kind":"density","data":[[0.4,0],[0,0],[0,0],[0.4,0]]}"#)
            .unwrap();
        let err = load_state(&path).unwrap_err();
        assert!(err.to_string().contains("unit_trace"), "{err}");
    }

    #[test]
    fn rejects_malformed_json_and_bad_length() {
        let bad = serde_json::from_str::<StateSpec>(r#"{"n_qubits":1,"kind":"pure","data":[[NaN,0]]}"#);
        assert!(bad.is_err());
        let spec: StateSpec =
            serde_json::from_str(r#"{"n_qubits":2,"kind":"pure","data":[[1,0],[0,0]]}"#).unwrap();
        assert!(matches!(State::from_spec(spec), Err(Error::DimensionMismatch(_))));
        let huge: StateSpec =
            serde_json::from_str(r#"{"n_qubits":1,"kind":"pure","data":[[1e308,0],[1e308,0]]}"#).unwrap();
        assert!(State::from_spec(huge).is_err());
    }
}
