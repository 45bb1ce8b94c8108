//! JSON persistence for instances.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BestApproxInstance, ConstraintMap};
use crate::error::Result;
use crate::linalg::SymMatrix;

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    name: String,
    g: SymMatrix,
    eq: ConstraintMap,
    b: Vec<f64>,
    ineq: ConstraintMap,
    d: Vec<f64>,
}

pub fn save_instance(inst: &BestApproxInstance, path: impl AsRef<Path>) -> Result<()> {
    let repr = InstanceRepr {
        name: inst.name.clone(),
        g: inst.g.clone(),
        eq: inst.eq.clone(),
        b: inst.b.as_slice().to_vec(),
        ineq: inst.ineq.clone(),
        d: inst.d.as_slice().to_vec(),
    };
    std::fs::write(path, serde_json::to_string(&repr)?)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<BestApproxInstance> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text)
}

pub(crate) fn from_json(text: &str) -> Result<BestApproxInstance> {
    let r: InstanceRepr = serde_json::from_str(text)?;
    BestApproxInstance::new(
        r.name,
        r.g,
        r.eq,
        DVector::from_vec(r.b),
        r.ineq,
        DVector::from_vec(r.d),
    )
}
