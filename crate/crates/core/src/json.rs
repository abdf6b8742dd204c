//! JSON encodings for symbols, operators, and solver outputs.  Every
//! top-level document carries `schema_version`; rationals are encoded
//! as decimal-free `"num/den"` strings; keys serialize in sorted
//! order, so fixed inputs always produce the same bytes.

use serde_json::{json, Map, Value};

use crate::enveloping::{EnvAlgebra, EnvElement};
use crate::error::{Error, Result};
use crate::opalg::{DiffOp, OpMonom, PhaseOp};
use crate::quantization::{QuantMap, QuantStatus};
use crate::ring::{fmt_rat, parse_rat, Monom, PhasePoly, Rat, Signature};
use crate::starproduct::StarReport;
use crate::symmetries::{KillingBasis, SymmetryPair};

pub const SCHEMA_VERSION: &str = "1";

fn rat_value(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

fn rat_from(v: &Value) -> Result<Rat> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::BadRational(v.to_string()))?;
    parse_rat(s)
}

fn exps(e: &[u16]) -> Value {
    Value::Array(e.iter().map(|&k| json!(k)).collect())
}

fn exps_from(v: &Value, n: usize) -> Result<Vec<u16>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Invalid("exponent list is not an array".into()))?;
    if arr.len() != n {
        return Err(Error::DimensionMismatch(arr.len(), n));
    }
    arr.iter()
        .map(|x| {
            x.as_u64()
                .and_then(|k| u16::try_from(k).ok())
                .ok_or_else(|| Error::Invalid("exponent out of range".into()))
        })
        .collect()
}

fn sig_value(sig: &Signature) -> Value {
    json!([sig.plus(), sig.minus()])
}

fn sig_from(v: &Value) -> Result<Signature> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Invalid("signature is not a [p,q] pair".into()))?;
    let p = arr[0].as_u64().ok_or_else(|| Error::Invalid("bad signature entry".into()))?;
    let q = arr[1].as_u64().ok_or_else(|| Error::Invalid("bad signature entry".into()))?;
    Signature::new(p as usize, q as usize)
}

/// Attaches `schema_version` to an object value.
pub fn document(mut v: Value) -> Value {
    if let Value::Object(ref mut m) = v {
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    v
}

pub fn poly_to_value(p: &PhasePoly, sig: &Signature) -> Value {
    let terms: Vec<Value> = p
        .terms()
        .map(|(m, c)| json!({"x": exps(&m.x), "p": exps(&m.p), "c": rat_value(c)}))
        .collect();
    json!({"n": p.n(), "signature": sig_value(sig), "terms": terms})
}

pub fn poly_from_value(v: &Value) -> Result<(PhasePoly, Signature)> {
    let n = v["n"]
        .as_u64()
        .ok_or_else(|| Error::Invalid("symbol document lacks \"n\"".into()))? as usize;
    let sig = sig_from(&v["signature"])?;
    if sig.n() != n {
        return Err(Error::DimensionMismatch(sig.n(), n));
    }
    let mut p = PhasePoly::zero(n);
    let terms = v["terms"]
        .as_array()
        .ok_or_else(|| Error::Invalid("symbol document lacks \"terms\"".into()))?;
    for t in terms {
        let m = Monom::new(exps_from(&t["x"], n)?, exps_from(&t["p"], n)?);
        p.add_term(m, rat_from(&t["c"])?);
    }
    Ok((p, sig))
}

pub fn op_to_value(op: &PhaseOp, sig: &Signature) -> Value {
    let terms: Vec<Value> = op
        .terms()
        .map(|(m, c)| {
            json!({
                "x": exps(&m.x), "p": exps(&m.p),
                "dx": exps(&m.dx), "dp": exps(&m.dp),
                "c": rat_value(c),
            })
        })
        .collect();
    json!({"n": op.n(), "signature": sig_value(sig), "terms": terms})
}

pub fn op_from_value(v: &Value) -> Result<(PhaseOp, Signature)> {
    let n = v["n"]
        .as_u64()
        .ok_or_else(|| Error::Invalid("operator document lacks \"n\"".into()))? as usize;
    let sig = sig_from(&v["signature"])?;
    if sig.n() != n {
        return Err(Error::DimensionMismatch(sig.n(), n));
    }
    let mut op = PhaseOp::zero(n);
    let terms = v["terms"]
        .as_array()
        .ok_or_else(|| Error::Invalid("operator document lacks \"terms\"".into()))?;
    for t in terms {
        let m = OpMonom::new(
            exps_from(&t["x"], n)?,
            exps_from(&t["p"], n)?,
            exps_from(&t["dx"], n)?,
            exps_from(&t["dp"], n)?,
        );
        op.add_term(m, rat_from(&t["c"])?);
    }
    Ok((op, sig))
}

pub fn diffop_to_value(a: &DiffOp, sig: &Signature) -> Value {
    let mut v = op_to_value(a.as_phase_op(), sig);
    if let Value::Object(ref mut m) = v {
        m.insert("lambda".into(), rat_value(a.lambda()));
        m.insert("mu".into(), rat_value(a.mu()));
    }
    v
}

pub fn diffop_from_value(v: &Value) -> Result<(DiffOp, Signature)> {
    let (op, sig) = op_from_value(v)?;
    let lambda = rat_from(&v["lambda"])?;
    let mu = rat_from(&v["mu"])?;
    Ok((DiffOp::from_phase_op(op, lambda, mu)?, sig))
}

fn status_fields(status: &QuantStatus, m: &mut Map<String, Value>) {
    match status {
        QuantStatus::Unique => {
            m.insert("status".into(), json!("unique"));
        }
        QuantStatus::NonUnique { kernel_dim } => {
            m.insert("status".into(), json!("non_unique"));
            m.insert("kernel_dim".into(), json!(kernel_dim));
        }
        QuantStatus::NonExistent => {
            m.insert("status".into(), json!("non_existent"));
        }
    }
}

pub fn quantmap_to_value(map: &QuantMap) -> Value {
    let coeffs: Vec<Value> = map
        .coefficients()
        .iter()
        .map(|(a, c)| {
            json!({
                "r": a.r, "g": a.g, "l": a.l, "d": a.d, "t": a.t,
                "c": rat_value(c),
            })
        })
        .collect();
    let mut m = Map::new();
    m.insert("signature".into(), sig_value(map.sig()));
    m.insert("k".into(), json!(map.k()));
    m.insert("lambda".into(), rat_value(map.lambda()));
    m.insert("delta".into(), rat_value(map.delta()));
    m.insert("mu".into(), rat_value(&map.mu()));
    status_fields(map.status(), &mut m);
    m.insert("coefficients".into(), Value::Array(coeffs));
    Value::Object(m)
}

pub fn killing_basis_to_value(b: &KillingBasis) -> Value {
    json!({
        "k": b.k,
        "s": b.s,
        "signature": sig_value(&b.sig),
        "degree_bound": b.degree_bound,
        "stable": b.stable,
        "dimension": b.dimension(),
        "basis": b.basis.iter().map(|p| poly_to_value(p, &b.sig)).collect::<Vec<_>>(),
    })
}

pub fn symmetry_pair_to_value(pair: &SymmetryPair, sig: &Signature) -> Value {
    json!({
        "ell": pair.ell,
        "signature": sig_value(sig),
        "d1": diffop_to_value(&pair.d1, sig),
        "d2": diffop_to_value(&pair.d2, sig),
    })
}

/// Words are spelled with the generator labels of `alg`.
pub fn env_to_value(e: &EnvElement, alg: &EnvAlgebra) -> Value {
    let gens = alg.generators();
    let terms: Vec<Value> = e
        .terms()
        .map(|(w, c)| {
            let word: Vec<String> = w.iter().map(|&i| gens[i].label().to_string()).collect();
            json!({"word": word, "c": rat_value(c)})
        })
        .collect();
    json!({"terms": terms})
}

pub fn star_report_to_value(r: &StarReport) -> Value {
    let witness = match &r.parity_witness {
        None => Value::Null,
        Some(w) => json!({"left": w.left, "right": w.right, "level": w.level}),
    };
    json!({
        "lambda": rat_value(&r.lambda),
        "max_degree": r.max_degree,
        "family": r.family,
        "span_dimensions": r.span_dimensions,
        "gradation": r.gradation,
        "associativity": r.associativity,
        "strong_invariance": r.strong_invariance,
        "symmetric_parity": r.symmetric_parity,
        "parity_witness": witness,
        "tangential": r.tangential,
        "descent_lambda": rat_value(&r.descent_lambda),
        "descent": r.descent,
        "all_passed": r.all_passed(),
    })
}

/// Serializes a document with a trailing newline; sorted keys make the
/// bytes reproducible.
pub fn to_string_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal;
    use crate::quantization::solve_quantization;
    use crate::ring::rat;
    use crate::symmetries::solve_ckt;

    fn sig30() -> Signature {
        Signature::new(3, 0).unwrap()
    }

    #[test]
    fn symbol_documents_round_trip() {
        let sig = sig30();
        let gens = conformal::generators(&sig).unwrap();
        for g in &gens {
            let p = g.symbol().mul(&g.symbol()).unwrap();
            let v = document(poly_to_value(&p, &sig));
            assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
            let text = to_string_pretty(&v);
            let parsed: Value = serde_json::from_str(&text).unwrap();
            let (q, s2) = poly_from_value(&parsed).unwrap();
            assert_eq!(q, p);
            assert_eq!(s2, sig);
        }
    }

    #[test]
    fn operator_documents_round_trip() {
        let sig = sig30();
        let lambda = rat(1, 6);
        let a = conformal::lie_density(&conformal::generators(&sig).unwrap()[7], &lambda);
        let v = diffop_to_value(&a, &sig);
        let (b, s2) = diffop_from_value(&v).unwrap();
        assert_eq!(b, a);
        assert_eq!(s2, sig);
        // operator encodings carry the derivation exponents
        let term = &v["terms"][0];
        assert!(term.get("dx").is_some() && term.get("dp").is_some());
    }

    #[test]
    fn emitted_documents_are_stable_and_parse_back() {
        let sig = sig30();
        let qm = solve_quantization(2, &rat(0, 1), &rat(1, 2), &sig).unwrap();
        let kb = solve_ckt(1, 0, &sig, None).unwrap();
        let docs = [
            document(quantmap_to_value(&qm)),
            document(killing_basis_to_value(&kb)),
        ];
        for d in docs {
            let once = to_string_pretty(&d);
            let twice = to_string_pretty(&serde_json::from_str::<Value>(&once).unwrap());
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn rationals_reject_garbage() {
        assert!(rat_from(&json!("3/4")).is_ok());
        assert!(rat_from(&json!("-7")).is_ok());
        assert!(rat_from(&json!("0.5")).is_err());
        assert!(rat_from(&json!(5)).is_err());
        assert!(rat_from(&json!("1/0")).is_err());
    }
}
