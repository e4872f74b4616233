use lattice_theta::{make_preset, normalize_density, Lattice, Preset, ThetaError};
use serde_json::Value;

type Result<T> = std::result::Result<T, ThetaError>;

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(ThetaError::Parameter(msg.into()))
}

/// `preset:NAME[:p1,p2,...]`, or a JSON object whose `basis` lists the generators,
/// one inner array per basis vector.
pub fn parse_lattice(text: &str, normalize: bool) -> Result<Lattice> {
    let text = text.trim();
    let l = if let Some(rest) = text.strip_prefix("preset:") {
        let (name, params) = match rest.split_once(':') {
            Some((n, p)) => (n, parse_list(p)?),
            None => (rest, Vec::new()),
        };
        make_preset(name.parse::<Preset>()?, &params)?
    } else if text.starts_with('{') {
        let v: Value = serde_json::from_str(text).or_else(|e| bad(format!("lattice JSON: {e}")))?;
        let Some(rows) = v.get("basis").and_then(Value::as_array) else {
            return bad("lattice JSON needs a \"basis\" array");
        };
        let gens = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .and_then(|xs| xs.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| ThetaError::Parameter("basis entries must be arrays of numbers".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Lattice::from_generators(&gens)?
    } else {
        return bad(format!("unrecognised lattice spec '{text}'"));
    };
    Ok(if normalize { normalize_density(&l) } else { l })
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().or_else(|_| bad(format!("'{s}' is not a number")))
        })
        .collect()
}

pub fn parse_range(text: &str) -> Result<(f64, f64)> {
    match parse_list(text)?.as_slice() {
        &[a, b] if a < b => Ok((a, b)),
        _ => bad(format!("range must be 'a,b' with a < b, got '{text}'")),
    }
}

pub fn parse_shift(text: Option<&str>, d: usize) -> Result<Vec<f64>> {
    let Some(text) = text else {
        return Ok(vec![0.0; d]);
    };
    let u = parse_list(text)?;
    if u.len() != d {
        return bad(format!("shift has {} components, lattice has dimension {d}", u.len()));
    }
    Ok(u)
}
