use std::fmt::Write as _;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Twelve significant digits in scientific notation.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

/// CSV text with the provenance comment line and a header row.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(seed: u64, rtol: f64, columns: &[&str]) -> Self {
        let mut buf = format!("# seed={seed}, rtol={rtol:e}, version={VERSION}\n");
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
