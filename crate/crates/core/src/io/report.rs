//! Result tables for command output: CSV with nine-decimal numbers and LF
//! line endings.

use std::path::Path;

use crate::error::{Error, Result};
use crate::optimize::{OptResult, SweepRow};
use crate::quantities::InfoQuantities;
use crate::regime::{RateChoice, RegimeCase};
use crate::sim::SimResult;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub enum Destination<'a> {
    Stdout,
    File(&'a Path),
}

/// Nine decimals; negative zero prints as zero.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.9}", 0.0);
    }
    match x {
        x if x.is_nan() => "nan".into(),
        x if x.is_infinite() => (if x > 0.0 { "inf" } else { "-inf" }).into(),
        x => {
            let s = format!("{x:.9}");
            if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
    }
}

impl ResultTable {
    pub fn new(header: &[&str]) -> Self {
        ResultTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }
}

pub fn emit_csv(table: &ResultTable, dest: Destination<'_>) -> Result<()> {
    let text = table.to_csv_string();
    match dest {
        Destination::Stdout => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
        Destination::File(p) => {
            std::fs::write(p, text).map_err(|source| Error::Io { path: p.display().to_string(), source })
        }
    }
}

pub fn info_table(q: &InfoQuantities) -> ResultTable {
    let mut t = ResultTable::new(&["quantity", "bits"]);
    for (name, v) in q.fields() {
        t.push(vec![name.into(), fmt_num(v)]);
    }
    t
}

pub fn classify_table(cases: &[RegimeCase]) -> ResultTable {
    let mut t = ResultTable::new(&["leaf", "tie"]);
    for c in cases {
        t.push(vec![c.leaf.label().into(), c.tie.to_string()]);
    }
    t
}

const CHOICE_COLUMNS: [&str; 8] = ["r2", "r_hat", "wz_bin_rate", "bob", "eve", "sum_rate", "r_tilde1", "r1"];

fn choice_cells(c: &RateChoice) -> Vec<String> {
    vec![
        fmt_num(c.r2),
        fmt_num(c.r_hat),
        fmt_num(c.wz_bin_rate),
        c.bob.map_or("none", |b| b.label()).into(),
        c.eve.label().into(),
        fmt_num(c.sum_rate),
        fmt_num(c.r_tilde1),
        fmt_num(c.r1),
    ]
}

/// One row per leaf; `best` marks the row whose rate is reported as the
/// design's secrecy rate.
pub fn rate_table(rows: &[(RegimeCase, RateChoice)], best: usize) -> ResultTable {
    let mut header = vec!["leaf", "tie", "best"];
    header.extend(CHOICE_COLUMNS);
    header.push("literal_r1");
    let mut t = ResultTable::new(&header);
    for (i, (case, c)) in rows.iter().enumerate() {
        let mut r = vec![case.leaf.label().into(), case.tie.to_string(), (i == best).to_string()];
        r.extend(choice_cells(c));
        r.push(c.literal_r1.map_or_else(String::new, fmt_num));
        t.push(r);
    }
    t
}

pub fn oracle_table(c: &RateChoice) -> ResultTable {
    let mut t = ResultTable::new(&CHOICE_COLUMNS);
    t.push(choice_cells(c));
    t
}

pub fn optimize_table(res: &OptResult) -> ResultTable {
    let mut header = vec!["leaf", "tie", "comp_size"];
    header.extend(CHOICE_COLUMNS);
    let mut t = ResultTable::new(&header);
    let mut r = vec![res.case.leaf.label().into(), res.case.tie.to_string(), res.design.comp_size.to_string()];
    r.extend(choice_cells(&res.choice));
    t.push(r);
    t
}

/// Summary metrics followed by per-block counts, as `metric,value` rows.
pub fn simulate_table(res: &SimResult) -> ResultTable {
    let mut t = ResultTable::new(&["metric", "value"]);
    let c = &res.config;
    let qr = &res.quantized;
    let [r1, rt1, r2, rh] = qr.rates();
    let ints = [
        ("n", c.n as u64),
        ("blocks", c.blocks as u64),
        ("trials", c.trials as u64),
        ("seed", c.seed),
        ("msg_exponent", qr.msg as u64),
        ("rand_exponent", qr.rand as u64),
        ("relay_exponent", qr.relay as u64),
        ("comp_exponent", qr.comp as u64),
    ];
    for (k, v) in ints {
        t.push(vec![k.into(), v.to_string()]);
    }
    for (k, v) in [
        ("r1_quantized", r1),
        ("r_tilde1_quantized", rt1),
        ("r2_quantized", r2),
        ("r_hat_quantized", rh),
        ("eps_typ", c.eps_typ),
        ("bob_block_error_rate", res.bob_block_error_rate),
        ("relay_failure_rate", res.relay_failure_rate),
    ] {
        t.push(vec![k.into(), fmt_num(v)]);
    }
    if let Some(e) = &res.equivocation {
        t.push(vec!["equivocation_bits".into(), fmt_num(e.bits)]);
        t.push(vec!["equivocation_stderr".into(), fmt_num(e.stderr)]);
        t.push(vec!["equivocation_max_bits".into(), fmt_num(e.max_bits)]);
        t.push(vec!["equivocation_samples".into(), e.samples.to_string()]);
    }
    for b in &res.per_block {
        t.push(vec![format!("block{}_bob_errors", b.block), b.bob_errors.to_string()]);
        t.push(vec![format!("block{}_relay_failures", b.block), b.relay_failures.to_string()]);
        t.push(vec![format!("block{}_relay_word_errors", b.block), b.relay_word_errors.to_string()]);
    }
    t
}

pub fn sweep_table(rows: &[SweepRow]) -> ResultTable {
    let mut t = ResultTable::new(&["param", "status", "leaf", "tie", "r1", "baseline", "error"]);
    for row in rows {
        let r = match &row.outcome {
            Ok(p) => vec![
                fmt_num(row.param),
                "ok".into(),
                p.case.leaf.label().into(),
                p.case.tie.to_string(),
                fmt_num(p.r1),
                fmt_num(p.baseline),
                String::new(),
            ],
            Err(e) => vec![fmt_num(row.param), "error".into(), String::new(), String::new(), String::new(), String::new(), e.clone()],
        };
        t.push(r);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(fmt_num(0.6000000000000001), "0.600000000");
        assert_eq!(fmt_num(-0.0), "0.000000000");
        assert_eq!(fmt_num(-1e-12), "0.000000000");
        assert_eq!(fmt_num(-0.25), "-0.250000000");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_quoting_and_line_endings() {
        let mut t = ResultTable::new(&["a", "b"]);
        t.push(vec!["x, y".into(), "1".into()]);
        assert_eq!(t.to_csv_string(), "a,b\n\"x, y\",1\n");
    }
}
