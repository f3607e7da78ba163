//! Gap rows, their CSV form, and gap-decrease ratios between o- and g-scaling.

use std::fmt;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 9] = ["s", "bound", "scaling", "ub", "lb", "gap", "ratio", "iters", "seconds"];
const SIG_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub s: usize,
    pub bound: String,
    pub scaling: String,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    /// `(gap_o − gap_g)/gap_o`, on g rows only.
    pub ratio: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
}

impl GapRow {
    pub fn new(s: usize, bound: &str, scaling: &str, ub: f64, lb: f64, iters: usize, seconds: f64) -> Self {
        GapRow { s, bound: bound.into(), scaling: scaling.into(), ub, lb, gap: ub - lb, ratio: None, iters, seconds }
    }
}

/// `%g`-style formatting with 12 significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn parse_num(field: &str) -> CliResult<f64> {
    match field {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field.parse().map_err(|_| CliError::Usage(format!("bad number {field:?} in CSV"))),
    }
}

pub fn write_csv(rows: &[GapRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.s.to_string(),
            r.bound.clone(),
            r.scaling.clone(),
            fmt_sig(r.ub),
            fmt_sig(r.lb),
            fmt_sig(r.gap),
            r.ratio.map(fmt_sig).unwrap_or_default(),
            r.iters.to_string(),
            fmt_sig(r.seconds),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn parse_csv(text: &str) -> CliResult<Vec<GapRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| CliError::Usage(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Usage(format!("CSV header must be {}", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Usage(e.to_string()))?;
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| CliError::Usage(format!("bad integer {:?} in CSV", &rec[i])));
        rows.push(GapRow {
            s: int(0)?,
            bound: rec[1].to_string(),
            scaling: rec[2].to_string(),
            ub: parse_num(&rec[3])?,
            lb: parse_num(&rec[4])?,
            gap: parse_num(&rec[5])?,
            ratio: if rec[6].is_empty() { None } else { Some(parse_num(&rec[6])?) },
            iters: int(7)?,
            seconds: parse_num(&rec[8])?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioSummary {
    /// Largest ratio with its `s` and bound.
    pub max: Option<(f64, usize, String)>,
    /// `(s, bound)` pairs where `gap_o = 0`, so no ratio is defined.
    pub omitted: Vec<(usize, String)>,
}

impl fmt::Display for RatioSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.max {
            Some((r, s, b)) => write!(f, "max ratio {} at s={s} ({b})", fmt_sig(*r))?,
            None => write!(f, "no ratio defined")?,
        }
        if !self.omitted.is_empty() {
            let list: Vec<String> = self.omitted.iter().map(|(s, b)| format!("s={s} {b}")).collect();
            write!(f, "; omitted where gap_o = 0: {}", list.join(", "))?;
        }
        Ok(())
    }
}

/// Fills `ratio` on every g row from the o row with the same `(s, bound)`.
pub fn attach_ratios(rows: &mut [GapRow]) -> CliResult<RatioSummary> {
    let mut keys: Vec<(usize, String)> = rows.iter().filter(|r| r.scaling != "none").map(|r| (r.s, r.bound.clone())).collect();
    keys.sort();
    keys.dedup();
    let mut summary = RatioSummary::default();
    for (s, bound) in keys {
        let find = |mode: &str| rows.iter().position(|r| r.s == s && r.bound == bound && r.scaling == mode);
        let (Some(o), Some(g)) = (find("o"), find("g")) else {
            return Err(CliError::Compute(format!("missing mode data for s={s}, bound {bound}: need both o and g rows")));
        };
        let gap_o = rows[o].gap;
        if gap_o > 0.0 && gap_o.is_finite() {
            let r = (gap_o - rows[g].gap) / gap_o;
            rows[g].ratio = Some(r);
            if summary.max.as_ref().map_or(true, |(m, _, _)| r > *m) {
                summary.max = Some((r, s, bound.clone()));
            }
        } else {
            rows[g].ratio = None;
            summary.omitted.push((s, bound.clone()));
        }
    }
    Ok(summary)
}
