use super::{ExperimentRecord, RewardTransform};
use crate::agents::{Rate, Variant};
use crate::error::{Error, Result};
use crate::metrics::KappaMode;
use std::io::{Read, Write};
use std::path::Path;

pub const CSV_COLUMNS: [&str; 16] = [
    "task",
    "agent",
    "gamma",
    "tile_width",
    "k",
    "c",
    "beta_log",
    "beta_reg",
    "alpha",
    "transform",
    "seed",
    "early_perf",
    "final_perf",
    "kappa_mode",
    "kappa",
    "rms_final",
];

/// `printf("%.9g")`: nine significant digits, trailing zeros dropped,
/// exponent form below 1e-4 and from 1e9 on.
pub fn format_g9(x: f64) -> String {
    const P: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub(super) fn rate_field(r: &Rate) -> String {
    if r.is_constant() {
        format_g9(r.scale)
    } else if r.scale == 1.0 {
        format!("(1+t)^-{}", format_g9(r.exponent))
    } else {
        format!("{}*(1+t)^-{}", format_g9(r.scale), format_g9(r.exponent))
    }
}

fn transform_field(t: &RewardTransform) -> String {
    match t {
        RewardTransform::None => "none".into(),
        RewardTransform::Scale(x) => format!("scale:{}", format_g9(*x)),
        RewardTransform::Shift(x) => format!("shift:{}", format_g9(*x)),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_g9).unwrap_or_default()
}

fn row(r: &ExperimentRecord) -> [String; 16] {
    [
        r.task.clone(),
        r.agent.to_string(),
        format_g9(r.gamma),
        r.tile_width.to_string(),
        format_g9(r.k),
        format_g9(r.c),
        rate_field(&r.beta_log),
        rate_field(&r.beta_reg),
        opt(r.alpha()),
        transform_field(&r.transform),
        r.seed.to_string(),
        format_g9(r.early_perf),
        format_g9(r.final_perf),
        r.kappa_mode.map(|m| m.to_string()).unwrap_or_default(),
        opt(r.kappa),
        opt(r.rms_final),
    ]
}

/// Canonical order: task, agent, gamma, tile width, seed, then the full
/// formatted row as a tie-breaker.
fn canonical(records: &[ExperimentRecord]) -> Vec<[String; 16]> {
    let mut keyed: Vec<(&ExperimentRecord, [String; 16])> = records.iter().map(|r| (r, row(r))).collect();
    keyed.sort_by(|(a, ra), (b, rb)| {
        a.task
            .cmp(&b.task)
            .then_with(|| a.agent.name().cmp(b.agent.name()))
            .then_with(|| a.gamma.total_cmp(&b.gamma))
            .then_with(|| a.tile_width.cmp(&b.tile_width))
            .then_with(|| a.seed.cmp(&b.seed))
            .then_with(|| ra.cmp(rb))
    });
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Writes the header and one canonically ordered row per record.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in canonical(records) {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).unwrap_or("");
    raw.parse::<T>()
        .map_err(|e| Error::config(CSV_COLUMNS[idx], format!("row {line}: cannot parse `{raw}`: {e}")))
}

fn opt_field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<Option<f64>> {
    if rec.get(idx).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        field(rec, idx, line).map(Some)
    }
}

/// Parses a file written by [`write_csv`]. `wall_time` is not stored and
/// reads back as 0.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::config("header", "unexpected CSV columns"));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let kappa_mode = match rec.get(13).unwrap_or("") {
            "" => None,
            s => Some(s.parse::<KappaMode>().map_err(|e| Error::config("kappa_mode", e))?),
        };
        let record = ExperimentRecord {
            task: rec.get(0).unwrap_or("").to_string(),
            agent: field::<Variant>(&rec, 1, line)?,
            gamma: field(&rec, 2, line)?,
            tile_width: field(&rec, 3, line)?,
            k: field(&rec, 4, line)?,
            c: field(&rec, 5, line)?,
            beta_log: field(&rec, 6, line)?,
            beta_reg: field(&rec, 7, line)?,
            transform: field(&rec, 9, line)?,
            seed: field(&rec, 10, line)?,
            early_perf: field(&rec, 11, line)?,
            final_perf: field(&rec, 12, line)?,
            kappa_mode,
            kappa: opt_field(&rec, 14, line)?,
            rms_final: opt_field(&rec, 15, line)?,
            wall_time: 0.0,
        };
        out.push(record);
    }
    Ok(out)
}
