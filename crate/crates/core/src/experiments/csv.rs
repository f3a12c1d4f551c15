//! CSV schemas and the fixed float format (17 significant digits).

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};

pub const TRIAL_HEADER: [&str; 9] = [
    "sweep_param",
    "sweep_value",
    "trial",
    "pe",
    "mse",
    "iters",
    "converged",
    "sigma2_hat",
    "wall_ms",
];

pub const COMPARE_HEADER: [&str; 10] = [
    "sweep_value",
    "phi_bayes_d",
    "phi_amp_d",
    "mse_bayes",
    "mse_amp",
    "pe_pred",
    "mse_emp",
    "pe_emp",
    "se_mse",
    "se_pe",
];

pub const CURVE_HEADER: [&str; 5] = ["sweep_value", "d", "phi", "std_error", "role"];

pub const PHASE_HEADER: [&str; 7] = [
    "sweep_value",
    "alpha",
    "num_maxima",
    "bayes_d",
    "amp_d",
    "mse_bayes",
    "mse_amp",
];

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Config(format!("bad float `{s}` in CSV"))),
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Config(format!("bad integer `{s}` in CSV")))
}

/// Serializes a header and rows with LF line endings.
pub fn to_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

/// Parses CSV text, checking the header, and returns the data records.
pub fn records(text: &str, header: &[&str]) -> Result<Vec<StringRecord>> {
    let mut r = ReaderBuilder::new().from_reader(text.as_bytes());
    let got = r.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header {got:?}")));
    }
    r.records()
        .map(|rec| rec.map_err(|e| Error::Config(e.to_string())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialLabel {
    Index(usize),
    /// Aggregate over the trials of one sweep point.
    Mean,
}

/// One row of a Monte Carlo sweep. For [`TrialLabel::Mean`] rows `iters` and
/// `converged` are averages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub trial: TrialLabel,
    pub pe: f64,
    pub mse: f64,
    pub iters: f64,
    pub converged: f64,
    pub sigma2_hat: f64,
    pub wall_ms: Option<f64>,
}

impl TrialRow {
    pub fn to_record(&self) -> Vec<String> {
        let (trial, iters, conv) = match self.trial {
            TrialLabel::Index(i) => (
                i.to_string(),
                format!("{}", self.iters as u64),
                if self.converged > 0.5 { "1" } else { "0" }.to_string(),
            ),
            TrialLabel::Mean => ("mean".to_string(), fmt_f64(self.iters), fmt_f64(self.converged)),
        };
        vec![
            self.sweep_param.clone(),
            fmt_f64(self.sweep_value),
            trial,
            fmt_f64(self.pe),
            fmt_f64(self.mse),
            iters,
            conv,
            fmt_f64(self.sigma2_hat),
            self.wall_ms.map(fmt_f64).unwrap_or_default(),
        ]
    }

    pub fn from_record(r: &StringRecord) -> Result<Self> {
        if r.len() != TRIAL_HEADER.len() {
            return Err(Error::Config(format!("trial row has {} fields", r.len())));
        }
        let trial = match &r[2] {
            "mean" => TrialLabel::Mean,
            s => TrialLabel::Index(parse_usize(s)?),
        };
        Ok(Self {
            sweep_param: r[0].to_string(),
            sweep_value: parse_f64(&r[1])?,
            trial,
            pe: parse_f64(&r[3])?,
            mse: parse_f64(&r[4])?,
            iters: parse_f64(&r[5])?,
            converged: parse_f64(&r[6])?,
            sigma2_hat: parse_f64(&r[7])?,
            wall_ms: if r[8].is_empty() { None } else { Some(parse_f64(&r[8])?) },
        })
    }
}

/// Replica prediction joined with the empirical decoder results.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub sweep_value: f64,
    pub phi_bayes_d: f64,
    pub phi_amp_d: f64,
    pub mse_bayes: f64,
    pub mse_amp: f64,
    pub pe_pred: f64,
    pub mse_emp: f64,
    pub pe_emp: f64,
    pub se_mse: f64,
    pub se_pe: f64,
}

impl CompareRow {
    pub fn to_record(&self) -> Vec<String> {
        [
            self.sweep_value,
            self.phi_bayes_d,
            self.phi_amp_d,
            self.mse_bayes,
            self.mse_amp,
            self.pe_pred,
            self.mse_emp,
            self.pe_emp,
            self.se_mse,
            self.se_pe,
        ]
        .into_iter()
        .map(fmt_f64)
        .collect()
    }

    pub fn from_record(r: &StringRecord) -> Result<Self> {
        if r.len() != COMPARE_HEADER.len() {
            return Err(Error::Config(format!("compare row has {} fields", r.len())));
        }
        let v: Vec<f64> = r.iter().map(parse_f64).collect::<Result<_>>()?;
        Ok(Self {
            sweep_value: v[0],
            phi_bayes_d: v[1],
            phi_amp_d: v[2],
            mse_bayes: v[3],
            mse_amp: v[4],
            pe_pred: v[5],
            mse_emp: v[6],
            pe_emp: v[7],
            se_mse: v[8],
            se_pe: v[9],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(parse_f64(&fmt_f64(0.1)).unwrap(), 0.1);
        assert!(parse_f64("abc").is_err());
    }

    #[test]
    fn header_checked() {
        let text = to_csv(&COMPARE_HEADER, Vec::<Vec<String>>::new());
        assert_eq!(text, format!("{}\n", COMPARE_HEADER.join(",")));
        assert!(records(&text, &TRIAL_HEADER).is_err());
        assert!(records(&text, &COMPARE_HEADER).unwrap().is_empty());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6f64..1e6, 0.0f64..1.0, Just(0.0), Just(f64::NAN)]
    }

    proptest! {
        #[test]
        fn trial_rows_round_trip(
            v in finite(), pe in finite(), mse in finite(), s2 in finite(),
            idx in prop::option::of(0usize..1000), iters in 0u32..500, conv in 0.0f64..1.0,
            wall in prop::option::of(0.0f64..1e5),
        ) {
            let row = TrialRow {
                sweep_param: "system.alpha".into(),
                sweep_value: v,
                trial: idx.map_or(TrialLabel::Mean, TrialLabel::Index),
                pe, mse,
                iters: if idx.is_some() { iters as f64 } else { iters as f64 / 7.0 },
                converged: if idx.is_some() { conv.round() } else { conv },
                sigma2_hat: s2,
                wall_ms: wall,
            };
            let text = to_csv(&TRIAL_HEADER, [row.to_record()]);
            let recs = records(&text, &TRIAL_HEADER).unwrap();
            let back = TrialRow::from_record(&recs[0]).unwrap();
            prop_assert_eq!(to_csv(&TRIAL_HEADER, [back.to_record()]), text);
        }

        #[test]
        fn compare_rows_round_trip(vals in prop::collection::vec(finite(), 10)) {
            let row = CompareRow {
                sweep_value: vals[0], phi_bayes_d: vals[1], phi_amp_d: vals[2], mse_bayes: vals[3],
                mse_amp: vals[4], pe_pred: vals[5], mse_emp: vals[6], pe_emp: vals[7],
                se_mse: vals[8], se_pe: vals[9],
            };
            let text = to_csv(&COMPARE_HEADER, [row.to_record()]);
            let back = CompareRow::from_record(&records(&text, &COMPARE_HEADER).unwrap()[0]).unwrap();
            prop_assert_eq!(to_csv(&COMPARE_HEADER, [back.to_record()]), text);
        }
    }
}
