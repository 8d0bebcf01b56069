//! Count files.
//!
//! Polarization scans use one row per accumulation with the columns
//! `setting_a_qwp, setting_a_hwp, setting_b_qwp, setting_b_hwp, duration_s,
//! singles_a, singles_b, coincidences, seed` (angles in degrees, an empty QWP
//! cell for a half-wave-plate-only analyzer). HOM scans replace the four
//! setting columns by `gap_mm`. Optional trailing columns `repeat` and
//! `sweep_value` label ensemble members and sweep points.

use std::path::Path;

use crate::detection::{CountRecord, Counts};
use crate::error::{Error, Result};
use crate::polarization::AnalyzerSetting;

pub const SETTING_COLUMNS: [&str; 9] = [
    "setting_a_qwp",
    "setting_a_hwp",
    "setting_b_qwp",
    "setting_b_hwp",
    "duration_s",
    "singles_a",
    "singles_b",
    "coincidences",
    "seed",
];

pub const HOM_COLUMNS: [&str; 6] = [
    "gap_mm",
    "duration_s",
    "singles_a",
    "singles_b",
    "coincidences",
    "seed",
];

/// A polarization accumulation with its ensemble labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub record: CountRecord,
    pub repeat: u32,
    pub sweep_value: Option<f64>,
}

/// One accumulation of a HOM delay scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomRow {
    pub gap_mm: f64,
    pub duration_s: f64,
    pub counts: Counts,
    pub seed: u64,
    pub repeat: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CountTable {
    Settings(Vec<Row>),
    Hom(Vec<HomRow>),
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CountTable {
    pub fn len(&self) -> usize {
        match self {
            CountTable::Settings(r) => r.len(),
            CountTable::Hom(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serializes to CSV text. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            CountTable::Settings(rows) => {
                let sweep = rows.iter().any(|r| r.sweep_value.is_some());
                let mut header: Vec<&str> = SETTING_COLUMNS.to_vec();
                header.push("repeat");
                if sweep {
                    header.push("sweep_value");
                }
                w.write_record(&header).expect("in-memory write");
                for r in rows {
                    let c = &r.record;
                    let mut fields = vec![
                        opt(c.setting_a.qwp_angle()),
                        c.setting_a.hwp_angle().to_string(),
                        opt(c.setting_b.qwp_angle()),
                        c.setting_b.hwp_angle().to_string(),
                        c.duration_s.to_string(),
                        c.singles_a.to_string(),
                        c.singles_b.to_string(),
                        c.coincidences.to_string(),
                        c.seed.to_string(),
                        r.repeat.to_string(),
                    ];
                    if sweep {
                        fields.push(opt(r.sweep_value));
                    }
                    w.write_record(&fields).expect("in-memory write");
                }
            }
            CountTable::Hom(rows) => {
                let mut header: Vec<&str> = HOM_COLUMNS.to_vec();
                header.push("repeat");
                w.write_record(&header).expect("in-memory write");
                for r in rows {
                    w.write_record([
                        r.gap_mm.to_string(),
                        r.duration_s.to_string(),
                        r.counts.singles_a.to_string(),
                        r.counts.singles_b.to_string(),
                        r.counts.coincidences.to_string(),
                        r.seed.to_string(),
                        r.repeat.to_string(),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    /// Parses CSV text, choosing the schema from the header row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        let names: Vec<&str> = header.iter().collect();
        let columns = Columns::new(&names)?;
        let mut settings = Vec::new();
        let mut hom = Vec::new();
        for result in reader.records() {
            let record = result.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let cell = |i: usize| record.get(i).unwrap_or("");
            let field = |name: &'static str, i: usize| Field { line, name, text: cell(i) };
            let duration = field("duration_s", columns.base[0]).float()?;
            if !(duration > 0.0) {
                return Err(Error::Parse { line, message: format!("duration_s must be > 0, got {duration}") });
            }
            let counts = Counts {
                singles_a: field("singles_a", columns.base[1]).int()?,
                singles_b: field("singles_b", columns.base[2]).int()?,
                coincidences: field("coincidences", columns.base[3]).int()?,
            };
            let seed = field("seed", columns.base[4]).int()?;
            let repeat = match columns.repeat {
                Some(i) => u32::try_from(field("repeat", i).int()?)
                    .map_err(|_| Error::Parse { line, message: "repeat out of range".into() })?,
                None => 0,
            };
            match columns.kind {
                Kind::Settings([aq, ah, bq, bh]) => {
                    let a = setting(field("setting_a_qwp", aq).optional_float()?, field("setting_a_hwp", ah).float()?, line)?;
                    let b = setting(field("setting_b_qwp", bq).optional_float()?, field("setting_b_hwp", bh).float()?, line)?;
                    let sweep_value = match columns.sweep_value {
                        Some(i) => field("sweep_value", i).optional_float()?,
                        None => None,
                    };
                    settings.push(Row {
                        record: CountRecord::new(a, b, duration, counts, seed),
                        repeat,
                        sweep_value,
                    });
                }
                Kind::Hom(i) => hom.push(HomRow {
                    gap_mm: field("gap_mm", i).float()?,
                    duration_s: duration,
                    counts,
                    seed,
                    repeat,
                }),
            }
        }
        Ok(match columns.kind {
            Kind::Settings(_) => CountTable::Settings(settings),
            Kind::Hom(_) => CountTable::Hom(hom),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

fn setting(qwp: Option<f64>, hwp: f64, line: u64) -> Result<AnalyzerSetting> {
    AnalyzerSetting::new(qwp, hwp).map_err(|e| Error::Parse { line, message: e.to_string() })
}

enum Kind {
    Settings([usize; 4]),
    Hom(usize),
}

struct Columns {
    kind: Kind,
    /// duration, singles_a, singles_b, coincidences, seed
    base: [usize; 5],
    repeat: Option<usize>,
    sweep_value: Option<usize>,
}

impl Columns {
    fn new(names: &[&str]) -> Result<Self> {
        let find = |n: &str| names.iter().position(|h| *h == n);
        let need = |n: &str| {
            find(n).ok_or_else(|| Error::Parse { line: 1, message: format!("missing column `{n}`") })
        };
        let known: Vec<&str> = SETTING_COLUMNS
            .iter()
            .chain(&HOM_COLUMNS)
            .copied()
            .chain(["repeat", "sweep_value"])
            .collect();
        if let Some(extra) = names.iter().find(|n| !known.contains(n)) {
            return Err(Error::Parse { line: 1, message: format!("unknown column `{extra}`") });
        }
        let kind = if find("gap_mm").is_some() {
            Kind::Hom(need("gap_mm")?)
        } else {
            Kind::Settings([
                need("setting_a_qwp")?,
                need("setting_a_hwp")?,
                need("setting_b_qwp")?,
                need("setting_b_hwp")?,
            ])
        };
        Ok(Self {
            kind,
            base: [
                need("duration_s")?,
                need("singles_a")?,
                need("singles_b")?,
                need("coincidences")?,
                need("seed")?,
            ],
            repeat: find("repeat"),
            sweep_value: find("sweep_value"),
        })
    }
}

struct Field<'a> {
    line: u64,
    name: &'a str,
    text: &'a str,
}

impl Field<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse {
            line: self.line,
            message: format!("column `{}`: expected {what}, got `{}`", self.name, self.text),
        }
    }

    fn float(&self) -> Result<f64> {
        match self.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error("a finite number")),
        }
    }

    fn optional_float(&self) -> Result<Option<f64>> {
        if self.text.is_empty() {
            Ok(None)
        } else {
            self.float().map(Some)
        }
    }

    fn int(&self) -> Result<u64> {
        self.text.parse::<u64>().map_err(|_| self.error("a non-negative integer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountTable {
        let a = AnalyzerSetting::new(Some(45.0), 22.5).unwrap();
        let b = AnalyzerSetting::hwp(0.1 + 0.2).unwrap();
        let counts = Counts { singles_a: 10, singles_b: 20, coincidences: 3 };
        CountTable::Settings(vec![
            Row { record: CountRecord::new(a, b, 10.0, counts, u64::MAX), repeat: 0, sweep_value: None },
            Row { record: CountRecord::new(b, a, 2.5, counts, 7), repeat: 3, sweep_value: None },
        ])
    }

    #[test]
    fn settings_round_trip() {
        let t = sample();
        let text = t.to_csv();
        assert!(text.starts_with("setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,"));
        assert!(text.contains(",,0.30000000000000004,"));
        assert_eq!(CountTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn hom_round_trip() {
        let t = CountTable::Hom(vec![HomRow {
            gap_mm: -0.01,
            duration_s: 10.0,
            counts: Counts { singles_a: 1, singles_b: 2, coincidences: 1 },
            seed: 9,
            repeat: 1,
        }]);
        assert_eq!(CountTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn minimal_schema_without_labels() {
        let text = "setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,singles_a,singles_b,coincidences,seed\n\
                    ,0,,0,10,100,100,50,0\n";
        let CountTable::Settings(rows) = CountTable::from_csv(text).unwrap() else { panic!() };
        assert_eq!(rows[0].repeat, 0);
        assert_eq!(rows[0].record.coincidences, 50);
        assert_eq!(rows[0].record.setting_a.qwp_angle(), None);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let mut text = sample().to_csv();
        text.push_str(",0,,0,10,100,abc,50,0,0\n");
        match CountTable::from_csv(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("singles_b"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let short = "setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,singles_a,singles_b,coincidences,seed\n,0,,0,10\n";
        assert!(matches!(CountTable::from_csv(short), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(CountTable::from_csv("a,b\n1,2\n"), Err(Error::Parse { line: 1, .. })));
    }
}
