// SPDX-License-Identifier: Apache-2.0

//! Line-oriented privacy ledger export.
//!
//! ```text
//! # nzc privacy ledger
//! # orders 32
//! # index mechanism parameter value sensitivity moments
//! 0 nzc-laplace gamma 3.67879441171e-11 3.67879441171e-1 5.41341132946e-21,1.62402339884e-20,...
//! ```
//!
//! One record per query, space separated. `moments` lists `α(1..=orders)`
//! joined by commas, or `-` for Gaussian queries which carry no moment
//! curve. Every real uses 12 significant digits, so the same ledger always
//! produces the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nzc_core::accountant::{LedgerEntry, MechanismKind, MomentCurve, NoiseParameter};
use nzc_core::PrivacyLedger;

use crate::number::{parse_real, sig12};
use crate::{Error, Result};

const TITLE: &str = "# nzc privacy ledger";
const COLUMNS: &str = "# index mechanism parameter value sensitivity moments";

pub fn format_ledger(ledger: &PrivacyLedger) -> Result<String> {
    let orders = ledger.max_order();
    let mut out = format!("{TITLE}\n# orders {orders}\n{COLUMNS}\n");
    for (index, entry) in ledger.entries().iter().enumerate() {
        let (name, value) = match entry.parameter {
            NoiseParameter::Gamma(g) => ("gamma", g),
            NoiseParameter::Sigma(s) => ("sigma", s),
        };
        let moments = match entry.moments(orders)? {
            Some(curve) => curve.values().iter().map(|&a| sig12(a)).collect::<Vec<_>>().join(","),
            None => "-".to_owned(),
        };
        writeln!(
            out,
            "{index} {} {name} {} {} {moments}",
            entry.mechanism.as_str(),
            sig12(value),
            sig12(entry.sensitivity),
        )
        .expect("write to string");
    }
    Ok(out)
}

pub fn write_ledger(ledger: &PrivacyLedger, path: &Path) -> Result<()> {
    fs::write(path, format_ledger(ledger)?).map_err(|e| Error::io(path, e))
}

/// A ledger read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerFile {
    pub orders: usize,
    pub entries: Vec<LedgerEntry>,
    /// Moments exactly as written, `None` for Gaussian records.
    pub moments: Vec<Option<MomentCurve>>,
}

impl LedgerFile {
    /// Sum of the recorded moment curves.
    pub fn total_moments(&self) -> Result<MomentCurve> {
        let mut total = MomentCurve::zeros(self.orders);
        for m in self.moments.iter().flatten() {
            total.accumulate(m)?;
        }
        Ok(total)
    }

    /// Rebuilds a ledger by recomputing each record's moments.
    pub fn to_ledger(&self) -> Result<PrivacyLedger> {
        let mut ledger = PrivacyLedger::new(self.orders);
        for entry in &self.entries {
            ledger.record(*entry)?;
        }
        Ok(ledger)
    }
}

pub fn parse_ledger(path: &Path, text: &str) -> Result<LedgerFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let bad = |line: usize, msg: String| Error::parse(path, line, msg);

    match lines.next() {
        Some((_, TITLE)) => {}
        _ => return Err(bad(1, format!("expected `{TITLE}`"))),
    }
    let orders = match lines.next() {
        Some((n, l)) => l
            .strip_prefix("# orders ")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| bad(n, "expected `# orders <n>`".to_owned()))?,
        None => return Err(bad(2, "missing order line".to_owned())),
    };
    match lines.next() {
        Some((_, COLUMNS)) => {}
        _ => return Err(bad(3, "missing column header".to_owned())),
    }

    let mut file = LedgerFile {
        orders,
        entries: Vec::new(),
        moments: Vec::new(),
    };
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(' ').collect();
        if cols.len() != 6 {
            return Err(bad(n, format!("expected 6 columns, found {}", cols.len())));
        }
        let index: usize = cols[0].parse().map_err(|_| bad(n, format!("bad index `{}`", cols[0])))?;
        if index != file.entries.len() {
            return Err(bad(n, format!("expected index {}, found {index}", file.entries.len())));
        }
        let mechanism = MechanismKind::parse(cols[1])
            .ok_or_else(|| bad(n, format!("unknown mechanism `{}`", cols[1])))?;
        let real = |s: &str| parse_real(s).ok_or_else(|| bad(n, format!("bad number `{s}`")));
        let value = real(cols[3])?;
        let sensitivity = real(cols[4])?;
        let (entry, moments) = match cols[2] {
            "gamma" => {
                let values = cols[5].split(',').map(real).collect::<Result<Vec<_>>>()?;
                if values.len() != orders {
                    return Err(bad(n, format!("expected {orders} moments, found {}", values.len())));
                }
                let curve = MomentCurve::from_values(values).map_err(|e| bad(n, e.to_string()))?;
                (LedgerEntry::laplace(mechanism, value, sensitivity), Some(curve))
            }
            "sigma" => {
                if cols[5] != "-" {
                    return Err(bad(n, "gaussian records carry no moments".to_owned()));
                }
                (LedgerEntry::gaussian(value, sensitivity), None)
            }
            other => return Err(bad(n, format!("unknown parameter `{other}`"))),
        };
        file.entries.push(entry);
        file.moments.push(moments);
    }
    Ok(file)
}

pub fn read_ledger(path: &Path) -> Result<LedgerFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ledger(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PrivacyLedger {
        let mut ledger = PrivacyLedger::new(4);
        ledger.record(LedgerEntry::laplace(MechanismKind::NzcLaplace, 0.1, 0.36787944117144233)).unwrap();
        ledger.record(LedgerEntry::laplace(MechanismKind::LnMax, 20.0, 1.0)).unwrap();
        ledger.record(LedgerEntry::gaussian(7.5, 1.0)).unwrap();
        ledger
    }

    #[test]
    fn exact_layout() {
        let text = format_ledger(&sample()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "# orders 4");
        assert_eq!(
            lines[3],
            "0 nzc-laplace gamma 1.00000000000e-1 3.67879441171e-1 \
             4.00000000000e-2,1.20000000000e-1,2.40000000000e-1,4.00000000000e-1"
        );
        assert_eq!(lines[5], "2 nzc-gaussian sigma 7.50000000000e0 1.00000000000e0 -");
    }

    #[test]
    fn parse_then_format_is_identity() {
        let text = format_ledger(&sample()).unwrap();
        let parsed = parse_ledger(Path::new("ledger.txt"), &text).unwrap();
        assert_eq!(parsed.entries.len(), 3);
        let rebuilt = parsed.to_ledger().unwrap();
        assert_eq!(format_ledger(&rebuilt).unwrap(), text);
        let total = parsed.total_moments().unwrap();
        assert!((total.get(1).unwrap() - (0.04 + 1600.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_records() {
        let text = format_ledger(&sample()).unwrap();
        let broken = text.replace("1 lnmax", "7 lnmax");
        let err = parse_ledger(Path::new("l"), &broken).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let broken = text.replace("lnmax", "argmax");
        assert!(parse_ledger(Path::new("l"), &broken).is_err());
        assert!(parse_ledger(Path::new("l"), "nonsense").is_err());
    }
}
