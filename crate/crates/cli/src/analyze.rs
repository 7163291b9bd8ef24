use clap::ValueEnum;
use mdclab::analysis::{
    attack_cost_table, best_shortening_power, binco_bound, binom_sum, di_flaw_check, log2_big,
    verify_pair_table,
};
use mdclab::bitblocks::{BlockWidth, PositionPermutation};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Report {
    /// Order of the IOBC feedback permutation.
    Order,
    /// log2 of the fraction of blocks fixed by the k-th power of IOBC's g.
    FixedPoint,
    /// Number of EPBC insertion-delta candidates.
    GuessSpace,
    /// EPBC pair transitions checked against the expected table.
    PairTable,
    /// Minimum possibility-set sizes per difference class.
    DiFlaw,
    /// The binomial-sum upper bound, checked exactly.
    BinomialBound,
    /// Predicted attack costs per width.
    Cost,
}

fn iobc(n: u32) -> anyhow::Result<PositionPermutation> {
    Ok(PositionPermutation::iobc(BlockWidth::new(n)?)?)
}

fn or_default(widths: &[u32], default: &[u32]) -> Vec<u32> {
    if widths.is_empty() {
        default.to_vec()
    } else {
        widths.to_vec()
    }
}

fn rows(report: Report, widths: &[u32], ks: &[u64]) -> anyhow::Result<(Vec<Value>, Value)> {
    let mut summary = json!({});
    let rows = match report {
        Report::Order => or_default(widths, &[8, 12, 16, 20, 24, 32, 64, 128])
            .into_iter()
            .map(|n| {
                let order = iobc(n)?.order();
                let expected = u128::from(n) * u128::from(n) / 4 - 1;
                Ok(json!({"n": n, "order": order, "n^2/4-1": expected, "matches": order == expected}))
            })
            .collect::<anyhow::Result<_>>()?,
        Report::FixedPoint => {
            let mut out = Vec::new();
            for n in or_default(widths, &[8, 12, 64, 128]) {
                let perm = iobc(n)?;
                if ks.is_empty() {
                    let (k, log2) = best_shortening_power(&perm)?;
                    out.push(json!({"n": n, "k": k, "log2_fraction": log2, "best": true}));
                } else {
                    for &k in ks {
                        let log2 = perm.fixed_point_log2_fraction(k)?;
                        out.push(json!({"n": n, "k": k, "log2_fraction": log2}));
                    }
                }
            }
            out
        }
        Report::GuessSpace => or_default(widths, &[16, 64, 128])
            .into_iter()
            .map(|n| {
                let w = BlockWidth::new(n)?;
                let (m, limit) = (u64::from(w.half()), u64::from((n / 8).max(1)));
                let count = binom_sum(m, limit.min(m))?;
                Ok(json!({
                    "n": n,
                    "weight_limit": limit,
                    "candidates": count.to_string(),
                    "log2": log2_big(&count),
                }))
            })
            .collect::<anyhow::Result<_>>()?,
        Report::PairTable => {
            let r = verify_pair_table();
            summary = json!({
                "all_match": r.all_match,
                "covers_every_set": r.covers_every_set,
                "outputs_exclude_01": r.outputs_exclude_01,
            });
            r.rows.iter().map(serde_json::to_value).collect::<Result<_, _>>()?
        }
        Report::DiFlaw => {
            di_flaw_check().classes.iter().map(serde_json::to_value).collect::<Result<_, _>>()?
        }
        Report::BinomialBound => {
            let mut out = Vec::new();
            for m in 1..=64u64 {
                let (mut checked, mut strict) = (0u32, true);
                let mut tightest = f64::INFINITY;
                for k in 1..m.div_ceil(2) {
                    let sum = BigRational::from_integer(binom_sum(m, k)?.into());
                    let bound = binco_bound(m, k)?;
                    strict &= sum < bound;
                    checked += 1;
                    let ratio = (bound / sum).to_f64().unwrap_or(f64::NAN);
                    tightest = tightest.min(ratio);
                }
                if checked > 0 {
                    out.push(json!({"m": m, "k_checked": checked, "strict": strict, "min_bound_over_sum": tightest}));
                }
            }
            summary = json!({"all_strict": out.iter().all(|r| r["strict"] == true)});
            out
        }
        Report::Cost => attack_cost_table(&or_default(widths, &[64, 128]))?
            .iter()
            .map(serde_json::to_value)
            .collect::<Result<_, _>>()?,
    };
    Ok((rows, summary))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:.4}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn table(rows: &[Value]) -> String {
    let Some(Value::Object(first)) = rows.first() else {
        return String::new();
    };
    let header: Vec<&String> = first.keys().collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| header.iter().map(|k| cell(&r[k.as_str()])).collect())
        .collect();
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| cells.iter().map(|r| r[i].len()).max().unwrap_or(0).max(h.len()))
        .collect();
    let line = |items: Vec<&str>| -> String {
        let padded: Vec<String> = items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(header.iter().map(|h| h.as_str()).collect());
    for r in &cells {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn render(report: Report, widths: &[u32], ks: &[u64], format: Format) -> anyhow::Result<String> {
    let (rows, summary) = rows(report, widths, ks)?;
    let name = report.to_possible_value().expect("named").get_name().to_string();
    Ok(match format {
        Format::Json => {
            let mut doc = json!({"schema": 1, "report": name, "rows": rows});
            if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, summary) {
                doc.extend(extra);
            }
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        Format::Table => {
            let mut out = table(&rows);
            if let Value::Object(extra) = summary {
                for (k, v) in extra {
                    out += &format!("{k}: {}\n", cell(&v));
                }
            }
            out
        }
    })
}
