//! Market CSV loaders. A market directory holds three files:
//!
//! * `forwards.csv`: `date,product,price`
//! * `quotes.csv`: `product,maturity,strike,mid`
//! * `returns.csv`: `date,product,log_return`
//!
//! Products are mapped to asset indices in order of first appearance in the
//! forwards file; the latest forward per product is the initial value.

use crate::CliError;
use levy_exchange::calibration::{MarketSnapshot, VanillaQuote};
use std::collections::BTreeMap;
use std::path::Path;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn field<'a>(
    record: &'a csv::StringRecord,
    idx: usize,
    what: &str,
    path: &Path,
    line: u64,
) -> Result<&'a str, CliError> {
    record.get(idx).ok_or_else(|| {
        CliError::Data(format!(
            "{} line {line}: missing {what} column",
            path.display()
        ))
    })
}

fn num(s: &str, what: &str, path: &Path, line: u64) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "{} line {line}: cannot parse {what} from '{s}'",
            path.display()
        ))
    })
}

pub fn load_market_dir(dir: &Path, rate: f64) -> Result<MarketSnapshot, CliError> {
    let forwards_path = dir.join("forwards.csv");
    let quotes_path = dir.join("quotes.csv");
    let returns_path = dir.join("returns.csv");

    // forwards: keep the latest date per product, assets ordered by first
    // appearance
    let mut order: Vec<String> = Vec::new();
    let mut latest: BTreeMap<String, (String, f64)> = BTreeMap::new();
    let mut rdr = reader(&forwards_path)?;
    let mut as_of = String::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", forwards_path.display())))?;
        let date = field(&rec, 0, "date", &forwards_path, line)?.trim().to_string();
        let product = field(&rec, 1, "product", &forwards_path, line)?.trim().to_string();
        let price = num(field(&rec, 2, "price", &forwards_path, line)?, "price", &forwards_path, line)?;
        if !order.contains(&product) {
            order.push(product.clone());
        }
        let update = latest
            .get(&product)
            .map(|(d, _)| date.as_str() >= d.as_str())
            .unwrap_or(true);
        if update {
            latest.insert(product, (date.clone(), price));
        }
        if date.as_str() > as_of.as_str() {
            as_of = date;
        }
    }
    if order.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no forward rows",
            forwards_path.display()
        )));
    }
    let forwards: Vec<f64> = order.iter().map(|p| latest[p].1).collect();
    let index_of = |product: &str| -> Option<usize> { order.iter().position(|p| p == product) };

    // quotes
    let mut quotes = Vec::new();
    let mut rdr = reader(&quotes_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", quotes_path.display())))?;
        let product = field(&rec, 0, "product", &quotes_path, line)?.trim();
        let asset = index_of(product).ok_or_else(|| {
            CliError::Data(format!(
                "{} line {line}: product '{product}' has no forward",
                quotes_path.display()
            ))
        })?;
        quotes.push(VanillaQuote {
            asset,
            maturity: num(field(&rec, 1, "maturity", &quotes_path, line)?, "maturity", &quotes_path, line)?,
            strike: num(field(&rec, 2, "strike", &quotes_path, line)?, "strike", &quotes_path, line)?,
            mid: num(field(&rec, 3, "mid", &quotes_path, line)?, "mid", &quotes_path, line)?,
        });
    }

    // returns: aligned by date across products
    let mut by_date: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    let mut rdr = reader(&returns_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", returns_path.display())))?;
        let date = field(&rec, 0, "date", &returns_path, line)?.trim().to_string();
        let product = field(&rec, 1, "product", &returns_path, line)?.trim();
        let asset = index_of(product).ok_or_else(|| {
            CliError::Data(format!(
                "{} line {line}: product '{product}' has no forward",
                returns_path.display()
            ))
        })?;
        let value = num(field(&rec, 2, "log_return", &returns_path, line)?, "log_return", &returns_path, line)?;
        by_date.entry(date).or_insert_with(|| vec![None; order.len()])[asset] = Some(value);
    }
    let mut returns = vec![Vec::new(); order.len()];
    for (_, row) in by_date {
        for (a, v) in row.iter().enumerate() {
            // missing observations become NaN; the correlation estimator is
            // pairwise-complete
            returns[a].push(v.unwrap_or(f64::NAN));
        }
    }

    let mut snapshot = MarketSnapshot { as_of, rate, forwards, quotes, returns };
    snapshot.apply_moneyness_filter();
    snapshot
        .validate()
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(snapshot)
}
