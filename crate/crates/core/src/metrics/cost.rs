//! Token accounting and per-claim cost estimates.
//!
//! Prices are held as integer micro-dollars per million tokens, so
//! `tokens × price` is an exact amount in pico-dollars. Rounding to cents
//! happens only when displaying.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    TextModel,
    Search,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub model: String,
    pub kind: CallKind,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub stage: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub calls: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// Per-call token records with running per-model totals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    records: Vec<CallRecord>,
    totals: BTreeMap<String, TokenTotals>,
}

impl TokenLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, record: CallRecord) {
        let t = self.totals.entry(record.model.clone()).or_default();
        t.calls += 1;
        t.input_tokens += record.input_tokens;
        t.output_tokens += record.output_tokens;
        self.records.push(record);
    }

    pub fn record_text(&mut self, model: &str, stage: &str, input_tokens: u64, output_tokens: u64) {
        self.record(CallRecord {
            model: model.to_owned(),
            kind: CallKind::TextModel,
            input_tokens,
            output_tokens,
            stage: stage.to_owned(),
        });
    }

    pub fn record_search(&mut self, provider: &str, stage: &str) {
        self.record(CallRecord {
            model: provider.to_owned(),
            kind: CallKind::Search,
            input_tokens: 0,
            output_tokens: 0,
            stage: stage.to_owned(),
        });
    }

    pub fn merge(&mut self, other: &TokenLedger) {
        for r in &other.records {
            self.record(r.clone());
        }
    }

    pub fn records(&self) -> &[CallRecord] {
        &self.records
    }

    pub fn totals(&self) -> &BTreeMap<String, TokenTotals> {
        &self.totals
    }

    pub fn calls(&self) -> usize {
        self.records.len()
    }

    /// Recomputes totals from the records and compares with the running ones.
    pub fn is_consistent(&self) -> bool {
        let mut fresh: BTreeMap<String, TokenTotals> = BTreeMap::new();
        for r in &self.records {
            let t = fresh.entry(r.model.clone()).or_default();
            t.calls += 1;
            t.input_tokens += r.input_tokens;
            t.output_tokens += r.output_tokens;
        }
        fresh == self.totals
    }

    /// Rebuilds the running totals, e.g. after deserializing records only.
    pub fn from_records(records: impl IntoIterator<Item = CallRecord>) -> Self {
        let mut l = Self::new();
        for r in records {
            l.record(r);
        }
        l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input_usd_per_million: f64,
    pub output_usd_per_million: f64,
}

impl ModelPrice {
    fn micros(self) -> (u128, u128) {
        (
            (self.input_usd_per_million * 1e6).round() as u128,
            (self.output_usd_per_million * 1e6).round() as u128,
        )
    }
}

/// Price table file: `{model: {input_usd_per_million, output_usd_per_million}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceTable(pub BTreeMap<String, ModelPrice>);

impl PriceTable {
    /// GPT-4.1 and GPT-4.1 mini list prices as of December 2025.
    pub fn gpt41_list_prices() -> Self {
        Self(BTreeMap::from([
            (
                "gpt-4.1".to_owned(),
                ModelPrice {
                    input_usd_per_million: 2.00,
                    output_usd_per_million: 8.00,
                },
            ),
            (
                "gpt-4.1-mini".to_owned(),
                ModelPrice {
                    input_usd_per_million: 0.40,
                    output_usd_per_million: 1.60,
                },
            ),
        ]))
    }

    pub fn get(&self, model: &str) -> Option<ModelPrice> {
        self.0.get(model).copied()
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        for (model, p) in &self.0 {
            if !(p.input_usd_per_million > 0.0 && p.output_usd_per_million > 0.0) {
                return Err(MetricsError::InvalidInput(format!(
                    "prices for {model} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Input and output price ratios `from / to`.
    pub fn ratio(&self, from: &str, to: &str) -> Result<(f64, f64), MetricsError> {
        let f = self.get(from).ok_or_else(|| MetricsError::MissingPrice(from.to_owned()))?;
        let t = self.get(to).ok_or_else(|| MetricsError::MissingPrice(to.to_owned()))?;
        Ok((
            f.input_usd_per_million / t.input_usd_per_million,
            f.output_usd_per_million / t.output_usd_per_million,
        ))
    }
}

/// An exact amount in units of 1e-12 USD.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PicoUsd(pub u128);

impl PicoUsd {
    const PER_CENT: u128 = 10_000_000_000;

    pub fn as_usd(self) -> f64 {
        self.0 as f64 / 1e12
    }

    /// Whole cents, half-up.
    pub fn cents(self) -> u128 {
        (self.0 + Self::PER_CENT / 2) / Self::PER_CENT
    }
}

impl fmt::Display for PicoUsd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.cents();
        write!(f, "${}.{:02}", c / 100, c % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub normalize_to: String,
    pub claims: u64,
    /// Token usage expressed in `normalize_to`-priced tokens.
    pub normalized_input_tokens: f64,
    pub normalized_output_tokens: f64,
    pub total: PicoUsd,
    pub per_claim: PicoUsd,
}

impl CostEstimate {
    pub fn per_claim_usd(&self) -> f64 {
        self.per_claim.as_usd()
    }
}

/// Cost of the text-model calls in `ledger` per claim. Tokens of auxiliary
/// models are converted to `normalize_to` equivalents by price ratio; search
/// calls carry no token cost.
pub fn cost_estimate(
    ledger: &TokenLedger,
    prices: &PriceTable,
    normalize_to: &str,
    claims: u64,
) -> Result<CostEstimate, MetricsError> {
    if claims == 0 {
        return Err(MetricsError::InvalidInput("claim count must be positive".into()));
    }
    prices.validate()?;
    let target = prices
        .get(normalize_to)
        .ok_or_else(|| MetricsError::MissingPrice(normalize_to.to_owned()))?;
    let (t_in, t_out) = target.micros();
    let mut total: u128 = 0;
    let mut norm_in = 0.0;
    let mut norm_out = 0.0;
    for r in ledger.records().iter().filter(|r| r.kind == CallKind::TextModel) {
        let price = prices
            .get(&r.model)
            .ok_or_else(|| MetricsError::MissingPrice(r.model.clone()))?;
        let (p_in, p_out) = price.micros();
        total += r.input_tokens as u128 * p_in + r.output_tokens as u128 * p_out;
        norm_in += r.input_tokens as f64 * p_in as f64 / t_in as f64;
        norm_out += r.output_tokens as f64 * p_out as f64 / t_out as f64;
    }
    Ok(CostEstimate {
        normalize_to: normalize_to.to_owned(),
        claims,
        normalized_input_tokens: norm_in,
        normalized_output_tokens: norm_out,
        total: PicoUsd(total),
        per_claim: PicoUsd(total / claims as u128),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(entries: &[(&str, u64, u64)]) -> TokenLedger {
        let mut l = TokenLedger::new();
        for (m, i, o) in entries {
            l.record_text(m, "verify", *i, *o);
        }
        l
    }

    #[test]
    fn single_model_rows() {
        let prices = PriceTable::gpt41_list_prices();
        let c = cost_estimate(&ledger(&[("gpt-4.1", 131_400, 4_900)]), &prices, "gpt-4.1", 1).unwrap();
        // 131400*2e-6 + 4900*8e-6
        assert_eq!(c.total, PicoUsd(302_000_000_000));
        assert_eq!(c.per_claim.to_string(), "$0.30");
        let c = cost_estimate(&ledger(&[("gpt-4.1", 52_300, 9_000)]), &prices, "gpt-4.1", 1).unwrap();
        assert!((c.per_claim_usd() - 0.1766).abs() < 1e-12);
        assert_eq!(c.per_claim.to_string(), "$0.18");
    }

    #[test]
    fn empty_ledger_costs_nothing() {
        let c = cost_estimate(&TokenLedger::new(), &PriceTable::gpt41_list_prices(), "gpt-4.1", 1).unwrap();
        assert_eq!(c.total, PicoUsd(0));
        assert_eq!(c.per_claim.to_string(), "$0.00");
    }

    #[test]
    fn auxiliary_tokens_convert_by_price_ratio() {
        let prices = PriceTable::gpt41_list_prices();
        let l = ledger(&[("gpt-4.1", 1_000, 100), ("gpt-4.1-mini", 10_000, 1_000)]);
        let c = cost_estimate(&l, &prices, "gpt-4.1", 2).unwrap();
        // mini is one fifth of the price on both sides
        assert!((c.normalized_input_tokens - 3_000.0).abs() < 1e-9);
        assert!((c.normalized_output_tokens - 300.0).abs() < 1e-9);
        let direct = 1_000 * 2 + 100 * 8; // micro-dollars
        let mini = 10_000 * 4 / 10 + 1_000 * 16 / 10;
        assert_eq!(c.total, PicoUsd((direct + mini) as u128 * 1_000_000));
        assert_eq!(c.per_claim, PicoUsd(c.total.0 / 2));
        assert_eq!(prices.ratio("gpt-4.1-mini", "gpt-4.1").unwrap(), (0.2, 0.2));
    }

    #[test]
    fn unpriced_model_is_an_error() {
        let l = ledger(&[("mystery", 1, 1)]);
        assert!(matches!(
            cost_estimate(&l, &PriceTable::gpt41_list_prices(), "gpt-4.1", 1),
            Err(MetricsError::MissingPrice(m)) if m == "mystery"
        ));
    }

    #[test]
    fn search_calls_are_free_and_totals_conserve() {
        let mut l = ledger(&[("gpt-4.1", 10, 10)]);
        l.record_search("web", "search");
        assert!(l.is_consistent());
        assert_eq!(l.calls(), 2);
        let c = cost_estimate(&l, &PriceTable::gpt41_list_prices(), "gpt-4.1", 1).unwrap();
        assert_eq!(c.total, PicoUsd((10 * 2 + 10 * 8) * 1_000_000));
    }

    #[test]
    fn price_table_file_format() {
        let json = r#"{"gpt-4.1": {"input_usd_per_million": 2.0, "output_usd_per_million": 8.0}}"#;
        let t: PriceTable = serde_json::from_str(json).unwrap();
        assert_eq!(t.get("gpt-4.1").unwrap().output_usd_per_million, 8.0);
    }

    #[test]
    fn cents_round_half_up() {
        assert_eq!(PicoUsd(5_000_000_000).cents(), 1);
        assert_eq!(PicoUsd(4_999_999_999).cents(), 0);
    }
}
