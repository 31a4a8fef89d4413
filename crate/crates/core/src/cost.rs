//! Token usage, fixed-point money and budget bookkeeping.
//!
//! All ledger arithmetic is done in integer picodollars (12 fractional
//! digits). Binary floating point never touches a cost.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Fractional digits carried by [`MoneyUsd`].
pub const MONEY_SCALE_DIGITS: u32 = 12;
const PICOS_PER_DOLLAR: u128 = 1_000_000_000_000;
const TOKENS_PER_PRICE_UNIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub const ZERO: TokenUsage = TokenUsage { prompt_tokens: 0, completion_tokens: 0 };

    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self { prompt_tokens, completion_tokens }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

impl Sum for TokenUsage {
    fn sum<I: Iterator<Item = TokenUsage>>(iter: I) -> Self {
        iter.fold(TokenUsage::ZERO, Add::add)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoneyError {
    #[error("invalid dollar amount {0:?}")]
    Parse(String),
    #[error("amount {0:?} has more than 12 fractional digits")]
    TooPrecise(String),
    #[error("price {0} per million tokens is finer than one picodollar per token")]
    PriceResolution(MoneyUsd),
}

/// Non-negative US dollar amount with exactly 12 fractional digits.
///
/// Serialized as a decimal string (`"0.000450000000"`) so JSON round trips
/// are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MoneyUsd {
    picos: u128,
}

impl MoneyUsd {
    pub const ZERO: MoneyUsd = MoneyUsd { picos: 0 };

    pub const fn from_picos(picos: u128) -> Self {
        Self { picos }
    }

    pub const fn from_dollars(dollars: u64) -> Self {
        Self { picos: dollars as u128 * PICOS_PER_DOLLAR }
    }

    pub const fn picos(&self) -> u128 {
        self.picos
    }

    pub fn is_zero(&self) -> bool {
        self.picos == 0
    }

    pub fn checked_sub(self, rhs: MoneyUsd) -> Option<MoneyUsd> {
        self.picos.checked_sub(rhs.picos).map(MoneyUsd::from_picos)
    }
}

impl Add for MoneyUsd {
    type Output = MoneyUsd;

    fn add(self, rhs: MoneyUsd) -> MoneyUsd {
        MoneyUsd { picos: self.picos + rhs.picos }
    }
}

impl AddAssign for MoneyUsd {
    fn add_assign(&mut self, rhs: MoneyUsd) {
        self.picos += rhs.picos;
    }
}

impl Sum for MoneyUsd {
    fn sum<I: Iterator<Item = MoneyUsd>>(iter: I) -> Self {
        iter.fold(MoneyUsd::ZERO, Add::add)
    }
}

impl fmt::Display for MoneyUsd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:012}",
            self.picos / PICOS_PER_DOLLAR,
            self.picos % PICOS_PER_DOLLAR
        )
    }
}

impl FromStr for MoneyUsd {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim().trim_start_matches('$');
        let bad = || MoneyError::Parse(s.to_string());
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > MONEY_SCALE_DIGITS as usize {
            return Err(MoneyError::TooPrecise(s.to_string()));
        }
        let whole: u128 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let mut frac_picos: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        frac_picos *= 10u128.pow(MONEY_SCALE_DIGITS - frac.len() as u32);
        whole
            .checked_mul(PICOS_PER_DOLLAR)
            .and_then(|w| w.checked_add(frac_picos))
            .map(MoneyUsd::from_picos)
            .ok_or_else(bad)
    }
}

impl Serialize for MoneyUsd {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MoneyUsd {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Prices in US dollars per one million tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostModel {
    pub model_id: String,
    pub prompt_price_per_million: MoneyUsd,
    pub completion_price_per_million: MoneyUsd,
}

impl CostModel {
    /// Prices must resolve to whole picodollars per token, which keeps
    /// [`cost_of`] exact and linear.
    pub fn new(
        model_id: impl Into<String>,
        prompt_price_per_million: MoneyUsd,
        completion_price_per_million: MoneyUsd,
    ) -> Result<Self, MoneyError> {
        for price in [prompt_price_per_million, completion_price_per_million] {
            if price.picos() % TOKENS_PER_PRICE_UNIT != 0 {
                return Err(MoneyError::PriceResolution(price));
            }
        }
        Ok(Self {
            model_id: model_id.into(),
            prompt_price_per_million,
            completion_price_per_million,
        })
    }

    /// gpt-4o-mini snapshot prices: $0.15 prompt, $0.60 completion.
    pub fn gpt_4o_mini() -> Self {
        Self::new("gpt-4o-mini", money("0.15"), money("0.60")).expect("static price")
    }

    /// Llama-3.3-70B (TogetherAI) prices: $0.88 both ways.
    pub fn llama_3_3_70b() -> Self {
        Self::new("llama-3.3-70b", money("0.88"), money("0.88")).expect("static price")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "gpt-4o-mini" => Some(Self::gpt_4o_mini()),
            "llama-3.3-70b" | "LLaMA-3.3-70B" | "meta-llama/Llama-3.3-70B-Instruct-Turbo" => {
                Some(Self::llama_3_3_70b())
            }
            _ => None,
        }
    }
}

fn money(text: &str) -> MoneyUsd {
    text.parse().expect("static amount")
}

#[derive(Deserialize)]
struct RawCostModel {
    model_id: String,
    prompt_price_per_million: MoneyUsd,
    completion_price_per_million: MoneyUsd,
}

impl<'de> Deserialize<'de> for CostModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawCostModel::deserialize(deserializer)?;
        CostModel::new(raw.model_id, raw.prompt_price_per_million, raw.completion_price_per_million)
            .map_err(serde::de::Error::custom)
    }
}

/// `prompt_tokens * prompt_price / 1e6 + completion_tokens * completion_price / 1e6`, exactly.
pub fn cost_of(usage: &TokenUsage, model: &CostModel) -> MoneyUsd {
    let per_token = |price: MoneyUsd| price.picos() / TOKENS_PER_PRICE_UNIT;
    MoneyUsd::from_picos(
        usage.prompt_tokens as u128 * per_token(model.prompt_price_per_million)
            + usage.completion_tokens as u128 * per_token(model.completion_price_per_million),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub limit: MoneyUsd,
    pub spent: MoneyUsd,
}

impl Budget {
    pub fn new(limit: MoneyUsd) -> Self {
        Self { limit, spent: MoneyUsd::ZERO }
    }

    /// Records spend. Overshooting the limit is allowed; admission control
    /// lives in [`Budget::can_afford`].
    pub fn charge(self, amount: MoneyUsd) -> Budget {
        Budget { limit: self.limit, spent: self.spent + amount }
    }

    /// Admission gate: strictly `spent < limit`.
    pub fn can_afford(&self) -> bool {
        self.spent < self.limit
    }

    pub fn is_exhausted(&self) -> bool {
        !self.can_afford()
    }
}

/// Budget shared between attempt workers. `charge` and `can_afford` are
/// serialized through one lock.
#[derive(Debug)]
pub struct SharedBudget {
    inner: Mutex<Budget>,
}

impl SharedBudget {
    pub fn new(budget: Budget) -> Self {
        Self { inner: Mutex::new(budget) }
    }

    pub fn snapshot(&self) -> Budget {
        *self.inner.lock().expect("budget lock poisoned")
    }

    pub fn can_afford(&self) -> bool {
        self.snapshot().can_afford()
    }

    /// Would the budget still admit work if `pending` were already spent?
    pub fn can_afford_with(&self, pending: MoneyUsd) -> bool {
        self.snapshot().charge(pending).can_afford()
    }

    pub fn charge(&self, amount: MoneyUsd) -> Budget {
        let mut guard = self.inner.lock().expect("budget lock poisoned");
        *guard = guard.charge(amount);
        *guard
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn usd(s: &str) -> MoneyUsd {
        s.parse().unwrap()
    }

    #[test]
    fn zero_usage_costs_nothing() {
        assert_eq!(cost_of(&TokenUsage::ZERO, &CostModel::gpt_4o_mini()), MoneyUsd::ZERO);
        assert_eq!(cost_of(&TokenUsage::ZERO, &CostModel::llama_3_3_70b()), MoneyUsd::ZERO);
    }

    #[test]
    fn table_prices() {
        let mini = CostModel::gpt_4o_mini();
        assert_eq!(cost_of(&TokenUsage::new(1_000_000, 0), &mini), usd("0.15"));
        assert_eq!(cost_of(&TokenUsage::new(0, 1_000_000), &mini), usd("0.60"));
        let llama = CostModel::llama_3_3_70b();
        assert_eq!(cost_of(&TokenUsage::new(1_000_000, 1_000_000), &llama), usd("1.76"));
    }

    #[test]
    fn hand_evaluated_mixed_usage() {
        // 1000 * 0.15e-6 + 500 * 0.60e-6 = 0.00015 + 0.0003
        let cost = cost_of(&TokenUsage::new(1_000, 500), &CostModel::gpt_4o_mini());
        assert_eq!(cost, usd("0.00045"));
        assert_eq!(cost.to_string(), "0.000450000000");
    }

    #[test]
    fn money_parsing() {
        assert_eq!(usd("1").picos(), 1_000_000_000_000);
        assert_eq!(usd(".5"), usd("0.500"));
        assert_eq!(usd("$2.25").to_string(), "2.250000000000");
        assert!(matches!("0.0000000000001".parse::<MoneyUsd>(), Err(MoneyError::TooPrecise(_))));
        assert!("-1".parse::<MoneyUsd>().is_err());
        assert!("abc".parse::<MoneyUsd>().is_err());
        assert!(".".parse::<MoneyUsd>().is_err());
    }

    #[test]
    fn money_json_is_a_decimal_string() {
        let json = serde_json::to_string(&usd("0.1")).unwrap();
        assert_eq!(json, "\"0.100000000000\"");
        assert_eq!(serde_json::from_str::<MoneyUsd>(&json).unwrap(), usd("0.1"));
    }

    #[test]
    fn price_finer_than_a_picodollar_per_token_is_rejected() {
        assert!(CostModel::new("x", usd("0.0000001"), MoneyUsd::ZERO).is_err());
        assert!(CostModel::new("x", usd("0.000001"), MoneyUsd::ZERO).is_ok());
    }

    #[test]
    fn charge_and_admission() {
        let b = Budget::new(MoneyUsd::from_dollars(10)).charge(usd("0.5"));
        assert_eq!(b.spent, usd("0.5"));

        let b = Budget { limit: usd("1"), spent: usd("0.9") }.charge(usd("0.2"));
        assert_eq!(b.spent, usd("1.1"));
        assert!(b.is_exhausted());

        let zero = Budget::new(MoneyUsd::ZERO).charge(MoneyUsd::ZERO);
        assert_eq!(zero.spent, MoneyUsd::ZERO);
        assert!(zero.is_exhausted());
    }

    #[test]
    fn admission_is_strict() {
        assert!(Budget { limit: usd("10"), spent: usd("9.99") }.can_afford());
        assert!(!Budget { limit: usd("10"), spent: usd("10.00") }.can_afford());
        assert!(!Budget::new(MoneyUsd::ZERO).can_afford());
    }

    #[test]
    fn shared_budget_tracks_pending_spend() {
        let shared = SharedBudget::new(Budget::new(usd("1")));
        assert!(shared.can_afford_with(usd("0.999999")));
        assert!(!shared.can_afford_with(usd("1")));
        shared.charge(usd("0.4"));
        assert_eq!(shared.snapshot().spent, usd("0.4"));
    }

    fn arb_usage() -> impl Strategy<Value = TokenUsage> {
        (0u64..50_000_000, 0u64..50_000_000).prop_map(|(p, c)| TokenUsage::new(p, c))
    }

    fn arb_model() -> impl Strategy<Value = CostModel> {
        (0u128..100_000_000, 0u128..100_000_000).prop_map(|(p, c)| {
            CostModel::new(
                "m",
                MoneyUsd::from_picos(p * 1_000_000),
                MoneyUsd::from_picos(c * 1_000_000),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn cost_is_linear(a in arb_usage(), b in arb_usage(), model in arb_model()) {
            prop_assert_eq!(cost_of(&(a + b), &model), cost_of(&a, &model) + cost_of(&b, &model));
        }

        #[test]
        fn usage_addition_commutes(a in arb_usage(), b in arb_usage()) {
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn money_display_round_trips(picos in 0u128..10_000_000_000_000_000u128) {
            let m = MoneyUsd::from_picos(picos);
            prop_assert_eq!(m.to_string().parse::<MoneyUsd>().unwrap(), m);
        }

        #[test]
        fn admission_is_monotone(limit in 0u128..1_000_000, charges in proptest::collection::vec(0u128..100_000, 0..20)) {
            let mut b = Budget::new(MoneyUsd::from_picos(limit));
            let mut was_closed = !b.can_afford();
            for c in charges {
                b = b.charge(MoneyUsd::from_picos(c));
                if was_closed {
                    prop_assert!(!b.can_afford());
                }
                was_closed = !b.can_afford();
            }
        }
    }
}
