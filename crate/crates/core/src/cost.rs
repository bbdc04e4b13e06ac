//! Capital-cost conversions used for the fixed vehicle term.

use thiserror::Error;

use crate::instance::{BusType, GlobalParams};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CostError {
    #[error("depreciation rate must be > 0, got {0}")]
    Rate(f64),
    #[error("useful life must be at least one year")]
    Life,
    #[error("present value must be finite and > 0, got {0}")]
    Principal(f64),
}

/// Equal yearly payment that retires `principal` over `years` at `rate`:
/// `A = P r / (1 - (1 + r)^-n)`.
pub fn amortized_capital(principal: f64, rate: f64, years: u32) -> Result<f64, CostError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(CostError::Rate(rate));
    }
    if years == 0 {
        return Err(CostError::Life);
    }
    if !(principal > 0.0) || !principal.is_finite() {
        return Err(CostError::Principal(principal));
    }
    Ok(annuity(principal, rate, years))
}

fn annuity(principal: f64, rate: f64, years: u32) -> f64 {
    principal * rate / (1.0 - libm::pow(1.0 + rate, -(years as f64)))
}

/// Purchase price of a bus: body plus battery.
pub fn fleet_capital_cost(base: f64, battery_kwh: f64, price_per_kwh: f64) -> f64 {
    base + battery_kwh * price_per_kwh
}

/// Fixed cost of one service: the body and battery annuities over the
/// useful life, spread over the services run in a year.
pub fn per_service_fleet_cost(bus: &BusType, params: &GlobalParams) -> f64 {
    let battery_cost = bus.battery * params.battery_price_per_kwh;
    let body_cost = bus.capital - battery_cost;
    let life = params.useful_life_years;
    let yearly = annuity(body_cost, params.bus_depreciation_rate, life)
        + annuity(battery_cost, params.battery_depreciation_rate, life);
    yearly / params.services_per_year as f64
}
