//! Built-in vaccine table and drone presets.

use crate::model::{DroneSpec, StorageMode, Vaccine};

pub const DRONE_UNIT_COST: f64 = 30_000.0;
pub const HUB_COST: f64 = 1_000_000.0;
pub const DRONE_SPEED_KMH: f64 = 75.0;
/// Flight hours per drone per period (one working day).
pub const DRONE_HOURS_PER_PERIOD: f64 = 8.0;
/// Battery drones carry 1 to 2 L; presets use the midpoint.
pub const BATTERY_PAYLOAD_CM3: f64 = 1_500.0;
pub const FUEL_PAYLOAD_CM3: f64 = 10_000.0;

pub const PRESET_NAMES: [&str; 4] = ["battery-30", "battery-50", "battery-75", "fuel-900"];

/// Expected share of opened doses discarded when `vial_size`-dose vials
/// serve a session whose attendance is Binomial(`invited`, `show_rate`).
pub fn session_ovw(vial_size: u32, invited: u32, show_rate: f64) -> f64 {
    if vial_size <= 1 {
        return 0.0;
    }
    let n = vial_size as u64;
    let mut opened = 0.0;
    let mut used = 0.0;
    // Binomial pmf by recurrence.
    let mut pmf = (1.0 - show_rate).powi(invited as i32);
    for y in 0..=invited as u64 {
        if y > 0 {
            pmf *= (invited as u64 - y + 1) as f64 / y as f64 * show_rate / (1.0 - show_rate);
        }
        let vials = y.div_ceil(n);
        opened += pmf * (vials * n) as f64;
        used += pmf * y as f64;
    }
    if opened == 0.0 {
        0.0
    } else {
        1.0 - used / opened
    }
}

/// Default session model: 20 invited children, half of whom attend.
pub fn default_ovw(vial_size: u32) -> f64 {
    session_ovw(vial_size, 20, 0.5)
}

fn vaccine(id: &str, a: u32, vial: u32, q: f64, r: f64, mode: StorageMode) -> Vaccine {
    Vaccine {
        id: id.into(),
        doses_per_regimen: a,
        dose_volume_cm3: q,
        diluent_volume_cm3: r,
        ovw_rate: default_ovw(vial),
        vial_size: vial,
        storage_mode: mode,
    }
}

/// The nine vaccines of the routine schedule.
// 3.142 cm³ is a diluent volume, not pi.
#[allow(clippy::approx_constant)]
pub fn default_vaccines() -> Vec<Vaccine> {
    use StorageMode::*;
    vec![
        vaccine("BCG", 1, 20, 0.879, 0.626, Either),
        vaccine("DTP-HebB-Hip", 3, 10, 3.062, 0.0, Refrigerated),
        vaccine("Pneumo", 3, 10, 2.109, 0.0, Refrigerated),
        vaccine("IPV", 1, 10, 2.440, 0.0, Refrigerated),
        vaccine("Measles", 2, 10, 2.109, 3.142, Refrigerated),
        vaccine("MenA", 1, 10, 2.109, 3.106, Refrigerated),
        vaccine("Yellow Fever", 2, 10, 2.715, 4.730, Refrigerated),
        vaccine("Rotavirus", 2, 1, 17.126, 0.0, Refrigerated),
        vaccine("OPV", 4, 1, 0.879, 0.0, Frozen),
    ]
}

pub fn default_vaccine(id: &str) -> Option<Vaccine> {
    default_vaccines().into_iter().find(|v| v.id == id)
}

/// Named drone presets: `battery-30`, `battery-50`, `battery-75`, `fuel-900`.
pub fn drone_preset(name: &str) -> Option<DroneSpec> {
    let (payload, range) = match name {
        "battery-30" => (BATTERY_PAYLOAD_CM3, 30.0),
        "battery-50" => (BATTERY_PAYLOAD_CM3, 50.0),
        "battery-75" => (BATTERY_PAYLOAD_CM3, 75.0),
        "fuel-900" => (FUEL_PAYLOAD_CM3, 900.0),
        _ => return None,
    };
    Some(DroneSpec {
        name: name.into(),
        payload,
        speed_kmh: DRONE_SPEED_KMH,
        range_km: range,
        unit_cost: DRONE_UNIT_COST,
        hours_per_period: DRONE_HOURS_PER_PERIOD,
    })
}

pub fn default_drone_specs() -> Vec<DroneSpec> {
    PRESET_NAMES.iter().filter_map(|n| drone_preset(n)).collect()
}
