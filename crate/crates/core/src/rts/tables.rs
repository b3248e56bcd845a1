//! Attack-multiplier matrices for every game variant.
//!
//! Row order and column order are both swordman, spearman, cavalry,
//! archer, dragon; entry `[u][v]` is the multiplier of `u` attacking `v`.

use super::VariantId;

const ORIGINAL: [[f64; 5]; 5] = [
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
];

const RULE_B: [[f64; 5]; 5] = [
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
];

const RULE_C: [[f64; 5]; 5] = [
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
];

const RULE_D: [[f64; 5]; 5] = [
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
];

const RULE_E: [[f64; 5]; 5] = [
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
];

const RULE_F: [[f64; 5]; 5] = [
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [0.5, 1.0, 1.5, 1.0, 0.0],
];

const RULE_G: [[f64; 5]; 5] = [
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
];

const RULE_H: [[f64; 5]; 5] = [
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
];

const RULE_J: [[f64; 5]; 5] = [
    [0.5, 1.0, 1.5, 1.0, 0.0],
    [1.0, 1.0, 1.0, 0.5, 1.0],
    [1.0, 1.5, 0.5, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5, 2.0],
    [1.5, 0.5, 1.0, 1.0, 0.0],
];

pub(super) fn multipliers(variant: VariantId) -> [[f64; 5]; 5] {
    match variant {
        VariantId::Original => ORIGINAL,
        VariantId::B => RULE_B,
        VariantId::C => RULE_C,
        VariantId::D => RULE_D,
        VariantId::E => RULE_E,
        VariantId::F => RULE_F,
        VariantId::G => RULE_G,
        VariantId::H => RULE_H,
        VariantId::J => RULE_J,
    }
}
