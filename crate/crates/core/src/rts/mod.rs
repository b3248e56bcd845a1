//! Desk-scale multitask strategy environment.
//!
//! Each game variant is a 5x5 attack-multiplier table over the unit types
//! swordman, spearman, cavalry, archer, dragon. An episode is one
//! unit-vs-unit engagement: the instructor observes the opponent's unit,
//! sends one of five build messages, the executor builds a unit, and
//! combat resolves by comparing the two attack multipliers. The
//! rock-paper-scissors structure that shifts across the variants is what
//! multitask training exercises.

mod agent;
mod bc;
mod tables;
mod train;

pub use agent::{Role, TabularAgent};
pub use bc::{bc_generate, bc_generate_pooled, bc_train, BCDataset};
pub use train::{
    evaluate_winrate, interop_eval, rl_finetune_multitask, rl_finetune_single, Objective,
    RtsTrainConfig, TrainLogRow, TrainingLog,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const NUM_UNITS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitType {
    Swordman,
    Spearman,
    Cavalry,
    Archer,
    Dragon,
}

impl UnitType {
    pub const ALL: [UnitType; NUM_UNITS] = [
        UnitType::Swordman,
        UnitType::Spearman,
        UnitType::Cavalry,
        UnitType::Archer,
        UnitType::Dragon,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("unit index {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitType::Swordman => "swordman",
            UnitType::Spearman => "spearman",
            UnitType::Cavalry => "cavalry",
            UnitType::Archer => "archer",
            UnitType::Dragon => "dragon",
        }
    }
}

impl std::fmt::Display for UnitType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Game-variant identifier: the original rules plus the eight alternates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantId {
    Original,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    J,
}

impl VariantId {
    pub const ALL: [VariantId; 9] = [
        VariantId::Original,
        VariantId::B,
        VariantId::C,
        VariantId::D,
        VariantId::E,
        VariantId::F,
        VariantId::G,
        VariantId::H,
        VariantId::J,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::Original => "Original",
            VariantId::B => "B",
            VariantId::C => "C",
            VariantId::D => "D",
            VariantId::E => "E",
            VariantId::F => "F",
            VariantId::G => "G",
            VariantId::H => "H",
            VariantId::J => "J",
        }
    }
}

impl std::fmt::Display for VariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for VariantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Original" | "original" => Ok(VariantId::Original),
            "B" | "b" => Ok(VariantId::B),
            "C" | "c" => Ok(VariantId::C),
            "D" | "d" => Ok(VariantId::D),
            "E" | "e" => Ok(VariantId::E),
            "F" | "f" => Ok(VariantId::F),
            "G" | "g" => Ok(VariantId::G),
            "H" | "h" => Ok(VariantId::H),
            "J" | "j" => Ok(VariantId::J),
            other => Err(Error::UnknownVariant(other.to_string())),
        }
    }
}

/// A 5x5 attack-multiplier matrix: `multipliers[u][v]` is the multiplier
/// of unit `u` attacking unit `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTable {
    pub variant_id: VariantId,
    pub multipliers: [[f64; NUM_UNITS]; NUM_UNITS],
}

impl AttackTable {
    pub fn get(&self, attacker: UnitType, defender: UnitType) -> f64 {
        self.multipliers[attacker.index()][defender.index()]
    }

    fn validate(&self) -> Result<()> {
        const ALLOWED: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
        for row in &self.multipliers {
            for &m in row {
                if !ALLOWED.contains(&m) {
                    return Err(Error::InvalidGame(format!(
                        "attack multiplier {m} is not one of {{0, 0.5, 1, 1.5, 2}}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// JSON export: variant id, unit-name order, multipliers.
    pub fn to_json(&self) -> serde_json::Value {
        let unit_order: Vec<&str> = UnitType::ALL.iter().map(|u| u.name()).collect();
        serde_json::json!({
            "variant_id": self.variant_id.name(),
            "unit_order": unit_order,
            "multipliers": self.multipliers,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let variant_id: VariantId = value["variant_id"]
            .as_str()
            .ok_or_else(|| Error::Config("attack table json missing variant_id".into()))?
            .parse()?;
        let expected: Vec<&str> = UnitType::ALL.iter().map(|u| u.name()).collect();
        let order: Vec<String> =
            serde_json::from_value(value["unit_order"].clone()).map_err(Error::Serialization)?;
        if order != expected {
            return Err(Error::Config(format!(
                "attack table unit order {order:?} does not match {expected:?}"
            )));
        }
        let multipliers: [[f64; NUM_UNITS]; NUM_UNITS] =
            serde_json::from_value(value["multipliers"].clone()).map_err(Error::Serialization)?;
        let table = AttackTable {
            variant_id,
            multipliers,
        };
        table.validate()?;
        Ok(table)
    }
}

/// Look up the attack table of a game variant.
pub fn load_attack_table(variant_id: VariantId) -> AttackTable {
    AttackTable {
        variant_id,
        multipliers: tables::multipliers(variant_id),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

/// One-shot combat resolution: the side with the larger attack multiplier
/// against the other wins; equal multipliers draw.
pub fn resolve_combat(agent: UnitType, opponent: UnitType, table: &AttackTable) -> Outcome {
    let ours = table.get(agent, opponent);
    let theirs = table.get(opponent, agent);
    if ours > theirs {
        Outcome::Win
    } else if ours < theirs {
        Outcome::Loss
    } else {
        Outcome::Draw
    }
}

/// The unit maximizing the attack-multiplier margin against `opponent`;
/// ties break to the lowest unit index.
pub fn best_response(opponent: UnitType, table: &AttackTable) -> UnitType {
    let mut best = UnitType::Swordman;
    let mut best_margin = f64::NEG_INFINITY;
    for u in UnitType::ALL {
        let margin = table.get(u, opponent) - table.get(opponent, u);
        if margin > best_margin {
            best = u;
            best_margin = margin;
        }
    }
    best
}

/// How training and evaluation pick the rule-based opponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpponentMode {
    /// Deterministic pool cycling: episode `i` faces unit `i % 5`.
    Cycling,
    /// Uniform draw, derived deterministically from `(pool_seed, episode_index)`.
    Sampled,
}

pub fn sample_opponent(mode: OpponentMode, pool_seed: u64, episode_index: u64) -> UnitType {
    match mode {
        OpponentMode::Cycling => UnitType::ALL[(episode_index % 5) as usize],
        OpponentMode::Sampled => {
            let mut rng = RngStream::new(pool_seed, episode_index).rng();
            UnitType::ALL[rng.gen_range(0..NUM_UNITS)]
        }
    }
}

/// One played episode. Reward is +1 exactly on a win, -1 on a loss or draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub variant_id: VariantId,
    pub opponent_unit: UnitType,
    pub message: usize,
    pub built_unit: UnitType,
    pub outcome: Outcome,
    pub reward: f64,
}

/// Play one episode: the instructor observes the opponent unit and samples
/// a message, the executor samples a unit to build, combat resolves.
pub fn play_episode(
    instructor: &TabularAgent,
    executor: &TabularAgent,
    table: &AttackTable,
    opponent: UnitType,
    rng: &mut impl Rng,
) -> Episode {
    let message = instructor.sample_row(opponent.index(), rng);
    let built = UnitType::ALL[executor.sample_row(message, rng)];
    let outcome = resolve_combat(built, opponent, table);
    let reward = if outcome == Outcome::Win { 1.0 } else { -1.0 };
    Episode {
        variant_id: table.variant_id,
        opponent_unit: opponent,
        message,
        built_unit: built,
        outcome,
        reward,
    }
}
