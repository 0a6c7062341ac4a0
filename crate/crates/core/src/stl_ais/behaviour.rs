use rand::Rng;

use crate::genome::{BehaviourGene, BehaviourKind, TurnDirection};
use crate::perception::BlobZone;

/// Left and right wheel speeds in epuck speed units per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelSpeeds {
    pub left: f64,
    pub right: f64,
}

fn reduced(speed: f64, percent: u8) -> f64 {
    speed * f64::from(100 - percent.min(100)) / 100.0
}

/// Percent-chance draw.
fn chance<R: Rng + ?Sized>(rng: &mut R, percent: u8) -> bool {
    rng.gen_range(0..100u8) < percent
}

/// Decodes one tick of wheel speeds from a behaviour gene.
///
/// `blob` only matters for target tracking; without it the robot drives straight.
pub fn execute_behaviour<R: Rng + ?Sized>(gene: &BehaviourGene, blob: Option<BlobZone>, rng: &mut R) -> WheelSpeeds {
    let s = f64::from(gene.speed);
    let turn_on_side = |side: TurnDirection, percent: u8| match side {
        TurnDirection::Left => WheelSpeeds { left: reduced(s, percent), right: s },
        TurnDirection::Right => WheelSpeeds { left: s, right: reduced(s, percent) },
    };
    let straight = WheelSpeeds { left: s, right: s };
    match gene.kind {
        BehaviourKind::WanderOneWay => {
            if chance(rng, gene.turn_frequency) {
                turn_on_side(gene.direction, gene.turn_angle)
            } else {
                straight
            }
        }
        BehaviourKind::WanderBoth => {
            if !chance(rng, gene.turn_frequency) {
                straight
            } else if chance(rng, gene.right_turn_frequency) {
                turn_on_side(TurnDirection::Right, gene.right_turn_angle)
            } else {
                turn_on_side(TurnDirection::Left, gene.turn_angle)
            }
        }
        BehaviourKind::TurnForward => turn_on_side(gene.direction, gene.turn_angle),
        BehaviourKind::Spin => {
            let w = s * f64::from(gene.turn_angle) / 100.0;
            match gene.direction {
                TurnDirection::Left => WheelSpeeds { left: -w, right: w },
                TurnDirection::Right => WheelSpeeds { left: w, right: -w },
            }
        }
        BehaviourKind::TurnBackward => match gene.direction {
            TurnDirection::Left => WheelSpeeds { left: -reduced(s, gene.turn_angle), right: -s },
            TurnDirection::Right => WheelSpeeds { left: -s, right: -reduced(s, gene.turn_angle) },
        },
        BehaviourKind::TrackTarget => match blob {
            Some(BlobZone::Left) => turn_on_side(TurnDirection::Left, gene.turn_angle),
            Some(BlobZone::Right) => turn_on_side(TurnDirection::Right, gene.turn_angle),
            Some(BlobZone::Centre) | None => straight,
        },
    }
}
