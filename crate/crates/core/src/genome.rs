//! Behaviour genes, gene sets and the genetic-sequence text format.
//!
//! A genome file holds `n` gene sets. Each set starts with a header
//! `@set <index> <t_seconds> <collisions>` followed by eight gene lines of nine
//! single-space separated integers:
//!
//! ```text
//! <antigen 0-7> <T> <S> <F> <A> <D> <R_f> <R_a> <score>
//! ```
//!
//! Lines starting with `#` and blank lines are ignored on input and never
//! emitted.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::ANTIGEN_COUNT;

/// Basic behaviour type `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BehaviourKind {
    /// Wander, turning only towards `D`.
    WanderOneWay = 1,
    /// Wander, turning both ways.
    WanderBoth = 2,
    TurnForward = 3,
    Spin = 4,
    TurnBackward = 5,
    TrackTarget = 6,
}

impl BehaviourKind {
    pub const ALL: [BehaviourKind; 6] = [
        BehaviourKind::WanderOneWay,
        BehaviourKind::WanderBoth,
        BehaviourKind::TurnForward,
        BehaviourKind::Spin,
        BehaviourKind::TurnBackward,
        BehaviourKind::TrackTarget,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| i64::from(k.code()) == code)
    }

    /// Behaviour types a random gene may take for a given 0-based antigen index.
    pub fn allowed_for(antigen_index: u8) -> &'static [BehaviourKind] {
        use BehaviourKind::*;
        match antigen_index {
            0 => &[WanderOneWay, WanderBoth],
            1 => &[TrackTarget],
            2..=4 => &[TurnForward, Spin],
            _ => &[Spin, TurnBackward],
        }
    }
}

/// Turn direction `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TurnDirection {
    Left = 1,
    Right = 2,
}

impl TurnDirection {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(TurnDirection::Left),
            2 => Some(TurnDirection::Right),
            _ => None,
        }
    }
}

/// Inclusive limits on the evolvable attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributeBounds {
    pub speed: (u32, u32),
    pub turn_frequency: (u8, u8),
    pub turn_angle: (u8, u8),
    pub right_turn_frequency: (u8, u8),
    pub right_turn_angle: (u8, u8),
}

impl Default for AttributeBounds {
    fn default() -> Self {
        Self {
            speed: (100, 900),
            turn_frequency: (10, 90),
            turn_angle: (10, 90),
            right_turn_frequency: (10, 90),
            right_turn_angle: (10, 90),
        }
    }
}

/// One antibody: a parameterised behaviour answering one antigen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BehaviourGene {
    /// 0-based antigen index (antigen code minus one).
    pub antigen_index: u8,
    pub kind: BehaviourKind,
    /// Principal wheel speed in epuck speed units per second.
    pub speed: u32,
    /// Percent of ticks spent turning.
    pub turn_frequency: u8,
    /// Percent reduction of one wheel speed while turning.
    pub turn_angle: u8,
    pub direction: TurnDirection,
    /// Percent of turning ticks that are right turns (wander-both only).
    pub right_turn_frequency: u8,
    /// Percent reduction of the right wheel on right turns.
    pub right_turn_angle: u8,
    /// Final reinforcement score, 0-100.
    pub score: u8,
}

impl BehaviourGene {
    /// Draws a random gene for `antigen_index` within `bounds`, score 50.
    pub fn random<R: Rng + ?Sized>(antigen_index: u8, bounds: &AttributeBounds, rng: &mut R) -> Self {
        let kinds = BehaviourKind::allowed_for(antigen_index);
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let direction = if rng.gen_bool(0.5) {
            TurnDirection::Left
        } else {
            TurnDirection::Right
        };
        Self {
            antigen_index,
            kind,
            speed: rng.gen_range(bounds.speed.0..=bounds.speed.1),
            turn_frequency: rng.gen_range(bounds.turn_frequency.0..=bounds.turn_frequency.1),
            turn_angle: rng.gen_range(bounds.turn_angle.0..=bounds.turn_angle.1),
            direction,
            right_turn_frequency: rng
                .gen_range(bounds.right_turn_frequency.0..=bounds.right_turn_frequency.1),
            right_turn_angle: rng.gen_range(bounds.right_turn_angle.0..=bounds.right_turn_angle.1),
            score: 50,
        }
    }

    /// Checks every attribute against `bounds`, returning the first violation.
    pub fn check_bounds(&self, bounds: &AttributeBounds) -> Result<(), (&'static str, i64)> {
        fn within<T: PartialOrd + Copy + Into<i64>>(
            name: &'static str,
            v: T,
            (lo, hi): (T, T),
        ) -> Result<(), (&'static str, i64)> {
            if v < lo || v > hi {
                Err((name, v.into()))
            } else {
                Ok(())
            }
        }
        within("antigen", self.antigen_index, (0, ANTIGEN_COUNT as u8 - 1))?;
        within("S", self.speed, bounds.speed)?;
        within("F", self.turn_frequency, bounds.turn_frequency)?;
        within("A", self.turn_angle, bounds.turn_angle)?;
        within("R_f", self.right_turn_frequency, bounds.right_turn_frequency)?;
        within("R_a", self.right_turn_angle, bounds.right_turn_angle)?;
        within("score", self.score, (0, 100))
    }

    /// Whether the behaviour type is in the per-antigen restriction table.
    pub fn kind_allowed(&self) -> bool {
        BehaviourKind::allowed_for(self.antigen_index).contains(&self.kind)
    }

    fn parse_line(line: &str, line_no: usize, bounds: &AttributeBounds) -> Result<Self, GenomeError> {
        let fields = line
            .split(' ')
            .map(|tok| {
                tok.parse::<i64>().map_err(|_| GenomeError::Malformed {
                    line: line_no,
                    reason: format!("`{tok}` is not an integer"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if fields.len() != 9 {
            return Err(GenomeError::Malformed {
                line: line_no,
                reason: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let oob = |field: &'static str, value: i64| GenomeError::OutOfBounds {
            line: line_no,
            field,
            value,
        };
        let narrow_u8 = |field: &'static str, v: i64| u8::try_from(v).map_err(|_| oob(field, v));
        let kind = BehaviourKind::from_code(fields[1]).ok_or_else(|| oob("T", fields[1]))?;
        let direction = TurnDirection::from_code(fields[5]).ok_or_else(|| oob("D", fields[5]))?;
        let gene = Self {
            antigen_index: narrow_u8("antigen", fields[0])?,
            kind,
            speed: u32::try_from(fields[2]).map_err(|_| oob("S", fields[2]))?,
            turn_frequency: narrow_u8("F", fields[3])?,
            turn_angle: narrow_u8("A", fields[4])?,
            direction,
            right_turn_frequency: narrow_u8("R_f", fields[6])?,
            right_turn_angle: narrow_u8("R_a", fields[7])?,
            score: narrow_u8("score", fields[8])?,
        };
        gene.check_bounds(bounds).map_err(|(f, v)| oob(f, v))?;
        Ok(gene)
    }
}

impl fmt::Display for BehaviourGene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} {} {}",
            self.antigen_index,
            self.kind.code(),
            self.speed,
            self.turn_frequency,
            self.turn_angle,
            self.direction.code(),
            self.right_turn_frequency,
            self.right_turn_angle,
            self.score
        )
    }
}

impl FromStr for BehaviourGene {
    type Err = GenomeError;

    /// Parses a single gene line with the default bounds.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehaviourGene::parse_line(s, 1, &AttributeBounds::default())
    }
}

/// Draws a random gene for `antigen_index` with the default attribute bounds.
pub fn random_gene<R: Rng + ?Sized>(antigen_index: u8, rng: &mut R) -> BehaviourGene {
    BehaviourGene::random(antigen_index, &AttributeBounds::default(), rng)
}

/// The eight behaviours of one evolved robot plus its final evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSet {
    /// Indexed by antigen index.
    pub genes: [BehaviourGene; ANTIGEN_COUNT],
    /// Task completion time of the final evaluation, seconds.
    pub task_time: u32,
    pub collisions: u32,
}

/// `n` gene sets from independent populations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    sets: Vec<GeneSet>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenomeError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: {field} = {value} is out of bounds")]
    OutOfBounds {
        line: usize,
        field: &'static str,
        value: i64,
    },
    #[error("line {line}: duplicate antigen {antigen} in set")]
    DuplicateAntigen { line: usize, antigen: u8 },
    #[error("set {set}: missing antigen {antigen}")]
    MissingAntigen { set: usize, antigen: u8 },
    #[error("line {line}: gene line before any `@set` header")]
    MissingHeader { line: usize },
    #[error("line {line}: expected set index {expected}, found {found}")]
    SetIndex {
        line: usize,
        expected: usize,
        found: i64,
    },
    #[error("line {line}: task time must be positive")]
    NonPositiveTime { line: usize },
    #[error("genome needs at least 2 gene sets, found {found}")]
    TooFewSets { found: usize },
}

impl Genome {
    pub fn new(sets: Vec<GeneSet>) -> Result<Self, GenomeError> {
        if sets.len() < 2 {
            return Err(GenomeError::TooFewSets { found: sets.len() });
        }
        for (s, set) in sets.iter().enumerate() {
            if set.task_time == 0 {
                return Err(GenomeError::NonPositiveTime { line: 0 });
            }
            for (j, gene) in set.genes.iter().enumerate() {
                if usize::from(gene.antigen_index) != j {
                    return Err(GenomeError::MissingAntigen {
                        set: s,
                        antigen: j as u8,
                    });
                }
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[GeneSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn gene(&self, set: usize, antigen_index: usize) -> &BehaviourGene {
        &self.sets[set].genes[antigen_index]
    }

    /// Parses with explicit attribute bounds.
    pub fn parse_with(text: &str, bounds: &AttributeBounds) -> Result<Self, GenomeError> {
        struct Partial {
            task_time: u32,
            collisions: u32,
            genes: Vec<BehaviourGene>,
        }

        fn finish(p: Partial, set: usize) -> Result<GeneSet, GenomeError> {
            if p.genes.len() != ANTIGEN_COUNT {
                return Err(GenomeError::MissingAntigen {
                    set,
                    antigen: p.genes.len() as u8,
                });
            }
            let genes: [BehaviourGene; ANTIGEN_COUNT] =
                p.genes.try_into().expect("length checked above");
            Ok(GeneSet {
                genes,
                task_time: p.task_time,
                collisions: p.collisions,
            })
        }

        let mut sets = Vec::new();
        let mut current: Option<Partial> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@set") {
                if let Some(done) = current.take() {
                    sets.push(finish(done, sets.len())?);
                }
                let nums = rest
                    .split_whitespace()
                    .map(|t| t.parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| GenomeError::Malformed {
                        line: line_no,
                        reason: "set header fields must be integers".into(),
                    })?;
                if nums.len() != 3 {
                    return Err(GenomeError::Malformed {
                        line: line_no,
                        reason: format!("set header needs 3 fields, found {}", nums.len()),
                    });
                }
                if nums[0] != sets.len() as i64 {
                    return Err(GenomeError::SetIndex {
                        line: line_no,
                        expected: sets.len(),
                        found: nums[0],
                    });
                }
                if nums[1] <= 0 {
                    return Err(GenomeError::NonPositiveTime { line: line_no });
                }
                let task_time = u32::try_from(nums[1]).map_err(|_| GenomeError::OutOfBounds {
                    line: line_no,
                    field: "t",
                    value: nums[1],
                })?;
                let collisions = u32::try_from(nums[2]).map_err(|_| GenomeError::OutOfBounds {
                    line: line_no,
                    field: "c",
                    value: nums[2],
                })?;
                current = Some(Partial {
                    task_time,
                    collisions,
                    genes: Vec::with_capacity(ANTIGEN_COUNT),
                });
                continue;
            }
            let Some(partial) = current.as_mut() else {
                return Err(GenomeError::MissingHeader { line: line_no });
            };
            let gene = BehaviourGene::parse_line(line, line_no, bounds)?;
            let expected = partial.genes.len() as u8;
            if gene.antigen_index < expected {
                return Err(GenomeError::DuplicateAntigen {
                    line: line_no,
                    antigen: gene.antigen_index,
                });
            }
            if gene.antigen_index > expected {
                return Err(GenomeError::MissingAntigen {
                    set: sets.len(),
                    antigen: expected,
                });
            }
            partial.genes.push(gene);
        }
        if let Some(done) = current.take() {
            sets.push(finish(done, sets.len())?);
        }
        Genome::new(sets)
    }
}

impl FromStr for Genome {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genome::parse_with(s, &AttributeBounds::default())
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, set) in self.sets.iter().enumerate() {
            writeln!(f, "@set {} {} {}", i, set.task_time, set.collisions)?;
            for gene in &set.genes {
                writeln!(f, "{gene}")?;
            }
        }
        Ok(())
    }
}

pub fn parse_genome(text: &str) -> Result<Genome, GenomeError> {
    text.parse()
}

pub fn serialize_genome(genome: &Genome) -> String {
    let mut out = String::new();
    write!(out, "{genome}").expect("writing to a String cannot fail");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;

    const EXAMPLE: &str = "0 2 537 80 51 2 37 76 50";

    fn valid_set(t: u32) -> String {
        let mut s = format!("@set {{}} {t} 1\n");
        for j in 0..8u8 {
            let kind = BehaviourKind::allowed_for(j)[0].code();
            s.push_str(&format!("{j} {kind} 500 50 50 1 50 50 50\n"));
        }
        s
    }

    fn genome_text(n: usize) -> String {
        (0..n).map(|i| valid_set(100 + i as u32).replace("{}", &i.to_string())).collect()
    }

    #[test]
    fn example_line_fields() {
        let gene = BehaviourGene::parse_line(EXAMPLE, 1, &AttributeBounds::default()).unwrap();
        assert_eq!(gene.antigen_index, 0);
        assert_eq!(gene.kind, BehaviourKind::WanderBoth);
        assert_eq!(gene.speed, 537);
        assert_eq!(gene.turn_frequency, 80);
        assert_eq!(gene.turn_angle, 51);
        assert_eq!(gene.direction, TurnDirection::Right);
        assert_eq!(gene.right_turn_frequency, 37);
        assert_eq!(gene.right_turn_angle, 76);
        assert_eq!(gene.score, 50);
        assert_eq!(gene.to_string(), EXAMPLE);
    }

    #[test]
    fn five_sets_give_forty_genes() {
        let g = parse_genome(&genome_text(5)).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.sets().iter().map(|s| s.genes.len()).sum::<usize>(), 40);
    }

    #[test]
    fn comments_and_blanks_are_dropped() {
        let text = format!("# evolved\n\n{}", genome_text(2));
        let g = parse_genome(&text).unwrap();
        assert_eq!(serialize_genome(&g), genome_text(2));
    }

    #[test]
    fn behaviour_type_out_of_range() {
        let err = BehaviourGene::parse_line("0 7 537 80 51 2 37 76 50", 4, &AttributeBounds::default())
            .unwrap_err();
        assert_eq!(
            err,
            GenomeError::OutOfBounds {
                line: 4,
                field: "T",
                value: 7
            }
        );
    }

    #[test]
    fn malformed_lines() {
        let b = AttributeBounds::default();
        for bad in ["0 2 537 80 51 2 37 76", "0 2 537 80 51 2 37 76 50 1", "0 2 5x7 80 51 2 37 76 50", "0  2 537 80 51 2 37 76 50"] {
            assert!(matches!(
                BehaviourGene::parse_line(bad, 1, &b),
                Err(GenomeError::Malformed { .. })
            ));
        }
        assert!(matches!(
            BehaviourGene::parse_line("0 2 537 80 51 3 37 76 50", 1, &b),
            Err(GenomeError::OutOfBounds { field: "D", .. })
        ));
        assert!(matches!(
            BehaviourGene::parse_line("0 2 950 80 51 2 37 76 50", 1, &b),
            Err(GenomeError::OutOfBounds { field: "S", .. })
        ));
        assert!(matches!(
            BehaviourGene::parse_line("0 2 537 80 51 2 37 76 101", 1, &b),
            Err(GenomeError::OutOfBounds { field: "score", .. })
        ));
    }

    #[test]
    fn structural_errors() {
        let set0 = valid_set(100).replace("{}", "0");
        assert!(matches!(
            parse_genome(&set0),
            Err(GenomeError::TooFewSets { found: 1 })
        ));
        assert!(matches!(
            parse_genome(EXAMPLE),
            Err(GenomeError::MissingHeader { line: 1 })
        ));
        let dup = genome_text(2).replacen("1 6 500", "0 1 500", 1);
        assert!(matches!(
            parse_genome(&dup),
            Err(GenomeError::DuplicateAntigen { antigen: 0, .. })
        ));
        let short: String = genome_text(2)
            .lines()
            .filter(|l| !l.starts_with("7 "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            parse_genome(&short),
            Err(GenomeError::MissingAntigen { set: 0, antigen: 7 })
        ));
        let bad_index = genome_text(2).replace("@set 1", "@set 4");
        assert!(matches!(parse_genome(&bad_index), Err(GenomeError::SetIndex { .. })));
        let zero_t = genome_text(2).replace("@set 0 100", "@set 0 0");
        assert!(matches!(
            parse_genome(&zero_t),
            Err(GenomeError::NonPositiveTime { line: 1 })
        ));
    }

    #[test]
    fn random_gene_respects_tables() {
        let mut rng = seed::rng(11);
        let b = AttributeBounds::default();
        for antigen in 0..8u8 {
            for _ in 0..10_000 {
                let g = random_gene(antigen, &mut rng);
                assert_eq!(g.antigen_index, antigen);
                assert!(g.check_bounds(&b).is_ok());
                assert!(g.kind_allowed());
                assert_eq!(g.score, 50);
                match antigen {
                    1 => assert_eq!(g.kind, BehaviourKind::TrackTarget),
                    5 => assert!(matches!(g.kind, BehaviourKind::Spin | BehaviourKind::TurnBackward)),
                    _ => {}
                }
            }
        }
        let a = random_gene(3, &mut seed::rng(99));
        let b = random_gene(3, &mut seed::rng(99));
        assert_eq!(a, b);
    }

    fn arb_gene(antigen: u8) -> impl Strategy<Value = BehaviourGene> {
        (any::<u64>()).prop_map(move |s| {
            let mut g = random_gene(antigen, &mut seed::rng(s));
            g.score = (s % 101) as u8;
            g
        })
    }

    fn arb_set() -> impl Strategy<Value = GeneSet> {
        let genes: Vec<_> = (0..8u8).map(arb_gene).collect();
        (genes, 1u32..100_000, 0u32..1000).prop_map(|(genes, t, c)| GeneSet {
            genes: genes.try_into().unwrap(),
            task_time: t,
            collisions: c,
        })
    }

    proptest! {
        #[test]
        fn round_trip(sets in prop::collection::vec(arb_set(), 2..7)) {
            let g = Genome::new(sets).unwrap();
            let text = serialize_genome(&g);
            let back = parse_genome(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(serialize_genome(&back), text);
        }

        #[test]
        fn fuzzed_lines_never_half_parse(line in "[0-9 x-]{0,40}") {
            let text = format!("{}@set 1 5 0\n{line}\n", genome_text(1));
            // A set with a single gene line can never be complete.
            prop_assert!(parse_genome(&text).is_err());
        }
    }
}
