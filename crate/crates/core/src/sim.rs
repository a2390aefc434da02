//! Public goods game simulator with planted player types.
//!
//! Players are split into fixed groups. Each round every player forms a
//! belief about the co-players' average contribution, contributes according
//! to its type, and observes the co-players' actual average. Beliefs in
//! round 1 start from the type's `initial_belief`; later beliefs are the
//! previous round's rounded co-player average. Both belief and contribution
//! get rounded Gaussian noise and are clamped to `[0, endowment]`, so every
//! value stays on the integer token lattice.
//!
//! All randomness comes from one ChaCha8 stream seeded by the caller, and
//! the draw order is fixed: contribution tables (players in id order), the
//! group shuffle, then per round and per player belief noise, the type's
//! own draw (random players only), contribution noise.

use std::io::{self, Read, Write};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::TemporalDataset;
use crate::labeling::Labeling;
use crate::stats::round_half_up;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
    #[error("invalid archetype: {0}")]
    InvalidArchetype(String),
    #[error("roster of {total} players cannot be split into groups of {group_size}")]
    RosterSizeError { total: usize, group_size: usize },
    #[error("contribution {value} outside [0, {endowment}]")]
    OutOfRangeContribution { value: f64, endowment: u32 },
    #[error("own contribution {0} is not among the group's contributions")]
    NotInGroup(f64),
    #[error("tables csv: {0}")]
    Tables(String),
}

fn default_group_size() -> usize {
    4
}
fn default_endowment() -> u32 {
    20
}
fn default_mpcr() -> f64 {
    0.4
}
fn default_rounds() -> usize {
    10
}

/// Game constants: four players, 20 tokens, return 0.4, ten rounds by
/// default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PggParams {
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    #[serde(default = "default_endowment")]
    pub endowment: u32,
    /// Marginal per-capita return.
    #[serde(default = "default_mpcr")]
    pub mpcr: f64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
}

impl Default for PggParams {
    fn default() -> Self {
        Self {
            group_size: default_group_size(),
            endowment: default_endowment(),
            mpcr: default_mpcr(),
            rounds: default_rounds(),
        }
    }
}

impl PggParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidParams(m));
        if self.group_size < 2 {
            return bad("group_size must be at least 2".into());
        }
        let lo = 1.0 / self.group_size as f64;
        if !(self.mpcr > lo && self.mpcr < 1.0) {
            return bad(format!("mpcr must lie in ({lo}, 1) for a social dilemma"));
        }
        if self.rounds < 1 {
            return bad("rounds must be at least 1".into());
        }
        if self.endowment == 0 {
            return bad("endowment must be positive".into());
        }
        Ok(())
    }

    fn clamp_tokens(&self, x: f64) -> f64 {
        x.clamp(0.0, self.endowment as f64)
    }
}

/// Round gain: `endowment − own + mpcr × Σ group contributions`.
pub fn payoff(own_g: f64, all_g: &[f64], params: &PggParams) -> Result<f64, SimError> {
    let e = params.endowment as f64;
    for &g in all_g.iter().chain(std::iter::once(&own_g)) {
        if !(0.0..=e).contains(&g) {
            return Err(SimError::OutOfRangeContribution {
                value: g,
                endowment: params.endowment,
            });
        }
    }
    if !all_g.contains(&own_g) {
        return Err(SimError::NotInGroup(own_g));
    }
    Ok(e - own_g + params.mpcr * all_g.iter().sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeKind {
    FreeRider,
    ConditionalCooperator,
    #[serde(alias = "triangle")]
    TriangleContributor,
    Random,
}

impl ArchetypeKind {
    pub const ALL: [Self; 4] = [
        Self::FreeRider,
        Self::ConditionalCooperator,
        Self::TriangleContributor,
        Self::Random,
    ];

    /// Class name used in truth labels.
    pub fn label(self) -> &'static str {
        match self {
            Self::FreeRider => "FreeRider",
            Self::ConditionalCooperator => "ConditionalCooperator",
            Self::TriangleContributor => "TriangleContributor",
            Self::Random => "Random",
        }
    }
}

/// Behavioural type of a simulated player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Archetype {
    pub kind: ArchetypeKind,
    /// Response slope of conditional cooperators.
    pub slope: f64,
    /// Belief at which a triangle contributor's response peaks.
    pub peak: f64,
    pub noise_sd: f64,
    pub initial_belief: f64,
}

impl Archetype {
    /// Defaults: slope 1, peak and initial belief at half the endowment,
    /// noise SD 1.
    pub fn new(kind: ArchetypeKind, params: &PggParams) -> Self {
        let half = params.endowment as f64 / 2.0;
        Self {
            kind,
            slope: 1.0,
            peak: half,
            noise_sd: 1.0,
            initial_belief: half,
        }
    }

    pub fn validate(&self, params: &PggParams) -> Result<(), SimError> {
        let e = params.endowment as f64;
        let bad = |m: &str| Err(SimError::InvalidArchetype(format!("{:?}: {m}", self.kind)));
        if !(0.0..=e).contains(&self.peak) {
            return bad("peak must lie in [0, endowment]");
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be non-negative");
        }
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return bad("slope must be non-negative");
        }
        if !(0.0..=e).contains(&self.initial_belief) {
            return bad("initial_belief must lie in [0, endowment]");
        }
        Ok(())
    }
}

/// Noiseless intended contribution for a belief. Random players draw a
/// uniform token count from `rng`; the other types never touch it.
pub fn response<R: Rng + ?Sized>(
    archetype: &Archetype,
    belief: f64,
    params: &PggParams,
    rng: &mut R,
) -> f64 {
    let e = params.endowment as f64;
    let raw = match archetype.kind {
        ArchetypeKind::FreeRider => 0.0,
        ArchetypeKind::ConditionalCooperator => archetype.slope * belief,
        ArchetypeKind::TriangleContributor => {
            let p = archetype.peak;
            if belief <= p {
                belief
            } else if e > p {
                p * (e - belief) / (e - p)
            } else {
                p
            }
        }
        ArchetypeKind::Random => return rng.random_range(0..=params.endowment) as f64,
    };
    params.clamp_tokens(round_half_up(raw))
}

/// Hypothetical contribution for each rounded co-player average
/// `0..=endowment`.
pub fn contribution_table<R: Rng + ?Sized>(
    archetype: &Archetype,
    params: &PggParams,
    rng: &mut R,
) -> Vec<u32> {
    (0..=params.endowment)
        .map(|h| response(archetype, h as f64, params, rng) as u32)
        .collect()
}

/// One roster entry: `count` players of one type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub count: usize,
    pub kind: ArchetypeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_belief: Option<f64>,
}

impl RosterEntry {
    pub fn archetype(&self, params: &PggParams) -> Archetype {
        let d = Archetype::new(self.kind, params);
        Archetype {
            kind: self.kind,
            slope: self.slope.unwrap_or(d.slope),
            peak: self.peak.unwrap_or(d.peak),
            noise_sd: self.noise_sd.unwrap_or(d.noise_sd),
            initial_belief: self.initial_belief.unwrap_or(d.initial_belief),
        }
    }
}

/// Simulator configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub params: PggParams,
    pub roster: Vec<RosterEntry>,
    pub seed: u64,
}

impl SimConfig {
    pub fn roster(&self) -> Vec<(usize, Archetype)> {
        self.roster
            .iter()
            .map(|r| (r.count, r.archetype(&self.params)))
            .collect()
    }
}

/// Simulated panel with its planted truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub params: PggParams,
    /// Attributes `contribution`, `belief`, `others`.
    pub panel: TemporalDataset,
    pub truth: Labeling,
    /// Contribution table per player, aligned with the panel's objects.
    pub tables: Vec<Vec<u32>>,
    /// Exact co-player mean per `[player][round]`.
    pub unrounded_others: Vec<Vec<f64>>,
    /// Integer co-player contribution sum per `[player][round]`.
    pub others_sum: Vec<Vec<u32>>,
    /// Player indices of each group.
    pub groups: Vec<Vec<usize>>,
}

fn gaussian_noise<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd > 0.0 {
        let n = Normal::new(0.0, sd).expect("validated sd");
        round_half_up(n.sample(rng))
    } else {
        0.0
    }
}

/// Runs one simulation.
pub fn simulate(
    params: &PggParams,
    roster: &[(usize, Archetype)],
    seed: u64,
) -> Result<SimOutput, SimError> {
    params.validate()?;
    for (_, a) in roster {
        a.validate(params)?;
    }
    let total: usize = roster.iter().map(|r| r.0).sum();
    if total == 0 || !total.is_multiple_of(params.group_size) {
        return Err(SimError::RosterSizeError {
            total,
            group_size: params.group_size,
        });
    }
    let players: Vec<Archetype> = roster
        .iter()
        .flat_map(|(n, a)| std::iter::repeat_n(*a, *n))
        .collect();
    let width = total.to_string().len().max(3);
    let ids: Vec<String> = (1..=total).map(|i| format!("p{i:0width$}")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tables: Vec<Vec<u32>> = players
        .iter()
        .map(|a| contribution_table(a, params, &mut rng))
        .collect();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let groups: Vec<Vec<usize>> = order
        .chunks(params.group_size)
        .map(<[usize]>::to_vec)
        .collect();

    let rounds = params.rounds;
    let mut contribution = vec![vec![0.0; rounds]; total];
    let mut belief = vec![vec![0.0; rounds]; total];
    let mut others = vec![vec![0.0; rounds]; total];
    let mut unrounded = vec![vec![0.0; rounds]; total];
    let mut others_sum = vec![vec![0u32; rounds]; total];

    for t in 0..rounds {
        for (i, a) in players.iter().enumerate() {
            let base = if t == 0 {
                round_half_up(a.initial_belief)
            } else {
                others[i][t - 1]
            };
            let b = params.clamp_tokens(base + gaussian_noise(&mut rng, a.noise_sd));
            let intended = response(a, b, params, &mut rng);
            belief[i][t] = b;
            contribution[i][t] =
                params.clamp_tokens(intended + gaussian_noise(&mut rng, a.noise_sd));
        }
        let k = (params.group_size - 1) as f64;
        for g in &groups {
            let sum: u32 = g.iter().map(|&i| contribution[i][t] as u32).sum();
            for &i in g {
                let s = sum - contribution[i][t] as u32;
                others_sum[i][t] = s;
                unrounded[i][t] = s as f64 / k;
                others[i][t] = round_half_up(unrounded[i][t]);
            }
        }
    }

    let panel = TemporalDataset::from_fn(
        ids.clone(),
        (1..=rounds as i64).collect(),
        vec!["contribution".into(), "belief".into(), "others".into()],
        |o, t, a| match a {
            0 => contribution[o][t],
            1 => belief[o][t],
            _ => others[o][t],
        },
    )
    .expect("simulated panel is complete and finite");
    let truth = Labeling::from_pairs(
        ids.iter()
            .cloned()
            .zip(players.iter().map(|a| a.kind.label())),
        Some(
            ArchetypeKind::ALL
                .iter()
                .map(|k| k.label().to_string())
                .collect(),
        ),
    )
    .expect("generated ids are unique");

    Ok(SimOutput {
        params: *params,
        panel,
        truth,
        tables,
        unrounded_others: unrounded,
        others_sum,
        groups,
    })
}

impl SimOutput {
    /// Panel CSV `object_id,time,contribution,belief,others`, optionally
    /// with a trailing `unrounded_others` column.
    pub fn write_panel_csv<W: Write>(&self, mut w: W, include_unrounded: bool) -> io::Result<()> {
        write!(w, "object_id,time,contribution,belief,others")?;
        if include_unrounded {
            write!(w, ",unrounded_others")?;
        }
        writeln!(w)?;
        let p = &self.panel;
        for (o, id) in p.object_ids().iter().enumerate() {
            for (t, time) in p.time_points().iter().enumerate() {
                write!(
                    w,
                    "{id},{time},{},{},{}",
                    p.value(o, t, 0),
                    p.value(o, t, 1),
                    p.value(o, t, 2)
                )?;
                if include_unrounded {
                    write!(w, ",{}", self.unrounded_others[o][t])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Tables CSV `object_id,h0,...,h<endowment>`.
    pub fn write_tables_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "object_id")?;
        for h in 0..=self.params.endowment {
            write!(w, ",h{h}")?;
        }
        writeln!(w)?;
        for (id, row) in self.panel.object_ids().iter().zip(&self.tables) {
            write!(w, "{id}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Reads a tables CSV into `object_id → entries`, in file order.
pub fn read_tables_csv<R: Read>(reader: R) -> Result<IndexMap<String, Vec<f64>>, SimError> {
    let err = |m: String| SimError::Tables(m);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "object_id" {
        return Err(err("header must be `object_id,h0,...`".into()));
    }
    for (i, h) in header.iter().skip(1).enumerate() {
        if h != format!("h{i}") {
            return Err(err(format!("column {} must be `h{i}`, found `{h}`", i + 1)));
        }
    }
    let mut out = IndexMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(err(format!(
                "line {line}: expected {} fields",
                header.len()
            )));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| err(format!("line {line}: bad value `{f}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if out.insert(rec[0].to_string(), row).is_some() {
            return Err(err(format!("line {line}: duplicate object `{}`", &rec[0])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PggParams {
        PggParams::default()
    }

    fn arch(kind: ArchetypeKind) -> Archetype {
        Archetype::new(kind, &p())
    }

    #[test]
    fn payoff_worked_values() {
        assert_eq!(payoff(20.0, &[20.0; 4], &p()).unwrap(), 32.0);
        assert_eq!(payoff(0.0, &[0.0, 20.0, 20.0, 20.0], &p()).unwrap(), 44.0);
        assert_eq!(payoff(0.0, &[0.0; 4], &p()).unwrap(), 20.0);
        assert!(matches!(
            payoff(21.0, &[21.0, 0.0, 0.0, 0.0], &p()),
            Err(SimError::OutOfRangeContribution { .. })
        ));
        assert!(matches!(
            payoff(3.0, &[0.0; 4], &p()),
            Err(SimError::NotInGroup(_))
        ));
    }

    #[test]
    fn responses() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            response(&arch(ArchetypeKind::FreeRider), 17.0, &p(), &mut rng),
            0.0
        );
        assert_eq!(
            response(
                &arch(ArchetypeKind::ConditionalCooperator),
                13.0,
                &p(),
                &mut rng
            ),
            13.0
        );
        let tri = Archetype {
            peak: 10.0,
            ..arch(ArchetypeKind::TriangleContributor)
        };
        assert_eq!(response(&tri, 15.0, &p(), &mut rng), 5.0);
        assert_eq!(response(&tri, 10.0, &p(), &mut rng), 10.0);
        assert_eq!(response(&tri, 20.0, &p(), &mut rng), 0.0);
        let steep = Archetype {
            slope: 3.0,
            ..arch(ArchetypeKind::ConditionalCooperator)
        };
        assert_eq!(response(&steep, 15.0, &p(), &mut rng), 20.0);
        for _ in 0..100 {
            let r = response(&arch(ArchetypeKind::Random), 0.0, &p(), &mut rng);
            assert!((0.0..=20.0).contains(&r) && r.fract() == 0.0);
        }
    }

    #[test]
    fn tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            contribution_table(&arch(ArchetypeKind::FreeRider), &p(), &mut rng),
            vec![0; 21]
        );
        let cc = contribution_table(&arch(ArchetypeKind::ConditionalCooperator), &p(), &mut rng);
        assert_eq!(cc, (0..=20).collect::<Vec<u32>>());
        let tri = contribution_table(&arch(ArchetypeKind::TriangleContributor), &p(), &mut rng);
        let argmax = (0..21)
            .max_by_key(|&i| (tri[i], std::cmp::Reverse(i)))
            .unwrap();
        assert_eq!(argmax, 10);
        assert!(tri[..=10].windows(2).all(|w| w[0] <= w[1]));
        assert!(tri[10..].windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn free_riders_without_noise() {
        let fr = Archetype {
            noise_sd: 0.0,
            ..arch(ArchetypeKind::FreeRider)
        };
        let out = simulate(&p(), &[(4, fr)], 1).unwrap();
        for o in 0..4 {
            assert_eq!(out.panel.series(o, 0), vec![0.0; 10]);
            for t in 0..10 {
                assert_eq!(payoff(0.0, &[0.0; 4], &p()).unwrap(), 20.0);
                assert_eq!(out.unrounded_others[o][t], 0.0);
            }
        }
    }

    #[test]
    fn full_cooperators_stay_at_endowment() {
        let cc = Archetype {
            noise_sd: 0.0,
            initial_belief: 20.0,
            ..arch(ArchetypeKind::ConditionalCooperator)
        };
        let out = simulate(&p(), &[(4, cc)], 9).unwrap();
        for o in 0..4 {
            assert_eq!(out.panel.series(o, 0), vec![20.0; 10]);
            assert_eq!(out.panel.series(o, 1), vec![20.0; 10]);
        }
    }

    #[test]
    fn roster_must_fill_groups() {
        assert!(matches!(
            simulate(&p(), &[(5, arch(ArchetypeKind::FreeRider))], 0),
            Err(SimError::RosterSizeError {
                total: 5,
                group_size: 4
            })
        ));
        assert!(matches!(
            simulate(&p(), &[], 0),
            Err(SimError::RosterSizeError { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(PggParams { mpcr: 0.25, ..p() }.validate().is_err());
        assert!(PggParams { mpcr: 1.0, ..p() }.validate().is_err());
        assert!(PggParams {
            group_size: 1,
            ..p()
        }
        .validate()
        .is_err());
        assert!(PggParams { rounds: 0, ..p() }.validate().is_err());
        let bad = Archetype {
            peak: 30.0,
            ..arch(ArchetypeKind::TriangleContributor)
        };
        assert!(matches!(
            simulate(&p(), &[(4, bad)], 0),
            Err(SimError::InvalidArchetype(_))
        ));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SimConfig = serde_json::from_str(
            r#"{"roster": [{"count": 4, "kind": "triangle", "peak": 6}], "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(cfg.params, PggParams::default());
        let roster = cfg.roster();
        assert_eq!(roster[0].1.kind, ArchetypeKind::TriangleContributor);
        assert_eq!(roster[0].1.peak, 6.0);
        assert_eq!(roster[0].1.noise_sd, 1.0);
    }

    #[test]
    fn tables_csv_roundtrip() {
        let out = simulate(&p(), &[(4, arch(ArchetypeKind::ConditionalCooperator))], 0).unwrap();
        let mut buf = Vec::new();
        out.write_tables_csv(&mut buf).unwrap();
        let back = read_tables_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back["p001"], (0..=20).map(f64::from).collect::<Vec<_>>());
        assert!(read_tables_csv("object_id,h1\na,0\n".as_bytes()).is_err());
    }
}
