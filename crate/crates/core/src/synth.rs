//! Synthetic fixture generator with a fully known causal structure.
//!
//! Teams carry latent strengths that drive outcomes; formation choice is
//! confounded through the *observable* running points ratio (strong teams
//! drift toward offensive groups), so the naive per-cell estimator is biased
//! while the cross-fitted estimator, which sees the same engineered ratio,
//! can recover the planted effect matrix.

use chrono::NaiveDate;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::dataset::strength::StandingsTracker;
use crate::dataset::{Fixture, FormationGroup};
use crate::derive_seed;
use crate::error::{Error, Result};

/// Ground truth and generation knobs for one synthetic dataset.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Teams per league; must be even and at least 4.
    pub n_teams: usize,
    pub n_seasons: usize,
    pub n_leagues: usize,
    /// Formation-group count, 2..=6 (labels come from the canonical six).
    pub k: usize,
    /// Antisymmetric K x K goal-difference effects with zero diagonal.
    pub true_beta: Array2<f64>,
    pub home_advantage: f64,
    /// Weight of the latent strength difference on the outcome.
    pub strength_effect: f64,
    /// How strongly the running points ratio tilts formation choice.
    pub confounding_strength: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Echo of the planted structure, written next to generated fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub k: usize,
    pub true_beta: Array2<f64>,
    pub home_advantage: f64,
}

/// Fixed generation constants for the secondary targets, scaled off the
/// goal-difference truth so every CLI target is exercisable.
const POSSESSION: TargetGen = TargetGen { beta_scale: 12.0, home: 2.0, strength: 6.0, noise: 8.0 };
const CORNERS: TargetGen = TargetGen { beta_scale: 1.2, home: 0.4, strength: 1.0, noise: 2.5 };
const YELLOWS: TargetGen = TargetGen { beta_scale: -0.5, home: -0.3, strength: -0.4, noise: 1.8 };
/// Red cards are a planted null: no formation effect at all.
const REDS: TargetGen = TargetGen { beta_scale: 0.0, home: 0.0, strength: -0.05, noise: 0.4 };

struct TargetGen {
    beta_scale: f64,
    home: f64,
    strength: f64,
    noise: f64,
}

impl SynthConfig {
    /// Small demo dataset: 2 leagues x 3 seasons x 10 teams = 540 fixtures.
    pub fn demo(seed: u64) -> SynthConfig {
        SynthConfig {
            n_teams: 10,
            n_seasons: 3,
            n_leagues: 2,
            k: 6,
            true_beta: demo_beta(),
            home_advantage: 0.285,
            strength_effect: 0.5,
            confounding_strength: 1.0,
            noise_sd: 1.0,
            seed,
        }
    }

    /// Same shape as [`SynthConfig::demo`] but with an all-zero truth.
    pub fn null(seed: u64) -> SynthConfig {
        SynthConfig {
            true_beta: Array2::zeros((6, 6)),
            ..SynthConfig::demo(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_teams < 4 || self.n_teams % 2 != 0 {
            return Err(Error::Config("n_teams must be even and >= 4".into()));
        }
        if self.n_seasons == 0 || self.n_leagues == 0 {
            return Err(Error::Config("need at least one season and league".into()));
        }
        if !(2..=6).contains(&self.k) {
            return Err(Error::Config("k must be in 2..=6".into()));
        }
        if self.true_beta.dim() != (self.k, self.k) {
            return Err(Error::Config(format!(
                "true_beta must be {k} x {k}",
                k = self.k
            )));
        }
        for i in 0..self.k {
            if self.true_beta[(i, i)] != 0.0 {
                return Err(Error::Config("true_beta diagonal must be zero".into()));
            }
            for j in 0..self.k {
                let gap = (self.true_beta[(i, j)] + self.true_beta[(j, i)]).abs();
                if gap > 1e-12 {
                    return Err(Error::Config(format!(
                        "true_beta must be antisymmetric; cells ({},{}) and ({},{}) sum to {gap}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::Config("noise_sd must be positive".into()));
        }
        Ok(())
    }

    /// Fixtures the configuration will generate.
    pub fn fixture_count(&self) -> usize {
        let per_season = 2 * (self.n_teams - 1) * (self.n_teams / 2);
        self.n_leagues * self.n_seasons * per_season
    }
}

/// Build an antisymmetric matrix from upper-triangle entries (1-based).
pub fn antisymmetric_beta(k: usize, upper: &[(usize, usize, f64)]) -> Array2<f64> {
    let mut beta = Array2::zeros((k, k));
    for &(i, j, v) in upper {
        assert!(i < j && j <= k, "upper-triangle entries only");
        beta[(i - 1, j - 1)] = v;
        beta[(j - 1, i - 1)] = -v;
    }
    beta
}

fn demo_beta() -> Array2<f64> {
    antisymmetric_beta(
        6,
        &[
            (1, 2, 0.1),
            (1, 4, -0.2),
            (1, 5, -0.3),
            (1, 6, -0.1),
            (2, 3, 0.1),
            (2, 4, -0.1),
            (2, 5, -0.2),
            (3, 5, -0.1),
            (3, 6, -0.2),
            (4, 5, 0.1),
            (4, 6, 0.2),
            (5, 6, 0.1),
        ],
    )
}

/// Double round robin by the circle method: rounds 1..=2(n-1), venues
/// mirrored in the second cycle.
fn double_round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let single = n - 1;
    let mut rounds = Vec::with_capacity(2 * single);
    let mut ring: Vec<usize> = (1..n).collect();
    for r in 0..single {
        let mut pairs = Vec::with_capacity(n / 2);
        let first = (0, ring[n - 2]);
        pairs.push(if r % 2 == 0 { first } else { (first.1, first.0) });
        for m in 0..(n / 2 - 1) {
            let a = ring[m];
            let b = ring[n - 3 - m];
            pairs.push(if m % 2 == 0 { (a, b) } else { (b, a) });
        }
        rounds.push(pairs);
        ring.rotate_right(1);
    }
    for r in 0..single {
        let mirrored: Vec<(usize, usize)> = rounds[r].iter().map(|&(h, a)| (a, h)).collect();
        rounds.push(mirrored);
    }
    rounds
}

fn softmax_sample(rng: &mut ChaCha12Rng, logits: &[f64]) -> usize {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, e) in exps.iter().enumerate() {
        u -= e;
        if u <= 0.0 {
            return i;
        }
    }
    exps.len() - 1
}

/// Realize a non-negative integer pair with the given rounded difference.
fn realize_pair(rng: &mut ChaCha12Rng, base_rate: f64, diff: f64) -> (u32, u32) {
    let d = diff.round() as i64;
    let base = Poisson::new(base_rate).unwrap().sample(rng) as i64;
    let home = base + d.max(0);
    let away = base + (-d).max(0);
    (home as u32, away as u32)
}

/// Generate the full fixture list plus the truth record.
pub fn generate(config: &SynthConfig) -> Result<(Vec<Fixture>, SynthTruth)> {
    config.validate()?;
    let k = config.k;
    let group_labels: Vec<&str> = FormationGroup::ALL
        .iter()
        .take(k)
        .map(|g| g.label())
        .collect();
    // offensiveness weights, evenly spaced over [-1, 1]
    let offensiveness: Vec<f64> = (0..k)
        .map(|g| -1.0 + 2.0 * g as f64 / (k - 1) as f64)
        .collect();
    let schedule = double_round_robin(config.n_teams);
    let noise = Normal::new(0.0, config.noise_sd).unwrap();
    let unit = Normal::new(0.0, 1.0).unwrap();

    let mut fixtures = Vec::with_capacity(config.fixture_count());
    for league_ix in 0..config.n_leagues {
        let league = format!("L{}", league_ix + 1);
        for season_ix in 0..config.n_seasons {
            let season = format!("S{:02}", season_ix + 1);
            let stream = (league_ix * 10_000 + season_ix) as u64;
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, stream));
            let season_start = NaiveDate::from_ymd_opt(2000 + season_ix as i32, 8, 1).unwrap();

            let teams: Vec<String> = (0..config.n_teams)
                .map(|t| format!("{league}T{:02}", t + 1))
                .collect();
            let strengths: Vec<f64> = (0..config.n_teams).map(|_| unit.sample(&mut rng)).collect();
            let cl_flags: Vec<bool> = strengths.iter().map(|&s| s > 0.8).collect();
            let mut tracker = StandingsTracker::new(teams.iter().cloned());

            for (round_ix, pairs) in schedule.iter().enumerate() {
                let round = round_ix as u32 + 1;
                // spread each round over Fri/Sat/Sun; process in date order
                let mut dated: Vec<(u32, usize, (usize, usize))> = pairs
                    .iter()
                    .enumerate()
                    .map(|(m, &pair)| {
                        let offset = match m % 3 {
                            0 => 4u32, // Friday (season starts on a Monday-like anchor)
                            1 => 5,
                            _ => 6,
                        };
                        (offset, m, pair)
                    })
                    .collect();
                dated.sort_by_key(|&(offset, m, _)| (offset, m));

                let mut current_offset = dated[0].0;
                for &(offset, m, (home_ix, away_ix)) in &dated {
                    if offset != current_offset {
                        tracker.finish_date();
                        current_offset = offset;
                    }
                    let date = season_start
                        + chrono::Duration::days(7 * round_ix as i64 + offset as i64);
                    let home = &teams[home_ix];
                    let away = &teams[away_ix];

                    // formation policy reads only the observable ratio
                    let pick = |rng: &mut ChaCha12Rng, ratio: f64| -> usize {
                        let tilt = 2.0 * ratio - 1.0;
                        let logits: Vec<f64> = offensiveness
                            .iter()
                            .map(|w| config.confounding_strength * tilt * w)
                            .collect();
                        softmax_sample(rng, &logits)
                    };
                    let gi = pick(&mut rng, tracker.overall_ratio(home));
                    let gj = pick(&mut rng, tracker.overall_ratio(away));

                    let ds = strengths[home_ix] - strengths[away_ix];
                    let beta = config.true_beta[(gi, gj)];
                    let goal_diff =
                        beta + config.home_advantage + config.strength_effect * ds + noise.sample(&mut rng);
                    let (home_goals, away_goals) = realize_pair(&mut rng, 1.1, goal_diff);

                    let secondary = |t: &TargetGen, rng: &mut ChaCha12Rng| -> f64 {
                        t.beta_scale * beta
                            + t.home
                            + t.strength * ds
                            + Normal::new(0.0, t.noise).unwrap().sample(rng)
                    };
                    let poss_diff = secondary(&POSSESSION, &mut rng);
                    let home_poss = (50.0 + poss_diff / 2.0).clamp(15.0, 85.0);
                    let corners_diff = secondary(&CORNERS, &mut rng);
                    let (home_corners, away_corners) = realize_pair(&mut rng, 4.5, corners_diff);
                    let yellow_diff = secondary(&YELLOWS, &mut rng);
                    let (home_yellow, away_yellow) = realize_pair(&mut rng, 1.6, yellow_diff);
                    let red_diff = secondary(&REDS, &mut rng);
                    let (home_red, away_red) = realize_pair(&mut rng, 0.09, red_diff);

                    let day_frac = (round_ix as f64) / (schedule.len() as f64);
                    let temperature = 12.0
                        + 8.0 * (std::f64::consts::TAU * day_frac).sin()
                        + 3.0 * unit.sample(&mut rng);
                    let humidity = (60.0 + 15.0 * unit.sample(&mut rng)).clamp(20.0, 95.0);
                    let temp_missing = rng.random::<f64>() < 0.08;
                    let hum_missing = rng.random::<f64>() < 0.08;

                    fixtures.push(Fixture {
                        fixture_id: format!("{league}-{season}-R{round:02}-M{:02}", m + 1),
                        season: season.clone(),
                        league: league.clone(),
                        round,
                        date,
                        home_team: home.clone(),
                        away_team: away.clone(),
                        home_formation_raw: group_labels[gi].to_string(),
                        away_formation_raw: group_labels[gj].to_string(),
                        home_goals,
                        away_goals,
                        home_corners: home_corners as f64,
                        away_corners: away_corners as f64,
                        home_possession: home_poss,
                        away_possession: 100.0 - home_poss,
                        home_yellow_cards: home_yellow as f64,
                        away_yellow_cards: away_yellow as f64,
                        home_red_cards: home_red as f64,
                        away_red_cards: away_red as f64,
                        home_cl_flag: cl_flags[home_ix],
                        away_cl_flag: cl_flags[away_ix],
                        temperature: (!temp_missing).then_some(temperature),
                        humidity: (!hum_missing).then_some(humidity),
                        stage: None,
                    });
                    tracker.record(home, away, home_goals, away_goals);
                }
                tracker.finish_date();
            }
        }
    }

    Ok((
        fixtures,
        SynthTruth {
            k,
            true_beta: config.true_beta.clone(),
            home_advantage: config.home_advantage,
        },
    ))
}

/// The truth matrix the config embodies.
pub fn oracle_beta(config: &SynthConfig) -> Array2<f64> {
    config.true_beta.clone()
}

impl SynthTruth {
    /// key=value header plus one CSV line per grid row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("k={}\n", self.k));
        out.push_str(&format!("home_advantage={}\n", self.home_advantage));
        for i in 0..self.k {
            let row: Vec<String> = (0..self.k).map(|j| self.true_beta[(i, j)].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<SynthTruth> {
        let mut k = None;
        let mut home_advantage = None;
        let mut grid_rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                match key.trim() {
                    "k" => k = Some(value.trim().parse::<usize>().map_err(|_| {
                        Error::Config(format!("bad k '{value}' in truth file"))
                    })?),
                    "home_advantage" => {
                        home_advantage = Some(value.trim().parse::<f64>().map_err(|_| {
                            Error::Config(format!("bad home_advantage '{value}'"))
                        })?)
                    }
                    other => return Err(Error::Config(format!("unknown truth key '{other}'"))),
                }
            } else {
                let row = line
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|_| Error::Config(format!("bad truth grid line '{line}'")))?;
                grid_rows.push(row);
            }
        }
        let k = k.ok_or_else(|| Error::Config("truth file missing k".into()))?;
        let home_advantage =
            home_advantage.ok_or_else(|| Error::Config("truth file missing home_advantage".into()))?;
        if grid_rows.len() != k || grid_rows.iter().any(|r| r.len() != k) {
            return Err(Error::Config("truth grid is not k x k".into()));
        }
        let true_beta = Array2::from_shape_fn((k, k), |(i, j)| grid_rows[i][j]);
        Ok(SynthTruth {
            k,
            true_beta,
            home_advantage,
        })
    }
}
