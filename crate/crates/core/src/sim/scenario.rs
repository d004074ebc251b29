use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExternalRewrite, LatentIntent, Phrase, WorldModel};
use crate::session::Hypothesis;

/// `Music|PlayMusicIntent|SongName:<song>`.
pub fn music(song: &str) -> Hypothesis {
    Hypothesis::new("Music", "PlayMusicIntent")
        .with_slot("SongName", song)
        .expect("song names carry no reserved characters")
}

fn music_by(song: &str, artist: &str) -> Hypothesis {
    music(song)
        .with_slot("ArtistName", artist)
        .expect("artist names carry no reserved characters")
}

fn play(song: &str) -> Phrase {
    Phrase::new(format!("play {song}"), music(song))
}

fn clean(name: &str, song: &str, traffic: f64) -> LatentIntent {
    LatentIntent {
        name: name.into(),
        traffic,
        openers: vec![(play(song), 1.0)],
        rephrases: Vec::new(),
        successful: BTreeSet::from([music(song)]),
    }
}

/// A misrecognized request whose good rephrase gets learned as a rewrite.
///
/// "play team" is heard as `theme`. Customers who hit the defect mostly
/// rephrase as "play team", sometimes as "play teen", which is a popular
/// request of its own but wrong here.
pub fn scenario_type2() -> WorldModel {
    WorldModel::new(vec![
        LatentIntent {
            name: "team".into(),
            traffic: 1.0,
            openers: vec![(play("theme"), 1.0)],
            rephrases: vec![(play("team"), 0.8), (play("teen"), 0.2)],
            successful: BTreeSet::from([music("team")]),
        },
        clean("teen", "teen", 1.0),
        clean("thunder", "thunder", 1.0),
    ])
}

/// A request that already works, rewritten by another system to a popular
/// but wrong target for the first days of the run.
///
/// "play la da dee" succeeds on its own. Days 1 to 5 it is rewritten to
/// "play lady", which is heavily used and successful for customers who do
/// want that song. Customers hit by the rewrite rephrase with the artist.
pub fn scenario_type1() -> WorldModel {
    let ladadee = music("la da dee");
    let mut world = WorldModel::new(vec![
        LatentIntent {
            name: "la da dee".into(),
            traffic: 1.0,
            openers: vec![(play("la da dee"), 1.0)],
            rephrases: vec![(
                Phrase::new("play la da dee by cody simpson", music_by("la da dee", "cody simpson")),
                1.0,
            )],
            successful: BTreeSet::from([ladadee.clone(), music_by("la da dee", "cody simpson")]),
        },
        clean("lady", "lady", 6.0),
    ]);
    world.external.push(ExternalRewrite {
        source: ladadee,
        target: play("lady"),
        first_day: 1,
        last_day: 5,
    });
    world
}

/// Intent mix of a generated benchmark world, in intents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkShape {
    pub clean: usize,
    pub misrecognized: usize,
    pub externally_rewritten: usize,
}

impl Default for BenchmarkShape {
    fn default() -> Self {
        Self {
            clean: 24,
            misrecognized: 24,
            externally_rewritten: 12,
        }
    }
}

/// Both narratives above at scale, with per-intent traffic, misrecognition
/// rate, rephrase mix and external rewrite window drawn from `seed`.
///
/// Two in three misrecognized intents are also rewritten correctly by another
/// system for a while, so its logs show the request succeeding.
pub fn benchmark(shape: BenchmarkShape, seed: u64) -> WorldModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intents = Vec::new();
    let mut external = Vec::new();
    let song = |kind: &str, i: usize| format!("{kind} {i:03}");

    let clean_songs: Vec<String> = (0..shape.clean).map(|i| song("anthem", i)).collect();
    for s in &clean_songs {
        intents.push(clean(s, s, rng.random_range(0.5..2.0)));
    }
    for i in 0..shape.misrecognized {
        let right = song("ballad", i);
        let heard = format!("{right} remix");
        let mis = rng.random_range(0.6..1.0);
        let good = rng.random_range(0.55..0.9);
        let wrong = clean_songs.choose(&mut rng).expect("at least one clean intent");
        if i % 3 != 2 {
            external.push(ExternalRewrite {
                source: music(&heard),
                target: play(&right),
                first_day: 1,
                last_day: rng.random_range(10..=25),
            });
        }
        intents.push(LatentIntent {
            name: right.clone(),
            traffic: rng.random_range(0.5..2.0),
            openers: vec![(play(&heard), mis), (play(&right), 1.0 - mis)],
            rephrases: vec![(play(&right), good), (play(wrong), 1.0 - good)],
            successful: BTreeSet::from([music(&right)]),
        });
    }
    for i in 0..shape.externally_rewritten {
        let own = song("chorus", i);
        let detailed = Phrase::new(format!("play {own} live"), music_by(&own, "live band"));
        let target = clean_songs.choose(&mut rng).expect("at least one clean intent");
        let last_day = rng.random_range(3..=8);
        intents.push(LatentIntent {
            name: own.clone(),
            traffic: rng.random_range(0.5..2.0),
            openers: vec![(play(&own), 1.0)],
            rephrases: vec![(detailed.clone(), 1.0)],
            successful: BTreeSet::from([music(&own), detailed.hypothesis]),
        });
        external.push(ExternalRewrite {
            source: music(&own),
            target: play(target),
            first_day: 1,
            last_day,
        });
    }
    let mut world = WorldModel::new(intents);
    world.external = external;
    world
}

/// Canned worlds by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Type1,
    Type2,
    Benchmark,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Type1, Scenario::Type2, Scenario::Benchmark];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Type1 => "type1",
            Scenario::Type2 => "type2",
            Scenario::Benchmark => "benchmark",
        }
    }

    /// The benchmark world is drawn from `seed`; the others ignore it.
    pub fn world(self, seed: u64) -> WorldModel {
        match self {
            Scenario::Type1 => scenario_type1(),
            Scenario::Type2 => scenario_type2(),
            Scenario::Benchmark => benchmark(BenchmarkShape::default(), seed),
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected type1, type2 or benchmark)"))
    }
}
