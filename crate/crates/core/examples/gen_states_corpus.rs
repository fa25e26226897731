//! Regenerates the bundled US-states corpus and its truth list.
//!
//!     cargo run --example gen_states_corpus -- [OUT_DIR] [SEED]
//!
//! Each extraction pattern gets a number of sentences, and a number of
//! distinct states, proportional to its target weight; three patterns get
//! none. Distractor sentences mention states outside any pattern, other categories, and a few traps that
//! extract a wrong name through a single pattern.

use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STATES: &[(&str, &str)] = &[
    ("Alabama", "AL"),
    ("Alaska", "AK"),
    ("Arizona", "AZ"),
    ("Arkansas", "AR"),
    ("California", "CA"),
    ("Colorado", "CO"),
    ("Connecticut", "CT"),
    ("Delaware", "DE"),
    ("Florida", "FL"),
    ("Georgia", "GA"),
    ("Hawaii", "HI"),
    ("Idaho", "ID"),
    ("Illinois", "IL"),
    ("Indiana", "IN"),
    ("Iowa", "IA"),
    ("Kansas", "KS"),
    ("Kentucky", "KY"),
    ("Louisiana", "LA"),
    ("Maine", "ME"),
    ("Maryland", "MD"),
    ("Massachusetts", "MA"),
    ("Michigan", "MI"),
    ("Minnesota", "MN"),
    ("Mississippi", "MS"),
    ("Missouri", "MO"),
    ("Montana", "MT"),
    ("Nebraska", "NE"),
    ("Nevada", "NV"),
    ("New Hampshire", "NH"),
    ("New Jersey", "NJ"),
    ("New Mexico", "NM"),
    ("New York", "NY"),
    ("North Carolina", "NC"),
    ("North Dakota", "ND"),
    ("Ohio", "OH"),
    ("Oklahoma", "OK"),
    ("Oregon", "OR"),
    ("Pennsylvania", "PA"),
    ("Rhode Island", "RI"),
    ("South Carolina", "SC"),
    ("South Dakota", "SD"),
    ("Tennessee", "TN"),
    ("Texas", "TX"),
    ("Utah", "UT"),
    ("Vermont", "VT"),
    ("Virginia", "VA"),
    ("Washington", "WA"),
    ("West Virginia", "WV"),
    ("Wisconsin", "WI"),
    ("Wyoming", "WY"),
];

#[derive(Clone, Copy)]
enum Slot {
    /// A list of 1-3 names joined with commas and the conjunction.
    List(&'static str),
    Single,
}

struct PatternSpec {
    weight: f64,
    slot: Slot,
    templates: &'static [&'static str],
}

// Relative frequencies follow the PT-hits weights the pattern set is known
// to receive on web data; "%, the US state", "US state %" and
// "%, a US state" are left without matches.
const PATTERNS: &[PatternSpec] = &[
    PatternSpec {
        weight: 0.2514,
        slot: Slot::List("and"),
        templates: &[
            "Many US states, including {}, have passed new laws this year.",
            "Several US states, including {}, raised the minimum wage.",
            "Some US states, including {}, allow early voting.",
        ],
    },
    PatternSpec {
        weight: 0.1826,
        slot: Slot::List("and"),
        templates: &[
            "US states such as {} have large rural populations.",
            "Tourists often visit US states such as {} in the summer.",
            "The report ranked US states such as {} by air quality.",
        ],
    },
    PatternSpec {
        weight: 0.1766,
        slot: Slot::List("and"),
        templates: &[
            "Voters in {} and other US states went to the polls on Tuesday.",
            "Farmers from {} and other US states sell corn abroad.",
        ],
    },
    PatternSpec {
        weight: 0.0992,
        slot: Slot::Single,
        templates: &[
            "Everyone knows that {} is a US state.",
            "The teacher explained that {} is a US state with its own constitution.",
        ],
    },
    PatternSpec {
        weight: 0.0962,
        slot: Slot::List("and"),
        templates: &[
            "Such US states as {} rely heavily on tourism.",
            "We studied such US states as {} last week.",
        ],
    },
    PatternSpec {
        weight: 0.0789,
        slot: Slot::List("and"),
        templates: &[
            "Many US states, especially {}, grow cotton.",
            "Storms hit several US states, especially {}, last winter.",
        ],
    },
    PatternSpec {
        weight: 0.0658,
        slot: Slot::List("or"),
        templates: &["Residents of {} or other US states may apply online."],
    },
    PatternSpec {
        weight: 0.0440,
        slot: Slot::Single,
        templates: &[
            "Few people realize that {} is the US state with the longest coastline in its region.",
            "My guide said {} is the US state she likes best.",
        ],
    },
    PatternSpec {
        weight: 0.0052,
        slot: Slot::List("and"),
        templates: &["Officials from the US states {} signed the water agreement."],
    },
];

/// Total pattern sentences; each pattern gets `weight * BUDGET` of them.
const BUDGET: f64 = 400.0;
const DOCUMENTS: usize = 120;

const TRAPS: &[&str] = &[
    "Everyone says Joe is a US state employee.",
    "Her neighbour Maria Lopez is a US state inspector.",
    "Rumor has it that Bob Carter is a US state lawmaker.",
    "The newspaper said Ann Kim is a US state auditor.",
    "Locals claim that Pete Ross is a US state employee.",
    "Rumor has it that Guam is a US state.",
    "Tourists in Puerto Rico and other US territories enjoy the beaches.",
    "Joe is a country singer.",
    "Everyone knows Garth Brooks is a country singer.",
    "Dolly Parton is a country singer from Tennessee.",
];

const DISTRACTOR_TEMPLATES: &[&str] = &[
    "{} has a long history of farming.",
    "The weather in {} was mild last week.",
    "We drove through {} on our road trip.",
    "The museum in {} opened a new exhibit.",
    "A new highway now links {} to the coast.",
    "The population of {} grew last year.",
    "Our family spent the winter in {}.",
    "The university in {} hired a new president.",
];

const FILLER: &[&str] = &[
    "Cities such as Boston and Chicago have busy airports.",
    "Countries such as France and Japan export many cars.",
    "Popular summer movies such as Shrek appeal to audiences of all ages.",
    "Large rivers such as the Nile flood every year.",
    "The school band played three songs at dinner.",
    "Prices at the farm market rose sharply this week.",
    "The team won the game in the last minute.",
    "Heavy rain closed the mountain road for a day.",
    "The city council met on Monday to discuss parking.",
    "A local restaurant started serving breakfast again.",
    "Our teacher assigned a new book about the ocean.",
    "The train station will close for repairs next month.",
    "Many families travel during the holiday season.",
    "Scientists measured the water temperature of the lake.",
    "The newspaper published a long report on housing.",
    "Students at the school planted trees in the park.",
    "The bridge was painted bright red last spring.",
    "A small company opened an office downtown.",
    "Fans waited hours to buy tickets for the concert.",
    "The government announced a plan to repair old roads.",
    "Canada and Mexico share long borders with the United States.",
    "The election drew a large crowd of young voters.",
    "Music from the festival could be heard across town.",
    "The national park reported a record number of visitors.",
];

fn join_list(names: &[&str], conj: &str) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} {conj} {last}", init.join(", ")),
    }
}

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "data/states_corpus".into()));
    let seed: u64 = args
        .next()
        .map_or(2024, |s| s.parse().expect("seed must be an integer"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sentences: Vec<String> = Vec::new();
    for spec in PATTERNS {
        let count = (spec.weight * BUDGET).round() as usize;
        // each pattern knows a subset of the states sized by its weight;
        // cycling through it keeps coverage even
        let mut order: Vec<&str> = STATES.iter().map(|s| s.0).collect();
        order.shuffle(&mut rng);
        let known = ((spec.weight / PATTERNS[0].weight) * STATES.len() as f64)
            .round()
            .max(1.0) as usize;
        order.truncate(known);
        let mut next = 0;
        let mut take = |rng: &mut ChaCha8Rng, k: usize| -> Vec<&str> {
            let mut v = Vec::new();
            for _ in 0..k {
                if next == order.len() {
                    order.shuffle(rng);
                    next = 0;
                }
                v.push(order[next]);
                next += 1;
            }
            v
        };
        for i in 0..count {
            let template = spec.templates[i % spec.templates.len()];
            let filler = match spec.slot {
                Slot::Single => take(&mut rng, 1)[0].to_string(),
                Slot::List(conj) => {
                    let k = rng.gen_range(1..=3);
                    join_list(&take(&mut rng, k), conj)
                }
            };
            sentences.push(template.replace("{}", &filler));
        }
    }
    sentences.extend(TRAPS.iter().map(|s| s.to_string()));
    for (i, (state, _)) in STATES.iter().enumerate() {
        for j in 0..3 {
            let t = DISTRACTOR_TEMPLATES[(i * 3 + j) % DISTRACTOR_TEMPLATES.len()];
            sentences.push(t.replace("{}", state));
        }
    }
    for _ in 0..3 {
        sentences.extend(FILLER.iter().map(|s| s.to_string()));
    }

    let mut docs: Vec<Vec<String>> = vec![Vec::new(); DOCUMENTS];
    for s in sentences {
        docs[rng.gen_range(0..DOCUMENTS)].push(s);
    }

    if out.exists() {
        fs::remove_dir_all(&out).expect("clear output directory");
    }
    fs::create_dir_all(&out).expect("create output directory");
    for (i, mut doc) in docs.into_iter().enumerate() {
        doc.shuffle(&mut rng);
        let text = doc.join(" ") + "\n";
        fs::write(out.join(format!("doc{i:03}.txt")), text).expect("write document");
    }
    let truth: String = STATES
        .iter()
        .map(|(name, abbr)| format!("{name}|{abbr}\n"))
        .collect();
    fs::write(out.with_file_name("states_truth.txt"), truth).expect("write truth list");
    eprintln!("wrote {DOCUMENTS} documents to {}", out.display());
}
