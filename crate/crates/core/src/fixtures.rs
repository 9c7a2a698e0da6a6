//! Bundled exercise fixtures: a desk-scale one for quick runs and calibration, and a
//! full-size one built on the complete category table.
//!
//! Background chatter is synthetic and regenerated from a fixed seed, so the fixtures
//! need no collected data. Every message carries exactly one "head" word drawn from a
//! small, evenly used vocabulary (these form the everyday trending baseline) and two
//! rarer "tail" words; the remaining words are too short or too common to be topics.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    ingest_background, table1_categories, BoundingBox, CategorySpec, CorpusManifest, GeoPoint, IngestOptions,
    Microblog, RawRecord,
};
use crate::scheduler::{compile_plan, load_msel, CompileError, CompileReport, MselEvent, SchedulePlan, VolumePolicy};
use crate::template::{load_templates, Template};

pub const HEAD_WORDS: [&str; 20] = [
    "coffee", "traffic", "weekend", "dinner", "school", "football", "weather", "pizza", "music", "movie", "church",
    "party", "game", "brunch", "concert", "workout", "shopping", "baseball", "festival", "college",
];

pub const TAIL_WORDS: [&str; 152] = [
    "acorn",
    "airport",
    "album",
    "alley",
    "apple",
    "artist",
    "aunt",
    "avenue",
    "bagel",
    "bakery",
    "ballet",
    "banjo",
    "barber",
    "basket",
    "beach",
    "beard",
    "bicycle",
    "birthday",
    "blanket",
    "blossom",
    "bookstore",
    "boots",
    "bowling",
    "bridge",
    "brother",
    "bucket",
    "burger",
    "butter",
    "cabin",
    "cake",
    "camera",
    "campus",
    "candle",
    "canoe",
    "carpet",
    "castle",
    "cereal",
    "chicken",
    "chili",
    "chocolate",
    "cinema",
    "circus",
    "classic",
    "closet",
    "cloud",
    "cousin",
    "cookie",
    "corn",
    "cottage",
    "couch",
    "crayon",
    "cupcake",
    "dance",
    "deli",
    "denim",
    "dentist",
    "desk",
    "diner",
    "dragon",
    "drums",
    "engine",
    "fabric",
    "farm",
    "fence",
    "ferry",
    "fishing",
    "flower",
    "forest",
    "fountain",
    "garage",
    "garden",
    "guitar",
    "hammock",
    "harbor",
    "highway",
    "hiking",
    "hockey",
    "honey",
    "hoodie",
    "jacket",
    "jelly",
    "jogging",
    "karaoke",
    "kayak",
    "kitchen",
    "kitten",
    "ladder",
    "lake",
    "lamp",
    "laundry",
    "lemon",
    "library",
    "lunch",
    "mango",
    "market",
    "meadow",
    "mirror",
    "mittens",
    "muffin",
    "museum",
    "nachos",
    "napkin",
    "nephew",
    "noodle",
    "orchard",
    "oven",
    "paint",
    "pancake",
    "parade",
    "parking",
    "pasta",
    "peanut",
    "pickle",
    "picnic",
    "piano",
    "pillow",
    "planet",
    "plumber",
    "pocket",
    "popcorn",
    "porch",
    "puppy",
    "puzzle",
    "quilt",
    "rabbit",
    "radio",
    "recipe",
    "river",
    "rocket",
    "salad",
    "sandwich",
    "scarf",
    "sister",
    "skate",
    "soccer",
    "sofa",
    "soup",
    "spinach",
    "stadium",
    "sunset",
    "sweater",
    "taco",
    "tennis",
    "theater",
    "ticket",
    "tomato",
    "tractor",
    "trail",
    "tulip",
    "umbrella",
    "uncle",
    "violin",
];

/// Words that never become topics: at most three letters, or on the stopword list.
pub const FILLER_WORDS: [&str; 36] = [
    "so", "my", "the", "and", "lol", "is", "at", "to", "got", "for", "new", "this", "that", "just", "really", "with",
    "some", "have", "omg", "a", "an", "on", "in", "it", "was", "now", "her", "our", "we", "all", "too", "any", "but",
    "like", "need", "more",
];

const HANDLE_FIRST: [&str; 24] = [
    "gem",
    "river",
    "buckeye",
    "flyer",
    "miami",
    "valley",
    "oak",
    "maple",
    "north",
    "south",
    "east",
    "west",
    "wright",
    "kettering",
    "oregon",
    "dixie",
    "sunny",
    "lucky",
    "brick",
    "cedar",
    "pine",
    "stone",
    "lake",
    "hill",
];

const HANDLE_SECOND: [&str; 16] = [
    "fan", "mom", "dad", "kid", "runner", "cook", "rider", "nerd", "belle", "guy", "gal", "chef", "coach", "dev",
    "artist", "tech",
];

/// Dayton region, extended north far enough to include Troy.
pub fn dayton_bbox() -> BoundingBox {
    BoundingBox::new(GeoPoint::new(39.55, -84.45).expect("valid"), GeoPoint::new(40.10, -83.95).expect("valid"))
        .expect("ordered corners")
}

/// `n` distinct handles like `maple_runner12`.
pub fn handle_pool(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::new();
    while out.len() < n {
        let h = format!(
            "{}_{}{}",
            HANDLE_FIRST.choose(&mut rng).expect("non-empty"),
            HANDLE_SECOND.choose(&mut rng).expect("non-empty"),
            rng.gen_range(1..1000)
        );
        if seen.insert(h.clone()) {
            out.push(h);
        }
    }
    out
}

/// One synthetic chatter line.
pub fn chatter_text<R: Rng>(rng: &mut R) -> String {
    let head = HEAD_WORDS.choose(rng).expect("non-empty");
    let t1 = TAIL_WORDS.choose(rng).expect("non-empty");
    let mut t2 = TAIL_WORDS.choose(rng).expect("non-empty");
    while t2 == t1 {
        t2 = TAIL_WORDS.choose(rng).expect("non-empty");
    }
    let f = |rng: &mut R| *FILLER_WORDS.choose(rng).expect("non-empty");
    match rng.gen_range(0..4) {
        0 => format!("{} {} {} {} {} {}", f(rng), head, f(rng), t1, f(rng), t2),
        1 => format!("{} {} {} {} {}", head, f(rng), t1, t2, f(rng)),
        2 => format!("{} {} {} {} {} {}", t1, f(rng), f(rng), head, f(rng), t2),
        _ => format!("{} {} {} {} {} {}", f(rng), f(rng), t2, head, f(rng), t1),
    }
}

pub struct BackgroundSpec {
    pub count: usize,
    pub native_start: i64,
    pub native_seconds: i64,
    /// Share of records placed just outside the region.
    pub outside_share: f64,
    /// Share of records without coordinates.
    pub ungeotagged_share: f64,
    pub authors: usize,
}

/// Raw collection records, sorted by timestamp.
pub fn background_records(spec: &BackgroundSpec, bbox: &BoundingBox, seed: u64) -> Vec<RawRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let authors = handle_pool(spec.authors, seed ^ 0xA5A5);
    let mut ts: Vec<i64> = (0..spec.count).map(|_| spec.native_start + rng.gen_range(0..spec.native_seconds)).collect();
    ts.sort_unstable();
    let (sw, ne) = (bbox.south_west(), bbox.north_east());
    ts.into_iter()
        .map(|ts| {
            let user = authors.choose(&mut rng).expect("non-empty").clone();
            let text = chatter_text(&mut rng);
            let r: f64 = rng.gen();
            let (lat, lon) = if r < spec.ungeotagged_share {
                (None, None)
            } else if r < spec.ungeotagged_share + spec.outside_share {
                (Some(ne.lat() + rng.gen_range(0.01..0.5)), Some(rng.gen_range(sw.lon()..ne.lon())))
            } else {
                let p = bbox.interpolate(rng.gen(), rng.gen());
                (Some(p.lat()), Some(p.lon()))
            };
            RawRecord { ts, user, text, lat, lon }
        })
        .collect()
}

/// Everything `compile_plan` needs, plus the template and event files it came from.
pub struct Fixture {
    pub manifest: CorpusManifest,
    pub templates: Vec<Template>,
    pub templates_jsonl: &'static str,
    pub msel: Vec<MselEvent>,
    pub msel_jsonl: &'static str,
    pub records: Vec<RawRecord>,
}

impl Fixture {
    pub fn background(&self) -> Vec<Microblog> {
        ingest_background(&self.records, &self.manifest.bbox, IngestOptions::default())
    }

    pub fn compile(&self, seed: u64) -> Result<(SchedulePlan, CompileReport), CompileError> {
        self.compile_with(&VolumePolicy::default(), seed)
    }

    pub fn compile_with(
        &self,
        policy: &VolumePolicy,
        seed: u64,
    ) -> Result<(SchedulePlan, CompileReport), CompileError> {
        compile_plan(&self.manifest, &self.templates, &self.msel, &self.background(), policy, seed)
    }

    pub fn background_jsonl(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}

const DESK_TEMPLATES: &str = include_str!("../fixtures/desk/templates.jsonl");
const DESK_MSEL: &str = include_str!("../fixtures/desk/msel.jsonl");
const DESK_CATEGORIES: &str = include_str!("../fixtures/desk/categories.json");
const FULL_TEMPLATES: &str = include_str!("../fixtures/full/templates.jsonl");
const FULL_MSEL: &str = include_str!("../fixtures/full/msel.jsonl");

/// 768 constructed messages over 1600 scenario seconds with four events; at the
/// default share this compiles to 3,200 messages, about two per second.
pub fn desk_fixture() -> Fixture {
    let categories: Vec<CategorySpec> = serde_json::from_str(DESK_CATEGORIES).expect("bundled categories parse");
    let bbox = dayton_bbox();
    let spec = BackgroundSpec {
        count: 3200,
        native_start: 1_381_000_000,
        native_seconds: 86_400,
        outside_share: 0.03,
        ungeotagged_share: 0.02,
        authors: 400,
    };
    Fixture {
        manifest: CorpusManifest {
            categories,
            background_fraction_target: 0.76,
            username_pool: handle_pool(150, 11),
            bbox,
            exercise_span: 1600.0,
        },
        templates: load_templates(DESK_TEMPLATES).expect("bundled templates parse"),
        templates_jsonl: DESK_TEMPLATES,
        msel: load_msel(DESK_MSEL).expect("bundled events parse"),
        msel_jsonl: DESK_MSEL,
        records: background_records(&spec, &bbox, 2013),
    }
}

/// All table categories over 4.5 scenario hours, with background standing in for
/// four days of regional collection.
pub fn full_fixture() -> Fixture {
    let bbox = dayton_bbox();
    let spec = BackgroundSpec {
        count: 27_000,
        native_start: 1_380_000_000,
        native_seconds: 4 * 86_400,
        outside_share: 0.02,
        ungeotagged_share: 0.01,
        authors: 3000,
    };
    Fixture {
        manifest: CorpusManifest {
            categories: table1_categories(),
            background_fraction_target: 0.76,
            username_pool: handle_pool(1200, 12),
            bbox,
            exercise_span: 16_200.0,
        },
        templates: load_templates(FULL_TEMPLATES).expect("bundled templates parse"),
        templates_jsonl: FULL_TEMPLATES,
        msel: load_msel(FULL_MSEL).expect("bundled events parse"),
        msel_jsonl: FULL_MSEL,
        records: background_records(&spec, &bbox, 2014),
    }
}
