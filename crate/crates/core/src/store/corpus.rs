//! Bundled encyclopedia corpus and JSONL ingestion.
//!
//! The bundled corpus pairs real English headwords with templated
//! one-sentence facts, so encyclopedia-content trials run with no external
//! files. Real corpora can be supplied as JSONL (one `{"key":..,"value":..}`
//! object per line); keys need not be pre-sorted, the store sorts.

use crate::error::Error;
use crate::key::Key;
use crate::store::Item;
use crate::Result;
use std::io::BufRead;
use std::path::Path;

/// Headwords for the bundled corpus. Kept lowercase and duplicate-free; a
/// unit test enforces both.
pub(crate) const WORDS: &[&str] = &[
    "aalii", "abacus", "abattoir", "abbey", "absinthe", "acetylene", "acorn", "acrobat",
    "adder", "adobe", "aerial", "agate", "agony", "airship", "alabaster", "albatross",
    "alchemy", "alfalfa", "algebra", "alloy", "almanac", "almond", "alpaca", "altitude",
    "amber", "amethyst", "ammonia", "anchor", "anemone", "antelope", "antenna", "anthem",
    "anvil", "apricot", "aqueduct", "arbor", "archway", "argon", "armada", "arrow",
    "arsenal", "asparagus", "asphalt", "aster", "asteroid", "atlas", "atrium", "auburn",
    "auction", "aurora", "autumn", "avalanche", "aviary", "axle", "azure",
    "badger", "bagpipe", "bakery", "balcony", "ballad", "balloon", "bamboo", "banjo",
    "banner", "barge", "barley", "barnacle", "basalt", "basilica", "basket", "bassoon",
    "bat", "bazaar", "beacon", "beaker", "bedrock", "beech", "beetle", "bellows",
    "beret", "beryl", "bicycle", "billiards", "birch", "bison", "bitumen", "blacksmith",
    "blanket", "blizzard", "bobbin", "bonfire", "borax", "boulder", "boulevard", "bracken",
    "bramble", "brass", "brewery", "bridle", "brisket", "broccoli", "bronze", "buckle",
    "bugle", "bullion", "bungalow", "buoy", "burlap", "buttress",
    "cabbage", "cactus", "cadence", "caldera", "calfskin", "caliper", "camel", "camphor",
    "canal", "candle", "canoe", "canopy", "canvas", "canyon", "caramel", "caravan",
    "carbide", "cardinal", "cargo", "carob", "carousel", "cartwheel", "cascades", "cashew",
    "cask", "catapult", "cathedral", "cauldron", "causeway", "cavern", "cedar", "cellar",
    "census", "chalice", "chalk", "chapel", "charcoal", "chariot", "chestnut", "chisel",
    "chowder", "cider", "cinder", "cinnamon", "cistern", "citadel", "clarinet", "clover",
    "cobalt", "cobbler", "cocoon", "compass", "condor", "copper",
    "coral", "cordial", "cork", "cornet", "cottage", "cotton", "courtyard", "cove",
    "cradle", "cranberry", "crankshaft", "crater", "cravat", "crayon", "creek", "crescent",
    "cricket", "crocus", "crowbar", "crucible", "crystal", "cumin", "cupola", "currant",
    "cutlass", "cypress",
    "dagger", "dahlia", "dairy", "damask", "dandelion", "daybreak", "deacon", "decanter",
    "delta", "derrick", "dewdrop", "dhow", "diadem", "diesel", "dinghy", "dirigible",
    "ditch", "dockyard", "doctrine", "dolomite", "dolphin", "dome", "doorstep", "dormer",
    "dovetail", "draftsman", "dragonfly", "drawbridge", "driftwood", "dromedary", "drought", "drum",
    "duckweed", "dulcimer", "dune", "dynamo",
    "eagle", "earthenware", "easel", "eaves", "ebony", "eclipse", "eiderdown", "elderberry",
    "elixir", "elm", "ember", "emerald", "emery", "enamel", "engine", "envoy",
    "epoch", "ermine", "escarpment", "estuary", "etching", "eucalyptus", "ewer", "exhibit",
    "exile", "expanse",
    "fable", "falcon", "fathom", "feldspar", "fencing", "fennel", "ferry", "fescue",
    "fiddle", "fieldstone", "fig", "filament", "finch", "firth", "fjord", "flagon",
    "flagstone", "flannel", "flax", "fleece", "flint", "flotilla", "flume", "foghorn",
    "folio", "forge", "fortress", "fountain", "foxglove", "freighter", "fresco", "frigate",
    "frost", "furnace", "furrow",
    "gable", "galleon", "gallery", "galley", "gannet", "garland", "garnet", "garrison",
    "gaslight", "gate", "gavel", "gazebo", "gazette", "gecko", "geyser", "gingham",
    "girder", "glacier", "gladiolus", "glassware", "glen", "glider", "gondola", "gorge",
    "gosling", "gourd", "granary", "granite", "grapevine", "graphite", "grotto", "grouse",
    "guild", "gull", "gypsum", "gyroscope",
    "haberdashery", "hacienda", "haddock", "halibut", "hamlet", "hammock", "hangar", "hansom",
    "harbor", "harness", "harp", "harpoon", "harvest", "hatchet", "hawthorn", "hayloft",
    "hazel", "headland", "hearth", "heather", "hedgerow", "heirloom", "helm", "hemlock",
    "hemp", "heron", "hickory", "hillock", "hinge", "hogshead", "hollyhock", "homestead",
    "honeycomb", "horizon", "hornbeam", "hourglass", "hovercraft", "huckleberry", "hurricane", "hyacinth",
    "ibex", "iceberg", "icicle", "idiom", "igloo", "ingot", "inkwell", "inlet",
    "iris", "ironwood", "island", "isthmus", "ivory", "ivy",
    "jackal", "jade", "jasmine", "jasper", "javelin", "jetty", "jigsaw", "jonquil",
    "joust", "jubilee", "junction", "juniper", "jute",
    "kapok", "kayak", "keel", "keepsake", "kelp", "kerosene", "kestrel", "kettle",
    "kiln", "kingfisher", "kiosk", "knapsack", "knoll", "kumquat",
    "labyrinth", "lacquer", "ladle", "lagoon", "lantern", "lapis", "larch", "lark",
    "lathe", "lattice", "lavender", "leaflet", "ledger", "legume", "lichen", "lighthouse",
    "lilac", "limestone", "linen", "linseed", "lintel", "lithograph", "llama", "lobster",
    "locket", "locomotive", "lodestone", "loft", "longhouse", "loom", "lotus", "lumber",
    "lute", "lyre",
    "mackerel", "magnolia", "mahogany", "mallet", "mandolin", "mangrove", "manor", "mantel",
    "maple", "marble", "marigold", "marina", "marmalade", "marsh", "mast", "meadow",
    "medallion", "meridian", "mesa", "mica", "mill", "millet", "minaret", "mineral",
    "mintage", "mistletoe", "moat", "mohair", "molasses", "monastery", "monsoon", "moorland",
    "moraine", "mortar", "mosaic", "moss", "mulberry", "muslin", "mustang", "myrtle",
    "narwhal", "nautilus", "nave", "nectar", "nettle", "newt", "nickel", "nightingale",
    "nimbus", "nomad", "noodle", "notch", "nougat", "nutmeg",
    "oasis", "oatmeal", "obelisk", "oboe", "obsidian", "ocarina", "ocelot", "ochre",
    "octagon", "oilcloth", "okra", "oleander", "olive", "onyx", "opal", "orchard",
    "organdy", "oriole", "osprey", "otter", "outpost", "oxcart", "oxide", "oyster",
    "paddock", "pagoda", "palisade", "palm", "pantry", "papyrus", "parable", "parapet",
    "parchment", "parlor", "parsley", "parsnip", "passport", "pastry", "pasture", "peat",
    "pebble", "pelican", "pendulum", "peninsula", "peppercorn", "perch", "pergola", "petal",
    "pewter", "pheasant", "phosphate", "piccolo", "pier", "pigment", "pinafore", "pinnacle",
    "pipeline", "pistachio", "piston", "plateau", "platinum", "plaza", "plover", "plum",
    "pomegranate", "porcelain", "porridge", "portico", "postern", "prairie", "primrose", "prism",
    "promenade", "puffin", "pulley", "pumice", "pumpkin", "pyrite",
    "quail", "quarry", "quartz", "quay", "quill", "quilt", "quince", "quiver",
    "raft", "rainbow", "rampart", "ranch", "raspberry", "rattan", "ravine", "reef",
    "reservoir", "resin", "rhubarb", "ribbon", "rivet", "roadstead", "robin", "rookery",
    "rosemary", "rosewood", "rudder", "runestone", "rye",
    "saddle", "saffron", "sagebrush", "sailcloth", "salamander", "saltpeter", "sandalwood", "sandbar",
    "sapphire", "sardine", "satchel", "sawmill", "scaffold", "scarab", "schooner", "scythe",
    "seawall", "sediment", "sequoia", "shale", "shallot", "shears", "shingle", "shoal",
    "sickle", "silo", "silt", "skiff", "slate", "sleigh", "sluice", "smelter",
    "snapdragon", "snowdrift", "solstice", "sonnet", "sorghum", "spindle", "spruce", "spyglass",
    "stairwell", "stalactite", "starling", "steeple", "stirrup", "stonework", "strait", "stucco",
    "sturgeon", "summit", "sundial", "swallowtail", "sycamore", "syrup",
    "tabard", "taffeta", "talc", "tallow", "tamarind", "tankard", "tapestry", "tarpaulin",
    "teak", "telescope", "tempest", "terrace", "thatch", "thicket", "thimble", "thistle",
    "tideland", "timberline", "tinder", "toadstool", "toboggan", "toll", "topaz", "torrent",
    "tortoise", "tower", "trawler", "treadle", "trellis", "trestle", "tributary", "trowel",
    "tugboat", "tundra", "turbine", "turquoise", "turret", "twine",
    "udder", "ukulele", "umber", "underbrush", "upland", "urchin", "urn", "utensil",
    "valise", "valley", "vane", "vanilla", "varnish", "vault", "vellum", "veranda",
    "verdigris", "vestibule", "viaduct", "vineyard", "viol", "volcano", "vole", "vortex",
    "wagon", "walnut", "walrus", "warbler", "warehouse", "watermill", "weathervane", "weir",
    "wharf", "wheelbarrow", "whetstone", "wicker", "willow", "windlass", "windmill", "wisteria",
    "wolfram", "woodland", "wren", "wrought",
    "xebec", "xylophone",
    "yardarm", "yarrow", "yew", "yoke", "yucca",
    "zephyr", "zeppelin", "ziggurat", "zinc", "zinnia", "zither",
];

const FACT_TEMPLATES: &[&str] = &[
    "The entry for {w} traces the term to long-standing use in trade and travel writing.",
    "A concise survey notes that {w} appears in regional records well before modern spelling settled.",
    "Standard references describe {w} alongside its origin and principal everyday uses.",
    "Field guides list {w} among subjects commonly illustrated in nineteenth-century plates.",
    "The gazetteer entry on {w} remarks on its place in local craft and commerce.",
    "Older encyclopedias give {w} a short article covering form, source, and handling.",
    "A footnote records that {w} was a familiar term to surveyors and shipwrights alike.",
    "The handbook treats {w} briefly, citing workshop manuals and merchant inventories.",
];

fn fact_for(word: &str) -> String {
    let h: usize = word.bytes().map(|b| b as usize).sum();
    FACT_TEMPLATES[h % FACT_TEMPLATES.len()].replace("{w}", word)
}

fn validate_corpus_item(key: &str, value: &str, line: usize) -> Result<()> {
    if key.is_empty() {
        return Err(Error::Corpus(format!("line {line}: empty key")));
    }
    if key.contains("..") || key.contains(": ") || key.contains('\n') {
        return Err(Error::Corpus(format!(
            "line {line}: key {key:?} contains reserved characters ('..', ': ', newline)"
        )));
    }
    if value.is_empty() || value.contains('\n') {
        return Err(Error::Corpus(format!(
            "line {line}: value must be a non-empty single line"
        )));
    }
    Ok(())
}

/// The bundled headword corpus, sorted by key.
pub fn bundled() -> Vec<Item> {
    let mut items: Vec<Item> = WORDS
        .iter()
        .map(|w| Item {
            key: Key::word(w),
            value: fact_for(w),
        })
        .collect();
    items.sort_by(|a, b| a.key.cmp(&b.key));
    items
}

/// Loads a JSONL corpus: one object per line with string fields `key` and
/// `value`. Keys are lowercased, must be unique, and are sorted on return.
pub fn from_jsonl(path: &Path) -> Result<Vec<Item>> {
    #[derive(serde::Deserialize)]
    struct Row {
        key: String,
        value: String,
    }

    let file = std::fs::File::open(path)?;
    let mut items = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|e| Error::Corpus(format!("line {lineno}: {e}")))?;
        validate_corpus_item(&row.key, &row.value, lineno)?;
        items.push(Item {
            key: Key::word(&row.key),
            value: row.value,
        });
    }
    items.sort_by(|a, b| a.key.cmp(&b.key));
    for pair in items.windows(2) {
        if pair[0].key == pair[1].key {
            return Err(Error::Corpus(format!("duplicate key {}", pair[0].key)));
        }
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::io::Write;

    #[test]
    fn bundled_corpus_is_large_lowercase_and_unique() {
        let set: BTreeSet<&str> = WORDS.iter().copied().collect();
        assert_eq!(set.len(), WORDS.len(), "duplicate headword in corpus");
        assert!(WORDS.len() >= 600, "corpus too small: {}", WORDS.len());
        for w in WORDS {
            assert_eq!(*w, w.to_lowercase());
            assert!(!w.contains("..") && !w.contains(": "));
        }
    }

    #[test]
    fn bundled_corpus_is_sorted_with_single_sentence_values() {
        let items = bundled();
        for pair in items.windows(2) {
            assert!(pair[0].key < pair[1].key);
        }
        for item in &items {
            assert!(!item.value.is_empty());
            assert!(!item.value.contains('\n'));
        }
    }

    #[test]
    fn jsonl_round_trip_and_duplicate_rejection() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"key": "Bravo", "value": "Second letter."}}"#).unwrap();
        writeln!(f, r#"{{"key": "alpha", "value": "First letter."}}"#).unwrap();
        let items = from_jsonl(f.path()).unwrap();
        assert_eq!(items[0].key, Key::word("alpha"));
        assert_eq!(items[1].key, Key::word("bravo"));

        let mut dup = tempfile::NamedTempFile::new().unwrap();
        writeln!(dup, r#"{{"key": "same", "value": "one"}}"#).unwrap();
        writeln!(dup, r#"{{"key": "SAME", "value": "two"}}"#).unwrap();
        assert!(from_jsonl(dup.path()).is_err());
    }

    #[test]
    fn jsonl_reports_line_numbers_on_parse_errors() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"key": "fine", "value": "ok"}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        let err = from_jsonl(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "got: {err}");
    }
}
