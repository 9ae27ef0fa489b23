//! Synthetic child-directed speech from a small probabilistic grammar.
//!
//! Sentences carry gold UPOS/XPOS tags and dependency heads, so the generator
//! can stand in for both a raw utterance corpus and a tagger treebank.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{AnnotatedSentence, Token, Upos};
use crate::rng::{self, StreamRng};
use crate::tagger::{chunk_nps, find_main_verb};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cat {
    Food,
    Drink,
    Meal,
    Toy,
    Vehicle,
    Animal,
    Body,
    Clothes,
    Place,
    Container,
    Book,
    Person,
    Song,
}

use Cat::*;

struct Noun {
    sg: &'static str,
    // Empty for mass nouns.
    pl: &'static str,
    cat: Cat,
}

const fn n(sg: &'static str, pl: &'static str, cat: Cat) -> Noun {
    Noun { sg, pl, cat }
}

// Within each category, earlier entries are more frequent.
static NOUNS: &[Noun] = &[
    n("cookie", "cookies", Food),
    n("apple", "apples", Food),
    n("banana", "bananas", Food),
    n("cheese", "", Food),
    n("cracker", "crackers", Food),
    n("sandwich", "sandwiches", Food),
    n("egg", "eggs", Food),
    n("carrot", "carrots", Food),
    n("grape", "grapes", Food),
    n("cereal", "", Food),
    n("soup", "", Food),
    n("toast", "", Food),
    n("pizza", "", Food),
    n("cake", "cakes", Food),
    n("orange", "oranges", Food),
    n("noodle", "noodles", Food),
    n("berry", "berries", Food),
    n("bread", "", Food),
    n("candy", "", Food),
    n("milk", "", Drink),
    n("juice", "", Drink),
    n("water", "", Drink),
    n("tea", "", Drink),
    n("supper", "", Meal),
    n("lunch", "", Meal),
    n("breakfast", "", Meal),
    n("dinner", "", Meal),
    n("snack", "snacks", Meal),
    n("nap", "naps", Meal),
    n("ball", "balls", Toy),
    n("block", "blocks", Toy),
    n("doll", "dolls", Toy),
    n("puzzle", "puzzles", Toy),
    n("teddy", "teddies", Toy),
    n("crayon", "crayons", Toy),
    n("balloon", "balloons", Toy),
    n("tower", "towers", Toy),
    n("bubble", "bubbles", Toy),
    n("toy", "toys", Toy),
    n("kite", "kites", Toy),
    n("drum", "drums", Toy),
    n("car", "cars", Vehicle),
    n("truck", "trucks", Vehicle),
    n("train", "trains", Vehicle),
    n("bus", "buses", Vehicle),
    n("bike", "bikes", Vehicle),
    n("boat", "boats", Vehicle),
    n("wagon", "wagons", Vehicle),
    n("tractor", "tractors", Vehicle),
    n("plane", "planes", Vehicle),
    n("stroller", "strollers", Vehicle),
    n("dog", "dogs", Animal),
    n("kitty", "kitties", Animal),
    n("duck", "ducks", Animal),
    n("bird", "birds", Animal),
    n("cow", "cows", Animal),
    n("horse", "horses", Animal),
    n("fish", "", Animal),
    n("bunny", "bunnies", Animal),
    n("bear", "bears", Animal),
    n("pig", "pigs", Animal),
    n("monkey", "monkeys", Animal),
    n("lion", "lions", Animal),
    n("frog", "frogs", Animal),
    n("elephant", "elephants", Animal),
    n("puppy", "puppies", Animal),
    n("hand", "hands", Body),
    n("nose", "", Body),
    n("foot", "feet", Body),
    n("mouth", "", Body),
    n("tummy", "", Body),
    n("hair", "", Body),
    n("eye", "eyes", Body),
    n("ear", "ears", Body),
    n("finger", "fingers", Body),
    n("face", "", Body),
    n("toe", "toes", Body),
    n("knee", "knees", Body),
    n("shoe", "shoes", Clothes),
    n("sock", "socks", Clothes),
    n("hat", "hats", Clothes),
    n("coat", "coats", Clothes),
    n("shirt", "shirts", Clothes),
    n("diaper", "diapers", Clothes),
    n("boot", "boots", Clothes),
    n("jacket", "jackets", Clothes),
    n("mitten", "mittens", Clothes),
    n("bib", "bibs", Clothes),
    n("table", "", Place),
    n("floor", "", Place),
    n("chair", "", Place),
    n("bed", "", Place),
    n("couch", "", Place),
    n("kitchen", "", Place),
    n("room", "", Place),
    n("park", "", Place),
    n("beach", "", Place),
    n("bath", "", Place),
    n("house", "", Place),
    n("store", "", Place),
    n("yard", "", Place),
    n("potty", "", Place),
    n("box", "boxes", Container),
    n("bag", "bags", Container),
    n("door", "doors", Container),
    n("window", "windows", Container),
    n("drawer", "drawers", Container),
    n("basket", "baskets", Container),
    n("cup", "cups", Container),
    n("bowl", "bowls", Container),
    n("bottle", "bottles", Container),
    n("spoon", "spoons", Container),
    n("book", "books", Book),
    n("story", "stories", Book),
    n("picture", "pictures", Book),
    n("page", "pages", Book),
    n("letter", "letters", Book),
    n("card", "cards", Book),
    n("baby", "babies", Person),
    n("girl", "girls", Person),
    n("boy", "boys", Person),
    n("man", "men", Person),
    n("lady", "ladies", Person),
    n("friend", "friends", Person),
    n("doctor", "doctors", Person),
    n("kid", "kids", Person),
    n("mother", "mothers", Person),
    n("brother", "brothers", Person),
    n("sister", "sisters", Person),
    n("song", "songs", Song),
    n("birthday", "", Song),
    n("tune", "tunes", Song),
    n("music", "", Song),
];

static NAMES: &[&str] = &[
    "mommy", "daddy", "grandma", "grandpa", "adam", "eve", "sarah", "ross", "nina",
];

static ADJS: &[(&str, &[Cat])] = &[
    ("big", &[Food, Toy, Vehicle, Animal, Place, Container, Person, Meal]),
    ("little", &[Food, Toy, Vehicle, Animal, Body, Place, Container, Person]),
    ("good", &[Food, Book, Person, Meal]),
    ("nice", &[Animal, Person, Song, Meal, Book]),
    ("new", &[Toy, Clothes, Book, Container, Person]),
    ("red", &[Toy, Vehicle, Clothes, Food, Container]),
    ("blue", &[Toy, Vehicle, Clothes, Container]),
    ("yummy", &[Food, Drink, Meal]),
    ("hot", &[Food, Drink]),
    ("cold", &[Food, Drink, Body]),
    ("funny", &[Animal, Book, Song, Person]),
    ("dirty", &[Body, Clothes, Place, Toy]),
    ("wet", &[Clothes, Body, Place]),
    ("soft", &[Animal, Toy, Clothes]),
    ("green", &[Toy, Vehicle, Food, Clothes]),
    ("yellow", &[Toy, Vehicle, Food]),
    ("silly", &[Animal, Person, Song]),
    ("old", &[Book, Vehicle, Clothes]),
    ("broken", &[Toy, Vehicle, Container]),
    ("brown", &[Animal]),
    ("sticky", &[Food, Body]),
    ("warm", &[Drink, Clothes]),
    ("happy", &[Song, Person]),
    ("fast", &[Vehicle]),
    ("sleepy", &[Animal, Person]),
];

#[derive(Debug, Clone, Copy)]
enum Frame {
    Intr,
    Trans(&'static [Cat]),
    Prep(&'static str, &'static [Cat]),
    Clause,
    ToVp,
    Ditrans(&'static [Cat]),
    Put(&'static [Cat]),
    Particle(&'static str),
    Greet,
}

use Frame::*;

struct Verb {
    forms: [&'static str; 5],
    weight: f64,
    frames: &'static [(Frame, f64)],
}

// forms: base, 3sg present, past, past participle, gerund.
static VERBS: &[Verb] = &[
    Verb {
        forms: ["go", "goes", "went", "gone", "going"],
        weight: 9.0,
        frames: &[
            (Prep("to", &[Place]), 0.5),
            (Particle("outside"), 0.2),
            (Particle("home"), 0.1),
            (Intr, 0.2),
        ],
    },
    Verb {
        forms: ["want", "wants", "wanted", "wanted", "wanting"],
        weight: 8.0,
        frames: &[(Trans(&[Food, Drink, Toy, Book, Meal]), 0.55), (ToVp, 0.45)],
    },
    Verb {
        forms: ["put", "puts", "put", "put", "putting"],
        weight: 6.0,
        frames: &[(Put(&[Toy, Food, Clothes, Book]), 1.0)],
    },
    Verb {
        forms: ["look", "looks", "looked", "looked", "looking"],
        weight: 6.0,
        frames: &[(Prep("at", &[Animal, Book, Toy, Vehicle, Person]), 0.75), (Intr, 0.25)],
    },
    Verb {
        forms: ["see", "sees", "saw", "seen", "seeing"],
        weight: 6.0,
        frames: &[(Trans(&[Animal, Vehicle, Toy, Person, Book]), 1.0)],
    },
    Verb {
        forms: ["eat", "eats", "ate", "eaten", "eating"],
        weight: 5.5,
        frames: &[(Trans(&[Food, Meal]), 0.85), (Intr, 0.15)],
    },
    Verb {
        forms: ["get", "gets", "got", "gotten", "getting"],
        weight: 5.0,
        frames: &[(Trans(&[Food, Toy, Clothes, Book, Drink]), 1.0)],
    },
    Verb {
        forms: ["play", "plays", "played", "played", "playing"],
        weight: 5.0,
        frames: &[(Prep("with", &[Toy, Animal, Person]), 0.6), (Intr, 0.4)],
    },
    Verb {
        forms: ["come", "comes", "came", "come", "coming"],
        weight: 4.5,
        frames: &[(Particle("here"), 0.4), (Prep("to", &[Person]), 0.3), (Intr, 0.3)],
    },
    Verb {
        forms: ["like", "likes", "liked", "liked", "liking"],
        weight: 4.5,
        frames: &[(Trans(&[Food, Drink, Toy, Animal, Book, Song]), 0.7), (ToVp, 0.3)],
    },
    Verb {
        forms: ["know", "knows", "knew", "known", "knowing"],
        weight: 4.0,
        frames: &[(Clause, 0.7), (Intr, 0.3)],
    },
    Verb {
        forms: ["think", "thinks", "thought", "thought", "thinking"],
        weight: 3.5,
        frames: &[(Clause, 1.0)],
    },
    Verb {
        forms: ["give", "gives", "gave", "given", "giving"],
        weight: 3.5,
        frames: &[(Ditrans(&[Food, Toy, Book, Drink]), 1.0)],
    },
    Verb {
        forms: ["make", "makes", "made", "made", "making"],
        weight: 3.0,
        frames: &[(Trans(&[Food, Meal, Toy]), 1.0)],
    },
    Verb {
        forms: ["take", "takes", "took", "taken", "taking"],
        weight: 3.0,
        frames: &[(Trans(&[Toy, Food, Book, Clothes]), 0.7), (Put(&[Toy, Clothes]), 0.3)],
    },
    Verb {
        forms: ["say", "says", "said", "said", "saying"],
        weight: 3.0,
        frames: &[(Greet, 0.5), (Clause, 0.5)],
    },
    Verb {
        forms: ["sit", "sits", "sat", "sat", "sitting"],
        weight: 3.0,
        frames: &[(Particle("down"), 0.5), (Prep("on", &[Place]), 0.5)],
    },
    Verb {
        forms: ["need", "needs", "needed", "needed", "needing"],
        weight: 2.5,
        frames: &[(Trans(&[Food, Drink, Clothes, Meal]), 0.6), (ToVp, 0.4)],
    },
    Verb {
        forms: ["read", "reads", "read", "read", "reading"],
        weight: 2.5,
        frames: &[(Trans(&[Book]), 0.7), (Ditrans(&[Book]), 0.3)],
    },
    Verb {
        forms: ["tell", "tells", "told", "told", "telling"],
        weight: 2.0,
        frames: &[(Ditrans(&[Book]), 0.6), (Clause, 0.4)],
    },
    Verb {
        forms: ["find", "finds", "found", "found", "finding"],
        weight: 2.0,
        frames: &[(Trans(&[Toy, Clothes, Book, Animal]), 1.0)],
    },
    Verb {
        forms: ["drink", "drinks", "drank", "drunk", "drinking"],
        weight: 2.0,
        frames: &[(Trans(&[Drink]), 1.0)],
    },
    Verb {
        forms: ["push", "pushes", "pushed", "pushed", "pushing"],
        weight: 1.8,
        frames: &[(Trans(&[Vehicle, Toy]), 1.0)],
    },
    Verb {
        forms: ["pull", "pulls", "pulled", "pulled", "pulling"],
        weight: 1.5,
        frames: &[(Trans(&[Vehicle, Toy, Clothes]), 1.0)],
    },
    Verb {
        forms: ["show", "shows", "showed", "shown", "showing"],
        weight: 1.5,
        frames: &[(Ditrans(&[Toy, Book, Animal]), 1.0)],
    },
    Verb {
        forms: ["call", "calls", "called", "called", "calling"],
        weight: 1.5,
        frames: &[(Trans(&[Person]), 1.0)],
    },
    Verb {
        forms: ["catch", "catches", "caught", "caught", "catching"],
        weight: 1.3,
        frames: &[(Trans(&[Toy, Animal]), 1.0)],
    },
    Verb {
        forms: ["sing", "sings", "sang", "sung", "singing"],
        weight: 1.5,
        frames: &[(Trans(&[Song]), 0.6), (Intr, 0.4)],
    },
    Verb {
        forms: ["hold", "holds", "held", "held", "holding"],
        weight: 1.5,
        frames: &[(Trans(&[Toy, Animal, Book, Container]), 1.0)],
    },
    Verb {
        forms: ["throw", "throws", "threw", "thrown", "throwing"],
        weight: 1.3,
        frames: &[(Trans(&[Toy]), 1.0)],
    },
    Verb {
        forms: ["wash", "washes", "washed", "washed", "washing"],
        weight: 1.3,
        frames: &[(Trans(&[Body, Clothes]), 1.0)],
    },
    Verb {
        forms: ["wear", "wears", "wore", "worn", "wearing"],
        weight: 1.2,
        frames: &[(Trans(&[Clothes]), 1.0)],
    },
    Verb {
        forms: ["open", "opens", "opened", "opened", "opening"],
        weight: 1.2,
        frames: &[(Trans(&[Container, Book]), 1.0)],
    },
    Verb {
        forms: ["build", "builds", "built", "built", "building"],
        weight: 1.0,
        frames: &[(Trans(&[Toy]), 1.0)],
    },
    Verb {
        forms: ["cook", "cooks", "cooked", "cooked", "cooking"],
        weight: 1.0,
        frames: &[(Trans(&[Food, Meal]), 0.7), (Intr, 0.3)],
    },
    Verb {
        forms: ["draw", "draws", "drew", "drawn", "drawing"],
        weight: 1.0,
        frames: &[(Trans(&[Book, Animal]), 1.0)],
    },
    Verb {
        forms: ["fix", "fixes", "fixed", "fixed", "fixing"],
        weight: 1.0,
        frames: &[(Trans(&[Vehicle, Toy]), 1.0)],
    },
    Verb {
        forms: ["feed", "feeds", "fed", "fed", "feeding"],
        weight: 1.0,
        frames: &[(Trans(&[Animal, Person]), 1.0)],
    },
    Verb {
        forms: ["hug", "hugs", "hugged", "hugged", "hugging"],
        weight: 1.0,
        frames: &[(Trans(&[Animal, Person, Toy]), 1.0)],
    },
    Verb {
        forms: ["ride", "rides", "rode", "ridden", "riding"],
        weight: 1.0,
        frames: &[(Trans(&[Vehicle, Animal]), 1.0)],
    },
    Verb {
        forms: ["drive", "drives", "drove", "driven", "driving"],
        weight: 0.8,
        frames: &[(Trans(&[Vehicle]), 1.0)],
    },
    Verb {
        forms: ["buy", "buys", "bought", "bought", "buying"],
        weight: 0.8,
        frames: &[(Trans(&[Food, Toy, Clothes]), 1.0)],
    },
    Verb {
        forms: ["listen", "listens", "listened", "listened", "listening"],
        weight: 1.0,
        frames: &[(Prep("to", &[Song, Person]), 1.0)],
    },
    Verb {
        forms: ["sleep", "sleeps", "slept", "slept", "sleeping"],
        weight: 1.0,
        frames: &[(Intr, 1.0)],
    },
    Verb {
        forms: ["cry", "cries", "cried", "cried", "crying"],
        weight: 0.8,
        frames: &[(Intr, 1.0)],
    },
    Verb {
        forms: ["jump", "jumps", "jumped", "jumped", "jumping"],
        weight: 0.8,
        frames: &[(Intr, 0.5), (Prep("on", &[Place]), 0.5)],
    },
    Verb {
        forms: ["run", "runs", "ran", "run", "running"],
        weight: 0.8,
        frames: &[(Intr, 0.5), (Particle("away"), 0.5)],
    },
    Verb {
        forms: ["fall", "falls", "fell", "fallen", "falling"],
        weight: 0.8,
        frames: &[(Particle("down"), 1.0)],
    },
    Verb {
        forms: ["stick", "sticks", "stuck", "stuck", "sticking"],
        weight: 0.6,
        frames: &[(Put(&[Book, Toy]), 1.0)],
    },
    Verb {
        forms: ["love", "loves", "loved", "loved", "loving"],
        weight: 1.2,
        frames: &[(Trans(&[Person, Animal, Food, Toy]), 1.0)],
    },
    Verb {
        forms: ["help", "helps", "helped", "helped", "helping"],
        weight: 1.0,
        frames: &[(Trans(&[Person]), 1.0)],
    },
    Verb {
        forms: ["try", "tries", "tried", "tried", "trying"],
        weight: 0.8,
        frames: &[(ToVp, 0.6), (Trans(&[Food]), 0.4)],
    },
    Verb {
        forms: ["kick", "kicks", "kicked", "kicked", "kicking"],
        weight: 0.7,
        frames: &[(Trans(&[Toy]), 1.0)],
    },
    Verb {
        forms: ["brush", "brushes", "brushed", "brushed", "brushing"],
        weight: 0.7,
        frames: &[(Trans(&[Body]), 1.0)],
    },
    Verb {
        forms: ["touch", "touches", "touched", "touched", "touching"],
        weight: 0.6,
        frames: &[(Trans(&[Animal, Body, Toy]), 1.0)],
    },
    Verb {
        forms: ["bring", "brings", "brought", "brought", "bringing"],
        weight: 0.8,
        frames: &[(Ditrans(&[Food, Toy, Book, Drink]), 1.0)],
    },
    Verb {
        forms: ["wait", "waits", "waited", "waited", "waiting"],
        weight: 0.7,
        frames: &[(Intr, 0.5), (Prep("for", &[Person, Meal]), 0.5)],
    },
    Verb {
        forms: ["talk", "talks", "talked", "talked", "talking"],
        weight: 0.6,
        frames: &[(Prep("to", &[Person]), 1.0)],
    },
    Verb {
        forms: ["dance", "dances", "danced", "danced", "dancing"],
        weight: 0.5,
        frames: &[(Intr, 1.0)],
    },
    Verb {
        forms: ["walk", "walks", "walked", "walked", "walking"],
        weight: 0.6,
        frames: &[(Intr, 0.5), (Prep("to", &[Place]), 0.5)],
    },
    Verb {
        forms: ["clean", "cleans", "cleaned", "cleaned", "cleaning"],
        weight: 0.6,
        frames: &[(Trans(&[Body, Place, Toy]), 1.0)],
    },
];

const XPOS: [&str; 5] = ["VB", "VBZ", "VBD", "VBN", "VBG"];

fn noun_weights() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        let mut seen: Vec<(Cat, usize)> = Vec::new();
        NOUNS
            .iter()
            .map(|nn| {
                let r = match seen.iter_mut().find(|(c, _)| *c == nn.cat) {
                    Some((_, k)) => {
                        *k += 1;
                        *k
                    }
                    None => {
                        seen.push((nn.cat, 0));
                        0
                    }
                };
                1.0 / (r as f64 + 1.5).powf(0.9)
            })
            .collect()
    })
}

/// Person/number of a subject, for verb agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Agr {
    First,
    Second,
    Third,
    Plural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tense {
    Present,
    Past,
    Modal,
    Negated,
    Progressive,
    Perfect,
}

struct Tok {
    form: String,
    upos: Upos,
    xpos: &'static str,
    head: Option<usize>,
    rel: &'static str,
}

struct Gen<'r> {
    r: &'r mut StreamRng,
    toks: Vec<Tok>,
    depth: usize,
}

fn pick<'a, T>(r: &mut StreamRng, items: &'a [T], weight: impl Fn(&T) -> f64) -> &'a T {
    let total: f64 = items.iter().map(&weight).sum();
    let mut x = r.gen::<f64>() * total;
    for it in items {
        x -= weight(it);
        if x < 0.0 {
            return it;
        }
    }
    items.last().expect("non-empty choice")
}

impl<'r> Gen<'r> {
    fn chance(&mut self, p: f64) -> bool {
        self.r.gen::<f64>() < p
    }

    fn one<'a>(&mut self, items: &'a [&'a str]) -> &'a str {
        items[self.r.gen_range(0..items.len())]
    }

    fn weighted<T: Copy>(&mut self, items: &[(T, f64)]) -> T {
        pick(self.r, items, |x| x.1).0
    }

    fn w(&mut self, form: &str, upos: Upos, xpos: &'static str) -> usize {
        self.toks.push(Tok {
            form: form.to_string(),
            upos,
            xpos,
            head: None,
            rel: "",
        });
        self.toks.len() - 1
    }

    fn attach(&mut self, i: usize, head: usize, rel: &'static str) {
        self.toks[i].head = Some(head);
        self.toks[i].rel = rel;
    }

    /// A determiner + adjective + noun phrase of one of `cats`; returns the
    /// head index and whether it is singular.
    fn np(&mut self, cats: &[Cat], allow_pron: bool) -> (usize, bool) {
        if cats.contains(&Person) && self.chance(0.35) {
            let name = self.one(NAMES);
            return (self.w(name, Upos::Propn, "NNP"), true);
        }
        if allow_pron && self.chance(0.2) {
            let (p, x, sg) = if cats.contains(&Person) && self.chance(0.5) {
                let t = pick(
                    self.r,
                    &[
                        ("me", "PRP", true, 3.0),
                        ("him", "PRP", true, 1.0),
                        ("her", "PRP", true, 1.0),
                        ("us", "PRP", false, 1.0),
                    ],
                    |x| x.3,
                );
                (t.0, t.1, t.2)
            } else {
                let t = pick(
                    self.r,
                    &[
                        ("it", "PRP", true, 5.0),
                        ("them", "PRP", false, 1.5),
                        ("this", "DT", true, 1.0),
                        ("that", "DT", true, 1.5),
                    ],
                    |x| x.3,
                );
                (t.0, t.1, t.2)
            };
            return (self.w(p, Upos::Pron, x), sg);
        }
        let weights = noun_weights();
        let idx: Vec<usize> = (0..NOUNS.len()).filter(|&i| cats.contains(&NOUNS[i].cat)).collect();
        let i = *pick(self.r, &idx, |&i| weights[i]);
        let noun = &NOUNS[i];
        let plural = !noun.pl.is_empty() && self.chance(0.2);
        let mass = noun.pl.is_empty();
        let start = self.toks.len();
        if plural {
            match self.weighted(&[(0, 3.0), (1, 2.0), (2, 1.0), (3, 1.0), (4, 1.5)]) {
                0 => {
                    self.w("the", Upos::Det, "DT");
                }
                1 => {
                    let d = self.one(&["your", "my", "his", "her", "our"]);
                    self.w(d, Upos::Det, "PRP$");
                }
                2 => {
                    self.w("some", Upos::Det, "DT");
                }
                3 => {
                    let num = self.one(&["two", "three"]);
                    self.w(num, Upos::Num, "CD");
                }
                _ => {}
            }
        } else if noun.cat == Meal && self.chance(0.6) || noun.cat == Song && noun.sg == "birthday" {
            // Bare: "after lunch", "happy birthday".
        } else {
            let options: &[(u8, f64)] = if mass {
                &[(0, 4.0), (2, 2.0), (3, 1.0), (4, 1.0), (5, 1.2), (6, 1.0)]
            } else {
                &[(0, 4.0), (1, 3.0), (2, 2.5), (3, 0.8), (4, 0.8), (6, 0.4), (7, 0.3)]
            };
            match self.weighted(options) {
                0 => {
                    self.w("the", Upos::Det, "DT");
                }
                1 => {
                    self.w("a", Upos::Det, "DT");
                }
                2 => {
                    let d = self.one(&["your", "your", "my", "his", "her", "our"]);
                    self.w(d, Upos::Det, "PRP$");
                }
                3 => {
                    self.w("this", Upos::Det, "DT");
                }
                4 => {
                    self.w("that", Upos::Det, "DT");
                }
                5 => {
                    self.w("some", Upos::Det, "DT");
                }
                6 => {
                    self.w("more", Upos::Adj, "JJR");
                }
                _ => {
                    self.w("another", Upos::Det, "DT");
                }
            }
        }
        let adjs = if self.chance(0.25) {
            if self.chance(0.15) {
                2
            } else {
                1
            }
        } else {
            0
        };
        let fitting: Vec<&str> = ADJS
            .iter()
            .filter(|(_, c)| c.contains(&noun.cat))
            .map(|(a, _)| *a)
            .collect();
        let mut last = "";
        for _ in 0..adjs {
            if fitting.is_empty() {
                break;
            }
            let a = fitting[self.r.gen_range(0..fitting.len())];
            if a != last {
                if self.chance(0.08) {
                    let v = self.w("very", Upos::Adv, "RB");
                    let ai = self.w(a, Upos::Adj, "JJ");
                    self.attach(v, ai, "advmod");
                } else {
                    self.w(a, Upos::Adj, "JJ");
                }
                last = a;
            }
        }
        if noun.sg == "birthday" && self.toks.len() == start && self.chance(0.7) {
            self.w("happy", Upos::Adj, "JJ");
        }
        let form = if plural { noun.pl } else { noun.sg };
        let head = self.w(form, Upos::Noun, if plural { "NNS" } else { "NN" });
        // "a" before a vowel becomes "an".
        if start < head && self.toks[start].form == "a" {
            let next = &self.toks[start + 1].form;
            if next.starts_with(['a', 'e', 'i', 'o', 'u']) {
                self.toks[start].form = "an".into();
            }
        }
        for k in start..head {
            if self.toks[k].head.is_none() {
                let rel = match self.toks[k].upos {
                    Upos::Det => "det",
                    Upos::Num => "nummod",
                    _ => "amod",
                };
                self.attach(k, head, rel);
            }
        }
        (head, !plural)
    }

    fn subject(&mut self) -> (usize, Agr) {
        let choice = self.weighted(&[
            (0, 7.0),
            (1, 3.0),
            (2, 2.0),
            (3, 1.0),
            (4, 1.0),
            (5, 1.0),
            (6, 1.0),
            (7, 3.0),
        ]);
        let (form, agr) = match choice {
            0 => ("you", Agr::Second),
            1 => ("i", Agr::First),
            2 => ("we", Agr::Plural),
            3 => ("he", Agr::Third),
            4 => ("she", Agr::Third),
            5 => ("they", Agr::Plural),
            6 => ("it", Agr::Third),
            _ => {
                let (h, sg) = self.np(&[Person, Animal], false);
                return (h, if sg { Agr::Third } else { Agr::Plural });
            }
        };
        (self.w(form, Upos::Pron, "PRP"), agr)
    }

    fn pick_verb(&mut self, filter: impl Fn(&Verb) -> bool) -> &'static Verb {
        let candidates: Vec<&'static Verb> = VERBS.iter().filter(|v| filter(v)).collect();
        pick(self.r, &candidates, |v: &&Verb| v.weight).to_owned()
    }

    fn pick_frame(&mut self, v: &'static Verb, allow_clause: bool) -> Frame {
        let frames: Vec<(Frame, f64)> = v
            .frames
            .iter()
            .copied()
            .filter(|(f, _)| allow_clause || !matches!(f, Clause | ToVp))
            .collect();
        if frames.is_empty() {
            return Intr;
        }
        self.weighted(&frames)
    }

    /// Complements of `verb` at index `vi`.
    fn frame(&mut self, frame: Frame, vi: usize, skip_object: bool) {
        match frame {
            Intr => {
                if self.chance(0.2) {
                    let a = self.one(&["now", "again", "too", "here", "there"]);
                    let ai = self.w(a, Upos::Adv, "RB");
                    self.attach(ai, vi, "advmod");
                }
            }
            Trans(cats) => {
                if !skip_object {
                    let (o, _) = self.np(cats, true);
                    self.attach(o, vi, "obj");
                }
            }
            Prep(p, cats) => {
                let pi = self.w(p, Upos::Adp, "IN");
                let (o, _) = self.np(cats, true);
                self.attach(pi, o, "case");
                self.attach(o, vi, "obl");
            }
            Clause => {
                let comp = if self.chance(0.3) {
                    Some(self.w("that", Upos::Sconj, "IN"))
                } else {
                    None
                };
                self.depth += 1;
                let cv = self.declarative();
                self.depth -= 1;
                if let Some(c) = comp {
                    self.attach(c, cv, "mark");
                }
                self.attach(cv, vi, "ccomp");
            }
            ToVp => {
                let to = self.w("to", Upos::Part, "TO");
                let v = self.pick_verb(|v| v.frames.iter().any(|(f, _)| !matches!(f, Clause | ToVp)));
                let ev = self.w(v.forms[0], Upos::Verb, "VB");
                self.attach(to, ev, "mark");
                self.attach(ev, vi, "xcomp");
                let f = self.pick_frame(v, false);
                self.frame(f, ev, false);
            }
            Ditrans(cats) => {
                let (rcpt, _) = if self.chance(0.6) {
                    let p = pick(self.r, &[("me", 4.0), ("him", 1.0), ("her", 1.0), ("us", 1.0)], |x| x.1);
                    (self.w(p.0, Upos::Pron, "PRP"), true)
                } else {
                    self.np(&[Person], false)
                };
                self.attach(rcpt, vi, "iobj");
                if !skip_object {
                    let (o, _) = self.np(cats, false);
                    self.attach(o, vi, "obj");
                }
            }
            Put(cats) => {
                if !skip_object {
                    let (o, _) = self.np(cats, true);
                    self.attach(o, vi, "obj");
                }
                let p = self.one(&["on", "in"]);
                let pi = self.w(p, Upos::Adp, "IN");
                let (l, _) = self.np(&[Place, Container], false);
                self.attach(pi, l, "case");
                self.attach(l, vi, "obl");
            }
            Particle(p) => {
                let (u, x) = match p {
                    "outside" | "home" | "here" => (Upos::Adv, "RB"),
                    _ => (Upos::Adp, "RP"),
                };
                let pi = self.w(p, u, x);
                self.attach(pi, vi, if u == Upos::Adv { "advmod" } else { "compound:prt" });
            }
            Greet => {
                let g = self.one(&["hi", "bye", "please", "thank you"]);
                if g == "thank you" {
                    // Keep "say thank you" as INTJ + PRON.
                    let t = self.w("thank", Upos::Intj, "UH");
                    let y = self.w("you", Upos::Pron, "PRP");
                    self.attach(t, vi, "obj");
                    self.attach(y, t, "obj");
                } else {
                    let gi = self.w(g, Upos::Intj, "UH");
                    self.attach(gi, vi, "obj");
                }
                if self.chance(0.5) {
                    let to = self.w("to", Upos::Adp, "IN");
                    let (h, _) = self.np(&[Person], false);
                    self.attach(to, h, "case");
                    self.attach(h, vi, "obl");
                }
            }
        }
    }

    fn aux(&mut self, form: &str, xpos: &'static str, vi_later: &mut Vec<usize>) {
        let a = self.w(form, Upos::Aux, xpos);
        vi_later.push(a);
    }

    fn adjunct(&mut self, vi: usize) {
        match self.weighted(&[(0, 3.0), (1, 2.0), (2, 1.0)]) {
            0 => {
                let a = self.one(&["now", "again", "too", "later", "today", "already", "first", "right now"]);
                if a == "right now" {
                    let r = self.w("right", Upos::Adv, "RB");
                    let n = self.w("now", Upos::Adv, "RB");
                    self.attach(r, n, "advmod");
                    self.attach(n, vi, "advmod");
                } else {
                    let ai = self.w(a, Upos::Adv, "RB");
                    self.attach(ai, vi, "advmod");
                }
            }
            1 => {
                let (p, cats): (&str, &[Cat]) = pick(
                    self.r,
                    &[
                        (("in", &[Place][..]), 3.0),
                        (("on", &[Place][..]), 2.0),
                        (("with", &[Person][..]), 2.0),
                        (("after", &[Meal][..]), 2.0),
                        (("before", &[Meal][..]), 1.0),
                        (("at", &[Place][..]), 1.0),
                    ],
                    |x| x.1,
                )
                .0;
                let pi = self.w(p, Upos::Adp, "IN");
                let (h, _) = self.np(cats, false);
                self.attach(pi, h, "case");
                self.attach(h, vi, "obl");
            }
            _ => {
                let f = self.w("for", Upos::Adp, "IN");
                let a = self.w("a", Upos::Det, "DT");
                let m = self.w("minute", Upos::Noun, "NN");
                self.attach(f, m, "case");
                self.attach(a, m, "det");
                self.attach(m, vi, "obl");
            }
        }
    }

    /// Subject, auxiliaries and verb of a finite clause, then complements.
    fn declarative(&mut self) -> usize {
        let v = self.pick_verb(|_| true);
        let frame = self.pick_frame(v, self.depth < 1);
        let tense = self.weighted(&[
            (Tense::Present, 3.0),
            (Tense::Past, 2.0),
            (Tense::Modal, 2.0),
            (Tense::Negated, 1.2),
            (Tense::Progressive, 1.5),
            (Tense::Perfect, 0.4),
        ]);
        let mut auxes = Vec::new();
        let contract = tense == Tense::Progressive && self.chance(0.4);
        let (subj, xpos_i) = if contract {
            let f = pick(self.r, &[("i'm", 1.0), ("you're", 1.5), ("it's", 0.5)], |x| x.1).0;
            let s = self.w(f, Upos::Pron, "PRP");
            (s, 4)
        } else {
            let (s, agr) = self.subject();
            let third = agr == Agr::Third;
            let xpos_i = match tense {
                Tense::Present => {
                    if third {
                        1
                    } else {
                        0
                    }
                }
                Tense::Past => 2,
                Tense::Modal => {
                    let m = self.one(&["can", "will", "should", "could", "would", "can't", "won't"]);
                    self.aux(m, "MD", &mut auxes);
                    0
                }
                Tense::Negated => {
                    let (f, x) = match (third, self.chance(0.35)) {
                        (_, true) => ("didn't", "VBD"),
                        (true, false) => ("doesn't", "VBZ"),
                        (false, false) => ("don't", "VBP"),
                    };
                    self.aux(f, x, &mut auxes);
                    0
                }
                Tense::Progressive => {
                    let (f, x) = match agr {
                        Agr::First => ("am", "VBP"),
                        Agr::Third => ("is", "VBZ"),
                        _ => ("are", "VBP"),
                    };
                    let (f, x) = if self.chance(0.2) {
                        if agr == Agr::Third || agr == Agr::First {
                            ("was", "VBD")
                        } else {
                            ("were", "VBD")
                        }
                    } else {
                        (f, x)
                    };
                    self.aux(f, x, &mut auxes);
                    4
                }
                Tense::Perfect => {
                    let (f, x) = if third { ("has", "VBZ") } else { ("have", "VBP") };
                    self.aux(f, x, &mut auxes);
                    3
                }
            };
            (s, xpos_i)
        };
        let xpos = if xpos_i == 0 && matches!(tense, Tense::Present) {
            "VBP"
        } else {
            XPOS[xpos_i]
        };
        let vi = self.w(v.forms[xpos_i], Upos::Verb, xpos);
        self.attach(subj, vi, "nsubj");
        for a in auxes {
            self.attach(a, vi, "aux");
        }
        self.frame(frame, vi, false);
        if self.depth == 0 && self.chance(0.25) {
            self.adjunct(vi);
        }
        vi
    }

    fn yes_no(&mut self) -> usize {
        let v = self.pick_verb(|_| true);
        let frame = self.pick_frame(v, false);
        let (aux, ax, vx) = pick(
            self.r,
            &[
                (("can", "MD", 0), 3.0),
                (("do", "VBP", 0), 3.0),
                (("did", "VBD", 0), 2.0),
                (("will", "MD", 0), 1.0),
                (("are", "VBP", 4), 1.5),
                (("should", "MD", 0), 0.5),
            ],
            |x| x.1,
        )
        .0;
        let a = self.w(aux, Upos::Aux, ax);
        let s = self.w("you", Upos::Pron, "PRP");
        let vi = self.w(v.forms[vx], Upos::Verb, XPOS[vx]);
        self.attach(a, vi, "aux");
        self.attach(s, vi, "nsubj");
        self.frame(frame, vi, false);
        if self.chance(0.2) {
            self.adjunct(vi);
        }
        vi
    }

    fn wh_question(&mut self) -> usize {
        if self.chance(0.3) {
            let who = self.w("who", Upos::Pron, "WP");
            let v = self.pick_verb(|v| v.frames.iter().any(|(f, _)| matches!(f, Trans(_))));
            let past = self.chance(0.4);
            let vi = self.w(
                v.forms[if past { 2 } else { 1 }],
                Upos::Verb,
                if past { "VBD" } else { "VBZ" },
            );
            self.attach(who, vi, "nsubj");
            let f = v.frames.iter().find(|(f, _)| matches!(f, Trans(_))).unwrap().0;
            self.frame(f, vi, false);
            return vi;
        }
        let put = self.chance(0.25);
        let v = if put {
            self.pick_verb(|v| v.frames.iter().any(|(f, _)| matches!(f, Put(_))))
        } else {
            self.pick_verb(|v| v.frames.iter().any(|(f, _)| matches!(f, Trans(_))))
        };
        let wh = if put {
            self.w("where", Upos::Adv, "WRB")
        } else {
            self.w("what", Upos::Pron, "WP")
        };
        let (aux, ax, vx) = pick(
            self.r,
            &[
                (("do", "VBP", 0), 3.0),
                (("did", "VBD", 0), 2.0),
                (("are", "VBP", 4), 1.5),
                (("can", "MD", 0), 1.0),
            ],
            |x| x.1,
        )
        .0;
        let a = self.w(aux, Upos::Aux, ax);
        let s = self.w("you", Upos::Pron, "PRP");
        let vi = self.w(v.forms[vx], Upos::Verb, XPOS[vx]);
        self.attach(a, vi, "aux");
        self.attach(s, vi, "nsubj");
        if put {
            let (o, _) = self.np(&[Toy, Clothes, Book, Food], true);
            self.attach(o, vi, "obj");
            self.attach(wh, vi, "advmod");
        } else {
            let f = v.frames.iter().find(|(f, _)| matches!(f, Trans(_))).unwrap().0;
            self.frame(f, vi, true);
            self.attach(wh, vi, "obj");
        }
        vi
    }

    fn imperative(&mut self) -> usize {
        let pre = self.weighted(&[(0, 6.0), (1, 1.5), (2, 1.0)]);
        let lead = match pre {
            1 => Some((self.w("don't", Upos::Aux, "VBP"), "aux")),
            2 => Some((self.w("please", Upos::Intj, "UH"), "discourse")),
            _ => None,
        };
        let v = self.pick_verb(|v| !v.frames.iter().all(|(f, _)| matches!(f, Clause)));
        let frame = self.pick_frame(v, false);
        let vi = self.w(v.forms[0], Upos::Verb, "VB");
        if let Some((l, rel)) = lead {
            self.attach(l, vi, rel);
        }
        self.frame(frame, vi, false);
        if self.chance(0.2) {
            self.adjunct(vi);
        }
        vi
    }

    fn copular(&mut self) -> usize {
        match self.weighted(&[(0, 3.0), (1, 2.0), (2, 1.0)]) {
            0 => {
                let s = self.one(&["it's", "that's"]);
                let si = self.w(s, Upos::Pron, if s == "it's" { "PRP" } else { "DT" });
                let cats = [Animal, Toy, Vehicle, Food, Book];
                let c = cats[self.r.gen_range(0..cats.len())];
                let (h, _) = self.np(&[c], false);
                self.attach(si, h, "nsubj");
                h
            }
            1 => {
                let cats = [Food, Drink, Toy, Clothes, Animal];
                let c = cats[self.r.gen_range(0..cats.len())];
                let (s, sg) = self.np(&[c], false);
                let cop = self.w(if sg { "is" } else { "are" }, Upos::Aux, if sg { "VBZ" } else { "VBP" });
                let fitting: Vec<&str> = ADJS.iter().filter(|(_, cs)| cs.contains(&c)).map(|(a, _)| *a).collect();
                let a = fitting[self.r.gen_range(0..fitting.len())];
                let ai = self.w(a, Upos::Adj, "JJ");
                self.attach(s, ai, "nsubj");
                self.attach(cop, ai, "cop");
                ai
            }
            _ => {
                let wh = self.w("where", Upos::Adv, "WRB");
                let (s, sg) = self.np(&[Toy, Animal, Clothes, Book, Person], false);
                // "where is the ball": the copula precedes the subject.
                let cop_form = if sg { "is" } else { "are" };
                let cop = self.toks.len();
                self.w(cop_form, Upos::Aux, if sg { "VBZ" } else { "VBP" });
                // Move the copula in front of the noun phrase.
                let np_start = wh + 1;
                let tok = self.toks.remove(cop);
                self.toks.insert(np_start, tok);
                // Indices inside the NP shift by one.
                for t in self.toks.iter_mut() {
                    if let Some(h) = t.head {
                        if h >= np_start && h < cop {
                            t.head = Some(h + 1);
                        }
                    }
                }
                let s = s + 1;
                self.attach(np_start, wh, "cop");
                self.attach(s, wh, "nsubj");
                wh
            }
        }
    }

    fn fragment(&mut self) -> usize {
        match self.weighted(&[(0, 2.0), (1, 2.0), (2, 1.0)]) {
            0 => {
                let cats = [Toy, Food, Animal, Drink, Vehicle];
                let c = cats[self.r.gen_range(0..cats.len())];
                self.np(&[c], false).0
            }
            1 => {
                let i = self.one(&["yes", "no", "oh", "okay", "wow", "uh", "hi", "bye"]);
                self.w(i, Upos::Intj, "UH")
            }
            _ => {
                let i = self.one(&["oh", "okay", "hey"]);
                let ii = self.w(i, Upos::Intj, "UH");
                let c = self.w(",", Upos::Punct, ",");
                self.attach(c, ii, "punct");
                let v = self.w("look", Upos::Verb, "VB");
                self.attach(ii, v, "discourse");
                if self.chance(0.6) {
                    self.frame(Prep("at", &[Animal, Vehicle, Book, Toy]), v, false);
                }
                v
            }
        }
    }

    fn vocative(&mut self, root: usize) {
        let c = self.w(",", Upos::Punct, ",");
        let v = if self.chance(0.5) {
            let f = self.one(&["honey", "sweetie", "buddy"]);
            self.w(f, Upos::Noun, "NN")
        } else {
            let f = self.one(NAMES);
            self.w(f, Upos::Propn, "NNP")
        };
        self.attach(c, v, "punct");
        self.attach(v, root, "vocative");
    }

    fn sentence(&mut self) -> Vec<Token> {
        let kind = self.weighted(&[
            (0u8, 28.0),
            (1, 12.0),
            (2, 8.0),
            (3, 17.0),
            (4, 11.0),
            (5, 4.0),
            (6, 8.0),
            (7, 8.0),
        ]);
        let (root, end) = match kind {
            0 => (self.declarative(), "."),
            1 => (self.yes_no(), "?"),
            2 => (self.wh_question(), "?"),
            3 => {
                let r = self.imperative();
                (r, if self.chance(0.3) { "!" } else { "." })
            }
            4 => {
                let sub = self.one(&["if", "when", "because", "before", "after", "while"]);
                if self.chance(0.5) {
                    let m = self.w(sub, Upos::Sconj, "IN");
                    self.depth += 1;
                    let sv = self.declarative();
                    self.depth -= 1;
                    let c = self.w(",", Upos::Punct, ",");
                    let main = self.declarative();
                    self.attach(m, sv, "mark");
                    self.attach(c, sv, "punct");
                    self.attach(sv, main, "advcl");
                    (main, ".")
                } else {
                    let main = self.declarative();
                    let m = self.w(sub, Upos::Sconj, "IN");
                    self.depth += 1;
                    let sv = self.declarative();
                    self.depth -= 1;
                    self.attach(m, sv, "mark");
                    self.attach(sv, main, "advcl");
                    (main, ".")
                }
            }
            5 => {
                let a = self.declarative();
                let c = self.w("and", Upos::Cconj, "CC");
                self.depth += 1;
                let b = self.declarative();
                self.depth -= 1;
                self.attach(c, b, "cc");
                self.attach(b, a, "conj");
                (a, ".")
            }
            6 => {
                let r = self.copular();
                let q = self.toks.first().is_some_and(|t| t.form == "where");
                (r, if q { "?" } else { "." })
            }
            _ => {
                let r = self.fragment();
                let e = if self.toks[r].upos == Upos::Noun { "?" } else { "." };
                (r, e)
            }
        };
        if self.chance(0.06) {
            self.vocative(root);
        }
        let p = self.w(end, Upos::Punct, ".");
        self.attach(p, root, "punct");
        // Anything left unattached hangs off the root.
        for i in 0..self.toks.len() {
            if i != root && self.toks[i].head.is_none() {
                self.toks[i].head = Some(root);
                self.toks[i].rel = "dep";
            }
        }
        self.toks
            .drain(..)
            .enumerate()
            .map(|(i, t)| {
                let head = if i == root { 0 } else { t.head.expect("attached") + 1 };
                let rel = if i == root { "root" } else { t.rel };
                Token {
                    form: t.form,
                    upos: t.upos,
                    xpos: Some(t.xpos.to_string()),
                    head: Some(head),
                    deprel: Some(rel.to_string()),
                }
            })
            .collect()
    }
}

/// One sentence from the stream `(seed, label, index)`.
pub fn generate_one(seed: u64, label: &str, index: u64, id: impl Into<String>) -> AnnotatedSentence {
    let mut r = rng::stream(seed, label, index);
    let mut g = Gen {
        r: &mut r,
        toks: Vec::new(),
        depth: 0,
    };
    let tokens = g.sentence();
    let mut s = AnnotatedSentence::new(id, tokens);
    s.main_verb = find_main_verb(&s);
    s.np_spans = chunk_nps(&s);
    s
}

/// `n` gold-annotated sentences with ids `<prefix>-1 ..= <prefix>-n`.
pub fn generate(seed: u64, label: &str, n: usize, prefix: &str) -> Vec<AnnotatedSentence> {
    (0..n)
        .into_par_iter()
        .map(|i| generate_one(seed, label, i as u64, format!("{prefix}-{}", i + 1)))
        .collect()
}

/// Utterance text as a transcript would show it: capitalized, with
/// punctuation attached to the preceding word.
pub fn render_raw(s: &AnnotatedSentence) -> String {
    let mut out = String::new();
    for (i, t) in s.tokens.iter().enumerate() {
        let is_punct = t.upos == Upos::Punct;
        if i > 0 && !is_punct {
            out.push(' ');
        }
        let capital = i == 0 || t.upos == Upos::Propn || t.form == "i" || t.form.starts_with("i'");
        if capital {
            let mut c = t.form.chars();
            if let Some(f) = c.next() {
                out.extend(f.to_uppercase());
                out.push_str(c.as_str());
            }
        } else {
            out.push_str(&t.form);
        }
    }
    out
}
