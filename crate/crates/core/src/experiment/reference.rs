//! Published per-phoneme recognition rates, shown next to measured values.
//! Display only: nothing in the pipeline reads them.

use crate::phoneme::PhonemeLabel;

/// `(label, traditional %, confusion-derived %)`.
const ROWS: &[(&str, u8, u8)] = &[
    ("aa", 54, 59),
    ("ae", 65, 66),
    ("ah", 27, 43),
    ("ao", 52, 67),
    ("aw", 9, 15),
    ("ax", 54, 63),
    ("ax-h", 35, 55),
    ("axr", 51, 58),
    ("ay", 60, 68),
    ("eh", 43, 61),
    ("er", 25, 44),
    ("ey", 44, 72),
    ("ih", 32, 56),
    ("ix", 54, 69),
    ("iy", 74, 66),
    ("ow", 48, 54),
    ("oy", 37, 39),
    ("uh", 0, 7),
    ("uw", 21, 39),
    ("ux", 21, 63),
    ("b", 35, 48),
    ("bcl", 30, 40),
    ("d", 53, 51),
    ("dcl", 51, 44),
    ("dx", 51, 46),
    ("gcl", 24, 33),
    ("kcl", 42, 52),
    ("p", 28, 43),
    ("pcl", 14, 46),
    ("q", 48, 50),
    ("t", 48, 50),
    ("tcl", 37, 43),
    ("en", 0, 46),
    ("m", 27, 46),
    ("hh", 34, 33),
    ("hv", 26, 35),
    ("jh", 20, 19),
    ("em", 0, 0),
    ("g", 19, 46),
    ("k", 54, 56),
    ("ng", 0, 0),
    ("n", 59, 59),
    ("nx", 5, 19),
    ("dh", 51, 50),
    ("f", 54, 48),
    ("s", 56, 51),
    ("sh", 53, 42),
    ("th", 7, 6),
    ("v", 51, 44),
    ("zh", 0, 0),
    ("el", 4, 20),
    ("l", 33, 38),
    ("r", 38, 40),
    ("w", 29, 32),
    ("y", 34, 33),
    ("epi", 40, 37),
    ("h#", 62, 57),
    ("ch", 21, 19),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceRate {
    pub hstc: u8,
    pub hsco: u8,
}

/// Reference rates for `label`, if published.
pub fn reference_rate(label: PhonemeLabel) -> Option<ReferenceRate> {
    ROWS.iter()
        .find(|(l, _, _)| *l == label.as_str())
        .map(|&(_, hstc, hsco)| ReferenceRate { hstc, hsco })
}

pub fn reference_labels() -> Vec<PhonemeLabel> {
    ROWS.iter()
        .map(|(l, _, _)| PhonemeLabel::parse(l).expect("inventory symbol"))
        .collect()
}
