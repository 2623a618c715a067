//! Ten fixed 16×16 digit prototypes, `#` ink and `.` background.

use crate::nn::{Dense, Image, Network, NetworkConfig};

pub const GLYPH_SIZE: usize = 16;

const GLYPHS: [[&str; GLYPH_SIZE]; 10] = [
    [
        "................",
        ".....######.....",
        "....########....",
        "...###....###...",
        "...##......##...",
        "..###......###..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..###......###..",
        "...##......##...",
        "...###....###...",
        "....########....",
        ".....######.....",
        "................",
    ],
    [
        "................",
        ".......##.......",
        "......###.......",
        ".....####.......",
        "....##.##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".......##.......",
        ".....######.....",
        ".....######.....",
        "................",
    ],
    [
        "................",
        ".....######.....",
        "....########....",
        "...##......##...",
        "...........##...",
        "...........##...",
        "..........###...",
        ".........###....",
        "........###.....",
        ".......###......",
        "......###.......",
        ".....###........",
        "....###.........",
        "...#########....",
        "...##########...",
        "................",
    ],
    [
        "................",
        "....#######.....",
        "...#########....",
        "...........##...",
        "...........##...",
        "...........##...",
        "......######....",
        "......######....",
        "...........##...",
        "...........##...",
        "...........##...",
        "...........##...",
        "...##.....###...",
        "...#########....",
        "....#######.....",
        "................",
    ],
    [
        "................",
        ".........##.....",
        "........###.....",
        ".......####.....",
        "......##.##.....",
        ".....##..##.....",
        "....##...##.....",
        "...##....##.....",
        "..##.....##.....",
        "..############..",
        "..############..",
        ".........##.....",
        ".........##.....",
        ".........##.....",
        ".........##.....",
        "................",
    ],
    [
        "................",
        "...##########...",
        "...##########...",
        "...##...........",
        "...##...........",
        "...##...........",
        "...########.....",
        "...#########....",
        "...........##...",
        "...........##...",
        "...........##...",
        "...........##...",
        "...##.....###...",
        "...#########....",
        "....#######.....",
        "................",
    ],
    [
        "................",
        "......#####.....",
        ".....######.....",
        "....##..........",
        "...##...........",
        "...##...........",
        "...##.######....",
        "...##########...",
        "...###.....##...",
        "...##......##...",
        "...##......##...",
        "...##......##...",
        "...###....###...",
        "....########....",
        ".....######.....",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "...........##...",
        "..........##....",
        "..........##....",
        ".........##.....",
        ".........##.....",
        "........##......",
        "........##......",
        ".......##.......",
        ".......##.......",
        "......##........",
        "......##........",
        "......##........",
        "................",
    ],
    [
        "................",
        ".....######.....",
        "....########....",
        "...##......##...",
        "...##......##...",
        "...##......##...",
        "....##....##....",
        ".....######.....",
        ".....######.....",
        "....##....##....",
        "...##......##...",
        "...##......##...",
        "...##......##...",
        "....########....",
        ".....######.....",
        "................",
    ],
    [
        "................",
        ".....######.....",
        "....########....",
        "...###....###...",
        "...##......##...",
        "...##......##...",
        "...##......##...",
        "....#########...",
        ".....########...",
        "...........##...",
        "...........##...",
        "...........##...",
        "..........##....",
        ".....#####......",
        ".....####.......",
        "................",
    ],
];

/// Prototype image of `digit`, intensities 0 or 1.
///
/// # Panics
/// If `digit > 9`.
pub fn prototype(digit: usize) -> Image {
    let pixels = GLYPHS[digit]
        .iter()
        .flat_map(|row| row.bytes().map(|b| if b == b'#' { 1.0 } else { 0.0 }))
        .collect();
    Image::new(GLYPH_SIZE, GLYPH_SIZE, pixels).expect("glyph rows are 16 wide")
}

/// Single-layer network that classifies an image by its nearest prototype:
/// glyph `assignments[k].0` is reported as class `assignments[k].1`. The
/// encoder is shared, so every image of a sample is classified the same way.
pub fn prototype_classifier(assignments: &[(usize, usize)], classes: usize, pair_arity: usize) -> Network {
    let cfg = NetworkConfig {
        image_height: GLYPH_SIZE,
        image_width: GLYPH_SIZE,
        pair_arity,
        hidden: vec![],
        classes,
        ..NetworkConfig::default()
    };
    let mut layer = Dense::zeros(GLYPH_SIZE * GLYPH_SIZE, classes);
    for &(glyph, class) in assignments {
        let p = prototype(glyph);
        // argmax_c (w_c . x + b_c) = argmin_c |x - proto_c|^2.
        let norm: f64 = p.pixels.iter().map(|x| x * x).sum();
        for (i, &x) in p.pixels.iter().enumerate() {
            layer.weight[[i, class]] = x;
        }
        layer.bias[class] = -0.5 * norm;
    }
    Network::from_layers(&cfg, vec![layer]).expect("shapes follow the config")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_are_square_and_distinct() {
        for g in &GLYPHS {
            assert!(g.iter().all(|r| r.len() == GLYPH_SIZE));
        }
        for a in 0..10 {
            for b in 0..a {
                let (pa, pb) = (prototype(a), prototype(b));
                let diff = pa.pixels.iter().zip(&pb.pixels).filter(|(x, y)| x != y).count();
                assert!(diff >= 12, "glyphs {a} and {b} differ in {diff} pixels");
            }
        }
    }
}
