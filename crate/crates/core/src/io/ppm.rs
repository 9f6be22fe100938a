//! Binary PPM (P6) colour maps of grid channels.

use serde::{Deserialize, Serialize};

use crate::io::VIRIDIS;
use crate::ld::{LdDirection, LdGrid, LdMode, LdSample};

pub const OFF_SHELL: [u8; 3] = [255, 255, 255];
pub const ESCAPED: [u8; 3] = [200, 30, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    #[default]
    Total,
    Forward,
    Backward,
    StayTime,
}

impl Channel {
    pub fn value(self, s: &LdSample) -> f64 {
        match self {
            Channel::Total => s.total,
            Channel::Forward => s.forward,
            Channel::Backward => s.backward,
            Channel::StayTime => s.stay_time(),
        }
    }

    /// Whether the node is drawn in the escape colour: fixed-time grids only,
    /// for the escape flags that feed the channel.
    fn escaped(self, grid: &LdGrid, s: &LdSample) -> bool {
        if grid.meta.ld.mode != LdMode::FixedTime {
            return false;
        }
        match self {
            Channel::Forward => s.escaped(LdDirection::Forward),
            Channel::Backward => s.escaped(LdDirection::Backward),
            Channel::Total | Channel::StayTime => s.flags != 0,
        }
    }
}

/// Renders one channel with the first axis left to right and the second
/// axis bottom to top, scaled linearly between the channel's extrema over
/// the coloured nodes.
pub fn render(grid: &LdGrid, channel: Channel) -> Vec<u8> {
    let (n1, n2) = (grid.n1(), grid.n2());
    let coloured = |s: &LdSample| !channel.escaped(grid, s) && channel.value(s).is_finite();
    let (lo, hi) = grid
        .samples
        .iter()
        .flatten()
        .filter(|s| coloured(s))
        .map(|s| channel.value(s))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let mut out = format!("P6\n{n1} {n2}\n255\n").into_bytes();
    out.reserve(3 * n1 * n2);
    for j in (0..n2).rev() {
        for i in 0..n1 {
            let rgb = match grid.get(i, j) {
                None => OFF_SHELL,
                Some(s) if !coloured(s) => ESCAPED,
                Some(s) => {
                    let u = if hi > lo { (channel.value(s) - lo) / (hi - lo) } else { 0.0 };
                    VIRIDIS[(u * 255.0).round().clamp(0.0, 255.0) as usize]
                }
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}
