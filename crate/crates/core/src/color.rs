use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockColor {
    Red,
    Green,
    Blue,
}

impl BlockColor {
    pub const ALL: [BlockColor; 3] = [BlockColor::Red, BlockColor::Green, BlockColor::Blue];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockColor::Red => "red",
            BlockColor::Green => "green",
            BlockColor::Blue => "blue",
        }
    }

    /// Saturated rendering color of a block top.
    pub fn rgb(self) -> [u8; 3] {
        match self {
            BlockColor::Red => [225, 35, 35],
            BlockColor::Green => [35, 210, 35],
            BlockColor::Blue => [35, 35, 225],
        }
    }
}

impl fmt::Display for BlockColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockColor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "red" | "r" => Ok(BlockColor::Red),
            "green" | "g" => Ok(BlockColor::Green),
            "blue" | "b" => Ok(BlockColor::Blue),
            other => Err(format!("unknown block color {other:?}")),
        }
    }
}

/// Per-color counts, indexed by [`BlockColor::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorCounts {
    #[serde(default)]
    pub red: u32,
    #[serde(default)]
    pub green: u32,
    #[serde(default)]
    pub blue: u32,
}

impl ColorCounts {
    pub fn new(red: u32, green: u32, blue: u32) -> Self {
        Self { red, green, blue }
    }

    pub fn get(&self, c: BlockColor) -> u32 {
        match c {
            BlockColor::Red => self.red,
            BlockColor::Green => self.green,
            BlockColor::Blue => self.blue,
        }
    }

    pub fn get_mut(&mut self, c: BlockColor) -> &mut u32 {
        match c {
            BlockColor::Red => &mut self.red,
            BlockColor::Green => &mut self.green,
            BlockColor::Blue => &mut self.blue,
        }
    }

    pub fn add(&mut self, c: BlockColor) {
        *self.get_mut(c) += 1;
    }

    pub fn total(&self) -> u32 {
        self.red + self.green + self.blue
    }

    pub fn from_colors(colors: impl IntoIterator<Item = BlockColor>) -> Self {
        let mut out = Self::default();
        for c in colors {
            out.add(c);
        }
        out
    }
}
