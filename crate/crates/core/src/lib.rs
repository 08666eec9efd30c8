pub mod cli;
pub mod evalmap;
pub mod frequency;
pub mod imagery;
pub mod network;
pub mod numerics;
pub mod preclassify;
pub mod synthgen;
pub mod trainer;
