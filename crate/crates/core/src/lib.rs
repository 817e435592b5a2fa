//! Narrative text to two-layer 3D semantic topology scenes.
//!
//! The pipeline segments a corpus into sentences, embeds and projects them
//! into 3D, clusters the projection by density peaks, attaches sentiment,
//! builds a windowed entity co-occurrence graph laid out with ForceAtlas2
//! and links both layers through sentence-index timestamps. The result is a
//! versioned [`scene::SceneDocument`].

pub mod affect;
pub mod clustering;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod entitygraph;
pub mod error;
pub mod forcelayout;
pub mod pipeline;
pub mod projection;
pub mod scene;

pub use error::{Error, Result};
