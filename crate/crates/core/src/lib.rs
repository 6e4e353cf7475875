//! Cross-dataset trend analytics over daily stock prices, stock tweets and
//! e-commerce clickstream events.

pub mod analytics;
pub mod cleaning;
pub mod engine;
pub mod generate;
pub mod ingestion;
pub mod pipeline;
pub mod report;
pub mod sentiment;
pub mod stock_metrics;
pub mod textlist;
