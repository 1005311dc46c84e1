//! Channel state information: SVD reference, per-layer MMSE SINR, link
//! abstraction, CQI mapping and the RI/PMI/CQI report selection.

mod cqi;
mod select;
mod sinr;
mod svd;

pub use cqi::{map_cqi, CqiRow, CqiTable, DEFAULT_GAP_DB, DEFAULT_TARGET_BLER};
pub use select::{select_csi, CodebookSet, CsiReport, SelectionConfig};
pub use sinr::{effective_sinr, layer_sinr_mmse, mimo_capacity};
pub use svd::{svd_precode, SvdResult};
