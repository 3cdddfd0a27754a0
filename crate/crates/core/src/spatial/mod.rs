//! Cell merging, Voronoi coverage, price and administrative joins, and the
//! planar geometry used for every distance in the crate.

mod admin;
mod dbscan;
mod merge;
mod polygon;
mod projection;
mod voronoi;

pub use admin::{
    label_point, read_admin_regions, read_boundary, write_admin_regions, write_boundary, AdminKind, AdminLabel,
    AdminRegion, DISTRICTS, SECTORS,
};
pub use dbscan::dbscan;
pub use merge::{
    assign_admin, attach_prices, build_voronoi, merge_cells, MergedCell, MergedCells, MergedId, PriceReport,
};
pub use polygon::{Polygon, Rect};
pub use projection::{BoundingBox, LonLat, Point, Projection, EARTH_RADIUS_M};
pub use voronoi::voronoi_cells;
