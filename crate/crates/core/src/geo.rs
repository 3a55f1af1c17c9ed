//! Bathymetry rasters, mission polygons and the volume integral over them.
//!
//! Coordinates are planar and projected, in meters. Depths are positive
//! downward; land and invalid cells carry the grid's nodata sentinel.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("line {line}: {message}")]
    Grid { line: usize, message: String },
    #[error("invalid polygon: {0}")]
    Polygon(String),
    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Raster of water depths, row-major with the top (northernmost) row first.
#[derive(Debug, Clone, PartialEq)]
pub struct BathymetryGrid {
    /// x of the lower-left corner of the lower-left cell.
    pub origin_x: f64,
    /// y of the lower-left corner of the lower-left cell.
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub depth: Vec<f64>,
    pub nodata_value: f64,
}

impl BathymetryGrid {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
        depth: Vec<f64>,
        nodata_value: f64,
    ) -> Result<Self, GeoError> {
        let invalid = |message: String| GeoError::Grid { line: 0, message };
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(invalid(format!("cell size must be positive, got {cell_size}")));
        }
        if depth.len() != n_rows * n_cols {
            return Err(invalid(format!(
                "expected {} depth values, got {}",
                n_rows * n_cols,
                depth.len()
            )));
        }
        if let Some((i, d)) = depth
            .iter()
            .enumerate()
            .find(|(_, &d)| d != nodata_value && !(d >= 0.0 && d.is_finite()))
        {
            return Err(invalid(format!("cell {i} has invalid depth {d}")));
        }
        Ok(Self { origin_x, origin_y, cell_size, n_rows, n_cols, depth, nodata_value })
    }

    /// Constant-depth grid, mostly for fixtures.
    pub fn flat(origin: Point2D, cell_size: f64, n_rows: usize, n_cols: usize, depth: f64) -> Self {
        Self::new(origin.x, origin.y, cell_size, n_rows, n_cols, vec![depth; n_rows * n_cols], -9999.0)
            .expect("flat grid parameters must be valid")
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn is_water(&self, index: usize) -> bool {
        self.depth[index] != self.nodata_value
    }

    pub fn cell_center(&self, index: usize) -> Point2D {
        let row = index / self.n_cols;
        let col = index % self.n_cols;
        Point2D::new(
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + ((self.n_rows - row) as f64 - 0.5) * self.cell_size,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Index of the cell containing `p`, if any.
    pub fn cell_at(&self, p: Point2D) -> Option<usize> {
        let col = ((p.x - self.origin_x) / self.cell_size).floor();
        let row_from_bottom = ((p.y - self.origin_y) / self.cell_size).floor();
        if col < 0.0 || row_from_bottom < 0.0 {
            return None;
        }
        let (col, row_from_bottom) = (col as usize, row_from_bottom as usize);
        if col >= self.n_cols || row_from_bottom >= self.n_rows {
            return None;
        }
        Some((self.n_rows - 1 - row_from_bottom) * self.n_cols + col)
    }

    pub fn depth_at(&self, p: Point2D) -> Option<f64> {
        self.cell_at(p).filter(|&i| self.is_water(i)).map(|i| self.depth[i])
    }
}

/// Parses an ESRI ASCII grid.
///
/// Header keys are case-insensitive. `xllcenter`/`yllcenter` are accepted in
/// place of the corner keys, and `NODATA_value` defaults to -9999 when absent.
pub fn load_ascii_grid(text: &str) -> Result<BathymetryGrid, GeoError> {
    let err = |line: usize, message: String| GeoError::Grid { line, message };

    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut centered = (false, false);
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    while let Some(&(lineno, line)) = lines.peek() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            lines.next();
            continue;
        }
        let first = trimmed.split_whitespace().next().unwrap_or_default();
        if first.parse::<f64>().is_ok() {
            break;
        }
        let mut parts = trimmed.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_lowercase();
        let value = parts
            .next()
            .ok_or_else(|| err(lineno, format!("header key '{key}' has no value")))?;
        if parts.next().is_some() {
            return Err(err(lineno, format!("header key '{key}' has more than one value")));
        }
        let number: f64 = value
            .parse()
            .map_err(|_| err(lineno, format!("header value '{value}' for '{key}' is not numeric")))?;
        let count = |n: f64| -> Result<usize, GeoError> {
            if n >= 1.0 && n.fract() == 0.0 {
                Ok(n as usize)
            } else {
                Err(err(lineno, format!("'{key}' must be a positive integer, got {value}")))
            }
        };
        match key.as_str() {
            "ncols" => ncols = Some(count(number)?),
            "nrows" => nrows = Some(count(number)?),
            "xllcorner" => xll = Some(number),
            "yllcorner" => yll = Some(number),
            "xllcenter" => {
                xll = Some(number);
                centered.0 = true;
            }
            "yllcenter" => {
                yll = Some(number);
                centered.1 = true;
            }
            "cellsize" => {
                if !(number > 0.0) {
                    return Err(err(lineno, format!("cellsize must be positive, got {value}")));
                }
                cellsize = Some(number)
            }
            "nodata_value" => nodata = Some(number),
            _ => return Err(err(lineno, format!("unknown header key '{key}'"))),
        }
        lines.next();
    }

    let header_line = lines.peek().map(|&(l, _)| l).unwrap_or(1);
    let missing = |name: &str| err(header_line, format!("missing header key '{name}'"));
    let n_cols = ncols.ok_or_else(|| missing("ncols"))?;
    let n_rows = nrows.ok_or_else(|| missing("nrows"))?;
    let cell_size = cellsize.ok_or_else(|| missing("cellsize"))?;
    let mut origin_x = xll.ok_or_else(|| missing("xllcorner"))?;
    let mut origin_y = yll.ok_or_else(|| missing("yllcorner"))?;
    if centered.0 {
        origin_x -= cell_size / 2.0;
    }
    if centered.1 {
        origin_y -= cell_size / 2.0;
    }
    let nodata_value = nodata.unwrap_or(-9999.0);

    let expected = n_rows * n_cols;
    let mut depth = Vec::with_capacity(expected);
    let mut last_line = header_line;
    for (lineno, line) in lines {
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| err(lineno, format!("value '{token}' is not numeric")))?;
            if v != nodata_value && !(v >= 0.0) {
                return Err(err(lineno, format!("depth {v} is negative (depths are positive downward)")));
            }
            depth.push(v);
            if depth.len() > expected {
                return Err(err(lineno, format!("too many values: expected {expected}")));
            }
        }
        last_line = lineno;
    }
    if depth.len() != expected {
        return Err(err(
            last_line,
            format!("expected {expected} values ({n_rows} rows x {n_cols} cols), found {}", depth.len()),
        ));
    }
    BathymetryGrid::new(origin_x, origin_y, cell_size, n_rows, n_cols, depth, nodata_value)
}

pub fn write_ascii_grid(grid: &BathymetryGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.n_cols);
    let _ = writeln!(out, "nrows {}", grid.n_rows);
    let _ = writeln!(out, "xllcorner {}", grid.origin_x);
    let _ = writeln!(out, "yllcorner {}", grid.origin_y);
    let _ = writeln!(out, "cellsize {}", grid.cell_size);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata_value);
    for row in grid.depth.chunks(grid.n_cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Simple polygon delimiting the deployment area. The ring is implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionPolygon {
    vertices: Vec<Point2D>,
}

impl MissionPolygon {
    pub fn new(mut vertices: Vec<Point2D>) -> Result<Self, GeoError> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeoError::Polygon(format!("need at least 3 vertices, got {}", vertices.len())));
        }
        if let Some(p) = vertices.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeoError::Polygon(format!("non-finite vertex ({}, {})", p.x, p.y)));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeoError::Polygon(format!("consecutive vertices {i} and {} are equal", (i + 1) % n)));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // adjacent edges share a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(GeoError::Polygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rectangle(min: Point2D, max: Point2D) -> Result<Self, GeoError> {
        Self::new(vec![min, Point2D::new(max.x, min.y), max, Point2D::new(min.x, max.y)])
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>().abs() / 2.0
    }

    /// Reads the first ring of a GeoJSON Polygon, given bare, as a Feature, or
    /// as the first feature of a FeatureCollection.
    pub fn from_geojson(text: &str) -> Result<Self, GeoError> {
        let value: Value = serde_json::from_str(text).map_err(|e| GeoError::GeoJson(e.to_string()))?;
        let geometry = match value.get("type").and_then(Value::as_str) {
            Some("Polygon") => &value,
            Some("Feature") => value
                .get("geometry")
                .ok_or_else(|| GeoError::GeoJson("feature has no geometry".into()))?,
            Some("FeatureCollection") => value
                .get("features")
                .and_then(Value::as_array)
                .and_then(|f| f.first())
                .and_then(|f| f.get("geometry"))
                .ok_or_else(|| GeoError::GeoJson("feature collection has no features".into()))?,
            Some(other) => return Err(GeoError::GeoJson(format!("expected a Polygon, got {other}"))),
            None => return Err(GeoError::GeoJson("missing 'type'".into())),
        };
        match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => {}
            Some("MultiPolygon") => {
                return Err(GeoError::GeoJson("multi-polygon missions are not supported".into()))
            }
            other => return Err(GeoError::GeoJson(format!("expected a Polygon geometry, got {other:?}"))),
        }
        let rings = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| GeoError::GeoJson("polygon has no coordinates".into()))?;
        if rings.len() > 1 {
            return Err(GeoError::GeoJson(format!(
                "polygon has {} interior ring(s); holes are not supported",
                rings.len() - 1
            )));
        }
        let ring = rings
            .first()
            .and_then(Value::as_array)
            .ok_or_else(|| GeoError::GeoJson("polygon has no exterior ring".into()))?;
        let vertices = ring
            .iter()
            .map(|pos| {
                let xy = pos.as_array().filter(|a| a.len() >= 2);
                match xy.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                    Some((Some(x), Some(y))) => Ok(Point2D::new(x, y)),
                    _ => Err(GeoError::GeoJson(format!("bad position {pos}"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vertices)
    }

    pub fn to_geojson(&self) -> Value {
        let mut ring: Vec<Value> = self.vertices.iter().map(|p| serde_json::json!([p.x, p.y])).collect();
        ring.push(ring[0].clone());
        serde_json::json!({ "type": "Polygon", "coordinates": [ring] })
    }
}

fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Point2D, a: Point2D, b: Point2D) -> bool {
    let scale = (b.x - a.x).abs().max((b.y - a.y).abs()).max(1.0);
    orient(a, b, p).abs() <= 1e-12 * scale * scale
        && p.x >= a.x.min(b.x) - 1e-12 * scale
        && p.x <= a.x.max(b.x) + 1e-12 * scale
        && p.y >= a.y.min(b.y) - 1e-12 * scale
        && p.y <= a.y.max(b.y) + 1e-12 * scale
}

fn segments_intersect(a: Point2D, b: Point2D, c: Point2D, d: Point2D) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

/// Even-odd ray casting; points on the boundary count as inside.
pub fn point_in_polygon(p: Point2D, poly: &MissionPolygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Indices of the water cells whose centers lie inside `poly`, in grid order.
pub fn water_cells_in(grid: &BathymetryGrid, poly: &MissionPolygon) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| grid.is_water(i) && point_in_polygon(grid.cell_center(i), poly))
        .collect()
}

/// Total water volume (m³) of the cells whose centers lie inside `poly`.
pub fn volume_under_polygon(grid: &BathymetryGrid, poly: &MissionPolygon) -> f64 {
    let area = grid.cell_area();
    water_cells_in(grid, poly).into_iter().map(|i| grid.depth[i] * area).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> MissionPolygon {
        MissionPolygon::rectangle(Point2D::new(0.0, 0.0), Point2D::new(1.0, 1.0)).unwrap()
    }

    #[test]
    fn loads_simple_grid() {
        let g = load_ascii_grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -1\n5 5\n5 5\n")
            .unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.depth.iter().all(|&d| d == 5.0));
        assert_eq!(g.cell_size, 10.0);
    }

    #[test]
    fn nodata_cell_is_not_water() {
        let g = load_ascii_grid("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n-1 3\n")
            .unwrap();
        assert!(!g.is_water(0));
        assert!(g.is_water(1));
    }

    #[test]
    fn value_count_mismatch_names_expected_count() {
        let e = load_ascii_grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n5 5\n5\n")
            .unwrap_err();
        match e {
            GeoError::Grid { line, message } => {
                assert_eq!(line, 8);
                assert!(message.contains("expected 4"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_header_and_values_report_lines() {
        let e = load_ascii_grid("ncols 2\nnrowz 2\n").unwrap_err();
        assert!(matches!(e, GeoError::Grid { line: 2, .. }), "{e:?}");
        let e = load_ascii_grid("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nabc\n").unwrap_err();
        assert!(matches!(e, GeoError::Grid { line: 6, .. }), "{e:?}");
        let e = load_ascii_grid("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1x\n").unwrap_err();
        assert!(matches!(e, GeoError::Grid { line: 6, .. }), "{e:?}");
    }

    #[test]
    fn top_row_is_north() {
        let g = load_ascii_grid("ncols 1\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\n1\n2\n").unwrap();
        assert_eq!(g.cell_center(0), Point2D::new(5.0, 15.0));
        assert_eq!(g.cell_center(1), Point2D::new(5.0, 5.0));
        assert_eq!(g.cell_at(Point2D::new(5.0, 15.0)), Some(0));
        assert_eq!(g.depth_at(Point2D::new(1.0, 1.0)), Some(2.0));
    }

    #[test]
    fn polygon_membership() {
        let sq = unit_square();
        assert!(point_in_polygon(Point2D::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Point2D::new(2.0, 2.0), &sq));
        assert!(point_in_polygon(Point2D::new(0.5, 0.0), &sq));
        assert!(point_in_polygon(Point2D::new(1.0, 1.0), &sq));
    }

    #[test]
    fn polygon_validation() {
        assert!(MissionPolygon::new(vec![Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0)]).is_err());
        let bowtie = vec![
            Point2D::new(0.0, 0.0),
            Point2D::new(1.0, 1.0),
            Point2D::new(1.0, 0.0),
            Point2D::new(0.0, 1.0),
        ];
        assert!(MissionPolygon::new(bowtie).is_err());
        let dup = vec![Point2D::new(0.0, 0.0), Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0), Point2D::new(0.0, 1.0)];
        assert!(MissionPolygon::new(dup).is_err());
    }

    #[test]
    fn geojson_polygon() {
        let p = MissionPolygon::from_geojson(
            r#"{"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,3],[0,3],[0,0]]]}}"#,
        )
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.area(), 12.0);
        let holes = r#"{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,3],[0,0]],[[1,1],[2,1],[2,2],[1,1]]]}"#;
        let e = MissionPolygon::from_geojson(holes).unwrap_err();
        assert!(e.to_string().contains("holes"), "{e}");
    }

    #[test]
    fn volume_examples() {
        let g = BathymetryGrid::flat(Point2D::new(0.0, 0.0), 10.0, 200, 200, 10.0);
        let poly = MissionPolygon::rectangle(Point2D::new(0.0, 0.0), Point2D::new(1000.0, 1000.0)).unwrap();
        assert_eq!(volume_under_polygon(&g, &poly), 1.0e7);

        let far = MissionPolygon::rectangle(Point2D::new(5000.0, 5000.0), Point2D::new(6000.0, 6000.0)).unwrap();
        assert_eq!(volume_under_polygon(&g, &far), 0.0);

        let g = BathymetryGrid::new(0.0, 0.0, 1.0, 1, 3, vec![5.0, 15.0, 100.0], -1.0).unwrap();
        let two = MissionPolygon::rectangle(Point2D::new(0.0, 0.0), Point2D::new(1.9, 1.0)).unwrap();
        assert_eq!(volume_under_polygon(&g, &two), 20.0);
    }

    fn depth_grid() -> impl Strategy<Value = BathymetryGrid> {
        (2usize..12, 2usize..12).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop_oneof![Just(-1.0), 0.0..50.0f64], r * c)
                .prop_map(move |d| BathymetryGrid::new(0.0, 0.0, 10.0, r, c, d, -1.0).unwrap())
        })
    }

    proptest! {
        #[test]
        fn ascii_round_trip(g in depth_grid()) {
            let back = load_ascii_grid(&write_ascii_grid(&g)).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn volume_is_additive_over_split(g in depth_grid(), split in 1.0..119.0f64) {
            let w = g.n_cols as f64 * 10.0;
            let h = g.n_rows as f64 * 10.0;
            let split = split.min(w - 0.5);
            // the split line must not hit a cell center
            let split = if ((split / 10.0).fract() - 0.5).abs() < 1e-6 { split + 0.1 } else { split };
            let left = MissionPolygon::rectangle(Point2D::new(-1.0, -1.0), Point2D::new(split, h + 1.0)).unwrap();
            let right = MissionPolygon::rectangle(Point2D::new(split + 1e-9, -1.0), Point2D::new(w + 1.0, h + 1.0)).unwrap();
            let all = MissionPolygon::rectangle(Point2D::new(-1.0, -1.0), Point2D::new(w + 1.0, h + 1.0)).unwrap();
            let sum = volume_under_polygon(&g, &left) + volume_under_polygon(&g, &right);
            let total = volume_under_polygon(&g, &all);
            prop_assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
        }

        #[test]
        fn volume_translation_equivariant(g in depth_grid(), dx in -1e4..1e4f64, dy in -1e4..1e4f64) {
            let poly = MissionPolygon::new(vec![
                Point2D::new(3.0, 2.0), Point2D::new(70.0, 11.0), Point2D::new(55.0, 90.0), Point2D::new(8.0, 60.0),
            ]).unwrap();
            let moved_grid = BathymetryGrid { origin_x: g.origin_x + dx, origin_y: g.origin_y + dy, ..g.clone() };
            let moved_poly = MissionPolygon::new(
                poly.vertices().iter().map(|p| Point2D::new(p.x + dx, p.y + dy)).collect(),
            ).unwrap();
            let a = volume_under_polygon(&g, &poly);
            let b = volume_under_polygon(&moved_grid, &moved_poly);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
