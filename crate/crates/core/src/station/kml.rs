use std::fmt::Write as _;

use super::log::FlightLog;
use crate::sensors::GeoOrigin;

/// A trail point: longitude, latitude (degrees) and altitude above the datum (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrailPoint {
    pub lon: f64,
    pub lat: f64,
    pub alt: f64,
}

/// Reconstruct the kite track from line length and altitude, assuming a
/// straight tether downwind of the winch at `origin`.
pub fn trail_from_log(log: &FlightLog, origin: &GeoOrigin) -> Vec<TrailPoint> {
    log.records
        .iter()
        .map(|r| {
            let alt = r.alt_m.max(0.0);
            let horizontal = (r.line_m * r.line_m - alt * alt).max(0.0).sqrt();
            let (lat, lon) = origin.project(horizontal);
            TrailPoint {
                lon,
                lat,
                alt: origin.elevation_m + alt,
            }
        })
        .collect()
}

/// KML document with one line-string placemark. Consecutive duplicate
/// points are collapsed.
pub fn kml_document(name: &str, points: &[TrailPoint]) -> String {
    let mut coords = String::new();
    let mut prev: Option<String> = None;
    for p in points {
        let c = format!("{:.7},{:.7},{:.2}", p.lon, p.lat, p.alt);
        if prev.as_ref() != Some(&c) {
            writeln!(coords, "          {c}").unwrap();
            prev = Some(c);
        }
    }
    let name = name.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<kml xmlns="http://www.opengis.net/kml/2.2">
  <Document>
    <name>{name}</name>
    <Placemark>
      <name>{name}</name>
      <LineString>
        <altitudeMode>absolute</altitudeMode>
        <coordinates>
{coords}        </coordinates>
      </LineString>
    </Placemark>
  </Document>
</kml>
"#
    )
}

pub fn export_kml(log: &FlightLog, origin: &GeoOrigin) -> String {
    kml_document("flight trail", &trail_from_log(log, origin))
}

/// Coordinates listed in a document produced by [`kml_document`].
pub fn kml_coordinates(doc: &str) -> Vec<TrailPoint> {
    let Some(start) = doc.find("<coordinates>") else {
        return Vec::new();
    };
    let Some(end) = doc[start..].find("</coordinates>") else {
        return Vec::new();
    };
    doc[start + "<coordinates>".len()..start + end]
        .split_whitespace()
        .filter_map(|c| {
            let mut it = c.split(',').map(|v| v.parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(lon)), Some(Ok(lat)), Some(Ok(alt))) => Some(TrailPoint { lon, lat, alt }),
                _ => None,
            }
        })
        .collect()
}
