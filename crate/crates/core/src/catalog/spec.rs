//! JSON surface description.

use serde::{Deserialize, Serialize};

use super::{GlueMap, Identification, Surface};
use crate::error::{Error, Result};
use crate::frames::{Chart, Edge, FramePair, Ownership};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(rename = "e_E", default)]
    pub e_e: Option<i64>,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub identifications: Vec<IdentificationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangency_count: Option<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    /// Name of a full-coverage chart used for topology; it may also be
    /// given in `extra_charts` so it takes no part in integration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology_chart: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_charts: Vec<ChartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub domain: [f64; 4],
    #[serde(rename = "X")]
    pub x: [String; 2],
    #[serde(rename = "Y")]
    pub y: [String; 2],
    pub orientation_sign: i8,
    /// `[cx, cy, r]`: only this disk of the chart counts for integration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owned_disk: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSpec {
    pub chart: String,
    pub edge: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_chart: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_edge: Option<String>,
    pub map: String,
}

fn edge(name: &str) -> Result<Edge> {
    Edge::from_name(name).ok_or_else(|| {
        Error::Schema(format!("unknown edge `{name}` (expected x0, x1, y0 or y1)"))
    })
}

impl ChartSpec {
    fn build(&self) -> Result<Chart> {
        let frame = FramePair::parse(
            [&self.x[0], &self.x[1]],
            [&self.y[0], &self.y[1]],
            self.orientation_sign,
        )
        .map_err(|e| Error::Schema(format!("chart `{}`: {e}", self.name)))?;
        let mut chart = Chart::new(self.name.clone(), self.domain, frame)?;
        if let Some([cx, cy, r]) = self.owned_disk {
            if r <= 0.0 {
                return Err(Error::Schema(format!("chart `{}`: disk radius must be positive", self.name)));
            }
            chart.ownership = Ownership::Disk {
                center: [cx, cy],
                radius: r,
            };
        }
        Ok(chart)
    }

    fn from_chart(chart: &Chart) -> ChartSpec {
        let f = &chart.frame;
        ChartSpec {
            name: chart.name.clone(),
            domain: chart.domain,
            x: [f.x().0[0].to_string(), f.x().0[1].to_string()],
            y: [f.y().0[0].to_string(), f.y().0[1].to_string()],
            orientation_sign: f.orientation_sign(),
            owned_disk: match chart.ownership {
                Ownership::Domain => None,
                Ownership::Disk { center, radius } => Some([center[0], center[1], radius]),
            },
        }
    }
}

fn apply_identifications(charts: &mut [Chart], specs: &[IdentificationSpec]) -> Result<Vec<Identification>> {
    let mut out = Vec::new();
    for s in specs {
        let from = edge(&s.edge)?;
        let idx = charts
            .iter()
            .position(|c| c.name == s.chart)
            .ok_or_else(|| Error::Schema(format!("identification refers to unknown chart `{}`", s.chart)))?;
        match s.map.as_str() {
            "periodic" => {
                let to_chart = s.to_chart.clone().unwrap_or_else(|| s.chart.clone());
                let to_edge = match &s.to_edge {
                    Some(e) => edge(e)?,
                    None => from.opposite(),
                };
                if to_chart == s.chart {
                    if to_edge != from.opposite() {
                        return Err(Error::Schema(format!(
                            "periodic identification of `{}` must glue opposite edges",
                            s.chart
                        )));
                    }
                    let axis = matches!(from, Edge::Bottom | Edge::Top) as usize;
                    charts[idx].periodic[axis] = true;
                } else if !charts.iter().any(|c| c.name == to_chart) {
                    return Err(Error::Schema(format!("identification refers to unknown chart `{to_chart}`")));
                }
                out.push(Identification {
                    chart: s.chart.clone(),
                    edge: from,
                    to_chart,
                    to_edge,
                    map: GlueMap::Periodic,
                });
            }
            "collapse" => {
                charts[idx].collapsed.push(from);
                out.push(Identification {
                    chart: s.chart.clone(),
                    edge: from,
                    to_chart: s.chart.clone(),
                    to_edge: from,
                    map: GlueMap::Collapse,
                });
            }
            other => {
                return Err(Error::Schema(format!(
                    "unknown identification map `{other}` (expected periodic or collapse)"
                )))
            }
        }
    }
    Ok(out)
}

impl SurfaceSpec {
    pub fn from_json(text: &str) -> Result<SurfaceSpec> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn build(&self) -> Result<Surface> {
        if self.charts.is_empty() {
            return Err(Error::Schema("a surface needs at least one chart".into()));
        }
        let mut charts = self.charts.iter().map(ChartSpec::build).collect::<Result<Vec<_>>>()?;
        let mut extra = self.extra_charts.iter().map(ChartSpec::build).collect::<Result<Vec<_>>>()?;
        let n = charts.len();
        charts.append(&mut extra);
        let identifications = apply_identifications(&mut charts, &self.identifications)?;
        let extra = charts.split_off(n);
        let topology = match &self.topology_chart {
            None => None,
            Some(name) => Some(
                charts
                    .iter()
                    .chain(extra.iter())
                    .find(|c| &c.name == name)
                    .cloned()
                    .ok_or_else(|| Error::Schema(format!("unknown topology chart `{name}`")))?,
            ),
        };
        Ok(Surface {
            name: self.name.clone(),
            charts,
            identifications,
            e_e: self.e_e,
            tangency_count: self.tangency_count,
            notes: self.notes.clone(),
            topology,
            grid: self.grid.unwrap_or(128),
        })
    }

    pub fn from_surface(surface: &Surface) -> SurfaceSpec {
        let mut extra_charts = Vec::new();
        let mut identifications: Vec<IdentificationSpec> = surface
            .identifications
            .iter()
            .map(|i| IdentificationSpec {
                chart: i.chart.clone(),
                edge: i.edge.name().into(),
                to_chart: Some(i.to_chart.clone()),
                to_edge: Some(i.to_edge.name().into()),
                map: match i.map {
                    GlueMap::Periodic => "periodic".into(),
                    GlueMap::Collapse => "collapse".into(),
                },
            })
            .collect();
        let mut topology_chart = None;
        if let Some(t) = &surface.topology {
            topology_chart = Some(t.name.clone());
            if surface.chart(&t.name).is_none() {
                extra_charts.push(ChartSpec::from_chart(t));
                for (axis, (lo, hi)) in [(0, ("x0", "x1")), (1, ("y0", "y1"))] {
                    if t.periodic[axis] {
                        identifications.push(IdentificationSpec {
                            chart: t.name.clone(),
                            edge: lo.into(),
                            to_chart: Some(t.name.clone()),
                            to_edge: Some(hi.into()),
                            map: "periodic".into(),
                        });
                    }
                }
                for e in &t.collapsed {
                    identifications.push(IdentificationSpec {
                        chart: t.name.clone(),
                        edge: e.name().into(),
                        to_chart: None,
                        to_edge: None,
                        map: "collapse".into(),
                    });
                }
            }
        }
        SurfaceSpec {
            name: surface.name.clone(),
            e_e: surface.e_e,
            charts: surface.charts.iter().map(ChartSpec::from_chart).collect(),
            identifications,
            tangency_count: surface.tangency_count,
            notes: surface.notes.clone(),
            topology_chart,
            extra_charts,
            grid: Some(surface.grid),
        }
    }
}

/// Reads a surface from a JSON file.
pub fn load(path: &std::path::Path) -> Result<Surface> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    SurfaceSpec::from_json(&text)?.build()
}
