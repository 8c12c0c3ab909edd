//! JSON input and output.
//!
//! Floats are written with 17 significant digits so that a value read back is
//! bit-identical, and output for equal inputs is byte-identical.

use std::io;

use nalgebra::DVector;
use serde::ser::Serialize;
use serde_json::ser::Formatter;

use crate::bodies::BodyRecipe;
use crate::polytope::{Point, Polytope};
use crate::Result;

/// Writes every float in scientific notation with 17 significant digits.
#[derive(Debug, Clone, Default)]
pub struct ExactFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for ExactFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// `{:.16e}` with the exponent normalized, and `0` for zero; non-finite
/// values become `null` as in plain serde_json.
pub fn format_f64(value: f64) -> String {
    if !value.is_finite() {
        return "null".into();
    }
    if value == 0.0 {
        return "0.0".into();
    }
    format!("{value:.16e}")
}

/// Pretty JSON with [`ExactFloatFormatter`].
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Vertex list of a body as written by `mbill body`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BodyJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<FacetJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<BodyRecipe>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FacetJson {
    pub normal: Vec<f64>,
    pub offset: f64,
    #[serde(default)]
    pub vertices: Vec<usize>,
}

impl BodyJson {
    pub fn from_polytope(p: &Polytope, recipe: Option<BodyRecipe>) -> Self {
        Self {
            dim: p.dim(),
            vertices: p.vertices().iter().map(|v| v.as_slice().to_vec()).collect(),
            facets: Some(
                p.facets()
                    .iter()
                    .map(|f| FacetJson {
                        normal: f.normal.as_slice().to_vec(),
                        offset: f.offset,
                        vertices: f.vertices.clone(),
                    })
                    .collect(),
            ),
            recipe,
        }
    }

    /// Rebuilds the body from its vertices, or failing that from its facets
    /// or recipe.
    pub fn to_polytope(&self) -> Result<Polytope> {
        if self.vertices.is_empty() {
            if let Some(facets) = &self.facets {
                let normals: Vec<Point> = facets.iter().map(|f| DVector::from_column_slice(&f.normal)).collect();
                let offsets: Vec<f64> = facets.iter().map(|f| f.offset).collect();
                return Polytope::from_halfspaces(self.dim, &normals, &offsets);
            }
            if let Some(r) = &self.recipe {
                return r.build();
            }
        }
        let pts: Vec<Point> = self
            .vertices
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        Polytope::from_vertices(self.dim, &pts)
    }
}

/// Parses either a [`BodyJson`] document or a bare [`BodyRecipe`].
pub fn parse_body(text: &str) -> Result<Polytope> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("kind").is_some() {
        let recipe: BodyRecipe = serde_json::from_value(value)?;
        return recipe.build();
    }
    let body: BodyJson = serde_json::from_value(value)?;
    body.to_polytope()
}

/// Serde adapter writing `Vec<Point>` as nested arrays.
pub(crate) mod points_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Point>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::permutohedron;

    #[test]
    fn floats_round_trip_bit_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 9.0, 1e22, f64::MIN_POSITIVE, 0.0] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_f64(9.0), "9.0000000000000000e0");
    }

    #[test]
    fn body_json_round_trip() {
        let p = permutohedron(3).unwrap();
        let text = to_json_string(&BodyJson::from_polytope(&p, None)).unwrap();
        let q = parse_body(&text).unwrap();
        assert_eq!(p.vertices(), q.vertices());
        let r = parse_body(r#"{"kind":"regular_simplex","dim":2,"normalization":"unit_circumradius"}"#)
            .unwrap();
        assert_eq!(r.vertices().len(), 3);
    }

    #[test]
    fn facets_alone_rebuild_the_body() {
        let text = r#"{"dim":2,"facets":[
            {"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":1},
            {"normal":[0,1],"offset":2},{"normal":[0,-1],"offset":0}]}"#;
        let p = parse_body(text).unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert!((p.volume() - 4.0).abs() < 1e-12);
    }
}
