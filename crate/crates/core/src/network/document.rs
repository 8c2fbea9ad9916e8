//! JSON network documents.
//!
//! Top-level keys: `params`, `junctions`, `pipes`, `compressors`, `storages`,
//! `receipts`, `deliveries`, `time_series`. Quantities are SI numbers, or
//! `{"value": x, "unit": u}` objects for pressures (`Pa`, `kPa`, `MPa`,
//! `bar`, `psi`) and lengths (`m`, `km`). Time-varying quantities are a
//! number, an inline `[[hour, value], ...]` list, the name of an entry of
//! `time_series`, or `{"series": name, "unit": u}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{
    validate, Compressor, CompressorKind, GasProperties, Junction, NetworkModel, Params, Pipe, Profile, Storage,
    Transfer, TransferDirection,
};
use crate::error::{Error, Result};
use crate::nondim::PA_PER_PSI;

const TOP_LEVEL_KEYS: [&str; 8] = [
    "params",
    "junctions",
    "pipes",
    "compressors",
    "storages",
    "receipts",
    "deliveries",
    "time_series",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Pressure,
    Length,
    MassFlow,
    Mass,
    Volume,
    Dimensionless,
    Price,
}

impl Dim {
    fn unit_factor(self, unit: &str) -> Option<f64> {
        let u = unit.trim().to_ascii_lowercase();
        match self {
            Dim::Pressure => match u.as_str() {
                "pa" => Some(1.0),
                "kpa" => Some(1e3),
                "mpa" => Some(1e6),
                "bar" => Some(1e5),
                "psi" => Some(PA_PER_PSI),
                _ => None,
            },
            Dim::Length => match u.as_str() {
                "m" => Some(1.0),
                "km" => Some(1e3),
                _ => None,
            },
            Dim::MassFlow => (u == "kg/s").then_some(1.0),
            Dim::Mass => (u == "kg").then_some(1.0),
            Dim::Volume => (u == "m3" || u == "m^3").then_some(1.0),
            Dim::Dimensionless => (u == "1" || u.is_empty()).then_some(1.0),
            Dim::Price => (u == "$/(kg/s)h" || u == "usd").then_some(1.0),
        }
    }
}

/// Parses a network document and checks every model invariant.
pub fn parse_network(text: &str) -> Result<NetworkModel> {
    let model = parse_network_unchecked(text)?;
    if let Some(f) = validate(&model).into_iter().next() {
        return Err(Error::field(f.entity, f.id, f.field, f.message));
    }
    Ok(model)
}

pub fn read_network(path: impl AsRef<Path>) -> Result<NetworkModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_network(&text)
}

pub fn write_network(model: &NetworkModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_document(model))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses a document, resolving references and units, without running
/// [`validate`].
pub fn parse_network_unchecked(text: &str) -> Result<NetworkModel> {
    let root: Value = serde_json::from_str(text)?;
    let root = root
        .as_object()
        .ok_or_else(|| Error::Format("network document must be a JSON object".into()))?;
    for key in root.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            return Err(Error::field("document", "", key.clone(), "unknown top-level key"));
        }
    }

    let series = parse_series(root.get("time_series"))?;
    let params = parse_params(root.get("params"))?;

    let junctions = entities(root, "junctions", "junction")?
        .into_iter()
        .map(|e| {
            e.check_keys(&["id", "pressure_min", "pressure_max", "slack_pressure"])?;
            Ok(Junction {
                pressure_min: e.quantity("pressure_min", Dim::Pressure)?,
                pressure_max: e.quantity("pressure_max", Dim::Pressure)?,
                slack_pressure: e.opt_profile("slack_pressure", Dim::Pressure, &series)?,
                id: e.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut seen = BTreeMap::new();
    for (k, j) in junctions.iter().enumerate() {
        if seen.insert(j.id.clone(), k).is_some() {
            return Err(Error::field("junction", j.id.clone(), "id", "duplicate junction id"));
        }
    }
    let lookup = |e: &Entity, field: &'static str| -> Result<usize> {
        let name = e.string(field)?;
        seen.get(&name).copied().ok_or(Error::Reference {
            entity: e.kind,
            id: e.id.clone(),
            field,
            target: "junction",
            name,
        })
    };

    let pipes = entities(root, "pipes", "pipe")?
        .into_iter()
        .map(|e| {
            e.check_keys(&["id", "from", "to", "length", "diameter", "friction_factor", "inclination"])?;
            Ok(Pipe {
                from: lookup(&e, "from")?,
                to: lookup(&e, "to")?,
                length: e.quantity("length", Dim::Length)?,
                diameter: e.quantity("diameter", Dim::Length)?,
                friction: e.quantity("friction_factor", Dim::Dimensionless)?,
                inclination: e.opt_quantity("inclination", Dim::Dimensionless)?.unwrap_or(0.0),
                id: e.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let compressors = entities(root, "compressors", "compressor")?
        .into_iter()
        .map(|e| {
            e.check_keys(&[
                "id",
                "from",
                "to",
                "kind",
                "ratio_max",
                "flow_max",
                "power_max",
                "gamma",
                "gas_gravity",
                "temperature",
            ])?;
            let kind = match e.opt_string("kind")?.as_deref() {
                None | Some("unidirectional") => CompressorKind::Unidirectional,
                Some("bidirectional") => CompressorKind::Bidirectional,
                Some(other) => {
                    return Err(Error::field("compressor", e.id.clone(), "kind", format!("unknown kind `{other}`")))
                }
            };
            Ok(Compressor {
                from: lookup(&e, "from")?,
                to: lookup(&e, "to")?,
                kind,
                ratio_max: e.quantity("ratio_max", Dim::Dimensionless)?,
                flow_max: e.quantity("flow_max", Dim::MassFlow)?,
                power_max: e.opt_quantity("power_max", Dim::Dimensionless)?.unwrap_or(1e7),
                gas: GasProperties {
                    gamma: e.opt_quantity("gamma", Dim::Dimensionless)?.unwrap_or(params.gas.gamma),
                    gravity: e.opt_quantity("gas_gravity", Dim::Dimensionless)?.unwrap_or(params.gas.gravity),
                    temperature: e.opt_quantity("temperature", Dim::Dimensionless)?.unwrap_or(params.gas.temperature),
                },
                id: e.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let storages = entities(root, "storages", "storage")?
        .into_iter()
        .map(|e| {
            e.check_keys(&[
                "id",
                "junction",
                "reservoir_volume",
                "mass_min",
                "mass_max",
                "initial_mass",
                "well_length",
                "well_diameter",
                "well_friction_factor",
                "regulator_ratio_max",
                "flow_max",
                "wellhead_pressure_min",
                "wellhead_pressure_max",
            ])?;
            Ok(Storage {
                junction: lookup(&e, "junction")?,
                volume: e.quantity("reservoir_volume", Dim::Volume)?,
                mass_min: e.quantity("mass_min", Dim::Mass)?,
                mass_max: e.quantity("mass_max", Dim::Mass)?,
                initial_mass: e.quantity("initial_mass", Dim::Mass)?,
                well_length: e.quantity("well_length", Dim::Length)?,
                well_diameter: e.quantity("well_diameter", Dim::Length)?,
                well_friction: e.quantity("well_friction_factor", Dim::Dimensionless)?,
                regulator_ratio_max: e.quantity("regulator_ratio_max", Dim::Dimensionless)?,
                flow_max: e.quantity("flow_max", Dim::MassFlow)?,
                wellhead_pressure_min: e.quantity("wellhead_pressure_min", Dim::Pressure)?,
                wellhead_pressure_max: e.quantity("wellhead_pressure_max", Dim::Pressure)?,
                id: e.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let transfers = |key: &str, entity: &'static str, direction: TransferDirection| -> Result<Vec<Transfer>> {
        entities(root, key, entity)?
            .into_iter()
            .map(|e| {
                e.check_keys(&["id", "junction", "flow_max", "flow_min", "price"])?;
                Ok(Transfer {
                    junction: lookup(&e, "junction")?,
                    direction,
                    flow_max: e.profile("flow_max", Dim::MassFlow, &series)?,
                    flow_min: e.opt_profile("flow_min", Dim::MassFlow, &series)?,
                    price: e.opt_profile("price", Dim::Price, &series)?.unwrap_or(Profile::constant(0.0)),
                    id: e.id,
                })
            })
            .collect()
    };

    Ok(NetworkModel {
        receipts: transfers("receipts", "receipt", TransferDirection::Intake)?,
        deliveries: transfers("deliveries", "delivery", TransferDirection::Offtake)?,
        params,
        junctions,
        pipes,
        compressors,
        storages,
    })
}

fn parse_series(v: Option<&Value>) -> Result<BTreeMap<String, Profile>> {
    let mut out = BTreeMap::new();
    let Some(v) = v else { return Ok(out) };
    let obj = v
        .as_object()
        .ok_or_else(|| Error::field("time_series", "", "time_series", "expected an object"))?;
    for (name, pts) in obj {
        out.insert(name.clone(), parse_points(pts).map_err(|m| Error::field("time_series", name.clone(), "points", m))?);
    }
    Ok(out)
}

fn parse_points(v: &Value) -> std::result::Result<Profile, String> {
    let pts: Vec<(f64, f64)> =
        serde_json::from_value(v.clone()).map_err(|e| format!("expected [[hour, value], ...]: {e}"))?;
    if pts.is_empty() {
        return Err("time series is empty".into());
    }
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err("non-finite breakpoint".into());
    }
    Ok(Profile::new(pts))
}

fn parse_params(v: Option<&Value>) -> Result<Params> {
    let mut p = Params::default();
    let Some(v) = v else { return Ok(p) };
    let e = Entity::new("params", v, "params".into())?;
    e.check_keys(&[
        "horizon_hours",
        "sound_speed",
        "nominal_pressure",
        "nominal_length",
        "gamma",
        "gas_gravity",
        "temperature",
    ])?;
    if let Some(x) = e.opt_quantity("horizon_hours", Dim::Dimensionless)? {
        p.horizon_hours = x;
    }
    if let Some(x) = e.opt_quantity("sound_speed", Dim::Dimensionless)? {
        p.sound_speed = x;
    }
    if let Some(x) = e.opt_quantity("nominal_pressure", Dim::Pressure)? {
        p.nominal_pressure = x;
    }
    if let Some(x) = e.opt_quantity("nominal_length", Dim::Length)? {
        p.nominal_length = x;
    }
    if let Some(x) = e.opt_quantity("gamma", Dim::Dimensionless)? {
        p.gas.gamma = x;
    }
    if let Some(x) = e.opt_quantity("gas_gravity", Dim::Dimensionless)? {
        p.gas.gravity = x;
    }
    if let Some(x) = e.opt_quantity("temperature", Dim::Dimensionless)? {
        p.gas.temperature = x;
    }
    for (name, x) in [
        ("horizon_hours", p.horizon_hours),
        ("sound_speed", p.sound_speed),
        ("nominal_pressure", p.nominal_pressure),
        ("nominal_length", p.nominal_length),
    ] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::field("params", "params", name, "must be positive"));
        }
    }
    Ok(p)
}

struct Entity<'a> {
    kind: &'static str,
    id: String,
    obj: &'a Map<String, Value>,
}

fn entities<'a>(root: &'a Map<String, Value>, key: &str, kind: &'static str) -> Result<Vec<Entity<'a>>> {
    let Some(v) = root.get(key) else {
        return Ok(Vec::new());
    };
    let arr = v
        .as_array()
        .ok_or_else(|| Error::field("document", "", key.to_string(), "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, item)| {
            let id = match item.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                Some(_) => return Err(Error::field(kind, format!("#{k}"), "id", "expected a string")),
                None => return Err(Error::field(kind, format!("#{k}"), "id", "missing field")),
            };
            Entity::new(kind, item, id)
        })
        .collect()
}

impl<'a> Entity<'a> {
    fn new(kind: &'static str, v: &'a Value, id: String) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::field(kind, id.clone(), "", "expected an object"))?;
        Ok(Entity { kind, id, obj })
    }

    fn err(&self, field: &str, message: impl Into<String>) -> Error {
        Error::field(self.kind, self.id.clone(), field.to_string(), message)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.err(k, "unknown field")),
            None => Ok(()),
        }
    }

    fn string(&self, field: &str) -> Result<String> {
        self.opt_string(field)?.ok_or_else(|| self.err(field, "missing field"))
    }

    fn opt_string(&self, field: &str) -> Result<Option<String>> {
        match self.obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(_) => Err(self.err(field, "expected a string")),
        }
    }

    fn quantity(&self, field: &str, dim: Dim) -> Result<f64> {
        self.opt_quantity(field, dim)?.ok_or_else(|| self.err(field, "missing field"))
    }

    fn opt_quantity(&self, field: &str, dim: Dim) -> Result<Option<f64>> {
        let v = match self.obj.get(field) {
            None | Some(Value::Null) => return Ok(None),
            Some(v) => v,
        };
        let x = match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| self.err(field, "not a number"))?,
            Value::Object(o) => {
                let value = o
                    .get("value")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| self.err(field, "tagged quantity needs a numeric `value`"))?;
                value * self.unit(field, o, dim)?
            }
            _ => return Err(self.err(field, "expected a number or {value, unit}")),
        };
        if !x.is_finite() {
            return Err(self.err(field, "non-finite value"));
        }
        Ok(Some(x))
    }

    fn unit(&self, field: &str, o: &Map<String, Value>, dim: Dim) -> Result<f64> {
        match o.get("unit") {
            None => Ok(1.0),
            Some(Value::String(u)) => dim
                .unit_factor(u)
                .ok_or_else(|| self.err(field, format!("inconsistent unit `{u}` for a {dim:?} quantity"))),
            Some(_) => Err(self.err(field, "unit must be a string")),
        }
    }

    fn profile(&self, field: &str, dim: Dim, series: &BTreeMap<String, Profile>) -> Result<Profile> {
        self.opt_profile(field, dim, series)?
            .ok_or_else(|| self.err(field, "missing field"))
    }

    fn opt_profile(&self, field: &str, dim: Dim, series: &BTreeMap<String, Profile>) -> Result<Option<Profile>> {
        let v = match self.obj.get(field) {
            None | Some(Value::Null) => return Ok(None),
            Some(v) => v,
        };
        let named = |name: &str| {
            series.get(name).cloned().ok_or_else(|| Error::Reference {
                entity: self.kind,
                id: self.id.clone(),
                field: leak(field),
                target: "time series",
                name: name.to_string(),
            })
        };
        let p = match v {
            Value::Number(_) => Profile::constant(self.quantity(field, dim)?),
            Value::String(name) => named(name)?,
            Value::Array(_) => parse_points(v).map_err(|m| self.err(field, m))?,
            Value::Object(o) => {
                let factor = self.unit(field, o, dim)?;
                if let Some(name) = o.get("series").and_then(Value::as_str) {
                    named(name)?.map(|x| x * factor)
                } else {
                    Profile::constant(self.quantity(field, dim)?)
                }
            }
            _ => return Err(self.err(field, "expected a number, series name or breakpoint list")),
        };
        Ok(Some(p))
    }
}

// Field names come from the fixed key lists above; leaking them keeps
// `Error::Reference` free of lifetimes.
fn leak(s: &str) -> &'static str {
    Box::leak(s.to_string().into_boxed_str())
}

/// Serializes a model back to document form (SI units throughout).
pub fn to_document(model: &NetworkModel) -> Value {
    let mut series = Map::new();
    let mut profile = |p: &Profile, name: String| -> Value {
        if p.points().len() == 1 && p.points()[0].0 == 0.0 {
            json!(p.points()[0].1)
        } else {
            series.insert(name.clone(), json!(p.points()));
            json!(name)
        }
    };
    let jid = |k: usize| model.junctions[k].id.clone();

    let junctions: Vec<Value> = model
        .junctions
        .iter()
        .map(|j| {
            let mut o = json!({
                "id": j.id,
                "pressure_min": j.pressure_min,
                "pressure_max": j.pressure_max,
            });
            if let Some(s) = &j.slack_pressure {
                o["slack_pressure"] = profile(s, format!("junction_{}_slack_pressure", j.id));
            }
            o
        })
        .collect();
    let pipes: Vec<Value> = model
        .pipes
        .iter()
        .map(|p| {
            json!({
                "id": p.id,
                "from": jid(p.from),
                "to": jid(p.to),
                "length": p.length,
                "diameter": p.diameter,
                "friction_factor": p.friction,
                "inclination": p.inclination,
            })
        })
        .collect();
    let compressors: Vec<Value> = model
        .compressors
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "from": jid(c.from),
                "to": jid(c.to),
                "kind": match c.kind {
                    CompressorKind::Unidirectional => "unidirectional",
                    CompressorKind::Bidirectional => "bidirectional",
                },
                "ratio_max": c.ratio_max,
                "flow_max": c.flow_max,
                "power_max": c.power_max,
                "gamma": c.gas.gamma,
                "gas_gravity": c.gas.gravity,
                "temperature": c.gas.temperature,
            })
        })
        .collect();
    let storages: Vec<Value> = model
        .storages
        .iter()
        .map(|s| {
            json!({
                "id": s.id,
                "junction": jid(s.junction),
                "reservoir_volume": s.volume,
                "mass_min": s.mass_min,
                "mass_max": s.mass_max,
                "initial_mass": s.initial_mass,
                "well_length": s.well_length,
                "well_diameter": s.well_diameter,
                "well_friction_factor": s.well_friction,
                "regulator_ratio_max": s.regulator_ratio_max,
                "flow_max": s.flow_max,
                "wellhead_pressure_min": s.wellhead_pressure_min,
                "wellhead_pressure_max": s.wellhead_pressure_max,
            })
        })
        .collect();
    let mut transfer = |t: &Transfer, prefix: &str| -> Value {
        let mut o = json!({
            "id": t.id,
            "junction": jid(t.junction),
            "flow_max": profile(&t.flow_max, format!("{prefix}_{}_flow_max", t.id)),
            "price": profile(&t.price, format!("{prefix}_{}_price", t.id)),
        });
        if let Some(m) = &t.flow_min {
            o["flow_min"] = profile(m, format!("{prefix}_{}_flow_min", t.id));
        }
        o
    };
    let receipts: Vec<Value> = model.receipts.iter().map(|t| transfer(t, "receipt")).collect();
    let deliveries: Vec<Value> = model.deliveries.iter().map(|t| transfer(t, "delivery")).collect();

    let p = &model.params;
    json!({
        "params": {
            "horizon_hours": p.horizon_hours,
            "sound_speed": p.sound_speed,
            "nominal_pressure": p.nominal_pressure,
            "nominal_length": p.nominal_length,
            "gamma": p.gas.gamma,
            "gas_gravity": p.gas.gravity,
            "temperature": p.gas.temperature,
        },
        "junctions": junctions,
        "pipes": pipes,
        "compressors": compressors,
        "storages": storages,
        "receipts": receipts,
        "deliveries": deliveries,
        "time_series": series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const MINIMAL: &str = r#"{
        "junctions": [
            {"id": "a", "pressure_min": 3e6, "pressure_max": 6e6, "slack_pressure": {"value": 4, "unit": "MPa"}},
            {"id": "b", "pressure_min": 3e6, "pressure_max": 6e6}
        ],
        "pipes": [{"id": "p", "from": "a", "to": "b", "length": 10000, "diameter": 0.6, "friction_factor": 0.01}]
    }"#;

    #[test]
    fn minimal_document() {
        let m = parse_network(MINIMAL).unwrap();
        assert_eq!(m.junctions.len(), 2);
        assert_eq!(m.pipes.len(), 1);
        assert_eq!(m.junctions[0].slack_pressure.as_ref().unwrap().value_at(3.0), 4e6);
        assert_eq!(m.pipes[0].inclination, 0.0);
        assert_eq!(m.params.horizon_hours, 24.0);
    }

    #[test]
    fn six_junction_fixture() {
        let m = fixtures::six_junction();
        assert_eq!(m.junctions.len(), 6);
        assert_eq!(m.pipes.len(), 4);
        let ld: Vec<(f64, f64)> = m.pipes.iter().map(|p| (p.length / 1e3, p.diameter)).collect();
        assert_eq!(ld, vec![(50.0, 0.6), (80.0, 0.6), (80.0, 0.6), (80.0, 0.3)]);
        assert_eq!(m.compressors.len(), 2);
        assert_eq!(m.receipts.len(), 1);
        let at: Vec<&str> = m.deliveries.iter().map(|d| m.junctions[d.junction].id.as_str()).collect();
        assert_eq!(at, vec!["2", "3", "4", "3", "4"]);
    }

    #[test]
    fn unknown_junction_reference_names_pipe() {
        let doc = MINIMAL.replace(r#""to": "b""#, r#""to": "zz""#);
        match parse_network(&doc) {
            Err(Error::Reference { entity, id, field, name, .. }) => {
                assert_eq!((entity, id.as_str(), field, name.as_str()), ("pipe", "p", "to", "zz"));
            }
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_reports_entity_and_field() {
        let doc = MINIMAL.replace(r#""diameter": 0.6, "#, "");
        let err = parse_network(&doc).unwrap_err();
        match err {
            Error::Field { entity, id, field, .. } => assert_eq!((entity, id.as_str(), field.as_str()), ("pipe", "p", "diameter")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_unit_rejected() {
        let doc = MINIMAL.replace(r#""length": 10000"#, r#""length": {"value": 10, "unit": "psi"}"#);
        let err = parse_network(&doc).unwrap_err().to_string();
        assert!(err.contains("inconsistent unit"), "{err}");
        let doc = MINIMAL.replace(r#""length": 10000"#, r#""length": {"value": 10, "unit": "km"}"#);
        assert_eq!(parse_network(&doc).unwrap().pipes[0].length, 10_000.0);
    }

    #[test]
    fn psi_pressures_are_converted() {
        let doc = MINIMAL.replace(r#""pressure_min": 3e6, "pressure_max": 6e6}"#, r#""pressure_min": {"value": 250, "unit": "psi"}, "pressure_max": 6e6}"#);
        let m = parse_network(&doc).unwrap();
        assert_eq!(m.junctions[1].pressure_min, 250.0 * 6894.757);
    }

    #[test]
    fn unknown_keys_and_malformed_json() {
        assert!(parse_network(r#"{"junctionz": []}"#).is_err());
        assert!(matches!(parse_network("{"), Err(Error::Document(_))));
        let doc = MINIMAL.replace(r#""friction_factor": 0.01"#, r#""friction_factor": 0.01, "roughness": 1"#);
        assert!(parse_network(&doc).unwrap_err().to_string().contains("roughness"));
    }

    #[test]
    fn round_trip_fixtures() {
        for m in [fixtures::six_junction(), fixtures::six_junction_storage(), fixtures::six_junction_storage_min_intake()] {
            let text = serde_json::to_string(&to_document(&m)).unwrap();
            assert_eq!(parse_network(&text).unwrap(), m);
        }
    }
}
