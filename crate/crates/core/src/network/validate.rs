use super::{CompressorKind, NetworkModel, Profile};

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub entity: &'static str,
    pub id: String,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} `{}`: field `{}`: {}", self.entity, self.id, self.field, self.message)
    }
}

struct Findings(Vec<Finding>);

impl Findings {
    fn push(&mut self, entity: &'static str, id: &str, field: &str, message: impl Into<String>) {
        self.0.push(Finding {
            entity,
            id: id.to_string(),
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn positive(&mut self, entity: &'static str, id: &str, field: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(entity, id, field, format!("must be positive, got {v}"));
        }
    }

    fn nonnegative_profile(&mut self, entity: &'static str, id: &str, field: &str, p: &Profile) {
        if !p.covers_start() {
            self.push(entity, id, field, "time series must start at hour 0");
        }
        if p.min() < 0.0 {
            self.push(entity, id, field, format!("must be non-negative, got {}", p.min()));
        }
    }
}

/// Checks every invariant of a parsed model. An empty list means the model
/// can be transcribed.
pub fn validate(model: &NetworkModel) -> Vec<Finding> {
    let mut out = Findings(Vec::new());
    let nj = model.junctions.len();

    if nj == 0 {
        out.push("network", "", "junctions", "network has no junctions");
    }
    for j in &model.junctions {
        out.positive("junction", &j.id, "pressure_min", j.pressure_min);
        if j.pressure_max < j.pressure_min {
            out.push(
                "junction",
                &j.id,
                "pressure_max",
                format!("pressure_max {} below pressure_min {}", j.pressure_max, j.pressure_min),
            );
        }
        if let Some(p) = &j.slack_pressure {
            if !p.covers_start() {
                out.push("junction", &j.id, "slack_pressure", "time series must start at hour 0");
            }
            if p.min() < j.pressure_min - 1e-6 || p.max() > j.pressure_max + 1e-6 {
                out.push("junction", &j.id, "slack_pressure", "slack pressure outside the junction bounds");
            }
        }
    }
    if nj > 0 && !model.junctions.iter().any(|j| j.is_slack()) {
        out.push("network", "", "junctions", "no slack junction");
    }

    for p in &model.pipes {
        out.positive("pipe", &p.id, "length", p.length);
        out.positive("pipe", &p.id, "diameter", p.diameter);
        out.positive("pipe", &p.id, "friction_factor", p.friction);
        if p.from == p.to {
            out.push("pipe", &p.id, "to", "pipe connects a junction to itself");
        }
        if !(p.inclination.abs() <= std::f64::consts::FRAC_PI_2) {
            out.push("pipe", &p.id, "inclination", "inclination must lie in [-pi/2, pi/2]");
        }
    }

    for c in &model.compressors {
        if c.from == c.to {
            out.push("compressor", &c.id, "to", "compressor connects a junction to itself");
        }
        if !(c.ratio_max >= 1.0) {
            out.push("compressor", &c.id, "ratio_max", "ratio_max must be at least 1");
        }
        out.positive("compressor", &c.id, "flow_max", c.flow_max);
        out.positive("compressor", &c.id, "power_max", c.power_max);
        out.positive("compressor", &c.id, "gamma", c.gas.gamma - 1.0);
        if c.kind == CompressorKind::Bidirectional && c.ratio_max < 1.0 {
            out.push("compressor", &c.id, "ratio_max", "bidirectional unit needs ratio_max >= 1");
        }
    }

    for s in &model.storages {
        out.positive("storage", &s.id, "reservoir_volume", s.volume);
        out.positive("storage", &s.id, "mass_min", s.mass_min);
        out.positive("storage", &s.id, "well_length", s.well_length);
        out.positive("storage", &s.id, "well_diameter", s.well_diameter);
        out.positive("storage", &s.id, "well_friction_factor", s.well_friction);
        out.positive("storage", &s.id, "flow_max", s.flow_max);
        if s.mass_max < s.mass_min {
            out.push("storage", &s.id, "mass_max", "mass_max below mass_min");
        }
        if s.initial_mass < s.mass_min || s.initial_mass > s.mass_max {
            out.push("storage", &s.id, "initial_mass", "initial mass outside [mass_min, mass_max]");
        }
        if !(s.regulator_ratio_max > 1.0) {
            out.push("storage", &s.id, "regulator_ratio_max", "must exceed 1");
        }
        out.positive("storage", &s.id, "wellhead_pressure_min", s.wellhead_pressure_min);
        if s.wellhead_pressure_max < s.wellhead_pressure_min {
            out.push("storage", &s.id, "wellhead_pressure_max", "below wellhead_pressure_min");
        }
    }

    for t in &model.receipts {
        check_transfer(&mut out, "receipt", t);
    }
    for t in &model.deliveries {
        check_transfer(&mut out, "delivery", t);
    }

    if nj > 0 {
        check_connected(model, &mut out);
    }
    out.0
}

fn check_transfer(out: &mut Findings, entity: &'static str, t: &super::Transfer) {
    out.nonnegative_profile(entity, &t.id, "flow_max", &t.flow_max);
    if let Some(m) = &t.flow_min {
        out.nonnegative_profile(entity, &t.id, "flow_min", m);
        let mut hours: Vec<f64> = m.points().iter().chain(t.flow_max.points()).map(|p| p.0).collect();
        hours.push(0.0);
        if hours.iter().any(|&h| m.value_at(h) > t.flow_max.value_at(h) + 1e-12) {
            out.push(entity, &t.id, "flow_min", "flow_min exceeds flow_max");
        }
    }
    if !t.price.covers_start() {
        out.push(entity, &t.id, "price", "time series must start at hour 0");
    }
}

fn check_connected(model: &NetworkModel, out: &mut Findings) {
    let nj = model.junctions.len();
    let mut parent: Vec<usize> = (0..nj).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let edges = model
        .pipes
        .iter()
        .map(|p| (p.from, p.to))
        .chain(model.compressors.iter().map(|c| (c.from, c.to)));
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    // Every connected component must contain a slack junction.
    let mut has_slack = vec![false; nj];
    for (k, j) in model.junctions.iter().enumerate() {
        if j.is_slack() {
            let r = find(&mut parent, k);
            has_slack[r] = true;
        }
    }
    if !has_slack.iter().any(|&s| s) {
        return;
    }
    for k in 0..nj {
        let r = find(&mut parent, k);
        if !has_slack[r] {
            out.push("junction", &model.junctions[k].id, "id", "junction is not connected to a slack junction");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_are_valid() {
        for m in [fixtures::six_junction(), fixtures::six_junction_storage(), fixtures::six_junction_storage_min_intake()] {
            assert_eq!(validate(&m), vec![]);
        }
    }

    #[test]
    fn missing_slack_is_reported() {
        let mut m = fixtures::six_junction();
        for j in &mut m.junctions {
            j.slack_pressure = None;
        }
        let f = validate(&m);
        assert!(f.iter().any(|f| f.message == "no slack junction"), "{f:?}");
    }

    #[test]
    fn inverted_bounds_and_negative_length() {
        let mut m = fixtures::six_junction();
        m.junctions[2].pressure_max = 1e6;
        m.pipes[0].length = -1.0;
        let f = validate(&m);
        assert!(f.iter().any(|f| f.entity == "junction" && f.field == "pressure_max"));
        assert!(f.iter().any(|f| f.entity == "pipe" && f.field == "length"));
    }

    #[test]
    fn disconnected_island_is_reported() {
        let mut m = fixtures::six_junction();
        let j = m.junctions[0].clone();
        m.junctions.push(super::super::Junction { id: "island".into(), slack_pressure: None, ..j });
        let f = validate(&m);
        assert!(f.iter().any(|f| f.id == "island"));
    }
}
