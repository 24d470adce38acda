use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use super::{IngestError, RawCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Generator,
    Load,
}

/// A node of the per-unit network. `g_shunt`/`b_shunt` include the folded
/// line-charging susceptance of every incident branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// Bus number as written in the case file.
    pub id: i64,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    pub g_shunt: f64,
    pub b_shunt: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

/// A Π-model line or transformer; `from`/`to` are positions in [`Network::buses`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_charge_send: f64,
    pub b_charge_recv: f64,
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
    /// Apparent-power rating in p.u.; `None` when unlimited.
    pub rate: Option<f64>,
    pub angle_min: f64,
    pub angle_max: f64,
}

impl Branch {
    /// Squared per-unit rating, the ampacity term of the reactive-loss upper bound.
    pub fn ampacity_sq(&self) -> Option<f64> {
        self.rate.map(|r| r * r)
    }

    /// `sin²` of the widest admissible angle difference.
    pub fn angle_cone_coeff(&self) -> f64 {
        let widest = self.angle_min.abs().max(self.angle_max.abs());
        widest.sin().powi(2)
    }

    /// Factor mapping the sending bus' squared voltage to the series element's.
    pub fn send_voltage_factor(&self) -> f64 {
        1.0 / (self.tap * self.tap)
    }
}

/// A dispatchable unit with cost `cost_a·p² + cost_b·p + cost_c` ($/h, p in p.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
}

impl Generator {
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_a * p * p + self.cost_b * p + self.cost_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl Network {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    /// Position of the slack bus. Panics only on a network that skipped [`Network::validate`].
    pub fn slack(&self) -> usize {
        self.buses.iter().position(|b| b.kind == BusKind::Slack).expect("validated network has a slack bus")
    }

    /// Check every structural and numeric invariant of the model.
    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |msg: String| Err(IngestError::InvalidData(msg));
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return invalid(format!("base MVA must be positive, got {}", self.base_mva));
        }
        if self.buses.is_empty() {
            return invalid("network has no buses".into());
        }
        match self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() {
            0 => return Err(IngestError::NoSlack),
            1 => {}
            n => return Err(IngestError::MultipleSlack(n)),
        }
        for b in &self.buses {
            if !(b.v_min > 0.0 && b.v_min <= b.v_max && b.v_max.is_finite()) {
                return invalid(format!("bus {}: voltage bounds [{}, {}]", b.id, b.v_min, b.v_max));
            }
            if !(b.theta_min <= 0.0 && 0.0 <= b.theta_max) {
                return invalid(format!("bus {}: angle bounds must contain 0", b.id));
            }
            if b.kind == BusKind::Slack && (b.theta_min != 0.0 || b.theta_max != 0.0) {
                return invalid(format!("slack bus {}: angle must be fixed at 0", b.id));
            }
        }
        let n = self.buses.len();
        for (l, br) in self.branches.iter().enumerate() {
            let label = || format!("branch {l} ({}-{})", self.buses[br.from].id, self.buses[br.to].id);
            if br.from >= n || br.to >= n || br.from == br.to {
                return invalid(format!("branch {l}: bad terminals {} -> {}", br.from, br.to));
            }
            if br.x == 0.0 || !br.x.is_finite() {
                return Err(IngestError::NonPositiveReactance {
                    branch: l,
                    from: self.buses[br.from].id,
                    to: self.buses[br.to].id,
                });
            }
            if !(br.r >= 0.0 && br.r.is_finite()) {
                return invalid(format!("{}: negative resistance {}", label(), br.r));
            }
            if !(br.tap > 0.0 && br.tap.is_finite()) {
                return invalid(format!("{}: tap ratio {}", label(), br.tap));
            }
            if !(-FRAC_PI_2 < br.angle_min && br.angle_min <= br.angle_max && br.angle_max < FRAC_PI_2) {
                return invalid(format!(
                    "{}: angle bounds [{}, {}] not inside (-pi/2, pi/2)",
                    label(),
                    br.angle_min,
                    br.angle_max
                ));
            }
            if br.rate.is_some_and(|r| !(r > 0.0)) {
                return invalid(format!("{}: rating must be positive", label()));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.bus >= n {
                return invalid(format!("generator {i}: unknown bus position {}", g.bus));
            }
            if !(g.p_min <= g.p_max && g.q_min <= g.q_max) {
                return invalid(format!("generator {i}: inverted bounds"));
            }
            if !(g.cost_a >= 0.0) {
                return invalid(format!("generator {i}: negative quadratic cost {}", g.cost_a));
            }
        }
        let unreached = n - reachable_from(self, 0).iter().filter(|&&r| r).count();
        if unreached > 0 {
            return Err(IngestError::IslandedNetwork { root: self.buses[0].id, unreached });
        }
        Ok(())
    }
}

fn reachable_from(net: &Network, root: usize) -> Vec<bool> {
    let n = net.buses.len();
    let mut adj = vec![Vec::new(); n];
    for br in &net.branches {
        adj[br.from].push(br.to);
        adj[br.to].push(br.from);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

mod col {
    pub const BUS_I: usize = 0;
    pub const BUS_TYPE: usize = 1;
    pub const PD: usize = 2;
    pub const QD: usize = 3;
    pub const GS: usize = 4;
    pub const BS: usize = 5;
    pub const VMAX: usize = 11;
    pub const VMIN: usize = 12;

    pub const GEN_BUS: usize = 0;
    pub const QMAX: usize = 3;
    pub const QMIN: usize = 4;
    pub const GEN_STATUS: usize = 7;
    pub const PMAX: usize = 8;
    pub const PMIN: usize = 9;

    pub const F_BUS: usize = 0;
    pub const T_BUS: usize = 1;
    pub const BR_R: usize = 2;
    pub const BR_X: usize = 3;
    pub const BR_B: usize = 4;
    pub const RATE_A: usize = 5;
    pub const TAP: usize = 8;
    pub const SHIFT: usize = 9;
    pub const BR_STATUS: usize = 10;
    pub const ANGMIN: usize = 11;
    pub const ANGMAX: usize = 12;
}

/// Default bound on a line's angle difference when the file gives none usable.
pub const DEFAULT_LINE_ANGLE: f64 = FRAC_PI_3;

/// How gencost coefficients are attached to per-unit dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostBasis {
    /// `c2·S², c1·S, c0`: the cost stays in $/h for dispatch in p.u.
    #[default]
    Rebased,
    /// `c2, c1, c0` as written, applied directly to p.u. dispatch.
    Native,
}

impl std::str::FromStr for CostBasis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rebased" => Ok(Self::Rebased),
            "native" => Ok(Self::Native),
            other => Err(format!("unknown cost basis `{other}` (expected rebased or native)")),
        }
    }
}

impl std::fmt::Display for CostBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rebased => "rebased",
            Self::Native => "native",
        })
    }
}

/// Convert a parsed case into the per-unit network model, costs rebased to $/h.
///
/// Out-of-service branches and generators are dropped, as are isolated
/// (type 4) buses together with anything attached to them.
pub fn to_network(raw: &RawCase) -> Result<Network, IngestError> {
    to_network_with(raw, CostBasis::Rebased)
}

pub fn to_network_with(raw: &RawCase, basis: CostBasis) -> Result<Network, IngestError> {
    use col::*;
    let base = raw.base_mva;
    if !(base.is_finite() && base > 0.0) {
        return Err(IngestError::InvalidData(format!("base MVA must be positive, got {base}")));
    }
    let cost_scale = match basis {
        CostBasis::Rebased => base,
        CostBasis::Native => 1.0,
    };

    let mut position: HashMap<i64, usize> = HashMap::new();
    let mut buses = Vec::with_capacity(raw.bus_rows.len());
    for row in &raw.bus_rows {
        let id = row[BUS_I] as i64;
        let kind = match row[BUS_TYPE] as i64 {
            3 => BusKind::Slack,
            2 => BusKind::Generator,
            1 => BusKind::Load,
            4 => continue,
            t => return Err(IngestError::InvalidData(format!("bus {id}: unknown type {t}"))),
        };
        if position.insert(id, buses.len()).is_some() {
            return Err(IngestError::InvalidData(format!("duplicate bus id {id}")));
        }
        let (theta_min, theta_max) = if kind == BusKind::Slack { (0.0, 0.0) } else { (-PI, PI) };
        buses.push(Bus {
            id,
            kind,
            p_load: row[PD] / base,
            q_load: row[QD] / base,
            g_shunt: row[GS] / base,
            b_shunt: row[BS] / base,
            v_min: row[VMIN],
            v_max: row[VMAX],
            theta_min,
            theta_max,
        });
    }

    let mut branches = Vec::new();
    for (i, row) in raw.branch_rows.iter().enumerate() {
        if row[BR_STATUS] <= 0.0 {
            continue;
        }
        let ends = (position.get(&(row[F_BUS] as i64)), position.get(&(row[T_BUS] as i64)));
        let (Some(&from), Some(&to)) = ends else {
            continue;
        };
        let x = row[BR_X];
        if x == 0.0 {
            return Err(IngestError::NonPositiveReactance {
                branch: i,
                from: row[F_BUS] as i64,
                to: row[T_BUS] as i64,
            });
        }
        let tap = if row[TAP] == 0.0 { 1.0 } else { row[TAP] };
        let (angle_min, angle_max) = line_angle_bounds(row[ANGMIN], row[ANGMAX]);
        let half_b = row[BR_B] / 2.0;
        branches.push(Branch {
            id: branches.len(),
            from,
            to,
            r: row[BR_R],
            x,
            b_charge_send: half_b,
            b_charge_recv: half_b,
            tap,
            shift: row[SHIFT].to_radians(),
            rate: (row[RATE_A] > 0.0).then(|| row[RATE_A] / base),
            angle_min,
            angle_max,
        });
    }
    for br in &branches {
        buses[br.from].b_shunt += br.b_charge_send / (br.tap * br.tap);
        buses[br.to].b_shunt += br.b_charge_recv;
    }

    let mut generators = Vec::new();
    for (row, cost) in raw.gen_rows.iter().zip(&raw.gencost_rows) {
        if row[GEN_STATUS] <= 0.0 {
            continue;
        }
        let Some(&bus) = position.get(&(row[GEN_BUS] as i64)) else {
            continue;
        };
        let (c2, c1, c0) = polynomial_cost(cost);
        generators.push(Generator {
            bus,
            p_min: row[PMIN] / base,
            p_max: row[PMAX] / base,
            q_min: row[QMIN] / base,
            q_max: row[QMAX] / base,
            cost_a: c2 * cost_scale * cost_scale,
            cost_b: c1 * cost_scale,
            cost_c: c0,
        });
    }

    let net = Network { name: raw.name.clone(), base_mva: base, buses, branches, generators };
    net.validate()?;
    Ok(net)
}

/// `(c2, c1, c0)` from a polynomial gencost row, padding missing high orders with 0.
fn polynomial_cost(row: &[f64]) -> (f64, f64, f64) {
    let n = row[3] as usize;
    let coeffs = &row[4..4 + n];
    let at = |power: usize| if power < n { coeffs[n - 1 - power] } else { 0.0 };
    (at(2), at(1), at(0))
}

/// File angle bounds in degrees, falling back per side to ±60° when the value
/// is absent (±360 or both zero) or outside (-90°, 90°).
fn line_angle_bounds(angmin: f64, angmax: f64) -> (f64, f64) {
    if angmin == 0.0 && angmax == 0.0 {
        return (-DEFAULT_LINE_ANGLE, DEFAULT_LINE_ANGLE);
    }
    let lo = if angmin > -90.0 && angmin < 90.0 { angmin.to_radians() } else { -DEFAULT_LINE_ANGLE };
    let hi = if angmax > -90.0 && angmax < 90.0 { angmax.to_radians() } else { DEFAULT_LINE_ANGLE };
    if lo <= hi {
        (lo, hi)
    } else {
        (-DEFAULT_LINE_ANGLE, DEFAULT_LINE_ANGLE)
    }
}

/// Multiply every nodal load by `factor`, leaving the input untouched.
pub fn scale_loads(net: &Network, factor: f64) -> Result<Network, IngestError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(IngestError::NonPositiveFactor(factor));
    }
    let mut scaled = net.clone();
    for bus in &mut scaled.buses {
        bus.p_load *= factor;
        bus.q_load *= factor;
    }
    Ok(scaled)
}
