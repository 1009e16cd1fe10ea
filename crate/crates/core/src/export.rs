//! Text exports: CSV tables, JSON documents, and the preference map.
//!
//! Every CSV starts with a `# params {...}` line and every JSON document has a
//! `params` field, both of which parse back with [`Params::from_json`].

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::dynamics::{BasinReport, Semantics, StateLabel, TransitionGraph, Trajectory};
use crate::equilibria::{enumerate_nash, EquilibriumReport, NashKind};
use crate::model::{preference_profile, Corner, Grid, Group, Platform, State};
use crate::params::Params;
use crate::statics::SweepReport;
use crate::stochastic::Distribution;

pub const PARAMS_PREFIX: &str = "# params ";

pub fn params_header(params: &Params) -> String {
    format!("{PARAMS_PREFIX}{}\n", params.to_json())
}

/// Recovers the parameters from the first line of a CSV export.
pub fn read_params_header(text: &str) -> Option<Params> {
    let line = text.lines().next()?;
    Params::from_json(line.strip_prefix(PARAMS_PREFIX)?).ok()
}

/// `{"params": ..., key: value}`, pretty-printed with a trailing newline.
pub fn json_document<T: Serialize>(params: &Params, key: &str, value: &T) -> String {
    let mut doc = Map::new();
    doc.insert("params".into(), serde_json::to_value(params).expect("params serialize"));
    doc.insert(key.into(), serde_json::to_value(value).expect("report serializes"));
    let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    out.push('\n');
    out
}

fn kind_code(kind: NashKind) -> &'static str {
    match kind {
        NashKind::StrictNash => "strict",
        NashKind::WeakNash => "weak",
        NashKind::NotNash => "none",
    }
}

pub fn nash_csv(report: &EquilibriumReport, params: &Params) -> String {
    let mut out = params_header(params);
    out.push_str("state_n_am,state_n_bm,kind\n");
    for n in &report.nash_states {
        let _ = writeln!(out, "{},{},{}", n.state.n_am, n.state.n_bm, kind_code(n.kind));
    }
    out
}

pub fn classify_csv(labels: &[(State, StateLabel)], params: &Params, semantics: Semantics) -> String {
    let mut out = params_header(params);
    out.push_str("n_am,n_bm,label,semantics\n");
    for (s, label) in labels {
        let _ = writeln!(out, "{},{},{},{}", s.n_am, s.n_bm, label.code(params), semantics);
    }
    out
}

pub fn basin_csv(report: &BasinReport, params: &Params) -> String {
    let mut out = params_header(params);
    out.push_str("n_am,n_bm,tipping,semantics\n");
    for s in &report.basin {
        let _ = writeln!(out, "{},{},{},{}", s.n_am, s.n_bm, report.tipping.contains(s), report.semantics);
    }
    out
}

pub fn tipping_csv(report: &BasinReport, params: &Params) -> String {
    let mut out = params_header(params);
    out.push_str("n_am,n_bm,semantics\n");
    for s in &report.tipping {
        let _ = writeln!(out, "{},{},{}", s.n_am, s.n_bm, report.semantics);
    }
    out
}

/// Mover column: `-` at `t = 0`, `A:l` for a reviser who stayed, `A:l>m` for one who moved.
pub fn trajectory_csv(trajectory: &Trajectory, params: &Params) -> String {
    let mut out = params_header(params);
    out.push_str("t,n_am,n_bm,mover\n");
    for step in &trajectory.steps {
        let mover = match step.reviser {
            None => "-".to_string(),
            Some(m) if step.moved => format!("{m}>{}", m.from.other()),
            Some(m) => m.to_string(),
        };
        let _ = writeln!(out, "{},{},{},{}", step.t, step.state.n_am, step.state.n_bm, mover);
    }
    out
}

pub fn distribution_csv(dists: &[Distribution], params: &Params) -> String {
    let mut out = params_header(params);
    out.push_str("n_am,n_bm,probability,beta,method\n");
    for d in dists {
        for (s, p) in d.iter() {
            let _ = writeln!(out, "{},{},{:e},{},{}", s.n_am, s.n_bm, p, d.beta, d.method);
        }
    }
    out
}

pub fn corner_codes(corners: &[Corner]) -> String {
    corners.iter().map(|c| c.code()).collect::<Vec<_>>().join(";")
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = params_header(&report.base);
    out.push_str("k,n_a,n_b,stable_states,rho_mm,rho_ml,rho_lm,rho_ll\n");
    for r in &report.rows {
        let p = &r.potentials;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.n_a,
            r.n_b,
            corner_codes(&r.stable_states),
            p.mm,
            p.ml,
            p.lm,
            p.ll
        );
    }
    out
}

/// One cell of the preference map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// A prefers `ℓ`.
    Blue,
    /// B prefers `ℓ`.
    Red,
    /// Both groups prefer `ℓ`.
    Purple,
    /// Neither group strictly prefers `ℓ`.
    Hollow,
    /// Basin of the integrated state.
    Magenta,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Blue => 'B',
            Cell::Red => 'R',
            Cell::Purple => 'P',
            Cell::Hollow => '.',
            Cell::Magenta => 'M',
        }
    }
}

/// Cell colours and equilibrium markers for every state.
#[derive(Debug, Clone)]
pub struct PreferenceMap {
    pub grid: Grid,
    pub semantics: Semantics,
    pub cells: Vec<Cell>,
    pub equilibria: Vec<bool>,
}

impl PreferenceMap {
    pub fn build(params: &Params, semantics: Semantics) -> Self {
        let grid = Grid::of(params);
        let graph = TransitionGraph::build(params, semantics);
        let integrated = Corner::Ll.state(params);
        let magenta = if graph.is_absorbing(integrated) {
            graph.basin(integrated).map(|r| r.basin).unwrap_or_default()
        } else {
            Vec::new()
        };
        let cells = grid
            .states()
            .map(|s| {
                if magenta.contains(&s) {
                    return Cell::Magenta;
                }
                let pref = preference_profile(s, params);
                let a_l = pref.of(Group::A).strictly_prefers(Platform::L);
                let b_l = pref.of(Group::B).strictly_prefers(Platform::L);
                match (a_l, b_l) {
                    (true, true) => Cell::Purple,
                    (true, false) => Cell::Blue,
                    (false, true) => Cell::Red,
                    (false, false) => Cell::Hollow,
                }
            })
            .collect();
        let nash = enumerate_nash(params);
        let equilibria = grid.states().map(|s| nash.contains(s)).collect();
        Self { grid, semantics, cells, equilibria }
    }

    pub fn cell(&self, state: State) -> Cell {
        self.cells[self.grid.index(state)]
    }

    pub fn is_equilibrium(&self, state: State) -> bool {
        self.equilibria[self.grid.index(state)]
    }
}

/// Rows from `n_Bm = N^B` down to 0, columns `n_Am = 0..=N^A`; two characters
/// per cell, the second being `*` at an equilibrium.
pub fn ascii_map(map: &PreferenceMap, params: &Params) -> String {
    let mut out = params_header(params);
    for b in (0..=map.grid.n_b).rev() {
        for a in 0..=map.grid.n_a {
            let s = State::new(a, b);
            out.push(map.cell(s).symbol());
            out.push(if map.is_equilibrium(s) { '*' } else { ' ' });
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "# B: A prefers l, R: B prefers l, P: both prefer l, .: both prefer m, M: basin of ll ({}), *: equilibrium",
        map.semantics
    );
    out
}

const CELL: u32 = 24;
const MARGIN: u32 = 32;

pub fn svg_map(map: &PreferenceMap, params: &Params) -> String {
    let (cols, rows) = (map.grid.n_a + 1, map.grid.n_b + 1);
    let width = 2 * MARGIN + cols * CELL;
    let height = 2 * MARGIN + rows * CELL;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, "<!-- params {} -->", params.to_json());
    let _ = writeln!(out, r##"<rect width="{width}" height="{height}" fill="#FFFFFF"/>"##);
    for b in 0..rows {
        for a in 0..cols {
            let s = State::new(a, b);
            let cx = MARGIN + a * CELL + CELL / 2;
            let cy = MARGIN + (rows - 1 - b) * CELL + CELL / 2;
            let r = if map.is_equilibrium(s) { CELL / 2 - 1 } else { CELL / 4 };
            let (fill, stroke) = match map.cell(s) {
                Cell::Blue => ("#0000FF", "#0000FF"),
                Cell::Red => ("#FF0000", "#FF0000"),
                Cell::Purple => ("#0000FF", "#FF0000"),
                Cell::Magenta => ("#FF00FF", "#FF00FF"),
                Cell::Hollow => ("#FFFFFF", "#000000"),
            };
            let _ = writeln!(
                out,
                r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="{fill}" stroke="{stroke}" stroke-width="2"><title>({a}, {b})</title></circle>"#
            );
        }
    }
    let base = MARGIN + rows * CELL;
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">n_Am</text>"#,
        MARGIN + cols * CELL / 2,
        base + 20
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">n_Bm</text>"#,
        MARGIN + rows * CELL / 2,
        MARGIN + rows * CELL / 2
    );
    out.push_str("</svg>\n");
    out
}
