use std::fmt::Write as _;

use super::{
    check_separable, resistance, stochastic_potentials, stochastically_stable_states, verify_resistance_identity,
    ConstantRevision, ResistanceIdentityReport, TransitionResistance,
};
use crate::error::Result;
use crate::game::{construct_potential, TableGame};
use crate::loglinear::{validate_constraints, ConstrainedActionMap};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    pub epsilons: Vec<f64>,
    pub mass_threshold: f64,
    /// Constant wake-up rate shared by all players.
    pub revision_rate: f64,
    pub state_cap: usize,
    /// Stochastic potentials are computed only up to this many states.
    pub tree_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-1, 1e-2, 1e-3],
            mass_threshold: 0.05,
            revision_rate: 0.5,
            state_cap: 20_000,
            tree_cap: 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub labels: Vec<String>,
    pub potential: Option<Vec<f64>>,
    pub resistances: Vec<TransitionResistance>,
    pub epsilons: Vec<f64>,
    pub distributions: Vec<Vec<f64>>,
    pub stable: Vec<usize>,
    pub resistance_identity: std::result::Result<ResistanceIdentityReport, String>,
    pub stochastic_potential: Option<Vec<f64>>,
    pub constraints_hold: bool,
}

/// Runs every oracle on a tabulated game.
pub fn analyze(game: &TableGame, constraints: &ConstrainedActionMap, opts: &OracleOptions) -> Result<OracleReport> {
    let space = game.space().clone();
    let labels = space
        .iter()
        .map(|j| {
            let parts: Vec<&str> = (0..j.len()).map(|i| game.action_labels(i)[j[i]].as_str()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let rates = ConstantRevision::uniform(space.num_players(), opts.revision_rate);
    let stable =
        stochastically_stable_states(game, &rates, constraints, &opts.epsilons, opts.mass_threshold, opts.state_cap)?;
    let mut resistances = Vec::new();
    for s in space.iter() {
        for t in space.iter() {
            if s != t && constraints.feasible(&s, &t) {
                resistances.push(resistance(game, constraints, &s, &t)?);
            }
        }
    }
    let resistance_identity = match check_separable(game) {
        Ok(()) => verify_resistance_identity(game, constraints, 1e-12).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    let stochastic_potential =
        if space.size() <= opts.tree_cap { stochastic_potentials(game, constraints, opts.tree_cap).ok() } else { None };
    Ok(OracleReport {
        labels,
        potential: construct_potential(game, 1e-9),
        resistances,
        epsilons: stable.epsilons,
        distributions: stable.distributions,
        stable: stable.stable,
        resistance_identity,
        stochastic_potential,
        constraints_hold: validate_constraints(constraints).holds(),
    })
}

impl OracleReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "states: {}", self.labels.len());
        let _ = writeln!(s, "constraints reachable and reversible: {}", self.constraints_hold);
        match &self.potential {
            Some(_) => {
                let _ = writeln!(s, "potential game: yes");
            }
            None => {
                let _ = writeln!(s, "potential game: no (path integration is inconsistent)");
            }
        }
        let stable: Vec<&str> = self.stable.iter().map(|&k| self.labels[k].as_str()).collect();
        let _ = writeln!(s, "stochastically stable: {}", stable.join(" "));
        let _ = writeln!(s);
        let mut header = String::from("state");
        for e in &self.epsilons {
            let _ = write!(header, "\tpi(eps={e:e})");
        }
        header.push_str("\tphi\tstoch_potential");
        let _ = writeln!(s, "{header}");
        for (k, label) in self.labels.iter().enumerate() {
            let _ = write!(s, "{label}");
            for d in &self.distributions {
                let _ = write!(s, "\t{:.6e}", d[k]);
            }
            match &self.potential {
                Some(p) => {
                    let _ = write!(s, "\t{}", p[k]);
                }
                None => s.push_str("\t-"),
            }
            match &self.stochastic_potential {
                Some(p) => {
                    let _ = write!(s, "\t{}", p[k]);
                }
                None => s.push_str("\t-"),
            }
            s.push('\n');
        }
        let _ = writeln!(s);
        match &self.resistance_identity {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "resistance/potential identity: {} transitions, max residual {:e}, {} violations",
                    r.transitions_checked,
                    r.max_residual,
                    r.violations.len()
                );
            }
            Err(e) => {
                let _ = writeln!(s, "resistance/potential identity: not checked ({e})");
            }
        }
        let _ = writeln!(s, "note: the non-decreasing-potential hypothesis for non-separable games is not tested");
        let _ = writeln!(s);
        let _ = writeln!(s, "feasible transitions: {}", self.resistances.len());
        for r in &self.resistances {
            let _ = writeln!(s, "{} -> {}\tR = {}", r.source, r.target, r.resistance);
        }
        s
    }

    /// `state,label,phi,stochastic_potential,pi_<eps>...`
    pub fn states_csv(&self) -> String {
        let mut s = String::from("state,label,phi,stochastic_potential");
        for e in &self.epsilons {
            let _ = write!(s, ",pi_{e:e}");
        }
        s.push('\n');
        for (k, label) in self.labels.iter().enumerate() {
            let phi = self.potential.as_ref().map(|p| p[k].to_string()).unwrap_or_default();
            let sp = self.stochastic_potential.as_ref().map(|p| p[k].to_string()).unwrap_or_default();
            let _ = write!(s, "{k},\"{label}\",{phi},{sp}");
            for d in &self.distributions {
                let _ = write!(s, ",{}", d[k]);
            }
            s.push('\n');
        }
        s
    }

    /// `source,target,deviators,resistance`
    pub fn transitions_csv(&self) -> String {
        let mut s = String::from("source,target,deviators,resistance\n");
        for r in &self.resistances {
            let dev: Vec<String> = r.deviators.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(s, "\"{}\",\"{}\",{},{}", r.source, r.target, dev.join(";"), r.resistance);
        }
        s
    }

    pub fn stable_labels(&self) -> Vec<&str> {
        self.stable.iter().map(|&k| self.labels[k].as_str()).collect()
    }
}
