//! Built-in scenarios and the plots drawn from engine tables.

use crate::config::{ConfigError, Engine, Scenario};
use crate::engines::SWEEP_COLUMNS;
use crate::svg::{LinePlot, Series};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub fn source(self) -> &'static str {
        match self {
            Figure::Fig1 => include_str!("../scenarios/fig1.toml"),
            Figure::Fig2 => include_str!("../scenarios/fig2.toml"),
            Figure::Fig3 => include_str!("../scenarios/fig3.toml"),
        }
    }
}

pub fn scenario(fig: Figure) -> Result<Scenario, ConfigError> {
    Scenario::from_toml_str(fig.source())
}

fn series(table: &Table, x: &str, y: &str, label: &str) -> Option<Series> {
    let xs = table.numbers(x)?;
    let ys = table.numbers(y)?;
    Some(Series {
        label: label.to_string(),
        points: xs.into_iter().zip(ys).collect(),
    })
}

/// Plots for one engine table, each with a file-name suffix.
pub fn plots(scenario: &Scenario, engine: Engine, table: &Table) -> Vec<(String, LinePlot)> {
    let title = format!("{} ({})", scenario.name, engine.label());
    match scenario.sweep {
        None => {
            let x = "t[1/nu0]";
            let s: Vec<Series> = [("m_driven", "driven"), ("m_undriven", "undriven")]
                .iter()
                .filter_map(|(c, l)| series(table, x, c, l))
                .collect();
            vec![(
                String::new(),
                LinePlot {
                    title,
                    x_label: "t ν0".into(),
                    y_label: "⟨m⟩".into(),
                    series: s,
                },
            )]
        }
        Some(sweep) => {
            let x = sweep.parameter.column();
            let labels = ["ε > 0", "ε < 0", "undriven"];
            let m: Vec<Series> = SWEEP_COLUMNS[..3]
                .iter()
                .zip(labels)
                .filter_map(|(c, l)| series(table, x, c, l))
                .collect();
            let r: Vec<Series> = SWEEP_COLUMNS[3..]
                .iter()
                .zip(labels)
                .filter_map(|(c, l)| series(table, x, c, l))
                .collect();
            vec![
                (
                    String::new(),
                    LinePlot {
                        title: title.clone(),
                        x_label: x.into(),
                        y_label: "period-averaged ⟨m⟩".into(),
                        series: m,
                    },
                ),
                (
                    "_ratio".into(),
                    LinePlot {
                        title,
                        x_label: x.into(),
                        y_label: "⟨m̄⟩ driven / undriven".into(),
                        series: r,
                    },
                ),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_scenarios_parse() {
        let f1 = scenario(Figure::Fig1).unwrap();
        assert!(f1.sweep.is_none());
        assert!((f1.delta + 0.9469).abs() < 1e-15);
        let f2 = scenario(Figure::Fig2).unwrap();
        let sw = f2.sweep.unwrap();
        assert_eq!((sw.min, sw.max, sw.count), (-1.2, -0.8, 81));
        assert_eq!(scenario(Figure::Fig3).unwrap().name, "fig3");
    }
}
