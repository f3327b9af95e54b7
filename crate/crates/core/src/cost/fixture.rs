use serde::Deserialize;

use super::CostRow;

const TABLE: &str = include_str!("../../data/exhibition_costs.csv");

/// A row of the exhibition print-cost table. `length_m` came from
/// the slicer and is input data here; `cost_eur` is the printed cost.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExhibitionCostRow {
    pub label: String,
    pub name: String,
    pub author: String,
    pub size_mm: String,
    pub length_m: f64,
    pub cost_eur: f64,
}

impl ExhibitionCostRow {
    pub fn to_cost_row(&self) -> CostRow {
        CostRow {
            name: self.name.clone(),
            author: self.author.clone(),
            size_mm: self.size_mm.clone(),
            length_m: self.length_m,
        }
    }
}

pub fn exhibition_cost_rows() -> Vec<ExhibitionCostRow> {
    csv::Reader::from_reader(TABLE.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled cost table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighteen_rows() {
        let rows = exhibition_cost_rows();
        assert_eq!(rows.len(), 18);
        assert_eq!(rows[1].label, "1(a)");
        assert_eq!(rows[10].author, "Geometriewerstatt (Univ. of Tübingen)");
    }
}
