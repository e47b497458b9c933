//! Kinetic energy, vorticity recovery, time averages and the gyre counter.

use crate::error::Result;
use crate::field::{BoundaryCondition, CellField};
use crate::mesh::StructuredMesh;
use crate::ops::gauss_gradient;

/// `E = 1/2 sum_i |grad psi|_i^2 |cell|` with the same Gauss gradient the
/// solver uses (midpoint quadrature).
pub fn kinetic_energy(mesh: &StructuredMesh, psi: &CellField) -> f64 {
    let sum: f64 = gauss_gradient(mesh, psi)
        .iter()
        .map(|[gx, gy]| gx * gx + gy * gy)
        .sum();
    0.5 * sum * mesh.cell_volume()
}

/// Relative vorticity `omega = (q - y) / Ro`.
pub fn recover_vorticity(mesh: &StructuredMesh, q: &CellField, ro: f64) -> Result<CellField> {
    if !(ro > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "Rossby number must be positive, got {ro}"
        )));
    }
    let values = q
        .values()
        .iter()
        .zip(mesh.centroids())
        .map(|(q, [_, y])| (q - y) / ro)
        .collect();
    let bc = BoundaryCondition::homogeneous(mesh);
    CellField::new(mesh, values, bc)
}

/// Energy samples plus running means of psi, q and (optionally) the indicator
/// over the averaging window `[avg_start, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    energy: Vec<(f64, f64)>,
    avg_start: f64,
    t_end: f64,
    samples: usize,
    psi_sum: Vec<f64>,
    q_sum: Vec<f64>,
    a_sum: Option<Vec<f64>>,
    energy_sum: f64,
}

impl DiagnosticsRecord {
    pub fn new(n_cells: usize, avg_start: f64, t_end: f64, track_indicator: bool) -> Self {
        DiagnosticsRecord {
            energy: Vec::new(),
            avg_start,
            t_end,
            samples: 0,
            psi_sum: vec![0.0; n_cells],
            q_sum: vec![0.0; n_cells],
            a_sum: track_indicator.then(|| vec![0.0; n_cells]),
            energy_sum: 0.0,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.avg_start, self.t_end)
    }

    /// Appends an energy sample; times must increase strictly.
    pub fn record_energy(&mut self, t: f64, energy: f64) {
        if let Some(&(last, _)) = self.energy.last() {
            assert!(t > last, "energy samples must be strictly increasing in time");
        }
        self.energy.push((t, energy));
    }

    pub fn energy_series(&self) -> &[(f64, f64)] {
        &self.energy
    }

    pub fn in_window(&self, t: f64) -> bool {
        let eps = 1e-9 * self.avg_start.abs().max(self.t_end.abs()).max(1.0);
        t >= self.avg_start - eps && t <= self.t_end + eps
    }

    /// Adds one sample to the running means if `t` lies in the window.
    pub fn update_means(
        &mut self,
        t: f64,
        psi: &CellField,
        q: &CellField,
        a: Option<&CellField>,
        energy: f64,
    ) -> bool {
        if !self.in_window(t) {
            return false;
        }
        self.accumulate(psi, q, a, energy);
        true
    }

    /// Unconditional running-mean update.
    pub fn accumulate(&mut self, psi: &CellField, q: &CellField, a: Option<&CellField>, energy: f64) {
        add_into(&mut self.psi_sum, psi.values());
        add_into(&mut self.q_sum, q.values());
        if let (Some(sum), Some(a)) = (self.a_sum.as_mut(), a) {
            add_into(sum, a.values());
        }
        self.energy_sum += energy;
        self.samples += 1;
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    fn mean_of(&self, sum: &[f64]) -> Vec<f64> {
        if self.samples == 0 {
            return vec![0.0; sum.len()];
        }
        let k = self.samples as f64;
        sum.iter().map(|s| s / k).collect()
    }

    pub fn psi_mean(&self) -> Vec<f64> {
        self.mean_of(&self.psi_sum)
    }

    pub fn q_mean(&self) -> Vec<f64> {
        self.mean_of(&self.q_sum)
    }

    pub fn a_mean(&self) -> Option<Vec<f64>> {
        self.a_sum.as_ref().map(|s| self.mean_of(s))
    }

    /// Mean kinetic energy over every step in the window.
    pub fn energy_mean(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.energy_sum / self.samples as f64
        }
    }
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

/// Number of sign-alternating lobes of `psi_mean` along the cell column
/// closest to the vertical midline (lower index on a tie). Values within 1%
/// of `max |psi_mean|` count as neither sign.
pub fn gyre_count(mesh: &StructuredMesh, psi_mean: &[f64]) -> usize {
    assert_eq!(psi_mean.len(), mesh.n_cells());
    let max = psi_mean.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    let threshold = 0.01 * max;
    let column = (mesh.nx() - 1) / 2;
    let mut runs = 0;
    let mut last_sign = 0;
    for j in 0..mesh.ny() {
        let v = psi_mean[mesh.cell_index(column, j)];
        let sign = if v > threshold {
            1
        } else if v < -threshold {
            -1
        } else {
            0
        };
        if sign != 0 && sign != last_sign {
            runs += 1;
            last_sign = sign;
        }
    }
    runs
}
